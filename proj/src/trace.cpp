#include "cachesim/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "cachesim/util.hpp"

namespace cachesim {

RequestTrace RequestTrace::from_tokens(std::span<const std::string> tokens) {
    RequestTrace trace;
    for (const auto& token : tokens) trace.push_back(token);
    return trace;
}

void RequestTrace::push_back(std::string_view token) {
    std::string key(token);
    auto [it, inserted] = ids_.try_emplace(key, static_cast<PageId>(tokens_.size()));
    if (inserted) tokens_.push_back(std::move(key));
    requests_.push_back(it->second);
}

std::optional<PageId> RequestTrace::find(std::string_view token) const {
    auto it = ids_.find(std::string(token));
    if (it == ids_.end()) return std::nullopt;
    return it->second;
}

PredictionTrace::PredictionTrace(std::vector<double> values) : omega_(std::move(values)) {
    for (std::size_t i = 0; i < omega_.size(); ++i) {
        if (!std::isfinite(omega_[i])) {
            throw TraceError("prediction at t=" + std::to_string(i + 1) + " is not finite");
        }
    }
}

NoiseModel NoiseModel::additive_uniform(std::int64_t width, std::uint64_t seed) {
    NoiseModel m;
    m.kind = Kind::AdditiveUniform;
    m.width = width;
    m.seed = seed;
    return m;
}

NoiseModel NoiseModel::lognormal(double sigma, std::uint64_t seed) {
    NoiseModel m;
    m.kind = Kind::Lognormal;
    m.sigma = sigma;
    m.seed = seed;
    return m;
}

NoiseModel NoiseModel::inversion_swaps(std::uint64_t count, std::uint64_t seed) {
    NoiseModel m;
    m.kind = Kind::InversionSwaps;
    m.swaps = count;
    m.seed = seed;
    return m;
}

namespace {

NoiseModel parse_noise(std::string_view text) {
    const auto call = parse_call(text);
    auto expect_one = [&] {
        if (call.args.size() != 1) {
            throw TraceError("noise model '" + std::string(text) + "' takes exactly one argument");
        }
        return call.args.front();
    };
    if (call.name == "exact" && call.args.empty()) return NoiseModel::exact();
    if (call.name == "additive-uniform") {
        return NoiseModel::additive_uniform(parse_int<std::int64_t>(expect_one(), "L"));
    }
    if (call.name == "lognormal" || call.name == "multiplicative-lognormal") {
        return NoiseModel::lognormal(parse_double(expect_one(), "s"));
    }
    if (call.name == "inversion-swaps") {
        return NoiseModel::inversion_swaps(parse_int<std::uint64_t>(expect_one(), "count"));
    }
    throw TraceError("unknown noise model '" + std::string(text) + "'");
}

}  // namespace

NoiseModel NoiseModel::parse(std::string_view text) {
    try {
        return parse_noise(text);
    } catch (const std::invalid_argument& e) {
        throw TraceError("noise model '" + std::string(text) + "': " + e.what());
    }
}

std::string NoiseModel::to_string() const {
    switch (kind) {
        case Kind::Exact: return "exact";
        case Kind::AdditiveUniform: return "additive-uniform(" + std::to_string(width) + ")";
        case Kind::Lognormal: return "lognormal(" + format_double(sigma) + ")";
        case Kind::InversionSwaps: return "inversion-swaps(" + std::to_string(swaps) + ")";
    }
    return "?";
}

NextOccurrence compute_next_occurrence(const RequestTrace& trace) {
    const Time horizon = trace.length() + 1;
    std::vector<Time> nu(trace.length());
    std::vector<Time> upcoming(trace.num_pages(), horizon);
    for (Time t = trace.length(); t >= 1; --t) {
        const PageId page = trace.at(t);
        nu[t - 1] = upcoming[page];
        upcoming[page] = t;
    }
    return NextOccurrence(std::move(nu));
}

PredictionTrace generate_predictions(const RequestTrace& trace, const NextOccurrence& nu,
                                     const NoiseModel& model) {
    const std::size_t n = nu.size();
    if (trace.length() != n) throw TraceError("trace and next-occurrence lengths differ");

    std::vector<double> omega(n);
    for (std::size_t i = 0; i < n; ++i) omega[i] = static_cast<double>(nu.values()[i]);

    std::mt19937_64 rng(model.seed);
    switch (model.kind) {
        case NoiseModel::Kind::Exact:
            break;
        case NoiseModel::Kind::AdditiveUniform: {
            if (model.width < 0) throw TraceError("additive-uniform width L must be non-negative");
            std::uniform_int_distribution<std::int64_t> offset(-model.width, model.width);
            for (auto& w : omega) w += static_cast<double>(offset(rng));
            break;
        }
        case NoiseModel::Kind::Lognormal: {
            if (!(model.sigma > 0.0) || !std::isfinite(model.sigma)) {
                throw TraceError("lognormal sigma must be positive");
            }
            std::lognormal_distribution<double> factor(0.0, model.sigma);
            for (std::size_t i = 0; i < n; ++i) {
                const double t = static_cast<double>(i + 1);
                omega[i] = t + (omega[i] - t) * factor(rng);
            }
            break;
        }
        case NoiseModel::Kind::InversionSwaps: {
            if (model.swaps > n / 2) throw TraceError("inversion-swaps count exceeds T/2");
            std::vector<std::size_t> order(n);
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::shuffle(order.begin(), order.end(), rng);
            for (std::uint64_t p = 0; p < model.swaps; ++p) {
                std::swap(omega[order[2 * p]], omega[order[2 * p + 1]]);
            }
            break;
        }
    }
    for (auto& w : omega) {
        if (!std::isfinite(w)) w = static_cast<double>(nu.horizon());
        w = std::max(w, 0.0);
    }
    return PredictionTrace(std::move(omega));
}

namespace {

// Fenwick tree over compressed prediction ranks.
class Fenwick {
public:
    explicit Fenwick(std::size_t n) : tree_(n + 1, 0) {}
    void add(std::size_t i) {
        for (++i; i < tree_.size(); i += i & (~i + 1)) ++tree_[i];
    }
    std::uint64_t prefix(std::size_t i) const {  // count of ranks < i
        std::uint64_t s = 0;
        for (; i > 0; i -= i & (~i + 1)) s += tree_[i];
        return s;
    }

private:
    std::vector<std::uint64_t> tree_;
};

}  // namespace

std::uint64_t count_inversions(std::span<const Time> nu, std::span<const double> omega) {
    const std::size_t n = nu.size();
    if (omega.size() != n) throw TraceError("inversion count: length mismatch");

    std::vector<double> ranks(omega.begin(), omega.end());
    std::sort(ranks.begin(), ranks.end());
    ranks.erase(std::unique(ranks.begin(), ranks.end()), ranks.end());
    auto rank_of = [&](double w) {
        return static_cast<std::size_t>(std::lower_bound(ranks.begin(), ranks.end(), w) - ranks.begin());
    };

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return nu[a] < nu[b]; });

    // Walk groups of equal nu in ascending order; everything already in the
    // tree has strictly smaller nu.
    Fenwick inserted(ranks.size());
    std::uint64_t total = 0;
    std::uint64_t seen = 0;
    std::size_t begin = 0;
    while (begin < n) {
        std::size_t end = begin;
        while (end < n && nu[order[end]] == nu[order[begin]]) ++end;
        for (std::size_t g = begin; g < end; ++g) {
            total += seen - inserted.prefix(rank_of(omega[order[g]]));
        }
        for (std::size_t g = begin; g < end; ++g) inserted.add(rank_of(omega[order[g]]));
        seen += end - begin;
        begin = end;
    }
    return total;
}

LossSummary compute_losses(const NextOccurrence& nu, const PredictionTrace& omega) {
    if (nu.size() != omega.size()) {
        throw TraceError("length mismatch: nu has " + std::to_string(nu.size()) +
                         " entries, omega has " + std::to_string(omega.size()));
    }
    LossSummary out;
    out.eta_plus.resize(nu.size());
    out.eta_minus.resize(nu.size());
    for (std::size_t i = 0; i < nu.size(); ++i) {
        const double truth = static_cast<double>(nu.values()[i]);
        const double guess = omega.values()[i];
        out.eta_plus[i] = std::max(guess - truth, 0.0);
        out.eta_minus[i] = std::max(truth - guess, 0.0);
        out.eta_total += out.eta_plus[i] + out.eta_minus[i];
    }
    out.inversions_total = count_inversions(nu.values(), omega.values());
    return out;
}

TraceFile parse_trace(std::istream& in, std::string_view source_name) {
    TraceFile out;
    std::vector<double> predictions;
    std::optional<bool> with_predictions;
    std::string line;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& what) {
        throw TraceError(std::string(source_name) + ":" + std::to_string(line_no) + ": " + what);
    };
    while (std::getline(in, line)) {
        ++line_no;
        auto text = trim(line);
        if (text.empty() || text.front() == '#') continue;
        auto comma = text.find(',');
        std::string_view token = trim(text.substr(0, comma));
        if (token.empty()) fail("empty page token");
        const bool has_prediction = comma != std::string_view::npos;
        if (with_predictions && *with_predictions != has_prediction) {
            fail("mixing lines with and without predictions");
        }
        with_predictions = has_prediction;
        if (has_prediction) {
            auto field = trim(text.substr(comma + 1));
            double value = 0.0;
            auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
            if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(value)) {
                fail("malformed prediction '" + std::string(field) + "'");
            }
            predictions.push_back(value);
        }
        out.trace.push_back(token);
    }
    if (with_predictions.value_or(false)) out.predictions = PredictionTrace(std::move(predictions));
    return out;
}

TraceFile read_trace_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw TraceError("cannot open trace file '" + path + "'");
    return parse_trace(in, path);
}

void write_trace(std::ostream& out, const RequestTrace& trace, const PredictionTrace* predictions) {
    if (predictions && predictions->size() != trace.length()) {
        throw TraceError("prediction count does not match trace length");
    }
    for (Time t = 1; t <= trace.length(); ++t) {
        out << trace.token(trace.at(t));
        if (predictions) out << ',' << format_double((*predictions)(t));
        out << '\n';
    }
}

}  // namespace cachesim
