#include "cachesim/workload.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "cachesim/engine.hpp"
#include "cachesim/util.hpp"

namespace cachesim {

WorkloadSpec WorkloadSpec::parse(std::string_view text, Time length, std::uint64_t seed) {
    const auto call = parse_call(text);
    WorkloadSpec spec;
    spec.length = length;
    spec.seed = seed;
    auto arity = [&](std::size_t lo, std::size_t hi) {
        if (call.args.size() < lo || call.args.size() > hi) {
            throw std::invalid_argument("workload '" + std::string(text) + "' has the wrong number of arguments");
        }
    };
    if (call.name == "uniform") {
        arity(1, 1);
        spec.kind = Kind::Uniform;
        spec.pages = parse_int<std::uint64_t>(call.args[0], "pages");
    } else if (call.name == "zipf") {
        arity(2, 2);
        spec.kind = Kind::Zipf;
        spec.pages = parse_int<std::uint64_t>(call.args[0], "pages");
        spec.exponent = parse_double(call.args[1], "exponent");
    } else if (call.name == "cyclic") {
        arity(1, 1);
        spec.kind = Kind::Cyclic;
        spec.pages = parse_int<std::uint64_t>(call.args[0], "pages");
    } else if (call.name == "det-killer" || call.name == "adversarial-det-killer") {
        arity(1, 2);
        spec.kind = Kind::DetKiller;
        spec.capacity = parse_int<std::uint64_t>(call.args[0], "k");
        spec.pages = spec.capacity + 1;
        if (call.args.size() == 2) spec.target = call.args[1];
    } else if (call.name == "file") {
        arity(1, 1);
        spec.kind = Kind::File;
        spec.path = call.args[0];
    } else {
        throw std::invalid_argument("unknown workload '" + std::string(text) + "'");
    }
    spec.validate();
    return spec;
}

std::string WorkloadSpec::to_string() const {
    switch (kind) {
        case Kind::Uniform: return "uniform(" + std::to_string(pages) + ")";
        case Kind::Zipf: return "zipf(" + std::to_string(pages) + "," + format_double(exponent) + ")";
        case Kind::Cyclic: return "cyclic(" + std::to_string(pages) + ")";
        case Kind::DetKiller: return "det-killer(" + std::to_string(capacity) + "," + target + ")";
        case Kind::File: return "file(" + path + ")";
    }
    return "?";
}

void WorkloadSpec::validate() const {
    switch (kind) {
        case Kind::Zipf:
            if (!(exponent > 0.0) || !std::isfinite(exponent)) throw std::invalid_argument("zipf exponent must be positive");
            [[fallthrough]];
        case Kind::Uniform:
        case Kind::Cyclic:
            if (pages < 1) throw std::invalid_argument("workload needs at least one page");
            break;
        case Kind::DetKiller: {
            if (capacity < 1) throw std::invalid_argument("det-killer needs k >= 1");
            auto policy = make_policy(target);
            if (policy->randomized() || policy->needs_predictions() || policy->needs_future()) {
                throw std::invalid_argument("det-killer target must be a deterministic online policy without predictions");
            }
            break;
        }
        case Kind::File:
            if (path.empty()) throw std::invalid_argument("file workload needs a path");
            break;
    }
}

namespace {

RequestTrace det_killer(const WorkloadSpec& spec) {
    RequestTrace trace;
    const auto warmup = static_cast<Time>(std::min<std::uint64_t>(spec.length, spec.capacity + 1));
    for (Time t = 1; t <= warmup; ++t) trace.push_back(std::to_string(t));
    if (trace.length() < spec.capacity + 1) return trace;

    auto target = make_policy(spec.target);
    Simulator shadow(trace, nullptr, *target, spec.capacity, spec.seed, FutureView{});
    shadow.run_to_end();
    while (trace.length() < spec.length) {
        auto victim = shadow.last_victim();
        if (!victim) throw std::logic_error("det-killer target did not evict on a forced miss");
        trace.push_back(trace.token(*victim));
        shadow.step();
    }
    return trace;
}

}  // namespace

RequestTrace generate(const WorkloadSpec& spec) {
    spec.validate();
    RequestTrace trace;
    std::mt19937_64 rng(spec.seed);
    switch (spec.kind) {
        case WorkloadSpec::Kind::Uniform: {
            std::uniform_int_distribution<std::uint64_t> page(1, spec.pages);
            for (Time t = 0; t < spec.length; ++t) trace.push_back(std::to_string(page(rng)));
            break;
        }
        case WorkloadSpec::Kind::Zipf: {
            std::vector<double> cumulative(spec.pages);
            double total = 0.0;
            for (std::uint64_t r = 1; r <= spec.pages; ++r) {
                total += 1.0 / std::pow(static_cast<double>(r), spec.exponent);
                cumulative[r - 1] = total;
            }
            std::uniform_real_distribution<double> u(0.0, total);
            for (Time t = 0; t < spec.length; ++t) {
                auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u(rng));
                const auto rank = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), spec.pages - 1) + 1;
                trace.push_back(std::to_string(rank));
            }
            break;
        }
        case WorkloadSpec::Kind::Cyclic:
            for (Time t = 0; t < spec.length; ++t) trace.push_back(std::to_string(t % spec.pages + 1));
            break;
        case WorkloadSpec::Kind::DetKiller:
            return det_killer(spec);
        case WorkloadSpec::Kind::File:
            return read_trace_file(spec.path).trace;
    }
    return trace;
}

}  // namespace cachesim
