#pragma once

// Request sequences, next-occurrence times, predictions and the loss
// metrics derived from them.
//
// Time is 1-based throughout the public API: a trace of length T has
// requests at t = 1..T and a page that is never requested again has next
// occurrence T + 1. Containers are stored 0-based, so `nu[t - 1]` holds
// the next occurrence of the request made at time t.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cachesim {

using PageId = std::uint32_t;
using Time = std::uint32_t;

class TraceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The request sequence. Page tokens are interned into dense ids in order of
/// first appearance; ids are stable for the lifetime of the trace.
class RequestTrace {
public:
    RequestTrace() = default;

    static RequestTrace from_tokens(std::span<const std::string> tokens);

    void push_back(std::string_view token);

    Time length() const { return static_cast<Time>(requests_.size()); }
    bool empty() const { return requests_.empty(); }

    /// Page requested at time t (1-based).
    PageId at(Time t) const { return requests_.at(t - 1); }

    std::span<const PageId> requests() const { return requests_; }
    std::size_t num_pages() const { return tokens_.size(); }

    const std::string& token(PageId id) const { return tokens_.at(id); }
    std::optional<PageId> find(std::string_view token) const;

    bool operator==(const RequestTrace&) const = default;

private:
    std::vector<PageId> requests_;
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, PageId> ids_;
};

/// nu(t) = min{s > t : sigma(s) = sigma(t)}, or T + 1.
class NextOccurrence {
public:
    NextOccurrence() = default;
    explicit NextOccurrence(std::vector<Time> values) : nu_(std::move(values)) {}

    Time operator()(Time t) const { return nu_[t - 1]; }
    Time at(Time t) const { return nu_.at(t - 1); }
    Time horizon() const { return static_cast<Time>(nu_.size()) + 1; }
    std::size_t size() const { return nu_.size(); }
    std::span<const Time> values() const { return nu_; }

    bool operator==(const NextOccurrence&) const = default;

private:
    std::vector<Time> nu_;
};

/// Predicted next-request times omega(t), one per request.
class PredictionTrace {
public:
    PredictionTrace() = default;
    /// Throws TraceError on a non-finite entry.
    explicit PredictionTrace(std::vector<double> values);

    double operator()(Time t) const { return omega_[t - 1]; }
    std::size_t size() const { return omega_.size(); }
    std::span<const double> values() const { return omega_; }

    bool operator==(const PredictionTrace&) const = default;

private:
    std::vector<double> omega_;
};

struct LossSummary {
    double eta_total = 0.0;
    std::vector<double> eta_plus;   // max(omega - nu, 0)
    std::vector<double> eta_minus;  // max(nu - omega, 0)
    std::uint64_t inversions_total = 0;
};

struct NoiseModel {
    enum class Kind { Exact, AdditiveUniform, Lognormal, InversionSwaps };

    Kind kind = Kind::Exact;
    std::int64_t width = 0;   // L for additive-uniform
    double sigma = 0.0;       // s for multiplicative-lognormal
    std::uint64_t swaps = 0;  // count for inversion-swaps
    std::uint64_t seed = 0;

    static NoiseModel exact() { return {}; }
    static NoiseModel additive_uniform(std::int64_t width, std::uint64_t seed = 0);
    static NoiseModel lognormal(double sigma, std::uint64_t seed = 0);
    static NoiseModel inversion_swaps(std::uint64_t count, std::uint64_t seed = 0);

    /// Parses "exact", "additive-uniform(L)", "lognormal(s)" (also
    /// "multiplicative-lognormal(s)") and "inversion-swaps(n)".
    static NoiseModel parse(std::string_view text);
    std::string to_string() const;
};

NextOccurrence compute_next_occurrence(const RequestTrace& trace);

PredictionTrace generate_predictions(const RequestTrace& trace, const NextOccurrence& nu,
                                     const NoiseModel& model);

/// Throws TraceError when the lengths differ.
LossSummary compute_losses(const NextOccurrence& nu, const PredictionTrace& omega);

/// Counts ordered pairs (a, b) with nu(a) > nu(b) and omega(a) <= omega(b).
std::uint64_t count_inversions(std::span<const Time> nu, std::span<const double> omega);

/// A trace loaded from the text format: one request per line, either
/// `token` or `token,prediction`. `#` comment lines and blank lines are
/// skipped.
struct TraceFile {
    RequestTrace trace;
    std::optional<PredictionTrace> predictions;
};

TraceFile parse_trace(std::istream& in, std::string_view source_name = "<stream>");
TraceFile read_trace_file(const std::string& path);
void write_trace(std::ostream& out, const RequestTrace& trace,
                 const PredictionTrace* predictions = nullptr);

}  // namespace cachesim
