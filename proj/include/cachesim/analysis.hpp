#pragma once

// Offline certification of finished runs.
//
// build_eviction_graph replays a run next to an optimal (Belady) run and
// maintains a matching X(t) between the two index sets I_A(t) and I_Q(t):
// matched pairs (a, q) always satisfy nu(a) >= nu(q) and the number of
// unmatched Q-side indices is the potential Phi(t). Every time the run evicts
// a page that is worse than some unmatched candidate, an edge
// (candidate, victim) is added to the eviction graph. The replay keeps
//
//     OBJ_Q(t) + Phi(t) <= OBJ_A(t) + |E(t)|
//
// at every prefix, so the finished graph certifies OBJ_Q <= OPT + |E|.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cachesim/engine.hpp"
#include "cachesim/trace.hpp"

namespace cachesim {

class AnalysisError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct GraphEdge {
    Time from;  // better candidate i that stayed in the cache
    Time to;    // evicted index j
    Time nu_from;
    Time nu_to;
    Time mistake_time;  // request at which j was evicted
    std::optional<StrategyTag> tag;  // strategy that made the eviction
};

struct PrefixState {
    std::uint64_t obj_q;
    std::uint64_t obj_a;
    std::uint64_t phi;
    std::uint64_t edges;
};

struct EvictionGraph {
    Time num_vertices = 0;  // T
    std::vector<GraphEdge> edges;
    std::uint64_t obj = 0;  // OBJ_Q
    std::uint64_t opt = 0;  // OBJ_A
    std::vector<PrefixState> prefixes;  // one per request
    std::vector<Time> prefix_violations;  // times where the potential inequality failed
};

/// Throws AnalysisError when the run does not belong to the trace or when an
/// invariant of the matching breaks (the message names the request time).
EvictionGraph build_eviction_graph(const RequestTrace& trace, const NextOccurrence& nu,
                                   const SimulationResult& run, std::size_t capacity);

struct GraphCheck {
    std::size_t in_degree_violations = 0;
    std::size_t cycle_violations = 0;  // edges without strictly decreasing nu
    std::size_t edge_property_violations = 0;  // nu(j) > T
    std::size_t duplicate_mistakes = 0;  // two edges for one eviction
    bool ok() const {
        return in_degree_violations + cycle_violations + edge_property_violations + duplicate_mistakes == 0;
    }
};

GraphCheck check_graph(const EvictionGraph& graph);

struct BoundLine {
    std::string name;
    double lhs;
    double rhs;
    bool passed;
};

struct BoundReport {
    std::string policy;
    std::vector<BoundLine> lines;

    bool all_passed() const;
    const BoundLine* find(std::string_view name) const;
};

/// Every bound that applies to the run's policy: the certificate inequality
/// (final and per prefix) and graph structure for all policies, |E| <= eta
/// and both prediction bounds for blind-oracle, the 3 OPT + 3 eta bound for
/// alternating-oracle, k OPT + k for lru, the 2 min + 4k envelope for
/// combine-det, and M <= 2 eta whenever losses are supplied.
BoundReport check_bounds(const SimulationResult& run, const EvictionGraph& graph, const LossSummary* losses,
                         std::size_t capacity);

void write_report_text(std::ostream& out, const BoundReport& report);
std::string report_to_json(const BoundReport& report);

struct WitnessReport {
    std::size_t edges_checked = 0;
    std::size_t order_violations = 0;  // omega(j) < omega(i)
    std::size_t loss_violations = 0;   // eta-(i) + eta+(j) < nu(i) - nu(j)
    std::size_t sum_violations = 0;    // s(i) < out-degree
    bool ok() const { return order_violations + loss_violations + sum_violations == 0; }
};

/// Checks the left/right loss inequality on every edge made by a
/// BlindOracle eviction, and the per-source sums s(i) >= d_i. Throws
/// AnalysisError on an edge without a strategy tag.
WitnessReport verify_loss_witnesses(const EvictionGraph& graph, const NextOccurrence& nu,
                                      const PredictionTrace& omega);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Ordinary least squares y = slope * x + intercept.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace cachesim
