#pragma once

// Drives a policy over a trace: hit/miss accounting, cache mutation, trigger
// tracking and the eviction log.

#include <array>
#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "cachesim/policy.hpp"
#include "cachesim/trace.hpp"

namespace cachesim {

class EngineError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

struct SimulationResult {
    std::string policy;
    std::size_t capacity = 0;
    std::uint64_t misses = 0;  // OBJ
    std::uint64_t hits = 0;
    EvictionLog eviction_log;
    std::array<std::uint64_t, kStrategyTagCount> evictions_by_tag{};
    std::vector<std::uint64_t> leg_misses;  // combiners only
    std::chrono::nanoseconds wall_time{0};
};

struct RunOptions {
    /// Counts every read of nu made by the policy (probe for the
    /// future-knowledge capability).
    std::uint64_t* future_reads = nullptr;
};

/// Step-wise simulation of one policy. Used directly by the combiners to
/// advance their shadow legs in lockstep with the live cache.
class Simulator {
public:
    /// `future` is handed to the policy only when it declares needs_future().
    /// When `check_nu` is set every trigger link is verified against it.
    Simulator(const RequestTrace& trace, const PredictionTrace* predictions, EvictionPolicy& policy,
              std::size_t capacity, std::uint64_t seed, FutureView future, const NextOccurrence* check_nu = nullptr);

    Simulator(const Simulator&) = delete;
    Simulator& operator=(const Simulator&) = delete;

    bool done() const { return now_ >= trace_.length(); }
    Time time() const { return now_; }  // last processed request, 0 before the first

    /// Processes request now_ + 1; returns true on a miss.
    bool step();
    void run_to_end();

    const CacheState& cache() const { return cache_; }
    const EvictionHistory& history() const { return history_; }
    std::uint64_t misses() const { return misses_; }
    std::uint64_t hits() const { return hits_; }
    /// Page evicted while processing the most recent request, if any.
    std::optional<PageId> last_victim() const { return last_victim_; }

    SimulationResult finish();

private:
    const RequestTrace& trace_;
    const PredictionTrace* predictions_;
    EvictionPolicy& policy_;
    FutureView future_;
    const NextOccurrence* check_nu_;
    CacheState cache_;
    EvictionHistory history_;
    Time now_ = 0;
    std::uint64_t misses_ = 0;
    std::uint64_t hits_ = 0;
    std::optional<PageId> last_victim_;
    std::array<std::uint64_t, kStrategyTagCount> by_tag_{};
    std::chrono::steady_clock::time_point started_;
};

SimulationResult run(const RequestTrace& trace, const NextOccurrence& nu, const PredictionTrace* predictions,
                     EvictionPolicy& policy, std::size_t capacity, std::uint64_t seed, RunOptions options = {});

SimulationResult run(const RequestTrace& trace, const NextOccurrence& nu, const PredictionTrace* predictions,
                     std::string_view policy_expression, std::size_t capacity, std::uint64_t seed);

inline constexpr Time kBruteForceMaxLength = 16;
inline constexpr std::size_t kBruteForceMaxPages = 7;

/// Minimum miss count over every eviction sequence, by memoized search over
/// (time, cache contents). Throws std::invalid_argument beyond the limits
/// above.
std::uint64_t brute_force_opt(const RequestTrace& trace, std::size_t capacity);

/// Maximal paths of the triggered_by forest, each listed root first as
/// positions in the log. Every record appears in exactly one chain.
std::vector<std::vector<std::size_t>> extract_chains(const EvictionLog& log);

/// `time,victim_page,victim_index,strategy_tag,triggered_by_time`
void write_eviction_log(std::ostream& out, const EvictionLog& log, const RequestTrace& trace);

}  // namespace cachesim
