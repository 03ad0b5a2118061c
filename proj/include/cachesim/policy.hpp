#pragma once

// Eviction-policy interface and the single-strategy policies.
//
// A policy only ever sees a DecisionContext: the current request, the cache
// contents with their last-request indices, predictions for indices up to
// the current time, and the eviction history. The true next-occurrence
// times are reachable only through a FutureView, which the engine hands out
// to policies that declare needs_future() (Belady).

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cachesim/trace.hpp"

namespace cachesim {

enum class StrategyTag : std::uint8_t {
    Belady,
    LRU,
    LFU,
    Marker,
    MarkerPredictive,
    BlindOracle,
    RandomAlg,
    Corrector,
    CombinerDet,
    CombinerStoch,
};
inline constexpr std::size_t kStrategyTagCount = 10;

std::string_view to_string(StrategyTag tag);
std::optional<StrategyTag> parse_strategy_tag(std::string_view name);

/// Raised when a policy is asked to decide in a state where no eviction is
/// legal, or when engine bookkeeping is inconsistent.
class PolicyError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

struct CacheEntry {
    PageId page;
    Time last_request;  // the index in I_Q representing this page
};

/// Capacity-k page set together with the last-request index of every page.
/// Entry order is unspecified; policies must not depend on it.
class CacheState {
public:
    CacheState() = default;
    CacheState(std::size_t capacity, std::size_t num_pages);

    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return entries_.size(); }
    bool full() const { return entries_.size() >= capacity_; }
    bool contains(PageId page) const { return page < slot_.size() && slot_[page] != kAbsent; }
    std::optional<Time> last_request(PageId page) const;
    /// True when `index` is in I_Q, i.e. sigma(index) is cached with that index.
    bool holds_index(const RequestTrace& trace, Time index) const;

    std::span<const CacheEntry> entries() const { return entries_; }

    void insert(PageId page, Time t);
    void touch(PageId page, Time t);
    void evict(PageId page);

private:
    static constexpr std::uint32_t kAbsent = 0xffffffffu;
    std::size_t capacity_ = 0;
    std::vector<CacheEntry> entries_;
    std::vector<std::uint32_t> slot_;
};

struct EvictionRecord {
    Time time;            // request that caused the eviction
    Time victim_index;    // i in I_Q of the evicted page
    PageId victim_page;
    StrategyTag tag;
    std::optional<std::size_t> triggered_by;  // position in the log
};
using EvictionLog = std::vector<EvictionRecord>;

/// Per-page request and eviction bookkeeping maintained by the engine.
class EvictionHistory {
public:
    explicit EvictionHistory(std::size_t num_pages = 0)
        : requested_(num_pages, false), last_eviction_(num_pages) {}

    bool requested_before(PageId page) const { return requested_[page]; }
    std::optional<std::size_t> last_eviction(PageId page) const { return last_eviction_[page]; }
    std::optional<StrategyTag> last_eviction_tag(PageId page) const;
    const EvictionLog& log() const { return log_; }

    void mark_requested(PageId page) { requested_[page] = true; }
    std::size_t append(EvictionRecord record);
    EvictionLog take_log() { return std::move(log_); }

private:
    std::vector<bool> requested_;
    std::vector<std::optional<std::size_t>> last_eviction_;
    EvictionLog log_;
};

/// Read access to next-occurrence times. Empty unless the policy holds the
/// future-knowledge capability; every read is counted when a counter is set.
class FutureView {
public:
    FutureView() = default;
    explicit FutureView(const NextOccurrence& nu, std::uint64_t* reads = nullptr) : nu_(&nu), reads_(reads) {}

    bool available() const { return nu_ != nullptr; }
    Time next_occurrence(Time t) const;

private:
    const NextOccurrence* nu_ = nullptr;
    std::uint64_t* reads_ = nullptr;
};

struct DecisionContext {
    Time t;
    PageId page;  // sigma(t)
    const RequestTrace& trace;
    const CacheState& cache;
    const PredictionTrace* predictions;
    const EvictionHistory& history;
    FutureView future;

    /// omega(i); only indices up to the current time are visible.
    double prediction(Time i) const;
};

struct Decision {
    Time victim;
    StrategyTag tag;
};

struct PolicySetup {
    std::size_t capacity = 1;
    const RequestTrace* trace = nullptr;
    const PredictionTrace* predictions = nullptr;
    FutureView future;
    std::uint64_t seed = 0;
};

class EvictionPolicy {
public:
    virtual ~EvictionPolicy() = default;

    virtual std::string name() const = 0;
    virtual bool needs_predictions() const { return false; }
    virtual bool needs_future() const { return false; }
    virtual bool randomized() const { return false; }

    virtual void reset(const PolicySetup&) {}
    /// Called for every request before hit/miss handling.
    virtual void on_request(const DecisionContext&) {}
    virtual void on_hit(const DecisionContext&) {}
    virtual void on_insert(const DecisionContext&) {}
    /// Called on a miss with a full cache.
    virtual Decision choose_victim(const DecisionContext& ctx) = 0;

    /// Simulated miss counts of the component strategies of a combiner.
    virtual std::vector<std::uint64_t> leg_misses() const { return {}; }
};

// Victim selection rules. All require a full cache and a miss and throw
// PolicyError otherwise. Ties go to the smallest last-request index.

Time belady_evict(const DecisionContext& ctx);
Time lru_evict(const DecisionContext& ctx);
Time lfu_evict(const DecisionContext& ctx, std::span<const std::uint64_t> request_counts);
Time blind_oracle_evict(const DecisionContext& ctx);
Time corrector_evict(const DecisionContext& ctx);
Time random_evict(const DecisionContext& ctx, std::mt19937_64& rng);

/// Marker selection over `marked` (indexed by page id). Starts a new epoch
/// when every cached page is marked. With `predictive` the unmarked page with
/// the largest prediction is chosen, otherwise a uniform one.
Time marker_evict(const DecisionContext& ctx, std::vector<bool>& marked, bool predictive,
                  std::mt19937_64& rng);

/// Dispatch of the alternating strategy for a miss on sigma(t): never
/// requested before -> BlindOracle; otherwise by the tag of the page's most
/// recent eviction, BlindOracle -> RandomAlg -> Corrector -> BlindOracle.
StrategyTag alternating_dispatch(std::optional<StrategyTag> last_eviction_of_requested, bool requested_before);

Decision alternating_oracle_evict(const DecisionContext& ctx, std::mt19937_64& rng);

class BeladyPolicy final : public EvictionPolicy {
public:
    std::string name() const override { return "belady"; }
    bool needs_future() const override { return true; }
    Decision choose_victim(const DecisionContext& ctx) override { return {belady_evict(ctx), StrategyTag::Belady}; }
};

class LruPolicy final : public EvictionPolicy {
public:
    std::string name() const override { return "lru"; }
    Decision choose_victim(const DecisionContext& ctx) override { return {lru_evict(ctx), StrategyTag::LRU}; }
};

class LfuPolicy final : public EvictionPolicy {
public:
    std::string name() const override { return "lfu"; }
    void reset(const PolicySetup& setup) override;
    void on_request(const DecisionContext& ctx) override { ++counts_[ctx.page]; }
    Decision choose_victim(const DecisionContext& ctx) override { return {lfu_evict(ctx, counts_), StrategyTag::LFU}; }

private:
    std::vector<std::uint64_t> counts_;
};

class MarkerPolicy final : public EvictionPolicy {
public:
    explicit MarkerPolicy(bool predictive = false) : predictive_(predictive) {}
    std::string name() const override { return predictive_ ? "marker-predictive" : "marker"; }
    bool needs_predictions() const override { return predictive_; }
    bool randomized() const override { return !predictive_; }
    void reset(const PolicySetup& setup) override;
    void on_hit(const DecisionContext& ctx) override { marked_[ctx.page] = true; }
    void on_insert(const DecisionContext& ctx) override { marked_[ctx.page] = true; }
    Decision choose_victim(const DecisionContext& ctx) override;

    bool is_marked(PageId page) const { return marked_[page]; }

private:
    bool predictive_;
    std::vector<bool> marked_;
    std::mt19937_64 rng_;
};

class BlindOraclePolicy final : public EvictionPolicy {
public:
    std::string name() const override { return "blind-oracle"; }
    bool needs_predictions() const override { return true; }
    Decision choose_victim(const DecisionContext& ctx) override {
        return {blind_oracle_evict(ctx), StrategyTag::BlindOracle};
    }
};

class CorrectorPolicy final : public EvictionPolicy {
public:
    std::string name() const override { return "corrector"; }
    bool needs_predictions() const override { return true; }
    Decision choose_victim(const DecisionContext& ctx) override { return {corrector_evict(ctx), StrategyTag::Corrector}; }
};

class RandomPolicy final : public EvictionPolicy {
public:
    std::string name() const override { return "random"; }
    bool randomized() const override { return true; }
    void reset(const PolicySetup& setup) override { rng_.seed(setup.seed); }
    Decision choose_victim(const DecisionContext& ctx) override { return {random_evict(ctx, rng_), StrategyTag::RandomAlg}; }

private:
    std::mt19937_64 rng_;
};

class AlternatingOraclePolicy final : public EvictionPolicy {
public:
    std::string name() const override { return "alternating-oracle"; }
    bool needs_predictions() const override { return true; }
    bool randomized() const override { return true; }
    void reset(const PolicySetup& setup) override { rng_.seed(setup.seed); }
    Decision choose_victim(const DecisionContext& ctx) override { return alternating_oracle_evict(ctx, rng_); }

private:
    std::mt19937_64 rng_;
};

/// Canonical single-strategy names plus `combine-det(a,b)` and
/// `combine-stoch(a,b,gamma)`. Throws std::invalid_argument on unknown names.
std::unique_ptr<EvictionPolicy> make_policy(std::string_view expression);

/// True when the expression (including any combiner legs) reads predictions.
bool policy_needs_predictions(std::string_view expression);

}  // namespace cachesim
