#pragma once

// Two-strategy combiners. Each leg runs in a shadow simulation over the full
// request stream; the live cache evicts a page that is absent from the
// current leader's shadow cache, so it drifts toward the leader's contents.

#include <array>
#include <memory>
#include <random>

#include "cachesim/engine.hpp"
#include "cachesim/policy.hpp"

namespace cachesim {

class CombinerBase : public EvictionPolicy {
public:
    CombinerBase(std::unique_ptr<EvictionPolicy> first, std::unique_ptr<EvictionPolicy> second);

    bool needs_predictions() const override;
    bool needs_future() const override;
    bool randomized() const override;

    void reset(const PolicySetup& setup) override;
    void on_request(const DecisionContext& ctx) override;
    std::vector<std::uint64_t> leg_misses() const override;

    std::size_t leader() const { return leader_; }
    const Simulator& shadow(std::size_t leg) const { return *shadows_.at(leg); }
    const EvictionPolicy& leg(std::size_t leg) const { return *legs_.at(leg); }
    /// Number of requests during which each leg was the leader.
    const std::array<std::uint64_t, 2>& steps_led() const { return steps_led_; }
    std::uint64_t leader_changes() const { return leader_changes_; }

protected:
    /// Called once per request after both shadows have processed it.
    virtual void update_leader(const DecisionContext& ctx, const std::array<bool, 2>& leg_missed) = 0;
    /// Live page absent from the leader's shadow cache with the smallest
    /// last-request index; falls back to the leader's own victim.
    Time evict_toward_leader(const DecisionContext& ctx) const;
    void set_leader(std::size_t leg);
    std::size_t capacity() const { return setup_.capacity; }
    std::uint64_t seed() const { return setup_.seed; }

private:
    std::array<std::unique_ptr<EvictionPolicy>, 2> legs_;
    std::array<std::unique_ptr<Simulator>, 2> shadows_;
    PolicySetup setup_;
    std::size_t leader_ = 0;
    std::array<std::uint64_t, 2> steps_led_{};
    std::uint64_t leader_changes_ = 0;
};

/// Follows the leg with fewer simulated misses (ties to the first leg).
class DeterministicCombiner final : public CombinerBase {
public:
    using CombinerBase::CombinerBase;
    std::string name() const override;
    Decision choose_victim(const DecisionContext& ctx) override;

protected:
    void update_leader(const DecisionContext& ctx, const std::array<bool, 2>& leg_missed) override;
};

/// Multiplicative weights over the two legs: a leg's weight shrinks by
/// (1 - gamma/k) on each of its simulated misses, and the leader is redrawn
/// in proportion to the weights once its own weight has halved since the
/// last draw.
class StochasticCombiner final : public CombinerBase {
public:
    static constexpr double kWeightFloor = 1e-200;

    StochasticCombiner(std::unique_ptr<EvictionPolicy> first, std::unique_ptr<EvictionPolicy> second, double gamma);

    std::string name() const override;
    bool randomized() const override { return true; }
    void reset(const PolicySetup& setup) override;
    Decision choose_victim(const DecisionContext& ctx) override;

    double gamma() const { return gamma_; }
    const std::array<double, 2>& weights() const { return weights_; }

protected:
    void update_leader(const DecisionContext& ctx, const std::array<bool, 2>& leg_missed) override;

private:
    double gamma_;
    std::array<double, 2> weights_{1.0, 1.0};
    double weight_at_draw_ = 1.0;
    std::mt19937_64 rng_;
};

}  // namespace cachesim
