#include "cachesim/combiner.hpp"

#include <cmath>

#include "cachesim/util.hpp"

namespace cachesim {

CombinerBase::CombinerBase(std::unique_ptr<EvictionPolicy> first, std::unique_ptr<EvictionPolicy> second)
    : legs_{std::move(first), std::move(second)} {
    if (!legs_[0] || !legs_[1]) throw std::invalid_argument("combiner legs must be non-null");
}

bool CombinerBase::needs_predictions() const {
    return legs_[0]->needs_predictions() || legs_[1]->needs_predictions();
}

bool CombinerBase::needs_future() const { return legs_[0]->needs_future() || legs_[1]->needs_future(); }

bool CombinerBase::randomized() const { return legs_[0]->randomized() || legs_[1]->randomized(); }

void CombinerBase::reset(const PolicySetup& setup) {
    if (setup.trace == nullptr) throw std::invalid_argument("combiner needs the request trace");
    setup_ = setup;
    // Legs see the same seed as a standalone run, so shadow miss counts
    // match independent runs exactly.
    for (std::size_t i = 0; i < 2; ++i) {
        shadows_[i] = std::make_unique<Simulator>(*setup.trace, setup.predictions, *legs_[i], setup.capacity,
                                                  setup.seed, setup.future);
    }
    leader_ = 0;
    steps_led_ = {};
    leader_changes_ = 0;
}

void CombinerBase::on_request(const DecisionContext& ctx) {
    std::array<bool, 2> missed{};
    for (std::size_t i = 0; i < 2; ++i) {
        auto& shadow = *shadows_[i];
        if (shadow.time() + 1 != ctx.t) throw PolicyError("combiner shadow out of step with the live cache");
        missed[i] = shadow.step();
    }
    update_leader(ctx, missed);
    ++steps_led_[leader_];
}

std::vector<std::uint64_t> CombinerBase::leg_misses() const {
    if (!shadows_[0]) return {};
    return {shadows_[0]->misses(), shadows_[1]->misses()};
}

void CombinerBase::set_leader(std::size_t leg) {
    if (leg != leader_) ++leader_changes_;
    leader_ = leg;
}

Time CombinerBase::evict_toward_leader(const DecisionContext& ctx) const {
    const auto& target = shadows_[leader_]->cache();
    const CacheEntry* best = nullptr;
    for (const auto& e : ctx.cache.entries()) {
        if (target.contains(e.page)) continue;
        if (best == nullptr || e.last_request < best->last_request) best = &e;
    }
    if (best != nullptr) return best->last_request;
    // Unreachable while the leader's shadow has already taken sigma(t):
    // a full live cache without sigma(t) cannot be a subset of it.
    if (auto victim = shadows_[leader_]->last_victim(); victim && ctx.cache.contains(*victim)) {
        return *ctx.cache.last_request(*victim);
    }
    throw PolicyError("combiner live cache desynchronized from leader at t=" + std::to_string(ctx.t));
}

std::string DeterministicCombiner::name() const {
    return "combine-det(" + leg(0).name() + "," + leg(1).name() + ")";
}

Decision DeterministicCombiner::choose_victim(const DecisionContext& ctx) {
    return {evict_toward_leader(ctx), StrategyTag::CombinerDet};
}

void DeterministicCombiner::update_leader(const DecisionContext&, const std::array<bool, 2>&) {
    set_leader(shadow(1).misses() < shadow(0).misses() ? 1 : 0);
}

StochasticCombiner::StochasticCombiner(std::unique_ptr<EvictionPolicy> first, std::unique_ptr<EvictionPolicy> second,
                                       double gamma)
    : CombinerBase(std::move(first), std::move(second)), gamma_(gamma) {
    if (!(gamma > 0.0 && gamma < 0.25)) {
        throw std::invalid_argument("combine-stoch gamma must lie in (0, 1/4), got " + format_double(gamma));
    }
}

std::string StochasticCombiner::name() const {
    return "combine-stoch(" + leg(0).name() + "," + leg(1).name() + "," + format_double(gamma_) + ")";
}

void StochasticCombiner::reset(const PolicySetup& setup) {
    CombinerBase::reset(setup);
    weights_ = {1.0, 1.0};
    weight_at_draw_ = 1.0;
    rng_.seed(mix_seed(setup.seed, {0x73746f6368ULL}));
}

Decision StochasticCombiner::choose_victim(const DecisionContext& ctx) {
    return {evict_toward_leader(ctx), StrategyTag::CombinerStoch};
}

void StochasticCombiner::update_leader(const DecisionContext&, const std::array<bool, 2>& leg_missed) {
    const double decay = 1.0 - gamma_ / static_cast<double>(capacity());
    for (std::size_t i = 0; i < 2; ++i) {
        if (leg_missed[i]) weights_[i] *= decay;
    }
    const double total = weights_[0] + weights_[1];
    if (total < kWeightFloor) {
        weights_[0] /= total;
        weights_[1] /= total;
        weight_at_draw_ /= total;
    }
    if (weights_[leader()] <= 0.5 * weight_at_draw_) {
        std::uniform_real_distribution<double> u(0.0, weights_[0] + weights_[1]);
        set_leader(u(rng_) < weights_[0] ? 0 : 1);
        weight_at_draw_ = weights_[leader()];
    }
}

}  // namespace cachesim
