#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "cachesim/engine.hpp"
#include "cachesim/policy.hpp"
#include "test_support.hpp"

using namespace cachesim;
using namespace cachesim::testing;

namespace {

RequestTrace distinct_trace(Time length) {
    RequestTrace trace;
    for (Time t = 1; t <= length; ++t) trace.push_back("p" + std::to_string(t));
    return trace;
}

}  // namespace

TEST(CacheState, InsertTouchEvict) {
    CacheState cache(2, 4);
    cache.insert(0, 1);
    cache.insert(2, 2);
    EXPECT_TRUE(cache.full());
    EXPECT_TRUE(cache.contains(2));
    cache.touch(0, 5);
    EXPECT_EQ(cache.last_request(0), std::optional<Time>(5));
    cache.evict(0);
    EXPECT_FALSE(cache.contains(0));
    EXPECT_EQ(cache.size(), 1u);
    EXPECT_FALSE(cache.last_request(0).has_value());
}

TEST(Belady, EvictsFarthestNextRequest) {
    // [a,b,c,a,c], k=2: at t=3 the cache holds indices 1 (nu 4) and 2 (nu 6).
    Scenario s(make_trace({"a", "b", "c", "a", "c"}), {0, 0, 0, 0, 0}, {1, 2}, 3);
    EXPECT_EQ(belady_evict(s.context(FutureView(s.nu))), 2u);
}

TEST(Belady, TieOnNeverRequestedAgainGoesToOlderIndex) {
    Scenario s(make_trace({"a", "b", "c"}), {0, 0, 0}, {1, 2}, 3);
    EXPECT_EQ(belady_evict(s.context(FutureView(s.nu))), 1u);
}

TEST(Belady, WithoutFutureViewThrows) {
    Scenario s(make_trace({"a", "b", "c"}), {0, 0, 0}, {1, 2}, 3);
    EXPECT_THROW(belady_evict(s.context()), std::logic_error);
}

TEST(Belady, SingleCandidateIsForced) {
    Scenario s(make_trace({"a", "b"}), {0, 0}, {1}, 2);
    EXPECT_EQ(belady_evict(s.context(FutureView(s.nu))), 1u);
}

TEST(Policies, RejectNonFullCacheAndHits) {
    Scenario not_full(make_trace({"a", "b", "c"}), {9, 9, 9}, {1}, 3);
    not_full.cache = CacheState(2, 3);
    not_full.cache.insert(not_full.trace.at(1), 1);
    EXPECT_THROW(lru_evict(not_full.context()), PolicyError);
    EXPECT_THROW(blind_oracle_evict(not_full.context()), PolicyError);

    Scenario hit(make_trace({"a", "b", "a"}), {9, 9, 9}, {1, 2}, 3);
    EXPECT_THROW(lru_evict(hit.context()), PolicyError);
    EXPECT_THROW(corrector_evict(hit.context()), PolicyError);
}

TEST(Lru, EvictsLeastRecentlyRequested) {
    Scenario s(make_trace({"a", "b", "c", "d"}), {0, 0, 0, 0}, {3, 1, 2}, 4);
    EXPECT_EQ(lru_evict(s.context()), 1u);
}

TEST(Lru, CapacityOneEvictsTheSoleEntry) {
    Scenario s(make_trace({"a", "b"}), {0, 0}, {1}, 2);
    EXPECT_EQ(lru_evict(s.context()), 1u);
}

TEST(Lfu, EqualCountsFallBackToLruOrder) {
    Scenario s(make_trace({"a", "b", "c", "d"}), {0, 0, 0, 0}, {2, 1, 3}, 4);
    const std::vector<std::uint64_t> counts(s.trace.num_pages(), 1);
    EXPECT_EQ(lfu_evict(s.context(), counts), 1u);
}

TEST(Lfu, EvictsLowestCount) {
    Scenario s(make_trace({"a", "b", "c", "d"}), {0, 0, 0, 0}, {1, 2, 3}, 4);
    std::vector<std::uint64_t> counts{5, 1, 3, 1};
    EXPECT_EQ(lfu_evict(s.context(), counts), 2u);
}

TEST(BlindOracle, EvictsLargestPrediction) {
    Scenario s(distinct_trace(4), {3, 9, 2, 0}, {1, 2, 3}, 4);
    EXPECT_EQ(blind_oracle_evict(s.context()), 2u);
}

TEST(BlindOracle, EqualPredictionsGoToOlderIndex) {
    Scenario s(distinct_trace(4), {7, 7, 7, 0}, {2, 3, 1}, 4);
    EXPECT_EQ(blind_oracle_evict(s.context()), 1u);
}

TEST(BlindOracle, ShortTraceWithExactPredictionsMatchesBelady) {
    const auto trace = make_trace({"a", "b", "c", "a", "c"});
    const auto nu = compute_next_occurrence(trace);
    const PredictionTrace omega({4, 6, 5, 6, 6});
    EXPECT_EQ(run(trace, nu, &omega, "blind-oracle", 2, 0).misses, 3u);
}

TEST(BlindOracle, ShortTraceWithOneWrongPrediction) {
    const auto trace = make_trace({"a", "b", "c", "a", "c"});
    const auto nu = compute_next_occurrence(trace);
    const PredictionTrace omega({4, 3, 5, 6, 6});
    const auto result = run(trace, nu, &omega, "blind-oracle", 2, 0);
    EXPECT_EQ(result.misses, 5u);
    ASSERT_EQ(result.eviction_log.size(), 3u);
    EXPECT_EQ(result.eviction_log[0].time, 3u);
    EXPECT_EQ(trace.token(result.eviction_log[0].victim_page), "a");
    EXPECT_EQ(result.eviction_log[1].time, 4u);
    EXPECT_EQ(trace.token(result.eviction_log[1].victim_page), "c");
    EXPECT_EQ(result.eviction_log[2].time, 5u);
    EXPECT_EQ(compute_losses(nu, omega).eta_total, 3.0);
}

TEST(Corrector, EvictsProvablyWrongPrediction) {
    // t=5, cached (index, omega) = {(2,3), (3,7)}: only index 2 is overdue.
    Scenario s(distinct_trace(5), {0, 3, 7, 0, 0}, {2, 3}, 5);
    EXPECT_EQ(corrector_evict(s.context()), 2u);
}

TEST(Corrector, PicksSmallestOverduePrediction) {
    // t=10, cached omega = {12, 7, 9}: the overdue set is {7, 9}.
    Scenario s(distinct_trace(10), {0, 0, 0, 0, 0, 0, 12, 7, 9, 0}, {7, 8, 9}, 10);
    EXPECT_EQ(corrector_evict(s.context()), 8u);
}

TEST(Corrector, FallsBackToBlindOracle) {
    Scenario s(distinct_trace(5), {0, 0, 6, 9, 0}, {3, 4}, 5);
    EXPECT_EQ(corrector_evict(s.context()), 4u);
}

TEST(Corrector, PredictionEqualToNowIsNotOverdue) {
    Scenario s(distinct_trace(5), {0, 0, 5, 9, 0}, {3, 4}, 5);
    EXPECT_EQ(corrector_evict(s.context()), 4u);
}

TEST(MarkerPredictive, EvictsLargestPredictionAmongUnmarked) {
    Scenario s(distinct_trace(4), {7, 12, 20, 0}, {1, 2, 3}, 4);
    std::vector<bool> marked(s.trace.num_pages(), false);
    marked[s.trace.at(3)] = true;  // omega 20 is protected
    std::mt19937_64 rng(0);
    EXPECT_EQ(marker_evict(s.context(), marked, true, rng), 2u);
}

TEST(MarkerPredictive, EqualPredictionsGoToOlderIndex) {
    Scenario s(distinct_trace(4), {5, 5, 5, 0}, {3, 2, 1}, 4);
    std::vector<bool> marked(s.trace.num_pages(), false);
    std::mt19937_64 rng(0);
    EXPECT_EQ(marker_evict(s.context(), marked, true, rng), 1u);
}

TEST(Marker, SingleUnmarkedEntryIsForced) {
    Scenario s(distinct_trace(4), {0, 0, 0, 0}, {1, 2, 3}, 4);
    std::vector<bool> marked(s.trace.num_pages(), true);
    marked[s.trace.at(2)] = false;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(seed);
        auto copy = marked;
        EXPECT_EQ(marker_evict(s.context(), copy, false, rng), 2u);
    }
}

TEST(Marker, AllMarkedStartsNewEpoch) {
    Scenario s(distinct_trace(4), {0, 0, 0, 0}, {1, 2, 3}, 4);
    std::vector<bool> marked(s.trace.num_pages(), true);
    std::mt19937_64 rng(1);
    const Time victim = marker_evict(s.context(), marked, false, rng);
    EXPECT_GE(victim, 1u);
    EXPECT_LE(victim, 3u);
    for (Time i : {1u, 2u, 3u}) EXPECT_FALSE(marked[s.trace.at(i)]);
}

TEST(Marker, SameSeedSameEvictions) {
    std::mt19937_64 rng(12);
    const auto trace = random_trace(rng, 400, 12);
    const auto nu = compute_next_occurrence(trace);
    const auto a = run(trace, nu, nullptr, "marker", 4, 77);
    const auto b = run(trace, nu, nullptr, "marker", 4, 77);
    ASSERT_EQ(a.eviction_log.size(), b.eviction_log.size());
    for (std::size_t i = 0; i < a.eviction_log.size(); ++i) {
        EXPECT_EQ(a.eviction_log[i].victim_index, b.eviction_log[i].victim_index);
    }
}

TEST(Random, CapacityOneIsForced) {
    Scenario s(distinct_trace(2), {0, 0}, {1}, 2);
    std::mt19937_64 rng(5);
    for (int i = 0; i < 10; ++i) EXPECT_EQ(random_evict(s.context(), rng), 1u);
}

TEST(Random, SlotFrequenciesWithinThreeSigma) {
    Scenario s(distinct_trace(5), {0, 0, 0, 0, 0}, {1, 2, 3, 4}, 5);
    std::mt19937_64 rng(2024);
    constexpr int kDraws = 100000;
    std::map<Time, int> hits;
    for (int i = 0; i < kDraws; ++i) ++hits[random_evict(s.context(), rng)];
    const double p = 0.25;
    const double sigma = std::sqrt(kDraws * p * (1 - p));
    ASSERT_EQ(hits.size(), 4u);
    for (const auto& [index, count] : hits) EXPECT_LE(std::abs(count - kDraws * p), 3 * sigma) << index;
}

TEST(Random, FixedSeedFixedSequence) {
    std::mt19937_64 rng(13);
    const auto trace = random_trace(rng, 300, 10);
    const auto nu = compute_next_occurrence(trace);
    const auto a = run(trace, nu, nullptr, "random", 3, 5);
    const auto b = run(trace, nu, nullptr, "random", 3, 5);
    ASSERT_EQ(a.eviction_log.size(), b.eviction_log.size());
    for (std::size_t i = 0; i < a.eviction_log.size(); ++i) {
        EXPECT_EQ(a.eviction_log[i].victim_index, b.eviction_log[i].victim_index);
    }
}

TEST(AlternatingOracle, DispatchTable) {
    EXPECT_EQ(alternating_dispatch(std::nullopt, false), StrategyTag::BlindOracle);
    EXPECT_EQ(alternating_dispatch(StrategyTag::BlindOracle, true), StrategyTag::RandomAlg);
    EXPECT_EQ(alternating_dispatch(StrategyTag::RandomAlg, true), StrategyTag::Corrector);
    EXPECT_EQ(alternating_dispatch(StrategyTag::Corrector, true), StrategyTag::BlindOracle);
    EXPECT_THROW(alternating_dispatch(std::nullopt, true), PolicyError);
}

TEST(AlternatingOracle, NewPageUsesBlindOracle) {
    Scenario s(distinct_trace(4), {3, 9, 2, 0}, {1, 2, 3}, 4);
    std::mt19937_64 rng(0);
    const auto decision = alternating_oracle_evict(s.context(), rng);
    EXPECT_EQ(decision.tag, StrategyTag::BlindOracle);
    EXPECT_EQ(decision.victim, 2u);
}

TEST(AlternatingOracle, PageEvictedByBlindOracleComesBackUnderRandom) {
    // k=2 on [a,b,c,a]: t=3 is a first-time miss (BlindOracle evicts a, the
    // largest omega); t=4 re-requests a, so the RandomAlg branch runs.
    const auto trace = make_trace({"a", "b", "c", "a"});
    const auto nu = compute_next_occurrence(trace);
    const PredictionTrace omega({9, 5, 6, 5});
    const auto result = run(trace, nu, &omega, "alternating-oracle", 2, 1);
    ASSERT_EQ(result.eviction_log.size(), 2u);
    EXPECT_EQ(result.eviction_log[0].tag, StrategyTag::BlindOracle);
    EXPECT_EQ(trace.token(result.eviction_log[0].victim_page), "a");
    EXPECT_EQ(result.eviction_log[1].tag, StrategyTag::RandomAlg);
    EXPECT_EQ(result.eviction_log[1].triggered_by, std::optional<std::size_t>(0));
}

TEST(AlternatingOracle, TagsCycleAlongChains) {
    std::mt19937_64 rng(14);
    for (int round = 0; round < 30; ++round) {
        const auto trace = random_trace(rng, 300, 8);
        const auto nu = compute_next_occurrence(trace);
        const auto omega = generate_predictions(trace, nu, NoiseModel::additive_uniform(20, round));
        const auto result = run(trace, nu, &omega, "alternating-oracle", 4, round);
        const auto next = [](StrategyTag tag) { return alternating_dispatch(tag, true); };
        for (const auto& chain : extract_chains(result.eviction_log)) {
            for (std::size_t i = 1; i < chain.size(); ++i) {
                ASSERT_EQ(result.eviction_log[chain[i]].tag, next(result.eviction_log[chain[i - 1]].tag));
            }
        }
    }
}

TEST(FutureAccess, OnlyBeladyReadsNextOccurrences) {
    std::mt19937_64 rng(15);
    const auto trace = random_trace(rng, 300, 12);
    const auto nu = compute_next_occurrence(trace);
    const auto omega = generate_predictions(trace, nu, NoiseModel::additive_uniform(10, 1));
    for (const char* name : {"lru", "lfu", "marker", "marker-predictive", "blind-oracle", "corrector", "random",
                             "alternating-oracle", "combine-det(blind-oracle,lru)",
                             "combine-stoch(lru,corrector,0.1)"}) {
        std::uint64_t reads = 0;
        auto policy = make_policy(name);
        run(trace, nu, &omega, *policy, 4, 3, RunOptions{&reads});
        EXPECT_EQ(reads, 0u) << name;
    }
    std::uint64_t reads = 0;
    auto belady = make_policy("belady");
    run(trace, nu, nullptr, *belady, 4, 3, RunOptions{&reads});
    EXPECT_GT(reads, 0u);
}

TEST(DecisionContext, FuturePredictionsAreHidden) {
    Scenario s(distinct_trace(5), {1, 2, 3, 4, 5}, {1, 2}, 3);
    const auto ctx = s.context();
    EXPECT_EQ(ctx.prediction(3), 3.0);
    EXPECT_THROW(ctx.prediction(4), PolicyError);
}

TEST(Registry, KnownAndUnknownNames) {
    for (const char* name : {"belady", "lru", "lfu", "marker", "marker-predictive", "blind-oracle", "corrector",
                             "random", "alternating-oracle"}) {
        EXPECT_EQ(make_policy(name)->name(), name);
    }
    EXPECT_TRUE(policy_needs_predictions("combine-det(lru,blind-oracle)"));
    EXPECT_FALSE(policy_needs_predictions("combine-det(lru,lfu)"));
    EXPECT_THROW(make_policy("lur"), std::invalid_argument);
    EXPECT_THROW(make_policy("combine-det(lru)"), std::invalid_argument);
    EXPECT_THROW(make_policy("combine-stoch(lru,lfu,0.3)"), std::invalid_argument);
    EXPECT_THROW(make_policy("combine-stoch(lru,lfu,0)"), std::invalid_argument);
}

TEST(StrategyTag, NamesRoundTrip) {
    for (std::size_t i = 0; i < kStrategyTagCount; ++i) {
        const auto tag = static_cast<StrategyTag>(i);
        EXPECT_EQ(parse_strategy_tag(to_string(tag)), tag);
    }
}
