#include <gtest/gtest.h>

#include "cachesim/combiner.hpp"
#include "test_support.hpp"

using namespace cachesim;
using namespace cachesim::testing;

namespace {

struct Instance {
    RequestTrace trace;
    NextOccurrence nu;
    PredictionTrace omega;
};

Instance make_instance(std::mt19937_64& rng, Time length, std::uint32_t pages, const NoiseModel& noise) {
    Instance in;
    in.trace = random_trace(rng, length, pages);
    in.nu = compute_next_occurrence(in.trace);
    in.omega = generate_predictions(in.trace, in.nu, noise);
    return in;
}

}  // namespace

TEST(Combiner, ShadowMissesEqualStandaloneRuns) {
    std::mt19937_64 rng(31);
    const std::vector<std::pair<std::string, std::string>> pairs = {
        {"blind-oracle", "lru"}, {"marker", "corrector"}, {"alternating-oracle", "lfu"}, {"random", "marker"}};
    for (int round = 0; round < 20; ++round) {
        const auto in = make_instance(rng, 300, 12, NoiseModel::additive_uniform(25, round));
        const std::size_t k = 2 + round % 5;
        for (const auto& [a, b] : pairs) {
            for (const char* kind : {"combine-det", "combine-stoch"}) {
                const std::string expr = std::string(kind) + "(" + a + "," + b +
                                         (std::string(kind) == "combine-stoch" ? ",0.1)" : ")");
                const auto combined = run(in.trace, in.nu, &in.omega, expr, k, round);
                ASSERT_EQ(combined.leg_misses.size(), 2u);
                EXPECT_EQ(combined.leg_misses[0], run(in.trace, in.nu, &in.omega, a, k, round).misses) << expr;
                EXPECT_EQ(combined.leg_misses[1], run(in.trace, in.nu, &in.omega, b, k, round).misses) << expr;
            }
        }
    }
}

TEST(DeterministicCombiner, FollowsLegWithFewerMissesTiesToFirst) {
    std::mt19937_64 rng(32);
    for (int round = 0; round < 20; ++round) {
        const auto in = make_instance(rng, 200, 10, NoiseModel::additive_uniform(40, round));
        DeterministicCombiner combiner(make_policy("lru"), make_policy("blind-oracle"));
        Simulator sim(in.trace, &in.omega, combiner, 3, round, FutureView{});
        while (!sim.done()) {
            sim.step();
            const auto a = combiner.shadow(0).misses(), b = combiner.shadow(1).misses();
            ASSERT_EQ(combiner.leader(), b < a ? 1u : 0u) << "t=" << sim.time();
        }
    }
}

TEST(DeterministicCombiner, EvictsPagesOutsideTheLeaderCache) {
    std::mt19937_64 rng(33);
    const auto in = make_instance(rng, 400, 9, NoiseModel::lognormal(1.0, 4));
    DeterministicCombiner combiner(make_policy("marker"), make_policy("blind-oracle"));
    Simulator sim(in.trace, &in.omega, combiner, 4, 7, FutureView{});
    std::size_t checked = 0;
    while (!sim.done()) {
        sim.step();
        if (auto victim = sim.last_victim()) {
            ASSERT_FALSE(combiner.shadow(combiner.leader()).cache().contains(*victim)) << "t=" << sim.time();
            ++checked;
        }
    }
    EXPECT_GT(checked, 0u);
}

TEST(DeterministicCombiner, EnvelopeAndLegSumOnRandomInstances) {
    std::mt19937_64 rng(34);
    for (int round = 0; round < 200; ++round) {
        const std::size_t k = 1 + rng() % 8;
        const auto in = make_instance(rng, 200 + rng() % 200, static_cast<std::uint32_t>(k + 1 + rng() % 10),
                                      NoiseModel::additive_uniform(static_cast<std::int64_t>(rng() % 100), round));
        for (const auto& expr : {"combine-det(blind-oracle,lru)", "combine-det(lru,lfu)", "combine-det(marker,corrector)"}) {
            const auto r = run(in.trace, in.nu, &in.omega, expr, k, round);
            const auto best = std::min(r.leg_misses[0], r.leg_misses[1]);
            ASSERT_LE(r.misses, 2 * best + 4 * k) << expr << " round " << round;
            ASSERT_LE(r.misses, r.leg_misses[0] + r.leg_misses[1]) << expr << " round " << round;
        }
    }
}

TEST(DeterministicCombiner, IdenticalLegsReproduceTheLeg) {
    std::mt19937_64 rng(35);
    for (int round = 0; round < 20; ++round) {
        const auto in = make_instance(rng, 300, 10, NoiseModel::exact());
        EXPECT_EQ(run(in.trace, in.nu, nullptr, "combine-det(lru,lru)", 4, 0).misses,
                  run(in.trace, in.nu, nullptr, "lru", 4, 0).misses);
    }
}

TEST(StochasticCombiner, RejectsGammaOutsideRange) {
    for (double gamma : {0.0, -0.1, 0.25, 0.5}) {
        EXPECT_THROW(StochasticCombiner(make_policy("lru"), make_policy("lfu"), gamma), std::invalid_argument);
    }
    EXPECT_NO_THROW(StochasticCombiner(make_policy("lru"), make_policy("lfu"), 0.249));
}

TEST(StochasticCombiner, VanishingGammaKeepsTheFirstLeader) {
    std::mt19937_64 rng(36);
    const auto in = make_instance(rng, 2000, 20, NoiseModel::exact());
    StochasticCombiner combiner(make_policy("blind-oracle"), make_policy("lru"), 1e-9);
    Simulator sim(in.trace, &in.omega, combiner, 4, 1, FutureView{});
    sim.run_to_end();
    EXPECT_EQ(combiner.leader_changes(), 0u);
    EXPECT_EQ(combiner.steps_led()[0], in.trace.length());
    EXPECT_LT(combiner.shadow(0).misses(), combiner.shadow(1).misses());
}

TEST(StochasticCombiner, EqualLegsShareLeadership) {
    std::mt19937_64 rng(37);
    const auto trace = random_trace(rng, 10000, 20);
    const auto nu = compute_next_occurrence(trace);
    std::uint64_t led_first = 0, total = 0, changes = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        StochasticCombiner combiner(make_policy("lru"), make_policy("lru"), 0.2);
        Simulator sim(trace, nullptr, combiner, 4, seed, FutureView{});
        sim.run_to_end();
        led_first += combiner.steps_led()[0];
        total += combiner.steps_led()[0] + combiner.steps_led()[1];
        changes += combiner.leader_changes();
    }
    const double share = static_cast<double>(led_first) / static_cast<double>(total);
    EXPECT_GE(share, 0.30);
    EXPECT_LE(share, 0.70);
    EXPECT_GT(changes, 0u);
}

TEST(StochasticCombiner, FixedSeedReproducesSwitches) {
    std::mt19937_64 rng(38);
    const auto in = make_instance(rng, 3000, 15, NoiseModel::additive_uniform(50, 3));
    auto switches = [&](std::uint64_t seed) {
        StochasticCombiner combiner(make_policy("lru"), make_policy("blind-oracle"), 0.2);
        Simulator sim(in.trace, &in.omega, combiner, 3, seed, FutureView{});
        std::vector<Time> times;
        std::size_t last = combiner.leader();
        while (!sim.done()) {
            sim.step();
            if (combiner.leader() != last) times.push_back(sim.time());
            last = combiner.leader();
        }
        return times;
    };
    EXPECT_EQ(switches(5), switches(5));
}

TEST(StochasticCombiner, WeightsStayPositiveOnLongRuns) {
    std::mt19937_64 rng(39);
    const auto trace = random_trace(rng, 60000, 50);
    const auto nu = compute_next_occurrence(trace);
    StochasticCombiner combiner(make_policy("lru"), make_policy("lfu"), 0.24);
    Simulator sim(trace, nullptr, combiner, 1, 2, FutureView{});
    sim.run_to_end();
    EXPECT_GT(combiner.weights()[0] + combiner.weights()[1], 0.0);
}
