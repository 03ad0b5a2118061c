#include "cachesim/engine.hpp"

#include <algorithm>
#include <bit>
#include <ostream>

namespace cachesim {

Simulator::Simulator(const RequestTrace& trace, const PredictionTrace* predictions, EvictionPolicy& policy,
                     std::size_t capacity, std::uint64_t seed, FutureView future, const NextOccurrence* check_nu)
    : trace_(trace),
      predictions_(predictions),
      policy_(policy),
      future_(policy.needs_future() ? future : FutureView{}),
      check_nu_(check_nu),
      cache_(capacity, trace.num_pages()),
      history_(trace.num_pages()),
      started_(std::chrono::steady_clock::now()) {
    if (capacity < 1) throw std::invalid_argument("cache capacity must be at least 1");
    if (policy.needs_future() && !future_.available()) {
        throw std::invalid_argument("policy '" + policy.name() + "' needs future knowledge");
    }
    if (policy.needs_predictions()) {
        if (predictions == nullptr) throw std::invalid_argument("policy '" + policy.name() + "' needs predictions");
        if (predictions->size() != trace.length()) throw std::invalid_argument("prediction count does not match trace length");
    }
    PolicySetup setup;
    setup.capacity = capacity;
    setup.trace = &trace;
    setup.predictions = predictions;
    setup.future = future_;
    setup.seed = seed;
    policy_.reset(setup);
}

bool Simulator::step() {
    if (done()) throw EngineError("step past the end of the trace");
    const Time t = ++now_;
    const PageId page = trace_.at(t);
    last_victim_.reset();
    DecisionContext ctx{t, page, trace_, cache_, predictions_, history_, future_};

    policy_.on_request(ctx);

    if (cache_.contains(page)) {
        ++hits_;
        cache_.touch(page, t);
        policy_.on_hit(ctx);
        history_.mark_requested(page);
        return false;
    }

    ++misses_;
    if (cache_.full()) {
        const Decision decision = policy_.choose_victim(ctx);
        if (!cache_.holds_index(trace_, decision.victim)) {
            throw EngineError("policy '" + policy_.name() + "' chose index " + std::to_string(decision.victim) +
                              " at t=" + std::to_string(t) + ", which is not in the cache");
        }
        EvictionRecord record{t, decision.victim, trace_.at(decision.victim), decision.tag, std::nullopt};
        if (history_.requested_before(page)) {
            // A cached-before page that is missing now was evicted, and its
            // latest eviction is the one whose next request is t.
            auto parent = history_.last_eviction(page);
            if (!parent) throw EngineError("page requested before has no eviction record at t=" + std::to_string(t));
            const auto& p = history_.log()[*parent];
            if (check_nu_ != nullptr && (*check_nu_)(p.victim_index) != t) {
                throw EngineError("trigger link violates nu(parent) = t at t=" + std::to_string(t));
            }
            record.triggered_by = *parent;
        }
        cache_.evict(record.victim_page);
        history_.append(record);
        ++by_tag_[static_cast<std::size_t>(record.tag)];
        last_victim_ = record.victim_page;
    } else if (history_.requested_before(page)) {
        throw EngineError("page left a non-full cache without eviction at t=" + std::to_string(t));
    }
    cache_.insert(page, t);
    policy_.on_insert(ctx);
    history_.mark_requested(page);
    return true;
}

void Simulator::run_to_end() {
    while (!done()) step();
}

SimulationResult Simulator::finish() {
    run_to_end();
    SimulationResult out;
    out.policy = policy_.name();
    out.capacity = cache_.capacity();
    out.misses = misses_;
    out.hits = hits_;
    out.eviction_log = history_.take_log();
    out.evictions_by_tag = by_tag_;
    out.leg_misses = policy_.leg_misses();
    out.wall_time = std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - started_);
    return out;
}

SimulationResult run(const RequestTrace& trace, const NextOccurrence& nu, const PredictionTrace* predictions,
                     EvictionPolicy& policy, std::size_t capacity, std::uint64_t seed, RunOptions options) {
    if (nu.size() != trace.length()) throw std::invalid_argument("next-occurrence length does not match trace");
    Simulator sim(trace, predictions, policy, capacity, seed, FutureView(nu, options.future_reads), &nu);
    return sim.finish();
}

SimulationResult run(const RequestTrace& trace, const NextOccurrence& nu, const PredictionTrace* predictions,
                     std::string_view policy_expression, std::size_t capacity, std::uint64_t seed) {
    auto policy = make_policy(policy_expression);
    auto result = run(trace, nu, predictions, *policy, capacity, seed);
    result.policy = std::string(policy_expression);
    return result;
}

std::uint64_t brute_force_opt(const RequestTrace& trace, std::size_t capacity) {
    if (capacity < 1) throw std::invalid_argument("cache capacity must be at least 1");
    if (trace.length() > kBruteForceMaxLength || trace.num_pages() > kBruteForceMaxPages) {
        throw std::invalid_argument("brute-force optimum is limited to T <= " + std::to_string(kBruteForceMaxLength) +
                                    " and at most " + std::to_string(kBruteForceMaxPages) + " distinct pages (got T=" +
                                    std::to_string(trace.length()) + ", " + std::to_string(trace.num_pages()) +
                                    " pages)");
    }
    const Time length = trace.length();
    constexpr std::uint32_t kUnknown = 0xffffffffu;
    const std::size_t masks = std::size_t{1} << trace.num_pages();
    // best[t][mask]: fewest misses on requests t+1..T starting from `mask`.
    std::vector<std::uint32_t> best((length + 1) * masks, kUnknown);

    auto solve = [&](auto&& self, Time t, std::uint32_t mask) -> std::uint32_t {
        if (t == length) return 0;
        auto& slot = best[t * masks + mask];
        if (slot != kUnknown) return slot;
        const std::uint32_t bit = 1u << trace.at(t + 1);
        std::uint32_t result;
        if (mask & bit) {
            result = self(self, t + 1, mask);
        } else if (static_cast<std::size_t>(std::popcount(mask)) < capacity) {
            result = 1 + self(self, t + 1, mask | bit);
        } else {
            result = kUnknown;
            for (std::uint32_t rest = mask; rest != 0; rest &= rest - 1) {
                const std::uint32_t victim = rest & (~rest + 1);
                result = std::min(result, 1 + self(self, t + 1, (mask & ~victim) | bit));
            }
        }
        slot = result;
        return result;
    };
    return solve(solve, 0, 0);
}

std::vector<std::vector<std::size_t>> extract_chains(const EvictionLog& log) {
    std::vector<std::optional<std::size_t>> child(log.size());
    for (std::size_t i = 0; i < log.size(); ++i) {
        if (auto parent = log[i].triggered_by) {
            if (*parent >= i) throw EngineError("trigger link points forward in the log");
            if (child[*parent]) throw EngineError("eviction record triggers two evictions");
            child[*parent] = i;
        }
    }
    std::vector<std::vector<std::size_t>> chains;
    for (std::size_t i = 0; i < log.size(); ++i) {
        if (log[i].triggered_by) continue;
        auto& chain = chains.emplace_back();
        for (std::optional<std::size_t> at = i; at; at = child[*at]) chain.push_back(*at);
    }
    return chains;
}

void write_eviction_log(std::ostream& out, const EvictionLog& log, const RequestTrace& trace) {
    out << "time,victim_page,victim_index,strategy_tag,triggered_by_time\n";
    for (const auto& r : log) {
        out << r.time << ',' << trace.token(r.victim_page) << ',' << r.victim_index << ',' << to_string(r.tag) << ',';
        if (r.triggered_by) out << log[*r.triggered_by].time;
        out << '\n';
    }
}

}  // namespace cachesim
