#include "cachesim/policy.hpp"

#include <algorithm>

namespace cachesim {

namespace {

constexpr std::array<std::string_view, kStrategyTagCount> kTagNames = {
    "Belady",     "LRU",       "LFU",       "Marker",      "MarkerPredictive",
    "BlindOracle", "RandomAlg", "Corrector", "CombinerDet", "CombinerStoch",
};

void require_eviction(const DecisionContext& ctx) {
    if (!ctx.cache.full()) {
        throw PolicyError("eviction requested at t=" + std::to_string(ctx.t) + " with a non-full cache");
    }
    if (ctx.cache.contains(ctx.page)) {
        throw PolicyError("eviction requested at t=" + std::to_string(ctx.t) + " on a hit");
    }
}

// Entry with the largest key; ties by smallest last-request index.
template <typename Key>
Time argmax_entry(std::span<const CacheEntry> entries, Key key) {
    const CacheEntry* best = nullptr;
    for (const auto& e : entries) {
        if (best == nullptr) {
            best = &e;
            continue;
        }
        const auto ke = key(e);
        const auto kb = key(*best);
        if (ke > kb || (ke == kb && e.last_request < best->last_request)) best = &e;
    }
    if (best == nullptr) throw PolicyError("no eviction candidate");
    return best->last_request;
}

template <typename Key>
Time argmin_entry(std::span<const CacheEntry> entries, Key key) {
    return argmax_entry(entries, [&](const CacheEntry& e) { return -key(e); });
}

Time uniform_by_page(std::vector<CacheEntry> candidates, std::mt19937_64& rng) {
    if (candidates.empty()) throw PolicyError("no eviction candidate");
    std::sort(candidates.begin(), candidates.end(),
              [](const CacheEntry& a, const CacheEntry& b) { return a.page < b.page; });
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    return candidates[pick(rng)].last_request;
}

}  // namespace

std::string_view to_string(StrategyTag tag) { return kTagNames[static_cast<std::size_t>(tag)]; }

std::optional<StrategyTag> parse_strategy_tag(std::string_view name) {
    for (std::size_t i = 0; i < kTagNames.size(); ++i) {
        if (kTagNames[i] == name) return static_cast<StrategyTag>(i);
    }
    return std::nullopt;
}

CacheState::CacheState(std::size_t capacity, std::size_t num_pages)
    : capacity_(capacity), slot_(num_pages, kAbsent) {
    entries_.reserve(capacity);
}

std::optional<Time> CacheState::last_request(PageId page) const {
    if (!contains(page)) return std::nullopt;
    return entries_[slot_[page]].last_request;
}

bool CacheState::holds_index(const RequestTrace& trace, Time index) const {
    if (index < 1 || index > trace.length()) return false;
    auto last = last_request(trace.at(index));
    return last && *last == index;
}

void CacheState::insert(PageId page, Time t) {
    if (page >= slot_.size()) slot_.resize(page + 1, kAbsent);
    if (contains(page)) throw PolicyError("page inserted twice");
    if (full()) throw PolicyError("insert into a full cache");
    slot_[page] = static_cast<std::uint32_t>(entries_.size());
    entries_.push_back({page, t});
}

void CacheState::touch(PageId page, Time t) {
    if (!contains(page)) throw PolicyError("touch of an absent page");
    entries_[slot_[page]].last_request = t;
}

void CacheState::evict(PageId page) {
    if (!contains(page)) throw PolicyError("eviction of an absent page");
    const auto pos = slot_[page];
    const auto last = entries_.size() - 1;
    if (pos != last) {
        entries_[pos] = entries_[last];
        slot_[entries_[pos].page] = pos;
    }
    entries_.pop_back();
    slot_[page] = kAbsent;
}

std::optional<StrategyTag> EvictionHistory::last_eviction_tag(PageId page) const {
    auto id = last_eviction_[page];
    if (!id) return std::nullopt;
    return log_[*id].tag;
}

std::size_t EvictionHistory::append(EvictionRecord record) {
    const auto id = log_.size();
    last_eviction_[record.victim_page] = id;
    log_.push_back(record);
    return id;
}

Time FutureView::next_occurrence(Time t) const {
    if (nu_ == nullptr) throw PolicyError("policy without future-knowledge capability read nu");
    if (reads_ != nullptr) ++*reads_;
    return nu_->at(t);
}

double DecisionContext::prediction(Time i) const {
    if (predictions == nullptr) throw PolicyError("policy requires predictions but none were supplied");
    if (i < 1 || i > t) throw PolicyError("prediction for index " + std::to_string(i) + " is not visible at t=" + std::to_string(t));
    return (*predictions)(i);
}

Time belady_evict(const DecisionContext& ctx) {
    require_eviction(ctx);
    return argmax_entry(ctx.cache.entries(),
                        [&](const CacheEntry& e) { return ctx.future.next_occurrence(e.last_request); });
}

Time lru_evict(const DecisionContext& ctx) {
    require_eviction(ctx);
    return argmin_entry(ctx.cache.entries(), [](const CacheEntry& e) { return static_cast<std::int64_t>(e.last_request); });
}

Time lfu_evict(const DecisionContext& ctx, std::span<const std::uint64_t> request_counts) {
    require_eviction(ctx);
    return argmin_entry(ctx.cache.entries(), [&](const CacheEntry& e) {
        return static_cast<std::int64_t>(request_counts[e.page]);
    });
}

Time blind_oracle_evict(const DecisionContext& ctx) {
    require_eviction(ctx);
    return argmax_entry(ctx.cache.entries(), [&](const CacheEntry& e) { return ctx.prediction(e.last_request); });
}

Time corrector_evict(const DecisionContext& ctx) {
    require_eviction(ctx);
    const double now = static_cast<double>(ctx.t);
    std::vector<CacheEntry> wrong;
    for (const auto& e : ctx.cache.entries()) {
        if (ctx.prediction(e.last_request) < now) wrong.push_back(e);
    }
    if (wrong.empty()) return blind_oracle_evict(ctx);
    return argmin_entry(std::span<const CacheEntry>(wrong),
                        [&](const CacheEntry& e) { return ctx.prediction(e.last_request); });
}

Time random_evict(const DecisionContext& ctx, std::mt19937_64& rng) {
    require_eviction(ctx);
    auto entries = ctx.cache.entries();
    return uniform_by_page({entries.begin(), entries.end()}, rng);
}

Time marker_evict(const DecisionContext& ctx, std::vector<bool>& marked, bool predictive, std::mt19937_64& rng) {
    require_eviction(ctx);
    std::vector<CacheEntry> unmarked;
    for (const auto& e : ctx.cache.entries()) {
        if (!marked[e.page]) unmarked.push_back(e);
    }
    if (unmarked.empty()) {
        for (const auto& e : ctx.cache.entries()) marked[e.page] = false;
        auto entries = ctx.cache.entries();
        unmarked.assign(entries.begin(), entries.end());
    }
    if (predictive) {
        return argmax_entry(std::span<const CacheEntry>(unmarked),
                            [&](const CacheEntry& e) { return ctx.prediction(e.last_request); });
    }
    return uniform_by_page(std::move(unmarked), rng);
}

StrategyTag alternating_dispatch(std::optional<StrategyTag> last_eviction_of_requested, bool requested_before) {
    if (!requested_before) return StrategyTag::BlindOracle;
    if (!last_eviction_of_requested) {
        throw PolicyError("requested page was seen before but has no eviction record");
    }
    switch (*last_eviction_of_requested) {
        case StrategyTag::BlindOracle: return StrategyTag::RandomAlg;
        case StrategyTag::RandomAlg: return StrategyTag::Corrector;
        case StrategyTag::Corrector: return StrategyTag::BlindOracle;
        default:
            throw PolicyError("alternating dispatch on foreign strategy tag " +
                              std::string(to_string(*last_eviction_of_requested)));
    }
}

Decision alternating_oracle_evict(const DecisionContext& ctx, std::mt19937_64& rng) {
    const auto tag = alternating_dispatch(ctx.history.last_eviction_tag(ctx.page),
                                          ctx.history.requested_before(ctx.page));
    switch (tag) {
        case StrategyTag::RandomAlg: return {random_evict(ctx, rng), tag};
        case StrategyTag::Corrector: return {corrector_evict(ctx), tag};
        default: return {blind_oracle_evict(ctx), StrategyTag::BlindOracle};
    }
}

void LfuPolicy::reset(const PolicySetup& setup) {
    counts_.assign(setup.trace ? setup.trace->num_pages() : 0, 0);
}

void MarkerPolicy::reset(const PolicySetup& setup) {
    marked_.assign(setup.trace ? setup.trace->num_pages() : 0, false);
    rng_.seed(setup.seed);
}

Decision MarkerPolicy::choose_victim(const DecisionContext& ctx) {
    const auto victim = marker_evict(ctx, marked_, predictive_, rng_);
    marked_[ctx.trace.at(victim)] = false;
    return {victim, predictive_ ? StrategyTag::MarkerPredictive : StrategyTag::Marker};
}

}  // namespace cachesim
