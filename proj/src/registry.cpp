#include "cachesim/combiner.hpp"
#include "cachesim/policy.hpp"
#include "cachesim/util.hpp"

namespace cachesim {

std::unique_ptr<EvictionPolicy> make_policy(std::string_view expression) {
    const auto call = parse_call(expression);
    const auto& n = call.name;
    if (n == "combine-det" || n == "combine-stoch") {
        const std::size_t want = n == "combine-det" ? 2 : 3;
        if (call.args.size() != want) {
            throw std::invalid_argument("'" + std::string(expression) + "': " + n + " takes " +
                                        std::to_string(want) + " arguments");
        }
        auto first = make_policy(call.args[0]);
        auto second = make_policy(call.args[1]);
        if (n == "combine-det") return std::make_unique<DeterministicCombiner>(std::move(first), std::move(second));
        return std::make_unique<StochasticCombiner>(std::move(first), std::move(second),
                                                    parse_double(call.args[2], "gamma"));
    }
    if (!call.args.empty()) throw std::invalid_argument("policy '" + n + "' takes no arguments");
    if (n == "belady") return std::make_unique<BeladyPolicy>();
    if (n == "lru") return std::make_unique<LruPolicy>();
    if (n == "lfu") return std::make_unique<LfuPolicy>();
    if (n == "marker") return std::make_unique<MarkerPolicy>(false);
    if (n == "marker-predictive") return std::make_unique<MarkerPolicy>(true);
    if (n == "blind-oracle") return std::make_unique<BlindOraclePolicy>();
    if (n == "corrector") return std::make_unique<CorrectorPolicy>();
    if (n == "random") return std::make_unique<RandomPolicy>();
    if (n == "alternating-oracle") return std::make_unique<AlternatingOraclePolicy>();
    throw std::invalid_argument("unknown policy '" + std::string(expression) + "'");
}

bool policy_needs_predictions(std::string_view expression) { return make_policy(expression)->needs_predictions(); }

}  // namespace cachesim
