#include "cachesim/analysis.hpp"

#include <algorithm>
#include <map>
#include <nlohmann/json.hpp>
#include <ostream>

#include "cachesim/util.hpp"

namespace cachesim {

namespace {

// Bipartite matching between I_A(t) and I_Q(t). Vertices are request
// indices; both sides share the index space but are distinct vertices.
class Matching {
public:
    explicit Matching(Time horizon) : in_a_(horizon + 1, 0), in_q_(horizon + 1, 0), mate_a_(horizon + 1, 0), mate_q_(horizon + 1, 0), pos_q_(horizon + 1, 0) {}

    bool in_a(Time i) const { return in_a_[i]; }
    bool in_q(Time i) const { return in_q_[i]; }
    Time mate_of_a(Time i) const { return mate_a_[i]; }
    Time mate_of_q(Time i) const { return mate_q_[i]; }
    std::size_t size_a() const { return size_a_; }
    std::size_t size_q() const { return q_members_.size(); }
    const std::vector<Time>& q_members() const { return q_members_; }

    void add_pair(Time t) {
        in_a_[t] = in_q_[t] = 1;
        ++size_a_;
        pos_q_[t] = static_cast<Time>(q_members_.size());
        q_members_.push_back(t);
        link(t, t);
    }
    void link(Time a, Time q) {
        mate_a_[a] = q;
        mate_q_[q] = a;
    }
    void remove_a(Time a) {
        if (mate_a_[a] != 0) mate_q_[mate_a_[a]] = 0;
        mate_a_[a] = 0;
        in_a_[a] = 0;
        --size_a_;
    }
    void remove_q(Time q) {
        if (mate_q_[q] != 0) mate_a_[mate_q_[q]] = 0;
        mate_q_[q] = 0;
        in_q_[q] = 0;
        const Time pos = pos_q_[q];
        q_members_[pos] = q_members_.back();
        pos_q_[q_members_[pos]] = pos;
        q_members_.pop_back();
    }
    std::uint64_t isolated_q() const {
        std::uint64_t n = 0;
        for (Time q : q_members_) n += mate_q_[q] == 0;
        return n;
    }

private:
    std::vector<char> in_a_, in_q_;
    std::vector<Time> mate_a_, mate_q_, pos_q_;
    std::vector<Time> q_members_;
    std::size_t size_a_ = 0;
};

struct Evictions {
    std::vector<Time> victim;  // by request time, 0 when none
    std::vector<std::optional<StrategyTag>> tag;
};

Evictions index_log(const EvictionLog& log, Time length, const char* who) {
    Evictions ev{std::vector<Time>(length + 1, 0), std::vector<std::optional<StrategyTag>>(length + 1)};
    for (const auto& r : log) {
        if (r.time < 1 || r.time > length || r.victim_index < 1 || r.victim_index >= r.time) {
            throw AnalysisError(std::string(who) + " eviction log does not match the trace");
        }
        if (ev.victim[r.time] != 0) throw AnalysisError(std::string(who) + " evicts twice at t=" + std::to_string(r.time));
        ev.victim[r.time] = r.victim_index;
        ev.tag[r.time] = r.tag;
    }
    return ev;
}

std::string at(Time t) { return " at t=" + std::to_string(t); }

}  // namespace

EvictionGraph build_eviction_graph(const RequestTrace& trace, const NextOccurrence& nu,
                                   const SimulationResult& run, std::size_t capacity) {
    const Time length = trace.length();
    if (nu.size() != length) throw AnalysisError("next-occurrence length does not match trace");
    if (run.capacity != 0 && run.capacity != capacity) throw AnalysisError("run was produced with a different capacity");

    BeladyPolicy belady;
    const auto optimal = cachesim::run(trace, nu, nullptr, belady, capacity, 0);
    const auto ev_a = index_log(optimal.eviction_log, length, "optimal");
    const auto ev_q = index_log(run.eviction_log, length, "run");

    std::vector<Time> previous(length + 1, 0);
    {
        std::vector<Time> last(trace.num_pages(), 0);
        for (Time t = 1; t <= length; ++t) {
            previous[t] = last[trace.at(t)];
            last[trace.at(t)] = t;
        }
    }

    EvictionGraph graph;
    graph.num_vertices = length;
    graph.prefixes.reserve(length);
    Matching x(length);
    std::uint64_t obj_a = 0;
    std::uint64_t obj_q = 0;

    auto add_edge = [&](Time from, Time to, Time t) {
        graph.edges.push_back({from, to, nu(from), nu(to), t, ev_q.tag[t]});
    };
    auto link = [&](Time a, Time q, Time t) {
        if (nu(a) < nu(q)) throw AnalysisError("matching edge with nu(a) < nu(q)" + at(t));
        x.link(a, q);
    };
    // Smallest isolated Q-side index, optionally restricted to nu <= limit.
    auto isolated_q = [&](std::optional<Time> nu_limit) -> Time {
        Time best = 0;
        for (Time q : x.q_members()) {
            if (x.mate_of_q(q) != 0) continue;
            if (nu_limit && nu(q) > *nu_limit) continue;
            if (best == 0 || q < best) best = q;
        }
        return best;
    };

    for (Time t = 1; t <= length; ++t) {
        const Time j = previous[t];
        const bool hit_a = j != 0 && x.in_a(j);
        const bool hit_q = j != 0 && x.in_q(j);
        const bool full = x.size_a() >= capacity;
        if ((x.size_q() >= capacity) != full) throw AnalysisError("caches filled at different times" + at(t));
        const bool evicts_a = !hit_a && full;
        const bool evicts_q = !hit_q && full;
        if ((ev_a.victim[t] != 0) != evicts_a) throw AnalysisError("optimal run disagrees with replay" + at(t));
        if ((ev_q.victim[t] != 0) != evicts_q) throw AnalysisError("run eviction log disagrees with replay" + at(t));
        obj_a += !hit_a;
        obj_q += !hit_q;

        if (hit_a && hit_q) {
            if (x.mate_of_a(j) != 0 && x.mate_of_a(j) != j) throw AnalysisError("requested index matched to another index" + at(t));
            x.remove_a(j);
            x.remove_q(j);
        } else if (hit_q) {
            if (!full) throw AnalysisError("hit in only one cache before the caches filled" + at(t));
            if (!x.in_a(ev_a.victim[t])) throw AnalysisError("optimal run evicted an index outside I_A" + at(t));
            x.remove_a(ev_a.victim[t]);
            x.remove_q(j);
        } else if (hit_a) {
            if (x.mate_of_a(j) != 0) throw AnalysisError("requested index in I_A is matched" + at(t));
            const Time b = ev_q.victim[t];
            if (!x.in_q(b)) throw AnalysisError("run evicted an index outside I_Q" + at(t));
            x.remove_a(j);
            const Time a = x.mate_of_q(b);
            if (a == 0) {
                x.remove_q(b);
            } else if (const Time spare = isolated_q(nu(b)); spare != 0) {
                x.remove_q(b);
                link(a, spare, t);
            } else {
                const Time witness = isolated_q(std::nullopt);
                if (witness == 0) throw AnalysisError("no unmatched candidate for a mistake" + at(t));
                add_edge(witness, b, t);
                x.remove_q(b);
            }
        } else if (full) {
            const Time a = ev_a.victim[t];
            const Time b = ev_q.victim[t];
            if (!x.in_a(a) || !x.in_q(b)) throw AnalysisError("eviction outside the index sets" + at(t));
            const Time a_mate = x.mate_of_a(a);
            const Time b_mate = x.mate_of_q(b);
            x.remove_a(a);
            x.remove_q(b);
            if (a_mate != 0 && b_mate != 0 && a_mate != b) {
                if (const Time spare = isolated_q(nu(b)); spare != 0) {
                    link(b_mate, spare, t);
                } else {
                    const Time witness = isolated_q(std::nullopt);
                    if (witness == 0) throw AnalysisError("no unmatched candidate for a mistake" + at(t));
                    add_edge(witness, b, t);
                }
            }
        }
        x.add_pair(t);

        const std::uint64_t phi = x.isolated_q();
        graph.prefixes.push_back({obj_q, obj_a, phi, graph.edges.size()});
        if (obj_q + phi > obj_a + graph.edges.size()) graph.prefix_violations.push_back(t);
    }
    if (obj_q != run.misses) throw AnalysisError("replayed miss count differs from the run");
    graph.obj = obj_q;
    graph.opt = obj_a;
    return graph;
}

GraphCheck check_graph(const EvictionGraph& graph) {
    GraphCheck check;
    std::map<Time, int> in_degree;
    std::map<Time, int> per_mistake;
    for (const auto& e : graph.edges) {
        if (++in_degree[e.to] > 1) ++check.in_degree_violations;
        if (++per_mistake[e.mistake_time] > 1) ++check.duplicate_mistakes;
        if (!(e.nu_from > e.nu_to)) ++check.cycle_violations;
        if (e.nu_to > graph.num_vertices) ++check.edge_property_violations;
    }
    return check;
}

bool BoundReport::all_passed() const {
    return std::all_of(lines.begin(), lines.end(), [](const BoundLine& l) { return l.passed; });
}

const BoundLine* BoundReport::find(std::string_view name) const {
    for (const auto& l : lines) {
        if (l.name == name) return &l;
    }
    return nullptr;
}

BoundReport check_bounds(const SimulationResult& run, const EvictionGraph& graph, const LossSummary* losses,
                         std::size_t capacity) {
    BoundReport report;
    report.policy = run.policy;
    const auto family = parse_call(run.policy).name;
    const double obj = static_cast<double>(run.misses);
    const double opt = static_cast<double>(graph.opt);
    const double edges = static_cast<double>(graph.edges.size());
    const double k = static_cast<double>(capacity);
    auto add = [&](std::string name, double lhs, double rhs) {
        report.lines.push_back({std::move(name), lhs, rhs, lhs <= rhs});
    };

    add("certificate: OBJ <= OPT + |E|", obj, opt + edges);
    add("certificate prefix violations", static_cast<double>(graph.prefix_violations.size()), 0.0);
    const auto structure = check_graph(graph);
    add("forest violations", static_cast<double>(structure.in_degree_violations + structure.cycle_violations +
                                                 structure.duplicate_mistakes), 0.0);
    add("edge property violations", static_cast<double>(structure.edge_property_violations), 0.0);

    if (losses != nullptr) {
        const double eta = losses->eta_total;
        if (family == "blind-oracle") {
            add("|E| <= eta", edges, eta);
            add("blind-oracle: OBJ <= OPT + eta", obj, opt + eta);
            // Compared as k*OBJ <= 3k*OPT + 3 eta to stay exact on integers.
            report.lines.push_back({"blind-oracle: OBJ <= 3 OPT + 3 eta / k", obj, 3.0 * opt + 3.0 * eta / k,
                                    k * obj <= 3.0 * k * opt + 3.0 * eta});
        }
        if (family == "alternating-oracle") add("alternating-oracle: OBJ <= 3 OPT + 3 eta", obj, 3.0 * opt + 3.0 * eta);
        add("inversions: M <= 2 eta", static_cast<double>(losses->inversions_total), 2.0 * eta);
    }
    if (family == "lru") add("lru: OBJ <= k OPT + k", obj, k * opt + k);
    if (family == "combine-det" && run.leg_misses.size() == 2) {
        const double best = static_cast<double>(std::min(run.leg_misses[0], run.leg_misses[1]));
        add("combine-det: OBJ <= 2 min(legs) + 4k", obj, 2.0 * best + 4.0 * k);
    }
    return report;
}

void write_report_text(std::ostream& out, const BoundReport& report) {
    out << "policy " << report.policy << '\n';
    for (const auto& l : report.lines) {
        out << l.name << " | lhs=" << format_double(l.lhs) << " rhs=" << format_double(l.rhs) << " | "
            << (l.passed ? "PASS" : "FAIL") << '\n';
    }
    out << "verdict " << (report.all_passed() ? "PASS" : "FAIL") << '\n';
}

std::string report_to_json(const BoundReport& report) {
    nlohmann::json doc;
    doc["policy"] = report.policy;
    doc["passed"] = report.all_passed();
    auto& bounds = doc["bounds"] = nlohmann::json::array();
    for (const auto& l : report.lines) {
        bounds.push_back({{"name", l.name}, {"lhs", l.lhs}, {"rhs", l.rhs}, {"passed", l.passed}});
    }
    return doc.dump(2);
}

WitnessReport verify_loss_witnesses(const EvictionGraph& graph, const NextOccurrence& nu,
                                      const PredictionTrace& omega) {
    const auto losses = compute_losses(nu, omega);
    WitnessReport report;
    std::map<Time, std::pair<double, std::size_t>> sums;  // source -> (sum of eta+ of targets, count)
    for (const auto& e : graph.edges) {
        if (!e.tag) throw AnalysisError("edge (" + std::to_string(e.from) + "," + std::to_string(e.to) + ") has no strategy");
        if (*e.tag != StrategyTag::BlindOracle) continue;
        ++report.edges_checked;
        if (omega(e.to) < omega(e.from)) ++report.order_violations;
        const double left = losses.eta_minus[e.from - 1] + losses.eta_plus[e.to - 1];
        if (left < static_cast<double>(nu(e.from)) - static_cast<double>(nu(e.to))) ++report.loss_violations;
        auto& s = sums[e.from];
        s.first += losses.eta_plus[e.to - 1];
        ++s.second;
    }
    for (const auto& [source, s] : sums) {
        if (losses.eta_minus[source - 1] + s.first < static_cast<double>(s.second)) ++report.sum_violations;
    }
    return report;
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line needs at least two paired points");
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LinearFit fit;
    fit.slope = sxx > 0 ? sxy / sxx : 0.0;
    fit.intercept = my - fit.slope * mx;
    double sse = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (fit.slope * x[i] + fit.intercept);
        sse += r * r;
    }
    fit.r_squared = syy > 0 ? 1.0 - sse / syy : (sse == 0 ? 1.0 : 0.0);
    return fit;
}

}  // namespace cachesim
