#include "cachesim/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>
#include <tuple>

#include <omp.h>

#include "cachesim/engine.hpp"
#include "cachesim/util.hpp"

namespace cachesim {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& message) {
    throw ConfigError(path + ": " + message);
}

template <typename T>
T get_field(const json& node, const std::string& path) {
    try {
        return node.get<T>();
    } catch (const json::exception&) {
        fail(path, "has the wrong type");
    }
}

template <typename T>
std::vector<T> get_list(const json& node, const std::string& path) {
    if (!node.is_array()) fail(path, "must be a list");
    std::vector<T> out;
    for (std::size_t i = 0; i < node.size(); ++i) {
        out.push_back(get_field<T>(node[i], path + "[" + std::to_string(i) + "]"));
    }
    return out;
}

std::uint64_t get_unsigned(const json& node, const std::string& path) {
    if (!node.is_number_unsigned()) fail(path, "must be a non-negative integer");
    return node.get<std::uint64_t>();
}

std::string csv_field(const std::string& value) {
    if (value.find_first_of(",\"\n") == std::string::npos) return value;
    std::string out = "\"";
    for (char c : value) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

}  // namespace

void ExperimentConfig::validate() const {
    if (workloads.empty()) fail("workloads", "must list at least one workload");
    for (std::size_t i = 0; i < workloads.size(); ++i) {
        try {
            WorkloadSpec::parse(workloads[i], length, 0);
        } catch (const std::exception& e) {
            fail("workloads[" + std::to_string(i) + "]", e.what());
        }
    }
    if (cache_sizes.empty()) fail("cache_sizes", "must list at least one cache size");
    for (std::size_t i = 0; i < cache_sizes.size(); ++i) {
        if (cache_sizes[i] < 1) fail("cache_sizes[" + std::to_string(i) + "]", "must be at least 1");
    }
    if (policies.empty()) fail("policies", "must list at least one policy");
    bool predictions_needed = false;
    for (std::size_t i = 0; i < policies.size(); ++i) {
        try {
            predictions_needed |= policy_needs_predictions(policies[i]);
        } catch (const std::exception& e) {
            fail("policies[" + std::to_string(i) + "]", e.what());
        }
    }
    if (predictions_needed && noise.empty()) fail("noise", "must list a noise model for prediction-based policies");
    for (std::size_t i = 0; i < noise.size(); ++i) {
        try {
            NoiseModel::parse(noise[i]);
        } catch (const std::exception& e) {
            fail("noise[" + std::to_string(i) + "]", e.what());
        }
    }
    if (seeds < 1) fail("seeds", "must be at least 1");
}

ExperimentConfig parse_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (!doc.is_object()) fail("config", "must be an object");

    ExperimentConfig config;
    for (const auto& [key, value] : doc.items()) {
        if (key == "workloads") {
            config.workloads = get_list<std::string>(value, key);
        } else if (key == "length") {
            config.length = static_cast<Time>(get_unsigned(value, key));
        } else if (key == "cache_sizes") {
            if (!value.is_array()) fail(key, "must be a list");
            for (std::size_t i = 0; i < value.size(); ++i) {
                config.cache_sizes.push_back(get_unsigned(value[i], key + "[" + std::to_string(i) + "]"));
            }
        } else if (key == "policies") {
            config.policies = get_list<std::string>(value, key);
        } else if (key == "noise") {
            config.noise = get_list<std::string>(value, key);
        } else if (key == "seeds") {
            config.seeds = get_unsigned(value, key);
        } else if (key == "master_seed") {
            config.master_seed = get_unsigned(value, key);
        } else if (key == "verify") {
            config.verify = get_field<bool>(value, key);
        } else if (key == "timing") {
            config.timing = get_field<bool>(value, key);
        } else if (key == "output") {
            if (!value.is_object()) fail(key, "must be an object");
            for (const auto& [out_key, out_value] : value.items()) {
                const std::string path = "output." + out_key;
                if (out_key == "csv") {
                    config.csv_path = get_field<std::string>(out_value, path);
                } else if (out_key == "summary") {
                    config.summary_path = get_field<std::string>(out_value, path);
                } else if (out_key == "curve") {
                    config.curve_path = get_field<std::string>(out_value, path);
                } else {
                    fail(path, "unknown field");
                }
            }
        } else {
            fail(key, "unknown field");
        }
    }
    config.validate();
    return config;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

void apply_seed_override(ExperimentConfig& config) {
    if (const char* value = std::getenv(kMasterSeedEnv); value != nullptr && *value != '\0') {
        try {
            config.master_seed = parse_int<std::uint64_t>(value, kMasterSeedEnv);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
}

std::vector<GridCell> expand_grid(const ExperimentConfig& config) {
    std::vector<GridCell> cells;
    for (std::size_t w = 0; w < config.workloads.size(); ++w) {
        for (std::size_t k : config.cache_sizes) {
            for (std::uint64_t s = 0; s < config.seeds; ++s) cells.push_back({w, s, k});
        }
    }
    return cells;
}

std::vector<ResultRow> run_cell(const ExperimentConfig& config, const GridCell& cell) {
    const auto master = config.master_seed;
    const auto spec = WorkloadSpec::parse(config.workloads[cell.workload], config.length,
                                          mix_seed(master, {1, cell.workload, cell.seed}));
    const auto trace = generate(spec);
    const auto nu = compute_next_occurrence(trace);
    const auto opt_run = run(trace, nu, nullptr, "belady", cell.k, 0);
    const std::string trace_id = config.workloads[cell.workload] + "#" + std::to_string(cell.seed);

    struct Noisy {
        std::string name;
        PredictionTrace omega;
        LossSummary losses;
    };
    std::vector<Noisy> noisy;
    for (std::size_t n = 0; n < config.noise.size(); ++n) {
        auto model = NoiseModel::parse(config.noise[n]);
        model.seed = mix_seed(master, {2, cell.workload, cell.seed, n});
        auto omega = generate_predictions(trace, nu, model);
        auto losses = compute_losses(nu, omega);
        noisy.push_back({config.noise[n], std::move(omega), std::move(losses)});
    }

    std::vector<ResultRow> rows;
    for (std::size_t p = 0; p < config.policies.size(); ++p) {
        const auto& expression = config.policies[p];
        const bool with_predictions = policy_needs_predictions(expression);
        const std::size_t variants = with_predictions ? noisy.size() : 1;
        for (std::size_t n = 0; n < variants; ++n) {
            const Noisy* input = with_predictions ? &noisy[n] : nullptr;
            const auto started = std::chrono::steady_clock::now();
            auto policy = make_policy(expression);
            auto result = run(trace, nu, input ? &input->omega : nullptr, *policy, cell.k,
                              mix_seed(master, {3, cell.workload, cell.seed, cell.k, p, n}));
            result.policy = expression;

            ResultRow row;
            row.trace_id = trace_id;
            row.policy = expression;
            row.k = cell.k;
            row.noise = input ? input->name : "none";
            row.seed = cell.seed;
            row.misses = result.misses;
            row.opt = opt_run.misses;
            row.eta = input ? input->losses.eta_total : 0.0;
            row.ratio = static_cast<double>(row.misses) / static_cast<double>(std::max<std::uint64_t>(row.opt, 1));
            row.workload_index = cell.workload;
            row.policy_index = p;
            row.noise_index = input ? n : 0;
            row.inversions = input ? input->losses.inversions_total : 0;
            row.leg_misses = result.leg_misses;
            if (config.verify) {
                const auto graph = build_eviction_graph(trace, nu, result, cell.k);
                const auto report = check_bounds(result, graph, input ? &input->losses : nullptr, cell.k);
                for (const auto& line : report.lines) {
                    if (!line.passed) row.failed_bounds.push_back(line.name);
                }
                row.bounds_passed = row.failed_bounds.empty();
            }
            if (config.timing) {
                row.runtime_ms =
                    std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::vector<ResultRow> run_grid_serial(const ExperimentConfig& config) {
    std::vector<ResultRow> rows;
    for (const auto& cell : expand_grid(config)) {
        auto part = run_cell(config, cell);
        rows.insert(rows.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    return rows;
}

std::vector<ResultRow> run_grid_parallel(const ExperimentConfig& config, int threads) {
    const auto cells = expand_grid(config);
    std::vector<std::vector<ResultRow>> parts(cells.size());
    std::vector<std::exception_ptr> errors(cells.size());
    const int workers = threads > 0 ? threads : omp_get_max_threads();
    const auto count = static_cast<std::int64_t>(cells.size());

#pragma omp parallel for schedule(dynamic) num_threads(workers)
    for (std::int64_t i = 0; i < count; ++i) {
        try {
            parts[i] = run_cell(config, cells[i]);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }

    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    std::vector<ResultRow> rows;
    for (auto& part : parts) {
        rows.insert(rows.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    return rows;
}

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
    out << kCsvHeader << '\n';
    for (const auto& r : rows) {
        out << csv_field(r.trace_id) << ',' << csv_field(r.policy) << ',' << r.k << ',' << csv_field(r.noise) << ','
            << r.seed << ',' << r.misses << ',' << r.opt << ',' << format_double(r.eta) << ','
            << format_double(r.ratio) << ',';
        if (r.bounds_passed) out << (*r.bounds_passed ? "true" : "false");
        out << ',' << format_double(r.runtime_ms) << '\n';
    }
}

void write_csv_file(const std::string& path, const std::vector<ResultRow>& rows) {
    const std::string partial = path + ".partial";
    try {
        {
            std::ofstream out(partial, std::ios::binary | std::ios::trunc);
            if (!out) throw std::runtime_error("cannot write " + partial);
            write_csv(out, rows);
            out.flush();
            if (!out) throw std::runtime_error("write to " + partial + " failed");
        }
        std::filesystem::rename(partial, path);
    } catch (...) {
        std::error_code ignored;
        std::filesystem::remove(partial, ignored);
        throw;
    }
}

std::vector<PolicySummary> summarize(const std::vector<ResultRow>& rows) {
    std::map<std::size_t, PolicySummary> by_policy;
    for (const auto& r : rows) {
        auto& s = by_policy[r.policy_index];
        s.policy = r.policy;
        ++s.rows;
        s.mean_ratio += r.ratio;
        s.max_ratio = std::max(s.max_ratio, r.ratio);
        if (r.bounds_passed && !*r.bounds_passed) ++s.failed;
    }
    std::vector<PolicySummary> out;
    for (auto& [index, s] : by_policy) {
        s.mean_ratio /= static_cast<double>(s.rows);
        out.push_back(std::move(s));
    }
    return out;
}

void write_summary_table(std::ostream& out, const std::vector<PolicySummary>& summary) {
    std::size_t width = 6;
    for (const auto& s : summary) width = std::max(width, s.policy.size());
    out << std::left << std::setw(static_cast<int>(width)) << "policy" << "  " << std::right << std::setw(8) << "rows"
        << std::setw(12) << "mean_ratio" << std::setw(12) << "max_ratio" << std::setw(8) << "failed" << '\n';
    out << std::fixed << std::setprecision(4);
    for (const auto& s : summary) {
        out << std::left << std::setw(static_cast<int>(width)) << s.policy << "  " << std::right << std::setw(8)
            << s.rows << std::setw(12) << s.mean_ratio << std::setw(12) << s.max_ratio << std::setw(8) << s.failed
            << '\n';
    }
    out << std::defaultfloat;
}

std::string summary_to_json(const std::vector<PolicySummary>& summary, const ExperimentConfig& config) {
    json doc;
    doc["master_seed"] = config.master_seed;
    doc["seeds"] = config.seeds;
    doc["length"] = config.length;
    doc["cache_sizes"] = config.cache_sizes;
    doc["workloads"] = config.workloads;
    doc["noise"] = config.noise;
    doc["verify"] = config.verify;
    auto& policies = doc["policies"] = json::array();
    std::size_t failed = 0;
    for (const auto& s : summary) {
        policies.push_back({{"policy", s.policy},
                            {"rows", s.rows},
                            {"mean_ratio", s.mean_ratio},
                            {"max_ratio", s.max_ratio},
                            {"failed", s.failed}});
        failed += s.failed;
    }
    doc["failed_rows"] = failed;
    return doc.dump(2);
}

std::vector<CurvePoint> aggregate_curve(const std::vector<ResultRow>& rows, const ExperimentConfig& config) {
    std::map<std::tuple<std::size_t, std::size_t, std::size_t, std::size_t>, CurvePoint> groups;
    for (const auto& r : rows) {
        auto& g = groups[{r.workload_index, r.k, r.policy_index, r.noise_index}];
        g.workload = config.workloads.at(r.workload_index);
        g.policy = r.policy;
        g.k = r.k;
        g.noise = r.noise;
        ++g.cells;
        const double opt = static_cast<double>(std::max<std::uint64_t>(r.opt, 1));
        g.mean_eta += r.eta;
        g.eta_over_opt += r.eta / opt;
        g.mean_ratio += r.ratio;
        g.max_ratio = std::max(g.max_ratio, r.ratio);
        g.sqrt_eta_over_k_opt += std::sqrt(r.eta / (static_cast<double>(r.k) * opt));
    }
    std::vector<CurvePoint> out;
    for (auto& [key, g] : groups) {
        const double n = static_cast<double>(g.cells);
        g.mean_eta /= n;
        g.eta_over_opt /= n;
        g.mean_ratio /= n;
        g.sqrt_eta_over_k_opt /= n;
        out.push_back(std::move(g));
    }
    return out;
}

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& points) {
    out << "workload,policy,k,noise,cells,mean_eta,eta_over_opt,mean_ratio,max_ratio,sqrt_eta_over_k_opt\n";
    for (const auto& p : points) {
        out << csv_field(p.workload) << ',' << csv_field(p.policy) << ',' << p.k << ',' << csv_field(p.noise) << ','
            << p.cells << ',' << format_double(p.mean_eta) << ',' << format_double(p.eta_over_opt) << ','
            << format_double(p.mean_ratio) << ',' << format_double(p.max_ratio) << ','
            << format_double(p.sqrt_eta_over_k_opt) << '\n';
    }
}

LinearFit fit_trend(const std::vector<CurvePoint>& points, const std::string& policy) {
    std::vector<double> x, y;
    for (const auto& p : points) {
        if (p.policy != policy) continue;
        x.push_back(p.sqrt_eta_over_k_opt);
        y.push_back(p.mean_ratio);
    }
    return fit_line(x, y);
}

bool all_bounds_passed(const std::vector<ResultRow>& rows) {
    for (const auto& r : rows) {
        if (r.bounds_passed && !*r.bounds_passed) return false;
    }
    return true;
}

}  // namespace cachesim
