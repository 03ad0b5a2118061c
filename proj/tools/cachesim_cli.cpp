// cachesim: command-line front end for simulation sweeps, certification and
// trace generation.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

#include "cachesim/analysis.hpp"
#include "cachesim/engine.hpp"
#include "cachesim/experiment.hpp"
#include "cachesim/util.hpp"
#include "cachesim/workload.hpp"

using namespace cachesim;

namespace {

constexpr int kExitBoundFailed = 1;
constexpr int kExitError = 2;

struct SweepFlags {
    std::string config_path;
    std::vector<std::string> workloads;
    std::vector<std::size_t> cache_sizes;
    std::vector<std::string> policies;
    std::vector<std::string> noise;
    std::optional<Time> length;
    std::optional<std::uint64_t> seeds;
    std::optional<std::uint64_t> master_seed;
    std::string csv_path;
    std::string summary_path;
    std::string curve_path;
    bool verify = false;
    bool timing = false;
    int threads = 0;
    bool serial = false;
};

void add_sweep_flags(CLI::App* cmd, SweepFlags& f) {
    cmd->add_option("-c,--config", f.config_path, "JSON experiment config");
    cmd->add_option("-w,--workload", f.workloads, "workload expression (overrides config)");
    cmd->add_option("-k,--cache-size", f.cache_sizes, "cache size (overrides config)");
    cmd->add_option("-p,--policy", f.policies, "policy expression (overrides config)");
    cmd->add_option("-n,--noise", f.noise, "noise model (overrides config)");
    cmd->add_option("--length", f.length, "trace length for generated workloads");
    cmd->add_option("--seeds", f.seeds, "seeds per (workload, k)");
    cmd->add_option("--master-seed", f.master_seed, "master seed (the environment variable wins)");
    cmd->add_option("--csv", f.csv_path, "result CSV path (default: standard output)");
    cmd->add_option("--summary", f.summary_path, "JSON summary path");
    cmd->add_flag("--verify", f.verify, "certify every run and check its bounds");
    cmd->add_flag("--timing", f.timing, "record wall time in runtime_ms (output is no longer byte-stable)");
    cmd->add_option("-j,--threads", f.threads, "worker threads (default: OpenMP default)");
    cmd->add_flag("--serial", f.serial, "use the serial grid runner");
}

ExperimentConfig build_config(const SweepFlags& f) {
    ExperimentConfig config;
    if (!f.config_path.empty()) config = load_config(f.config_path);
    if (!f.workloads.empty()) config.workloads = f.workloads;
    if (!f.cache_sizes.empty()) config.cache_sizes = f.cache_sizes;
    if (!f.policies.empty()) config.policies = f.policies;
    if (!f.noise.empty()) config.noise = f.noise;
    if (f.length) config.length = *f.length;
    if (f.seeds) config.seeds = *f.seeds;
    if (f.master_seed) config.master_seed = *f.master_seed;
    if (!f.csv_path.empty()) config.csv_path = f.csv_path;
    if (!f.summary_path.empty()) config.summary_path = f.summary_path;
    if (!f.curve_path.empty()) config.curve_path = f.curve_path;
    config.verify = config.verify || f.verify;
    config.timing = config.timing || f.timing;
    apply_seed_override(config);
    config.validate();
    return config;
}

std::vector<ResultRow> run_sweep(const ExperimentConfig& config, const SweepFlags& f) {
    return f.serial ? run_grid_serial(config) : run_grid_parallel(config, f.threads);
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

void emit_rows(const ExperimentConfig& config, const std::vector<ResultRow>& rows) {
    if (config.csv_path.empty()) {
        write_csv(std::cout, rows);
    } else {
        write_csv_file(config.csv_path, rows);
    }
}

void report_failures(const std::vector<ResultRow>& rows) {
    std::size_t shown = 0;
    for (const auto& r : rows) {
        if (!r.bounds_passed || *r.bounds_passed) continue;
        if (shown++ == 10) {
            std::cerr << "...\n";
            break;
        }
        std::cerr << "bound failed: " << r.trace_id << " " << r.policy << " k=" << r.k << " noise=" << r.noise << ":";
        for (const auto& name : r.failed_bounds) std::cerr << " [" << name << "]";
        std::cerr << '\n';
    }
}

int cmd_simulate(const SweepFlags& f) {
    const auto config = build_config(f);
    const auto rows = run_sweep(config, f);
    emit_rows(config, rows);
    const auto summary = summarize(rows);
    write_summary_table(config.csv_path.empty() ? std::cerr : std::cout, summary);
    if (!config.summary_path.empty()) write_text_file(config.summary_path, summary_to_json(summary, config) + "\n");
    report_failures(rows);
    return all_bounds_passed(rows) ? 0 : kExitBoundFailed;
}

int cmd_sweep_eta(const SweepFlags& f) {
    const auto config = build_config(f);
    const auto rows = run_sweep(config, f);
    if (!config.csv_path.empty()) write_csv_file(config.csv_path, rows);
    const auto curve = aggregate_curve(rows, config);
    if (config.curve_path.empty()) {
        write_curve_csv(std::cout, curve);
    } else {
        std::ofstream out(config.curve_path, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + config.curve_path);
        write_curve_csv(out, curve);
    }
    auto& log = config.curve_path.empty() ? std::cerr : std::cout;
    for (const auto& policy : config.policies) {
        if (!policy_needs_predictions(policy)) continue;
        std::size_t points = 0;
        for (const auto& p : curve) points += p.policy == policy;
        if (points < 2) continue;
        const auto fit = fit_trend(curve, policy);
        log << "fit " << policy << ": mean_ratio = " << format_double(fit.slope) << " * sqrt(eta/(k OPT)) + "
            << format_double(fit.intercept) << "  R^2=" << format_double(fit.r_squared) << '\n';
    }
    if (!config.summary_path.empty()) {
        write_text_file(config.summary_path, summary_to_json(summarize(rows), config) + "\n");
    }
    report_failures(rows);
    return all_bounds_passed(rows) ? 0 : kExitBoundFailed;
}

struct VerifyFlags {
    std::string trace_path;
    std::string workload;
    Time length = 1000;
    std::size_t k = 0;
    std::string policy;
    std::string noise;
    std::uint64_t seed = 0;
    bool json = false;
    std::string log_path;
};

int cmd_verify(const VerifyFlags& f) {
    if (f.trace_path.empty() == f.workload.empty()) throw std::invalid_argument("give exactly one of --trace or --workload");
    TraceFile input;
    if (!f.trace_path.empty()) {
        input = read_trace_file(f.trace_path);
    } else {
        input.trace = generate(WorkloadSpec::parse(f.workload, f.length, f.seed));
    }
    const auto nu = compute_next_occurrence(input.trace);
    std::optional<PredictionTrace> omega = input.predictions;
    if (!f.noise.empty()) {
        auto model = NoiseModel::parse(f.noise);
        model.seed = mix_seed(f.seed, {2});
        omega = generate_predictions(input.trace, nu, model);
    }
    if (!omega && policy_needs_predictions(f.policy)) {
        throw std::invalid_argument("policy '" + f.policy + "' needs predictions: use --noise or a trace with predictions");
    }
    auto result = run(input.trace, nu, omega ? &*omega : nullptr, f.policy, f.k, f.seed);
    const auto graph = build_eviction_graph(input.trace, nu, result, f.k);
    std::optional<LossSummary> losses;
    if (omega) losses = compute_losses(nu, *omega);
    const auto report = check_bounds(result, graph, losses ? &*losses : nullptr, f.k);

    if (f.json) {
        std::cout << report_to_json(report) << '\n';
    } else {
        std::cout << "OBJ " << result.misses << "\nOPT " << graph.opt << "\n|E| " << graph.edges.size() << '\n';
        if (losses) std::cout << "eta " << format_double(losses->eta_total) << "\nM " << losses->inversions_total << '\n';
        write_report_text(std::cout, report);
    }
    if (!f.log_path.empty()) {
        std::ofstream out(f.log_path, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + f.log_path);
        write_eviction_log(out, result.eviction_log, input.trace);
    }
    return report.all_passed() ? 0 : kExitBoundFailed;
}

int cmd_oracle(const std::string& trace_path, std::size_t k) {
    const auto input = read_trace_file(trace_path);
    const auto nu = compute_next_occurrence(input.trace);
    const auto exhaustive = brute_force_opt(input.trace, k);
    const auto belady = run(input.trace, nu, nullptr, "belady", k, 0).misses;
    std::cout << "brute_force belady\n" << exhaustive << ' ' << belady << '\n';
    return exhaustive == belady ? 0 : kExitBoundFailed;
}

int cmd_gen_trace(const std::string& workload, Time length, std::uint64_t seed, const std::string& noise,
                  const std::string& out_path) {
    const auto trace = generate(WorkloadSpec::parse(workload, length, seed));
    std::optional<PredictionTrace> omega;
    if (!noise.empty()) {
        auto model = NoiseModel::parse(noise);
        model.seed = mix_seed(seed, {2});
        omega = generate_predictions(trace, compute_next_occurrence(trace), model);
    }
    if (out_path.empty()) {
        write_trace(std::cout, trace, omega ? &*omega : nullptr);
    } else {
        std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + out_path);
        write_trace(out, trace, omega ? &*omega : nullptr);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cache eviction simulator with prediction-augmented policies"};
    app.require_subcommand(1);

    SweepFlags simulate_flags;
    auto* simulate = app.add_subcommand("simulate", "run a policy x workload x noise x seed grid");
    add_sweep_flags(simulate, simulate_flags);

    SweepFlags sweep_flags;
    auto* sweep = app.add_subcommand("sweep-eta", "aggregate ratios per noise level and fit the sqrt(eta/(k OPT)) trend");
    add_sweep_flags(sweep, sweep_flags);
    sweep->add_option("--curve", sweep_flags.curve_path, "curve CSV path (default: standard output)");

    VerifyFlags verify_flags;
    auto* verify = app.add_subcommand("verify", "certify one run and print its bound report");
    verify->add_option("--trace", verify_flags.trace_path, "trace file");
    verify->add_option("-w,--workload", verify_flags.workload, "workload expression");
    verify->add_option("--length", verify_flags.length, "length for generated workloads");
    verify->add_option("-k,--cache-size", verify_flags.k, "cache size")->required()->check(CLI::PositiveNumber);
    verify->add_option("-p,--policy", verify_flags.policy, "policy expression")->required();
    verify->add_option("-n,--noise", verify_flags.noise, "noise model for predictions");
    verify->add_option("-s,--seed", verify_flags.seed, "seed");
    verify->add_flag("--json", verify_flags.json, "print the report as JSON");
    verify->add_option("--eviction-log", verify_flags.log_path, "write the eviction log CSV");

    std::string oracle_trace;
    std::size_t oracle_k = 0;
    auto* oracle = app.add_subcommand("oracle", "exhaustive optimum next to the Belady value");
    oracle->add_option("--trace", oracle_trace, "trace file")->required();
    oracle->add_option("-k,--cache-size", oracle_k, "cache size")->required()->check(CLI::PositiveNumber);

    std::string gen_workload, gen_noise, gen_out;
    Time gen_length = 1000;
    std::uint64_t gen_seed = 0;
    auto* gen = app.add_subcommand("gen-trace", "write a generated trace in the text format");
    gen->add_option("-w,--workload", gen_workload, "workload expression")->required();
    gen->add_option("--length", gen_length, "trace length");
    gen->add_option("-s,--seed", gen_seed, "seed");
    gen->add_option("-n,--noise", gen_noise, "also write predictions from this noise model");
    gen->add_option("-o,--out", gen_out, "output path (default: standard output)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitError;
    }

    try {
        if (*simulate) return cmd_simulate(simulate_flags);
        if (*sweep) return cmd_sweep_eta(sweep_flags);
        if (*verify) return cmd_verify(verify_flags);
        if (*oracle) return cmd_oracle(oracle_trace, oracle_k);
        if (*gen) return cmd_gen_trace(gen_workload, gen_length, gen_seed, gen_noise, gen_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitError;
    }
    return kExitError;
}
