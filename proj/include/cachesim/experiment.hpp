#pragma once

// Sweep configuration, the grid runner (serial reference and OpenMP
// version) and the CSV / summary writers used by the CLI.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cachesim/analysis.hpp"
#include "cachesim/trace.hpp"
#include "cachesim/workload.hpp"

namespace cachesim {

/// Raised for invalid configuration documents; the message starts with the
/// offending field path, e.g. "policies[2]: unknown policy 'lur'".
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr const char* kMasterSeedEnv = "CACHESIM_MASTER_SEED";

struct ExperimentConfig {
    std::vector<std::string> workloads;  // WorkloadSpec expressions
    Time length = 1000;
    std::vector<std::size_t> cache_sizes;
    std::vector<std::string> policies;
    std::vector<std::string> noise{"exact"};
    std::uint64_t seeds = 1;
    std::uint64_t master_seed = 0;
    bool verify = false;
    bool timing = false;  // write real wall time into runtime_ms
    std::string csv_path;
    std::string summary_path;
    std::string curve_path;  // sweep-eta only

    /// Throws ConfigError.
    void validate() const;
};

/// Parses the JSON document described in the README. Unknown keys are
/// rejected so typos do not silently fall back to defaults.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

/// Replaces master_seed with the environment override when it is set.
void apply_seed_override(ExperimentConfig& config);

struct ResultRow {
    std::string trace_id;
    std::string policy;
    std::size_t k = 0;
    std::string noise;  // "none" for policies that ignore predictions
    std::uint64_t seed = 0;
    std::uint64_t misses = 0;
    std::uint64_t opt = 0;
    double eta = 0.0;
    double ratio = 0.0;
    std::optional<bool> bounds_passed;  // set when verify is on
    double runtime_ms = 0.0;

    // Not part of the CSV.
    std::size_t workload_index = 0;
    std::size_t policy_index = 0;
    std::size_t noise_index = 0;
    std::uint64_t inversions = 0;
    std::vector<std::uint64_t> leg_misses;
    std::vector<std::string> failed_bounds;
};

/// One grid cell: a trace (workload, seed) at one cache size. Every cell
/// produces the rows for all policies and noise models.
struct GridCell {
    std::size_t workload = 0;
    std::uint64_t seed = 0;
    std::size_t k = 0;
};

std::vector<GridCell> expand_grid(const ExperimentConfig& config);
std::vector<ResultRow> run_cell(const ExperimentConfig& config, const GridCell& cell);

/// Rows in grid order. Both versions return identical rows (runtime_ms
/// aside when timing is on).
std::vector<ResultRow> run_grid_serial(const ExperimentConfig& config);
std::vector<ResultRow> run_grid_parallel(const ExperimentConfig& config, int threads = 0);

inline constexpr const char* kCsvHeader =
    "trace_id,policy,k,noise,seed,misses,opt,eta,ratio,bounds_passed,runtime_ms";

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows);
/// Writes through a temporary file renamed into place; nothing is left
/// behind if writing fails.
void write_csv_file(const std::string& path, const std::vector<ResultRow>& rows);

struct PolicySummary {
    std::string policy;
    std::size_t rows = 0;
    double mean_ratio = 0.0;
    double max_ratio = 0.0;
    std::size_t failed = 0;  // rows with bounds_passed == false
};

std::vector<PolicySummary> summarize(const std::vector<ResultRow>& rows);
void write_summary_table(std::ostream& out, const std::vector<PolicySummary>& summary);
std::string summary_to_json(const std::vector<PolicySummary>& summary, const ExperimentConfig& config);

/// Seeds aggregated per (workload, policy, k, noise).
struct CurvePoint {
    std::string workload;
    std::string policy;
    std::size_t k = 0;
    std::string noise;
    std::size_t cells = 0;
    double mean_eta = 0.0;
    double eta_over_opt = 0.0;      // mean over seeds of eta / max(OPT, 1)
    double mean_ratio = 0.0;
    double max_ratio = 0.0;
    double sqrt_eta_over_k_opt = 0.0;  // mean over seeds of sqrt(eta / (k max(OPT, 1)))
};

std::vector<CurvePoint> aggregate_curve(const std::vector<ResultRow>& rows, const ExperimentConfig& config);
void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& points);
/// Least-squares fit of mean_ratio against sqrt_eta_over_k_opt over the
/// points of one policy.
LinearFit fit_trend(const std::vector<CurvePoint>& points, const std::string& policy);

bool all_bounds_passed(const std::vector<ResultRow>& rows);

}  // namespace cachesim
