#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cachesim/experiment.hpp"

using namespace cachesim;

namespace {

std::string short_trace_file() {
    const auto path = std::filesystem::temp_directory_path() / "cachesim_experiment_trace.txt";
    std::ofstream out(path);
    out << "a\nb\nc\na\nc\n";
    return path.string();
}

ExperimentConfig small_sweep() {
    ExperimentConfig config;
    config.workloads = {"uniform(30)", "zipf(40,1.1)", "cyclic(12)"};
    config.length = 300;
    config.cache_sizes = {2, 5};
    config.policies = {"lru", "marker", "blind-oracle", "alternating-oracle", "combine-det(blind-oracle,lru)"};
    config.noise = {"exact", "additive-uniform(10)", "inversion-swaps(20)"};
    config.seeds = 3;
    config.master_seed = 99;
    config.verify = true;
    return config;
}

std::string csv_of(const std::vector<ResultRow>& rows) {
    std::ostringstream out;
    write_csv(out, rows);
    return out.str();
}

std::string config_error(const std::string& json) {
    try {
        parse_config(json);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST(Simulate, ShortTraceRows) {
    ExperimentConfig config;
    config.workloads = {"file(" + short_trace_file() + ")"};
    config.cache_sizes = {2};
    config.policies = {"lru", "belady"};
    config.verify = true;
    const auto rows = run_grid_serial(config);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].misses, 4u);
    EXPECT_EQ(rows[0].opt, 3u);
    EXPECT_DOUBLE_EQ(rows[0].ratio, 4.0 / 3.0);
    EXPECT_EQ(rows[1].misses, 3u);
    EXPECT_DOUBLE_EQ(rows[1].ratio, 1.0);
    EXPECT_EQ(rows[0].noise, "none");
    EXPECT_TRUE(all_bounds_passed(rows));
}

TEST(Simulate, RowsPerCell) {
    const auto config = small_sweep();
    const auto rows = run_grid_serial(config);
    // 2 policies without predictions + 3 with predictions x 3 noise models.
    EXPECT_EQ(rows.size(), 3u * 2u * 3u * (2u + 3u * 3u));
    for (const auto& r : rows) {
        ASSERT_TRUE(r.bounds_passed.has_value());
        EXPECT_TRUE(*r.bounds_passed) << r.trace_id << " " << r.policy;
        EXPECT_GE(r.misses, r.opt);
        EXPECT_GE(r.ratio, 1.0);
        if (r.policy == "blind-oracle" && r.noise == "exact") EXPECT_EQ(r.ratio, 1.0);
    }
}

TEST(Simulate, ParallelMatchesSerial) {
    const auto config = small_sweep();
    const auto serial = csv_of(run_grid_serial(config));
    EXPECT_EQ(csv_of(run_grid_parallel(config, 1)), serial);
    EXPECT_EQ(csv_of(run_grid_parallel(config, 4)), serial);
}

TEST(Simulate, CsvIsByteStable) {
    const auto config = small_sweep();
    EXPECT_EQ(csv_of(run_grid_parallel(config)), csv_of(run_grid_parallel(config)));
    auto other = config;
    other.master_seed = 100;
    EXPECT_NE(csv_of(run_grid_serial(other)), csv_of(run_grid_serial(config)));
}

TEST(Simulate, CsvHeaderAndQuoting) {
    ResultRow row;
    row.trace_id = "zipf(10,1)#0";
    row.policy = "lru";
    row.k = 2;
    row.noise = "none";
    row.misses = 3;
    row.opt = 2;
    row.ratio = 1.5;
    const auto text = csv_of({row});
    EXPECT_EQ(text, std::string(kCsvHeader) + "\n\"zipf(10,1)#0\",lru,2,none,0,3,2,0,1.5,,0\n");
}

TEST(Simulate, CsvFileReplacedAtomically) {
    const auto dir = std::filesystem::temp_directory_path();
    const auto path = (dir / "cachesim_rows.csv").string();
    write_csv_file(path, {});
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, kCsvHeader);
    EXPECT_FALSE(std::filesystem::exists(path + ".partial"));
    std::filesystem::remove(path);

    EXPECT_THROW(write_csv_file((dir / "no_such_dir" / "rows.csv").string(), {}), std::exception);
    EXPECT_FALSE(std::filesystem::exists(dir / "no_such_dir" / "rows.csv.partial"));
}

TEST(Config, ParsesFullDocument) {
    const auto config = parse_config(R"j({
        "workloads": ["uniform(10)", "cyclic(4)"],
        "length": 50,
        "cache_sizes": [2, 3],
        "policies": ["lru", "blind-oracle"],
        "noise": ["exact", "lognormal(0.5)"],
        "seeds": 4,
        "master_seed": 7,
        "verify": true,
        "output": {"csv": "out.csv", "summary": "summary.json", "curve": "curve.csv"}
    })j");
    EXPECT_EQ(config.workloads.size(), 2u);
    EXPECT_EQ(config.length, 50u);
    EXPECT_EQ(config.cache_sizes, (std::vector<std::size_t>{2, 3}));
    EXPECT_EQ(config.seeds, 4u);
    EXPECT_EQ(config.master_seed, 7u);
    EXPECT_TRUE(config.verify);
    EXPECT_EQ(config.csv_path, "out.csv");
    EXPECT_EQ(config.curve_path, "curve.csv");
}

TEST(Config, ErrorsNameTheField) {
    const std::string base = R"j("workloads": ["uniform(10)"], "cache_sizes": [2])j";
    EXPECT_EQ(config_error("{" + base + R"j(, "policies": []})j").rfind("policies:", 0), 0u);
    EXPECT_EQ(config_error("{" + base + R"j(, "policies": ["lru", "lur"]})j").rfind("policies[1]:", 0), 0u);
    EXPECT_EQ(config_error("{" + base + R"j(, "policies": ["lru"], "noise": ["bogus"]})j").rfind("noise[0]:", 0), 0u);
    EXPECT_EQ(config_error("{" + base + R"j(, "policies": ["blind-oracle"], "noise": []})j").rfind("noise:", 0), 0u);
    EXPECT_EQ(config_error(R"j({"workloads": ["zipf(1,0)"], "cache_sizes": [2], "policies": ["lru"]})j")
                  .rfind("workloads[0]:", 0),
              0u);
    EXPECT_EQ(config_error(R"j({"workloads": ["uniform(3)"], "cache_sizes": [0], "policies": ["lru"]})j")
                  .rfind("cache_sizes[0]:", 0),
              0u);
    EXPECT_EQ(config_error("{" + base + R"j(, "policies": ["lru"], "seeds": -1})j").rfind("seeds:", 0), 0u);
    EXPECT_EQ(config_error("{" + base + R"j(, "policies": ["lru"], "polices": ["lru"]})j").rfind("polices:", 0), 0u);
    EXPECT_EQ(config_error("{" + base + R"j(, "policies": ["lru"], "output": {"cvs": "x"}})j").rfind("output.cvs:", 0),
              0u);
    EXPECT_EQ(config_error("[1, 2]").rfind("config:", 0), 0u);
    EXPECT_EQ(config_error("{").rfind("config:", 0), 0u);
}

TEST(Config, EnvironmentOverridesMasterSeed) {
    ExperimentConfig config = small_sweep();
    ::setenv(kMasterSeedEnv, "4242", 1);
    apply_seed_override(config);
    EXPECT_EQ(config.master_seed, 4242u);
    ::setenv(kMasterSeedEnv, "nope", 1);
    EXPECT_THROW(apply_seed_override(config), ConfigError);
    ::unsetenv(kMasterSeedEnv);
    config.master_seed = 5;
    apply_seed_override(config);
    EXPECT_EQ(config.master_seed, 5u);
}

TEST(SweepEta, CurveAggregatesSeeds) {
    ExperimentConfig config;
    config.workloads = {"zipf(60,1.0)"};
    config.length = 400;
    config.cache_sizes = {5};
    config.policies = {"blind-oracle", "alternating-oracle"};
    config.noise = {"exact", "additive-uniform(4)", "additive-uniform(32)", "additive-uniform(256)"};
    config.seeds = 6;
    const auto rows = run_grid_serial(config);
    const auto curve = aggregate_curve(rows, config);
    ASSERT_EQ(curve.size(), 8u);
    double previous_eta = -1;
    for (const auto& p : curve) {
        EXPECT_EQ(p.cells, 6u);
        EXPECT_LE(p.mean_ratio, p.max_ratio);
        if (p.policy == "blind-oracle") {
            if (p.noise == "exact") {
                EXPECT_EQ(p.mean_eta, 0.0);
                EXPECT_EQ(p.mean_ratio, 1.0);
            }
            EXPECT_GE(p.mean_eta, previous_eta);
            previous_eta = p.mean_eta;
        }
    }
    std::ostringstream out;
    write_curve_csv(out, curve);
    EXPECT_EQ(out.str().rfind("workload,policy,k,noise,cells,mean_eta,eta_over_opt,mean_ratio,max_ratio,"
                              "sqrt_eta_over_k_opt\n",
                              0),
              0u);
    EXPECT_NO_THROW(fit_trend(curve, "alternating-oracle"));
}

TEST(Summary, PerPolicyAggregates) {
    const auto config = small_sweep();
    const auto rows = run_grid_serial(config);
    const auto summary = summarize(rows);
    ASSERT_EQ(summary.size(), config.policies.size());
    for (std::size_t i = 0; i < summary.size(); ++i) {
        EXPECT_EQ(summary[i].policy, config.policies[i]);
        EXPECT_GE(summary[i].max_ratio, summary[i].mean_ratio);
        EXPECT_EQ(summary[i].failed, 0u);
    }
    const auto json = summary_to_json(summary, config);
    EXPECT_NE(json.find("\"failed_rows\": 0"), std::string::npos);
    std::ostringstream table;
    write_summary_table(table, summary);
    EXPECT_NE(table.str().find("alternating-oracle"), std::string::npos);
}
