// Benchmark harness: runs seeded queries under each algorithm, validates
// every returned path with the certificate and the Monte Carlo edge oracle,
// and aggregates timing/length/success statistics. Reporting is fail-closed:
// a path that does not validate is never reported as a solution.
#pragma once

#include <json.hpp>

#include <map>
#include <optional>

#include "riskplan/dataset.hpp"

namespace riskplan {

struct BenchQuery {
    std::string env_id;
    double delta = 0.1;
    Point start, goal;
    std::uint64_t seed = 0;
};

struct BenchOptions {
    std::vector<std::string> algos{"rrt-sos"};
    PlannerConfig planner;
    int mc_n_param = 100000;
    int mc_n_pts = 64;
    bool verbose = false;
};

struct BenchRow {
    std::string algo;
    std::string env_id;
    double delta = 0.0;
    std::uint64_t seed = 0;
    std::string status;
    bool success = false;   // solved, certificate-verified, risk-validated
    bool fallback = false;
    double time_s = 0.0;
    double length = 0.0;
    long ra_calls = 0;
    double max_edge_risk = 0.0;
    int waypoints = 0;
};

struct BenchAggregate {
    int queries = 0;
    double success_rate = 0.0;
    double fallback_rate = 0.0;
    double mean_time_s = 0.0, std_time_s = 0.0, median_time_s = 0.0;
    double mean_length = 0.0, std_length = 0.0;
    double mean_ra_calls = 0.0;
};

struct BenchReport {
    std::vector<BenchRow> rows;
    std::map<std::string, BenchAggregate> per_algo;
    int safety_violations = 0;
};

BenchAggregate aggregate_rows(const std::vector<BenchRow>& rows, const std::string& algo);

BenchReport run_bench(const std::vector<NamedEnv>& envs, const std::vector<BenchQuery>& queries,
                      const BenchOptions& opts, const ModelBundle* model);

nlohmann::ordered_json bench_report_json(const BenchReport& report);

std::vector<BenchQuery> load_queries(const std::string& file);

// Path result serialization: waypoints, length, delta, status, seed — in that
// field order.
nlohmann::ordered_json path_json(const PlanReport& report, double delta, std::uint64_t seed);

}  // namespace riskplan
