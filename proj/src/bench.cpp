#include "riskplan/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>

#include "riskplan/threads.hpp"

namespace riskplan {

namespace {

using ordered_json = nlohmann::ordered_json;

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return (n % 2) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

BenchAggregate aggregate_rows(const std::vector<BenchRow>& rows, const std::string& algo) {
    BenchAggregate agg;
    std::vector<double> times, lengths, ra;
    int fallbacks = 0, successes = 0;
    for (const auto& r : rows) {
        if (r.algo != algo) continue;
        ++agg.queries;
        if (r.success) {
            ++successes;
            times.push_back(r.time_s);
            lengths.push_back(r.length);
            if (r.fallback) ++fallbacks;
        }
        ra.push_back(static_cast<double>(r.ra_calls));
    }
    if (agg.queries == 0) return agg;
    agg.success_rate = static_cast<double>(successes) / agg.queries;
    agg.fallback_rate = static_cast<double>(fallbacks) / agg.queries;
    agg.mean_time_s = mean_of(times);
    agg.std_time_s = std_of(times);
    agg.median_time_s = median_of(times);
    agg.mean_length = mean_of(lengths);
    agg.std_length = std_of(lengths);
    agg.mean_ra_calls = mean_of(ra);
    return agg;
}

BenchReport run_bench(const std::vector<NamedEnv>& envs, const std::vector<BenchQuery>& queries,
                      const BenchOptions& opts, const ModelBundle* model) {
    for (const auto& algo : opts.algos)
        if (algo != "rrt-sos" && algo != "nr-rrt")
            throw std::invalid_argument("unknown algorithm: " + algo);
    if (std::find(opts.algos.begin(), opts.algos.end(), "nr-rrt") != opts.algos.end() && !model)
        throw std::invalid_argument("nr-rrt requires a model");

    auto env_of = [&](const std::string& id) -> const Environment& {
        for (const auto& e : envs)
            if (e.id == id) return e.env;
        throw std::invalid_argument("query references unknown environment: " + id);
    };

    BenchReport report;
    struct Work {
        const BenchQuery* query;
        std::string algo;
    };
    std::vector<Work> work;
    for (const auto& algo : opts.algos)
        for (const auto& q : queries) work.push_back({&q, algo});
    std::vector<BenchRow> rows(work.size());

    parallel_for(work.size(), [&](size_t i) {
        const BenchQuery& q = *work[i].query;
        const Environment& env = env_of(q.env_id);
        BenchRow row;
        row.algo = work[i].algo;
        row.env_id = q.env_id;
        row.delta = q.delta;
        row.seed = q.seed;
        PlannerConfig cfg = opts.planner;
        cfg.seed = q.seed;
        Rng rng = make_rng(q.seed);
        const PlanReport rep =
            (row.algo == "rrt-sos")
                ? rrt_sos_plan(env, q.delta, q.start, q.goal, cfg, rng)
                : nr_rrt_plan(env, q.delta, q.start, q.goal, *model, cfg, rng);
        row.status = to_string(rep.status);
        row.time_s = rep.wall_time_s;
        row.ra_calls = rep.ra_calls;
        row.fallback = rep.status == PlanStatus::SolvedByFallback;
        const bool solved =
            rep.status == PlanStatus::Solved || rep.status == PlanStatus::SolvedByFallback;
        if (solved && rep.path) {
            const RiskConstraintSet cs = build_constraints(env, q.delta);
            const bool certified = verify_path(cs, rep.path->waypoints);
            // independent Monte Carlo validation of each edge
            double max_risk = 0.0;
            bool risk_ok = true;
            Rng mc_rng = make_rng(derive_seed(q.seed, 0x3C0ULL + i));
            const auto& w = rep.path->waypoints;
            const double bound =
                q.delta + 4.0 * std::sqrt(q.delta * (1.0 - q.delta) /
                                          static_cast<double>(opts.mc_n_param));
            for (size_t k = 0; k + 1 < w.size(); ++k) {
                const double est =
                    mc_edge_risk(env, w[k], w[k + 1], opts.mc_n_param, opts.mc_n_pts, mc_rng);
                max_risk = std::max(max_risk, est);
                if (est > bound) risk_ok = false;
            }
            row.max_edge_risk = max_risk;
            row.waypoints = static_cast<int>(w.size());
            if (certified && risk_ok) {
                row.success = true;
                row.length = rep.path->total_length;
            } else {
                row.status = "validation_failed";
            }
        }
        rows[i] = std::move(row);
    });

    for (auto& row : rows) {
        if (row.status == "validation_failed") {
            ++report.safety_violations;
            std::cerr << "bench: SAFETY VALIDATION FAILED for " << row.algo << " on "
                      << row.env_id << " seed " << row.seed << "\n";
        }
        report.rows.push_back(std::move(row));
    }
    for (const auto& algo : opts.algos)
        report.per_algo[algo] = aggregate_rows(report.rows, algo);
    return report;
}

nlohmann::ordered_json bench_report_json(const BenchReport& report) {
    ordered_json doc;
    doc["algos"] = ordered_json::object();
    for (const auto& [algo, agg] : report.per_algo) {
        ordered_json a;
        a["queries"] = agg.queries;
        a["success_rate"] = agg.success_rate;
        a["fallback_rate"] = agg.fallback_rate;
        a["mean_time_s"] = agg.mean_time_s;
        a["std_time_s"] = agg.std_time_s;
        a["median_time_s"] = agg.median_time_s;
        a["mean_length"] = agg.mean_length;
        a["std_length"] = agg.std_length;
        a["mean_ra_calls"] = agg.mean_ra_calls;
        doc["algos"][algo] = std::move(a);
    }
    doc["safety_violations"] = report.safety_violations;
    doc["rows"] = ordered_json::array();
    for (const auto& r : report.rows) {
        ordered_json row;
        row["algo"] = r.algo;
        row["env"] = r.env_id;
        row["delta"] = r.delta;
        row["seed"] = r.seed;
        row["status"] = r.status;
        row["success"] = r.success;
        row["fallback"] = r.fallback;
        row["time_s"] = r.time_s;
        row["length"] = r.length;
        row["ra_calls"] = r.ra_calls;
        row["max_edge_risk"] = r.max_edge_risk;
        row["waypoints"] = r.waypoints;
        doc["rows"].push_back(std::move(row));
    }
    return doc;
}

std::vector<BenchQuery> load_queries(const std::string& file) {
    std::ifstream f(file);
    if (!f) throw std::runtime_error("cannot open query file: " + file);
    nlohmann::json doc;
    f >> doc;
    const std::uint64_t base_seed = doc.value("seed", 0ULL);
    if (!doc.contains("queries") || !doc.at("queries").is_array())
        throw std::runtime_error("query file must contain a 'queries' array");
    std::vector<BenchQuery> out;
    size_t idx = 0;
    for (const auto& q : doc.at("queries")) {
        BenchQuery bq;
        bq.env_id = q.at("env").get<std::string>();
        bq.delta = q.at("delta").get<double>();
        bq.start = {q.at("start")[0], q.at("start")[1]};
        bq.goal = {q.at("goal")[0], q.at("goal")[1]};
        bq.seed = q.contains("seed") ? q.at("seed").get<std::uint64_t>()
                                     : derive_seed(base_seed, idx);
        out.push_back(bq);
        ++idx;
    }
    return out;
}

nlohmann::ordered_json path_json(const PlanReport& report, double delta, std::uint64_t seed) {
    ordered_json doc;
    doc["waypoints"] = ordered_json::array();
    double length = 0.0;
    if (report.path) {
        for (const auto& p : report.path->waypoints) doc["waypoints"].push_back({p.x, p.y});
        length = report.path->total_length;
    }
    doc["length"] = length;
    doc["delta"] = delta;
    doc["status"] = to_string(report.status);
    doc["seed"] = seed;
    return doc;
}

}  // namespace riskplan
