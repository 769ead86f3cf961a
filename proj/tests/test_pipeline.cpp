#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "riskplan/bench.hpp"
#include "riskplan/env_io.hpp"
#include "riskplan/envgen.hpp"
#include "test_util.hpp"

using namespace riskplan;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("environment files round trip") {
    for (const Environment& env :
         {circle_env(), ellipse_env(), heart_env(), ring_env(), cluttered_env(1)}) {
        const Environment back = parse_env_json(env_to_json(env));
        CHECK(back.bounds == env.bounds);
        REQUIRE(back.obstacles.size() == env.obstacles.size());
        for (size_t i = 0; i < env.obstacles.size(); ++i) {
            CHECK(back.obstacles[i].name == env.obstacles[i].name);
            CHECK(back.obstacles[i].poly == env.obstacles[i].poly);
        }
    }
}

TEST_CASE("shipped environment files parse to the generators") {
    const fs::path envs = fs::path(RISKPLAN_SOURCE_DIR) / "envs";
    const Environment circle = load_env((envs / "circle.json").string());
    REQUIRE(circle.obstacles.size() == 1);
    CHECK(circle.obstacles[0].poly == circle_env().obstacles[0].poly);

    const Environment heart = load_env((envs / "heart.json").string());
    CHECK(std::get<BetaDist>(heart.obstacles[0].dist.law()).alpha == 9.0);
    CHECK(heart.obstacles[0].poly.total_degree() == 5);

    CHECK(load_env((envs / "clutter_e.json").string()).obstacles.size() == 7);
}

TEST_CASE("environment schema violations carry JSON paths") {
    const char* negative_exponent = R"({
      "bounds": {"x": [-1, 1], "y": [-1, 1]},
      "obstacles": [{"name": "o", "terms": [{"x": -2, "y": 0, "w": 0, "c": 1.0}],
                     "dist": {"type": "uniform", "a": 0.3, "b": 0.4}}]})";
    CHECK_THROWS_WITH_AS(parse_env_json(negative_exponent),
                         doctest::Contains("/obstacles/0/terms/0"), EnvParseError);

    const char* unknown_field = R"({
      "bounds": {"x": [-1, 1], "y": [-1, 1]},
      "obstacles": [], "extra": 1})";
    CHECK_THROWS_WITH_AS(parse_env_json(unknown_field), doctest::Contains("unknown field"),
                         EnvParseError);

    const char* bad_uniform = R"({
      "bounds": {"x": [-1, 1], "y": [-1, 1]},
      "obstacles": [{"name": "o", "terms": [{"x": 0, "y": 0, "w": 1, "c": 1.0}],
                     "dist": {"type": "uniform", "a": 0.4, "b": 0.4}}]})";
    CHECK_THROWS_WITH_AS(parse_env_json(bad_uniform), doctest::Contains("/obstacles/0/dist"),
                         EnvParseError);

    const char* bad_beta = R"({
      "bounds": {"x": [-1, 1], "y": [-1, 1]},
      "obstacles": [{"name": "o", "terms": [{"x": 0, "y": 0, "w": 1, "c": 1.0}],
                     "dist": {"type": "beta", "alpha": -1.0, "beta": 0.5}}]})";
    CHECK_THROWS_AS(parse_env_json(bad_beta), EnvParseError);

    const char* bad_bounds = R"({"bounds": {"x": [1, -1], "y": [-1, 1]}, "obstacles": []})";
    CHECK_THROWS_WITH_AS(parse_env_json(bad_bounds), doctest::Contains("/bounds/x"),
                         EnvParseError);

    CHECK_THROWS_AS(load_env("/nonexistent/path.json"), EnvParseError);
}

TEST_CASE("dataset generation: decomposition, safety, determinism") {
    const fs::path dir_a = fresh_dir("riskplan_ds_a");
    const fs::path dir_b = fresh_dir("riskplan_ds_b");
    const std::vector<NamedEnv> envs{{"circle", circle_env()}};
    GenDatasetOptions opts;
    opts.deltas = {0.1, 0.5};
    opts.pairs_per_env = 3;
    opts.image_size = 16;
    opts.seed = 7;
    opts.planner.prm_nodes = 60;

    const GenDatasetSummary s1 = gen_dataset(envs, opts, dir_a.string());
    CHECK(s1.maps == 2);
    CHECK(s1.queries == 6);
    CHECK(s1.solved == 6);
    CHECK(s1.samples > 0);

    // identical seed, identical bytes
    const GenDatasetSummary s2 = gen_dataset(envs, opts, dir_b.string());
    CHECK(s2.samples == s1.samples);
    CHECK(slurp(dir_a / "dataset.jsonl") == slurp(dir_b / "dataset.jsonl"));
    CHECK(slurp(dir_a / "maps/circle_d100.ppm") == slurp(dir_b / "maps/circle_d100.ppm"));

    // expert decomposition: one sample per path edge
    const TrainingSet set = load_dataset(dir_a.string());
    CHECK(static_cast<int>(set.samples.size()) == s1.samples);
    CHECK(set.image_size == 16);
    CHECK(set.images.size() == 2);
    CHECK(set.normalization == envs[0].env.bounds);

    // no sample may sit outside the Safe zone at its risk level
    const RiskConstraintSet cs01 = build_constraints(envs[0].env, 0.1);
    const RiskConstraintSet cs05 = build_constraints(envs[0].env, 0.5);
    for (const auto& s : set.samples) {
        const RiskConstraintSet& cs = (s.delta == 0.1) ? cs01 : cs05;
        CHECK(verify_point(cs, denormalize_point(set.normalization, s.x_t)));
        CHECK(verify_point(cs, denormalize_point(set.normalization, s.x_next)));
        CHECK(s.x_t.x >= 0.0);
        CHECK(s.x_t.x <= 1.0);
    }

    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}

TEST_CASE("ten risk levels produce ten maps") {
    const fs::path dir = fresh_dir("riskplan_ds_ten");
    GenDatasetOptions opts;
    opts.deltas = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    opts.pairs_per_env = 1;
    opts.image_size = 16;
    opts.seed = 3;
    opts.planner.prm_nodes = 40;
    const GenDatasetSummary s = gen_dataset({{"circle", circle_env()}}, opts, dir.string());
    CHECK(s.maps == 10);
    int ppm_count = 0;
    for (const auto& e : fs::directory_iterator(dir / "maps"))
        if (e.path().extension() == ".ppm") ++ppm_count;
    CHECK(ppm_count == 10);
    fs::remove_all(dir);
}

TEST_CASE("expert paths decompose into one sample per edge") {
    const std::vector<NamedEnv> envs{{"circle", circle_env()}};
    GenDatasetOptions opts;
    opts.deltas = {0.1};
    opts.pairs_per_env = 1;
    opts.image_size = 16;
    opts.seed = 11;
    opts.planner.prm_nodes = 60;
    const fs::path dir = fresh_dir("riskplan_ds_one");
    const GenDatasetSummary s = gen_dataset(envs, opts, dir.string());
    REQUIRE(s.solved == 1);

    // replay the identical expert query
    const RiskConstraintSet cs = build_constraints(envs[0].env, 0.1);
    Rng pair_rng = make_rng(derive_seed(opts.seed, 0x9A1ULL + 0 * 1000 + 100));
    const auto [start, goal] = sample_query_pair(
        envs[0].env, cs, 0.5 * envs[0].env.bounds.diagonal(), pair_rng);
    PlannerConfig cfg = opts.planner;
    cfg.seed = derive_seed(opts.seed, 0);
    Rng rng = make_rng(cfg.seed);
    const PlanReport rep = rrt_sos_plan(envs[0].env, 0.1, start, goal, cfg, rng);
    REQUIRE(rep.status == PlanStatus::Solved);
    CHECK(static_cast<size_t>(s.samples) == rep.path->waypoints.size() - 1);
    fs::remove_all(dir);
}

TEST_CASE("bench aggregates are internally consistent and fail closed") {
    const std::vector<NamedEnv> envs{{"circle", circle_env()}};
    std::vector<BenchQuery> queries;
    for (int i = 0; i < 4; ++i) {
        BenchQuery q;
        q.env_id = "circle";
        q.delta = 0.1;
        q.start = {-0.9, -0.85 + 0.02 * i};
        q.goal = {0.9, 0.85};
        q.seed = derive_seed(400, i);
        queries.push_back(q);
    }
    BenchOptions opts;
    opts.algos = {"rrt-sos"};
    opts.mc_n_param = 4000;
    opts.planner.prm_nodes = 60;
    const BenchReport rep = run_bench(envs, queries, opts, nullptr);
    REQUIRE(rep.rows.size() == 4);
    CHECK(rep.safety_violations == 0);
    CHECK(rep.per_algo.at("rrt-sos").success_rate == 1.0);

    // aggregates recomputed from rows match the stored ones
    const BenchAggregate again = aggregate_rows(rep.rows, "rrt-sos");
    const BenchAggregate& stored = rep.per_algo.at("rrt-sos");
    CHECK(std::abs(again.mean_time_s - stored.mean_time_s) <= 1e-9);
    CHECK(std::abs(again.mean_length - stored.mean_length) <= 1e-9);
    CHECK(std::abs(again.std_length - stored.std_length) <= 1e-9);
    CHECK(again.queries == stored.queries);

    CHECK_THROWS_AS(run_bench(envs, queries, BenchOptions{{"nr-rrt"}}, nullptr),
                    std::invalid_argument);
    BenchOptions bad;
    bad.algos = {"astar"};
    CHECK_THROWS_AS(run_bench(envs, queries, bad, nullptr), std::invalid_argument);
}

TEST_CASE("path serialization keeps the normative field order") {
    PlanReport rep;
    rep.status = PlanStatus::Solved;
    rep.path = Path::from_waypoints({{0, 0}, {1, 1}});
    const std::string text = path_json(rep, 0.1, 42).dump();
    const auto p_way = text.find("\"waypoints\"");
    const auto p_len = text.find("\"length\"");
    const auto p_delta = text.find("\"delta\"");
    const auto p_status = text.find("\"status\"");
    const auto p_seed = text.find("\"seed\"");
    REQUIRE(p_way != std::string::npos);
    CHECK(p_way < p_len);
    CHECK(p_len < p_delta);
    CHECK(p_delta < p_status);
    CHECK(p_status < p_seed);

    PlanReport none;
    none.status = PlanStatus::Infeasible;
    const auto doc = path_json(none, 0.2, 7);
    CHECK(doc.at("waypoints").empty());
    CHECK(doc.at("length").get<double>() == 0.0);
    CHECK(doc.at("status").get<std::string>() == "infeasible");
}

TEST_CASE("query files expand per-query seeds from the master seed") {
    const fs::path dir = fresh_dir("riskplan_queries");
    const fs::path qf = dir / "q.json";
    {
        std::ofstream f(qf);
        f << R"({"seed": 5, "queries": [
            {"env": "circle", "delta": 0.1, "start": [-0.9, -0.9], "goal": [0.9, 0.9]},
            {"env": "circle", "delta": 0.5, "start": [-0.9, 0.0], "goal": [0.9, 0.0], "seed": 77}
        ]})";
    }
    const auto queries = load_queries(qf.string());
    REQUIRE(queries.size() == 2);
    CHECK(queries[0].seed == derive_seed(5, 0));
    CHECK(queries[1].seed == 77);
    CHECK(queries[1].delta == 0.5);
    fs::remove_all(dir);
}
