// riskplan: risk-bounded path planning in uncertain polynomial environments.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "riskplan/bench.hpp"
#include "riskplan/env_io.hpp"

namespace fs = std::filesystem;
using namespace riskplan;

namespace {

Point parse_point(const std::string& s) {
    const auto comma = s.find(',');
    if (comma == std::string::npos) throw CLI::ValidationError("expected 'x,y': " + s);
    return {std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1))};
}

std::pair<Point, Point> parse_edge(const std::string& s) {
    const auto colon = s.find(':');
    if (colon == std::string::npos)
        throw CLI::ValidationError("expected 'x1,y1:x2,y2': " + s);
    return {parse_point(s.substr(0, colon)), parse_point(s.substr(colon + 1))};
}

std::pair<int, int> parse_size(const std::string& s) {
    const auto x = s.find('x');
    if (x == std::string::npos) throw CLI::ValidationError("expected 'WxH': " + s);
    return {std::stoi(s.substr(0, x)), std::stoi(s.substr(x + 1))};
}

std::vector<double> parse_deltas(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    if (out.empty()) throw CLI::ValidationError("no risk levels given");
    return out;
}

std::vector<std::string> parse_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    return out;
}

std::vector<NamedEnv> load_env_dir(const std::string& dir) {
    std::vector<NamedEnv> envs;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".json") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) envs.push_back({f.stem().string(), load_env(f.string())});
    if (envs.empty()) throw std::runtime_error("no environment files in " + dir);
    return envs;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"risk-bounded path planning in uncertain polynomial environments"};
    app.require_subcommand(1);

    // --- rasterize ---
    std::string r_env, r_out, r_size = "256x256";
    double r_delta = 0.1;
    auto* rast = app.add_subcommand("rasterize", "render the risk contours map as a P6 PPM");
    rast->add_option("--env", r_env, "environment JSON file")->required();
    rast->add_option("--delta", r_delta, "risk level in [0,1]")->required();
    rast->add_option("--size", r_size, "image size WxH (default 256x256)");
    rast->add_option("--out", r_out, "output PPM path")->required();

    // --- verify ---
    std::string v_env, v_edge;
    double v_delta = 0.1;
    auto* verify = app.add_subcommand("verify", "certify a straight-line edge at a risk level");
    verify->add_option("--env", v_env, "environment JSON file")->required();
    verify->add_option("--delta", v_delta, "risk level in [0,1]")->required();
    verify->add_option("--edge", v_edge, "edge as x1,y1:x2,y2")->required();

    // --- plan ---
    std::string p_algo = "rrt-sos", p_env, p_start, p_goal, p_model, p_out, p_overlay;
    double p_delta = 0.1;
    std::uint64_t p_seed = 0;
    PlannerConfig p_cfg;
    auto* plan = app.add_subcommand("plan", "plan a risk-bounded path");
    plan->add_option("--algo", p_algo, "rrt-sos or nr-rrt")->required();
    plan->add_option("--env", p_env, "environment JSON file")->required();
    plan->add_option("--delta", p_delta, "risk level in [0,1]")->required();
    plan->add_option("--start", p_start, "start as x,y")->required();
    plan->add_option("--goal", p_goal, "goal as x,y")->required();
    plan->add_option("--seed", p_seed, "planner seed")->required();
    plan->add_option("--model", p_model, "weights file (required for nr-rrt)");
    plan->add_option("--out", p_out, "output path JSON")->required();
    plan->add_option("--overlay", p_overlay, "optional overlay PPM");
    plan->add_option("--iterations", p_cfg.max_iterations, "bidirectional iteration budget");
    plan->add_option("--replan-rounds", p_cfg.max_replan_rounds, "neural replanning rounds");
    plan->add_option("--time-budget", p_cfg.time_budget_s, "wall-clock budget in seconds");
    plan->add_option("--prm-nodes", p_cfg.prm_nodes, "PRM refinement sample count");

    // --- gen-dataset ---
    std::string g_envs, g_out, g_deltas = "0.1";
    GenDatasetOptions g_opts;
    auto* gen = app.add_subcommand("gen-dataset", "generate expert demonstrations with RRT-SOS");
    gen->add_option("--envs", g_envs, "directory of environment JSON files")->required();
    gen->add_option("--deltas", g_deltas, "comma-separated risk levels");
    gen->add_option("--pairs", g_opts.pairs_per_env, "start/goal pairs per (env, delta)")
        ->required();
    gen->add_option("--seed", g_opts.seed, "master seed")->required();
    gen->add_option("--out", g_out, "output directory")->required();
    gen->add_option("--size", g_opts.image_size, "map image size (default 64)");
    gen->add_option("--time-budget", g_opts.planner.time_budget_s, "per-query budget in seconds");

    // --- train ---
    std::string t_dataset, t_out;
    TrainOptions t_opts;
    auto* tr = app.add_subcommand("train", "train the neural sampler on a dataset");
    tr->add_option("--dataset", t_dataset, "dataset directory")->required();
    tr->add_option("--epochs", t_opts.epochs, "training epochs")->required();
    tr->add_option("--seed", t_opts.seed, "training seed")->required();
    tr->add_option("--out", t_out, "output weights file")->required();
    tr->add_option("--batch", t_opts.batch_size, "batch size (default 64)");
    tr->add_option("--lr", t_opts.adam.lr, "learning rate (default 4e-4)");

    // --- bench ---
    std::string b_envs, b_queries, b_model, b_out, b_algos = "rrt-sos";
    BenchOptions b_opts;
    auto* bench = app.add_subcommand("bench", "benchmark planners over a query set");
    bench->add_option("--envs", b_envs, "directory of environment JSON files")->required();
    bench->add_option("--queries", b_queries, "query JSON file")->required();
    bench->add_option("--algos", b_algos, "comma-separated algorithms");
    bench->add_option("--model", b_model, "weights file (required for nr-rrt)");
    bench->add_option("--out", b_out, "output report JSON")->required();
    bench->add_option("--mc-draws", b_opts.mc_n_param, "Monte Carlo draws per edge");
    bench->add_option("--time-budget", b_opts.planner.time_budget_s, "per-query budget in seconds");

    CLI11_PARSE(app, argc, argv);

    try {
        if (rast->parsed()) {
            const Environment env = load_env(r_env);
            const auto [w, h] = parse_size(r_size);
            write_ppm(rasterize(build_constraints(env, r_delta), w, h), r_out);
            std::cout << "wrote " << r_out << "\n";
            return 0;
        }

        if (verify->parsed()) {
            const Environment env = load_env(v_env);
            const RiskConstraintSet cs = build_constraints(env, v_delta);
            const auto [u, v] = parse_edge(v_edge);
            const EdgeCertificate cert = verify_edge(cs, u, v);
            std::cout << "edge (" << u.x << ", " << u.y << ") -> (" << v.x << ", " << v.y
                      << ") at delta " << v_delta << ": "
                      << (cert.verdict ? "SAFE" : "UNSAFE") << "\n";
            for (const auto& m : cert.margins)
                std::cout << "  " << m.obstacle << " g" << m.k
                          << " min endpoint value: " << m.min_endpoint_value << "\n";
            if (cert.rejected_constraint)
                std::cout << "  rejected by " << cert.rejected_constraint->first << " g"
                          << cert.rejected_constraint->second << "\n";
            return cert.verdict ? 0 : 1;
        }

        if (plan->parsed()) {
            const Environment env = load_env(p_env);
            const Point start = parse_point(p_start), goal = parse_point(p_goal);
            p_cfg.seed = p_seed;
            Rng rng = make_rng(p_seed);
            PlanReport rep;
            if (p_algo == "rrt-sos") {
                rep = rrt_sos_plan(env, p_delta, start, goal, p_cfg, rng);
            } else if (p_algo == "nr-rrt") {
                if (p_model.empty()) throw std::runtime_error("nr-rrt requires --model");
                const ModelBundle model = load_model(p_model);
                rep = nr_rrt_plan(env, p_delta, start, goal, model, p_cfg, rng);
            } else {
                throw std::runtime_error("unknown algorithm: " + p_algo);
            }
            write_text(p_out, path_json(rep, p_delta, p_seed).dump(2) + "\n");
            std::cout << to_string(rep.status) << " in " << rep.wall_time_s << " s, "
                      << rep.ra_calls << " RA calls";
            if (rep.path) std::cout << ", length " << rep.path->total_length;
            std::cout << "\n";
            if (!p_overlay.empty()) {
                const std::vector<Point> wps =
                    rep.path ? rep.path->waypoints : std::vector<Point>{};
                write_ppm(render_overlay(env, p_delta, wps, 256, 256), p_overlay);
            }
            return rep.path ? 0 : 1;
        }

        if (gen->parsed()) {
            g_opts.deltas = parse_deltas(g_deltas);
            g_opts.verbose = true;
            const auto envs = load_env_dir(g_envs);
            const GenDatasetSummary s = gen_dataset(envs, g_opts, g_out);
            std::cout << "generated " << s.samples << " samples from " << s.solved << "/"
                      << s.queries << " solved queries across " << s.maps << " maps\n";
            return 0;
        }

        if (tr->parsed()) {
            const TrainingSet data = load_dataset(t_dataset);
            t_opts.verbose = true;
            const TrainResult result = train(data, t_opts);
            save_model(result.model, t_out);
            std::cout << "trained on " << data.samples.size() << " samples; validation mse "
                      << result.val_mse.front() << " -> " << result.val_mse.back() << "\n";
            return 0;
        }

        if (bench->parsed()) {
            b_opts.algos = parse_list(b_algos);
            const auto envs = load_env_dir(b_envs);
            const auto queries = load_queries(b_queries);
            ModelBundle model;
            const ModelBundle* model_ptr = nullptr;
            if (!b_model.empty()) {
                model = load_model(b_model);
                model_ptr = &model;
            }
            const BenchReport report = run_bench(envs, queries, b_opts, model_ptr);
            write_text(b_out, bench_report_json(report).dump(2) + "\n");
            for (const auto& [algo, agg] : report.per_algo)
                std::cout << algo << ": success " << 100.0 * agg.success_rate << "%, mean time "
                          << agg.mean_time_s << " s, mean length " << agg.mean_length
                          << ", fallback " << 100.0 * agg.fallback_rate << "%\n";
            if (report.safety_violations > 0) {
                std::cerr << "SAFETY VALIDATION FAILURES: " << report.safety_violations << "\n";
                return 2;
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
