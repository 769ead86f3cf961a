#include "riskplan/dataset.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "riskplan/threads.hpp"

namespace riskplan {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string map_filename(const std::string& env_id, double delta) {
    return env_id + "_d" + std::to_string(static_cast<int>(std::lround(delta * 1000))) + ".ppm";
}

}  // namespace

std::pair<Point, Point> sample_query_pair(const Environment& env, const RiskConstraintSet& cs,
                                          double min_dist, Rng& rng) {
    auto safe_point = [&]() -> Point {
        for (int draw = 0; draw < 8192; ++draw) {
            const Point p = env.sample_point(rng);
            if (verify_point(cs, p)) return p;
        }
        throw std::runtime_error("could not sample a Safe point");
    };
    for (int attempt = 0; attempt < 64; ++attempt) {
        const Point a = safe_point();
        const Point b = safe_point();
        if (distance(a, b) >= min_dist) return {a, b};
    }
    throw std::runtime_error("could not sample a Safe start/goal pair");
}

GenDatasetSummary gen_dataset(const std::vector<NamedEnv>& envs, const GenDatasetOptions& opts,
                              const std::string& out_dir) {
    fs::create_directories(fs::path(out_dir) / "maps");
    GenDatasetSummary summary;

    struct Job {
        int env_idx;
        double delta;
        std::string map_rel;
        Point start, goal;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;

    for (size_t e = 0; e < envs.size(); ++e) {
        const Environment& env = envs[e].env;
        for (double delta : opts.deltas) {
            const RiskConstraintSet cs = build_constraints(env, delta);
            const std::string rel = std::string("maps/") + map_filename(envs[e].id, delta);
            write_ppm(rasterize(cs, opts.image_size, opts.image_size),
                      (fs::path(out_dir) / rel).string());
            ++summary.maps;
            const double min_dist = opts.min_pair_dist_factor * env.bounds.diagonal();
            // pair sampling stream is fixed per (env, delta)
            Rng pair_rng = make_rng(derive_seed(
                opts.seed, 0x9A1ULL + e * 1000 + static_cast<std::uint64_t>(delta * 1000)));
            for (int q = 0; q < opts.pairs_per_env; ++q) {
                const auto [start, goal] = sample_query_pair(env, cs, min_dist, pair_rng);
                Job job;
                job.env_idx = static_cast<int>(e);
                job.delta = delta;
                job.map_rel = rel;
                job.start = start;
                job.goal = goal;
                job.seed = derive_seed(opts.seed, jobs.size());
                jobs.push_back(job);
            }
        }
    }

    // One expert query per job; workers own private generators, results land
    // in input order.
    std::vector<std::string> lines(jobs.size());
    std::vector<char> ok(jobs.size(), 0);
    parallel_for(jobs.size(), [&](size_t j) {
        const Job& job = jobs[j];
        const Environment& env = envs[job.env_idx].env;
        PlannerConfig cfg = opts.planner;
        cfg.seed = job.seed;
        Rng rng = make_rng(job.seed);
        const PlanReport rep = rrt_sos_plan(env, job.delta, job.start, job.goal, cfg, rng);
        if (rep.status != PlanStatus::Solved || !rep.path || rep.path->waypoints.size() < 2) {
            if (opts.verbose)
                std::cerr << "gen-dataset: skipping unsolved query " << j << " ("
                          << to_string(rep.status) << ")\n";
            return;
        }
        const auto& w = rep.path->waypoints;
        std::vector<double> cost_to_go(w.size(), 0.0);
        for (size_t i = w.size() - 1; i-- > 0;)
            cost_to_go[i] = cost_to_go[i + 1] + distance(w[i], w[i + 1]);
        std::ostringstream os;
        for (size_t q = 0; q + 1 < w.size(); ++q) {
            const Point xt = normalize_point(env.bounds, w[q]);
            const Point xn = normalize_point(env.bounds, w[q + 1]);
            const Point gl = normalize_point(env.bounds, job.goal);
            ordered_json rec;
            rec["env"] = envs[job.env_idx].id;
            rec["delta"] = job.delta;
            rec["map"] = job.map_rel;
            rec["bounds"] = {env.bounds.xmin, env.bounds.xmax, env.bounds.ymin, env.bounds.ymax};
            rec["x_t"] = {xt.x, xt.y};
            rec["x_goal"] = {gl.x, gl.y};
            rec["x_next"] = {xn.x, xn.y};
            rec["cost_to_go"] = cost_to_go[q];
            os << rec.dump() << "\n";
        }
        lines[j] = os.str();
        ok[j] = 1;
    });

    std::ofstream out(fs::path(out_dir) / "dataset.jsonl");
    if (!out) throw std::runtime_error("cannot write dataset to " + out_dir);
    for (size_t j = 0; j < jobs.size(); ++j) {
        ++summary.queries;
        if (!ok[j]) continue;
        ++summary.solved;
        out << lines[j];
        for (char c : lines[j])
            if (c == '\n') ++summary.samples;
    }
    return summary;
}

TrainingSet load_dataset(const std::string& dir) {
    std::ifstream in(fs::path(dir) / "dataset.jsonl");
    if (!in) throw std::runtime_error("cannot open dataset.jsonl in " + dir);
    TrainingSet set;
    std::map<std::string, int> image_slot;
    bool first = true;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto rec = nlohmann::json::parse(line);
        const Bounds b{rec.at("bounds")[0], rec.at("bounds")[1], rec.at("bounds")[2],
                       rec.at("bounds")[3]};
        if (first) {
            set.normalization = b;
            first = false;
        } else if (!(b == set.normalization)) {
            throw std::runtime_error("dataset mixes workspace bounds (line " +
                                     std::to_string(line_no) + ")");
        }
        const std::string map_rel = rec.at("map").get<std::string>();
        auto it = image_slot.find(map_rel);
        if (it == image_slot.end()) {
            const MapImage img = read_ppm((fs::path(dir) / map_rel).string());
            if (set.images.empty()) {
                set.image_size = img.width;
            } else if (img.width != set.image_size || img.height != set.image_size) {
                throw std::runtime_error("dataset mixes map image sizes");
            }
            it = image_slot.emplace(map_rel, static_cast<int>(set.images.size())).first;
            set.images.push_back(img);
        }
        TrainingSample s;
        s.image_index = it->second;
        s.x_t = {rec.at("x_t")[0], rec.at("x_t")[1]};
        s.x_goal = {rec.at("x_goal")[0], rec.at("x_goal")[1]};
        s.delta = rec.at("delta").get<double>();
        s.x_next = {rec.at("x_next")[0], rec.at("x_next")[1]};
        s.cost_to_go = rec.at("cost_to_go").get<double>();
        set.samples.push_back(s);
    }
    if (set.samples.empty()) throw std::runtime_error("dataset is empty: " + dir);
    return set;
}

}  // namespace riskplan
