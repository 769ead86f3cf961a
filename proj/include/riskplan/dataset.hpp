// Expert dataset generation: rasterize each (environment, risk level) map
// once, plan seeded RRT-SOS queries between random Safe start/goal pairs, and
// decompose every expert path into next-state training samples stored as
// JSON lines plus PPM map images.
#pragma once

#include <string>
#include <vector>

#include "riskplan/neural.hpp"

namespace riskplan {

struct NamedEnv {
    std::string id;
    Environment env;
};

struct GenDatasetOptions {
    std::vector<double> deltas{0.1};
    int pairs_per_env = 100;
    int image_size = 64;
    PlannerConfig planner;
    std::uint64_t seed = 0;
    double min_pair_dist_factor = 0.5;  // of the workspace diagonal
    bool verbose = false;
};

struct GenDatasetSummary {
    int queries = 0;
    int solved = 0;
    int samples = 0;
    int maps = 0;
};

// Writes <out_dir>/dataset.jsonl and <out_dir>/maps/*.ppm. Failed queries are
// skipped, not fatal.
GenDatasetSummary gen_dataset(const std::vector<NamedEnv>& envs, const GenDatasetOptions& opts,
                              const std::string& out_dir);

// Loads dataset.jsonl plus the referenced map images. All records must agree
// on workspace bounds and image size.
TrainingSet load_dataset(const std::string& dir);

// Safe start/goal pair at least min_dist apart; throws after too many
// rejections.
std::pair<Point, Point> sample_query_pair(const Environment& env, const RiskConstraintSet& cs,
                                          double min_dist, Rng& rng);

}  // namespace riskplan
