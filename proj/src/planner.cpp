#include "riskplan/planner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <queue>

namespace riskplan {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Counts every point and edge query so planners can report RA load.
struct RiskAssessor {
    const RiskConstraintSet& cs;
    long calls = 0;

    bool point(const Point& p) {
        ++calls;
        return verify_point(cs, p);
    }
    bool edge(const Point& u, const Point& v) {
        ++calls;
        return verify_edge(cs, u, v).verdict;
    }
    bool path(const std::vector<Point>& w) {
        if (w.empty()) return false;
        if (w.size() == 1) return point(w[0]);
        for (size_t i = 0; i + 1 < w.size(); ++i)
            if (!edge(w[i], w[i + 1])) return false;
        return true;
    }
};

Path lsc_counted(const Path& path, RiskAssessor& ra) {
    const auto& w = path.waypoints;
    if (w.size() <= 2) return Path::from_waypoints(w);
    std::vector<Point> out{w.front()};
    size_t i = 0;
    while (i + 1 < w.size()) {
        size_t j = w.size() - 1;
        for (; j > i + 1; --j)
            if (ra.edge(w[i], w[j])) break;
        out.push_back(w[j]);
        i = j;
    }
    return Path::from_waypoints(std::move(out));
}

Point line_biased_sample(const Point& start, const Point& goal, double sigma,
                         const Bounds& bounds, double bias_prob, Rng& rng) {
    if (uniform_double(rng, 0.0, 1.0) < bias_prob) {
        const double s = uniform_double(rng, 0.0, 1.0);
        const Point base{start.x + s * (goal.x - start.x), start.y + s * (goal.y - start.y)};
        return {gaussian_double(rng, base.x, sigma), gaussian_double(rng, base.y, sigma)};
    }
    return {uniform_double(rng, bounds.xmin, bounds.xmax),
            uniform_double(rng, bounds.ymin, bounds.ymax)};
}

// Shortest path over verified PRM edges; ties resolve toward lower indices.
std::vector<int> dijkstra(const std::vector<Point>& nodes,
                          const std::vector<std::vector<int>>& adj, int src, int dst) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(nodes.size(), inf);
    std::vector<int> prev(nodes.size(), -1);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[src] = 0.0;
    pq.push({0.0, src});
    while (!pq.empty()) {
        const auto [d, u] = pq.top();
        pq.pop();
        if (d > dist[u]) continue;
        if (u == dst) break;
        for (int v : adj[u]) {
            const double nd = d + distance(nodes[u], nodes[v]);
            if (nd < dist[v]) {
                dist[v] = nd;
                prev[v] = u;
                pq.push({nd, v});
            }
        }
    }
    if (dist[dst] == inf) return {};
    std::vector<int> order;
    for (int v = dst; v != -1; v = prev[v]) order.push_back(v);
    std::reverse(order.begin(), order.end());
    return order;
}

}  // namespace

std::vector<Point> SearchTree::root_path(int idx) const {
    std::vector<Point> rev;
    for (int v = idx; v != -1; v = parent[v]) rev.push_back(vertices[v]);
    std::reverse(rev.begin(), rev.end());
    return rev;
}

int nearest(const SearchTree& tree, const Point& x) {
    int best = 0;
    double best_d = distance(tree.vertices[0], x);
    for (size_t i = 1; i < tree.vertices.size(); ++i) {
        const double d = distance(tree.vertices[i], x);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(i);
        }
    }
    return best;
}

Point steer(const Point& from, const Point& toward, double step) {
    const double d = distance(from, toward);
    if (d <= step) return toward;
    if (d == 0.0) return from;
    return {from.x + step * (toward.x - from.x) / d, from.y + step * (toward.y - from.y) / d};
}

Path Path::from_waypoints(std::vector<Point> pts) {
    Path p;
    p.waypoints = std::move(pts);
    for (size_t i = 0; i + 1 < p.waypoints.size(); ++i)
        p.total_length += distance(p.waypoints[i], p.waypoints[i + 1]);
    return p;
}

std::string to_string(PlanStatus s) {
    switch (s) {
        case PlanStatus::Solved: return "solved";
        case PlanStatus::SolvedByFallback: return "solved_by_fallback";
        case PlanStatus::Infeasible: return "infeasible";
        case PlanStatus::Timeout: return "timeout";
    }
    return "unknown";
}

PlannerConfig PlannerConfig::resolved(const Bounds& b) const {
    PlannerConfig c = *this;
    const double diag = b.diagonal();
    if (c.step <= 0.0) c.step = 0.1 * diag;
    if (c.target_radius <= 0.0) c.target_radius = 0.05 * diag;
    if (c.prm_radius <= 0.0) c.prm_radius = 0.25 * diag;
    if (c.line_bias_sigma <= 0.0) c.line_bias_sigma = 0.1 * diag;
    return c;
}

Path lsc(const Path& path, const RiskConstraintSet& cs) {
    RiskAssessor ra{cs};
    return lsc_counted(path, ra);
}

PlanReport rrt_sos_plan(const Environment& env, double delta, const Point& start,
                        const Point& goal, const PlannerConfig& cfg_in, Rng& rng) {
    const auto t0 = Clock::now();
    const PlannerConfig cfg = cfg_in.resolved(env.bounds);
    const RiskConstraintSet cs = build_constraints(env, delta);
    RiskAssessor ra{cs};
    PlanReport report;

    auto finish = [&](PlanStatus st) {
        report.status = st;
        report.ra_calls = ra.calls;
        report.wall_time_s = seconds_since(t0);
        return report;
    };

    if (!ra.point(start) || !ra.point(goal)) return finish(PlanStatus::Infeasible);
    if (distance(start, goal) < cfg.target_radius) {
        report.path = Path::from_waypoints({start});
        return finish(PlanStatus::Solved);
    }

    SearchTree tree(start);
    int reached = -1;
    while (reached < 0) {
        if (seconds_since(t0) > cfg.time_budget_s) return finish(PlanStatus::Timeout);
        ++report.iterations;
        const Point sample =
            line_biased_sample(start, goal, cfg.line_bias_sigma, env.bounds, cfg.line_bias_prob, rng);
        if (!ra.point(sample)) continue;
        const int ni = nearest(tree, sample);
        const Point from = tree.vertices[ni];
        const Point x_new = steer(from, sample, cfg.step);
        if (x_new == from) continue;
        if (!ra.edge(from, x_new)) continue;
        const int id = tree.add(x_new, ni);
        if (distance(x_new, goal) < cfg.target_radius) reached = id;
    }

    // PRM refinement: coarse-path vertices plus goal plus Safe samples,
    // verified edges within the connection radius, then Dijkstra.
    std::vector<Point> nodes = tree.root_path(reached);
    const int coarse_len = static_cast<int>(nodes.size());
    nodes.push_back(goal);
    const int goal_idx = coarse_len;
    int draws = 0;
    while (static_cast<int>(nodes.size()) < coarse_len + 1 + cfg.prm_nodes &&
           draws < 64 * cfg.prm_nodes) {
        ++draws;
        const Point p = env.sample_point(rng);
        if (ra.point(p)) nodes.push_back(p);
    }

    std::vector<std::vector<int>> adj(nodes.size());
    auto connect = [&](int i, int j) {
        adj[i].push_back(j);
        adj[j].push_back(i);
    };
    for (int i = 0; i + 1 < coarse_len; ++i) connect(i, i + 1);  // tree edges, already verified
    for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
        for (int j = std::max(i + 1, coarse_len); j < static_cast<int>(nodes.size()); ++j) {
            if (distance(nodes[i], nodes[j]) > cfg.prm_radius) continue;
            if (ra.edge(nodes[i], nodes[j])) connect(i, j);
        }
    }

    std::vector<int> order = dijkstra(nodes, adj, 0, goal_idx);
    if (order.empty()) order = dijkstra(nodes, adj, 0, coarse_len - 1);  // fall back to the reached vertex
    std::vector<Point> waypoints;
    for (int idx : order) waypoints.push_back(nodes[idx]);
    if (waypoints.empty()) waypoints = tree.root_path(reached);
    report.path = Path::from_waypoints(std::move(waypoints));
    return finish(PlanStatus::Solved);
}

namespace {

struct BidirResult {
    std::optional<std::vector<Point>> waypoints;
    int iterations = 0;
};

// One bidirectional neural planning episode between a and b (Algorithm-style:
// alternate tree expansion, attempt to connect the tops each iteration).
BidirResult bidirectional_connect(RiskAssessor& ra, const Environment& env, const Point& a,
                                  const Point& b, SampleSource& sampler,
                                  const PlannerConfig& cfg, Rng& rng, Clock::time_point t0) {
    BidirResult res;
    SearchTree tree_a(a), tree_b(b);
    SearchTree* cur = &tree_a;
    SearchTree* other = &tree_b;

    for (int i = 0; i < cfg.max_iterations; ++i) {
        if (seconds_since(t0) > cfg.time_budget_s) break;
        ++res.iterations;

        Point sample;
        bool safe = false;
        for (int attempt = 0; attempt < 32 && !safe; ++attempt) {
            sample = sampler.propose(cur->top(), other->top(), rng);
            safe = ra.point(sample);
        }
        // Uniform substitution keeps the loop terminating and preserves
        // exploration pressure when the sampler is stuck on unsafe states.
        for (int attempt = 0; attempt < 32 && !safe; ++attempt) {
            sample = env.sample_point(rng);
            safe = ra.point(sample);
        }
        if (safe) {
            const int ni = nearest(*cur, sample);
            const Point from = cur->vertices[ni];
            const Point x_new = steer(from, sample, cfg.step);
            if (x_new != from && ra.point(x_new) && ra.edge(from, x_new)) cur->add(x_new, ni);
        }

        if (ra.edge(tree_a.top(), tree_b.top())) {
            std::vector<Point> fwd = tree_a.root_path(static_cast<int>(tree_a.vertices.size()) - 1);
            std::vector<Point> bwd = tree_b.root_path(static_cast<int>(tree_b.vertices.size()) - 1);
            std::reverse(bwd.begin(), bwd.end());  // top of b-tree first, b last
            if (fwd.back() == bwd.front()) bwd.erase(bwd.begin());
            fwd.insert(fwd.end(), bwd.begin(), bwd.end());
            res.waypoints = std::move(fwd);
            return res;
        }
        std::swap(cur, other);
    }
    return res;
}

Path replan_counted(const Path& coarse, SampleSource& sampler, const Environment& env,
                    RiskAssessor& ra, const PlannerConfig& cfg, Rng& rng, Clock::time_point t0,
                    int& iterations) {
    const auto& w = coarse.waypoints;
    if (w.size() < 2) return coarse;
    std::vector<Point> out{w.front()};
    for (size_t i = 0; i + 1 < w.size(); ++i) {
        if (ra.edge(w[i], w[i + 1])) {
            out.push_back(w[i + 1]);
            continue;
        }
        BidirResult sub = bidirectional_connect(ra, env, w[i], w[i + 1], sampler, cfg, rng, t0);
        iterations += sub.iterations;
        if (sub.waypoints) {
            out.insert(out.end(), sub.waypoints->begin() + 1, sub.waypoints->end());
        } else {
            out.push_back(w[i + 1]);  // pair stays non-connectable for the fallback stage
        }
    }
    return Path::from_waypoints(std::move(out));
}

}  // namespace

Path replan(const Path& coarse, SampleSource& sampler, const Environment& env, double delta,
            const PlannerConfig& cfg_in, Rng& rng) {
    const RiskConstraintSet cs = build_constraints(env, delta);
    RiskAssessor ra{cs};
    const PlannerConfig cfg = cfg_in.resolved(env.bounds);
    int iterations = 0;
    return replan_counted(coarse, sampler, env, ra, cfg, rng, Clock::now(), iterations);
}

PlanReport nr_rrt_plan_with_sampler(const Environment& env, double delta, const Point& start,
                                    const Point& goal, SampleSource& sampler,
                                    const PlannerConfig& cfg_in, Rng& rng) {
    const auto t0 = Clock::now();
    const PlannerConfig cfg = cfg_in.resolved(env.bounds);
    const RiskConstraintSet cs = build_constraints(env, delta);
    RiskAssessor ra{cs};
    PlanReport report;

    auto finish = [&](PlanStatus st) {
        report.status = st;
        report.ra_calls = ra.calls;
        report.wall_time_s = seconds_since(t0);
        if (st == PlanStatus::Infeasible || st == PlanStatus::Timeout) report.path.reset();
        return report;
    };

    if (!ra.point(start) || !ra.point(goal)) return finish(PlanStatus::Infeasible);
    if (distance(start, goal) < cfg.target_radius) {
        report.path = Path::from_waypoints({start});
        return finish(PlanStatus::Solved);
    }

    BidirResult first = bidirectional_connect(ra, env, start, goal, sampler, cfg, rng, t0);
    report.iterations += first.iterations;
    Path path = Path::from_waypoints(first.waypoints ? *first.waypoints
                                                     : std::vector<Point>{start, goal});
    path = lsc_counted(path, ra);
    if (ra.path(path.waypoints)) {
        report.path = std::move(path);
        return finish(PlanStatus::Solved);
    }

    for (int j = 0; j < cfg.max_replan_rounds; ++j) {
        path = replan_counted(path, sampler, env, ra, cfg, rng, t0, report.iterations);
        path = lsc_counted(path, ra);
        if (ra.path(path.waypoints)) {
            report.path = std::move(path);
            return finish(PlanStatus::Solved);
        }
        if (seconds_since(t0) > cfg.time_budget_s) break;
    }

    // Standby stage: every remaining non-connectable pair becomes an RRT-SOS
    // subproblem. Any unsolved pair means no certified solution exists within
    // budget and the planner returns an empty result.
    std::vector<Point> patched{path.waypoints.front()};
    bool fallback_used = false;
    for (size_t i = 0; i + 1 < path.waypoints.size(); ++i) {
        const Point& u = path.waypoints[i];
        const Point& v = path.waypoints[i + 1];
        if (ra.edge(u, v)) {
            patched.push_back(v);
            continue;
        }
        fallback_used = true;
        PlannerConfig sub_cfg = cfg;
        sub_cfg.time_budget_s = cfg.time_budget_s - seconds_since(t0);
        if (sub_cfg.time_budget_s <= 0.0) return finish(PlanStatus::Infeasible);
        PlanReport sub = rrt_sos_plan(env, delta, u, v, sub_cfg, rng);
        report.iterations += sub.iterations;
        report.ra_calls += sub.ra_calls;
        if (sub.status != PlanStatus::Solved || !sub.path) return finish(PlanStatus::Infeasible);
        const auto& sw = sub.path->waypoints;
        patched.insert(patched.end(), sw.begin() + 1, sw.end());
        if (patched.back() != v) {
            if (!ra.edge(patched.back(), v)) return finish(PlanStatus::Infeasible);
            patched.push_back(v);
        }
    }

    path = lsc_counted(Path::from_waypoints(std::move(patched)), ra);
    if (!ra.path(path.waypoints)) return finish(PlanStatus::Infeasible);
    report.path = std::move(path);
    return finish(fallback_used ? PlanStatus::SolvedByFallback : PlanStatus::Infeasible);
}

}  // namespace riskplan
