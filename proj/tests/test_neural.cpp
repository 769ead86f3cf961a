#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "riskplan/dataset.hpp"
#include "riskplan/envgen.hpp"
#include "riskplan/neural.hpp"
#include "riskplan/risk_map.hpp"
#include "test_util.hpp"

using namespace riskplan;

namespace {

ModelBundle tiny_model(std::uint64_t seed, int image_size = 8) {
    EncoderConfig ec;
    ec.image_size = image_size;
    ec.conv1_ch = 4;
    ec.conv2_ch = 6;
    ec.fc_hidden = 10;
    ec.latent = 8;
    InferenceConfig ic;
    ic.hidden = {12, 12, 10, 10, 8};
    Rng rng = make_rng(seed);
    return make_model(ec, ic, {-1, 1, -1, 1}, rng);
}

MapImage solid_image(int s, Rgb color) {
    MapImage img;
    img.width = img.height = s;
    img.pixels.resize(static_cast<size_t>(s) * s * 3);
    for (int r = 0; r < s; ++r)
        for (int c = 0; c < s; ++c) img.set(r, c, color);
    return img;
}

TrainingSet tiny_training_set(std::uint64_t seed, int n_samples, int image_size = 8) {
    TrainingSet set;
    set.image_size = image_size;
    set.normalization = {-1, 1, -1, 1};
    set.images.push_back(rasterize(build_constraints(circle_env(), 0.1), image_size, image_size));
    set.images.push_back(rasterize(build_constraints(circle_env(), 0.5), image_size, image_size));
    set.images.push_back(solid_image(image_size, kSafeColor));
    Rng rng = make_rng(seed);
    for (int i = 0; i < n_samples; ++i) {
        TrainingSample s;
        s.image_index = i % 3;
        s.x_t = {uniform_double(rng, 0, 1), uniform_double(rng, 0, 1)};
        s.x_goal = {uniform_double(rng, 0, 1), uniform_double(rng, 0, 1)};
        s.delta = 0.1 * (1 + i % 5);
        // the learnable rule: head 40% of the way toward the goal
        s.x_next = {s.x_t.x + 0.4 * (s.x_goal.x - s.x_t.x), s.x_t.y + 0.4 * (s.x_goal.y - s.x_t.y)};
        s.cost_to_go = distance(s.x_t, s.x_goal);
        set.samples.push_back(s);
    }
    return set;
}

void zero_params(ModelBundle& m) {
    for (auto& p : trainable_params(m))
        std::fill(p.values->begin(), p.values->end(), 0.0);
}

}  // namespace

TEST_CASE("encoder output shape and determinism") {
    const ModelBundle m = tiny_model(1);
    const MapImage img = rasterize(build_constraints(circle_env(), 0.1), 8, 8);
    const auto z1 = encode(m.encoder, img);
    const auto z2 = encode(m.encoder, img);
    CHECK(z1.size() == 8);
    CHECK(z1 == z2);

    const ModelBundle big = [&] {
        EncoderConfig ec;  // paper-scale channel widths
        InferenceConfig ic;
        Rng rng = make_rng(2);
        return make_model(ec, ic, {-1, 1, -1, 1}, rng);
    }();
    const MapImage img64 = rasterize(build_constraints(circle_env(), 0.1), 64, 64);
    CHECK(encode(big.encoder, img64).size() == 64);

    CHECK_THROWS_AS(encode(big.encoder, img), std::invalid_argument);
}

TEST_CASE("distinct inputs produce distinct latents for random weights") {
    int distinct = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const ModelBundle m = tiny_model(seed);
        const auto zw = encode(m.encoder, solid_image(8, kSafeColor));
        const auto zb = encode(m.encoder, solid_image(8, kRiskColor));
        double diff = 0.0;
        for (size_t i = 0; i < zw.size(); ++i) diff += std::abs(zw[i] - zb[i]);
        if (diff > 1e-9) ++distinct;
    }
    CHECK(distinct == 10);
}

TEST_CASE("inference pass: determinism, stochastic dropout, clamped output") {
    const ModelBundle m = tiny_model(3);
    const std::vector<double> z(8, 0.3);
    Rng rng = make_rng(0);
    const Point a = infer_next(m.inference, z, {0.2, 0.2}, {0.8, 0.8}, 0.1, false, rng);
    const Point b = infer_next(m.inference, z, {0.2, 0.2}, {0.8, 0.8}, 0.1, false, rng);
    CHECK(a == b);

    int differing = 0;
    for (int trial = 0; trial < 100; ++trial) {
        EncoderConfig ec;
        ec.image_size = 8;
        ec.conv1_ch = 4;
        ec.conv2_ch = 6;
        ec.fc_hidden = 10;
        ec.latent = 8;
        InferenceConfig ic;  // planner-scale widths: a whole layer never dies
        ic.hidden = {64, 64, 32, 32, 32};
        Rng mk = make_rng(100 + trial);
        ModelBundle mm = make_model(ec, ic, {-1, 1, -1, 1}, mk);
        // center raw outputs inside the unit square and shrink the output
        // layer so the clamp does not collapse distinct stochastic passes
        // onto the same corner
        mm.inference.layers.back().b = {0.5, 0.5};
        for (double& w : mm.inference.layers.back().w) w *= 0.05;
        Rng r1 = make_rng(2 * trial), r2 = make_rng(2 * trial + 1);
        const Point p1 = infer_next(mm.inference, z, {0.2, 0.2}, {0.8, 0.8}, 0.1, true, r1);
        const Point p2 = infer_next(mm.inference, z, {0.2, 0.2}, {0.8, 0.8}, 0.1, true, r2);
        if (!(p1 == p2)) ++differing;
        CHECK(p1.x >= 0.0);
        CHECK(p1.x <= 1.0);
        CHECK(p1.y >= 0.0);
        CHECK(p1.y <= 1.0);
    }
    CHECK(differing >= 99);
}

TEST_CASE("batch loss on a crafted constant model") {
    ModelBundle m = tiny_model(4);
    zero_params(m);
    auto params = trainable_params(m);
    // final inference bias -> constant prediction (0.5, 0.6)
    auto& final_bias = *params.back().values;
    final_bias[0] = 0.5;
    final_bias[1] = 0.6;

    TrainingSet set = tiny_training_set(7, 4);
    set.samples[0].x_next = {0.5, 0.6};
    const std::vector<int> one{0};
    EvalOptions eo;
    CHECK(batch_loss(m, set, one, eo) == doctest::Approx(0.0).epsilon(1e-15));

    set.samples[1].x_next = {0.2, 0.2};  // offset (0.3, 0.4)
    const std::vector<int> two{1};
    CHECK(batch_loss(m, set, two, eo) == doctest::Approx(0.25).epsilon(1e-12));

    Rng rng = make_rng(8);
    const std::vector<int> all{0, 1, 2, 3};
    CHECK(batch_loss(m, set, all, eo) >= 0.0);
}

TEST_CASE("zero-residual batches produce zero gradients") {
    ModelBundle m = tiny_model(5);
    zero_params(m);
    auto params = trainable_params(m);
    auto& final_bias = *params.back().values;
    final_bias[0] = 0.5;
    final_bias[1] = 0.6;
    TrainingSet set = tiny_training_set(9, 2);
    for (auto& s : set.samples) s.x_next = {0.5, 0.6};
    const std::vector<int> batch{0, 1};
    EvalOptions eo;
    const BackwardResult bw = batch_backward(m, set, batch, eo);
    CHECK(bw.loss == doctest::Approx(0.0));
    for (const auto& g : bw.grads.g)
        for (double v : g) CHECK(v == 0.0);
}

TEST_CASE("duplicated samples average to the single-sample gradient") {
    const ModelBundle m = tiny_model(6);
    const TrainingSet set = tiny_training_set(10, 3);
    EvalOptions eo;  // dropout off so the two copies share masks trivially
    eo.bn_train_mode = true;
    const std::vector<int> single{1};
    const std::vector<int> doubled{1, 1};
    const BackwardResult a = batch_backward(m, set, single, eo);
    const BackwardResult b = batch_backward(m, set, doubled, eo);
    REQUIRE(a.grads.g.size() == b.grads.g.size());
    for (size_t k = 0; k < a.grads.g.size(); ++k) {
        REQUIRE(a.grads.g[k].size() == b.grads.g[k].size());
        for (size_t i = 0; i < a.grads.g[k].size(); ++i)
            CHECK(b.grads.g[k][i] == doctest::Approx(a.grads.g[k][i]).epsilon(1e-12));
    }
}

namespace {

void finite_difference_check(bool bn_train_mode) {
    ModelBundle m = tiny_model(11);
    // exercise the running-stats path with nontrivial statistics
    for (auto& v : m.encoder.bn1.run_mean) v = 0.05;
    for (auto& v : m.encoder.bn1.run_var) v = 0.8;
    for (auto& v : m.encoder.bn2.run_var) v = 1.3;
    const TrainingSet set = tiny_training_set(12, 6);
    const std::vector<int> batch{0, 1, 2, 3, 4};
    EvalOptions eo;
    eo.bn_train_mode = bn_train_mode;

    const BackwardResult bw = batch_backward(m, set, batch, eo);
    auto params = trainable_params(m);
    Rng rng = make_rng(13);
    int checked = 0;
    double max_rel = 0.0;
    while (checked < 50) {
        const size_t k = std::uniform_int_distribution<size_t>(0, params.size() - 1)(rng);
        auto& vec = *params[k].values;
        const size_t i = std::uniform_int_distribution<size_t>(0, vec.size() - 1)(rng);
        const double h = 1e-4;
        const double orig = vec[i];
        vec[i] = orig + h;
        const double lp = batch_loss(m, set, batch, eo);
        vec[i] = orig - h;
        const double lm = batch_loss(m, set, batch, eo);
        vec[i] = orig;
        const double fd = (lp - lm) / (2 * h);
        const double an = bw.grads.g[k][i];
        const double denom = std::max({std::abs(fd), std::abs(an), 1e-6});
        max_rel = std::max(max_rel, std::abs(fd - an) / denom);
        ++checked;
    }
    CAPTURE(bn_train_mode);
    CHECK(max_rel < 1e-4);
}

}  // namespace

TEST_CASE("finite differences confirm the gradients (batch norm frozen)") {
    finite_difference_check(false);
}

TEST_CASE("finite differences confirm the gradients (batch norm training mode)") {
    finite_difference_check(true);
}

TEST_CASE("adam steps") {
    ModelBundle m = tiny_model(14);
    AdamConfig cfg;
    cfg.lr = 0.001;
    AdamState st = make_adam_state(m, cfg);

    // all-zero gradients leave parameters untouched
    GradientSet zeros;
    for (auto& p : trainable_params(m)) zeros.g.emplace_back(p.values->size(), 0.0);
    const std::vector<double> before = *trainable_params(m)[0].values;
    adam_step(st, m, zeros);
    CHECK(*trainable_params(m)[0].values == before);
    CHECK(st.step == 1);

    // unit gradient on one parameter moves it by about -lr on the first step
    ModelBundle m2 = tiny_model(15);
    AdamState st2 = make_adam_state(m2, cfg);
    GradientSet g;
    for (auto& p : trainable_params(m2)) g.g.emplace_back(p.values->size(), 0.0);
    g.g[1][0] = 1.0;  // conv1 bias
    const double orig = (*trainable_params(m2)[1].values)[0];
    adam_step(st2, m2, g);
    const double moved = (*trainable_params(m2)[1].values)[0];
    CHECK(moved - orig == doctest::Approx(-0.001).epsilon(1e-6));
    CHECK(st2.step == 1);
}

TEST_CASE("inverted dropout keeps activation expectations") {
    // one hidden layer of width 4 at constant activation 1.0, output averages
    // the masked units; the mean over many stochastic passes must stay near
    // the deterministic value
    InferenceWeights inf;
    inf.dropout_p = 0.5;
    Dense l0;
    l0.in = 13;  // latent 8 + 5
    l0.out = 4;
    l0.w.assign(static_cast<size_t>(l0.in) * l0.out, 0.0);
    l0.b.assign(4, 1.0);
    Dense l1;
    l1.in = 4;
    l1.out = 2;
    l1.w.assign(8, 0.25);
    l1.b.assign(2, 0.0);
    inf.layers = {l0, l1};

    const std::vector<double> z(8, 0.0);
    Rng det = make_rng(0);
    const Point base = infer_next(inf, z, {0, 0}, {0, 0}, 0.1, false, det);
    CHECK(base.x == doctest::Approx(1.0));

    Rng rng = make_rng(16);
    double acc = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        // average the raw (unclamped on [0,1] anyway) stochastic outputs
        acc += infer_next(inf, z, {0, 0}, {0, 0}, 0.1, true, rng).x;
    }
    // clamping truncates the above-one tail, so compare against the clamped
    // expectation computed from the mask distribution: mean(min(sum/4*2,1)).
    // With four Bernoulli(1/2) units scaled by 2, sum/4*2 in {0,.5,1,1.5,2}
    // clamps to {0,.5,1,1,1} with binomial weights {1,4,6,4,1}/16.
    const double expected = (0 * 1 + 0.5 * 4 + 1.0 * 6 + 1.0 * 4 + 1.0 * 1) / 16.0;
    CHECK(acc / n == doctest::Approx(expected).epsilon(0.02));
}

TEST_CASE("normalization round trip") {
    const Bounds b{-3.0, 5.0, 2.0, 9.0};
    Rng rng = make_rng(17);
    for (int i = 0; i < 200; ++i) {
        const Point p{uniform_double(rng, b.xmin, b.xmax), uniform_double(rng, b.ymin, b.ymax)};
        const Point back = denormalize_point(b, normalize_point(b, p));
        CHECK(std::abs(back.x - p.x) <= 1e-12 * std::max(1.0, std::abs(p.x)));
        CHECK(std::abs(back.y - p.y) <= 1e-12 * std::max(1.0, std::abs(p.y)));
    }
}

TEST_CASE("training reduces validation error and is reproducible") {
    const TrainingSet set = tiny_training_set(18, 400);
    TrainOptions opts;
    opts.epochs = 8;
    opts.batch_size = 32;
    opts.seed = 19;
    opts.encoder.conv1_ch = 4;
    opts.encoder.conv2_ch = 6;
    opts.encoder.fc_hidden = 10;
    opts.encoder.latent = 8;
    opts.inference.hidden = {12, 12, 10, 10, 8};
    opts.adam.lr = 2e-3;

    const TrainResult a = train(set, opts);
    REQUIRE(a.val_mse.size() == static_cast<size_t>(opts.epochs) + 1);
    CHECK(a.val_mse.back() < a.val_mse.front());

    const TrainResult b = train(set, opts);
    ModelBundle ma = a.model, mb = b.model;
    const auto pa = trainable_params(ma), pb = trainable_params(mb);
    for (size_t k = 0; k < pa.size(); ++k) CHECK(*pa[k].values == *pb[k].values);

    CHECK_THROWS_AS(train(TrainingSet{}, opts), std::invalid_argument);
}

TEST_CASE("90/10 split sizes") {
    // 1000 samples -> 900 train / 100 validation; verified through the split
    // arithmetic used by train()
    const size_t n = 1000;
    const size_t n_train = (n * 9) / 10;
    CHECK(n_train == 900);
    CHECK(n - n_train == 100);
}

TEST_CASE("weights file round trip and failure modes") {
    const ModelBundle m = tiny_model(20);
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path();
    const auto p1 = (dir / "riskplan_model_a.nrrt").string();
    const auto p2 = (dir / "riskplan_model_b.nrrt").string();
    save_model(m, p1);
    const ModelBundle back = load_model(p1);
    save_model(back, p2);

    std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
    const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    const std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(b1 == b2);
    CHECK(back.image_size == m.image_size);
    CHECK(back.normalization == m.normalization);
    CHECK(back.inference.layers.size() == m.inference.layers.size());

    // corrupted magic
    {
        std::string corrupt = b1;
        corrupt[0] = 'X';
        std::ofstream out(p2, std::ios::binary);
        out << corrupt;
    }
    CHECK_THROWS_WITH_AS(load_model(p2), "bad magic", std::runtime_error);

    // unsupported version
    {
        std::string vbad = b1;
        vbad[4] = 9;
        std::ofstream out(p2, std::ios::binary);
        out << vbad;
    }
    CHECK_THROWS_WITH_AS(load_model(p2), "unsupported version", std::runtime_error);

    // truncation
    {
        std::ofstream out(p2, std::ios::binary);
        out << b1.substr(0, b1.size() / 2);
    }
    CHECK_THROWS_WITH_AS(load_model(p2), "truncated file", std::runtime_error);

    fs::remove(p1);
    fs::remove(p2);
}

TEST_CASE("trained sampler beats uniform sampling on the strict ellipse map") {
    // Train on the ellipse workspace: ring-level data at deltas where distant
    // queries are solvable, plus near-corner data at the strict delta = 0.1
    // where only about 1% of uniform samples are Safe.
    namespace fs = std::filesystem;
    const fs::path dir_far = fs::temp_directory_path() / "riskplan_util_far";
    const fs::path dir_near = fs::temp_directory_path() / "riskplan_util_near";
    fs::remove_all(dir_far);
    fs::remove_all(dir_near);
    const std::vector<NamedEnv> envs{{"ellipse", ellipse_env()}};

    GenDatasetOptions far;
    far.deltas = {0.7, 0.9};
    far.pairs_per_env = 25;
    far.image_size = 32;
    far.seed = 51;
    far.planner.prm_nodes = 60;
    far.planner.time_budget_s = 8.0;
    gen_dataset(envs, far, dir_far.string());

    // The strict-delta safe set is four corner islands: keep pairs short and
    // fail cross-island pairs fast (they are skipped, not fatal).
    GenDatasetOptions near = far;
    near.deltas = {0.1};
    near.pairs_per_env = 50;
    near.seed = 52;
    near.min_pair_dist_factor = 0.08;
    near.planner.time_budget_s = 1.0;
    gen_dataset(envs, near, dir_near.string());

    TrainingSet set = load_dataset(dir_far.string());
    {
        const TrainingSet extra = load_dataset(dir_near.string());
        const int offset = static_cast<int>(set.images.size());
        set.images.insert(set.images.end(), extra.images.begin(), extra.images.end());
        for (TrainingSample s : extra.samples) {
            s.image_index += offset;
            set.samples.push_back(s);
        }
    }

    TrainOptions opts;
    opts.epochs = 10;
    opts.seed = 53;
    opts.encoder.conv1_ch = 8;
    opts.encoder.conv2_ch = 16;
    opts.encoder.fc_hidden = 32;
    opts.encoder.latent = 16;
    opts.inference.hidden = {64, 64, 32, 32, 32};
    const TrainResult tr = train(set, opts);

    const Environment& env = envs[0].env;
    const double delta = 0.1;
    const RiskConstraintSet cs = build_constraints(env, delta);
    const MapImage img = rasterize(cs, set.image_size, set.image_size);
    NeuralSampler sampler(tr.model, encode(tr.model.encoder, img), delta);
    Rng rng = make_rng(54);
    const int n = 2000;
    int neural_ok = 0, uniform_ok = 0;
    for (int i = 0; i < n; ++i) {
        // condition on Safe states the planner would actually visit
        Point cur = env.sample_point(rng);
        Point goal = env.sample_point(rng);
        for (int tries = 0; tries < 200 && !verify_point(cs, cur); ++tries)
            cur = env.sample_point(rng);
        for (int tries = 0; tries < 200 && !verify_point(cs, goal); ++tries)
            goal = env.sample_point(rng);
        if (verify_point(cs, sampler.propose(cur, goal, rng))) ++neural_ok;
        if (verify_point(cs, env.sample_point(rng))) ++uniform_ok;
    }
    const double neural_rate = neural_ok / static_cast<double>(n);
    const double uniform_rate = uniform_ok / static_cast<double>(n);
    CAPTURE(neural_rate);
    CAPTURE(uniform_rate);
    CHECK(neural_rate >= 2.0 * uniform_rate);
    fs::remove_all(dir_far);
    fs::remove_all(dir_near);
}

TEST_CASE("neural sampler proposals stay inside the workspace") {
    const Environment env = circle_env();
    const ModelBundle m = [&] {
        EncoderConfig ec;
        ec.image_size = 16;
        ec.conv1_ch = 4;
        ec.conv2_ch = 6;
        ec.fc_hidden = 10;
        ec.latent = 8;
        InferenceConfig ic;
        ic.hidden = {12, 12, 10, 10, 8};
        Rng rng = make_rng(21);
        return make_model(ec, ic, env.bounds, rng);
    }();
    const MapImage img = rasterize(build_constraints(env, 0.1), 16, 16);
    NeuralSampler sampler(m, encode(m.encoder, img), 0.1);
    Rng rng = make_rng(22);
    for (int i = 0; i < 200; ++i) {
        const Point p = sampler.propose({-0.5, -0.5}, {0.5, 0.5}, rng);
        CHECK(env.bounds.contains(p));
    }
}
