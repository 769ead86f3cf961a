// The neural network sampler: a convolutional map encoder (two conv +
// batch-norm + ReLU + max-pool blocks, then two dense layers to a 64-wide
// latent) and a six-layer dropout inference network that predicts the next
// state from (latent, current state, goal state, risk level). Training is
// plain MSE + Adam with exact hand-rolled backpropagation; gradients are
// finite-difference checked in the test suite.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "riskplan/environment.hpp"
#include "riskplan/image.hpp"
#include "riskplan/planner.hpp"

namespace riskplan {

struct ConvLayer {
    int in_ch = 0, out_ch = 0;
    std::vector<double> w;  // [out][in][3][3]
    std::vector<double> b;  // [out]
};

struct BatchNorm {
    int ch = 0;
    std::vector<double> gamma, beta;
    std::vector<double> run_mean, run_var;
};

struct Dense {
    int in = 0, out = 0;
    std::vector<double> w;  // [out][in]
    std::vector<double> b;  // [out]
};

struct EncoderConfig {
    int image_size = 64;
    int conv1_ch = 32;
    int conv2_ch = 128;
    int fc_hidden = 128;
    int latent = 64;
};

struct InferenceConfig {
    std::vector<int> hidden = {256, 256, 128, 128, 64};
    double dropout_p = 0.5;
};

struct EncoderWeights {
    int image_size = 0;
    ConvLayer conv1, conv2;
    BatchNorm bn1, bn2;
    Dense fc1, fc2;

    int pooled_size() const { return image_size / 4; }
    int flat_dim() const { return conv2.out_ch * pooled_size() * pooled_size(); }
    int latent_dim() const { return fc2.out; }
};

struct InferenceWeights {
    std::vector<Dense> layers;  // six layers; ReLU + dropout on all but the last
    double dropout_p = 0.5;

    int input_dim() const { return layers.empty() ? 0 : layers.front().in; }
};

struct ModelBundle {
    EncoderWeights encoder;
    InferenceWeights inference;
    Bounds normalization;
    int image_size = 0;
    int format_version = 1;
};

inline Point normalize_point(const Bounds& b, const Point& p) {
    return {(p.x - b.xmin) / b.width(), (p.y - b.ymin) / b.height()};
}

inline Point denormalize_point(const Bounds& b, const Point& p) {
    return {b.xmin + p.x * b.width(), b.ymin + p.y * b.height()};
}

// Random-initialized model (He-normal weights, identity batch norm).
ModelBundle make_model(const EncoderConfig& ec, const InferenceConfig& ic,
                       const Bounds& normalization, Rng& rng);

// Deterministic inference-mode encoding of a map image to the latent vector.
std::vector<double> encode(const EncoderWeights& enc, const MapImage& img);

// One inference-network forward pass; inputs and the returned point are in
// normalized [0,1] coordinates, the output is clamped to the unit square.
// With dropout_on the hidden activations get fresh inverted-dropout masks.
Point infer_next(const InferenceWeights& inf, std::span<const double> latent, const Point& x_t,
                 const Point& x_goal, double delta, bool dropout_on, Rng& rng);

struct TrainingSample {
    int image_index = 0;  // into TrainingSet::images
    Point x_t, x_goal;    // normalized
    double delta = 0.0;
    Point x_next;         // normalized
    double cost_to_go = 0.0;  // metadata, not consumed by the loss
};

struct TrainingSet {
    std::vector<MapImage> images;
    std::vector<TrainingSample> samples;
    Bounds normalization;
    int image_size = 0;
};

struct EvalOptions {
    bool bn_train_mode = false;   // batch statistics instead of running stats
    bool dropout_on = false;
    std::uint64_t mask_seed = 0;  // dropout masks derive from (mask_seed, sample index)
};

// Mean squared error of the batch under the model (forward only).
double batch_loss(const ModelBundle& model, const TrainingSet& data,
                  std::span<const int> batch, const EvalOptions& opts);

// Gradient buffers aligned with trainable_params(model).
struct GradientSet {
    std::vector<std::vector<double>> g;
};

struct ParamView {
    std::string name;
    std::vector<double>* values;
};

// Trainable parameters in declaration order (batch-norm running statistics
// excluded).
std::vector<ParamView> trainable_params(ModelBundle& model);

struct BatchStats {
    std::vector<double> bn1_mean, bn1_var, bn2_mean, bn2_var;
};

struct BackwardResult {
    double loss = 0.0;
    GradientSet grads;
    BatchStats stats;  // batch statistics when bn_train_mode is set
};

// Forward + exact backward over the batch with the same masks as the forward
// pass.
BackwardResult batch_backward(const ModelBundle& model, const TrainingSet& data,
                              std::span<const int> batch, const EvalOptions& opts);

struct AdamConfig {
    double lr = 4e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    AdamConfig cfg;
    long step = 0;
    std::vector<std::vector<double>> m, v;  // aligned with trainable_params
};

AdamState make_adam_state(ModelBundle& model, const AdamConfig& cfg);
void adam_step(AdamState& state, ModelBundle& model, const GradientSet& grads);

struct TrainOptions {
    int epochs = 20;
    int batch_size = 64;
    double val_split = 0.1;
    std::uint64_t seed = 0;
    AdamConfig adam;
    EncoderConfig encoder;
    InferenceConfig inference;
    bool verbose = false;
};

struct TrainResult {
    ModelBundle model;
    std::vector<double> train_mse;  // per epoch
    std::vector<double> val_mse;    // per epoch; entry 0 is the pre-training value
};

TrainResult train(const TrainingSet& data, const TrainOptions& opts);

// Weights file ("NRRT" magic, little-endian header, f32 payloads).
void save_model(const ModelBundle& model, const std::string& path);
ModelBundle load_model(const std::string& path);

// SampleSource backed by the trained model; dropout stays active at planning
// time so the sampler behaves stochastically.
class NeuralSampler : public SampleSource {
public:
    NeuralSampler(const ModelBundle& model, std::vector<double> latent, double delta,
                  bool dropout_on = true)
        : model_(model), latent_(std::move(latent)), delta_(delta), dropout_on_(dropout_on) {}

    Point propose(const Point& current, const Point& toward_goal, Rng& rng) override;

private:
    const ModelBundle& model_;
    std::vector<double> latent_;
    double delta_;
    bool dropout_on_;
};

// Rasterizes the risk contours map at the model's image size, encodes it once,
// and runs the bidirectional neural planner.
PlanReport nr_rrt_plan(const Environment& env, double delta, const Point& start,
                       const Point& goal, const ModelBundle& model, const PlannerConfig& cfg,
                       Rng& rng);

}  // namespace riskplan
