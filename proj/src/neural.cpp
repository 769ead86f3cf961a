#include "riskplan/neural.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <map>
#include <stdexcept>

namespace riskplan {

namespace {

constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.9;  // running = m * running + (1 - m) * batch

Dense make_dense(int in, int out, Rng& rng) {
    Dense d;
    d.in = in;
    d.out = out;
    d.w.resize(static_cast<size_t>(in) * out);
    d.b.assign(out, 0.0);
    const double stddev = std::sqrt(2.0 / in);
    for (double& v : d.w) v = gaussian_double(rng, 0.0, stddev);
    return d;
}

ConvLayer make_conv(int in_ch, int out_ch, Rng& rng) {
    ConvLayer c;
    c.in_ch = in_ch;
    c.out_ch = out_ch;
    c.w.resize(static_cast<size_t>(out_ch) * in_ch * 9);
    c.b.assign(out_ch, 0.0);
    const double stddev = std::sqrt(2.0 / (in_ch * 9.0));
    for (double& v : c.w) v = gaussian_double(rng, 0.0, stddev);
    return c;
}

BatchNorm make_bn(int ch) {
    BatchNorm bn;
    bn.ch = ch;
    bn.gamma.assign(ch, 1.0);
    bn.beta.assign(ch, 0.0);
    bn.run_mean.assign(ch, 0.0);
    bn.run_var.assign(ch, 1.0);
    return bn;
}

void conv3x3_forward(const ConvLayer& c, const std::vector<double>& in, int s,
                     std::vector<double>& out) {
    out.assign(static_cast<size_t>(c.out_ch) * s * s, 0.0);
    for (int o = 0; o < c.out_ch; ++o) {
        double* op = &out[static_cast<size_t>(o) * s * s];
        for (int y = 0; y < s; ++y)
            for (int x = 0; x < s; ++x) op[y * s + x] = c.b[o];
        for (int i = 0; i < c.in_ch; ++i) {
            const double* ip = &in[static_cast<size_t>(i) * s * s];
            const double* wp = &c.w[(static_cast<size_t>(o) * c.in_ch + i) * 9];
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    const double wv = wp[ky * 3 + kx];
                    const int y0 = std::max(0, 1 - ky), y1 = std::min(s, s + 1 - ky);
                    const int x0 = std::max(0, 1 - kx), x1 = std::min(s, s + 1 - kx);
                    for (int y = y0; y < y1; ++y) {
                        const double* irow = ip + (y + ky - 1) * s + (kx - 1);
                        double* orow = op + y * s;
                        for (int x = x0; x < x1; ++x) orow[x] += wv * irow[x];
                    }
                }
            }
        }
    }
}

// Gradients of a conv layer; d_in may be null when input grads are not needed.
void conv3x3_backward(const ConvLayer& c, const std::vector<double>& in, int s,
                      const std::vector<double>& d_out, std::vector<double>& dw,
                      std::vector<double>& db, std::vector<double>* d_in) {
    if (d_in) d_in->assign(in.size(), 0.0);
    for (int o = 0; o < c.out_ch; ++o) {
        const double* gp = &d_out[static_cast<size_t>(o) * s * s];
        for (int y = 0; y < s; ++y)
            for (int x = 0; x < s; ++x) db[o] += gp[y * s + x];
        for (int i = 0; i < c.in_ch; ++i) {
            const double* ip = &in[static_cast<size_t>(i) * s * s];
            double* dwp = &dw[(static_cast<size_t>(o) * c.in_ch + i) * 9];
            double* dip = d_in ? &(*d_in)[static_cast<size_t>(i) * s * s] : nullptr;
            const double* wp = &c.w[(static_cast<size_t>(o) * c.in_ch + i) * 9];
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    const int y0 = std::max(0, 1 - ky), y1 = std::min(s, s + 1 - ky);
                    const int x0 = std::max(0, 1 - kx), x1 = std::min(s, s + 1 - kx);
                    double acc = 0.0;
                    const double wv = wp[ky * 3 + kx];
                    for (int y = y0; y < y1; ++y) {
                        const double* irow = ip + (y + ky - 1) * s + (kx - 1);
                        const double* grow = gp + y * s;
                        if (dip) {
                            double* drow = dip + (y + ky - 1) * s + (kx - 1);
                            for (int x = x0; x < x1; ++x) {
                                acc += grow[x] * irow[x];
                                drow[x] += wv * grow[x];
                            }
                        } else {
                            for (int x = x0; x < x1; ++x) acc += grow[x] * irow[x];
                        }
                    }
                    dwp[ky * 3 + kx] += acc;
                }
            }
        }
    }
}

void maxpool2_forward(const std::vector<double>& in, int ch, int s, std::vector<double>& out,
                      std::vector<int>& argmax) {
    const int h = s / 2;
    out.resize(static_cast<size_t>(ch) * h * h);
    argmax.resize(out.size());
    for (int c = 0; c < ch; ++c) {
        const double* ip = &in[static_cast<size_t>(c) * s * s];
        double* op = &out[static_cast<size_t>(c) * h * h];
        int* ap = &argmax[static_cast<size_t>(c) * h * h];
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < h; ++x) {
                const int base = (2 * y) * s + 2 * x;
                int best = base;
                double bv = ip[base];
                for (int k = 1; k < 4; ++k) {
                    const int idx = base + (k / 2) * s + (k % 2);
                    if (ip[idx] > bv) {
                        bv = ip[idx];
                        best = idx;
                    }
                }
                op[y * h + x] = bv;
                ap[y * h + x] = best;
            }
        }
    }
}

void maxpool2_backward(const std::vector<double>& d_out, int ch, int s,
                       const std::vector<int>& argmax, std::vector<double>& d_in) {
    const int h = s / 2;
    d_in.assign(static_cast<size_t>(ch) * s * s, 0.0);
    for (int c = 0; c < ch; ++c) {
        const double* gp = &d_out[static_cast<size_t>(c) * h * h];
        const int* ap = &argmax[static_cast<size_t>(c) * h * h];
        double* dp = &d_in[static_cast<size_t>(c) * s * s];
        for (int i = 0; i < h * h; ++i) dp[ap[i]] += gp[i];
    }
}

void dense_forward(const Dense& d, const std::vector<double>& in, std::vector<double>& out) {
    out.resize(d.out);
    for (int o = 0; o < d.out; ++o) {
        const double* wp = &d.w[static_cast<size_t>(o) * d.in];
        double acc = d.b[o];
        for (int i = 0; i < d.in; ++i) acc += wp[i] * in[i];
        out[o] = acc;
    }
}

void dense_backward(const Dense& d, const std::vector<double>& in,
                    const std::vector<double>& d_out, std::vector<double>& dw,
                    std::vector<double>& db, std::vector<double>* d_in) {
    if (d_in) d_in->assign(d.in, 0.0);
    for (int o = 0; o < d.out; ++o) {
        const double g = d_out[o];
        db[o] += g;
        const double* wp = &d.w[static_cast<size_t>(o) * d.in];
        double* dwp = &dw[static_cast<size_t>(o) * d.in];
        for (int i = 0; i < d.in; ++i) {
            dwp[i] += g * in[i];
            if (d_in) (*d_in)[i] += wp[i] * g;
        }
    }
}

std::vector<double> image_to_input(const MapImage& img) {
    const int s = img.width;
    std::vector<double> x(static_cast<size_t>(3) * s * s);
    for (int r = 0; r < s; ++r)
        for (int c = 0; c < s; ++c) {
            const size_t p = 3 * (static_cast<size_t>(r) * s + c);
            for (int ch = 0; ch < 3; ++ch)
                x[static_cast<size_t>(ch) * s * s + static_cast<size_t>(r) * s + c] =
                    img.pixels[p + ch] / 255.0;
        }
    return x;
}

// Per-image encoder activations retained for the backward pass.
struct EncImageCache {
    std::vector<double> input;
    std::vector<double> conv1_pre, bn1_out, pool1_out;
    std::vector<int> pool1_arg;
    std::vector<double> conv2_pre, bn2_out, pool2_out;
    std::vector<int> pool2_arg;
    std::vector<double> fc1_pre, fc1_act, latent;
    // stashed gradient buffers used between backward phases
    std::vector<double> d_bn2_out, d_bn1_out;
};

struct BnBatchState {
    std::vector<double> mean, var, sigma;  // per channel
};

// Weighted batch statistics over the distinct images (weights are sample
// multiplicities); exactly equivalent to per-sample statistics with repeated
// images.
BnBatchState bn_batch_stats(const std::vector<EncImageCache>& caches,
                            const std::vector<double>& weights,
                            const std::vector<double> EncImageCache::* pre, int ch, int spatial) {
    BnBatchState st;
    st.mean.assign(ch, 0.0);
    st.var.assign(ch, 0.0);
    st.sigma.assign(ch, 0.0);
    double wsum = 0.0;
    for (double w : weights) wsum += w;
    const double m = wsum * spatial;
    for (size_t d = 0; d < caches.size(); ++d) {
        const auto& x = caches[d].*pre;
        for (int c = 0; c < ch; ++c) {
            const double* xp = &x[static_cast<size_t>(c) * spatial];
            double acc = 0.0;
            for (int i = 0; i < spatial; ++i) acc += xp[i];
            st.mean[c] += weights[d] * acc;
        }
    }
    for (int c = 0; c < ch; ++c) st.mean[c] /= m;
    for (size_t d = 0; d < caches.size(); ++d) {
        const auto& x = caches[d].*pre;
        for (int c = 0; c < ch; ++c) {
            const double* xp = &x[static_cast<size_t>(c) * spatial];
            double acc = 0.0;
            for (int i = 0; i < spatial; ++i) {
                const double v = xp[i] - st.mean[c];
                acc += v * v;
            }
            st.var[c] += weights[d] * acc;
        }
    }
    for (int c = 0; c < ch; ++c) {
        st.var[c] /= m;
        st.sigma[c] = std::sqrt(st.var[c] + kBnEps);
    }
    return st;
}

void bn_apply(const BatchNorm& bn, const std::vector<double>& mean,
              const std::vector<double>& sigma, const std::vector<double>& in, int spatial,
              std::vector<double>& out, bool relu) {
    out.resize(in.size());
    for (int c = 0; c < bn.ch; ++c) {
        const double scale = bn.gamma[c] / sigma[c];
        const double shift = bn.beta[c] - mean[c] * scale;
        const double* ip = &in[static_cast<size_t>(c) * spatial];
        double* op = &out[static_cast<size_t>(c) * spatial];
        for (int i = 0; i < spatial; ++i) {
            const double v = scale * ip[i] + shift;
            op[i] = relu ? std::max(0.0, v) : v;
        }
    }
}

struct EncoderBatch {
    std::vector<int> image_ids;    // distinct, ascending
    std::vector<double> weights;   // multiplicities
    std::vector<EncImageCache> caches;
    BnBatchState bn1, bn2;
    bool train_mode = false;
};

void encoder_forward_batch(const EncoderWeights& enc, const std::vector<MapImage>& images,
                           EncoderBatch& eb) {
    const int s = enc.image_size;
    const int h = s / 2;
    eb.caches.assign(eb.image_ids.size(), {});
    for (size_t d = 0; d < eb.image_ids.size(); ++d) {
        EncImageCache& c = eb.caches[d];
        const MapImage& img = images[eb.image_ids[d]];
        if (img.width != s || img.height != s)
            throw std::invalid_argument("encode: image dimensions do not match the model");
        c.input = image_to_input(img);
        conv3x3_forward(enc.conv1, c.input, s, c.conv1_pre);
    }
    eb.bn1 = eb.train_mode
                 ? bn_batch_stats(eb.caches, eb.weights, &EncImageCache::conv1_pre, enc.bn1.ch, s * s)
                 : BnBatchState{};
    if (!eb.train_mode) {
        eb.bn1.mean = enc.bn1.run_mean;
        eb.bn1.sigma.resize(enc.bn1.ch);
        eb.bn1.var = enc.bn1.run_var;
        for (int c = 0; c < enc.bn1.ch; ++c) eb.bn1.sigma[c] = std::sqrt(enc.bn1.run_var[c] + kBnEps);
    }
    for (auto& c : eb.caches) {
        bn_apply(enc.bn1, eb.bn1.mean, eb.bn1.sigma, c.conv1_pre, s * s, c.bn1_out, true);
        maxpool2_forward(c.bn1_out, enc.conv1.out_ch, s, c.pool1_out, c.pool1_arg);
        conv3x3_forward(enc.conv2, c.pool1_out, h, c.conv2_pre);
    }
    eb.bn2 = eb.train_mode
                 ? bn_batch_stats(eb.caches, eb.weights, &EncImageCache::conv2_pre, enc.bn2.ch, h * h)
                 : BnBatchState{};
    if (!eb.train_mode) {
        eb.bn2.mean = enc.bn2.run_mean;
        eb.bn2.var = enc.bn2.run_var;
        eb.bn2.sigma.resize(enc.bn2.ch);
        for (int c = 0; c < enc.bn2.ch; ++c) eb.bn2.sigma[c] = std::sqrt(enc.bn2.run_var[c] + kBnEps);
    }
    for (auto& c : eb.caches) {
        bn_apply(enc.bn2, eb.bn2.mean, eb.bn2.sigma, c.conv2_pre, h * h, c.bn2_out, true);
        maxpool2_forward(c.bn2_out, enc.conv2.out_ch, h, c.pool2_out, c.pool2_arg);
        dense_forward(enc.fc1, c.pool2_out, c.fc1_pre);
        c.fc1_act.resize(c.fc1_pre.size());
        for (size_t i = 0; i < c.fc1_pre.size(); ++i) c.fc1_act[i] = std::max(0.0, c.fc1_pre[i]);
        dense_forward(enc.fc2, c.fc1_act, c.latent);
    }
}

struct EncoderGrads {
    std::vector<double> conv1_w, conv1_b, bn1_gamma, bn1_beta;
    std::vector<double> conv2_w, conv2_b, bn2_gamma, bn2_beta;
    std::vector<double> fc1_w, fc1_b, fc2_w, fc2_b;

    explicit EncoderGrads(const EncoderWeights& e)
        : conv1_w(e.conv1.w.size(), 0.0),
          conv1_b(e.conv1.b.size(), 0.0),
          bn1_gamma(e.bn1.ch, 0.0),
          bn1_beta(e.bn1.ch, 0.0),
          conv2_w(e.conv2.w.size(), 0.0),
          conv2_b(e.conv2.b.size(), 0.0),
          bn2_gamma(e.bn2.ch, 0.0),
          bn2_beta(e.bn2.ch, 0.0),
          fc1_w(e.fc1.w.size(), 0.0),
          fc1_b(e.fc1.b.size(), 0.0),
          fc2_w(e.fc2.w.size(), 0.0),
          fc2_b(e.fc2.b.size(), 0.0) {}
};

// Backward through batch norm given grads w.r.t. its output, in either mode.
// In train mode S and T are the channelwise sums of d_out and d_out * xhat
// over the whole batch, m is the total batch element count, and w is this
// image's multiplicity.
void bn_backward_image(const BatchNorm& bn, const BnBatchState& st, bool train_mode,
                       const std::vector<double>& pre, const std::vector<double>& d_out,
                       int spatial, const std::vector<double>& S, const std::vector<double>& T,
                       double m, double w, std::vector<double>& d_pre) {
    d_pre.resize(pre.size());
    for (int c = 0; c < bn.ch; ++c) {
        const double inv_sigma = 1.0 / st.sigma[c];
        const double scale = bn.gamma[c] * inv_sigma;
        const double* pp = &pre[static_cast<size_t>(c) * spatial];
        const double* gp = &d_out[static_cast<size_t>(c) * spatial];
        double* dp = &d_pre[static_cast<size_t>(c) * spatial];
        if (!train_mode) {
            for (int i = 0; i < spatial; ++i) dp[i] = scale * gp[i];
            continue;
        }
        const double s_term = (w / m) * S[c];
        const double t_term = (w / m) * T[c];
        for (int i = 0; i < spatial; ++i) {
            const double xhat = (pp[i] - st.mean[c]) * inv_sigma;
            dp[i] = scale * (gp[i] - s_term - xhat * t_term);
        }
    }
}

void encoder_backward_batch(const EncoderWeights& enc, EncoderBatch& eb,
                            const std::vector<std::vector<double>>& d_latent, EncoderGrads& g) {
    const int s = enc.image_size;
    const int h = s / 2;
    const double wsum = [&] {
        double acc = 0.0;
        for (double w : eb.weights) acc += w;
        return acc;
    }();

    // phase A: fc chain and pool2/relu2 down to bn2 output grads
    std::vector<double> S2(enc.bn2.ch, 0.0), T2(enc.bn2.ch, 0.0);
    for (size_t d = 0; d < eb.caches.size(); ++d) {
        EncImageCache& c = eb.caches[d];
        std::vector<double> d_fc1_act;
        dense_backward(enc.fc2, c.fc1_act, d_latent[d], g.fc2_w, g.fc2_b, &d_fc1_act);
        for (size_t i = 0; i < d_fc1_act.size(); ++i)
            if (c.fc1_pre[i] <= 0.0) d_fc1_act[i] = 0.0;
        std::vector<double> d_flat;
        dense_backward(enc.fc1, c.pool2_out, d_fc1_act, g.fc1_w, g.fc1_b, &d_flat);
        std::vector<double> d_relu2;
        maxpool2_backward(d_flat, enc.conv2.out_ch, h, c.pool2_arg, d_relu2);
        for (size_t i = 0; i < d_relu2.size(); ++i)
            if (c.bn2_out[i] <= 0.0) d_relu2[i] = 0.0;
        c.d_bn2_out = std::move(d_relu2);
        if (eb.train_mode) {
            for (int ch = 0; ch < enc.bn2.ch; ++ch) {
                const double* gp = &c.d_bn2_out[static_cast<size_t>(ch) * h * h];
                const double* pp = &c.conv2_pre[static_cast<size_t>(ch) * h * h];
                const double inv_sigma = 1.0 / eb.bn2.sigma[ch];
                double sa = 0.0, ta = 0.0;
                for (int i = 0; i < h * h; ++i) {
                    sa += gp[i];
                    ta += gp[i] * (pp[i] - eb.bn2.mean[ch]) * inv_sigma;
                }
                S2[ch] += sa;
                T2[ch] += ta;
            }
        } else {
            for (int ch = 0; ch < enc.bn2.ch; ++ch) {
                const double* gp = &c.d_bn2_out[static_cast<size_t>(ch) * h * h];
                const double* pp = &c.conv2_pre[static_cast<size_t>(ch) * h * h];
                const double inv_sigma = 1.0 / eb.bn2.sigma[ch];
                for (int i = 0; i < h * h; ++i) {
                    g.bn2_beta[ch] += gp[i];
                    g.bn2_gamma[ch] += gp[i] * (pp[i] - eb.bn2.mean[ch]) * inv_sigma;
                }
            }
        }
    }
    if (eb.train_mode) {
        for (int ch = 0; ch < enc.bn2.ch; ++ch) {
            g.bn2_beta[ch] += S2[ch];
            g.bn2_gamma[ch] += T2[ch];
        }
    }

    // phase B: through bn2/conv2/pool1/relu1 down to bn1 output grads
    const double m2 = wsum * h * h;
    std::vector<double> S1(enc.bn1.ch, 0.0), T1(enc.bn1.ch, 0.0);
    for (size_t d = 0; d < eb.caches.size(); ++d) {
        EncImageCache& c = eb.caches[d];
        std::vector<double> d_conv2_pre;
        bn_backward_image(enc.bn2, eb.bn2, eb.train_mode, c.conv2_pre, c.d_bn2_out, h * h, S2, T2,
                          m2, eb.weights[d], d_conv2_pre);
        std::vector<double> d_pool1;
        conv3x3_backward(enc.conv2, c.pool1_out, h, d_conv2_pre, g.conv2_w, g.conv2_b, &d_pool1);
        std::vector<double> d_relu1;
        maxpool2_backward(d_pool1, enc.conv1.out_ch, s, c.pool1_arg, d_relu1);
        for (size_t i = 0; i < d_relu1.size(); ++i)
            if (c.bn1_out[i] <= 0.0) d_relu1[i] = 0.0;
        c.d_bn1_out = std::move(d_relu1);
        if (eb.train_mode) {
            for (int ch = 0; ch < enc.bn1.ch; ++ch) {
                const double* gp = &c.d_bn1_out[static_cast<size_t>(ch) * s * s];
                const double* pp = &c.conv1_pre[static_cast<size_t>(ch) * s * s];
                const double inv_sigma = 1.0 / eb.bn1.sigma[ch];
                double sa = 0.0, ta = 0.0;
                for (int i = 0; i < s * s; ++i) {
                    sa += gp[i];
                    ta += gp[i] * (pp[i] - eb.bn1.mean[ch]) * inv_sigma;
                }
                S1[ch] += sa;
                T1[ch] += ta;
            }
        } else {
            for (int ch = 0; ch < enc.bn1.ch; ++ch) {
                const double* gp = &c.d_bn1_out[static_cast<size_t>(ch) * s * s];
                const double* pp = &c.conv1_pre[static_cast<size_t>(ch) * s * s];
                const double inv_sigma = 1.0 / eb.bn1.sigma[ch];
                for (int i = 0; i < s * s; ++i) {
                    g.bn1_beta[ch] += gp[i];
                    g.bn1_gamma[ch] += gp[i] * (pp[i] - eb.bn1.mean[ch]) * inv_sigma;
                }
            }
        }
    }
    if (eb.train_mode) {
        for (int ch = 0; ch < enc.bn1.ch; ++ch) {
            g.bn1_beta[ch] += S1[ch];
            g.bn1_gamma[ch] += T1[ch];
        }
    }

    // phase C: bn1 and conv1 weight grads (no input gradient needed)
    const double m1 = wsum * s * s;
    for (size_t d = 0; d < eb.caches.size(); ++d) {
        EncImageCache& c = eb.caches[d];
        std::vector<double> d_conv1_pre;
        bn_backward_image(enc.bn1, eb.bn1, eb.train_mode, c.conv1_pre, c.d_bn1_out, s * s, S1, T1,
                          m1, eb.weights[d], d_conv1_pre);
        conv3x3_backward(enc.conv1, c.input, s, d_conv1_pre, g.conv1_w, g.conv1_b, nullptr);
    }
}

// Inference-network activations for one sample.
struct InfCache {
    std::vector<std::vector<double>> inputs;  // input of each layer
    std::vector<std::vector<double>> pre;     // pre-activation of hidden layers
    std::vector<std::vector<double>> mask;    // inverted-dropout mask values
    std::vector<double> out;
};

void inference_forward(const InferenceWeights& inf, const std::vector<double>& input,
                       bool dropout_on, Rng* mask_rng, InfCache& cache) {
    const size_t n_layers = inf.layers.size();
    cache.inputs.assign(n_layers, {});
    cache.pre.assign(n_layers, {});
    cache.mask.assign(n_layers, {});
    std::vector<double> x = input;
    for (size_t k = 0; k < n_layers; ++k) {
        cache.inputs[k] = x;
        std::vector<double> y;
        dense_forward(inf.layers[k], x, y);
        if (k + 1 == n_layers) {
            cache.out = y;
            return;
        }
        cache.pre[k] = y;
        std::vector<double> act(y.size());
        std::vector<double> mask(y.size(), 1.0);
        const double keep = 1.0 - inf.dropout_p;
        for (size_t i = 0; i < y.size(); ++i) {
            double m = 1.0;
            if (dropout_on) {
                m = (uniform_double(*mask_rng, 0.0, 1.0) < keep) ? 1.0 / keep : 0.0;
            }
            mask[i] = m;
            act[i] = std::max(0.0, y[i]) * m;
        }
        cache.mask[k] = std::move(mask);
        x = std::move(act);
    }
}

struct InferenceGrads {
    std::vector<std::vector<double>> w, b;

    explicit InferenceGrads(const InferenceWeights& inf) {
        for (const auto& l : inf.layers) {
            w.emplace_back(l.w.size(), 0.0);
            b.emplace_back(l.b.size(), 0.0);
        }
    }
};

// Returns the gradient w.r.t. the layer-0 input.
std::vector<double> inference_backward(const InferenceWeights& inf, const InfCache& cache,
                                       const std::vector<double>& d_out, InferenceGrads& g) {
    const size_t n_layers = inf.layers.size();
    std::vector<double> grad = d_out;
    for (size_t k = n_layers; k-- > 0;) {
        std::vector<double> d_in;
        dense_backward(inf.layers[k], cache.inputs[k], grad, g.w[k], g.b[k], &d_in);
        if (k == 0) return d_in;
        // through the previous layer's dropout + relu
        const size_t prev = k - 1;
        for (size_t i = 0; i < d_in.size(); ++i) {
            d_in[i] *= cache.mask[prev][i];
            if (cache.pre[prev][i] <= 0.0) d_in[i] = 0.0;
        }
        grad = std::move(d_in);
    }
    return grad;
}

std::vector<double> assemble_input(std::span<const double> latent, const Point& x_t,
                                   const Point& x_goal, double delta) {
    std::vector<double> in(latent.begin(), latent.end());
    in.push_back(x_t.x);
    in.push_back(x_t.y);
    in.push_back(x_goal.x);
    in.push_back(x_goal.y);
    in.push_back(delta);
    return in;
}

struct BatchEngineResult {
    double loss = 0.0;
    EncoderBatch enc_batch;
    std::vector<InfCache> inf_caches;         // per batch sample
    std::vector<int> sample_image_slot;       // batch sample -> distinct image slot
};

BatchEngineResult batch_forward_engine(const ModelBundle& model, const TrainingSet& data,
                                       std::span<const int> batch, const EvalOptions& opts) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    BatchEngineResult res;
    res.enc_batch.train_mode = opts.bn_train_mode;

    std::map<int, int> slot_of;  // image index -> slot (ascending order)
    for (int idx : batch) slot_of.emplace(data.samples[idx].image_index, 0);
    for (auto& [img, slot] : slot_of) {
        slot = static_cast<int>(res.enc_batch.image_ids.size());
        res.enc_batch.image_ids.push_back(img);
    }
    res.enc_batch.weights.assign(res.enc_batch.image_ids.size(), 0.0);
    for (int idx : batch)
        res.enc_batch.weights[slot_of[data.samples[idx].image_index]] += 1.0;

    encoder_forward_batch(model.encoder, data.images, res.enc_batch);

    res.inf_caches.resize(batch.size());
    res.sample_image_slot.resize(batch.size());
    double loss = 0.0;
    for (size_t bi = 0; bi < batch.size(); ++bi) {
        const TrainingSample& s = data.samples[batch[bi]];
        const int slot = slot_of[s.image_index];
        res.sample_image_slot[bi] = slot;
        const auto& z = res.enc_batch.caches[slot].latent;
        const auto input = assemble_input(z, s.x_t, s.x_goal, s.delta);
        Rng mask_rng = make_rng(derive_seed(opts.mask_seed, bi));
        inference_forward(model.inference, input, opts.dropout_on, &mask_rng, res.inf_caches[bi]);
        const auto& out = res.inf_caches[bi].out;
        const double dx = out[0] - s.x_next.x;
        const double dy = out[1] - s.x_next.y;
        loss += dx * dx + dy * dy;
    }
    res.loss = loss / static_cast<double>(batch.size());
    return res;
}

}  // namespace

ModelBundle make_model(const EncoderConfig& ec, const InferenceConfig& ic,
                       const Bounds& normalization, Rng& rng) {
    if (ec.image_size % 4 != 0)
        throw std::invalid_argument("image size must be divisible by 4");
    ModelBundle m;
    m.image_size = ec.image_size;
    m.normalization = normalization;
    m.encoder.image_size = ec.image_size;
    m.encoder.conv1 = make_conv(3, ec.conv1_ch, rng);
    m.encoder.bn1 = make_bn(ec.conv1_ch);
    m.encoder.conv2 = make_conv(ec.conv1_ch, ec.conv2_ch, rng);
    m.encoder.bn2 = make_bn(ec.conv2_ch);
    const int flat = ec.conv2_ch * (ec.image_size / 4) * (ec.image_size / 4);
    m.encoder.fc1 = make_dense(flat, ec.fc_hidden, rng);
    m.encoder.fc2 = make_dense(ec.fc_hidden, ec.latent, rng);
    int in_dim = ec.latent + 5;
    m.inference.dropout_p = ic.dropout_p;
    for (int h : ic.hidden) {
        m.inference.layers.push_back(make_dense(in_dim, h, rng));
        in_dim = h;
    }
    m.inference.layers.push_back(make_dense(in_dim, 2, rng));
    // regression head: small initial weights keep early predictions near the
    // unit square instead of tens of units away
    for (double& w : m.inference.layers.back().w) w *= 0.1;
    return m;
}

std::vector<double> encode(const EncoderWeights& enc, const MapImage& img) {
    EncoderBatch eb;
    eb.train_mode = false;
    eb.image_ids = {0};
    eb.weights = {1.0};
    std::vector<MapImage> imgs{img};
    encoder_forward_batch(enc, imgs, eb);
    return eb.caches[0].latent;
}

Point infer_next(const InferenceWeights& inf, std::span<const double> latent, const Point& x_t,
                 const Point& x_goal, double delta, bool dropout_on, Rng& rng) {
    const auto input = assemble_input(latent, x_t, x_goal, delta);
    if (static_cast<int>(input.size()) != inf.input_dim())
        throw std::invalid_argument("inference input width mismatch");
    InfCache cache;
    inference_forward(inf, input, dropout_on, &rng, cache);
    return {std::clamp(cache.out[0], 0.0, 1.0), std::clamp(cache.out[1], 0.0, 1.0)};
}

double batch_loss(const ModelBundle& model, const TrainingSet& data, std::span<const int> batch,
                  const EvalOptions& opts) {
    return batch_forward_engine(model, data, batch, opts).loss;
}

std::vector<ParamView> trainable_params(ModelBundle& m) {
    std::vector<ParamView> out;
    out.push_back({"encoder.conv1.w", &m.encoder.conv1.w});
    out.push_back({"encoder.conv1.b", &m.encoder.conv1.b});
    out.push_back({"encoder.bn1.gamma", &m.encoder.bn1.gamma});
    out.push_back({"encoder.bn1.beta", &m.encoder.bn1.beta});
    out.push_back({"encoder.conv2.w", &m.encoder.conv2.w});
    out.push_back({"encoder.conv2.b", &m.encoder.conv2.b});
    out.push_back({"encoder.bn2.gamma", &m.encoder.bn2.gamma});
    out.push_back({"encoder.bn2.beta", &m.encoder.bn2.beta});
    out.push_back({"encoder.fc1.w", &m.encoder.fc1.w});
    out.push_back({"encoder.fc1.b", &m.encoder.fc1.b});
    out.push_back({"encoder.fc2.w", &m.encoder.fc2.w});
    out.push_back({"encoder.fc2.b", &m.encoder.fc2.b});
    for (size_t k = 0; k < m.inference.layers.size(); ++k) {
        out.push_back({"inference.fc" + std::to_string(k) + ".w", &m.inference.layers[k].w});
        out.push_back({"inference.fc" + std::to_string(k) + ".b", &m.inference.layers[k].b});
    }
    return out;
}

BackwardResult batch_backward(const ModelBundle& model, const TrainingSet& data,
                              std::span<const int> batch, const EvalOptions& opts) {
    BatchEngineResult fw = batch_forward_engine(model, data, batch, opts);
    BackwardResult out;
    out.loss = fw.loss;
    if (opts.bn_train_mode) {
        out.stats.bn1_mean = fw.enc_batch.bn1.mean;
        out.stats.bn1_var = fw.enc_batch.bn1.var;
        out.stats.bn2_mean = fw.enc_batch.bn2.mean;
        out.stats.bn2_var = fw.enc_batch.bn2.var;
    }

    InferenceGrads ig(model.inference);
    const int latent_dim = model.encoder.latent_dim();
    std::vector<std::vector<double>> d_latent(fw.enc_batch.image_ids.size(),
                                              std::vector<double>(latent_dim, 0.0));
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    for (size_t bi = 0; bi < batch.size(); ++bi) {
        const TrainingSample& s = data.samples[batch[bi]];
        const auto& cache = fw.inf_caches[bi];
        const std::vector<double> d_out{2.0 * (cache.out[0] - s.x_next.x) * inv_n,
                                        2.0 * (cache.out[1] - s.x_next.y) * inv_n};
        const std::vector<double> d_in0 =
            inference_backward(model.inference, cache, d_out, ig);
        auto& dz = d_latent[fw.sample_image_slot[bi]];
        for (int i = 0; i < latent_dim; ++i) dz[i] += d_in0[i];
    }

    EncoderGrads eg(model.encoder);
    encoder_backward_batch(model.encoder, fw.enc_batch, d_latent, eg);

    out.grads.g = {std::move(eg.conv1_w), std::move(eg.conv1_b), std::move(eg.bn1_gamma),
                   std::move(eg.bn1_beta), std::move(eg.conv2_w), std::move(eg.conv2_b),
                   std::move(eg.bn2_gamma), std::move(eg.bn2_beta), std::move(eg.fc1_w),
                   std::move(eg.fc1_b),   std::move(eg.fc2_w),   std::move(eg.fc2_b)};
    for (size_t k = 0; k < model.inference.layers.size(); ++k) {
        out.grads.g.push_back(std::move(ig.w[k]));
        out.grads.g.push_back(std::move(ig.b[k]));
    }
    return out;
}

AdamState make_adam_state(ModelBundle& model, const AdamConfig& cfg) {
    AdamState st;
    st.cfg = cfg;
    for (const auto& p : trainable_params(model)) {
        st.m.emplace_back(p.values->size(), 0.0);
        st.v.emplace_back(p.values->size(), 0.0);
    }
    return st;
}

void adam_step(AdamState& state, ModelBundle& model, const GradientSet& grads) {
    const auto params = trainable_params(model);
    if (params.size() != grads.g.size())
        throw std::invalid_argument("gradient set does not match parameter set");
    state.step += 1;
    const double b1 = state.cfg.beta1, b2 = state.cfg.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    for (size_t k = 0; k < params.size(); ++k) {
        auto& p = *params[k].values;
        auto& m = state.m[k];
        auto& v = state.v[k];
        const auto& g = grads.g[k];
        for (size_t i = 0; i < p.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p[i] -= state.cfg.lr * mhat / (std::sqrt(vhat) + state.cfg.eps);
        }
    }
}

TrainResult train(const TrainingSet& data, const TrainOptions& opts) {
    if (data.samples.empty()) throw std::invalid_argument("empty dataset");
    Rng rng = make_rng(derive_seed(opts.seed, 0x7EA1));

    EncoderConfig ec = opts.encoder;
    ec.image_size = data.image_size;
    TrainResult res{make_model(ec, opts.inference, data.normalization, rng), {}, {}};

    std::vector<int> indices(data.samples.size());
    for (size_t i = 0; i < indices.size(); ++i) indices[i] = static_cast<int>(i);
    shuffle_in_place(indices, rng);
    const size_t n_train = std::max<size_t>(1, (indices.size() * 9) / 10);
    std::vector<int> train_idx(indices.begin(), indices.begin() + n_train);
    std::vector<int> val_idx(indices.begin() + n_train, indices.end());

    auto eval_mse = [&](const std::vector<int>& idx) {
        if (idx.empty()) return 0.0;
        double acc = 0.0;
        size_t done = 0;
        EvalOptions eo;  // inference-mode batch norm, no dropout
        while (done < idx.size()) {
            const size_t take = std::min(static_cast<size_t>(opts.batch_size), idx.size() - done);
            std::span<const int> chunk(idx.data() + done, take);
            acc += batch_loss(res.model, data, chunk, eo) * static_cast<double>(take);
            done += take;
        }
        return acc / static_cast<double>(idx.size());
    };

    res.val_mse.push_back(eval_mse(val_idx));
    AdamState adam = make_adam_state(res.model, opts.adam);

    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        shuffle_in_place(train_idx, rng);
        double epoch_loss = 0.0;
        size_t done = 0;
        int batch_no = 0;
        while (done < train_idx.size()) {
            const size_t take =
                std::min(static_cast<size_t>(opts.batch_size), train_idx.size() - done);
            std::span<const int> batch(train_idx.data() + done, take);
            EvalOptions eo;
            eo.bn_train_mode = true;
            eo.dropout_on = true;
            eo.mask_seed = derive_seed(opts.seed, 0xBA7C000ULL + 100000ULL * epoch + batch_no);
            BackwardResult bw = batch_backward(res.model, data, batch, eo);
            // running statistics update from the batch statistics
            auto update_running = [](BatchNorm& bn, const std::vector<double>& mean,
                                     const std::vector<double>& var) {
                for (int c = 0; c < bn.ch; ++c) {
                    bn.run_mean[c] = kBnMomentum * bn.run_mean[c] + (1.0 - kBnMomentum) * mean[c];
                    bn.run_var[c] = kBnMomentum * bn.run_var[c] + (1.0 - kBnMomentum) * var[c];
                }
            };
            update_running(res.model.encoder.bn1, bw.stats.bn1_mean, bw.stats.bn1_var);
            update_running(res.model.encoder.bn2, bw.stats.bn2_mean, bw.stats.bn2_var);
            adam_step(adam, res.model, bw.grads);
            epoch_loss += bw.loss * static_cast<double>(take);
            done += take;
            ++batch_no;
        }
        res.train_mse.push_back(epoch_loss / static_cast<double>(train_idx.size()));
        res.val_mse.push_back(eval_mse(val_idx));
        if (opts.verbose)
            std::cerr << "epoch " << (epoch + 1) << "/" << opts.epochs << "  train mse "
                      << res.train_mse.back() << "  val mse " << res.val_mse.back() << "\n";
    }
    return res;
}

Point NeuralSampler::propose(const Point& current, const Point& toward_goal, Rng& rng) {
    const Point cn = normalize_point(model_.normalization, current);
    const Point gn = normalize_point(model_.normalization, toward_goal);
    const Point out = infer_next(model_.inference, latent_, cn, gn, delta_, dropout_on_, rng);
    return denormalize_point(model_.normalization, out);
}

PlanReport nr_rrt_plan(const Environment& env, double delta, const Point& start,
                       const Point& goal, const ModelBundle& model, const PlannerConfig& cfg,
                       Rng& rng) {
    const auto t0 = std::chrono::steady_clock::now();
    const MapImage img =
        rasterize(build_constraints(env, delta), model.image_size, model.image_size);
    NeuralSampler sampler(model, encode(model.encoder, img), delta);
    PlanReport rep = nr_rrt_plan_with_sampler(env, delta, start, goal, sampler, cfg, rng);
    // planning time includes map encoding, matching how the baseline is timed
    rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

}  // namespace riskplan
