// SPDX-License-Identifier: Apache-2.0
#include "psmlab/net.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace psm {

void TimeEmbedding::write(double t, double* out) const {
    int half = dim / 2;
    for (int k = 0; k < half; ++k) {
        double frac = half > 1 ? static_cast<double>(k) / (half - 1) : 0.0;
        double freq = min_freq * std::pow(max_freq / min_freq, frac);
        out[2 * k] = std::sin(freq * t);
        out[2 * k + 1] = std::cos(freq * t);
    }
}

ScoreNet ScoreNet::create(int input_dim, std::vector<int> hidden_dims,
                          int time_embed_dim, std::uint64_t seed) {
    if (input_dim < 1) throw ConfigError("network input dimension must be >= 1");
    if (time_embed_dim < 2 || time_embed_dim % 2 != 0)
        throw ConfigError("time embedding dimension must be a positive even number");
    for (int h : hidden_dims)
        if (h < 1) throw ConfigError("hidden layer widths must be >= 1");

    ScoreNet net;
    net.input_dim = input_dim;
    net.hidden_dims = std::move(hidden_dims);
    net.embed.dim = time_embed_dim;

    std::mt19937_64 rng = make_rng(seed, 0x6e657477ull);
    int in = input_dim + time_embed_dim;
    std::vector<int> outs = net.hidden_dims;
    outs.push_back(input_dim);
    for (int out : outs) {
        Linear layer;
        layer.in = in;
        layer.out = out;
        layer.W.resize(static_cast<size_t>(in) * out);
        layer.b.assign(static_cast<size_t>(out), 0.0);
        double bound = std::sqrt(6.0 / (in + out));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (double& w : layer.W) w = dist(rng);
        net.layers.push_back(std::move(layer));
        in = out;
    }
    return net;
}

namespace {

inline double silu(double a) { return a / (1.0 + std::exp(-a)); }

inline double silu_grad(double a) {
    double s = 1.0 / (1.0 + std::exp(-a));
    return s * (1.0 + a * (1.0 - s));
}

// y = W x + b for one layer.
void affine(const Linear& l, const double* x, double* y) {
    for (int o = 0; o < l.out; ++o) {
        const double* row = l.W.data() + static_cast<size_t>(o) * l.in;
        double acc = l.b[static_cast<size_t>(o)];
        for (int i = 0; i < l.in; ++i) acc += row[i] * x[i];
        y[o] = acc;
    }
}

// Pre-activations per layer for one sample; input0 is the embedded input.
struct Workspace {
    Vec input0;
    std::vector<Vec> pre;  // pre-activation of every layer
    std::vector<Vec> post; // activated output of every hidden layer
};

void forward_into(const ScoreNet& net, std::span<const double> x, double t,
                  Workspace& ws) {
    if (static_cast<int>(x.size()) != net.input_dim)
        throw std::invalid_argument("network input has dimension " +
                                    std::to_string(x.size()) + ", expected " +
                                    std::to_string(net.input_dim));
    size_t n_layers = net.layers.size();
    ws.input0.resize(static_cast<size_t>(net.input_dim) + net.embed.dim);
    std::copy(x.begin(), x.end(), ws.input0.begin());
    net.embed.write(t, ws.input0.data() + net.input_dim);
    ws.pre.resize(n_layers);
    ws.post.resize(n_layers);

    const double* cur = ws.input0.data();
    for (size_t l = 0; l < n_layers; ++l) {
        const Linear& lin = net.layers[l];
        ws.pre[l].resize(static_cast<size_t>(lin.out));
        affine(lin, cur, ws.pre[l].data());
        if (l + 1 < n_layers) {
            ws.post[l].resize(static_cast<size_t>(lin.out));
            for (int o = 0; o < lin.out; ++o) ws.post[l][static_cast<size_t>(o)] = silu(ws.pre[l][static_cast<size_t>(o)]);
            cur = ws.post[l].data();
        }
    }
}

// Backpropagates dL/d(output) through the recorded workspace, accumulating
// parameter gradients into grad (same flat layout as ScoreNet::get_params).
void backward_accumulate(const ScoreNet& net, const Workspace& ws,
                         Vec delta, Vec& grad) {
    size_t n_layers = net.layers.size();
    // Offsets of each layer's W block in the flat gradient.
    std::vector<size_t> offset(n_layers);
    size_t off = 0;
    for (size_t l = 0; l < n_layers; ++l) {
        offset[l] = off;
        off += net.layers[l].W.size() + net.layers[l].b.size();
    }

    for (size_t l = n_layers; l-- > 0;) {
        const Linear& lin = net.layers[l];
        const double* input = l == 0 ? ws.input0.data() : ws.post[l - 1].data();
        double* gW = grad.data() + offset[l];
        double* gb = gW + lin.W.size();
        for (int o = 0; o < lin.out; ++o) {
            double d = delta[static_cast<size_t>(o)];
            double* grow = gW + static_cast<size_t>(o) * lin.in;
            for (int i = 0; i < lin.in; ++i) grow[i] += d * input[i];
            gb[o] += d;
        }
        if (l == 0) break;
        Vec prev(static_cast<size_t>(lin.in), 0.0);
        for (int o = 0; o < lin.out; ++o) {
            double d = delta[static_cast<size_t>(o)];
            const double* row = lin.W.data() + static_cast<size_t>(o) * lin.in;
            for (int i = 0; i < lin.in; ++i) prev[static_cast<size_t>(i)] += d * row[i];
        }
        for (int i = 0; i < lin.in; ++i)
            prev[static_cast<size_t>(i)] *= silu_grad(ws.pre[l - 1][static_cast<size_t>(i)]);
        delta = std::move(prev);
    }
}

} // namespace

Vec ScoreNet::forward(std::span<const double> x, double t) const {
    Workspace ws;
    forward_into(*this, x, t, ws);
    return ws.pre.back();
}

void ScoreNet::forward_batch(const double* X, int B, double t, double* out) const {
    if (B <= 0) return;
    int workers = worker_count();
    int n_chunks = std::min(B, std::max(1, workers * 4));
    int chunk_size = (B + n_chunks - 1) / n_chunks;
    parallel_for_chunks(n_chunks, [&](int c) {
        int lo = c * chunk_size;
        int hi = std::min(B, lo + chunk_size);
        Workspace ws;
        for (int s = lo; s < hi; ++s) {
            forward_into(*this,
                         std::span<const double>(X + static_cast<size_t>(s) * input_dim,
                                                 static_cast<size_t>(input_dim)),
                         t, ws);
            std::copy(ws.pre.back().begin(), ws.pre.back().end(),
                      out + static_cast<size_t>(s) * input_dim);
        }
    });
}

size_t ScoreNet::n_params() const {
    size_t n = 0;
    for (const Linear& l : layers) n += l.W.size() + l.b.size();
    return n;
}

Vec ScoreNet::get_params() const {
    Vec p;
    p.reserve(n_params());
    for (const Linear& l : layers) {
        p.insert(p.end(), l.W.begin(), l.W.end());
        p.insert(p.end(), l.b.begin(), l.b.end());
    }
    return p;
}

void ScoreNet::set_params(std::span<const double> params) {
    if (params.size() != n_params())
        throw std::invalid_argument("parameter vector has wrong length");
    size_t off = 0;
    for (Linear& l : layers) {
        std::copy(params.begin() + static_cast<long>(off),
                  params.begin() + static_cast<long>(off + l.W.size()), l.W.begin());
        off += l.W.size();
        std::copy(params.begin() + static_cast<long>(off),
                  params.begin() + static_cast<long>(off + l.b.size()), l.b.begin());
        off += l.b.size();
    }
}

void ScoreNet::assert_finite(const std::string& where) const {
    for (const Linear& l : layers) {
        for (double w : l.W)
            if (!std::isfinite(w)) throw NumericError("non-finite weight after " + where);
        for (double b : l.b)
            if (!std::isfinite(b)) throw NumericError("non-finite bias after " + where);
    }
}

GradResult net_grad(const ScoreNet& net, const std::vector<Vec>& x, const Vec& t,
                    const std::vector<Vec>& target, const Vec& weight) {
    size_t B = x.size();
    if (B == 0) throw DataError("empty training batch");
    if (t.size() != B || target.size() != B || weight.size() != B)
        throw std::invalid_argument("batch arrays have mismatched lengths");
    for (size_t s = 0; s < B; ++s)
        for (double v : target[s])
            if (!std::isfinite(v))
                throw DataError("non-finite training target in sample " + std::to_string(s));

    size_t n_params = net.n_params();
    int n_chunks = std::min<int>(static_cast<int>(B), 16);
    int chunk_size = static_cast<int>((B + n_chunks - 1) / n_chunks);
    std::vector<Vec> chunk_grad(static_cast<size_t>(n_chunks));
    Vec chunk_loss(static_cast<size_t>(n_chunks), 0.0);

    parallel_for_chunks(n_chunks, [&](int c) {
        chunk_grad[static_cast<size_t>(c)].assign(n_params, 0.0);
        Workspace ws;
        size_t lo = static_cast<size_t>(c) * chunk_size;
        size_t hi = std::min(B, lo + chunk_size);
        for (size_t s = lo; s < hi; ++s) {
            forward_into(net, x[s], t[s], ws);
            const Vec& out = ws.pre.back();
            if (out.size() != target[s].size())
                throw std::invalid_argument("target dimension mismatch in sample " +
                                            std::to_string(s));
            Vec delta(out.size());
            double sq = 0.0;
            for (size_t i = 0; i < out.size(); ++i) {
                double r = out[i] - target[s][i];
                sq += r * r;
                delta[i] = 2.0 * weight[s] * r / static_cast<double>(B);
            }
            chunk_loss[static_cast<size_t>(c)] += weight[s] * sq / static_cast<double>(B);
            if (weight[s] != 0.0)
                backward_accumulate(net, ws, std::move(delta), chunk_grad[static_cast<size_t>(c)]);
        }
    });

    GradResult res;
    res.grads.assign(n_params, 0.0);
    for (int c = 0; c < n_chunks; ++c) {
        res.loss += chunk_loss[static_cast<size_t>(c)];
        for (size_t i = 0; i < n_params; ++i) res.grads[i] += chunk_grad[static_cast<size_t>(c)][i];
    }
    return res;
}

AdamState AdamState::init(const ScoreNet& net, double lr, double weight_decay,
                          long total_steps) {
    AdamState st;
    st.lr = lr;
    st.weight_decay = weight_decay;
    st.total_steps = total_steps;
    st.first_moment.assign(net.n_params(), 0.0);
    st.second_moment.assign(net.n_params(), 0.0);
    return st;
}

double AdamState::current_lr() const {
    if (total_steps <= 0) return lr;
    double frac = std::min<double>(static_cast<double>(step), static_cast<double>(total_steps)) /
                  static_cast<double>(total_steps);
    return lr * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

void adam_step(AdamState& state, ScoreNet& net, std::span<const double> grads) {
    if (grads.size() != net.n_params())
        throw std::invalid_argument("gradient vector has wrong length");
    for (size_t i = 0; i < grads.size(); ++i)
        if (!std::isfinite(grads[i]))
            throw NumericError("non-finite gradient at parameter " + std::to_string(i) +
                               " on step " + std::to_string(state.step + 1));

    double lr_t = state.current_lr();
    state.step += 1;
    double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

    Vec params = net.get_params();
    for (size_t i = 0; i < params.size(); ++i) {
        double g = grads[i];
        state.first_moment[i] = state.beta1 * state.first_moment[i] + (1.0 - state.beta1) * g;
        state.second_moment[i] =
            state.beta2 * state.second_moment[i] + (1.0 - state.beta2) * g * g;
        double mhat = state.first_moment[i] / bc1;
        double vhat = state.second_moment[i] / bc2;
        params[i] -= lr_t * (mhat / (std::sqrt(vhat) + state.eps) +
                             state.weight_decay * params[i]);
    }
    net.set_params(params);
    net.assert_finite("adam step " + std::to_string(state.step));
}

} // namespace psm
