// SPDX-License-Identifier: Apache-2.0
//
// Network building blocks with hand-written backward passes. Layers are
// stateless descriptors holding tensor ids into a ParamStore; activations
// live in caller-owned cache structs so concurrent forward passes never
// share mutable state.
#pragma once

#include <array>
#include <string>
#include <vector>

#include "avflow/errors.hpp"
#include "avflow/kernels.hpp"
#include "avflow/mat.hpp"

namespace avflow {

enum class Init { FanIn, Zero, One };

/// Registry of named parameter tensors. Shapes are registered up front;
/// payloads are allocated on demand so parameter counting never touches
/// memory proportional to the model size.
template <typename T>
struct ParamStore {
    struct Spec {
        std::string name;
        int rows = 0;
        int cols = 0;
        int fan_in = 0;
        Init init = Init::FanIn;
    };

    std::vector<Spec> specs;
    std::vector<Mat<T>> value;
    std::vector<Mat<T>> grad;
    bool allocated = false;

    int add(const std::string& name, int rows, int cols, int fan_in, Init init) {
        specs.push_back({name, rows, cols, fan_in, init});
        return static_cast<int>(specs.size()) - 1;
    }

    void allocate() {
        value.resize(specs.size());
        grad.resize(specs.size());
        for (size_t i = 0; i < specs.size(); ++i) {
            value[i].resize(specs[i].rows, specs[i].cols);
            grad[i].resize(specs[i].rows, specs[i].cols);
        }
        allocated = true;
    }

    /// Fan-in-scaled uniform for weights; zeros for biases, modulation
    /// producers, and the output head; ones for the scale-producer biases so
    /// conditioned norms start as plain LayerNorm instead of annihilating
    /// their input (an all-zero scale is a stationary point the optimizer
    /// cannot leave). One seeded stream, registration order.
    void init_params(uint64_t seed) {
        Rng rng(mix_seed(seed, 0x494e4954ULL));
        for (size_t i = 0; i < specs.size(); ++i) {
            if (specs[i].init == Init::Zero) {
                value[i].zero();
            } else if (specs[i].init == Init::One) {
                std::fill(value[i].v.begin(), value[i].v.end(), T(1));
            } else {
                const double bound = std::sqrt(3.0 / static_cast<double>(specs[i].fan_in));
                rng.fill_uniform(value[i], -bound, bound);
            }
        }
    }

    void zero_grad() {
        for (auto& g : grad) g.zero();
    }

    size_t total_params() const {
        size_t n = 0;
        for (const auto& s : specs) n += static_cast<size_t>(s.rows) * static_cast<size_t>(s.cols);
        return n;
    }

    int find(const std::string& name) const {
        for (size_t i = 0; i < specs.size(); ++i)
            if (specs[i].name == name) return static_cast<int>(i);
        return -1;
    }
};

enum class Act { SiLU, SELU };

template <typename T>
inline T act_eval(Act a, T x) {
    if (a == Act::SiLU) {
        const T s = T(1) / (T(1) + std::exp(-x));
        return x * s;
    }
    constexpr double lambda = 1.0507009873554804934193349852946;
    constexpr double alpha = 1.6732632423543772848170429916717;
    return x > T(0) ? static_cast<T>(lambda) * x
                    : static_cast<T>(lambda * alpha) * (std::exp(x) - T(1));
}

template <typename T>
inline T act_grad(Act a, T x) {
    if (a == Act::SiLU) {
        const T s = T(1) / (T(1) + std::exp(-x));
        return s * (T(1) + x * (T(1) - s));
    }
    constexpr double lambda = 1.0507009873554804934193349852946;
    constexpr double alpha = 1.6732632423543772848170429916717;
    return x > T(0) ? static_cast<T>(lambda) : static_cast<T>(lambda * alpha) * std::exp(x);
}

template <typename T>
void act_forward(Act a, const Mat<T>& x, Mat<T>& y) {
    y.resize(x.rows, x.cols);
    for (size_t i = 0; i < x.v.size(); ++i) y.v[i] = act_eval(a, x.v[i]);
}

template <typename T>
void act_backward(Act a, const Mat<T>& x, const Mat<T>& dy, Mat<T>& dx) {
    for (size_t i = 0; i < x.v.size(); ++i) dx.v[i] += dy.v[i] * act_grad(a, x.v[i]);
}

// ---------------------------------------------------------------------------
// Linear: y = x W + b with W (in, out), so forward rides the fast nn kernel.

template <typename T>
struct Linear {
    int w = -1, b = -1;
    int in = 0, out = 0;

    void init(ParamStore<T>& ps, const std::string& name, int in_dim, int out_dim, Init kind,
              Init bias_kind = Init::Zero) {
        in = in_dim;
        out = out_dim;
        w = ps.add(name + ".w", in_dim, out_dim, in_dim, kind);
        b = ps.add(name + ".b", 1, out_dim, in_dim, bias_kind);
    }

    void forward(const ParamStore<T>& ps, const Mat<T>& x, Mat<T>& y) const {
        check_contract(x.cols == in, "linear: input width mismatch");
        y.resize(x.rows, out);
        kernels::matmul_nn(x, ps.value[w], y);
        kernels::add_row_inplace(y, ps.value[b].row(0));
    }

    void backward(ParamStore<T>& ps, const Mat<T>& x, const Mat<T>& dy, Mat<T>* dx) const {
        kernels::matmul_tn(x, dy, ps.grad[w], true);
        kernels::colsum_accum(dy, ps.grad[b].row(0));
        if (dx != nullptr) kernels::matmul_nt(dy, ps.value[w], *dx, true);
    }
};

// ---------------------------------------------------------------------------
// 1D convolution over the sequence axis, odd kernel, replicate padding
// (edge frames repeat, so constant-in-time inputs give constant outputs).
// Weights are stored tap-major as k stacked (in, out) blocks.

template <typename T>
struct Conv1d {
    int w = -1, b = -1;
    int in = 0, out = 0, k = 0;

    void init(ParamStore<T>& ps, const std::string& name, int in_dim, int out_dim, int kernel,
              Init kind) {
        check_contract(kernel % 2 == 1, "conv1d: kernel must be odd");
        in = in_dim;
        out = out_dim;
        k = kernel;
        w = ps.add(name + ".w", kernel * in_dim, out_dim, in_dim * kernel, kind);
        b = ps.add(name + ".b", 1, out_dim, in_dim * kernel, Init::Zero);
    }

    void forward(const ParamStore<T>& ps, const Mat<T>& x, Mat<T>& y) const {
        check_contract(x.cols == in, "conv1d: input width mismatch");
        check_contract(x.rows >= 1, "conv1d: empty input");
        const int L = x.rows;
        const int p = (k - 1) / 2;
        y.resize(L, out);
        for (int i = 0; i < L; ++i) {
            T* r = y.row(i);
            const T* bias = ps.value[b].row(0);
            for (int j = 0; j < out; ++j) r[j] = bias[j];
        }
        const Mat<T>& W = ps.value[w];
        for (int tap = 0; tap < k; ++tap) {
            const int o = tap - p;
            const T* wt = W.row(tap * in);  // (in, out) block
            const int main_lo = o >= 0 ? 0 : std::min(-o, L);
            const int main_hi = o >= 0 ? std::max(0, L - o) : L;
            if (main_hi > main_lo) {
                kernels::matmul_nn(main_hi - main_lo, in, out, x.row(main_lo + o), x.cols, wt,
                                   out, y.row(main_lo), y.cols, true);
            }
            // Edge strips read the clamped boundary frame.
            const int e_lo = o > 0 ? std::max(0, L - o) : 0;
            const int e_hi = o > 0 ? L : (o < 0 ? std::min(-o, L) : 0);
            if (e_hi > e_lo) {
                const T* xe = x.row(o > 0 ? L - 1 : 0);
                for (int i = e_lo; i < e_hi; ++i) {
                    T* r = y.row(i);
                    for (int q = 0; q < in; ++q) {
                        const T a = xe[q];
                        const T* w_row = wt + static_cast<size_t>(q) * out;
                        for (int j = 0; j < out; ++j) r[j] += a * w_row[j];
                    }
                }
            }
        }
    }

    void backward(ParamStore<T>& ps, const Mat<T>& x, const Mat<T>& dy, Mat<T>* dx) const {
        const int L = x.rows;
        const int p = (k - 1) / 2;
        const Mat<T>& W = ps.value[w];
        Mat<T>& gW = ps.grad[w];
        kernels::colsum_accum(dy, ps.grad[b].row(0));
        for (int tap = 0; tap < k; ++tap) {
            const int o = tap - p;
            const T* wt = W.row(tap * in);
            T* gwt = gW.row(tap * in);
            const int main_lo = o >= 0 ? 0 : std::min(-o, L);
            const int main_hi = o >= 0 ? std::max(0, L - o) : L;
            if (main_hi > main_lo) {
                const int m = main_hi - main_lo;
                // dW_tap += x_sub^T dy_sub ; dx_sub += dy_sub W_tap^T
                kernels::matmul_tn(m, in, out, x.row(main_lo + o), x.cols, dy.row(main_lo),
                                   dy.cols, gwt, out, true);
                if (dx != nullptr)
                    kernels::matmul_nt(m, out, in, dy.row(main_lo), dy.cols, wt, out,
                                       dx->row(main_lo + o), dx->cols, true);
            }
            const int e_lo = o > 0 ? std::max(0, L - o) : 0;
            const int e_hi = o > 0 ? L : (o < 0 ? std::min(-o, L) : 0);
            if (e_hi > e_lo) {
                const int xe_row = o > 0 ? L - 1 : 0;
                const T* xe = x.row(xe_row);
                for (int i = e_lo; i < e_hi; ++i) {
                    const T* dyr = dy.row(i);
                    for (int q = 0; q < in; ++q) {
                        const T a = xe[q];
                        T* gw_row = gwt + static_cast<size_t>(q) * out;
                        for (int j = 0; j < out; ++j) gw_row[j] += a * dyr[j];
                    }
                    if (dx != nullptr) {
                        T* dxe = dx->row(xe_row);
                        for (int q = 0; q < in; ++q)
                            dxe[q] += kernels::detail::dot8(dyr, wt + static_cast<size_t>(q) * out, out);
                    }
                }
            }
        }
    }
};

// ---------------------------------------------------------------------------
// Two-layer feed-forward blocks.

template <typename T>
struct MlpCache {
    Mat<T> x, pre, hidden;
};

template <typename T>
struct Mlp {
    Linear<T> fc1, fc2;
    Act act = Act::SiLU;

    void init(ParamStore<T>& ps, const std::string& name, int dim, int hidden, int out_dim,
              Act a = Act::SiLU) {
        act = a;
        fc1.init(ps, name + ".fc1", dim, hidden, Init::FanIn);
        fc2.init(ps, name + ".fc2", hidden, out_dim, Init::FanIn);
    }

    void forward(const ParamStore<T>& ps, const Mat<T>& x, Mat<T>& y, MlpCache<T>& c) const {
        c.x = x;
        fc1.forward(ps, x, c.pre);
        act_forward(act, c.pre, c.hidden);
        fc2.forward(ps, c.hidden, y);
    }

    void backward(ParamStore<T>& ps, const Mat<T>& dy, const MlpCache<T>& c, Mat<T>* dx) const {
        Mat<T> dh(c.hidden.rows, c.hidden.cols);
        fc2.backward(ps, c.hidden, dy, &dh);
        Mat<T> dpre(c.pre.rows, c.pre.cols);
        act_backward(act, c.pre, dh, dpre);
        fc1.backward(ps, c.x, dpre, dx);
    }
};

/// Feed-forward with 1D convolutions in place of the pointwise layers,
/// for streams with temporal order. Never applied to text.
template <typename T>
struct ConvMlp {
    Conv1d<T> c1, c2;
    Act act = Act::SiLU;

    void init(ParamStore<T>& ps, const std::string& name, int dim, int hidden, int out_dim,
              int kernel, Act a = Act::SiLU) {
        act = a;
        c1.init(ps, name + ".c1", dim, hidden, kernel, Init::FanIn);
        c2.init(ps, name + ".c2", hidden, out_dim, kernel, Init::FanIn);
    }

    void forward(const ParamStore<T>& ps, const Mat<T>& x, Mat<T>& y, MlpCache<T>& c) const {
        c.x = x;
        c1.forward(ps, x, c.pre);
        act_forward(act, c.pre, c.hidden);
        c2.forward(ps, c.hidden, y);
    }

    void backward(ParamStore<T>& ps, const Mat<T>& dy, const MlpCache<T>& c, Mat<T>* dx) const {
        Mat<T> dh(c.hidden.rows, c.hidden.cols);
        c2.backward(ps, c.hidden, dy, &dh);
        Mat<T> dpre(c.pre.rows, c.pre.cols);
        act_backward(act, c.pre, dh, dpre);
        c1.backward(ps, c.x, dpre, dx);
    }
};

// ---------------------------------------------------------------------------
// LayerNorm without learned affine terms; scale and bias always come from a
// conditioning pathway.

inline constexpr double kLnEps = 1e-6;

template <typename T>
struct LnCache {
    Mat<T> xhat;
    std::vector<T> inv;
};

template <typename T>
void layernorm_forward(const Mat<T>& x, LnCache<T>& c) {
    const int n = x.cols;
    c.xhat.resize(x.rows, n);
    c.inv.assign(x.rows, T(0));
    for (int i = 0; i < x.rows; ++i) {
        const T* r = x.row(i);
        T mean = 0;
        for (int j = 0; j < n; ++j) mean += r[j];
        mean /= static_cast<T>(n);
        T var = 0;
        for (int j = 0; j < n; ++j) {
            const T d = r[j] - mean;
            var += d * d;
        }
        var /= static_cast<T>(n);
        const T inv = T(1) / std::sqrt(var + static_cast<T>(kLnEps));
        c.inv[i] = inv;
        T* o = c.xhat.row(i);
        for (int j = 0; j < n; ++j) o[j] = (r[j] - mean) * inv;
    }
}

template <typename T>
void layernorm_backward(const LnCache<T>& c, const Mat<T>& dy, Mat<T>& dx) {
    const int n = c.xhat.cols;
    for (int i = 0; i < c.xhat.rows; ++i) {
        const T* g = dy.row(i);
        const T* xh = c.xhat.row(i);
        T gsum = 0, gxsum = 0;
        for (int j = 0; j < n; ++j) {
            gsum += g[j];
            gxsum += g[j] * xh[j];
        }
        gsum /= static_cast<T>(n);
        gxsum /= static_cast<T>(n);
        T* o = dx.row(i);
        const T inv = c.inv[i];
        for (int j = 0; j < n; ++j) o[j] += inv * (g[j] - gsum - xh[j] * gxsum);
    }
}

// ---------------------------------------------------------------------------
// Conditioned normalization and gating. The condition has either one row
// (global, broadcast over the sequence) or one row per token (frame-aligned).

template <typename T>
struct ModLnCache {
    LnCache<T> ln;
    Mat<T> c;
    Mat<T> gamma, beta;
};

template <typename T>
struct ModLn {
    Linear<T> gamma_p, beta_p;

    void init(ParamStore<T>& ps, const std::string& name, int dim) {
        gamma_p.init(ps, name + ".gamma", dim, dim, Init::Zero, Init::One);
        beta_p.init(ps, name + ".beta", dim, dim, Init::Zero);
    }

    void forward(const ParamStore<T>& ps, const Mat<T>& x, const Mat<T>& cond, Mat<T>& y,
                 ModLnCache<T>& c) const {
        check_contract(cond.rows == 1 || cond.rows == x.rows,
                       "modln: condition rows must be 1 or match the sequence");
        c.c = cond;
        layernorm_forward(x, c.ln);
        gamma_p.forward(ps, cond, c.gamma);
        beta_p.forward(ps, cond, c.beta);
        y.resize(x.rows, x.cols);
        for (int i = 0; i < x.rows; ++i) {
            const int ci = cond.rows == 1 ? 0 : i;
            const T* xh = c.ln.xhat.row(i);
            const T* g = c.gamma.row(ci);
            const T* bt = c.beta.row(ci);
            T* o = y.row(i);
            for (int j = 0; j < x.cols; ++j) o[j] = xh[j] * g[j] + bt[j];
        }
    }

    void backward(ParamStore<T>& ps, const Mat<T>& dy, const ModLnCache<T>& c, Mat<T>& dx,
                  Mat<T>& dcond) const {
        const int rows = dy.rows, cols = dy.cols;
        Mat<T> dgamma(c.gamma.rows, cols);
        Mat<T> dbeta(c.beta.rows, cols);
        Mat<T> dxhat(rows, cols);
        for (int i = 0; i < rows; ++i) {
            const int ci = c.c.rows == 1 ? 0 : i;
            const T* g = c.gamma.row(ci);
            const T* xh = c.ln.xhat.row(i);
            const T* d = dy.row(i);
            T* dg = dgamma.row(ci);
            T* db = dbeta.row(ci);
            T* dxh = dxhat.row(i);
            for (int j = 0; j < cols; ++j) {
                dg[j] += d[j] * xh[j];
                db[j] += d[j];
                dxh[j] = d[j] * g[j];
            }
        }
        layernorm_backward(c.ln, dxhat, dx);
        gamma_p.backward(ps, c.c, dgamma, &dcond);
        beta_p.backward(ps, c.c, dbeta, &dcond);
    }
};

template <typename T>
struct GateCache {
    Mat<T> c, g, x;
};

template <typename T>
struct Gate {
    Linear<T> gate_p;

    void init(ParamStore<T>& ps, const std::string& name, int dim) {
        gate_p.init(ps, name + ".gate", dim, dim, Init::Zero);
    }

    void forward(const ParamStore<T>& ps, const Mat<T>& x, const Mat<T>& cond, Mat<T>& y,
                 GateCache<T>& c) const {
        check_contract(cond.rows == 1 || cond.rows == x.rows,
                       "gate: condition rows must be 1 or match the sequence");
        c.c = cond;
        c.x = x;
        gate_p.forward(ps, cond, c.g);
        y.resize(x.rows, x.cols);
        for (int i = 0; i < x.rows; ++i) {
            const T* g = c.g.row(cond.rows == 1 ? 0 : i);
            const T* xi = x.row(i);
            T* o = y.row(i);
            for (int j = 0; j < x.cols; ++j) o[j] = xi[j] * g[j];
        }
    }

    void backward(ParamStore<T>& ps, const Mat<T>& dy, const GateCache<T>& c, Mat<T>& dx,
                  Mat<T>& dcond) const {
        Mat<T> dg(c.g.rows, c.g.cols);
        for (int i = 0; i < dy.rows; ++i) {
            const int ci = c.c.rows == 1 ? 0 : i;
            const T* d = dy.row(i);
            const T* g = c.g.row(ci);
            const T* xi = c.x.row(i);
            T* dgi = dg.row(ci);
            T* dxi = dx.row(i);
            for (int j = 0; j < dy.cols; ++j) {
                dxi[j] += d[j] * g[j];
                dgi[j] += d[j] * xi[j];
            }
        }
        gate_p.backward(ps, c.c, dg, &dcond);
    }
};

// ---------------------------------------------------------------------------
// Rotary position embedding. Dimension pairs (2j, 2j+1) within each head
// rotate by theta_j * position * rate_scale, theta_j = base^(-2j/head_dim).
// Scaling rate_scale by a stream's frame-rate ratio phase-aligns it with the
// audio stream at equal wall-clock times.

template <typename T>
void rope_apply(Mat<T>& qk, const std::vector<double>& positions, int n_heads, double rate_scale,
                double base, bool inverse = false) {
    check_contract(qk.cols % n_heads == 0, "rope: width not divisible by heads");
    const int head_dim = qk.cols / n_heads;
    check_contract(head_dim % 2 == 0, "rope: head dimension must be even");
    check_contract(static_cast<int>(positions.size()) == qk.rows, "rope: positions length mismatch");
    const int pairs = head_dim / 2;
    std::vector<double> freq(pairs);
    for (int j = 0; j < pairs; ++j) freq[j] = std::pow(base, -2.0 * j / head_dim);
    for (int i = 0; i < qk.rows; ++i) {
        const double p = positions[i] * rate_scale;
        T* r = qk.row(i);
        for (int hd = 0; hd < n_heads; ++hd) {
            T* h = r + hd * head_dim;
            for (int j = 0; j < pairs; ++j) {
                const double ang = p * freq[j];
                const T c = static_cast<T>(std::cos(ang));
                const T s = static_cast<T>(inverse ? -std::sin(ang) : std::sin(ang));
                const T a = h[2 * j], b = h[2 * j + 1];
                h[2 * j] = a * c - b * s;
                h[2 * j + 1] = a * s + b * c;
            }
        }
    }
}

template <typename T>
void rope_apply(Mat<T>& qk, int n_heads, double rate_scale, double base, bool inverse = false) {
    std::vector<double> pos(qk.rows);
    for (int i = 0; i < qk.rows; ++i) pos[i] = static_cast<double>(i);
    rope_apply(qk, pos, n_heads, rate_scale, base, inverse);
}

// ---------------------------------------------------------------------------
// Multi-head scaled dot-product attention over already-projected q/k/v.

template <typename T>
struct AttnCache {
    Mat<T> q, k, v;
    std::vector<Mat<T>> probs;  // per-head (L, L)
};

template <typename T>
void attention_forward(const Mat<T>& q, const Mat<T>& k, const Mat<T>& v, int n_heads, Mat<T>& y,
                       AttnCache<T>& c) {
    check_contract(q.cols == k.cols && k.cols == v.cols, "attention: width mismatch");
    check_contract(q.rows == k.rows && k.rows == v.rows, "attention: length mismatch");
    check_contract(q.cols % n_heads == 0, "attention: width not divisible by heads");
    const int L = q.rows;
    const int dh = q.cols / n_heads;
    const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
    c.q = q;
    c.k = k;
    c.v = v;
    c.probs.assign(n_heads, Mat<T>());
    y.resize(L, q.cols);
    for (int hd = 0; hd < n_heads; ++hd) {
        Mat<T>& p = c.probs[hd];
        p.resize(L, L);
        const size_t off = static_cast<size_t>(hd) * dh;
        kernels::matmul_nt(L, dh, L, q.v.data() + off, q.cols, k.v.data() + off, k.cols, p.v.data(),
                           L, false);
        for (T& x : p.v) x *= scale;
        kernels::softmax_rows(p);
        kernels::matmul_nn(L, L, dh, p.v.data(), L, v.v.data() + off, v.cols, y.v.data() + off,
                           y.cols, false);
    }
}

template <typename T>
void attention_backward(const AttnCache<T>& c, int n_heads, const Mat<T>& dy, Mat<T>& dq,
                        Mat<T>& dk, Mat<T>& dv) {
    const int L = c.q.rows;
    const int dh = c.q.cols / n_heads;
    const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
    for (int hd = 0; hd < n_heads; ++hd) {
        const Mat<T>& p = c.probs[hd];
        const size_t off = static_cast<size_t>(hd) * dh;
        // dV += P^T dY ; dP = dY V^T
        kernels::matmul_tn(L, L, dh, p.v.data(), L, dy.v.data() + off, dy.cols, dv.v.data() + off,
                           dv.cols, true);
        Mat<T> dp(L, L);
        kernels::matmul_nt(L, dh, L, dy.v.data() + off, dy.cols, c.v.v.data() + off, c.v.cols,
                           dp.v.data(), L, false);
        // softmax rows: dS = P * (dP - rowdot(dP, P)), then scale.
        for (int i = 0; i < L; ++i) {
            T* dpi = dp.row(i);
            const T* pi = p.row(i);
            T dot = 0;
            for (int j = 0; j < L; ++j) dot += dpi[j] * pi[j];
            for (int j = 0; j < L; ++j) dpi[j] = pi[j] * (dpi[j] - dot) * scale;
        }
        // dQ += dS K ; dK += dS^T Q
        kernels::matmul_nn(L, L, dh, dp.v.data(), L, c.k.v.data() + off, c.k.cols,
                           dq.v.data() + off, dq.cols, true);
        kernels::matmul_tn(L, L, dh, dp.v.data(), L, c.q.v.data() + off, c.q.cols,
                           dk.v.data() + off, dk.cols, true);
    }
}

}  // namespace avflow
