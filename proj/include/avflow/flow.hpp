// SPDX-License-Identifier: Apache-2.0
//
// Conditional flow matching: straight-line interpolation between noise and
// data, the velocity regression loss, Euler integration of the learned
// field, and classifier-free guidance.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "avflow/errors.hpp"
#include "avflow/mat.hpp"

namespace avflow {

/// Time-ordered audio latent sequence, shape (L_audio, latent_dim).
template <typename T>
struct LatentSeq {
    Mat<T> data;
    double fps = 31.25;

    LatentSeq() = default;
    LatentSeq(Mat<T> d, double f) : data(std::move(d)), fps(f) {}
    int length() const { return data.rows; }
    int channels() const { return data.cols; }
};

/// Flow timestep in [0, 1].
struct FlowTime {
    double t = 0.0;
    explicit FlowTime(double value) : t(value) {
        check_contract(t >= 0.0 && t <= 1.0, "FlowTime: t outside [0, 1]");
    }
};

template <typename T>
LatentSeq<T> interpolate(const LatentSeq<T>& x0, const LatentSeq<T>& x1, FlowTime t) {
    check_contract(x0.data.same_shape(x1.data), "interpolate: shape mismatch");
    LatentSeq<T> out(Mat<T>(x0.data.rows, x0.data.cols), x0.fps);
    const T tt = static_cast<T>(t.t);
    const T omt = static_cast<T>(1.0 - t.t);
    for (size_t i = 0; i < out.data.v.size(); ++i)
        out.data.v[i] = tt * x1.data.v[i] + omt * x0.data.v[i];
    return out;
}

/// Velocity of the straight path: x1 - x0 for every t.
template <typename T>
LatentSeq<T> target_velocity(const LatentSeq<T>& x0, const LatentSeq<T>& x1) {
    check_contract(x0.data.same_shape(x1.data), "target_velocity: shape mismatch");
    LatentSeq<T> out(Mat<T>(x0.data.rows, x0.data.cols), x0.fps);
    for (size_t i = 0; i < out.data.v.size(); ++i) out.data.v[i] = x1.data.v[i] - x0.data.v[i];
    return out;
}

/// v_uncond + w * (v_cond - v_uncond).
template <typename T>
LatentSeq<T> cfg_velocity(const LatentSeq<T>& v_cond, const LatentSeq<T>& v_uncond, double w) {
    check_contract(v_cond.data.same_shape(v_uncond.data), "cfg_velocity: shape mismatch");
    LatentSeq<T> out(Mat<T>(v_cond.data.rows, v_cond.data.cols), v_cond.fps);
    const T wt = static_cast<T>(w);
    for (size_t i = 0; i < out.data.v.size(); ++i)
        out.data.v[i] = v_uncond.data.v[i] + wt * (v_cond.data.v[i] - v_uncond.data.v[i]);
    return out;
}

/// Left-endpoint Euler steps from t=0 to t=1: x += field(k/n, x) / n.
/// `field` is evaluated with whatever conditions the caller baked in.
template <typename T>
LatentSeq<T> euler_integrate(const std::function<LatentSeq<T>(FlowTime, const LatentSeq<T>&)>& field,
                             LatentSeq<T> x, int n_steps) {
    check_contract(n_steps >= 1, "euler_integrate: n_steps must be >= 1");
    const double h = 1.0 / n_steps;
    for (int k = 0; k < n_steps; ++k) {
        LatentSeq<T> v = field(FlowTime(static_cast<double>(k) / n_steps), x);
        check_contract(v.data.same_shape(x.data), "euler_integrate: field changed shape");
        for (size_t i = 0; i < x.data.v.size(); ++i)
            x.data.v[i] += static_cast<T>(h) * v.data.v[i];
        if (!x.data.all_finite())
            throw NumericError("euler_integrate: non-finite state after step " + std::to_string(k));
    }
    return x;
}

/// Draws shared by the loss and the trainer so both see identical batches:
/// one uniform t and one standard-normal x0 per item.
template <typename T>
struct FlowDraw {
    double t = 0.0;
    Mat<T> x0;
};

template <typename T>
FlowDraw<T> draw_flow(Rng& rng, int rows, int cols) {
    FlowDraw<T> d;
    d.t = rng.uniform();
    d.x0.resize(rows, cols);
    rng.fill_normal(d.x0);
    return d;
}

/// Mean squared error between predicted and target velocity, averaged over
/// every element of the batch. `model(t, index, x_t)` returns the predicted
/// velocity for batch item `index`; conditions travel with the index so this
/// function stays agnostic of their representation.
template <typename T>
double cfm_loss(const std::function<LatentSeq<T>(FlowTime, size_t, const LatentSeq<T>&)>& model,
                const std::vector<LatentSeq<T>>& x1_batch, Rng& rng) {
    check_contract(!x1_batch.empty(), "cfm_loss: empty batch");
    double total = 0.0;
    for (size_t b = 0; b < x1_batch.size(); ++b) {
        const LatentSeq<T>& x1 = x1_batch[b];
        FlowDraw<T> d = draw_flow<T>(rng, x1.data.rows, x1.data.cols);
        LatentSeq<T> x0(std::move(d.x0), x1.fps);
        LatentSeq<T> xt = interpolate(x0, x1, FlowTime(d.t));
        LatentSeq<T> target = target_velocity(x0, x1);
        LatentSeq<T> pred = model(FlowTime(d.t), b, xt);
        check_contract(pred.data.same_shape(x1.data), "cfm_loss: model changed shape");
        if (!pred.data.all_finite())
            throw NumericError("cfm_loss: non-finite model output at sample " + std::to_string(b));
        double se = 0.0;
        for (size_t i = 0; i < pred.data.v.size(); ++i) {
            const double e = static_cast<double>(pred.data.v[i]) - static_cast<double>(target.data.v[i]);
            se += e * e;
        }
        total += se / static_cast<double>(pred.data.numel());
    }
    return total / static_cast<double>(x1_batch.size());
}

}  // namespace avflow
