// SPDX-License-Identifier: Apache-2.0
//
// Training loop: AdamW with decoupled weight decay, warmup + step-drop
// schedule, gradient clipping, running EMA of the weights, and checkpoint
// resume. Every random draw is derived from (seed, purpose, counter), so a
// resumed run continues bit-exactly.
#pragma once

#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "avflow/checkpoint.hpp"
#include "avflow/config.hpp"
#include "avflow/flow.hpp"
#include "avflow/network.hpp"
#include "avflow/synthdata.hpp"

namespace avflow {

namespace rngtag {
inline constexpr uint64_t kMask = 0x4d41534bULL;
inline constexpr uint64_t kFlow = 0x464c4f57ULL;
inline constexpr uint64_t kEval = 0x4556414cULL;
inline constexpr uint64_t kSample = 0x53414d50ULL;
}  // namespace rngtag

/// Decoupled-weight-decay Adam. With lr == 0 the whole update, decay
/// included, is inert.
template <typename T>
struct AdamW {
    std::vector<Mat<T>> m, v;
    int64_t t = 0;

    void init(const ParamStore<T>& ps) {
        m.resize(ps.specs.size());
        v.resize(ps.specs.size());
        for (size_t i = 0; i < ps.specs.size(); ++i) {
            m[i].resize(ps.specs[i].rows, ps.specs[i].cols);
            v[i].resize(ps.specs[i].rows, ps.specs[i].cols);
        }
    }

    void update(ParamStore<T>& ps, double lr, double beta1, double beta2, double weight_decay,
                double eps = 1e-8) {
        ++t;
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (size_t i = 0; i < ps.value.size(); ++i) {
            T* w = ps.value[i].v.data();
            const T* g = ps.grad[i].v.data();
            T* mi = m[i].v.data();
            T* vi = v[i].v.data();
            const size_t n = ps.value[i].numel();
            for (size_t j = 0; j < n; ++j) {
                mi[j] = static_cast<T>(beta1 * mi[j] + (1.0 - beta1) * g[j]);
                vi[j] = static_cast<T>(beta2 * vi[j] + (1.0 - beta2) * g[j] * g[j]);
                const double mhat = mi[j] / bc1;
                const double vhat = vi[j] / bc2;
                w[j] -= static_cast<T>(lr * (mhat / (std::sqrt(vhat) + eps) + weight_decay * w[j]));
            }
        }
    }
};

/// Running exponential moving average of the weights. The per-step decay is
/// chosen so the averaging window spans rel_width * total_steps steps:
/// decay = 1 - 1 / max(1, rel_width * total_steps).
template <typename T>
struct Ema {
    std::vector<Mat<T>> shadow;
    double decay = 0.999;

    void init(const ParamStore<T>& ps, double rel_width, int64_t total_steps) {
        decay = 1.0 - 1.0 / std::max(1.0, rel_width * static_cast<double>(total_steps));
        shadow.resize(ps.specs.size());
        for (size_t i = 0; i < ps.specs.size(); ++i) shadow[i] = ps.value[i];
    }

    void update(const ParamStore<T>& ps) {
        for (size_t i = 0; i < shadow.size(); ++i) {
            T* s = shadow[i].v.data();
            const T* w = ps.value[i].v.data();
            const size_t n = shadow[i].numel();
            for (size_t j = 0; j < n; ++j)
                s[j] = static_cast<T>(decay * s[j] + (1.0 - decay) * w[j]);
        }
    }
};

struct StepStats {
    int64_t step = 0;
    double lr = 0.0;
    double loss = 0.0;
    double grad_norm = 0.0;
    double wall_ms = 0.0;
};

template <typename T>
class Trainer {
public:
    Network<T> net;
    TrainConfig tcfg;
    AdamW<T> opt;
    Ema<T> ema;
    int64_t step = 0;
    int n_classes = 16;

    Trainer(const ModelConfig& mcfg, const TrainConfig& train_cfg,
            std::vector<ManifestRecord> records)
        : net(mcfg), tcfg(train_cfg), records_(std::move(records)) {
        tcfg.validate();
        check_contract(!records_.empty(), "trainer: empty dataset");
        net.allocate(tcfg.seed);
        opt.init(net.ps);
        ema.init(net.ps, tcfg.ema_rel_width, tcfg.total_steps);
        for (size_t i = 0; i < records_.size(); ++i)
            (records_[i].has_video ? av_ : at_).push_back(static_cast<int>(i));
        epoch_len_ = static_cast<int64_t>(av_.size()) * tcfg.dup_factor +
                     static_cast<int64_t>(at_.size());
    }

    /// Renders and masks the sample at global position n of the stream of
    /// consumed samples. Masking draws depend only on (seed, n).
    TrainingSample<T> assemble_sample(int64_t n) {
        const int64_t epoch = n / epoch_len_;
        const int64_t pos = n % epoch_len_;
        if (epoch != cached_epoch_) {
            order_ = balance_interleave(av_, at_, tcfg.dup_factor,
                                        mix_seed(tcfg.seed, static_cast<uint64_t>(epoch)));
            cached_epoch_ = epoch;
        }
        const ManifestRecord& rec = records_[order_[pos]];
        SyntheticScene scene = generate_scene(rec.seed, n_classes, rec.duration_sec);
        scene.class_id = rec.class_id;
        TrainingSample<T> sample = render_sample<T>(scene, net.cfg);
        sample.cond.has_video = rec.has_video;
        sample.cond.has_text = rec.has_text;
        Rng mask_rng(mix_seed(tcfg.seed, rngtag::kMask, static_cast<uint64_t>(n)));
        mask_modalities(sample, tcfg.mask_prob, mask_rng);
        return sample;
    }

    StepStats train_step() {
        const auto t0 = std::chrono::steady_clock::now();
        StepStats stats;
        stats.step = step;
        stats.lr = lr_at_step(step, tcfg);
        net.ps.zero_grad();

        const int B = tcfg.batch_size;
        double loss = 0.0;
        NetTape<T> tape;
        for (int b = 0; b < B; ++b) {
            const int64_t n = step * B + b;
            TrainingSample<T> sample = assemble_sample(n);
            const bool has_video = sample.cond.has_video;
            const bool has_text = sample.cond.has_text;
            net.substitute_missing(sample.cond, has_video, has_text);

            Rng flow_rng(mix_seed(tcfg.seed, rngtag::kFlow, static_cast<uint64_t>(n)));
            FlowDraw<T> draw = draw_flow<T>(flow_rng, sample.x1.data.rows, sample.x1.data.cols);
            LatentSeq<T> x0(std::move(draw.x0), sample.x1.fps);
            LatentSeq<T> xt = interpolate(x0, sample.x1, FlowTime(draw.t));
            LatentSeq<T> target = target_velocity(x0, sample.x1);

            LatentSeq<T> pred = net.forward(FlowTime(draw.t), xt, sample.cond, tape);
            const double numel = static_cast<double>(pred.data.numel());
            double se = 0.0;
            Mat<T> d_vel(pred.data.rows, pred.data.cols);
            for (size_t i = 0; i < pred.data.v.size(); ++i) {
                const double e =
                    static_cast<double>(pred.data.v[i]) - static_cast<double>(target.data.v[i]);
                se += e * e;
                d_vel.v[i] = static_cast<T>(2.0 * e / (numel * B));
            }
            const double sample_loss = se / numel;
            if (!std::isfinite(sample_loss))
                throw NumericError("train: non-finite loss at step " + std::to_string(step) +
                                   ", batch slot " + std::to_string(b));
            loss += sample_loss / B;
            net.backward(d_vel, tape);
        }

        stats.grad_norm = clip_gradients();
        opt.update(net.ps, stats.lr, tcfg.beta1, tcfg.beta2, tcfg.weight_decay);
        ema.update(net.ps);
        ++step;

        stats.loss = loss;
        stats.wall_ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
        return stats;
    }

    /// CFM loss over a fixed set with fixed draws; comparable across runs.
    double eval_loss(const std::vector<ManifestRecord>& eval_set, uint64_t eval_seed) {
        check_contract(!eval_set.empty(), "eval_loss: empty set");
        double total = 0.0;
        NetTape<T> tape;
        for (size_t i = 0; i < eval_set.size(); ++i) {
            const ManifestRecord& rec = eval_set[i];
            SyntheticScene scene = generate_scene(rec.seed, n_classes, rec.duration_sec);
            scene.class_id = rec.class_id;
            TrainingSample<T> sample = render_sample<T>(scene, net.cfg);
            net.substitute_missing(sample.cond, rec.has_video, rec.has_text);
            Rng rng(mix_seed(eval_seed, rngtag::kEval, static_cast<uint64_t>(i)));
            FlowDraw<T> draw = draw_flow<T>(rng, sample.x1.data.rows, sample.x1.data.cols);
            LatentSeq<T> x0(std::move(draw.x0), sample.x1.fps);
            LatentSeq<T> xt = interpolate(x0, sample.x1, FlowTime(draw.t));
            LatentSeq<T> target = target_velocity(x0, sample.x1);
            LatentSeq<T> pred = net.forward(FlowTime(draw.t), xt, sample.cond, tape);
            double se = 0.0;
            for (size_t j = 0; j < pred.data.v.size(); ++j) {
                const double e =
                    static_cast<double>(pred.data.v[j]) - static_cast<double>(target.data.v[j]);
                se += e * e;
            }
            total += se / static_cast<double>(pred.data.numel());
        }
        return total / static_cast<double>(eval_set.size());
    }

    void save(const std::string& path) const {
        static_assert(std::is_same_v<T, float>, "checkpoints are f32");
        save_checkpoint(path, net, tcfg, step, &opt.m, &opt.v, &ema.shadow);
    }

    void resume(const std::string& path) {
        static_assert(std::is_same_v<T, float>, "checkpoints are f32");
        step = load_checkpoint_into(path, net, &opt.m, &opt.v, &ema.shadow);
        opt.t = step;
    }

private:
    /// Global-norm clip; returns the pre-clip norm. Throws on non-finite
    /// gradients, naming the first offending tensor.
    double clip_gradients() {
        double sq = 0.0;
        for (size_t i = 0; i < net.ps.grad.size(); ++i) {
            const double s = kernels::sumsq(net.ps.grad[i]);
            if (!std::isfinite(s))
                throw NumericError("train: non-finite gradient in tensor " +
                                   net.ps.specs[i].name + " at step " + std::to_string(step));
            sq += s;
        }
        const double norm = std::sqrt(sq);
        if (tcfg.grad_clip > 0.0 && norm > tcfg.grad_clip) {
            const T scale = static_cast<T>(tcfg.grad_clip / norm);
            for (auto& g : net.ps.grad)
                for (T& x : g.v) x *= scale;
        }
        return norm;
    }

    std::vector<ManifestRecord> records_;
    std::vector<int> av_, at_;
    int64_t epoch_len_ = 0;
    int64_t cached_epoch_ = -1;
    std::vector<int> order_;
};

}  // namespace avflow
