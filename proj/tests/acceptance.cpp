// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one pass/fail line per criterion, every tolerance pinned
// in code. Criteria 8-11 share one end-to-end training run plus two ablation
// retrainings; expect roughly 60-75 minutes on two CPU cores.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "avflow/audiofe.hpp"
#include "avflow/checkpoint.hpp"
#include "avflow/cli.hpp"
#include "avflow/metrics.hpp"
#include "avflow/network.hpp"
#include "avflow/sampler.hpp"
#include "avflow/synthdata.hpp"
#include "avflow/tensor_io.hpp"
#include "avflow/trainer.hpp"
#include "testutil.hpp"

using namespace avflow;
namespace fs = std::filesystem;

namespace {

constexpr size_t kTinyParamCount = 1996040;  // pinned regression constant

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Check {
    bool ok = true;
    std::string log;

    void require(bool cond, const std::string& what) {
        ok = ok && cond;
        log += std::string("\n    [") + (cond ? "ok" : "FAIL") + "] " + what;
    }
};

std::string fmt(double v, int prec = 4) {
    std::ostringstream os;
    os.precision(prec);
    os << v;
    return os.str();
}

// ---------------------------------------------------------------------------
// Shared end-to-end state.

struct TrainedRun {
    std::unique_ptr<Trainer<float>> trainer;
    std::vector<double> losses;
    double wall_minutes = 0.0;
};

struct EvalResult {
    double f1 = 0.0;
    double mean_abs_lag_sec = 0.0;
    int scenes_failed = 0;  // degenerate envelopes
};

struct Context {
    fs::path dir;
    std::vector<ManifestRecord> base_data;
    TrainedRun base, nosync, extra;
    EvalResult base_eval_8s;
    std::string base_ckpt;
};

std::vector<ManifestRecord> gen_data_via_cli(const fs::path& dir, int n, uint64_t seed,
                                             double frac_at) {
    const std::string manifest = (dir / ("data_" + std::to_string(seed) + ".manifest")).string();
    std::ostringstream at;
    at << frac_at;
    const int rc = run_cli({"gen-data", "--out", manifest, "--n", std::to_string(n), "--seed",
                            std::to_string(seed), "--n-classes", "16", "--duration", "8",
                            "--frac-text-only", at.str()});
    if (rc != 0) throw std::runtime_error("gen-data failed");
    return manifest_from_file(manifest);
}

TrainConfig e2e_config(int64_t steps) {
    TrainConfig t;
    t.base_lr = 3e-4;
    t.warmup_steps = 200;
    t.total_steps = steps;
    t.batch_size = 4;
    t.mask_prob = 0.1;
    t.dup_factor = 5;
    t.seed = 2024;
    return t;
}

TrainedRun train_run(const ModelConfig& mcfg, const TrainConfig& tcfg,
                     std::vector<ManifestRecord> data) {
    TrainedRun run;
    const auto t0 = std::chrono::steady_clock::now();
    run.trainer = std::make_unique<Trainer<float>>(mcfg, tcfg, std::move(data));
    for (int64_t s = 0; s < tcfg.total_steps; ++s) {
        const StepStats st = run.trainer->train_step();
        run.losses.push_back(st.loss);
        if (!std::isfinite(st.loss) || !std::isfinite(st.grad_norm))
            throw std::runtime_error("non-finite telemetry at step " + std::to_string(st.step));
    }
    run.wall_minutes =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
    return run;
}

std::vector<SyntheticScene> held_out_scenes(int n, double duration, uint64_t stream) {
    std::vector<SyntheticScene> scenes;
    for (int i = 0; i < n; ++i)
        scenes.push_back(generate_scene(mix_seed(stream, i), 16, duration));
    return scenes;
}

/// Samples each scene with the defaults (25 Euler steps, guidance 4.5) and
/// scores detected channel-0 events against the scene's event times.
EvalResult evaluate_model(const Network<float>& net, const std::vector<SyntheticScene>& scenes,
                          double tol_sec) {
    EvalResult r;
    int total_m = 0, total_p = 0, total_g = 0;
    double lag_sum = 0.0;
    int lag_n = 0;
    for (size_t i = 0; i < scenes.size(); ++i) {
        SampleConfig scfg;
        scfg.duration_sec = scenes[i].duration_sec;
        scfg.seed = mix_seed(777, i);
        SampleRequest<float> req = request_from_scene<float>(scenes[i], net.cfg, true, true);
        const LatentSeq<float> gen = sample_latent(net, req, scfg);

        const auto events = detect_latent_events(gen.data, net.cfg.latent_fps);
        total_m += onset_match_count(events, scenes[i].event_times, tol_sec);
        total_p += static_cast<int>(events.size());
        total_g += static_cast<int>(scenes[i].event_times.size());

        const TrainingSample<float> gt = render_sample<float>(scenes[i], net.cfg);
        std::vector<double> gen_env(gen.data.rows), gt_env(gen.data.rows);
        for (int k = 0; k < gen.data.rows; ++k) {
            gen_env[k] = std::max(0.0, static_cast<double>(gen.data(k, 0)));
            gt_env[k] = gt.x1.data(k, 0);
        }
        try {
            lag_sum += std::abs(lag_metric(gen_env, gt_env, net.cfg.latent_fps));
            ++lag_n;
        } catch (const NumericError&) {
            ++r.scenes_failed;
        }
    }
    const double precision = total_p > 0 ? static_cast<double>(total_m) / total_p : 0.0;
    const double recall = total_g > 0 ? static_cast<double>(total_m) / total_g : 0.0;
    r.f1 = precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    r.mean_abs_lag_sec = lag_n > 0 ? lag_sum / lag_n : 1e9;
    if (r.scenes_failed > 0) r.mean_abs_lag_sec = 1e9;
    return r;
}

// ---------------------------------------------------------------------------
// Criteria.

Outcome crit1_identity_at_init() {
    Check c;
    Network<float> net(preset("tiny"));
    net.allocate(404);
    Rng rng(405);
    NetTape<float> tape;
    bool all_zero = true;
    for (int trial = 0; trial < 100; ++trial) {
        const double dur = trial % 2 == 0 ? 8.0 : 1.0;
        Conditions<float> cond;
        cond.visual.resize(static_cast<int>(std::llround(dur * 8.0)), net.cfg.visual_feat_dim);
        cond.text.resize(net.cfg.text_len, net.cfg.text_feat_dim);
        cond.sync.resize(sync_seq_len(dur), net.cfg.sync_feat_dim);
        rng.fill_normal(cond.visual);
        rng.fill_normal(cond.text);
        rng.fill_normal(cond.sync);
        LatentSeq<float> xt(MatF(static_cast<int>(std::llround(dur * 31.25)), net.cfg.latent_dim),
                            31.25);
        rng.fill_normal(xt.data);
        const auto v = net.forward(FlowTime(rng.uniform()), xt, cond, tape);
        for (float x : v.data.v)
            if (x != 0.0f) all_zero = false;
    }
    c.require(all_zero, "100 random inputs all map to exactly zero velocity");
    return {c.ok, "zero-head, zero-gate initialization" + c.log};
}

Outcome crit2_gradient_oracle() {
    Check c;

    // Exhaustive pass over every parameter of an h=8 model with the full
    // architecture; sampled pass over every tensor of the tiny preset.
    ModelConfig micro = preset("tiny");
    micro.hidden_dim = 8;
    micro.n_heads = 2;
    micro.mlp_ratio = 2.0;
    micro.latent_dim = 4;
    micro.visual_feat_dim = 12;
    micro.text_feat_dim = 10;
    micro.sync_feat_dim = 16;
    micro.text_len = 5;
    micro.time_embed_dim = 8;
    micro.n_mm_blocks = 1;
    micro.n_single_blocks = 1;

    auto checked_params = [](Network<double>& net, const std::vector<TrainingSample<double>>& batch,
                             bool exhaustive, size_t& n_checked, double& worst) {
        net.ps.zero_grad();
        testutil::net_cfm_loss(net, batch, 99, true);
        const double h = 1e-5;
        bool ok = true;
        for (size_t t = 0; t < net.ps.value.size(); ++t) {
            const size_t n = net.ps.value[t].numel();
            std::vector<size_t> idx;
            if (exhaustive) {
                idx.resize(n);
                for (size_t i = 0; i < n; ++i) idx[i] = i;
            } else {
                Rng pick(mix_seed(0xACCE, t));
                for (int p = 0; p < 4; ++p) idx.push_back(pick.next_u64() % n);
            }
            for (size_t i : idx) {
                double& p = net.ps.value[t].v[i];
                const double orig = p;
                p = orig + h;
                const double lp = testutil::net_cfm_loss(net, batch, 99, false);
                p = orig - h;
                const double lm = testutil::net_cfm_loss(net, batch, 99, false);
                p = orig;
                const double num = (lp - lm) / (2 * h);
                const double ana = net.ps.grad[t].v[i];
                const double err =
                    std::abs(num - ana) / std::max({std::abs(num), std::abs(ana), 1e-6});
                worst = std::max(worst, err);
                if (err >= 1e-4) ok = false;
                ++n_checked;
            }
        }
        return ok;
    };

    const auto t0 = std::chrono::steady_clock::now();
    {
        Network<double> net(micro);
        net.allocate(7);
        Rng prng(8);
        for (auto& m : net.ps.value)
            for (double& x : m.v) x += 0.2 * prng.normal();
        const auto batch = testutil::mixed_batch<double>(micro, 1.0, 9);
        size_t n_checked = 0;
        double worst = 0.0;
        const bool ok = checked_params(net, batch, true, n_checked, worst);
        c.require(ok && n_checked == net.ps.total_params(),
                  "h=8 model: every one of " + std::to_string(n_checked) +
                      " parameters within 1e-4 (worst rel err " + fmt(worst, 3) + ")");
    }
    {
        Network<double> net(preset("tiny"));
        net.allocate(17);
        Rng prng(18);
        for (auto& m : net.ps.value)
            for (double& x : m.v) x += 0.1 * prng.normal();
        const auto batch = testutil::mixed_batch<double>(preset("tiny"), 1.0, 19);
        size_t n_checked = 0;
        double worst = 0.0;
        const bool ok = checked_params(net, batch, false, n_checked, worst);
        c.require(ok, "tiny preset: 4 sampled elements of every tensor (" +
                          std::to_string(n_checked) + " checks, worst rel err " + fmt(worst, 3) +
                          ")");
    }
    const double mins =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
    c.require(mins < 5.0, "runtime " + fmt(mins, 3) + " min < 5 min");
    return {c.ok, "central differences on the flow-matching loss, double precision" + c.log};
}

Outcome crit3_euler_exactness() {
    Check c;
    LatentSeq<double> x0(MatD(4, 3), 31.25);
    Rng rng(31);
    rng.fill_normal(x0.data);
    LatentSeq<double> constant(MatD(4, 3), 31.25);
    rng.fill_normal(constant.data);
    auto const_field = [&](FlowTime, const LatentSeq<double>&) { return constant; };
    double worst_rel = 0.0;
    for (int n : {1, 7, 25, 500}) {
        const auto xf = euler_integrate<double>(const_field, x0, n);
        for (size_t i = 0; i < xf.data.v.size(); ++i) {
            const double expect = x0.data.v[i] + constant.data.v[i];
            worst_rel = std::max(worst_rel,
                                 std::abs(xf.data.v[i] - expect) / std::max(1.0, std::abs(expect)));
        }
    }
    c.require(worst_rel < 1e-12, "constant-field error " + fmt(worst_rel, 3) + " < 1e-12");

    auto linear_field = [](FlowTime, const LatentSeq<double>& x) { return x; };
    LatentSeq<double> one(MatD(1, 1), 31.25);
    one.data(0, 0) = 1.0;
    const auto e_approx = euler_integrate<double>(linear_field, one, 1000);
    const double err = std::abs(e_approx.data(0, 0) - std::exp(1.0));
    c.require(err < 0.002, "linear ODE at 1000 steps: |x - e| = " + fmt(err, 4) + " < 0.002");
    return {c.ok, "left-endpoint integration" + c.log};
}

Outcome crit4_aligned_rope() {
    Check c;
    const int C = 64;
    const double rate = 31.25 / 8.0;
    MatD audio = MatD::full(250, C, 1.0);
    MatD vis_aligned = MatD::full(64, C, 1.0);
    MatD vis_plain = MatD::full(64, C, 1.0);
    rope_apply(audio, 1, 1.0, 1e4);
    rope_apply(vis_aligned, 1, rate, 1e4);
    rope_apply(vis_plain, 1, 1.0, 1e4);

    auto row_argmax = [&](const MatD& aff, int i) {
        int best = 0;
        for (int j = 1; j < aff.cols; ++j)
            if (aff(i, j) > aff(i, best)) best = j;
        return best;
    };
    MatD aff(64, 250);
    kernels::matmul_nt(vis_aligned, audio, aff);
    bool aligned_ok = true;
    double worst = 0.0;
    for (int i = 0; i < 64; ++i) {
        const double dev = std::abs(row_argmax(aff, i) - i * rate);
        worst = std::max(worst, dev);
        if (dev > 1.5) aligned_ok = false;
    }
    c.require(aligned_ok, "aligned: every row argmax within 1.5 columns of i*31.25/8 (worst " +
                              fmt(worst, 3) + ")");

    MatD aff_plain(64, 250);
    kernels::matmul_nt(vis_plain, audio, aff_plain);
    bool violated = false;
    for (int i = 16; i < 64; ++i)
        if (std::abs(row_argmax(aff_plain, i) - i * rate) > 1.5) violated = true;
    c.require(violated, "unaligned control violates the bound for some i >= 16");
    return {c.ok, "all-ones affinity argmax" + c.log};
}

Outcome crit5_sync_arithmetic() {
    Check c;
    c.require(sync_seq_len(8.0) == 192, "sync_seq_len(8) = 192");
    c.require(sync_seq_len(10.0) == 240, "sync_seq_len(10) = 240");
    // As stated: rate exactly 24 for every integer duration 1..60. The clip
    // formula 8*(floor((25T-16)/8)+1) gives 24T only for integer T in
    // [8, 15]; elsewhere it yields 16..22.9 fps (short clips) or approaches
    // the 25 fps source rate (long clips), e.g. T=1 -> 16, T=16 -> 392.
    bool all24 = true;
    std::string counterexample;
    for (int t = 1; t <= 60; ++t) {
        if (sync_seq_len(static_cast<double>(t)) != 24 * t) {
            all24 = false;
            if (counterexample.empty())
                counterexample = "first counterexample T=" + std::to_string(t) + ": len " +
                                 std::to_string(sync_seq_len(static_cast<double>(t))) + " != " +
                                 std::to_string(24 * t);
        }
    }
    c.require(all24, "rate exactly 24 for all integer durations 1..60 (" +
                         (all24 ? std::string("holds") : counterexample) +
                         "; arithmetically possible only for T in [8,15])");
    return {c.ok, "clip-of-8 sequence arithmetic" + c.log};
}

Outcome crit6_param_count() {
    Check c;
    const size_t s16 = count_params(preset("S-16kHz"));
    c.require(s16 >= 125000000 && s16 <= 190000000,
              "S-16kHz parameter count " + std::to_string(s16) + " within [125M, 190M]");
    const size_t tiny = count_params(preset("tiny"));
    c.require(tiny == kTinyParamCount, "tiny count " + std::to_string(tiny) +
                                           " equals the pinned constant " +
                                           std::to_string(kTinyParamCount));
    return {c.ok, "n_heads = h/64, mlp_ratio = 4" + c.log};
}

Outcome crit7_metric_oracles() {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(71);

    EmbeddingSet self;
    self.vectors.resize(400, 8);
    rng.fill_normal(self.vectors);
    c.require(frechet_distance(self, self) < 1e-8, "FD self-distance < 1e-8");

    {
        EmbeddingSet a, b;
        a.vectors.resize(500, 1);
        b.vectors.resize(600, 1);
        for (int i = 0; i < 500; ++i) a.vectors(i, 0) = 0.4 + 1.3 * rng.normal();
        for (int i = 0; i < 600; ++i) b.vectors(i, 0) = -0.9 + 0.6 * rng.normal();
        auto stats = [](const MatD& m) {
            double mu = 0;
            for (double v : m.v) mu += v;
            mu /= m.rows;
            double var = 0;
            for (double v : m.v) var += (v - mu) * (v - mu);
            return std::pair{mu, std::sqrt(var / (m.rows - 1))};
        };
        const auto [ma, sa] = stats(a.vectors);
        const auto [mb, sb] = stats(b.vectors);
        const double closed = (ma - mb) * (ma - mb) + (sa - sb) * (sa - sb);
        const double got = frechet_distance(a, b);
        c.require(std::abs(got - closed) < 1e-10,
                  "1-D FD matches the scalar closed form to 1e-10 (|diff| = " +
                      fmt(std::abs(got - closed), 3) + ")");
    }

    {
        const int k = 6;
        LogitSet onehot;
        onehot.logits.resize(k, k);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) onehot.logits(i, j) = i == j ? 60.0 : 0.0;
        c.require(std::abs(inception_score(onehot) - k) < 1e-3,
                  "IS of K one-hot classes = K within 1e-3");
    }

    {
        LogitSet l;
        l.logits.resize(1000, 4);
        rng.fill_normal(l.logits);
        // independent summation, no max-shift
        const int n = 1000, k = 4;
        std::vector<std::vector<double>> p(n, std::vector<double>(k));
        std::vector<double> marg(k, 0.0);
        for (int i = 0; i < n; ++i) {
            double sum = 0;
            for (int j = 0; j < k; ++j) sum += std::exp(l.logits(i, j));
            for (int j = 0; j < k; ++j) {
                p[i][j] = std::exp(l.logits(i, j)) / sum;
                marg[j] += p[i][j] / n;
            }
        }
        double kl = 0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < k; ++j) kl += p[i][j] * std::log(p[i][j] / marg[j]) / n;
        const double oracle_is = std::exp(kl);
        c.require(std::abs(inception_score(l) - oracle_is) < 1e-10,
                  "IS matches the brute-force oracle to 1e-10");

        LogitSet gen;
        gen.logits.resize(1000, 4);
        rng.fill_normal(gen.logits);
        l.paired = gen.paired = true;
        double okl = 0;
        for (int i = 0; i < n; ++i) {
            double sp = 0, sq = 0;
            for (int j = 0; j < k; ++j) {
                sp += std::exp(l.logits(i, j));
                sq += std::exp(gen.logits(i, j));
            }
            for (int j = 0; j < k; ++j) {
                const double pp = std::exp(l.logits(i, j)) / sp;
                const double qq = std::exp(gen.logits(i, j)) / sq;
                okl += pp * std::log(pp / qq) / n;
            }
        }
        c.require(std::abs(paired_kl(l, gen) - okl) < 1e-10,
                  "paired KL matches the brute-force oracle to 1e-10");
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.require(secs < 10.0, "runtime " + fmt(secs, 3) + " s < 10 s");
    return {c.ok, "distribution metrics vs independent oracles" + c.log};
}

Outcome crit8_end_to_end(Context& ctx) {
    Check c;
    ctx.base_data = gen_data_via_cli(ctx.dir, 2000, 501, 0.3);
    const int64_t steps = 1600;
    c.require(steps <= 20000, "step budget " + std::to_string(steps) + " <= 20000");
    ctx.base = train_run(preset("tiny"), e2e_config(steps), ctx.base_data);
    c.require(ctx.base.wall_minutes <= 30.0,
              "training wall time " + fmt(ctx.base.wall_minutes, 3) + " min <= 30 min");

    auto mean_range = [&](const std::vector<double>& v, int lo, int hi) {
        double s = 0;
        for (int i = lo; i < hi; ++i) s += v[i];
        return s / (hi - lo);
    };
    const double loss_100 = mean_range(ctx.base.losses, 90, 110);
    const double loss_final =
        mean_range(ctx.base.losses, static_cast<int>(ctx.base.losses.size()) - 20,
                   static_cast<int>(ctx.base.losses.size()));
    c.require(loss_final < 0.30 * loss_100,
              "final loss " + fmt(loss_final) + " < 30% of step-100 loss " + fmt(loss_100));

    const auto scenes = held_out_scenes(24, 8.0, 0xE7A1);
    ctx.base_eval_8s = evaluate_model(ctx.base.trainer->net, scenes, 0.1);
    c.require(ctx.base_eval_8s.f1 >= 0.8,
              "held-out onset F1 " + fmt(ctx.base_eval_8s.f1) + " >= 0.8 at +-0.1 s");
    const double lag_frames = ctx.base_eval_8s.mean_abs_lag_sec * 31.25;
    c.require(lag_frames <= 2.0,
              "mean |lag| " + fmt(lag_frames, 3) + " latent frames <= 2");

    ctx.base_ckpt = (ctx.dir / "base.ckpt").string();
    ctx.base.trainer->save(ctx.base_ckpt);
    return {c.ok, "tiny preset, 2000 samples, " + std::to_string(steps) + " steps" + c.log};
}

Outcome crit9_ablations(Context& ctx) {
    Check c;

    // (i) drop the synchronization features
    ModelConfig nosync = preset("tiny");
    nosync.use_sync = false;
    ctx.nosync = train_run(nosync, e2e_config(1600), ctx.base_data);
    const auto scenes = held_out_scenes(24, 8.0, 0xE7A1);
    const EvalResult ev = evaluate_model(ctx.nosync.trainer->net, scenes, 0.1);
    const double f1_drop = ctx.base_eval_8s.f1 - ev.f1;
    c.require(f1_drop >= 0.1, "no-sync onset F1 " + fmt(ev.f1) + " drops by " + fmt(f1_drop) +
                                  " >= 0.1 absolute");
    const double lag_ratio = ev.mean_abs_lag_sec / std::max(ctx.base_eval_8s.mean_abs_lag_sec,
                                                            1.0 / 31.25 / 16.0);
    c.require(ev.mean_abs_lag_sec >= 2.0 * ctx.base_eval_8s.mean_abs_lag_sec,
              "no-sync mean |lag| " + fmt(ev.mean_abs_lag_sec, 3) + " s at least doubles (ratio " +
                  fmt(lag_ratio, 3) + ")");

    // (ii) extra unconditional data must not hurt the conditional loss
    std::vector<ManifestRecord> extra_data = ctx.base_data;
    for (int i = 0; i < 600; ++i) {
        ManifestRecord r;
        r.seed = mix_seed(0xA0D10, i);
        r.duration_sec = 8.0;
        r.class_id = generate_scene(r.seed, 16, 8.0).class_id;
        r.has_video = false;
        r.has_text = false;
        extra_data.push_back(r);
    }
    ctx.extra = train_run(preset("tiny"), e2e_config(1600), std::move(extra_data));

    std::vector<ManifestRecord> eval_set;
    for (int i = 0; i < 32; ++i) {
        ManifestRecord r;
        r.seed = mix_seed(0xEEE7, i);
        r.duration_sec = 8.0;
        r.class_id = generate_scene(r.seed, 16, 8.0).class_id;
        eval_set.push_back(r);
    }
    const double base_loss = ctx.base.trainer->eval_loss(eval_set, 321);
    const double extra_loss = ctx.extra.trainer->eval_loss(eval_set, 321);
    c.require(extra_loss <= 1.05 * base_loss,
              "with extra unconditional data, eval loss " + fmt(extra_loss) +
                  " within 5% of base " + fmt(base_loss));
    return {c.ok, "direction-only ablations, 2 retrainings" + c.log};
}

Outcome crit10_duration_generalization(Context& ctx) {
    Check c;
    const auto scenes10 = held_out_scenes(16, 10.0, 0xD10A);
    EvalResult ev{};
    bool sampled_ok = true;
    try {
        ev = evaluate_model(ctx.base.trainer->net, scenes10, 0.1);
    } catch (const std::exception& e) {
        sampled_ok = false;
        c.require(false, std::string("sampling at 10 s raised: ") + e.what());
    }
    if (sampled_ok) {
        c.require(true, "10 s sampling succeeds on the 8 s-trained model");
        c.require(ev.f1 >= ctx.base_eval_8s.f1 - 0.15,
                  "10 s onset F1 " + fmt(ev.f1) + " within 0.15 of the 8 s figure " +
                      fmt(ctx.base_eval_8s.f1));
    }
    return {c.ok, "no positional tables to resize" + c.log};
}

Outcome crit11_determinism(Context& ctx) {
    Check c;

    std::vector<ManifestRecord> data;
    for (int i = 0; i < 12; ++i) {
        ManifestRecord r;
        r.seed = mix_seed(0x5EED, i);
        r.duration_sec = 2.0;
        r.class_id = generate_scene(r.seed, 16, 2.0).class_id;
        data.push_back(r);
    }
    TrainConfig tcfg;
    tcfg.batch_size = 2;
    tcfg.warmup_steps = 4;
    tcfg.total_steps = 16;
    tcfg.seed = 31337;

    {
        Trainer<float> a(preset("tiny"), tcfg, data);
        Trainer<float> b(preset("tiny"), tcfg, data);
        bool identical = true;
        for (int i = 0; i < 16; ++i)
            if (a.train_step().loss != b.train_step().loss) identical = false;
        c.require(identical, "same-seed loss curves identical bit for bit");
    }
    {
        Trainer<float> straight(preset("tiny"), tcfg, data);
        double loss_straight = 0;
        for (int i = 0; i < 16; ++i) loss_straight = straight.train_step().loss;
        Trainer<float> head(preset("tiny"), tcfg, data);
        for (int i = 0; i < 8; ++i) head.train_step();
        const std::string ck = (ctx.dir / "resume.ckpt").string();
        head.save(ck);
        Trainer<float> tail(preset("tiny"), tcfg, data);
        tail.resume(ck);
        double loss_resumed = 0;
        for (int i = 0; i < 8; ++i) loss_resumed = tail.train_step().loss;
        double worst = std::abs(loss_resumed - loss_straight) / std::max(1.0, loss_straight);
        for (size_t t = 0; t < straight.net.ps.value.size(); ++t)
            for (size_t i = 0; i < straight.net.ps.value[t].v.size(); ++i) {
                const double x = straight.net.ps.value[t].v[i];
                const double y = tail.net.ps.value[t].v[i];
                worst = std::max(worst, std::abs(x - y) / std::max(1.0, std::abs(x)));
            }
        c.require(worst <= 1e-10, "resume equals straight run (worst rel diff " + fmt(worst, 3) +
                                      " <= 1e-10)");
    }
    {
        const std::string l1 = (ctx.dir / "det1.lat").string();
        const std::string l2 = (ctx.dir / "det2.lat").string();
        const std::vector<std::string> base_args = {
            "sample", "--ckpt", ctx.base_ckpt, "--steps", "25", "--seed", "5",
            "--scene-seed", "12", "--duration", "8"};
        auto run_to = [&](const std::string& out) {
            auto args = base_args;
            args.push_back("--out");
            args.push_back(out);
            return run_cli(args);
        };
        const bool ok1 = run_to(l1) == 0 && run_to(l2) == 0;
        std::ifstream f1(l1, std::ios::binary), f2(l2, std::ios::binary);
        std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
        std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
        c.require(ok1 && !b1.empty() && b1 == b2, "same-seed sampling is byte-identical");
    }
    return {c.ok, "single-threaded contracts hold at any thread count" + c.log};
}

Outcome crit12_front_end() {
    Check c;
    for (const std::string name : {"16k", "44k"}) {
        const StftParams p = stft_preset(name);
        bool all_peaks = true;
        for (int k : {p.n_fft / 16, p.n_fft / 8, p.n_fft / 3}) {
            const double freq = static_cast<double>(k) * p.sample_rate / p.n_fft;
            Waveform w;
            w.sample_rate = p.sample_rate;
            w.samples.resize(p.win_len + 7 * p.hop);
            for (size_t i = 0; i < w.samples.size(); ++i)
                w.samples[i] = 0.5 * std::sin(2.0 * 3.14159265358979323846 * freq * i / p.sample_rate);
            const MatD spec = stft_magnitude(w, p);
            for (int f = 0; f < spec.rows; ++f) {
                int argmax = 0;
                for (int b = 1; b < spec.cols; ++b)
                    if (spec(f, b) > spec(f, argmax)) argmax = b;
                if (argmax != k) all_peaks = false;
            }
        }
        c.require(all_peaks, name + ": three bin-center sines peak at their bins in every frame");

        Rng rng(0xF00D);
        bool counts_ok = true;
        for (int trial = 0; trial < 20; ++trial) {
            const int len = p.win_len + rng.uniform_int(50000);
            Waveform w;
            w.sample_rate = p.sample_rate;
            w.samples.assign(len, 0.0);
            const int expect = 1 + (len - p.win_len) / p.hop;
            if (stft_magnitude(w, p).rows != expect) counts_ok = false;
        }
        c.require(counts_ok, name + ": frame-count formula matches on 20 random lengths");
    }
    return {c.ok, "spectral front-end against direct-DFT arithmetic" + c.log};
}

}  // namespace

int main() {
    Context ctx;
    ctx.dir = fs::temp_directory_path() / "avflow_acceptance";
    fs::create_directories(ctx.dir);

    struct Criterion {
        int id;
        std::string name;
        std::function<Outcome()> fn;
    };
    const std::vector<Criterion> criteria = {
        {1, "identity at init", [] { return crit1_identity_at_init(); }},
        {2, "gradient oracle", [] { return crit2_gradient_oracle(); }},
        {3, "euler exactness", [] { return crit3_euler_exactness(); }},
        {4, "aligned rope", [] { return crit4_aligned_rope(); }},
        {5, "sync arithmetic", [] { return crit5_sync_arithmetic(); }},
        {6, "parameter count", [] { return crit6_param_count(); }},
        {7, "metric oracles", [] { return crit7_metric_oracles(); }},
        {8, "end-to-end training", [&] { return crit8_end_to_end(ctx); }},
        {9, "ablation directions", [&] { return crit9_ablations(ctx); }},
        {10, "duration generalization", [&] { return crit10_duration_generalization(ctx); }},
        {11, "determinism and resume", [&] { return crit11_determinism(ctx); }},
        {12, "front-end correctness", [&] { return crit12_front_end(); }},
    };

    int failures = 0;
    for (const auto& crit : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = crit.fn();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("criterion %2d %-26s %s  (%.1f s)  %s\n", crit.id, crit.name.c_str(),
                    out.pass ? "PASS" : "FAIL", secs, out.detail.c_str());
        std::fflush(stdout);
        if (!out.pass) ++failures;
    }
    std::printf("\n%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
                criteria.size());
    fs::remove_all(ctx.dir);
    return failures == 0 ? 0 : 1;
}
