// SPDX-License-Identifier: Apache-2.0
//
// Procedural multimodal scenes: timed events with a class identity rendered
// into visual features (smooth, low-rate bumps), synchronization features
// (sharp, high-rate impulses), class text features, and ground-truth latents
// whose channel 0 carries one decaying impulse per event. The sync track
// pins event timing tightly; the visual track only loosely.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "avflow/config.hpp"
#include "avflow/errors.hpp"
#include "avflow/flow.hpp"
#include "avflow/mat.hpp"
#include "avflow/network.hpp"
#include "avflow/sync.hpp"

namespace avflow {

struct SyntheticScene {
    double duration_sec = 8.0;
    int class_id = 0;
    std::vector<double> event_times;  // strictly increasing, gap >= 0.2 s
    uint64_t seed = 0;
};

template <typename T>
struct TrainingSample {
    Conditions<T> cond;
    LatentSeq<T> x1;
};

inline constexpr double kEventMinGap = 0.2;
inline constexpr double kEventDecaySec = 0.1;   // latent channel-0 impulse decay
inline constexpr double kVisualBumpSec = 0.25;  // smooth visual bump width

namespace synthseed {
inline constexpr uint64_t kScene = 0x5343454eULL;
inline constexpr uint64_t kClassVis = 0x434c5649ULL;
inline constexpr uint64_t kEventVis = 0x45564953ULL;
inline constexpr uint64_t kEventSync = 0x4556534eULL;
inline constexpr uint64_t kSyncNoise = 0x534e4f49ULL;
inline constexpr uint64_t kClassText = 0x434c5458ULL;
inline constexpr uint64_t kTexture = 0x54455854ULL;
}  // namespace synthseed

/// 1 to 8 events at uniform-random times, resampled until the minimum gap
/// holds; falls back to an even grid after too many rejections. Fully
/// determined by the scene seed.
inline SyntheticScene generate_scene(uint64_t seed, int n_classes, double duration_sec) {
    check_contract(n_classes >= 1, "generate_scene: need at least one class");
    check_contract(duration_sec > 0.0, "generate_scene: duration must be positive");
    SyntheticScene s;
    s.seed = seed;
    s.duration_sec = duration_sec;
    Rng rng(mix_seed(synthseed::kScene, seed));
    s.class_id = rng.uniform_int(n_classes);
    // Poisson-like count via Knuth's product method, clamped to [1, 8].
    const double lambda = 3.0;
    int count = 0;
    double p = 1.0;
    const double limit = std::exp(-lambda);
    while (true) {
        p *= rng.uniform();
        if (p <= limit) break;
        ++count;
    }
    count = std::clamp(count, 1, 8);
    const double margin = 0.05;
    for (int attempt = 0; attempt < 1000; ++attempt) {
        std::vector<double> times(count);
        for (double& t : times) t = margin + rng.uniform() * (duration_sec - 2.0 * margin);
        std::sort(times.begin(), times.end());
        bool ok = true;
        for (int i = 1; i < count; ++i)
            if (times[i] - times[i - 1] < kEventMinGap) ok = false;
        if (ok) {
            s.event_times = times;
            return s;
        }
    }
    s.event_times.resize(count);
    for (int i = 0; i < count; ++i)
        s.event_times[i] = duration_sec * (i + 1) / (count + 1);
    return s;
}

template <typename T>
Mat<T> class_text_features(int class_id, const ModelConfig& cfg) {
    Mat<T> m(cfg.text_len, cfg.text_feat_dim);
    Rng rng(mix_seed(synthseed::kClassText, static_cast<uint64_t>(class_id + 1)));
    rng.fill_normal(m);
    return m;
}

/// Rendering is a pure function of (scene, fixed generator seeds); repeated
/// calls are byte-identical.
template <typename T>
TrainingSample<T> render_sample(const SyntheticScene& scene, const ModelConfig& cfg) {
    TrainingSample<T> out;
    const double dur = scene.duration_sec;

    // Visual: class embedding plus a smooth bump at each event.
    const int l_v = static_cast<int>(std::llround(dur * cfg.visual_fps));
    Mat<T> class_emb(1, cfg.visual_feat_dim);
    {
        Rng rng(mix_seed(synthseed::kClassVis, static_cast<uint64_t>(scene.class_id + 1)));
        rng.fill_normal(class_emb, 0.7);
    }
    Mat<T> event_dir(1, cfg.visual_feat_dim);
    {
        Rng rng(mix_seed(synthseed::kEventVis, 0));
        rng.fill_normal(event_dir);
    }
    out.cond.visual.resize(l_v, cfg.visual_feat_dim);
    const double sigma_v = kVisualBumpSec / 2.0;
    for (int i = 0; i < l_v; ++i) {
        const double t = i / cfg.visual_fps;
        double bump = 0.0;
        for (double e : scene.event_times) {
            const double z = (t - e) / sigma_v;
            bump += std::exp(-0.5 * z * z);
        }
        T* r = out.cond.visual.row(i);
        for (int j = 0; j < cfg.visual_feat_dim; ++j)
            r[j] = class_emb(0, j) + static_cast<T>(bump) * event_dir(0, j);
    }

    // Sync: one-frame impulses on a faint noise floor; timing lives here.
    const int l_sync = sync_seq_len(dur);
    out.cond.sync.resize(l_sync, cfg.sync_feat_dim);
    {
        Rng rng(mix_seed(synthseed::kSyncNoise, scene.seed));
        rng.fill_normal(out.cond.sync, 0.02);
    }
    Mat<T> sync_dir(1, cfg.sync_feat_dim);
    {
        Rng rng(mix_seed(synthseed::kEventSync, 0));
        rng.fill_normal(sync_dir);
    }
    for (double e : scene.event_times) {
        const int j = std::clamp(static_cast<int>(std::llround(e * cfg.sync_fps)), 0, l_sync - 1);
        T* r = out.cond.sync.row(j);
        for (int c = 0; c < cfg.sync_feat_dim; ++c) r[c] += sync_dir(0, c);
    }

    out.cond.text = class_text_features<T>(scene.class_id, cfg);

    // Latent: channel 0 holds a decaying impulse per event, peak exactly at
    // round(t * fps); remaining channels hold a class texture.
    const int l_audio = static_cast<int>(std::llround(dur * cfg.latent_fps));
    out.x1.fps = cfg.latent_fps;
    out.x1.data.resize(l_audio, cfg.latent_dim);
    const double decay_frames = kEventDecaySec * cfg.latent_fps;
    for (double e : scene.event_times) {
        const int k0 = std::clamp(static_cast<int>(std::llround(e * cfg.latent_fps)), 0, l_audio - 1);
        for (int k = k0; k < l_audio; ++k) {
            const double v = std::exp(-(k - k0) / decay_frames);
            if (v < 1e-4) break;
            out.x1.data(k, 0) += static_cast<T>(v);
        }
    }
    for (int c = 1; c < cfg.latent_dim; ++c) {
        Rng rng(mix_seed(synthseed::kTexture, static_cast<uint64_t>(scene.class_id + 1),
                         static_cast<uint64_t>(c)));
        const double omega = 0.1 + 1.4 * rng.uniform();
        const double phase = 6.283185307179586 * rng.uniform();
        for (int k = 0; k < l_audio; ++k)
            out.x1.data(k, c) = static_cast<T>(0.5 * std::sin(omega * k + phase));
    }

    out.cond.has_video = true;
    out.cond.has_text = true;
    return out;
}

/// Flags flipped independently with probability p; the actual empty-token
/// substitution happens against live network parameters at batch time.
template <typename T>
void mask_modalities(TrainingSample<T>& sample, double p, Rng& rng) {
    check_contract(p >= 0.0 && p <= 1.0, "mask_modalities: p outside [0, 1]");
    if (rng.uniform() < p) sample.cond.has_video = false;
    if (rng.uniform() < p) sample.cond.has_text = false;
}

/// Epoch ordering: audio-visual samples duplicated dup_factor times,
/// concatenated with the audio-text samples, shuffled with the epoch seed.
inline std::vector<int> balance_interleave(const std::vector<int>& av_set,
                                           const std::vector<int>& at_set, int dup_factor,
                                           uint64_t epoch_seed) {
    check_contract(dup_factor >= 1, "balance_interleave: dup_factor must be >= 1");
    std::vector<int> order;
    order.reserve(av_set.size() * dup_factor + at_set.size());
    for (int d = 0; d < dup_factor; ++d) order.insert(order.end(), av_set.begin(), av_set.end());
    order.insert(order.end(), at_set.begin(), at_set.end());
    Rng rng(mix_seed(0x45504f43ULL, epoch_seed));
    rng.shuffle(order.begin(), order.end());
    return order;
}

/// Threshold peak detector on a latent channel-0 envelope. Recovers the
/// ground-truth event times exactly; also used on generated latents.
template <typename T>
std::vector<double> detect_latent_events(const Mat<T>& latent, double fps) {
    check_contract(latent.rows >= 1 && latent.cols >= 1, "detect_latent_events: empty latent");
    const int n = latent.rows;
    std::vector<double> env(n);
    double peak = 0.0;
    for (int k = 0; k < n; ++k) {
        env[k] = std::max(0.0, static_cast<double>(latent(k, 0)));
        peak = std::max(peak, env[k]);
    }
    std::vector<double> events;
    if (peak < 1e-6) return events;
    const double thresh = 0.5 * peak;
    const int min_gap = std::max(1, static_cast<int>(std::llround(kEventMinGap * fps)) - 1);
    int last = -min_gap - 1;
    for (int k = 0; k < n; ++k) {
        const bool left_ok = k == 0 || env[k] > env[k - 1];
        const bool right_ok = k == n - 1 || env[k] >= env[k + 1];
        if (env[k] >= thresh && left_ok && right_ok && k - last >= min_gap) {
            events.push_back(k / fps);
            last = k;
        }
    }
    return events;
}

// --- dataset manifest ------------------------------------------------------

/// One record per sample: the scene is regenerated from its seed at training
/// time, so the manifest stays small.
struct ManifestRecord {
    uint64_t seed = 0;
    int class_id = 0;
    double duration_sec = 8.0;
    bool has_video = true;
    bool has_text = true;
};

std::string manifest_to_text(const std::vector<ManifestRecord>& records);
std::vector<ManifestRecord> manifest_from_file(const std::string& path);

}  // namespace avflow
