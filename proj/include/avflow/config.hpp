// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace avflow {

/// Network geometry and frame-rate constants.
///
/// Named presets: S-16kHz, S-44.1kHz, M-44.1kHz, L-44.1kHz, plus `tiny`
/// for CPU-minutes end-to-end runs.
struct ModelConfig {
    int n_mm_blocks = 4;       // multimodal transformer blocks (N1)
    int n_single_blocks = 8;   // audio-only blocks (N2)
    int hidden_dim = 448;      // transformer width (h)
    int latent_dim = 20;       // channels per audio latent frame
    double latent_fps = 31.25;
    int visual_feat_dim = 1024;
    int text_feat_dim = 1024;
    int sync_feat_dim = 768;
    double visual_fps = 8.0;
    double sync_fps = 24.0;
    int text_len = 77;
    int n_heads = 7;           // defaults to hidden_dim / 64
    double mlp_ratio = 4.0;
    int time_embed_dim = 256;  // Fourier features for the flow timestep
    double time_freq_max = 1e4;
    double rope_base = 1e4;
    bool use_sync = true;      // false drops sync features from the frame condition

    int head_dim() const { return hidden_dim / n_heads; }
    int mlp_hidden() const { return static_cast<int>(hidden_dim * mlp_ratio); }
    /// Positional frequency multiplier for the visual stream.
    double visual_rate_scale() const { return latent_fps / visual_fps; }

    void validate() const;
};

/// Returns the named preset. Throws ConfigError listing valid names otherwise.
ModelConfig preset(const std::string& name);
const std::vector<std::string>& preset_names();

/// Optimization hyperparameters.
struct TrainConfig {
    double base_lr = 1e-4;
    int64_t warmup_steps = 1000;
    int64_t total_steps = 300000;
    double beta1 = 0.9;
    double beta2 = 0.95;
    double weight_decay = 1e-6;
    double mask_prob = 0.1;    // per-modality drop probability during training
    int dup_factor = 5;        // duplication of audio-visual samples per epoch
    double ema_rel_width = 0.05;
    int batch_size = 4;
    uint64_t seed = 1;
    double grad_clip = 1.0;    // global-norm clip; <= 0 disables

    void validate() const;
};

/// Generation-time settings.
struct SampleConfig {
    int n_steps = 25;
    double cfg_strength = 4.5;
    double duration_sec = 8.0;
    uint64_t seed = 1;

    void validate() const;
};

/// Learning rate at a step: linear warmup to base_lr, flat until 80% of
/// total, then two fixed drops (scaled by base_lr / 1e-4).
double lr_at_step(int64_t step, const TrainConfig& cfg);

/// Canonical `key = value` serialization covering every field of all three
/// structs, with `model.` / `train.` / `sample.` prefixes.
std::string serialize_configs(const ModelConfig& m, const TrainConfig& t, const SampleConfig& s);

/// Applies `key = value` assignments from a config file. Unknown keys and
/// malformed lines raise ConfigError. `model.preset = <name>` loads a preset
/// before later keys override individual fields.
void apply_config_file(const std::string& path, ModelConfig& m, TrainConfig& t, SampleConfig& s);

/// Applies a single assignment (the CLI override path).
void apply_config_kv(const std::string& key, const std::string& value, ModelConfig& m,
                     TrainConfig& t, SampleConfig& s);

/// FNV-1a over the canonical serialization; reports embed this.
uint64_t config_hash(const ModelConfig& m, const TrainConfig& t, const SampleConfig& s);

}  // namespace avflow
