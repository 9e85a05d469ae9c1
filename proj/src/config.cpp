// SPDX-License-Identifier: Apache-2.0
#include "avflow/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "avflow/errors.hpp"

namespace avflow {

void ModelConfig::validate() const {
    if (hidden_dim <= 0 || n_heads <= 0 || hidden_dim % n_heads != 0)
        throw ConfigError("model: hidden_dim must be divisible by n_heads");
    if (head_dim() % 2 != 0)
        throw ConfigError("model: head dimension must be even (positions rotate dimension pairs)");
    if (!(latent_fps > visual_fps && visual_fps > 0.0))
        throw ConfigError("model: need latent_fps > visual_fps > 0");
    if (sync_fps <= 0.0) throw ConfigError("model: sync_fps must be positive");
    if (n_mm_blocks < 0 || n_single_blocks < 0) throw ConfigError("model: negative block count");
    if (latent_dim <= 0 || text_len <= 0) throw ConfigError("model: nonpositive dimension");
    if (mlp_ratio <= 0.0) throw ConfigError("model: mlp_ratio must be positive");
    if (time_embed_dim <= 0 || time_embed_dim % 2 != 0)
        throw ConfigError("model: time_embed_dim must be positive and even");
}

void TrainConfig::validate() const {
    if (mask_prob < 0.0 || mask_prob > 1.0) throw ConfigError("train: mask_prob outside [0, 1]");
    if (warmup_steps >= total_steps) throw ConfigError("train: warmup_steps must be < total_steps");
    if (base_lr <= 0.0) throw ConfigError("train: base_lr must be positive");
    if (batch_size <= 0) throw ConfigError("train: batch_size must be positive");
    if (dup_factor < 1) throw ConfigError("train: dup_factor must be >= 1");
    if (ema_rel_width <= 0.0) throw ConfigError("train: ema_rel_width must be positive");
}

void SampleConfig::validate() const {
    if (n_steps < 1) throw ConfigError("sample: n_steps must be >= 1");
    if (duration_sec <= 0.0) throw ConfigError("sample: duration_sec must be positive");
}

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = {"S-16kHz", "S-44.1kHz", "M-44.1kHz", "L-44.1kHz",
                                                   "tiny"};
    return names;
}

ModelConfig preset(const std::string& name) {
    ModelConfig c;
    // 44.1 kHz latents run at sample_rate / hop / 2 = 44100/512/2 fps,
    // which table summaries round to 43.07.
    const double fps_44k = 44100.0 / 512.0 / 2.0;
    if (name == "S-16kHz") {
        c.n_mm_blocks = 4; c.n_single_blocks = 8; c.hidden_dim = 448;
        c.latent_dim = 20; c.latent_fps = 31.25;
    } else if (name == "S-44.1kHz") {
        c.n_mm_blocks = 4; c.n_single_blocks = 8; c.hidden_dim = 448;
        c.latent_dim = 40; c.latent_fps = fps_44k;
    } else if (name == "M-44.1kHz") {
        c.n_mm_blocks = 4; c.n_single_blocks = 8; c.hidden_dim = 896;
        c.latent_dim = 40; c.latent_fps = fps_44k;
    } else if (name == "L-44.1kHz") {
        c.n_mm_blocks = 7; c.n_single_blocks = 14; c.hidden_dim = 896;
        c.latent_dim = 40; c.latent_fps = fps_44k;
    } else if (name == "tiny") {
        c.n_mm_blocks = 2; c.n_single_blocks = 2; c.hidden_dim = 64;
        c.latent_dim = 8; c.latent_fps = 31.25;
    } else {
        std::string valid;
        for (const auto& n : preset_names()) valid += (valid.empty() ? "" : ", ") + n;
        throw ConfigError("unknown preset '" + name + "' (valid: " + valid + ")");
    }
    c.n_heads = std::max(1, c.hidden_dim / 64);
    c.validate();
    return c;
}

double lr_at_step(int64_t step, const TrainConfig& cfg) {
    const double scale = cfg.base_lr / 1e-4;
    if (step < cfg.warmup_steps)
        return cfg.base_lr * static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
    const double frac = static_cast<double>(step) / static_cast<double>(cfg.total_steps);
    if (frac < 0.8) return cfg.base_lr;
    if (frac < 0.9) return 1e-5 * scale;
    return 1e-6 * scale;
}

namespace {

using Setter = std::function<void(const std::string&)>;

int64_t parse_int(const std::string& key, const std::string& s) {
    try {
        size_t pos = 0;
        int64_t v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: bad integer for '" + key + "': " + s);
    }
}

double parse_real(const std::string& key, const std::string& s) {
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: bad number for '" + key + "': " + s);
    }
}

bool parse_bool(const std::string& key, const std::string& s) {
    if (s == "1" || s == "true") return true;
    if (s == "0" || s == "false") return false;
    throw ConfigError("config: bad bool for '" + key + "': " + s);
}

std::string fmt_real(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

struct Field {
    std::string key;
    std::function<std::string()> get;
    Setter set;
};

std::vector<Field> fields(ModelConfig& m, TrainConfig& t, SampleConfig& s) {
    std::vector<Field> f;
    auto add_int = [&f](const std::string& k, auto* p) {
        f.push_back({k, [p] { return std::to_string(*p); },
                     [p, k](const std::string& v) { *p = static_cast<std::decay_t<decltype(*p)>>(parse_int(k, v)); }});
    };
    auto add_real = [&f](const std::string& k, double* p) {
        f.push_back({k, [p] { return fmt_real(*p); },
                     [p, k](const std::string& v) { *p = parse_real(k, v); }});
    };
    auto add_bool = [&f](const std::string& k, bool* p) {
        f.push_back({k, [p] { return *p ? std::string("true") : std::string("false"); },
                     [p, k](const std::string& v) { *p = parse_bool(k, v); }});
    };
    add_int("model.n_mm_blocks", &m.n_mm_blocks);
    add_int("model.n_single_blocks", &m.n_single_blocks);
    add_int("model.hidden_dim", &m.hidden_dim);
    add_int("model.latent_dim", &m.latent_dim);
    add_real("model.latent_fps", &m.latent_fps);
    add_int("model.visual_feat_dim", &m.visual_feat_dim);
    add_int("model.text_feat_dim", &m.text_feat_dim);
    add_int("model.sync_feat_dim", &m.sync_feat_dim);
    add_real("model.visual_fps", &m.visual_fps);
    add_real("model.sync_fps", &m.sync_fps);
    add_int("model.text_len", &m.text_len);
    add_int("model.n_heads", &m.n_heads);
    add_real("model.mlp_ratio", &m.mlp_ratio);
    add_int("model.time_embed_dim", &m.time_embed_dim);
    add_real("model.time_freq_max", &m.time_freq_max);
    add_real("model.rope_base", &m.rope_base);
    add_bool("model.use_sync", &m.use_sync);
    add_real("train.base_lr", &t.base_lr);
    add_int("train.warmup_steps", &t.warmup_steps);
    add_int("train.total_steps", &t.total_steps);
    add_real("train.beta1", &t.beta1);
    add_real("train.beta2", &t.beta2);
    add_real("train.weight_decay", &t.weight_decay);
    add_real("train.mask_prob", &t.mask_prob);
    add_int("train.dup_factor", &t.dup_factor);
    add_real("train.ema_rel_width", &t.ema_rel_width);
    add_int("train.batch_size", &t.batch_size);
    add_int("train.seed", &t.seed);
    add_real("train.grad_clip", &t.grad_clip);
    add_int("sample.n_steps", &s.n_steps);
    add_real("sample.cfg_strength", &s.cfg_strength);
    add_real("sample.duration_sec", &s.duration_sec);
    add_int("sample.seed", &s.seed);
    return f;
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

std::string serialize_configs(const ModelConfig& mc, const TrainConfig& tc, const SampleConfig& sc) {
    ModelConfig m = mc;
    TrainConfig t = tc;
    SampleConfig s = sc;
    std::string out;
    for (const auto& f : fields(m, t, s)) out += f.key + " = " + f.get() + "\n";
    return out;
}

void apply_config_kv(const std::string& key, const std::string& value, ModelConfig& m,
                     TrainConfig& t, SampleConfig& s) {
    if (key == "model.preset") {
        m = preset(value);
        return;
    }
    for (const auto& f : fields(m, t, s)) {
        if (f.key == key) {
            f.set(value);
            return;
        }
    }
    throw ConfigError("config: unknown key '" + key + "'");
}

void apply_config_file(const std::string& path, ModelConfig& m, TrainConfig& t, SampleConfig& s) {
    std::ifstream in(path);
    if (!in) throw IoError("config: cannot open " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: " + path + ":" + std::to_string(lineno) + ": expected key = value");
        apply_config_kv(trim(line.substr(0, eq)), trim(line.substr(eq + 1)), m, t, s);
    }
}

uint64_t config_hash(const ModelConfig& m, const TrainConfig& t, const SampleConfig& s) {
    const std::string text = serialize_configs(m, t, s);
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace avflow
