// SPDX-License-Identifier: Apache-2.0
#include "avflow/cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "avflow/audiofe.hpp"
#include "avflow/checkpoint.hpp"
#include "avflow/config.hpp"
#include "avflow/errors.hpp"
#include "avflow/kernels.hpp"
#include "avflow/metrics.hpp"
#include "avflow/network.hpp"
#include "avflow/sampler.hpp"
#include "avflow/synthdata.hpp"
#include "avflow/tensor_io.hpp"
#include "avflow/trainer.hpp"

#ifndef AVFLOW_VERSION
#define AVFLOW_VERSION "unknown"
#endif

namespace avflow {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitConfig = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitIo = 5;

/// Machine-readable run record: key=value lines, written next to the
/// command's primary output unless --report overrides.
class Report {
public:
    Report(std::string command, uint64_t seed) {
        add("command", std::move(command));
        add("version", AVFLOW_VERSION);
        add("seed", std::to_string(seed));
    }

    void add(const std::string& key, std::string value) { kv_.emplace_back(key, std::move(value)); }
    void add(const std::string& key, double value) {
        std::ostringstream os;
        os.precision(17);
        os << value;
        kv_.emplace_back(key, os.str());
    }
    void add_config(const ModelConfig& m, const TrainConfig& t, const SampleConfig& s) {
        add("config_hash", std::to_string(config_hash(m, t, s)));
        std::istringstream text(serialize_configs(m, t, s));
        std::string line;
        while (std::getline(text, line)) {
            const size_t eq = line.find(" = ");
            kv_.emplace_back(line.substr(0, eq), line.substr(eq + 3));
        }
    }

    void write(const std::string& path) {
        bool has_hash = false;
        for (const auto& [k, v] : kv_)
            if (k == "config_hash") has_hash = true;
        if (!has_hash) {
            // hash of the resolved flag set, so eval runs are identifiable too
            uint64_t h = 0xcbf29ce484222325ULL;
            for (const auto& [k, v] : kv_)
                for (unsigned char c : k + "=" + v) {
                    h ^= c;
                    h *= 0x100000001b3ULL;
                }
            add("config_hash", std::to_string(h));
        }
        std::ofstream os(path, std::ios::trunc);
        if (!os) throw IoError("report: cannot open " + path + " for writing");
        for (const auto& [k, v] : kv_) os << k << " = " << v << "\n";
        if (!os) throw IoError("report: write failed for " + path);
    }

private:
    std::vector<std::pair<std::string, std::string>> kv_;
};

struct ConfigFlags {
    std::string config_path;
    std::string preset_name;
    std::vector<std::string> sets;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "Configuration file (key = value lines)");
        cmd->add_option("--preset", preset_name, "Model preset name")
            ->check(CLI::IsMember(preset_names()));
        cmd->add_option("--set", sets, "Override one config key, e.g. --set train.batch_size=8");
    }

    void resolve(ModelConfig& m, TrainConfig& t, SampleConfig& s) const {
        if (!preset_name.empty()) m = preset(preset_name);
        if (!config_path.empty()) apply_config_file(config_path, m, t, s);
        for (const std::string& kv : sets) {
            const size_t eq = kv.find('=');
            if (eq == std::string::npos)
                throw ConfigError("--set expects key=value, got '" + kv + "'");
            apply_config_kv(kv.substr(0, eq), kv.substr(eq + 1), m, t, s);
        }
        m.validate();
        t.validate();
        s.validate();
    }
};

std::string preset_for_latent_fps(double latent_fps) {
    return std::abs(latent_fps - 31.25) < 1e-6 ? "16k" : "44k";
}

std::vector<double> read_onset_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("onsets: cannot open " + path);
    std::vector<double> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        out.push_back(std::stod(line));
    }
    std::sort(out.begin(), out.end());
    return out;
}

int cmd_gen_data(const std::string& out, int n, uint64_t seed, int n_classes, double duration,
                 double frac_text_only, double frac_audio_only, std::string report_path) {
    check_contract(n >= 1, "gen-data: need at least one sample");
    check_contract(frac_text_only >= 0 && frac_audio_only >= 0 &&
                       frac_text_only + frac_audio_only <= 1.0,
                   "gen-data: fractions must be nonnegative and sum to at most 1");
    std::vector<ManifestRecord> records(n);
    Rng flag_rng(mix_seed(seed, 0x464c4147ULL));
    for (int i = 0; i < n; ++i) {
        ManifestRecord& r = records[i];
        r.seed = mix_seed(seed, static_cast<uint64_t>(i));
        r.duration_sec = duration;
        const SyntheticScene scene = generate_scene(r.seed, n_classes, duration);
        r.class_id = scene.class_id;
        const double u = flag_rng.uniform();
        if (u < frac_audio_only) {
            r.has_video = false;
            r.has_text = false;
        } else if (u < frac_audio_only + frac_text_only) {
            r.has_video = false;
            r.has_text = true;
        }
    }
    std::ofstream os(out, std::ios::trunc);
    if (!os) throw IoError("gen-data: cannot open " + out + " for writing");
    os << manifest_to_text(records);
    if (!os) throw IoError("gen-data: write failed for " + out);

    Report rep("gen-data", seed);
    rep.add("out", out);
    rep.add("n", std::to_string(n));
    rep.add("n_classes", std::to_string(n_classes));
    rep.add("duration", duration);
    rep.add("frac_text_only", frac_text_only);
    rep.add("frac_audio_only", frac_audio_only);
    rep.write(report_path.empty() ? out + ".report" : report_path);
    std::cout << "wrote " << n << " records to " << out << "\n";
    return kExitOk;
}

int cmd_train(const std::string& data, const std::string& out, const ConfigFlags& cfg_flags,
              int64_t steps, const std::string& resume, std::string log_path,
              std::string report_path) {
    ModelConfig mcfg = preset("tiny");
    TrainConfig tcfg;
    SampleConfig scfg;
    cfg_flags.resolve(mcfg, tcfg, scfg);

    std::vector<ManifestRecord> records = manifest_from_file(data);
    Trainer<float> trainer(mcfg, tcfg, std::move(records));
    if (!resume.empty()) trainer.resume(resume);
    const int64_t target = steps > 0 ? trainer.step + steps
                                     : tcfg.total_steps;

    if (log_path.empty()) log_path = out + ".log";
    std::ofstream log(log_path, resume.empty() ? std::ios::trunc : std::ios::app);
    if (!log) throw IoError("train: cannot open " + log_path + " for writing");
    log.precision(10);

    double last_loss = 0.0;
    while (trainer.step < target) {
        const StepStats s = trainer.train_step();
        last_loss = s.loss;
        log << "step=" << s.step << " lr=" << s.lr << " loss=" << s.loss
            << " grad_norm=" << s.grad_norm << " wall_ms=" << s.wall_ms << "\n";
        if (s.step % 50 == 0)
            std::cout << "step " << s.step << "  loss " << s.loss << "  lr " << s.lr << "\n";
    }
    trainer.save(out);

    Report rep("train", tcfg.seed);
    rep.add("data", data);
    rep.add("out", out);
    rep.add("log", log_path);
    rep.add("steps_run", std::to_string(trainer.step));
    rep.add("final_loss", last_loss);
    rep.add("param_count", std::to_string(trainer.net.ps.total_params()));
    rep.add_config(mcfg, tcfg, scfg);
    rep.write(report_path.empty() ? out + ".report" : report_path);
    std::cout << "saved checkpoint to " << out << " at step " << trainer.step << "\n";
    return kExitOk;
}

int cmd_sample(const std::string& ckpt, const std::string& out, const std::string& mel_out,
               SampleConfig scfg, bool with_video, bool with_text, uint64_t scene_seed,
               int n_classes, int class_override, bool use_ema, std::string report_path) {
    check_contract(scfg.duration_sec >= 1.0 && scfg.duration_sec <= 60.0,
                   "sample: duration must be within [1, 60] s");
    const CheckpointHeader header = read_checkpoint_header(ckpt);
    Network<float> net(header.model);
    net.allocate(header.train.seed);
    std::vector<MatF> ema_shadow;
    if (use_ema) {
        ema_shadow.resize(net.ps.specs.size());
        load_checkpoint_into(ckpt, net, nullptr, nullptr, &ema_shadow);
        net.ps.value = ema_shadow;
    } else {
        load_checkpoint_into(ckpt, net, nullptr, nullptr, nullptr);
    }

    SyntheticScene scene = generate_scene(scene_seed, n_classes, scfg.duration_sec);
    if (class_override >= 0) scene.class_id = class_override;
    SampleRequest<float> req = request_from_scene<float>(scene, net.cfg, with_video, with_text);
    const LatentSeq<float> latent = sample_latent(net, req, scfg);

    TensorArchive arch;
    arch.data = latent.data;
    arch.fps = latent.fps;
    arch.name = "latent";
    write_tensor_archive(out, arch);

    if (!mel_out.empty()) {
        const StftParams stft = stft_preset(preset_for_latent_fps(net.cfg.latent_fps));
        const ToyLatentCodec codec(stft, net.cfg.latent_dim);
        const MelSpectrogram mel = codec.decode(
            LatentSeq<double>(latent.data.template cast<double>(), latent.fps));
        TensorArchive mel_arch;
        mel_arch.data = mel.data.cast<float>();
        mel_arch.fps = stft.mel_fps();
        mel_arch.name = "mel";
        write_tensor_archive(mel_out, mel_arch);
    }

    Report rep("sample", scfg.seed);
    rep.add("ckpt", ckpt);
    rep.add("out", out);
    rep.add("duration", scfg.duration_sec);
    rep.add("n_steps", std::to_string(scfg.n_steps));
    rep.add("cfg_strength", scfg.cfg_strength);
    rep.add("with_video", with_video ? "1" : "0");
    rep.add("with_text", with_text ? "1" : "0");
    rep.add("scene_seed", std::to_string(scene_seed));
    rep.add("scene_class", std::to_string(scene.class_id));
    rep.add("use_ema", use_ema ? "1" : "0");
    std::ostringstream ev;
    ev.precision(17);
    for (size_t i = 0; i < scene.event_times.size(); ++i)
        ev << (i ? "," : "") << scene.event_times[i];
    rep.add("scene_events", ev.str());
    rep.add_config(net.cfg, header.train, scfg);
    rep.write(report_path.empty() ? out + ".report" : report_path);
    std::cout << "wrote latent " << out << " (" << latent.data.rows << " x " << latent.data.cols
              << ")\n";
    return kExitOk;
}

int cmd_inspect(const std::string& ckpt, std::string report_path) {
    const CheckpointHeader header = read_checkpoint_header(ckpt);
    const auto tensors = list_checkpoint_tensors(ckpt);
    size_t param_total = 0;
    for (const auto& t : tensors) {
        std::cout << t.name << "  (" << t.rows << ", " << t.cols << ")\n";
        if (t.name.rfind("param.", 0) == 0)
            param_total += static_cast<size_t>(t.rows) * static_cast<size_t>(t.cols);
    }
    const size_t expected = count_params(header.model);
    std::cout << "step: " << header.step << "\n";
    std::cout << "parameters: " << param_total << " (config expects " << expected << ")\n";
    if (param_total != expected)
        throw ConfigError("inspect: checkpoint parameter count disagrees with its config");

    Report rep("inspect", header.train.seed);
    rep.add("ckpt", ckpt);
    rep.add("step", std::to_string(header.step));
    rep.add("param_count", std::to_string(param_total));
    rep.add("tensor_count", std::to_string(tensors.size()));
    rep.add_config(header.model, header.train, SampleConfig{});
    rep.write(report_path.empty() ? ckpt + ".inspect.report" : report_path);
    return kExitOk;
}

int cmd_eval_fd(const std::string& a_path, const std::string& b_path, std::string report_path) {
    const TensorArchive a = read_tensor_archive(a_path);
    const TensorArchive b = read_tensor_archive(b_path);
    EmbeddingSet ea{a.data.cast<double>(), a.name};
    EmbeddingSet eb{b.data.cast<double>(), b.name};
    const double fd = frechet_distance(ea, eb);
    std::cout.precision(10);
    std::cout << "fd " << fd << "\n";
    Report rep("eval-fd", 0);
    rep.add("a", a_path);
    rep.add("b", b_path);
    rep.add("fd", fd);
    rep.write(report_path.empty() ? a_path + ".fd.report" : report_path);
    return kExitOk;
}

int cmd_eval_is(const std::string& path, std::string report_path) {
    const TensorArchive t = read_tensor_archive(path);
    LogitSet l{t.data.cast<double>(), false};
    const double is = inception_score(l);
    std::cout.precision(10);
    std::cout << "is " << is << "\n";
    Report rep("eval-is", 0);
    rep.add("logits", path);
    rep.add("is", is);
    rep.write(report_path.empty() ? path + ".is.report" : report_path);
    return kExitOk;
}

int cmd_eval_kl(const std::string& gt_path, const std::string& gen_path,
                std::string report_path) {
    const TensorArchive g = read_tensor_archive(gt_path);
    const TensorArchive h = read_tensor_archive(gen_path);
    LogitSet lg{g.data.cast<double>(), true};
    LogitSet lh{h.data.cast<double>(), true};
    const double kl = paired_kl(lg, lh);
    std::cout.precision(10);
    std::cout << "kl " << kl << "\n";
    Report rep("eval-kl", 0);
    rep.add("gt", gt_path);
    rep.add("gen", gen_path);
    rep.add("kl", kl);
    rep.write(report_path.empty() ? gen_path + ".kl.report" : report_path);
    return kExitOk;
}

int cmd_eval_onset(const std::string& mel_path, const std::string& wav_path,
                   const std::string& preset_name, const std::string& gt_path, double tol,
                   std::string report_path) {
    check_contract(mel_path.empty() != wav_path.empty(),
                   "eval-onset: provide exactly one of --mel or --wav");
    MelSpectrogram mel;
    if (!wav_path.empty()) {
        const StftParams p = stft_preset(preset_name);
        const Waveform w = read_wav(wav_path);
        if (w.sample_rate != p.sample_rate)
            throw ConfigError("eval-onset: wav sample rate " + std::to_string(w.sample_rate) +
                              " does not match preset " + preset_name);
        mel = mel_project(stft_magnitude(w, p), p);
    } else {
        const TensorArchive t = read_tensor_archive(mel_path);
        mel.data = t.data.cast<double>();
        mel.params = stft_preset(preset_name);
    }
    const OnsetSeries pred = detect_onsets(mel);
    OnsetSeries gt;
    gt.times = read_onset_file(gt_path);
    gt.duration = pred.duration;
    const OnsetScores s = onset_scores(pred, gt, tol);
    std::cout.precision(10);
    std::cout << "onsets " << pred.times.size() << "\naccuracy " << s.accuracy << "\nap " << s.ap
              << "\nf1 " << s.f1 << "\n";
    Report rep("eval-onset", 0);
    rep.add("input", mel_path.empty() ? wav_path : mel_path);
    rep.add("gt", gt_path);
    rep.add("tol", tol);
    rep.add("n_pred", std::to_string(pred.times.size()));
    rep.add("n_gt", std::to_string(gt.times.size()));
    rep.add("accuracy", s.accuracy);
    rep.add("ap", s.ap);
    rep.add("f1", s.f1);
    rep.write(report_path.empty() ? gt_path + ".onset.report" : report_path);
    return kExitOk;
}

int cmd_eval_lag(const std::string& gen_path, const std::string& gt_path, double fps_override,
                 std::string report_path) {
    const TensorArchive g = read_tensor_archive(gen_path);
    const TensorArchive r = read_tensor_archive(gt_path);
    auto column0 = [](const TensorArchive& t) {
        std::vector<double> env(t.data.rows);
        for (int i = 0; i < t.data.rows; ++i) env[i] = t.data(i, 0);
        return env;
    };
    const double fps = fps_override > 0 ? fps_override : g.fps;
    if (fps <= 0) throw ConfigError("eval-lag: no fps in archive header; pass --fps");
    const double lag = lag_metric(column0(g), column0(r), fps);
    std::cout.precision(10);
    std::cout << "lag_sec " << lag << "\n";
    Report rep("eval-lag", 0);
    rep.add("gen", gen_path);
    rep.add("gt", gt_path);
    rep.add("fps", fps);
    rep.add("lag_sec", lag);
    rep.write(report_path.empty() ? gen_path + ".lag.report" : report_path);
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"Flow-matching audio-latent generator with multimodal conditioning"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "Worker threads (0 = hardware default)")
        ->capture_default_str();

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset manifest");
    std::string gd_out;
    int gd_n = 2000, gd_classes = 16;
    uint64_t gd_seed = 1;
    double gd_duration = 8.0, gd_frac_at = 0.3, gd_frac_a = 0.0;
    std::string gd_report;
    gen->add_option("--out", gd_out, "Manifest path")->required();
    gen->add_option("--n", gd_n, "Number of samples")->capture_default_str();
    gen->add_option("--seed", gd_seed, "Master seed")->capture_default_str();
    gen->add_option("--n-classes", gd_classes, "Number of classes")->capture_default_str();
    gen->add_option("--duration", gd_duration, "Scene duration in seconds")->capture_default_str();
    gen->add_option("--frac-text-only", gd_frac_at, "Fraction without video")
        ->capture_default_str();
    gen->add_option("--frac-audio-only", gd_frac_a, "Fraction without video and text")
        ->capture_default_str();
    gen->add_option("--report", gd_report, "Report path (default <out>.report)");

    // train
    auto* train = app.add_subcommand("train", "Train on a dataset manifest");
    std::string tr_data, tr_out, tr_resume, tr_log, tr_report;
    int64_t tr_steps = 0;
    ConfigFlags tr_cfg;
    train->add_option("--data", tr_data, "Dataset manifest")->required();
    train->add_option("--out", tr_out, "Checkpoint output path")->required();
    train->add_option("--steps", tr_steps,
                      "Steps to run this invocation (0 = train.total_steps)")
        ->capture_default_str();
    train->add_option("--resume", tr_resume, "Resume from checkpoint");
    train->add_option("--log", tr_log, "Training log path (default <out>.log)");
    train->add_option("--report", tr_report, "Report path (default <out>.report)");
    tr_cfg.attach(train);

    // sample
    auto* sample = app.add_subcommand("sample", "Generate a latent from a checkpoint");
    std::string sm_ckpt, sm_out, sm_mel, sm_report;
    SampleConfig sm_cfg;
    bool sm_video = true, sm_text = true, sm_ema = false;
    uint64_t sm_scene_seed = 1;
    int sm_classes = 16, sm_class = -1;
    sample->add_option("--ckpt", sm_ckpt, "Checkpoint path")->required();
    sample->add_option("--out", sm_out, "Latent output path")->required();
    sample->add_option("--mel", sm_mel, "Optional decoded mel output path");
    sample->add_option("--duration", sm_cfg.duration_sec, "Duration in seconds")
        ->capture_default_str();
    sample->add_option("--steps", sm_cfg.n_steps, "Euler steps")->capture_default_str();
    sample->add_option("--cfg", sm_cfg.cfg_strength, "Guidance strength")->capture_default_str();
    sample->add_option("--seed", sm_cfg.seed, "Noise seed")->capture_default_str();
    sample->add_flag("--video,!--no-video", sm_video, "Condition on video features")
        ->capture_default_str();
    sample->add_flag("--text,!--no-text", sm_text, "Condition on text features")
        ->capture_default_str();
    sample->add_flag("--ema", sm_ema, "Sample from the EMA weights")->capture_default_str();
    sample->add_option("--scene-seed", sm_scene_seed, "Seed of the conditioning scene")
        ->capture_default_str();
    sample->add_option("--n-classes", sm_classes, "Class count for the scene")
        ->capture_default_str();
    sample->add_option("--class", sm_class, "Override the scene class (-1 = scene's own)")
        ->capture_default_str();
    sample->add_option("--report", sm_report, "Report path (default <out>.report)");

    // inspect
    auto* inspect = app.add_subcommand("inspect", "List checkpoint contents");
    std::string in_ckpt, in_report;
    inspect->add_option("--ckpt", in_ckpt, "Checkpoint path")->required();
    inspect->add_option("--report", in_report, "Report path");

    // eval-fd
    auto* efd = app.add_subcommand("eval-fd", "Fréchet distance between embedding archives");
    std::string fd_a, fd_b, fd_report;
    efd->add_option("--a", fd_a, "First embedding archive")->required();
    efd->add_option("--b", fd_b, "Second embedding archive")->required();
    efd->add_option("--report", fd_report, "Report path");

    // eval-is
    auto* eis = app.add_subcommand("eval-is", "Inception score of a logit archive");
    std::string is_path, is_report;
    eis->add_option("--logits", is_path, "Logit archive")->required();
    eis->add_option("--report", is_report, "Report path");

    // eval-kl
    auto* ekl = app.add_subcommand("eval-kl", "Paired KL between logit archives");
    std::string kl_gt, kl_gen, kl_report;
    ekl->add_option("--gt", kl_gt, "Ground-truth logit archive")->required();
    ekl->add_option("--gen", kl_gen, "Generated logit archive")->required();
    ekl->add_option("--report", kl_report, "Report path");

    // eval-onset
    auto* eon = app.add_subcommand("eval-onset", "Detect onsets and score against ground truth");
    std::string on_mel, on_wav, on_preset = "16k", on_gt, on_report;
    double on_tol = 0.1;
    eon->add_option("--mel", on_mel, "Mel archive input");
    eon->add_option("--wav", on_wav, "Mono 16-bit PCM wav input");
    eon->add_option("--stft-preset", on_preset, "STFT preset (16k or 44k)")
        ->capture_default_str();
    eon->add_option("--gt", on_gt, "Ground-truth onset times, one per line")->required();
    eon->add_option("--tol", on_tol, "Match tolerance in seconds")->capture_default_str();
    eon->add_option("--report", on_report, "Report path");

    // eval-lag
    auto* elag = app.add_subcommand("eval-lag", "Cross-correlation lag between envelopes");
    std::string lag_gen, lag_gt, lag_report;
    double lag_fps = 0.0;
    elag->add_option("--gen", lag_gen, "Generated envelope archive")->required();
    elag->add_option("--gt", lag_gt, "Ground-truth envelope archive")->required();
    elag->add_option("--fps", lag_fps, "Frame rate override (default from header)")
        ->capture_default_str();
    elag->add_option("--report", lag_report, "Report path");

    std::vector<const char*> argv;
    argv.push_back("avflow");
    for (const auto& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
        kernels::set_threads(threads);
        if (gen->parsed())
            return cmd_gen_data(gd_out, gd_n, gd_seed, gd_classes, gd_duration, gd_frac_at,
                                gd_frac_a, gd_report);
        if (train->parsed())
            return cmd_train(tr_data, tr_out, tr_cfg, tr_steps, tr_resume, tr_log, tr_report);
        if (sample->parsed())
            return cmd_sample(sm_ckpt, sm_out, sm_mel, sm_cfg, sm_video, sm_text, sm_scene_seed,
                              sm_classes, sm_class, sm_ema, sm_report);
        if (inspect->parsed()) return cmd_inspect(in_ckpt, in_report);
        if (efd->parsed()) return cmd_eval_fd(fd_a, fd_b, fd_report);
        if (eis->parsed()) return cmd_eval_is(is_path, is_report);
        if (ekl->parsed()) return cmd_eval_kl(kl_gt, kl_gen, kl_report);
        if (eon->parsed())
            return cmd_eval_onset(on_mel, on_wav, on_preset, on_gt, on_tol, on_report);
        if (elag->parsed()) return cmd_eval_lag(lag_gen, lag_gt, lag_fps, lag_report);
        std::cerr << "no subcommand\n";
        return kExitUsage;
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace avflow
