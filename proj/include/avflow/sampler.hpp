// SPDX-License-Identifier: Apache-2.0
//
// Generation: draw noise, integrate the learned field with Euler steps, and
// combine conditional and unconditional passes with classifier-free
// guidance. The unconditional pass replaces both modalities with the learned
// empty tokens; when nothing is conditioned the two passes coincide and only
// one is run.
#pragma once

#include <cmath>

#include "avflow/config.hpp"
#include "avflow/network.hpp"
#include "avflow/sync.hpp"
#include "avflow/synthdata.hpp"
#include "avflow/trainer.hpp"

namespace avflow {

/// Conditioning features for one generation request: scene-derived features
/// plus presence flags.
template <typename T>
struct SampleRequest {
    Conditions<T> cond;
    bool with_video = true;
    bool with_text = true;
};

template <typename T>
SampleRequest<T> request_from_scene(const SyntheticScene& scene, const ModelConfig& cfg,
                                    bool with_video, bool with_text) {
    SampleRequest<T> r;
    TrainingSample<T> s = render_sample<T>(scene, cfg);
    r.cond = std::move(s.cond);
    r.with_video = with_video;
    r.with_text = with_text;
    return r;
}

template <typename T>
LatentSeq<T> sample_latent(const Network<T>& net, const SampleRequest<T>& req,
                           const SampleConfig& scfg) {
    scfg.validate();
    const int l_audio = static_cast<int>(std::llround(scfg.duration_sec * net.cfg.latent_fps));
    check_contract(l_audio >= 1, "sample: duration too short for one latent frame");

    Conditions<T> cond = req.cond;
    net.substitute_missing(cond, req.with_video, req.with_text);
    Conditions<T> uncond = req.cond;
    net.substitute_missing(uncond, false, false);
    const bool conditioned = req.with_video || req.with_text;

    LatentSeq<T> x(Mat<T>(l_audio, net.cfg.latent_dim), net.cfg.latent_fps);
    Rng rng(mix_seed(scfg.seed, rngtag::kSample));
    rng.fill_normal(x.data);

    NetTape<T> tape_c, tape_u;
    std::function<LatentSeq<T>(FlowTime, const LatentSeq<T>&)> field =
        [&](FlowTime t, const LatentSeq<T>& state) {
            LatentSeq<T> v_cond = net.forward(t, state, cond, tape_c);
            if (!conditioned || scfg.cfg_strength == 1.0) return v_cond;
            LatentSeq<T> v_uncond = net.forward(t, state, uncond, tape_u);
            return cfg_velocity(v_cond, v_uncond, scfg.cfg_strength);
        };
    return euler_integrate<T>(field, std::move(x), scfg.n_steps);
}

}  // namespace avflow
