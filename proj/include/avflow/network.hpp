// SPDX-License-Identifier: Apache-2.0
//
// The flow-prediction network: per-modality projection stacks, a global
// conditioning vector from pooled features and the timestep encoding, a
// frame-aligned condition from synchronization features, N1 multimodal
// joint-attention blocks followed by N2 audio-only blocks, and a linear
// head back to latent space.
//
// Every sublayer has an explicit backward; activations live in a Tape owned
// by the caller, so any number of forward passes can run concurrently
// against shared immutable weights.
#pragma once

#include <array>
#include <string>
#include <vector>

#include "avflow/config.hpp"
#include "avflow/errors.hpp"
#include "avflow/flow.hpp"
#include "avflow/layers.hpp"
#include "avflow/sync.hpp"

namespace avflow {

/// Raw conditioning features. When a modality is absent the rows hold the
/// learned empty tokens (see substitute_missing) and the flag is false so
/// gradients reach those tokens.
template <typename T>
struct Conditions {
    Mat<T> visual;  // (L_v, visual_feat_dim)
    Mat<T> text;    // (text_len, text_feat_dim)
    Mat<T> sync;    // (L_sync, sync_feat_dim)
    bool has_video = true;
    bool has_text = true;
};

/// Attention over the concatenation of per-stream q/k/v; the output is split
/// back by the input partition. Empty streams are allowed.
template <typename T>
struct StreamQkv {
    Mat<T> q, k, v;
};

template <typename T>
std::array<Mat<T>, 3> joint_attention(const StreamQkv<T>& audio, const StreamQkv<T>& visual,
                                      const StreamQkv<T>& text, int n_heads) {
    const StreamQkv<T>* streams[3] = {&audio, &visual, &text};
    int total = 0, width = 0;
    for (const auto* s : streams) {
        if (s->q.rows == 0) continue;
        check_contract(s->q.same_shape(s->k) && s->q.same_shape(s->v),
                       "joint_attention: q/k/v shape mismatch");
        check_contract(width == 0 || s->q.cols == width, "joint_attention: width mismatch");
        width = s->q.cols;
        total += s->q.rows;
    }
    check_contract(total > 0, "joint_attention: all streams empty");
    Mat<T> q(total, width), k(total, width), v(total, width);
    int at = 0;
    for (const auto* s : streams) {
        for (int i = 0; i < s->q.rows; ++i, ++at) {
            std::copy(s->q.row(i), s->q.row(i) + width, q.row(at));
            std::copy(s->k.row(i), s->k.row(i) + width, k.row(at));
            std::copy(s->v.row(i), s->v.row(i) + width, v.row(at));
        }
    }
    Mat<T> y;
    AttnCache<T> cache;
    attention_forward(q, k, v, n_heads, y, cache);
    std::array<Mat<T>, 3> out;
    at = 0;
    for (int s = 0; s < 3; ++s) {
        out[s].resize(streams[s]->q.rows, streams[s]->q.rows ? width : 0);
        for (int i = 0; i < streams[s]->q.rows; ++i, ++at)
            std::copy(y.row(at), y.row(at) + width, out[s].row(i));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Transformer blocks.

template <typename T>
struct StreamTape {
    ModLnCache<T> norm1, norm2;
    Mat<T> normed1;   // qkv input
    Mat<T> attn_out;  // this stream's attention output (out-projection input)
    Mat<T> proj_out;
    GateCache<T> gate1, gate2;
    Mat<T> normed2;  // mlp input
    MlpCache<T> mlp;
    Mat<T> mlp_out;
};

template <typename T>
struct MmBlockTape {
    StreamTape<T> a, v, t;
    AttnCache<T> attn;
    std::vector<double> positions;  // pre-scaled rope positions of the concatenation
};

/// Weights of one stream within a block (attention + feed-forward halves,
/// each wrapped in conditioned norm and gating).
template <typename T>
struct StreamWeights {
    ModLn<T> norm1, norm2;
    Gate<T> gate1, gate2;
    Linear<T> qkv, out;

    void init(ParamStore<T>& ps, const std::string& name, int h) {
        norm1.init(ps, name + ".norm1", h);
        norm2.init(ps, name + ".norm2", h);
        gate1.init(ps, name + ".gate1", h);
        gate2.init(ps, name + ".gate2", h);
        qkv.init(ps, name + ".qkv", h, 3 * h, Init::FanIn);
        out.init(ps, name + ".out", h, h, Init::FanIn);
    }
};

namespace netdetail {

template <typename T>
void split_qkv(const Mat<T>& qkv_out, int h, int row_off, Mat<T>& q, Mat<T>& k, Mat<T>& v) {
    for (int i = 0; i < qkv_out.rows; ++i) {
        const T* r = qkv_out.row(i);
        std::copy(r, r + h, q.row(row_off + i));
        std::copy(r + h, r + 2 * h, k.row(row_off + i));
        std::copy(r + 2 * h, r + 3 * h, v.row(row_off + i));
    }
}

template <typename T>
void merge_qkv(const Mat<T>& dq, const Mat<T>& dk, const Mat<T>& dv, int h, int row_off, int rows,
               Mat<T>& d_qkv) {
    d_qkv.resize(rows, 3 * h);
    for (int i = 0; i < rows; ++i) {
        T* r = d_qkv.row(i);
        std::copy(dq.row(row_off + i), dq.row(row_off + i) + h, r);
        std::copy(dk.row(row_off + i), dk.row(row_off + i) + h, r + h);
        std::copy(dv.row(row_off + i), dv.row(row_off + i) + h, r + 2 * h);
    }
}

// Feed-forward half: x += gate(mlp(norm(x, c)), c). Works for ConvMlp and Mlp.
template <typename T, typename Ff>
void ff_forward(const ParamStore<T>& ps, const StreamWeights<T>& sw, const Ff& ff, Mat<T>& x,
                const Mat<T>& cond, StreamTape<T>& tape) {
    sw.norm2.forward(ps, x, cond, tape.normed2, tape.norm2);
    ff.forward(ps, tape.normed2, tape.mlp_out, tape.mlp);
    Mat<T> gated;
    sw.gate2.forward(ps, tape.mlp_out, cond, gated, tape.gate2);
    for (size_t i = 0; i < x.v.size(); ++i) x.v[i] += gated.v[i];
}

template <typename T, typename Ff>
void ff_backward(ParamStore<T>& ps, const StreamWeights<T>& sw, const Ff& ff, Mat<T>& dx,
                 Mat<T>& dcond, const StreamTape<T>& tape) {
    Mat<T> d_mlp_out(tape.mlp_out.rows, tape.mlp_out.cols);
    sw.gate2.backward(ps, dx, tape.gate2, d_mlp_out, dcond);
    Mat<T> d_normed2(tape.normed2.rows, tape.normed2.cols);
    ff.backward(ps, d_mlp_out, tape.mlp, &d_normed2);
    sw.norm2.backward(ps, d_normed2, tape.norm2, dx, dcond);
}

}  // namespace netdetail

template <typename T>
struct MmBlock {
    StreamWeights<T> a, v, t;
    ConvMlp<T> a_mlp, v_mlp;
    Mlp<T> t_mlp;

    void init(ParamStore<T>& ps, const std::string& name, const ModelConfig& cfg) {
        const int h = cfg.hidden_dim;
        a.init(ps, name + ".a", h);
        v.init(ps, name + ".v", h);
        t.init(ps, name + ".t", h);
        a_mlp.init(ps, name + ".a.mlp", h, cfg.mlp_hidden(), h, 3);
        v_mlp.init(ps, name + ".v.mlp", h, cfg.mlp_hidden(), h, 3);
        t_mlp.init(ps, name + ".t.mlp", h, cfg.mlp_hidden(), h);
    }

    /// One multimodal block. Audio is conditioned per token by c_f; the
    /// visual and text streams use the broadcast c_g. RoPE rotates audio and
    /// visual queries/keys; text carries no positional phase.
    void forward(const ParamStore<T>& ps, const ModelConfig& cfg, Mat<T>& xa, Mat<T>& xv,
                 Mat<T>& xt, const Mat<T>& c_g, const Mat<T>& c_f, MmBlockTape<T>& tape) const {
        const int h = cfg.hidden_dim;
        const int La = xa.rows, Lv = xv.rows, Lt = xt.rows;
        const int Lc = La + Lv + Lt;

        a.norm1.forward(ps, xa, c_f, tape.a.normed1, tape.a.norm1);
        v.norm1.forward(ps, xv, c_g, tape.v.normed1, tape.v.norm1);
        t.norm1.forward(ps, xt, c_g, tape.t.normed1, tape.t.norm1);

        Mat<T> qkv_a, qkv_v, qkv_t;
        a.qkv.forward(ps, tape.a.normed1, qkv_a);
        v.qkv.forward(ps, tape.v.normed1, qkv_v);
        t.qkv.forward(ps, tape.t.normed1, qkv_t);

        Mat<T> q(Lc, h), k(Lc, h), val(Lc, h);
        netdetail::split_qkv(qkv_a, h, 0, q, k, val);
        netdetail::split_qkv(qkv_v, h, La, q, k, val);
        netdetail::split_qkv(qkv_t, h, La + Lv, q, k, val);

        tape.positions.assign(Lc, 0.0);
        for (int i = 0; i < La; ++i) tape.positions[i] = static_cast<double>(i);
        for (int i = 0; i < Lv; ++i)
            tape.positions[La + i] = static_cast<double>(i) * cfg.visual_rate_scale();
        // text entries stay at position 0 (no rotation)
        rope_apply(q, tape.positions, cfg.n_heads, 1.0, cfg.rope_base);
        rope_apply(k, tape.positions, cfg.n_heads, 1.0, cfg.rope_base);

        Mat<T> attn_y;
        attention_forward(q, k, val, cfg.n_heads, attn_y, tape.attn);

        auto take = [&](int off, int rows, Mat<T>& dst) {
            dst.resize(rows, h);
            for (int i = 0; i < rows; ++i)
                std::copy(attn_y.row(off + i), attn_y.row(off + i) + h, dst.row(i));
        };
        take(0, La, tape.a.attn_out);
        take(La, Lv, tape.v.attn_out);
        take(La + Lv, Lt, tape.t.attn_out);

        auto attn_half = [&](const StreamWeights<T>& sw, Mat<T>& x, const Mat<T>& cond,
                             StreamTape<T>& st) {
            sw.out.forward(ps, st.attn_out, st.proj_out);
            Mat<T> gated;
            sw.gate1.forward(ps, st.proj_out, cond, gated, st.gate1);
            for (size_t i = 0; i < x.v.size(); ++i) x.v[i] += gated.v[i];
        };
        attn_half(a, xa, c_f, tape.a);
        attn_half(v, xv, c_g, tape.v);
        attn_half(t, xt, c_g, tape.t);

        netdetail::ff_forward(ps, a, a_mlp, xa, c_f, tape.a);
        netdetail::ff_forward(ps, v, v_mlp, xv, c_g, tape.v);
        netdetail::ff_forward(ps, t, t_mlp, xt, c_g, tape.t);
    }

    void backward(ParamStore<T>& ps, const ModelConfig& cfg, Mat<T>& da, Mat<T>& dv, Mat<T>& dt,
                  Mat<T>& dc_g, Mat<T>& dc_f, const MmBlockTape<T>& tape) const {
        const int h = cfg.hidden_dim;
        const int La = da.rows, Lv = dv.rows, Lt = dt.rows;
        const int Lc = La + Lv + Lt;

        netdetail::ff_backward(ps, a, a_mlp, da, dc_f, tape.a);
        netdetail::ff_backward(ps, v, v_mlp, dv, dc_g, tape.v);
        netdetail::ff_backward(ps, t, t_mlp, dt, dc_g, tape.t);

        Mat<T> d_attn(Lc, h);
        auto attn_half_back = [&](const StreamWeights<T>& sw, Mat<T>& dx, Mat<T>& dcond,
                                  const StreamTape<T>& st, int off) {
            Mat<T> d_proj(st.proj_out.rows, h);
            sw.gate1.backward(ps, dx, st.gate1, d_proj, dcond);
            Mat<T> d_stream(st.attn_out.rows, h);
            sw.out.backward(ps, st.attn_out, d_proj, &d_stream);
            for (int i = 0; i < d_stream.rows; ++i)
                std::copy(d_stream.row(i), d_stream.row(i) + h, d_attn.row(off + i));
        };
        attn_half_back(a, da, dc_f, tape.a, 0);
        attn_half_back(v, dv, dc_g, tape.v, La);
        attn_half_back(t, dt, dc_g, tape.t, La + Lv);

        Mat<T> dq(Lc, h), dk(Lc, h), dval(Lc, h);
        attention_backward(tape.attn, cfg.n_heads, d_attn, dq, dk, dval);
        rope_apply(dq, tape.positions, cfg.n_heads, 1.0, cfg.rope_base, true);
        rope_apply(dk, tape.positions, cfg.n_heads, 1.0, cfg.rope_base, true);

        auto qkv_back = [&](const StreamWeights<T>& sw, Mat<T>& dx, Mat<T>& dcond,
                            const StreamTape<T>& st, int off, int rows) {
            Mat<T> d_qkv;
            netdetail::merge_qkv(dq, dk, dval, h, off, rows, d_qkv);
            Mat<T> d_normed1(rows, h);
            sw.qkv.backward(ps, st.normed1, d_qkv, &d_normed1);
            sw.norm1.backward(ps, d_normed1, st.norm1, dx, dcond);
        };
        qkv_back(a, da, dc_f, tape.a, 0, La);
        qkv_back(v, dv, dc_g, tape.v, La, Lv);
        qkv_back(t, dt, dc_g, tape.t, La + Lv, Lt);
    }
};

/// Audio-only block: the joint attention degenerates to self-attention.
template <typename T>
struct SingleBlock {
    StreamWeights<T> a;
    ConvMlp<T> mlp;

    void init(ParamStore<T>& ps, const std::string& name, const ModelConfig& cfg) {
        a.init(ps, name, cfg.hidden_dim);
        mlp.init(ps, name + ".mlp", cfg.hidden_dim, cfg.mlp_hidden(), cfg.hidden_dim, 3);
    }

    void forward(const ParamStore<T>& ps, const ModelConfig& cfg, Mat<T>& xa, const Mat<T>& c_f,
                 MmBlockTape<T>& tape) const {
        const int h = cfg.hidden_dim;
        const int La = xa.rows;
        a.norm1.forward(ps, xa, c_f, tape.a.normed1, tape.a.norm1);
        Mat<T> qkv_a;
        a.qkv.forward(ps, tape.a.normed1, qkv_a);
        Mat<T> q(La, h), k(La, h), val(La, h);
        netdetail::split_qkv(qkv_a, h, 0, q, k, val);
        tape.positions.resize(La);
        for (int i = 0; i < La; ++i) tape.positions[i] = static_cast<double>(i);
        rope_apply(q, tape.positions, cfg.n_heads, 1.0, cfg.rope_base);
        rope_apply(k, tape.positions, cfg.n_heads, 1.0, cfg.rope_base);
        attention_forward(q, k, val, cfg.n_heads, tape.a.attn_out, tape.attn);
        a.out.forward(ps, tape.a.attn_out, tape.a.proj_out);
        Mat<T> gated;
        a.gate1.forward(ps, tape.a.proj_out, c_f, gated, tape.a.gate1);
        for (size_t i = 0; i < xa.v.size(); ++i) xa.v[i] += gated.v[i];
        netdetail::ff_forward(ps, a, mlp, xa, c_f, tape.a);
    }

    void backward(ParamStore<T>& ps, const ModelConfig& cfg, Mat<T>& da, Mat<T>& dc_f,
                  const MmBlockTape<T>& tape) const {
        const int h = cfg.hidden_dim;
        const int La = da.rows;
        netdetail::ff_backward(ps, a, mlp, da, dc_f, tape.a);
        Mat<T> d_proj(La, h);
        a.gate1.backward(ps, da, tape.a.gate1, d_proj, dc_f);
        Mat<T> d_attn(La, h);
        a.out.backward(ps, tape.a.attn_out, d_proj, &d_attn);
        Mat<T> dq(La, h), dk(La, h), dval(La, h);
        attention_backward(tape.attn, cfg.n_heads, d_attn, dq, dk, dval);
        rope_apply(dq, tape.positions, cfg.n_heads, 1.0, cfg.rope_base, true);
        rope_apply(dk, tape.positions, cfg.n_heads, 1.0, cfg.rope_base, true);
        Mat<T> d_qkv;
        netdetail::merge_qkv(dq, dk, dval, h, 0, La, d_qkv);
        Mat<T> d_normed1(La, h);
        a.qkv.backward(ps, tape.a.normed1, d_qkv, &d_normed1);
        a.norm1.backward(ps, d_normed1, tape.a.norm1, da, dc_f);
    }
};

// ---------------------------------------------------------------------------
// Full network.

template <typename T>
struct NetTape {
    Mat<T> visual_raw, text_raw, sync_raw, xt;
    bool has_video = true, has_text = true;

    Mat<T> t_four, t_proj;
    Mat<T> text_lin, text_tokens;
    MlpCache<T> text_mlp;
    Mat<T> vis_lin, vis_tokens;
    MlpCache<T> vis_mlp;
    Mat<T> aud_conv, aud_act, aud_tokens;
    MlpCache<T> aud_mlp;
    Mat<T> sync_in, sync_conv, sync_act, sync_proj;
    MlpCache<T> sync_mlp;
    Mat<T> cg_sum, c_g;
    MlpCache<T> cg_mlp;
    Mat<T> c_f;
    std::vector<MmBlockTape<T>> mm;
    std::vector<MmBlockTape<T>> single;
    Mat<T> xa, xv, xtxt;  // final stream states
    ModLnCache<T> final_mod;
    Mat<T> final_normed;
};

template <typename T>
class Network {
public:
    ModelConfig cfg;
    ParamStore<T> ps;

    Linear<T> time_in;
    Mlp<T> cg_mlp;
    Linear<T> text_in;
    Mlp<T> text_mlp;
    Linear<T> vis_in;
    ConvMlp<T> vis_mlp;
    Conv1d<T> aud_in;
    ConvMlp<T> aud_mlp;
    Conv1d<T> sync_in;
    ConvMlp<T> sync_mlp;
    int sync_pos = -1;
    int empty_visual = -1;
    int empty_sync = -1;
    std::vector<MmBlock<T>> mm;
    std::vector<SingleBlock<T>> single;
    ModLn<T> final_mod;
    Linear<T> head;
    Mat<T> empty_text;

    explicit Network(const ModelConfig& config) : cfg(config) {
        cfg.validate();
        const int h = cfg.hidden_dim;
        const int rh = cfg.mlp_hidden();
        time_in.init(ps, "cond.time", cfg.time_embed_dim, h, Init::FanIn);
        cg_mlp.init(ps, "cond.mlp", h, rh, h);
        text_in.init(ps, "proj.text.in", cfg.text_feat_dim, h, Init::FanIn);
        text_mlp.init(ps, "proj.text.mlp", h, rh, h);
        vis_in.init(ps, "proj.vis.in", cfg.visual_feat_dim, h, Init::FanIn);
        vis_mlp.init(ps, "proj.vis.mlp", h, rh, h, 3);
        aud_in.init(ps, "proj.aud.in", cfg.latent_dim, h, 7, Init::FanIn);
        aud_mlp.init(ps, "proj.aud.mlp", h, rh, h, 7);
        sync_in.init(ps, "proj.sync.in", cfg.sync_feat_dim, h, 7, Init::FanIn);
        sync_mlp.init(ps, "proj.sync.mlp", h, rh, h, 3);
        sync_pos = ps.add("proj.sync.pos", 8, cfg.sync_feat_dim, cfg.sync_feat_dim, Init::FanIn);
        empty_visual = ps.add("empty.visual", 1, cfg.visual_feat_dim, cfg.visual_feat_dim, Init::FanIn);
        empty_sync = ps.add("empty.sync", 1, cfg.sync_feat_dim, cfg.sync_feat_dim, Init::FanIn);
        mm.resize(cfg.n_mm_blocks);
        for (int i = 0; i < cfg.n_mm_blocks; ++i) mm[i].init(ps, "mm" + std::to_string(i), cfg);
        single.resize(cfg.n_single_blocks);
        for (int i = 0; i < cfg.n_single_blocks; ++i)
            single[i].init(ps, "single" + std::to_string(i), cfg);
        final_mod.init(ps, "final.mod", h);
        head.init(ps, "head", h, cfg.latent_dim, Init::Zero);
        empty_text = empty_text_sequence<T>(cfg.text_len, cfg.text_feat_dim);
    }

    void allocate(uint64_t seed) {
        ps.allocate();
        ps.init_params(seed);
    }

    /// sin/cos features of the flow timestep at geometrically spaced
    /// frequencies from 1 to time_freq_max rad per unit time.
    Mat<T> fourier_time_embed(double t) const {
        check_contract(t >= 0.0 && t <= 1.0, "fourier_time_embed: t outside [0, 1]");
        const int half = cfg.time_embed_dim / 2;
        Mat<T> e(1, cfg.time_embed_dim);
        for (int j = 0; j < half; ++j) {
            const double f =
                half > 1 ? std::pow(cfg.time_freq_max, static_cast<double>(j) / (half - 1)) : 1.0;
            e(0, j) = static_cast<T>(std::sin(t * f));
            e(0, half + j) = static_cast<T>(std::cos(t * f));
        }
        return e;
    }

    /// Replaces absent modalities with the learned empty tokens (visual and
    /// sync rows) or the canonical empty-string sequence (text).
    void substitute_missing(Conditions<T>& c, bool present_video, bool present_text) const {
        if (!present_video) {
            const T* ev = ps.value[empty_visual].row(0);
            for (int i = 0; i < c.visual.rows; ++i)
                std::copy(ev, ev + c.visual.cols, c.visual.row(i));
            const T* es = ps.value[empty_sync].row(0);
            for (int i = 0; i < c.sync.rows; ++i) std::copy(es, es + c.sync.cols, c.sync.row(i));
            c.has_video = false;
        }
        if (!present_text) {
            c.text = empty_text;
            c.has_text = false;
        }
    }

    void project_text(const Mat<T>& raw, NetTape<T>& tp) const {
        check_contract(raw.rows == cfg.text_len && raw.cols == cfg.text_feat_dim,
                       "project_text: expected (" + std::to_string(cfg.text_len) + ", " +
                           std::to_string(cfg.text_feat_dim) + ") input");
        text_in.forward(ps, raw, tp.text_lin);
        text_mlp.forward(ps, tp.text_lin, tp.text_tokens, tp.text_mlp);
    }

    void project_visual(const Mat<T>& raw, NetTape<T>& tp) const {
        check_contract(raw.rows >= 1 && raw.cols == cfg.visual_feat_dim,
                       "project_visual: empty input or wrong feature width");
        vis_in.forward(ps, raw, tp.vis_lin);
        vis_mlp.forward(ps, tp.vis_lin, tp.vis_tokens, tp.vis_mlp);
    }

    void project_audio(const Mat<T>& x, NetTape<T>& tp) const {
        check_contract(x.cols == cfg.latent_dim, "project_audio: wrong channel count");
        aud_in.forward(ps, x, tp.aud_conv);
        act_forward(Act::SELU, tp.aud_conv, tp.aud_act);
        aud_mlp.forward(ps, tp.aud_act, tp.aud_tokens, tp.aud_mlp);
    }

    /// Sync projection stack; an 8-periodic learnable embedding is added to
    /// the raw features first, matching their clip-of-8 structure.
    void project_sync(const Mat<T>& raw, NetTape<T>& tp) const {
        check_contract(raw.rows >= 1 && raw.cols == cfg.sync_feat_dim,
                       "project_sync: empty input or wrong feature width");
        tp.sync_in = raw;
        const Mat<T>& pos = ps.value[sync_pos];
        for (int i = 0; i < tp.sync_in.rows; ++i) {
            const T* p = pos.row(i % 8);
            T* r = tp.sync_in.row(i);
            for (int j = 0; j < tp.sync_in.cols; ++j) r[j] += p[j];
        }
        sync_in.forward(ps, tp.sync_in, tp.sync_conv);
        act_forward(Act::SELU, tp.sync_conv, tp.sync_act);
        sync_mlp.forward(ps, tp.sync_act, tp.sync_proj, tp.sync_mlp);
    }

    /// c_g from the timestep encoding and the average-pooled visual and text
    /// features at width h. Pooling happens right after the linear
    /// projections (a row-wise map), so it is invariant to token order.
    void global_condition(double t, NetTape<T>& tp) const {
        const int h = cfg.hidden_dim;
        tp.t_four = fourier_time_embed(t);
        time_in.forward(ps, tp.t_four, tp.t_proj);
        tp.cg_sum.resize(1, h);
        T* s = tp.cg_sum.row(0);
        for (int j = 0; j < h; ++j) s[j] = tp.t_proj(0, j);
        for (int i = 0; i < tp.vis_lin.rows; ++i) {
            const T* r = tp.vis_lin.row(i);
            for (int j = 0; j < h; ++j) s[j] += r[j] / static_cast<T>(tp.vis_lin.rows);
        }
        for (int i = 0; i < tp.text_lin.rows; ++i) {
            const T* r = tp.text_lin.row(i);
            for (int j = 0; j < h; ++j) s[j] += r[j] / static_cast<T>(tp.text_lin.rows);
        }
        cg_mlp.forward(ps, tp.cg_sum, tp.c_g, tp.cg_mlp);
    }

    /// c_f = Upsample(sync projection) + c_g broadcast to every row. Without
    /// sync features c_f is exactly the broadcast c_g.
    void frame_condition(int l_audio, NetTape<T>& tp) const {
        const int h = cfg.hidden_dim;
        if (!cfg.use_sync) {
            tp.c_f = tp.c_g;
            return;
        }
        tp.c_f = upsample_nearest(tp.sync_proj, l_audio);
        const T* cg = tp.c_g.row(0);
        for (int i = 0; i < l_audio; ++i) {
            T* r = tp.c_f.row(i);
            for (int j = 0; j < h; ++j) r[j] += cg[j];
        }
    }

    LatentSeq<T> forward(FlowTime t, const LatentSeq<T>& x_t, const Conditions<T>& cond,
                         NetTape<T>& tp) const {
        check_contract(ps.allocated, "network: parameters not allocated");
        tp.visual_raw = cond.visual;
        tp.text_raw = cond.text;
        tp.sync_raw = cond.sync;
        tp.xt = x_t.data;
        tp.has_video = cond.has_video;
        tp.has_text = cond.has_text;

        project_text(tp.text_raw, tp);
        project_visual(tp.visual_raw, tp);
        project_audio(tp.xt, tp);
        if (cfg.use_sync) project_sync(tp.sync_raw, tp);
        global_condition(t.t, tp);
        frame_condition(x_t.length(), tp);

        tp.xa = tp.aud_tokens;
        tp.xv = tp.vis_tokens;
        tp.xtxt = tp.text_tokens;
        tp.mm.resize(mm.size());
        for (size_t i = 0; i < mm.size(); ++i)
            mm[i].forward(ps, cfg, tp.xa, tp.xv, tp.xtxt, tp.c_g, tp.c_f, tp.mm[i]);
        tp.single.resize(single.size());
        for (size_t i = 0; i < single.size(); ++i)
            single[i].forward(ps, cfg, tp.xa, tp.c_f, tp.single[i]);

        final_mod.forward(ps, tp.xa, tp.c_f, tp.final_normed, tp.final_mod);
        LatentSeq<T> vel(Mat<T>(x_t.length(), cfg.latent_dim), x_t.fps);
        head.forward(ps, tp.final_normed, vel.data);
        return vel;
    }

    /// Accumulates parameter gradients for one sample. The tape must come
    /// from the matching forward call.
    void backward(const Mat<T>& d_vel, NetTape<T>& tp) {
        const int h = cfg.hidden_dim;
        const int La = tp.xa.rows;

        Mat<T> da(La, h), dv(tp.xv.rows, h), dt(tp.xtxt.rows, h);
        Mat<T> dc_g(1, h);
        Mat<T> dc_f(tp.c_f.rows, h);

        Mat<T> d_final(La, h);
        head.backward(ps, tp.final_normed, d_vel, &d_final);
        final_mod.backward(ps, d_final, tp.final_mod, da, dc_f);

        for (size_t i = single.size(); i-- > 0;)
            single[i].backward(ps, cfg, da, dc_f, tp.single[i]);
        for (size_t i = mm.size(); i-- > 0;)
            mm[i].backward(ps, cfg, da, dv, dt, dc_g, dc_f, tp.mm[i]);

        // Frame condition: the broadcast c_g term collects every row.
        if (cfg.use_sync) {
            kernels::colsum_accum(dc_f, dc_g.row(0));
            Mat<T> d_sync_proj(tp.sync_proj.rows, h);
            upsample_nearest_backward(dc_f, tp.sync_proj.rows, d_sync_proj);
            Mat<T> d_sync_act(tp.sync_act.rows, h);
            sync_mlp.backward(ps, d_sync_proj, tp.sync_mlp, &d_sync_act);
            Mat<T> d_sync_conv(tp.sync_conv.rows, h);
            act_backward(Act::SELU, tp.sync_conv, d_sync_act, d_sync_conv);
            Mat<T> d_sync_in(tp.sync_in.rows, tp.sync_in.cols);
            sync_in.backward(ps, tp.sync_in, d_sync_conv, &d_sync_in);
            Mat<T>& g_pos = ps.grad[sync_pos];
            for (int i = 0; i < d_sync_in.rows; ++i) {
                const T* r = d_sync_in.row(i);
                T* g = g_pos.row(i % 8);
                for (int j = 0; j < d_sync_in.cols; ++j) g[j] += r[j];
            }
            if (!tp.has_video) kernels::colsum_accum(d_sync_in, ps.grad[empty_sync].row(0));
        } else {
            // c_f aliased c_g (one row)
            for (int j = 0; j < h; ++j) dc_g(0, j) += dc_f(0, j);
        }

        // Global condition: MLP, then the pooled post-linear features.
        Mat<T> d_cg_sum(1, h);
        cg_mlp.backward(ps, dc_g, tp.cg_mlp, &d_cg_sum);
        time_in.backward(ps, tp.t_four, d_cg_sum, nullptr);
        const T* dsum = d_cg_sum.row(0);

        // Projection stacks.
        Mat<T> d_aud_act(tp.aud_act.rows, h);
        aud_mlp.backward(ps, da, tp.aud_mlp, &d_aud_act);
        Mat<T> d_aud_conv(tp.aud_conv.rows, h);
        act_backward(Act::SELU, tp.aud_conv, d_aud_act, d_aud_conv);
        aud_in.backward(ps, tp.xt, d_aud_conv, nullptr);

        Mat<T> d_vis_lin(tp.vis_lin.rows, h);
        vis_mlp.backward(ps, dv, tp.vis_mlp, &d_vis_lin);
        for (int i = 0; i < d_vis_lin.rows; ++i) {
            T* r = d_vis_lin.row(i);
            for (int j = 0; j < h; ++j) r[j] += dsum[j] / static_cast<T>(d_vis_lin.rows);
        }
        Mat<T> d_visual_raw(tp.visual_raw.rows, tp.visual_raw.cols);
        vis_in.backward(ps, tp.visual_raw, d_vis_lin, tp.has_video ? nullptr : &d_visual_raw);
        if (!tp.has_video) kernels::colsum_accum(d_visual_raw, ps.grad[empty_visual].row(0));

        Mat<T> d_text_lin(tp.text_lin.rows, h);
        text_mlp.backward(ps, dt, tp.text_mlp, &d_text_lin);
        for (int i = 0; i < d_text_lin.rows; ++i) {
            T* r = d_text_lin.row(i);
            for (int j = 0; j < h; ++j) r[j] += dsum[j] / static_cast<T>(d_text_lin.rows);
        }
        text_in.backward(ps, tp.text_raw, d_text_lin, nullptr);
    }
};

/// Exact parameter count for a configuration; no payload is allocated.
inline size_t count_params(const ModelConfig& cfg) {
    Network<float> net(cfg);
    return net.ps.total_params();
}

}  // namespace avflow
