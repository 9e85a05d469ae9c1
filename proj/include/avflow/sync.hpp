// SPDX-License-Identifier: Apache-2.0
//
// Synchronization-feature arithmetic: the clip-of-8 sequence-length formula,
// center-aligned nearest-neighbor rate conversion, and the canonical
// empty-text token sequence shared by the data generator and the network.
#pragma once

#include <cmath>
#include <string>

#include "avflow/errors.hpp"
#include "avflow/mat.hpp"

namespace avflow {

/// Number of sync feature frames for a clip: video is read at 25 fps and
/// partitioned into 16-frame clips with stride 8, each yielding 8 features.
/// Works out to exactly 24 features per second for integer durations.
inline int sync_seq_len(double duration_sec) {
    check_contract(duration_sec > 0.0, "sync_seq_len: duration must be positive");
    const double frames = 25.0 * duration_sec;
    if (frames < 16.0)
        throw ContractError("sync_seq_len: duration too short, need at least 16 source frames (0.64 s)");
    return 8 * (static_cast<int>(std::floor((frames - 16.0) / 8.0)) + 1);
}

/// Center-aligned nearest-neighbor index map: destination row j reads source
/// row clamp(floor((j + 0.5) * L_src / dst_len), 0, L_src - 1).
inline int upsample_index(int j, int src_len, int dst_len) {
    const int idx = static_cast<int>(std::floor((j + 0.5) * static_cast<double>(src_len) /
                                                static_cast<double>(dst_len)));
    return std::min(std::max(idx, 0), src_len - 1);
}

template <typename T>
Mat<T> upsample_nearest(const Mat<T>& src, int dst_len) {
    check_contract(src.rows >= 1 && dst_len >= 1, "upsample_nearest: empty input or output");
    Mat<T> out(dst_len, src.cols);
    for (int j = 0; j < dst_len; ++j) {
        const T* s = src.row(upsample_index(j, src.rows, dst_len));
        T* d = out.row(j);
        for (int c = 0; c < src.cols; ++c) d[c] = s[c];
    }
    return out;
}

/// Scatter-transpose of upsample_nearest: accumulates destination-row
/// gradients back onto their source rows. The index map is monotone, so each
/// source row gathers a contiguous destination range.
template <typename T>
void upsample_nearest_backward(const Mat<T>& d_out, int src_len, Mat<T>& d_src) {
    for (int j = 0; j < d_out.rows; ++j) {
        const int s = upsample_index(j, src_len, d_out.rows);
        const T* d = d_out.row(j);
        T* acc = d_src.row(s);
        for (int c = 0; c < d_out.cols; ++c) acc[c] += d[c];
    }
}

/// The token sequence standing in for an encoded empty string. Fixed and
/// seeded, identical wherever a text slot is absent.
template <typename T>
Mat<T> empty_text_sequence(int text_len, int text_feat_dim) {
    Mat<T> m(text_len, text_feat_dim);
    Rng rng(mix_seed(0x74657874ULL, 0));
    rng.fill_normal(m);
    return m;
}

}  // namespace avflow
