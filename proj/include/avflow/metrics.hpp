// SPDX-License-Identifier: Apache-2.0
//
// Model-free evaluation: Fréchet distance between Gaussian fits of embedding
// sets, Inception Score and paired KL over logit sets, spectral-flux onset
// detection with accuracy/AP/F1 scoring, and a cross-correlation lag metric
// on event envelopes.
#pragma once

#include <string>
#include <vector>

#include "avflow/audiofe.hpp"
#include "avflow/mat.hpp"

namespace avflow {

struct EmbeddingSet {
    MatD vectors;  // (N, D)
    std::string label;
};

struct LogitSet {
    MatD logits;  // (N, K)
    bool paired = false;
};

struct OnsetSeries {
    std::vector<double> times;      // sorted seconds in [0, duration)
    std::vector<double> strengths;  // detector confidence per onset; 1.0 when absent
    double duration = 0.0;
};

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Eigenvalues ascend; columns of `vectors` are the eigenvectors.
void symmetric_eig(const MatD& a, std::vector<double>& values, MatD& vectors);

/// ||mu_a - mu_b||^2 + tr(Sa + Sb - 2 (Sa Sb)^(1/2)), covariances unbiased,
/// with a 1e-6 diagonal shrinkage when N <= D. Tiny negative results clamp
/// to zero.
double frechet_distance(const EmbeddingSet& a, const EmbeddingSet& b);

/// The matrix square root used inside the Fréchet distance, exposed so its
/// defining property S*S = Sa*Sb can be validated directly.
MatD sqrtm_product(const MatD& sa, const MatD& sb);

/// exp(mean_i KL(softmax(logit_i) || marginal)).
double inception_score(const LogitSet& l);

/// mean_i KL(softmax(gt_i) || softmax(gen_i)); requires paired sets.
double paired_kl(const LogitSet& gt, const LogitSet& gen);

/// Spectral-flux onsets: half-wave-rectified frame difference of the linear
/// mel magnitudes, thresholded at median + 1.5 MAD over a 1 s window, peaks
/// at least 100 ms apart. Onset time is the frame's window center.
OnsetSeries detect_onsets(const MelSpectrogram& mel);

struct OnsetScores {
    double accuracy = 0.0;  // matches / max(|pred|, |gt|)
    double ap = 0.0;        // interpolated area under the strength-sweep PR curve
    double f1 = 0.0;
};

OnsetScores onset_scores(const OnsetSeries& pred, const OnsetSeries& gt, double tol = 0.1);

/// One-to-one greedy matches within tolerance; the building block of
/// onset_scores, exposed for micro-averaged scoring over many clips.
int onset_match_count(const std::vector<double>& pred, const std::vector<double>& gt, double tol);

/// Lag (seconds) maximizing normalized cross-correlation over +/- 1 s;
/// positive means the generated envelope trails the ground truth.
double lag_metric(const std::vector<double>& gen_env, const std::vector<double>& gt_env,
                  double fps);

}  // namespace avflow
