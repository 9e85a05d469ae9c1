// SPDX-License-Identifier: Apache-2.0
//
// Spectral front-end: Hann-window STFT magnitudes (no edge padding, so
// n_frames = 1 + floor((len - win) / hop)), an HTK-mel triangular filterbank
// with log(1e-5 + x) compression, and a seeded orthonormal codec standing in
// for a learned latent space. The frame-rate chain sr / hop / 2 equals the
// latent rate of the matching model preset.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "avflow/flow.hpp"
#include "avflow/mat.hpp"

namespace avflow {

struct Waveform {
    std::vector<double> samples;  // normalized to [-1, 1]
    int sample_rate = 16000;
};

struct StftParams {
    int n_fft = 1024;
    int hop = 256;
    int win_len = 1024;
    int n_mels = 80;
    int sample_rate = 16000;

    int n_bins() const { return n_fft / 2 + 1; }
    double mel_fps() const { return static_cast<double>(sample_rate) / hop; }
    double latent_fps() const { return mel_fps() / 2.0; }
};

/// Presets: "16k" -> (1024, 256, 1024, Hann, 80 mels);
///          "44k" -> (2048, 512, 2048, Hann, 128 mels).
StftParams stft_preset(const std::string& name);

inline constexpr double kLogFloor = 1e-5;

struct MelSpectrogram {
    MatD data;  // (n_frames, n_mels), log-compressed
    StftParams params;
};

/// Magnitude spectra, one row per frame, n_fft/2+1 bins.
MatD stft_magnitude(const Waveform& w, const StftParams& p);

/// HTK-scale triangular filterbank weights, (n_mels, n_bins).
MatD mel_filterbank(const StftParams& p);

MelSpectrogram mel_project(const MatD& spec, const StftParams& p);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Invertible stand-in for a learned latent codec: stacks every two mel
/// frames and applies a fixed seeded orthonormal projection. Temporal
/// downsampling factor is exactly 2.
class ToyLatentCodec {
public:
    ToyLatentCodec(const StftParams& p, int latent_dim, uint64_t seed = 0xC0DECULL);

    LatentSeq<double> encode(const MelSpectrogram& mel) const;
    MelSpectrogram decode(const LatentSeq<double>& z) const;

    const MatD& projection() const { return proj_; }

private:
    StftParams params_;
    int latent_dim_;
    MatD proj_;  // (latent_dim, 2 * n_mels), orthonormal rows
};

/// Mono 16-bit PCM RIFF reader/writer.
Waveform read_wav(const std::string& path);
void write_wav(const std::string& path, const Waveform& w);

}  // namespace avflow
