// SPDX-License-Identifier: Apache-2.0
#include "avflow/audiofe.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>

#include "avflow/errors.hpp"

namespace avflow {

StftParams stft_preset(const std::string& name) {
    if (name == "16k") return StftParams{1024, 256, 1024, 80, 16000};
    if (name == "44k") return StftParams{2048, 512, 2048, 128, 44100};
    throw ConfigError("stft preset: unknown '" + name + "' (valid: 16k, 44k)");
}

namespace {

// Iterative radix-2 FFT, in place.
void fft_radix2(std::vector<std::complex<double>>& a) {
    const size_t n = a.size();
    check_contract((n & (n - 1)) == 0, "fft: size must be a power of two");
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * 3.14159265358979323846 / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

}  // namespace

MatD stft_magnitude(const Waveform& w, const StftParams& p) {
    const int len = static_cast<int>(w.samples.size());
    if (len < p.win_len)
        throw ContractError("stft: input shorter than the analysis window (" +
                            std::to_string(len) + " < " + std::to_string(p.win_len) + ")");
    check_contract(p.win_len <= p.n_fft, "stft: win_len must not exceed n_fft");
    const int n_frames = 1 + (len - p.win_len) / p.hop;
    std::vector<double> window(p.win_len);
    for (int i = 0; i < p.win_len; ++i)
        window[i] = 0.5 * (1.0 - std::cos(2.0 * 3.14159265358979323846 * i / p.win_len));
    MatD out(n_frames, p.n_bins());
    std::vector<std::complex<double>> buf(p.n_fft);
    for (int f = 0; f < n_frames; ++f) {
        std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
        const int start = f * p.hop;
        for (int i = 0; i < p.win_len; ++i) buf[i] = window[i] * w.samples[start + i];
        fft_radix2(buf);
        double* row = out.row(f);
        for (int k = 0; k <= p.n_fft / 2; ++k) row[k] = std::abs(buf[k]);
    }
    return out;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MatD mel_filterbank(const StftParams& p) {
    const int bins = p.n_bins();
    MatD fb(p.n_mels, bins);
    const double mel_max = hz_to_mel(p.sample_rate / 2.0);
    std::vector<double> edges(p.n_mels + 2);
    for (int i = 0; i < p.n_mels + 2; ++i)
        edges[i] = mel_to_hz(mel_max * i / (p.n_mels + 1));
    for (int m = 0; m < p.n_mels; ++m) {
        const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
        for (int k = 0; k < bins; ++k) {
            const double f = static_cast<double>(k) * p.sample_rate / p.n_fft;
            double w = 0.0;
            if (f > lo && f < hi) w = f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
            fb(m, k) = std::max(0.0, w);
        }
    }
    return fb;
}

MelSpectrogram mel_project(const MatD& spec, const StftParams& p) {
    check_contract(spec.cols == p.n_bins(), "mel_project: bin count mismatch");
    const MatD fb = mel_filterbank(p);
    MelSpectrogram mel;
    mel.params = p;
    mel.data.resize(spec.rows, p.n_mels);
    for (int f = 0; f < spec.rows; ++f) {
        const double* s = spec.row(f);
        double* o = mel.data.row(f);
        for (int m = 0; m < p.n_mels; ++m) {
            double acc = 0.0;
            const double* w = fb.row(m);
            for (int k = 0; k < spec.cols; ++k) acc += w[k] * s[k];
            o[m] = std::log(kLogFloor + acc);
        }
    }
    return mel;
}

ToyLatentCodec::ToyLatentCodec(const StftParams& p, int latent_dim, uint64_t seed)
    : params_(p), latent_dim_(latent_dim) {
    const int stacked = 2 * p.n_mels;
    check_contract(latent_dim >= 1 && latent_dim <= stacked,
                   "codec: latent_dim must be in [1, 2 * n_mels]");
    proj_.resize(latent_dim, stacked);
    Rng rng(mix_seed(seed, static_cast<uint64_t>(latent_dim)));
    rng.fill_normal(proj_);
    // Modified Gram-Schmidt; seeded Gaussian rows are independent with
    // probability one, so no re-draws are needed at these sizes.
    for (int i = 0; i < latent_dim; ++i) {
        double* ri = proj_.row(i);
        for (int j = 0; j < i; ++j) {
            const double* rj = proj_.row(j);
            double dot = 0.0;
            for (int k = 0; k < stacked; ++k) dot += ri[k] * rj[k];
            for (int k = 0; k < stacked; ++k) ri[k] -= dot * rj[k];
        }
        double norm = 0.0;
        for (int k = 0; k < stacked; ++k) norm += ri[k] * ri[k];
        norm = std::sqrt(norm);
        check_contract(norm > 1e-12, "codec: degenerate projection row");
        for (int k = 0; k < stacked; ++k) ri[k] /= norm;
    }
}

LatentSeq<double> ToyLatentCodec::encode(const MelSpectrogram& mel) const {
    check_contract(mel.data.cols == params_.n_mels, "codec encode: mel band count mismatch");
    int frames = mel.data.rows;
    check_contract(frames >= 1, "codec encode: empty input");
    const int pairs = (frames + 1) / 2;
    LatentSeq<double> z(MatD(pairs, latent_dim_), params_.latent_fps());
    const int stacked = 2 * params_.n_mels;
    std::vector<double> buf(stacked);
    for (int i = 0; i < pairs; ++i) {
        const int f0 = 2 * i;
        const int f1 = std::min(2 * i + 1, frames - 1);  // odd tail repeats the last frame
        std::memcpy(buf.data(), mel.data.row(f0), params_.n_mels * sizeof(double));
        std::memcpy(buf.data() + params_.n_mels, mel.data.row(f1), params_.n_mels * sizeof(double));
        double* o = z.data.row(i);
        for (int d = 0; d < latent_dim_; ++d) {
            const double* pr = proj_.row(d);
            double acc = 0.0;
            for (int k = 0; k < stacked; ++k) acc += pr[k] * buf[k];
            o[d] = acc;
        }
    }
    return z;
}

MelSpectrogram ToyLatentCodec::decode(const LatentSeq<double>& z) const {
    check_contract(z.data.cols == latent_dim_, "codec decode: latent channel mismatch");
    MelSpectrogram mel;
    mel.params = params_;
    mel.data.resize(2 * z.data.rows, params_.n_mels);
    const int stacked = 2 * params_.n_mels;
    std::vector<double> buf(stacked);
    for (int i = 0; i < z.data.rows; ++i) {
        std::fill(buf.begin(), buf.end(), 0.0);
        const double* zi = z.data.row(i);
        for (int d = 0; d < latent_dim_; ++d) {
            const double* pr = proj_.row(d);
            for (int k = 0; k < stacked; ++k) buf[k] += zi[d] * pr[k];
        }
        std::memcpy(mel.data.row(2 * i), buf.data(), params_.n_mels * sizeof(double));
        std::memcpy(mel.data.row(2 * i + 1), buf.data() + params_.n_mels,
                    params_.n_mels * sizeof(double));
    }
    return mel;
}

namespace {

uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

uint16_t read_u16(std::istream& is) {
    unsigned char b[2];
    is.read(reinterpret_cast<char*>(b), 2);
    return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

void write_u32(std::ostream& os, uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

void write_u16(std::ostream& os, uint16_t v) {
    const unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
    os.write(reinterpret_cast<const char*>(b), 2);
}

}  // namespace

Waveform read_wav(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("wav: cannot open " + path);
    char tag[4];
    is.read(tag, 4);
    if (!is || std::strncmp(tag, "RIFF", 4) != 0) throw IoError("wav: not a RIFF file: " + path);
    read_u32(is);  // riff size
    is.read(tag, 4);
    if (!is || std::strncmp(tag, "WAVE", 4) != 0) throw IoError("wav: not a WAVE file: " + path);

    Waveform w;
    bool have_fmt = false;
    while (is.read(tag, 4)) {
        const uint32_t size = read_u32(is);
        if (std::strncmp(tag, "fmt ", 4) == 0) {
            const uint16_t format = read_u16(is);
            const uint16_t channels = read_u16(is);
            const uint32_t rate = read_u32(is);
            read_u32(is);  // byte rate
            read_u16(is);  // block align
            const uint16_t bits = read_u16(is);
            if (size > 16) is.seekg(size - 16, std::ios::cur);
            if (format != 1) throw IoError("wav: only PCM supported: " + path);
            if (channels != 1) throw IoError("wav: only mono supported: " + path);
            if (bits != 16) throw IoError("wav: only 16-bit supported: " + path);
            w.sample_rate = static_cast<int>(rate);
            have_fmt = true;
        } else if (std::strncmp(tag, "data", 4) == 0) {
            if (!have_fmt) throw IoError("wav: data chunk before fmt: " + path);
            const uint32_t n = size / 2;
            w.samples.resize(n);
            for (uint32_t i = 0; i < n; ++i) {
                const uint16_t u = read_u16(is);
                if (!is) throw IoError("wav: truncated data chunk: " + path);
                w.samples[i] = static_cast<int16_t>(u) / 32768.0;
            }
            return w;
        } else {
            is.seekg(size + (size & 1), std::ios::cur);
        }
    }
    throw IoError("wav: no data chunk in " + path);
}

void write_wav(const std::string& path, const Waveform& w) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("wav: cannot open " + path + " for writing");
    const uint32_t data_size = static_cast<uint32_t>(w.samples.size() * 2);
    os.write("RIFF", 4);
    write_u32(os, 36 + data_size);
    os.write("WAVE", 4);
    os.write("fmt ", 4);
    write_u32(os, 16);
    write_u16(os, 1);
    write_u16(os, 1);
    write_u32(os, static_cast<uint32_t>(w.sample_rate));
    write_u32(os, static_cast<uint32_t>(w.sample_rate * 2));
    write_u16(os, 2);
    write_u16(os, 16);
    os.write("data", 4);
    write_u32(os, data_size);
    for (double s : w.samples) {
        const double clamped = std::clamp(s, -1.0, 1.0);
        write_u16(os, static_cast<uint16_t>(static_cast<int16_t>(std::lrint(clamped * 32767.0))));
    }
    if (!os) throw IoError("wav: write failed for " + path);
}

}  // namespace avflow
