// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace avflow {

/// Dense row-major matrix. Sequences are stored as (length, channels).
template <typename T>
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<T> v;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), v(static_cast<size_t>(r) * static_cast<size_t>(c), T(0)) {}

    static Mat full(int r, int c, T value) {
        Mat m(r, c);
        std::fill(m.v.begin(), m.v.end(), value);
        return m;
    }

    T* row(int i) { return v.data() + static_cast<size_t>(i) * cols; }
    const T* row(int i) const { return v.data() + static_cast<size_t>(i) * cols; }

    T& operator()(int i, int j) { return v[static_cast<size_t>(i) * cols + j]; }
    const T& operator()(int i, int j) const { return v[static_cast<size_t>(i) * cols + j]; }

    size_t numel() const { return v.size(); }
    bool empty() const { return rows == 0 || cols == 0; }
    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

    void resize(int r, int c) {
        rows = r;
        cols = c;
        v.assign(static_cast<size_t>(r) * static_cast<size_t>(c), T(0));
    }
    void zero() { std::fill(v.begin(), v.end(), T(0)); }

    bool all_finite() const {
        for (const T& x : v) {
            if (!std::isfinite(static_cast<double>(x))) return false;
        }
        return true;
    }

    template <typename U>
    Mat<U> cast() const {
        Mat<U> m(rows, cols);
        for (size_t i = 0; i < v.size(); ++i) m.v[i] = static_cast<U>(v[i]);
        return m;
    }
};

using MatF = Mat<float>;
using MatD = Mat<double>;

/// splitmix64 step; used to derive independent seed streams from one run seed.
inline uint64_t mix_seed(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t mix_seed(uint64_t a, uint64_t b) { return mix_seed(mix_seed(a) ^ b); }
inline uint64_t mix_seed(uint64_t a, uint64_t b, uint64_t c) { return mix_seed(mix_seed(a, b) ^ c); }

/// Deterministic generator built on std::mt19937_64. The normal sampler is
/// hand-rolled Box-Muller so draws are identical across standard libraries.
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t next_u64() { return eng_(); }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n).
    int uniform_int(int n) { return static_cast<int>(eng_() % static_cast<uint64_t>(n)); }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    template <typename T>
    void fill_normal(Mat<T>& m, double scale = 1.0) {
        for (T& x : m.v) x = static_cast<T>(normal() * scale);
    }

    template <typename T>
    void fill_uniform(Mat<T>& m, double lo, double hi) {
        for (T& x : m.v) x = static_cast<T>(lo + (hi - lo) * uniform());
    }

    template <typename It>
    void shuffle(It first, It last) {
        auto n = last - first;
        for (auto i = n - 1; i > 0; --i) {
            auto j = uniform_int(static_cast<int>(i) + 1);
            std::swap(first[i], first[j]);
        }
    }

private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace avflow
