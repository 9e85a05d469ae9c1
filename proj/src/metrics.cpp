// SPDX-License-Identifier: Apache-2.0
#include "avflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "avflow/errors.hpp"

namespace avflow {

void symmetric_eig(const MatD& a, std::vector<double>& values, MatD& vectors) {
    check_contract(a.rows == a.cols, "symmetric_eig: matrix must be square");
    const int n = a.rows;
    MatD m = a;
    vectors.resize(n, n);
    vectors.zero();
    for (int i = 0; i < n; ++i) vectors(i, i) = 1.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += m(p, q) * m(p, q);
        double scale = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = 0; q < n; ++q) scale += m(p, q) * m(p, q);
        if (off <= 1e-26 * std::max(scale, 1e-300)) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(m(p, q)) < 1e-300) continue;
                const double theta = (m(q, q) - m(p, p)) / (2.0 * m(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double mkp = m(k, p), mkq = m(k, q);
                    m(k, p) = c * mkp - s * mkq;
                    m(k, q) = s * mkp + c * mkq;
                }
                for (int k = 0; k < n; ++k) {
                    const double mpk = m(p, k), mqk = m(q, k);
                    m(p, k) = c * mpk - s * mqk;
                    m(q, k) = s * mpk + c * mqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = vectors(k, p), vkq = vectors(k, q);
                    vectors(k, p) = c * vkp - s * vkq;
                    vectors(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    values.resize(n);
    for (int i = 0; i < n; ++i) values[i] = m(i, i);

    // Sort ascending, permuting eigenvector columns alongside.
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int x, int y) { return values[x] < values[y]; });
    std::vector<double> sorted_vals(n);
    MatD sorted_vecs(n, n);
    for (int i = 0; i < n; ++i) {
        sorted_vals[i] = values[idx[i]];
        for (int k = 0; k < n; ++k) sorted_vecs(k, i) = vectors(k, idx[i]);
    }
    values = std::move(sorted_vals);
    vectors = std::move(sorted_vecs);
}

namespace {

void mean_and_cov(const MatD& x, std::vector<double>& mu, MatD& cov) {
    const int n = x.rows, d = x.cols;
    mu.assign(d, 0.0);
    for (int i = 0; i < n; ++i) {
        const double* r = x.row(i);
        for (int j = 0; j < d; ++j) mu[j] += r[j];
    }
    for (int j = 0; j < d; ++j) mu[j] /= n;
    cov.resize(d, d);
    for (int i = 0; i < n; ++i) {
        const double* r = x.row(i);
        for (int a = 0; a < d; ++a) {
            const double da = r[a] - mu[a];
            for (int b = a; b < d; ++b) cov(a, b) += da * (r[b] - mu[b]);
        }
    }
    const double denom = n > 1 ? n - 1.0 : 1.0;
    for (int a = 0; a < d; ++a)
        for (int b = a; b < d; ++b) {
            cov(a, b) /= denom;
            cov(b, a) = cov(a, b);
        }
    if (n <= d)
        for (int a = 0; a < d; ++a) cov(a, a) += 1e-6;  // shrinkage for rank-deficient fits
}

// B = V f(L) V^T for symmetric A = V L V^T.
MatD eig_apply(const MatD& a, double (*f)(double)) {
    std::vector<double> vals;
    MatD vecs;
    symmetric_eig(a, vals, vecs);
    const int n = a.rows;
    MatD out(n, n);
    for (int i = 0; i < n; ++i) {
        const double fv = f(std::max(vals[i], 0.0));
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) out(r, c) += fv * vecs(r, i) * vecs(c, i);
    }
    return out;
}

double fsqrt(double x) { return std::sqrt(x); }
double finvsqrt(double x) { return x > 1e-12 ? 1.0 / std::sqrt(x) : 0.0; }

MatD matmul(const MatD& a, const MatD& b) {
    MatD c(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i)
        for (int k = 0; k < a.cols; ++k) {
            const double av = a(i, k);
            for (int j = 0; j < b.cols; ++j) c(i, j) += av * b(k, j);
        }
    return c;
}

void softmax_row(const double* logits, int k, std::vector<double>& p) {
    p.resize(k);
    double mx = logits[0];
    for (int j = 1; j < k; ++j) mx = std::max(mx, logits[j]);
    double sum = 0.0;
    for (int j = 0; j < k; ++j) {
        p[j] = std::exp(logits[j] - mx);
        sum += p[j];
    }
    for (int j = 0; j < k; ++j) p[j] /= sum;
}

double median_of(std::vector<double> v) {
    const size_t n = v.size();
    std::nth_element(v.begin(), v.begin() + n / 2, v.end());
    double m = v[n / 2];
    if (n % 2 == 0) {
        std::nth_element(v.begin(), v.begin() + n / 2 - 1, v.end());
        m = 0.5 * (m + v[n / 2 - 1]);
    }
    return m;
}

}  // namespace

MatD sqrtm_product(const MatD& sa, const MatD& sb) {
    // (Sa Sb)^(1/2) = Sa^(1/2) (Sa^(1/2) Sb Sa^(1/2))^(1/2) Sa^(-1/2)
    const MatD a_half = eig_apply(sa, fsqrt);
    const MatD a_halfinv = eig_apply(sa, finvsqrt);
    MatD inner = matmul(matmul(a_half, sb), a_half);
    for (int i = 0; i < inner.rows; ++i)
        for (int j = i + 1; j < inner.cols; ++j) {
            const double s = 0.5 * (inner(i, j) + inner(j, i));
            inner(i, j) = s;
            inner(j, i) = s;
        }
    return matmul(matmul(a_half, eig_apply(inner, fsqrt)), a_halfinv);
}

double frechet_distance(const EmbeddingSet& a, const EmbeddingSet& b) {
    check_contract(a.vectors.cols == b.vectors.cols, "frechet: dimensionality mismatch");
    check_contract(a.vectors.rows >= 2 && b.vectors.rows >= 2, "frechet: need at least 2 vectors");
    if (!a.vectors.all_finite() || !b.vectors.all_finite())
        throw NumericError("frechet: non-finite embeddings");
    const int d = a.vectors.cols;
    std::vector<double> mu_a, mu_b;
    MatD cov_a, cov_b;
    mean_and_cov(a.vectors, mu_a, cov_a);
    mean_and_cov(b.vectors, mu_b, cov_b);

    double mean_term = 0.0;
    for (int j = 0; j < d; ++j) {
        const double dm = mu_a[j] - mu_b[j];
        mean_term += dm * dm;
    }
    // tr((Sa Sb)^(1/2)) via the symmetric form Sa^(1/2) Sb Sa^(1/2).
    const MatD a_half = eig_apply(cov_a, fsqrt);
    MatD inner = matmul(matmul(a_half, cov_b), a_half);
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
            const double s = 0.5 * (inner(i, j) + inner(j, i));
            inner(i, j) = s;
            inner(j, i) = s;
        }
    std::vector<double> vals;
    MatD vecs;
    symmetric_eig(inner, vals, vecs);
    double tr_sqrt = 0.0;
    for (double v : vals) tr_sqrt += std::sqrt(std::max(v, 0.0));
    double tr = 0.0;
    for (int i = 0; i < d; ++i) tr += cov_a(i, i) + cov_b(i, i);
    const double fd = mean_term + tr - 2.0 * tr_sqrt;
    return std::max(fd, 0.0);
}

double inception_score(const LogitSet& l) {
    check_contract(l.logits.rows >= 1 && l.logits.cols >= 2, "inception_score: need (N>=1, K>=2)");
    if (!l.logits.all_finite()) throw NumericError("inception_score: non-finite logits");
    const int n = l.logits.rows, k = l.logits.cols;
    std::vector<double> marginal(k, 0.0), p;
    std::vector<std::vector<double>> posts(n);
    for (int i = 0; i < n; ++i) {
        softmax_row(l.logits.row(i), k, p);
        posts[i] = p;
        for (int j = 0; j < k; ++j) marginal[j] += p[j] / n;
    }
    double kl = 0.0;
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < k; ++j)
            if (posts[i][j] > 0.0) s += posts[i][j] * std::log(posts[i][j] / marginal[j]);
        kl += s / n;
    }
    return std::exp(kl);
}

double paired_kl(const LogitSet& gt, const LogitSet& gen) {
    check_contract(gt.paired && gen.paired, "paired_kl: sets must be paired");
    check_contract(gt.logits.rows == gen.logits.rows && gt.logits.cols == gen.logits.cols,
                   "paired_kl: shape mismatch");
    check_contract(gt.logits.rows >= 1 && gt.logits.cols >= 2, "paired_kl: need (N>=1, K>=2)");
    const int n = gt.logits.rows, k = gt.logits.cols;
    std::vector<double> p, q;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        softmax_row(gt.logits.row(i), k, p);
        softmax_row(gen.logits.row(i), k, q);
        double s = 0.0;
        for (int j = 0; j < k; ++j)
            if (p[j] > 0.0) s += p[j] * std::log(p[j] / q[j]);
        total += s;
    }
    return total / n;
}

OnsetSeries detect_onsets(const MelSpectrogram& mel) {
    check_contract(mel.data.rows >= 1, "detect_onsets: empty spectrogram");
    const int frames = mel.data.rows;
    const int bands = mel.data.cols;
    const double frame_dt = static_cast<double>(mel.params.hop) / mel.params.sample_rate;

    OnsetSeries out;
    out.duration = (frames - 1) * frame_dt +
                   static_cast<double>(mel.params.win_len) / mel.params.sample_rate;
    if (frames < 2) return out;

    // Flux on linear magnitudes so global gain scales flux and threshold
    // together, leaving peak positions unchanged.
    std::vector<double> flux(frames, 0.0);
    for (int f = 1; f < frames; ++f) {
        const double* cur = mel.data.row(f);
        const double* prev = mel.data.row(f - 1);
        double s = 0.0;
        for (int b = 0; b < bands; ++b) {
            const double d = (std::exp(cur[b]) - kLogFloor) - (std::exp(prev[b]) - kLogFloor);
            if (d > 0.0) s += d;
        }
        flux[f] = s;
    }

    const int half_win = std::max(1, static_cast<int>(std::llround(0.5 / frame_dt)));
    const int min_gap = std::max(1, static_cast<int>(std::llround(0.1 / frame_dt)));
    int last = -min_gap - 1;
    for (int f = 1; f < frames; ++f) {
        const int lo = std::max(0, f - half_win);
        const int hi = std::min(frames, f + half_win + 1);
        std::vector<double> window(flux.begin() + lo, flux.begin() + hi);
        const double med = median_of(window);
        for (double& w : window) w = std::abs(w - med);
        const double mad = median_of(window);
        const double thresh = med + 1.5 * mad;
        const bool local_max = flux[f] >= (f > 0 ? flux[f - 1] : 0.0) &&
                               (f + 1 >= frames || flux[f] >= flux[f + 1]);
        if (flux[f] > thresh && local_max && f - last >= min_gap) {
            out.times.push_back(f * frame_dt +
                                0.5 * static_cast<double>(mel.params.win_len) / mel.params.sample_rate);
            out.strengths.push_back(flux[f]);
            last = f;
        }
    }
    return out;
}

namespace {

/// Greedy one-to-one matching in time order within tolerance.
int count_matches(const std::vector<double>& pred, const std::vector<double>& gt, double tol) {
    int matches = 0;
    size_t j = 0;
    std::vector<bool> used(gt.size(), false);
    for (double p : pred) {
        while (j < gt.size() && gt[j] < p - tol) ++j;
        for (size_t k = j; k < gt.size() && gt[k] <= p + tol; ++k) {
            if (!used[k]) {
                used[k] = true;
                ++matches;
                break;
            }
        }
    }
    return matches;
}

}  // namespace

int onset_match_count(const std::vector<double>& pred, const std::vector<double>& gt, double tol) {
    return count_matches(pred, gt, tol);
}

OnsetScores onset_scores(const OnsetSeries& pred, const OnsetSeries& gt, double tol) {
    check_contract(tol > 0.0, "onset_scores: tolerance must be positive");
    OnsetScores s;
    const int m = count_matches(pred.times, gt.times, tol);
    const size_t np = pred.times.size(), ng = gt.times.size();
    if (np == 0 && ng == 0) {
        s.accuracy = 1.0;
        s.ap = 1.0;
        s.f1 = 1.0;
        return s;
    }
    if (np == 0 || ng == 0) return s;
    const double precision = static_cast<double>(m) / np;
    const double recall = static_cast<double>(m) / ng;
    s.accuracy = static_cast<double>(m) / std::max(np, ng);
    s.f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;

    // Sweep the detector confidence: each threshold keeps onsets at least
    // that strong and contributes one precision/recall point.
    std::vector<double> strengths = pred.strengths;
    strengths.resize(np, 1.0);
    std::vector<double> unique_s = strengths;
    std::sort(unique_s.begin(), unique_s.end(), std::greater<>());
    unique_s.erase(std::unique(unique_s.begin(), unique_s.end()), unique_s.end());
    std::vector<std::pair<double, double>> pr;  // (recall, precision)
    for (double th : unique_s) {
        std::vector<double> kept;
        for (size_t i = 0; i < np; ++i)
            if (strengths[i] >= th) kept.push_back(pred.times[i]);
        const int mk = count_matches(kept, gt.times, tol);
        pr.emplace_back(static_cast<double>(mk) / ng,
                        kept.empty() ? 0.0 : static_cast<double>(mk) / kept.size());
    }
    std::sort(pr.begin(), pr.end());
    // Interpolated precision envelope, integrated over recall.
    double ap = 0.0, prev_recall = 0.0;
    for (size_t i = 0; i < pr.size(); ++i) {
        double pmax = 0.0;
        for (size_t j = i; j < pr.size(); ++j) pmax = std::max(pmax, pr[j].second);
        ap += (pr[i].first - prev_recall) * pmax;
        prev_recall = pr[i].first;
    }
    s.ap = ap;
    return s;
}

double lag_metric(const std::vector<double>& gen_env, const std::vector<double>& gt_env,
                  double fps) {
    check_contract(gen_env.size() == gt_env.size(), "lag_metric: length mismatch");
    check_contract(fps > 0.0, "lag_metric: fps must be positive");
    const int n = static_cast<int>(gen_env.size());
    check_contract(n >= 2, "lag_metric: need at least 2 frames");

    auto centered = [n](const std::vector<double>& v) {
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= n;
        std::vector<double> c(v);
        for (double& x : c) x -= mean;
        return c;
    };
    const std::vector<double> g = centered(gen_env);
    const std::vector<double> r = centered(gt_env);
    auto energy = [](const std::vector<double>& v) {
        double e = 0.0;
        for (double x : v) e += x * x;
        return e;
    };
    const double eg = energy(g), er = energy(r);
    if (eg <= 1e-12 || er <= 1e-12)
        throw NumericError("lag_metric: zero-energy envelope, lag undefined");

    const int max_lag = std::min(n - 1, static_cast<int>(std::llround(fps)));
    double best = -2.0;
    int best_lag = 0;
    for (int lag = -max_lag; lag <= max_lag; ++lag) {
        // positive lag: generated trails ground truth, gen[t] ~ gt[t - lag]
        double dot = 0.0;
        for (int t = 0; t < n; ++t) {
            const int u = t - lag;
            if (u < 0 || u >= n) continue;
            dot += g[t] * r[u];
        }
        const double corr = dot / std::sqrt(eg * er);
        if (corr > best) {
            best = corr;
            best_lag = lag;
        }
    }
    return best_lag / fps;
}

}  // namespace avflow
