// SPDX-License-Identifier: Apache-2.0
#include "subgeo/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "subgeo/errors.hpp"

namespace subgeo::analysis {

namespace {

double mean_of(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
}

double sample_variance(const std::vector<double>& v, double mean) {
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return acc / static_cast<double>(v.size() - 1);
}

// Continued fraction for the incomplete beta (Lentz's method).
double beta_cf(double a, double b, double x) {
    constexpr int max_iter = 500;
    constexpr double eps = 1e-15;
    constexpr double tiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) return h;
    }
    throw NumericalError("incomplete beta continued fraction did not converge", 500);
}

struct CorrOutcome {
    double r = 0.0;
    bool valid = false;
    std::string note;
};

CorrOutcome try_pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
    CorrOutcome out;
    if (xs.size() != ys.size() || xs.size() < 2) {
        out.note = "fewer than 2 points";
        return out;
    }
    const double mx = mean_of(xs);
    const double my = mean_of(ys);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) {
        out.note = "zero variance";
        return out;
    }
    out.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    out.valid = true;
    return out;
}

} // namespace

double effective_rank(const std::vector<double>& singular_values) {
    if (singular_values.empty()) throw DimError("effective_rank: empty spectrum");
    double total = 0.0;
    for (double s : singular_values) {
        if (s < 0.0) throw DimError("effective_rank: singular values must be non-negative");
        total += s;
    }
    if (total <= 0.0) throw DimError("effective_rank: all-zero spectrum");
    double entropy = 0.0;
    for (double s : singular_values) {
        if (s <= 0.0) continue; // 0 * ln 0 := 0
        const double p = s / total;
        entropy -= p * std::log(p);
    }
    return std::exp(entropy);
}

FitResult fit_forgetting_law(const std::vector<std::pair<double, double>>& points) {
    const int n = static_cast<int>(points.size());
    if (n < 3) throw DimError("fit_forgetting_law: need at least 3 points");
    double mx = 0.0, my = 0.0;
    for (const auto& [x, y] : points) {
        mx += x;
        my += y;
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [x, y] : points) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if (sxx <= 0.0) throw DimError("fit_forgetting_law: degenerate x (zero variance)");

    FitResult fit;
    fit.n_points = n;
    fit.alpha = sxy / sxx;
    fit.beta = my - fit.alpha * mx;
    if (syy <= 0.0) {
        // Flat data: the fit is exact and the correlation undefined.
        fit.alpha = 0.0;
        fit.beta = my;
        fit.r_squared = 1.0;
        fit.pearson_r = 0.0;
        fit.y_degenerate = true;
        return fit;
    }
    double ss_res = 0.0;
    for (const auto& [x, y] : points) {
        const double e = y - (fit.alpha * x + fit.beta);
        ss_res += e * e;
    }
    fit.r_squared = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
    fit.pearson_r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    return fit;
}

double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw DimError("pearson: length mismatch");
    if (xs.size() < 2) throw DimError("pearson: need at least 2 points");
    const CorrOutcome out = try_pearson(xs, ys);
    if (!out.valid) throw DimError("pearson: " + out.note);
    return out.r;
}

StatsSummary summarize(const std::vector<double>& values) {
    if (values.size() < 2) throw DimError("summarize: need at least 2 values");
    StatsSummary s;
    s.n = static_cast<int>(values.size());
    s.mean = mean_of(values);
    s.std = std::sqrt(sample_variance(values, s.mean));
    if (s.mean != 0.0) {
        s.cv = s.std / s.mean;
        s.cv_valid = true;
    } else {
        s.cv = 0.0;
        s.cv_valid = false;
    }
    return s;
}

double cohens_d(const std::vector<double>& group_a, const std::vector<double>& group_b) {
    if (group_a.size() < 2 || group_b.size() < 2) throw DimError("cohens_d: each group needs n >= 2");
    const double ma = mean_of(group_a);
    const double mb = mean_of(group_b);
    const double va = sample_variance(group_a, ma);
    const double vb = sample_variance(group_b, mb);
    const double na = static_cast<double>(group_a.size());
    const double nb = static_cast<double>(group_b.size());
    const double pooled = std::sqrt(((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0));
    if (pooled <= 0.0) throw NumericalError("cohens_d: zero pooled standard deviation");
    return (ma - mb) / pooled;
}

double incomplete_beta(double a, double b, double x) {
    if (x < 0.0 || x > 1.0) throw DimError("incomplete_beta: x must lie in [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double ln_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log(1.0 - x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_cf(a, b, x) / a;
    }
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

WelchResult welch_t_test(const std::vector<double>& group_a, const std::vector<double>& group_b) {
    if (group_a.size() < 2 || group_b.size() < 2) throw DimError("welch_t_test: each group needs n >= 2");
    const double na = static_cast<double>(group_a.size());
    const double nb = static_cast<double>(group_b.size());
    const double ma = mean_of(group_a);
    const double mb = mean_of(group_b);
    const double va = sample_variance(group_a, ma);
    const double vb = sample_variance(group_b, mb);
    if (va <= 0.0 && vb <= 0.0) throw NumericalError("welch_t_test: both variances are zero");

    WelchResult out;
    const double se2 = va / na + vb / nb;
    out.t = (ma - mb) / std::sqrt(se2);
    out.df = se2 * se2 / ((va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0));
    if (out.t == 0.0) {
        out.p = 1.0;
        return out;
    }
    // Two-sided p: P(|T| > t) = I_{df/(df+t^2)}(df/2, 1/2).
    const double x = out.df / (out.df + out.t * out.t);
    out.p = std::clamp(incomplete_beta(out.df / 2.0, 0.5, x), 0.0, 1.0);
    return out;
}

double rank_angle_effective(double theta, int r, double c) {
    constexpr double half_pi = std::numbers::pi / 2.0;
    if (!(theta >= 0.0) || theta > half_pi + 1e-12) {
        throw DimError("rank_angle_effective: theta must lie in [0, pi/2]");
    }
    if (r < 1) throw DimError("rank_angle_effective: rank must be at least 1");
    if (!(c > 0.0)) throw DimError("rank_angle_effective: c must be positive");
    if (theta == 0.0) return static_cast<double>(r);
    const double denom = 1.0 - std::cos(theta);
    if (denom <= 0.0) return static_cast<double>(r);
    return std::min(static_cast<double>(r), c / denom);
}

RegimeResult regime_analysis(const std::vector<RegimeRecord>& records, double angle_threshold) {
    std::vector<double> lo_rank, lo_forget, hi_rank, hi_forget, all_rank, all_forget;
    for (const auto& rec : records) {
        all_rank.push_back(rec.rank);
        all_forget.push_back(rec.forgetting);
        if (rec.theta_min < angle_threshold) {
            lo_rank.push_back(rec.rank);
            lo_forget.push_back(rec.forgetting);
        } else {
            hi_rank.push_back(rec.rank);
            hi_forget.push_back(rec.forgetting);
        }
    }

    auto correlate = [](const std::vector<double>& xs, const std::vector<double>& ys) {
        RegimeCorrelation out;
        out.n = static_cast<int>(xs.size());
        if (out.n < 3) {
            out.note = "insufficient records";
            return out;
        }
        const CorrOutcome c = try_pearson(xs, ys);
        out.r = c.r;
        out.valid = c.valid;
        out.note = c.note;
        return out;
    };

    RegimeResult result;
    result.low = correlate(lo_rank, lo_forget);
    result.high = correlate(hi_rank, hi_forget);
    result.pooled = correlate(all_rank, all_forget);
    return result;
}

LayerwiseResult layerwise_correlation(
    const std::vector<std::pair<std::vector<double>, std::vector<double>>>& per_block) {
    if (per_block.empty()) throw DimError("layerwise_correlation: no blocks");

    LayerwiseResult result;
    std::vector<double> pooled_x, pooled_y;
    for (std::size_t b = 0; b < per_block.size(); ++b) {
        const auto& [xs, ys] = per_block[b];
        if (xs.size() != ys.size() || xs.size() < 3) {
            throw DimError("layerwise_correlation: each block needs at least 3 paired points");
        }
        LayerwiseBlock block;
        block.block = static_cast<int>(b);
        const CorrOutcome c = try_pearson(xs, ys);
        block.r = c.r;
        block.valid = c.valid;
        block.note = c.note;
        if (c.valid) {
            ++result.valid_blocks;
            if (c.r > 0.0) ++result.positive_count;
            // Pool after per-block z-normalization of both variables.
            const double mx = mean_of(xs);
            const double my = mean_of(ys);
            const double sx = std::sqrt(sample_variance(xs, mx));
            const double sy = std::sqrt(sample_variance(ys, my));
            for (std::size_t i = 0; i < xs.size(); ++i) {
                pooled_x.push_back((xs[i] - mx) / sx);
                pooled_y.push_back((ys[i] - my) / sy);
            }
        }
        result.per_block.push_back(std::move(block));
    }
    if (pooled_x.size() >= 2) {
        const CorrOutcome c = try_pearson(pooled_x, pooled_y);
        result.aggregate_r = c.valid ? c.r : 0.0;
    }
    return result;
}

} // namespace subgeo::analysis
