// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>
#include <vector>

namespace subgeo::analysis {

/// exp of the Shannon entropy of the normalized singular-value distribution
/// p_i = s_i / sum(s); a soft count of significant spectral directions.
/// Zero entries contribute nothing; an all-zero spectrum is an error.
double effective_rank(const std::vector<double>& singular_values);

struct FitResult {
    double alpha = 0.0;
    double beta = 0.0;
    double r_squared = 0.0;
    double pearson_r = 0.0;
    int n_points = 0;
    bool y_degenerate = false; // constant y: zero residual and zero variance
};

/// Ordinary least squares of y on x for the forgetting law y = alpha x + beta.
/// Requires n >= 3 and non-degenerate x.
FitResult fit_forgetting_law(const std::vector<std::pair<double, double>>& points);

double pearson(const std::vector<double>& xs, const std::vector<double>& ys);

struct StatsSummary {
    double mean = 0.0;
    double std = 0.0; // sample, n-1 denominator
    double cv = 0.0;  // std / mean; invalid when mean == 0
    bool cv_valid = true;
    int n = 0;
};

StatsSummary summarize(const std::vector<double>& values);

/// Standardized mean difference (mean_a - mean_b) / pooled_std.
double cohens_d(const std::vector<double>& group_a, const std::vector<double>& group_b);

struct WelchResult {
    double t = 0.0;
    double p = 1.0; // two-sided
    double df = 0.0;
};

/// Welch's t statistic with Welch-Satterthwaite degrees of freedom; the
/// p-value comes from the exact Student-t CDF via the regularized incomplete
/// beta function.
WelchResult welch_t_test(const std::vector<double>& group_a, const std::vector<double>& group_b);

/// Regularized incomplete beta I_x(a, b), absolute error below 1e-10.
double incomplete_beta(double a, double b, double x);

/// Effective-rank interaction model: r at theta == 0, otherwise
/// min(r, c / (1 - cos(theta))).
double rank_angle_effective(double theta, int r, double c);

struct RegimeRecord {
    double rank = 0.0;
    double theta_min = 0.0;
    double forgetting = 0.0;
};

struct RegimeCorrelation {
    double r = 0.0;
    int n = 0;
    bool valid = false;
    std::string note;
};

struct RegimeResult {
    RegimeCorrelation low;
    RegimeCorrelation high;
    RegimeCorrelation pooled;
};

/// Rank-forgetting correlation split at angle_threshold. Regimes with fewer
/// than 3 records or zero variance are flagged as insufficient rather than
/// raising.
RegimeResult regime_analysis(const std::vector<RegimeRecord>& records, double angle_threshold);

struct LayerwiseBlock {
    int block = 0;
    double r = 0.0;
    bool valid = false;
    std::string note;
};

struct LayerwiseResult {
    std::vector<LayerwiseBlock> per_block;
    double aggregate_r = 0.0; // Pearson over all points pooled after per-block z-normalization
    int positive_count = 0;   // blocks with r > 0
    int valid_blocks = 0;
};

LayerwiseResult layerwise_correlation(
    const std::vector<std::pair<std::vector<double>, std::vector<double>>>& per_block);

} // namespace subgeo::analysis
