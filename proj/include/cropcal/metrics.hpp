#pragma once

/// @file metrics.hpp
/// Error metrics and the non-parametric tests used to compare optimizers.

#include <span>
#include <vector>

namespace cropcal::metrics {

struct MetricReport {
    double mse = 0.0;
    double mae = 0.0;
    double rmse = 0.0;
    /// NaN when either series has zero variance.
    double correlation = 0.0;
};

double mse(std::span<const double> y, std::span<const double> yhat);
double mae(std::span<const double> y, std::span<const double> yhat);
double rmse(std::span<const double> y, std::span<const double> yhat);

/// Pearson coefficient; throws std::domain_error on zero variance.
double pearson_correlation(std::span<const double> y, std::span<const double> yhat);

MetricReport report(std::span<const double> y, std::span<const double> yhat);

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    bool exact = false;
};

/// Mid-ranks (1-based) of `values`, ties sharing their average rank.
std::vector<double> midranks(std::span<const double> values);

/// Two-sided Wilcoxon rank-sum / Mann-Whitney test. The statistic is U for
/// sample `a`. Exact enumeration when |a| + |b| <= 12, otherwise the normal
/// approximation with tie and continuity corrections.
TestResult wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b);

/// Two-sided Wilcoxon signed-rank test on paired samples. The statistic is
/// min(W+, W-); zero differences are dropped. Exact for n <= 25 without
/// tied magnitudes, normal approximation otherwise.
TestResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

struct RunSummary {
    std::size_t count = 0;
    double mean = 0.0;
    double median = 0.0;
    double std = 0.0;  ///< sample standard deviation, 0 for a single sample
};

RunSummary summarize_runs(std::span<const double> samples);

}  // namespace cropcal::metrics
