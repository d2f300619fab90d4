#include "cropcal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <string>
#include <stdexcept>

namespace cropcal::metrics {

namespace {

void check_pair(std::span<const double> y, std::span<const double> yhat, const char* what) {
    if (y.size() != yhat.size())
        throw std::invalid_argument(std::string(what) + ": series lengths differ");
    if (y.empty()) throw std::invalid_argument(std::string(what) + ": empty series");
}

double two_sided_normal(double z) { return std::min(1.0, std::erfc(std::abs(z) / std::sqrt(2.0))); }

}  // namespace

double mse(std::span<const double> y, std::span<const double> yhat) {
    check_pair(y, yhat, "mse");
    double sum = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) sum += (y[i] - yhat[i]) * (y[i] - yhat[i]);
    return sum / static_cast<double>(y.size());
}

double mae(std::span<const double> y, std::span<const double> yhat) {
    check_pair(y, yhat, "mae");
    double sum = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) sum += std::abs(y[i] - yhat[i]);
    return sum / static_cast<double>(y.size());
}

double rmse(std::span<const double> y, std::span<const double> yhat) { return std::sqrt(mse(y, yhat)); }

double pearson_correlation(std::span<const double> y, std::span<const double> yhat) {
    check_pair(y, yhat, "pearson_correlation");
    if (y.size() < 2) throw std::invalid_argument("pearson_correlation: need at least 2 points");
    const double n = static_cast<double>(y.size());
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    const double mh = std::accumulate(yhat.begin(), yhat.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        sxy += (y[i] - my) * (yhat[i] - mh);
        sxx += (y[i] - my) * (y[i] - my);
        syy += (yhat[i] - mh) * (yhat[i] - mh);
    }
    if (sxx == 0.0 || syy == 0.0)
        throw std::domain_error("pearson_correlation: undefined for a constant series");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

MetricReport report(std::span<const double> y, std::span<const double> yhat) {
    MetricReport r;
    r.mse = mse(y, yhat);
    r.mae = mae(y, yhat);
    r.rmse = std::sqrt(r.mse);
    try {
        r.correlation = pearson_correlation(y, yhat);
    } catch (const std::domain_error&) {
        r.correlation = std::numeric_limits<double>::quiet_NaN();
    }
    return r;
}

std::vector<double> midranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

TestResult wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("wilcoxon_rank_sum: empty sample");
    const std::size_t n = a.size(), m = b.size(), N = n + m;
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    const auto ranks = midranks(pooled);

    const double shift = static_cast<double>(n) * static_cast<double>(n + 1) / 2.0;
    const double rank_sum = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(n), 0.0);
    const double U = rank_sum - shift;
    const double center = static_cast<double>(n) * static_cast<double>(m) / 2.0;

    TestResult result;
    result.statistic = U;
    if (N <= 12) {
        // Every way of choosing which n pooled positions belong to sample a.
        const double observed = std::abs(U - center);
        std::size_t extreme = 0, total = 0;
        for (unsigned mask = 0; mask < (1u << N); ++mask) {
            if (static_cast<std::size_t>(__builtin_popcount(mask)) != n) continue;
            double sum = 0.0;
            for (std::size_t k = 0; k < N; ++k)
                if (mask & (1u << k)) sum += ranks[k];
            ++total;
            if (std::abs(sum - shift - center) >= observed - 1e-9) ++extreme;
        }
        result.p_value = static_cast<double>(extreme) / static_cast<double>(total);
        result.exact = true;
        return result;
    }

    // Tie-corrected variance.
    std::vector<double> sorted = pooled;
    std::sort(sorted.begin(), sorted.end());
    double tie_term = 0.0;
    for (std::size_t i = 0; i < N;) {
        std::size_t j = i;
        while (j < N && sorted[j] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        i = j;
    }
    const double Nd = static_cast<double>(N);
    const double variance = static_cast<double>(n) * static_cast<double>(m) / 12.0 *
                            ((Nd + 1.0) - tie_term / (Nd * (Nd - 1.0)));
    if (variance <= 0.0) {
        result.p_value = 1.0;
        return result;
    }
    const double deviation = std::max(0.0, std::abs(U - center) - 0.5);
    result.p_value = two_sided_normal(deviation / std::sqrt(variance));
    return result;
}

TestResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("wilcoxon_signed_rank: samples must be paired");
    if (a.empty()) throw std::invalid_argument("wilcoxon_signed_rank: empty sample");
    std::vector<double> diffs;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) diffs.push_back(a[i] - b[i]);
    TestResult result;
    if (diffs.empty()) return result;  // no evidence either way

    std::vector<double> magnitudes(diffs.size());
    std::transform(diffs.begin(), diffs.end(), magnitudes.begin(), [](double d) { return std::abs(d); });
    const auto ranks = midranks(magnitudes);
    double w_plus = 0.0, w_minus = 0.0;
    for (std::size_t i = 0; i < diffs.size(); ++i) (diffs[i] > 0 ? w_plus : w_minus) += ranks[i];
    result.statistic = std::min(w_plus, w_minus);

    const std::size_t n = diffs.size();
    const bool ties = std::any_of(ranks.begin(), ranks.end(),
                                  [](double r) { return r != std::floor(r); }) ||
                      std::set<double>(ranks.begin(), ranks.end()).size() != n;
    if (n <= 25 && !ties) {
        // Distribution of W+ over all 2^n sign patterns, by dynamic programming.
        const std::size_t max_sum = n * (n + 1) / 2;
        std::vector<double> counts(max_sum + 1, 0.0);
        counts[0] = 1.0;
        for (std::size_t r = 1; r <= n; ++r)
            for (std::size_t s = max_sum; s >= r; --s) counts[s] += counts[s - r];
        const auto stat = static_cast<std::size_t>(result.statistic);
        double tail = 0.0;
        for (std::size_t s = 0; s <= stat; ++s) tail += counts[s];
        result.p_value = std::min(1.0, 2.0 * tail / std::ldexp(1.0, static_cast<int>(n)));
        result.exact = true;
        return result;
    }

    const double nd = static_cast<double>(n);
    double tie_term = 0.0;
    std::vector<double> sorted = magnitudes;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && sorted[j] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        i = j;
    }
    const double mean = nd * (nd + 1.0) / 4.0;
    const double variance = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0 - tie_term / 48.0;
    result.p_value = variance > 0.0 ? two_sided_normal((result.statistic - mean) / std::sqrt(variance)) : 1.0;
    return result;
}

RunSummary summarize_runs(std::span<const double> samples) {
    if (samples.empty()) throw std::invalid_argument("summarize_runs: no samples");
    RunSummary s;
    s.count = samples.size();
    const double n = static_cast<double>(samples.size());
    s.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t mid = sorted.size() / 2;
    s.median = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
    if (samples.size() > 1) {
        double ss = 0.0;
        for (double x : samples) ss += (x - s.mean) * (x - s.mean);
        s.std = std::sqrt(ss / (n - 1.0));
    }
    return s;
}

}  // namespace cropcal::metrics
