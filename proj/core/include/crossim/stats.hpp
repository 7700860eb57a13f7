#pragma once

#include <string>
#include <vector>

namespace crossim {

/// Histogram density: probabilities sum to 1 over strictly increasing edges.
struct Density {
    std::vector<double> bin_edges;      // n_bins + 1 edges
    std::vector<double> probabilities;  // n_bins masses
};

/// Aligned value pairs, e.g. per-cell map statistics or per-bin densities.
struct PairedSeries {
    std::vector<double> x;
    std::vector<double> y;
    std::string key;  // what the pairing is aligned on
};

struct PearsonResult {
    double r = 0.0;
    double p = 1.0;
};

/// Fixed-range histogram; samples outside [lo, hi] land in the end bins.
Density make_density(const std::vector<double>& samples, int n_bins, double lo, double hi);

/// Exact 1-D Wasserstein distance: integral of |CDF_a - CDF_b| from the two
/// piecewise-constant empirical CDFs.
double wasserstein_1d(std::vector<double> a, std::vector<double> b);

/// Two-sided Wilcoxon signed-rank p-value. Zero differences are dropped;
/// fewer than 6 non-zero differences returns 1.0 by convention. Exact
/// distribution (ties via midranks) for n <= 25, normal approximation with
/// continuity and tie correction above.
double wilcoxon_signed_rank(const PairedSeries& paired);

/// Product-moment correlation with the two-sided t-distribution p-value
/// (n - 2 degrees of freedom).
PearsonResult pearson(const PairedSeries& paired);

/// Area under the precision-recall curve via step-wise summation over all
/// distinct score thresholds, descending, ties grouped.
double auc_prc(const std::vector<double>& scores, const std::vector<bool>& labels);

/// Regularized incomplete beta I_x(a, b); exposed for the test oracles.
double incomplete_beta(double a, double b, double x);

}  // namespace crossim
