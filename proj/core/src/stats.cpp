#include "crossim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>

#include "crossim/errors.hpp"

namespace crossim {

Density make_density(const std::vector<double>& samples, int n_bins, double lo, double hi) {
    if (n_bins <= 0) throw std::invalid_argument("make_density: n_bins must be positive");
    if (!(hi > lo)) throw std::invalid_argument("make_density: empty range");
    if (samples.empty()) throw EmptyDataset("make_density: no samples");

    Density d;
    d.bin_edges.resize(static_cast<std::size_t>(n_bins) + 1);
    for (int i = 0; i <= n_bins; ++i) {
        d.bin_edges[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / n_bins;
    }
    d.probabilities.assign(static_cast<std::size_t>(n_bins), 0.0);
    for (double v : samples) {
        int bin = static_cast<int>(std::floor((v - lo) / (hi - lo) * n_bins));
        bin = std::min(n_bins - 1, std::max(0, bin));
        d.probabilities[static_cast<std::size_t>(bin)] += 1.0;
    }
    for (double& p : d.probabilities) p /= static_cast<double>(samples.size());
    return d;
}

double wasserstein_1d(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw EmptyDataset("wasserstein_1d: empty sample list");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());

    // Sweep the merged breakpoints; both CDFs are constant between them.
    std::size_t ia = 0, ib = 0;
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    double dist = 0.0;
    double prev = std::min(a.front(), b.front());
    while (ia < a.size() || ib < b.size()) {
        double next;
        if (ib == b.size() || (ia < a.size() && a[ia] <= b[ib])) {
            next = a[ia];
        } else {
            next = b[ib];
        }
        dist += std::abs(ia / na - ib / nb) * (next - prev);
        while (ia < a.size() && a[ia] == next) ++ia;
        while (ib < b.size() && b[ib] == next) ++ib;
        prev = next;
    }
    return dist;
}

namespace {

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

/// Midranks of |d| values, doubled so ties stay integral.
std::vector<long long> doubled_midranks(const std::vector<double>& abs_d) {
    const std::size_t n = abs_d.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return abs_d[i] < abs_d[j]; });
    std::vector<long long> r2(n, 0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && abs_d[order[j]] == abs_d[order[i]]) ++j;
        // ranks i+1 .. j (1-based); midrank = (i+1+j)/2, doubled = i+1+j
        const long long doubled = static_cast<long long>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) r2[order[k]] = doubled;
        i = j;
    }
    return r2;
}

}  // namespace

double wilcoxon_signed_rank(const PairedSeries& paired) {
    if (paired.x.size() != paired.y.size())
        throw std::invalid_argument("wilcoxon: length mismatch");

    std::vector<double> diffs;
    diffs.reserve(paired.x.size());
    for (std::size_t i = 0; i < paired.x.size(); ++i) {
        const double d = paired.y[i] - paired.x[i];
        if (d != 0.0) diffs.push_back(d);
    }
    const std::size_t n = diffs.size();
    if (n < 6) return 1.0;

    std::vector<double> abs_d(n);
    for (std::size_t i = 0; i < n; ++i) abs_d[i] = std::abs(diffs[i]);
    const std::vector<long long> r2 = doubled_midranks(abs_d);

    long long w2_plus = 0;  // doubled signed-rank statistic
    for (std::size_t i = 0; i < n; ++i) {
        if (diffs[i] > 0.0) w2_plus += r2[i];
    }

    if (n <= 25) {
        // Exact distribution of the doubled statistic over all 2^n sign choices.
        const long long total2 = static_cast<long long>(n) * (static_cast<long long>(n) + 1);
        std::vector<double> count(static_cast<std::size_t>(total2) + 1, 0.0);
        count[0] = 1.0;
        long long reach = 0;
        for (std::size_t i = 0; i < n; ++i) {
            reach += r2[i];
            for (long long s = reach; s >= r2[i]; --s) {
                count[static_cast<std::size_t>(s)] +=
                    count[static_cast<std::size_t>(s - r2[i])];
            }
        }
        const double denom = std::ldexp(1.0, static_cast<int>(n));  // 2^n
        double below = 0.0, above = 0.0;
        for (long long s = 0; s <= total2; ++s) {
            if (s <= w2_plus) below += count[static_cast<std::size_t>(s)];
            if (s >= w2_plus) above += count[static_cast<std::size_t>(s)];
        }
        return std::min(1.0, 2.0 * std::min(below, above) / denom);
    }

    // Normal approximation with continuity and tie corrections.
    const double nn = static_cast<double>(n);
    const double w_plus = 0.5 * static_cast<double>(w2_plus);
    const double mean = nn * (nn + 1.0) / 4.0;
    double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
    {
        std::vector<double> sorted(abs_d);
        std::sort(sorted.begin(), sorted.end());
        std::size_t i = 0;
        while (i < sorted.size()) {
            std::size_t j = i;
            while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
            const double t = static_cast<double>(j - i);
            var -= (t * t * t - t) / 48.0;
            i = j;
        }
    }
    if (var <= 0.0) return 1.0;
    const double cc = w_plus > mean ? -0.5 : (w_plus < mean ? 0.5 : 0.0);
    const double z = (w_plus - mean + cc) / std::sqrt(var);
    return std::min(1.0, 2.0 * normal_sf(std::abs(z)));
}

double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    // Continued fraction (modified Lentz); converges fast for x < (a+1)/(a+b+2).
    const bool swap = x > (a + 1.0) / (a + b + 2.0);
    if (swap) {
        std::swap(a, b);
        x = 1.0 - x;
    }
    const double ln_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double tiny = 1e-300;
    double c = 1.0;
    double d = 1.0 - (a + b) * x / (a + 1.0);
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double frac = d;
    for (int m = 1; m <= 300; ++m) {
        const double dm = static_cast<double>(m);
        double num = dm * (b - dm) * x / ((a + 2.0 * dm - 1.0) * (a + 2.0 * dm));
        d = 1.0 + num * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + num / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        frac *= d * c;
        num = -(a + dm) * (a + b + dm) * x / ((a + 2.0 * dm) * (a + 2.0 * dm + 1.0));
        d = 1.0 + num * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + num / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        frac *= delta;
        if (std::abs(delta - 1.0) < 1e-14) break;
    }
    const double result = std::exp(ln_front) * frac / a;
    return swap ? 1.0 - result : result;
}

PearsonResult pearson(const PairedSeries& paired) {
    const std::size_t n = paired.x.size();
    if (n != paired.y.size()) throw std::invalid_argument("pearson: length mismatch");
    if (n < 3) throw std::invalid_argument("pearson: need at least 3 pairs");

    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += paired.x[i];
        my += paired.y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);

    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = paired.x[i] - mx;
        const double dy = paired.y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw DegenerateVariance("pearson: zero variance");

    PearsonResult res;
    res.r = std::min(1.0, std::max(-1.0, sxy / std::sqrt(sxx * syy)));
    const double df = static_cast<double>(n) - 2.0;
    if (std::abs(res.r) >= 1.0) {
        res.p = 0.0;
    } else {
        const double t2 = res.r * res.r * df / (1.0 - res.r * res.r);
        res.p = incomplete_beta(0.5 * df, 0.5, df / (df + t2));
    }
    return res;
}

double auc_prc(const std::vector<double>& scores, const std::vector<bool>& labels) {
    if (scores.size() != labels.size()) throw std::invalid_argument("auc_prc: length mismatch");
    long long total_pos = 0;
    for (bool l : labels) total_pos += l ? 1 : 0;
    const long long total_neg = static_cast<long long>(labels.size()) - total_pos;
    if (total_pos == 0) throw NoPositives("auc_prc: no positive labels");
    if (total_neg == 0) throw NoNegatives("auc_prc: no negative labels");

    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return scores[i] > scores[j]; });

    double area = 0.0;
    double prev_recall = 0.0;
    long long tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double threshold = scores[order[i]];
        while (i < order.size() && scores[order[i]] == threshold) {
            if (labels[order[i]]) ++tp; else ++fp;
            ++i;
        }
        const double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return area;
}

}  // namespace crossim
