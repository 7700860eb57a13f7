#include <algorithm>
#include <cmath>
#include <vector>

#include "crossim/errors.hpp"
#include "crossim/rng.hpp"
#include "crossim/stats.hpp"
#include "doctest.h"

using namespace crossim;

namespace {

// Wasserstein oracle in the quantile domain: integral of |Fa^-1 - Fb^-1| over
// q in [0,1], walked over the merged i/na, j/nb breakpoints. Different
// formulation from the production CDF sweep, same exact value for step CDFs.
double oracle_wasserstein(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const std::size_t na = a.size(), nb = b.size();
    std::size_t ia = 0, ib = 0;
    double q = 0.0, total = 0.0;
    while (ia < na && ib < nb) {
        const double qa = static_cast<double>(ia + 1) / static_cast<double>(na);
        const double qb = static_cast<double>(ib + 1) / static_cast<double>(nb);
        const double q_next = std::min(qa, qb);
        total += (q_next - q) * std::abs(a[ia] - b[ib]);
        // Compare as integers so exact ties advance both quantile pointers.
        const bool step_a = (ia + 1) * nb <= (ib + 1) * na;
        const bool step_b = (ib + 1) * na <= (ia + 1) * nb;
        if (step_a) ++ia;
        if (step_b) ++ib;
        q = q_next;
    }
    return total;
}

// Full 2^n enumeration of the signed-rank distribution over midranks.
double oracle_wilcoxon(const PairedSeries& paired) {
    std::vector<double> d;
    for (std::size_t i = 0; i < paired.x.size(); ++i) {
        const double v = paired.y[i] - paired.x[i];
        if (v != 0.0) d.push_back(v);
    }
    const std::size_t n = d.size();
    if (n < 6) return 1.0;
    REQUIRE(n <= 20);  // enumeration guard

    std::vector<double> abs_d(n);
    for (std::size_t i = 0; i < n; ++i) abs_d[i] = std::abs(d[i]);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return abs_d[i] < abs_d[j]; });
    // Midranks doubled to stay integral under ties.
    std::vector<long long> rank2(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && abs_d[order[j]] == abs_d[order[i]]) ++j;
        for (std::size_t k = i; k < j; ++k) rank2[order[k]] = static_cast<long long>(i + 1 + j);
        i = j;
    }

    long long observed = 0;
    for (std::size_t k = 0; k < n; ++k)
        if (d[k] > 0.0) observed += rank2[k];

    long long cnt_le = 0, cnt_ge = 0;
    const std::uint64_t patterns = 1ULL << n;
    for (std::uint64_t mask = 0; mask < patterns; ++mask) {
        long long w = 0;
        for (std::size_t k = 0; k < n; ++k)
            if (mask & (1ULL << k)) w += rank2[k];
        if (w <= observed) ++cnt_le;
        if (w >= observed) ++cnt_ge;
    }
    const double denom = std::ldexp(1.0, static_cast<int>(n));
    return std::min(1.0, 2.0 * static_cast<double>(std::min(cnt_le, cnt_ge)) / denom);
}

// Threshold-by-threshold PR sweep, each point recomputed from scratch.
double oracle_auc_prc(const std::vector<double>& scores, const std::vector<bool>& labels) {
    std::vector<double> thresholds(scores);
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    long long total_pos = 0;
    for (bool l : labels) total_pos += l ? 1 : 0;

    double area = 0.0, prev_recall = 0.0;
    for (double t : thresholds) {
        long long tp = 0, fp = 0;
        for (std::size_t k = 0; k < scores.size(); ++k) {
            if (scores[k] >= t) (labels[k] ? tp : fp) += 1;
        }
        const double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return area;
}

PairedSeries series(std::vector<double> x, std::vector<double> y) {
    PairedSeries s;
    s.x = std::move(x);
    s.y = std::move(y);
    return s;
}

}  // namespace

TEST_CASE("density: all samples in one bin") {
    const Density d = make_density({0.31, 0.32, 0.33}, 10, 0.0, 1.0);
    CHECK(d.probabilities[3] == 1.0);
    double sum = 0.0;
    for (double p : d.probabilities) sum += p;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("density: uniform samples spread evenly") {
    Rng rng(5);
    std::vector<double> samples(100000);
    for (double& v : samples) v = rng.uniform();
    const Density d = make_density(samples, 25, 0.0, 1.0);
    for (double p : d.probabilities)
        CHECK(p == doctest::Approx(0.04).epsilon(0.25));
}

TEST_CASE("density: edges strictly increase and out-of-range samples clamp") {
    const Density d = make_density({-5.0, 0.5, 27.0}, 4, 0.0, 1.0);
    for (std::size_t i = 1; i < d.bin_edges.size(); ++i)
        CHECK(d.bin_edges[i] > d.bin_edges[i - 1]);
    CHECK(d.probabilities.front() == doctest::Approx(1.0 / 3.0));
    CHECK(d.probabilities.back() == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("density: degenerate requests are rejected") {
    CHECK_THROWS_AS(make_density({1.0}, 0, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(make_density({}, 10, 0.0, 1.0), EmptyDataset);
    CHECK_THROWS_AS(make_density({1.0}, 10, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("wasserstein: identical sample lists") {
    const std::vector<double> a{0.3, 1.2, -0.5, 0.3};
    CHECK(wasserstein_1d(a, a) == 0.0);
}

TEST_CASE("wasserstein: unit transport between point masses") {
    CHECK(wasserstein_1d({0.0}, {1.0}) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(wasserstein_1d({0.0, 1.0}, {1.0, 2.0}) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("wasserstein: matches the quantile-domain oracle") {
    Rng rng(8080);
    for (int it = 0; it < 100; ++it) {
        const std::size_t na = 1 + rng.uniform_int(40);
        const std::size_t nb = 1 + rng.uniform_int(40);
        std::vector<double> a(na), b(nb);
        for (double& v : a) v = rng.uniform(-3.0, 3.0);
        for (double& v : b) v = rng.uniform(-2.0, 4.0);
        if (it % 4 == 0) {  // force ties and duplicates
            for (double& v : a) v = std::round(v * 4.0) / 4.0;
            for (double& v : b) v = std::round(v * 4.0) / 4.0;
        }
        const double mine = wasserstein_1d(a, b);
        const double oracle = oracle_wasserstein(a, b);
        CHECK(std::abs(mine - oracle) < 1e-6);
        CHECK(wasserstein_1d(b, a) == mine);  // symmetry
    }
}

TEST_CASE("wasserstein: translation moves mass by the shift") {
    Rng rng(17);
    std::vector<double> a(37);
    for (double& v : a) v = rng.uniform(-1.0, 1.0);
    for (double c : {0.25, -1.5, 3.0}) {
        std::vector<double> shifted(a);
        for (double& v : shifted) v += c;
        CHECK(wasserstein_1d(a, shifted) == doctest::Approx(std::abs(c)).epsilon(1e-12));
    }
}

TEST_CASE("wasserstein: triangle inequality on random triples") {
    Rng rng(23);
    for (int it = 0; it < 50; ++it) {
        auto draw = [&](std::size_t n) {
            std::vector<double> v(n);
            for (double& x : v) x = rng.uniform(-2.0, 2.0);
            return v;
        };
        const auto a = draw(1 + rng.uniform_int(20));
        const auto b = draw(1 + rng.uniform_int(20));
        const auto c = draw(1 + rng.uniform_int(20));
        CHECK(wasserstein_1d(a, c) <= wasserstein_1d(a, b) + wasserstein_1d(b, c) + 1e-12);
    }
}

TEST_CASE("wasserstein: empty input is rejected") {
    CHECK_THROWS_AS(wasserstein_1d({}, {1.0}), EmptyDataset);
}

TEST_CASE("wilcoxon: identical series gives p = 1") {
    const std::vector<double> v{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7};
    CHECK(wilcoxon_signed_rank(series(v, v)) == 1.0);
}

TEST_CASE("wilcoxon: below six non-zero differences gives p = 1") {
    CHECK(wilcoxon_signed_rank(series({1, 2, 3, 4, 5}, {2, 3, 4, 5, 6})) == 1.0);
    // Zeros are dropped before the count.
    CHECK(wilcoxon_signed_rank(series({1, 2, 3, 4, 5, 6, 7}, {2, 3, 4, 5, 6, 6, 7})) == 1.0);
}

TEST_CASE("wilcoxon: six one-sided differences hit the exact tail") {
    const double p =
        wilcoxon_signed_rank(series({0, 0, 0, 0, 0, 0}, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6}));
    CHECK(p == 2.0 / 64.0);
}

TEST_CASE("wilcoxon: exact branch matches full enumeration") {
    Rng rng(90210);
    for (int it = 0; it < 200; ++it) {
        const std::size_t n = 6 + rng.uniform_int(7);  // 6..12
        std::vector<double> x(n, 0.0), y(n);
        for (double& v : y) v = rng.uniform(-1.0, 1.0);
        if (it % 3 == 0) {  // quantize to force tied magnitudes
            for (double& v : y) v = std::round(v * 5.0) / 5.0;
        }
        const PairedSeries s = series(x, y);
        CHECK(wilcoxon_signed_rank(s) == oracle_wilcoxon(s));
    }
}

TEST_CASE("wilcoxon: mirrored differences give the same p") {
    Rng rng(31);
    for (int it = 0; it < 20; ++it) {
        std::vector<double> x(10, 0.0), y(10), neg(10);
        for (std::size_t i = 0; i < 10; ++i) {
            y[i] = rng.uniform(-1.0, 1.0);
            neg[i] = -y[i];
        }
        CHECK(wilcoxon_signed_rank(series(x, y)) ==
              doctest::Approx(wilcoxon_signed_rank(series(x, neg))).epsilon(1e-12));
    }
}

TEST_CASE("wilcoxon: normal branch behaves sanely") {
    Rng rng(47);
    std::vector<double> x(40), close(40), far(40);
    for (std::size_t i = 0; i < 40; ++i) {
        x[i] = rng.uniform(0.0, 1.0);
        close[i] = x[i] + rng.uniform(-0.1, 0.11);
        far[i] = x[i] + 0.5 + rng.uniform(0.0, 0.1);
    }
    const double p_close = wilcoxon_signed_rank(series(x, close));
    const double p_far = wilcoxon_signed_rank(series(x, far));
    CHECK(p_close > 0.0);
    CHECK(p_close <= 1.0);
    CHECK(p_far < 1e-6);
    CHECK(p_far < p_close);
}

TEST_CASE("pearson: perfect correlations") {
    const std::vector<double> x{1, 2, 3, 4, 5};
    std::vector<double> y(x);
    PearsonResult res = pearson(series(x, y));
    CHECK(res.r == 1.0);
    CHECK(res.p == 0.0);

    for (double& v : y) v = -v;
    res = pearson(series(x, y));
    CHECK(res.r == -1.0);
    CHECK(res.p == 0.0);
}

TEST_CASE("pearson: example series against the direct formula and scipy") {
    const PairedSeries s = series({1, 2, 3, 4, 5}, {2, 1, 4, 3, 6});

    // Direct covariance/sigma evaluation.
    double mx = 3.0, my = 3.2, sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
        sxy += (s.x[i] - mx) * (s.y[i] - my);
        sxx += (s.x[i] - mx) * (s.x[i] - mx);
        syy += (s.y[i] - my) * (s.y[i] - my);
    }
    const PearsonResult res = pearson(s);
    CHECK(res.r == doctest::Approx(sxy / std::sqrt(sxx * syy)).epsilon(1e-14));

    // Reference values computed with scipy.stats.pearsonr.
    CHECK(res.r == doctest::Approx(0.82199493652678646).epsilon(1e-12));
    CHECK(res.p == doctest::Approx(0.087706647008065533).epsilon(1e-10));
}

TEST_CASE("pearson: more scipy reference points") {
    const PearsonResult a = pearson(series({0.5, 1.25, -0.75, 2.0, 3.5, -1.0, 0.0, 2.75, 1.5, -0.25},
                                           {0.9, 1.1, -0.2, 2.4, 2.9, -1.3, 0.4, 2.2, 1.9, 0.1}));
    CHECK(a.r == doctest::Approx(0.95970923591774504).epsilon(1e-12));
    CHECK(a.p == doctest::Approx(1.0981102457856029e-05).epsilon(1e-8));

    const PearsonResult b = pearson(series({3, 1, 4, 1, 5, 9, 2, 6}, {2, 7, 1, 8, 2, 8, 1, 8}));
    CHECK(b.r == doctest::Approx(0.20965531907301216).epsilon(1e-12));
    CHECK(b.p == doctest::Approx(0.61826371761628818).epsilon(1e-10));
}

TEST_CASE("pearson: invariant under positive affine maps") {
    Rng rng(14);
    std::vector<double> x(20), y(20);
    for (std::size_t i = 0; i < 20; ++i) {
        x[i] = rng.uniform(-2.0, 2.0);
        y[i] = 0.7 * x[i] + rng.uniform(-0.5, 0.5);
    }
    const PearsonResult base = pearson(series(x, y));

    std::vector<double> xs(x), ys(y);
    for (double& v : xs) v = 3.5 * v + 11.0;
    for (double& v : ys) v = 0.02 * v - 4.0;
    const PearsonResult mapped = pearson(series(xs, ys));
    CHECK(mapped.r == doctest::Approx(base.r).epsilon(1e-12));
    CHECK(mapped.p == doctest::Approx(base.p).epsilon(1e-9));
}

TEST_CASE("pearson: degenerate inputs are rejected") {
    CHECK_THROWS_AS(pearson(series({1, 1, 1, 1}, {1, 2, 3, 4})), DegenerateVariance);
    CHECK_THROWS_AS(pearson(series({1, 2}, {3, 4})), std::invalid_argument);
}

TEST_CASE("auc-prc: perfect separation scores 1") {
    CHECK(auc_prc({0.9, 0.8, 0.2, 0.1}, {true, true, false, false}) == 1.0);
}

TEST_CASE("auc-prc: interleaved example") {
    const double area = auc_prc({0.9, 0.8, 0.3, 0.2}, {true, false, true, false});
    // Thresholds 0.9 / 0.8 / 0.3 / 0.2 give PR points (0.5, 1), (0.5, 0.5),
    // (1, 2/3), (1, 0.5); step area = 0.5 * 1 + 0.5 * 2/3.
    CHECK(area == doctest::Approx(0.5 + 1.0 / 3.0).epsilon(1e-12));
    CHECK(area == oracle_auc_prc({0.9, 0.8, 0.3, 0.2}, {true, false, true, false}));
}

TEST_CASE("auc-prc: constant scores collapse to the prevalence") {
    CHECK(auc_prc({0.4, 0.4, 0.4, 0.4, 0.4}, {true, false, false, true, false}) ==
          doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("auc-prc: matches the exhaustive oracle") {
    Rng rng(321321);
    int done = 0;
    while (done < 100) {
        const std::size_t n = 2 + rng.uniform_int(49);
        std::vector<double> scores(n);
        std::vector<bool> labels(n);
        bool has_pos = false, has_neg = false;
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = std::round(rng.uniform() * 20.0) / 20.0;  // tied scores likely
            labels[i] = rng.uniform() < 0.4;
            (labels[i] ? has_pos : has_neg) = true;
        }
        if (!has_pos || !has_neg) continue;
        CHECK(auc_prc(scores, labels) == oracle_auc_prc(scores, labels));
        ++done;
    }
}

TEST_CASE("auc-prc: ranking-preserving transforms keep the area") {
    const std::vector<double> scores{0.1, 0.5, 0.3, 0.9, 0.7, 0.5};
    const std::vector<bool> labels{false, true, false, true, true, false};
    std::vector<double> mapped(scores);
    for (double& v : mapped) v = 100.0 * v + 7.0;
    CHECK(auc_prc(scores, labels) == auc_prc(mapped, labels));
}

TEST_CASE("auc-prc: one-class inputs are rejected") {
    CHECK_THROWS_AS(auc_prc({0.1, 0.2}, {true, true}), NoNegatives);
    CHECK_THROWS_AS(auc_prc({0.1, 0.2}, {false, false}), NoPositives);
}

TEST_CASE("incomplete beta: scipy reference values") {
    CHECK(incomplete_beta(0.5, 0.5, 0.25) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(incomplete_beta(2.0, 3.0, 0.4) == doctest::Approx(0.5248).epsilon(1e-12));
    CHECK(incomplete_beta(5.0, 1.5, 0.9) == doctest::Approx(0.7761721343162159).epsilon(1e-12));
    CHECK(incomplete_beta(30.5, 30.5, 0.5) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(incomplete_beta(0.5, 4.0, 0.01) == doctest::Approx(0.21657559374999993).epsilon(1e-12));
    CHECK(incomplete_beta(10.0, 0.5, 0.999) == doctest::Approx(0.88889670912486041).epsilon(1e-12));
}

TEST_CASE("incomplete beta: reflection identity") {
    Rng rng(62);
    for (int it = 0; it < 50; ++it) {
        const double a = rng.uniform(0.2, 20.0);
        const double b = rng.uniform(0.2, 20.0);
        const double x = rng.uniform(0.01, 0.99);
        CHECK(incomplete_beta(a, b, x) ==
              doctest::Approx(1.0 - incomplete_beta(b, a, 1.0 - x)).epsilon(1e-10));
    }
}

TEST_CASE("seed derivation: nearby bases and labels stay independent") {
    // Adjacent seeds must not collide (a collapsed low byte once did).
    CHECK(derive_seed(321, "sensor") != derive_seed(322, "sensor"));
    CHECK(derive_seed(0, "a") != derive_seed(1, "a"));
    CHECK(derive_seed(5, "ab", "c") != derive_seed(5, "a", "bc"));
    CHECK(derive_seed(5, "x") != derive_seed(5, "y"));

    std::vector<std::uint64_t> seen;
    for (std::uint64_t b = 0; b < 4096; ++b)
        seen.push_back(derive_seed(b, "episode"));
    std::sort(seen.begin(), seen.end());
    CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
}
