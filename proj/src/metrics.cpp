#include "groupcf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace groupcf {

ProximityScore proximity(const ChangeMap& changes, const FeatureStats& stats,
                         const FeatureSchema& schema) {
    ProximityScore score;
    for (const auto& [feature, change] : changes) {
        if (feature >= schema.feature_count()) {
            throw SchemaMismatchError("change references feature index " + std::to_string(feature) +
                                      " beyond schema size " +
                                      std::to_string(schema.feature_count()));
        }
        if (schema.feature(feature).kind == FeatureKind::Continuous) {
            score.continuous_part +=
                std::abs(change.new_value - change.old_value) / stats.scale(feature);
        } else {
            if (change.new_value != change.old_value) score.categorical_part += 1.0;
        }
    }
    score.total = score.continuous_part + score.categorical_part;
    return score;
}

std::size_t sparsity(const ChangeMap& changes) { return changes.size(); }

namespace {

// Continued-fraction evaluation of the incomplete beta (modified Lentz).
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kFpMin = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log(1.0 - x);
    const double front = std::exp(ln_front);
    // Use the symmetry I_x(a,b) = 1 - I_{1-x}(b,a) where the continued
    // fraction converges fastest.
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * betacf(a, b, x) / a;
    }
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double t_two_tailed_p(double t, std::size_t df) {
    const double nu = static_cast<double>(df);
    const double x = nu / (nu + t * t);
    return regularized_incomplete_beta(nu / 2.0, 0.5, x);
}

TTestResult paired_t_test(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) {
        throw LengthMismatchError("paired t-test needs equal-length vectors (" +
                                  std::to_string(xs.size()) + " vs " + std::to_string(ys.size()) +
                                  ")");
    }
    const std::size_t n = xs.size();
    if (n < 2) throw LengthMismatchError("paired t-test needs at least 2 pairs");

    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += xs[i] - ys[i];
    mean /= static_cast<double>(n);

    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = xs[i] - ys[i] - mean;
        ss += d * d;
    }
    const double var = ss / static_cast<double>(n - 1);  // sample variance
    if (var <= 0.0) throw ZeroVarianceError("paired differences have zero variance");

    TTestResult res;
    res.df = n - 1;
    res.t = mean / std::sqrt(var / static_cast<double>(n));
    res.p_two_tailed = t_two_tailed_p(res.t, res.df);
    return res;
}

std::size_t gap_score(const std::vector<std::string>& ordering,
                      const std::vector<std::string>& item_set) {
    if (item_set.empty()) throw MissingItemError("gap score over an empty item set");
    std::size_t first = std::numeric_limits<std::size_t>::max();
    std::size_t last = 0;
    for (const std::string& id : item_set) {
        std::size_t hits = 0;
        for (std::size_t pos = 0; pos < ordering.size(); ++pos) {
            if (ordering[pos] == id) {
                ++hits;
                first = std::min(first, pos);
                last = std::max(last, pos);
            }
        }
        if (hits != 1) {
            throw MissingItemError("item '" + id + "' occurs " + std::to_string(hits) +
                                   " times in the ordering; expected exactly once");
        }
    }
    return (last - first + 1) - item_set.size();
}

}  // namespace groupcf
