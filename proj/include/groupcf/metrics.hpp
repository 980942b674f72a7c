#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "groupcf/tabular.hpp"

namespace groupcf {

// A counterfactual's feature edit: old encoded value -> new encoded value.
struct FeatureChange {
    double old_value = 0.0;
    double new_value = 0.0;
    bool operator==(const FeatureChange&) const = default;
};

// Ordered by feature index so every iteration over a change set is deterministic.
using ChangeMap = std::map<std::size_t, FeatureChange>;

// MAD-scaled l1 for continuous changes plus a 0/1 indicator per changed
// categorical feature.
struct ProximityScore {
    double continuous_part = 0.0;
    double categorical_part = 0.0;
    double total = 0.0;
};

struct TTestResult {
    double t = 0.0;
    std::size_t df = 0;
    double p_two_tailed = 1.0;
};

ProximityScore proximity(const ChangeMap& changes, const FeatureStats& stats,
                         const FeatureSchema& schema);

std::size_t sparsity(const ChangeMap& changes);

TTestResult paired_t_test(const std::vector<double>& xs, const std::vector<double>& ys);

// Regularized incomplete beta function I_x(a, b); exposed for the statistics
// oracle tests.
double regularized_incomplete_beta(double a, double b, double x);

// Two-tailed tail probability of the t distribution.
double t_two_tailed_p(double t, std::size_t df);

// Count of foreign items interleaved within the positional span of
// `item_set` inside `ordering`: (last - first + 1) - |item_set|.
std::size_t gap_score(const std::vector<std::string>& ordering,
                      const std::vector<std::string>& item_set);

}  // namespace groupcf
