#include "groupcf/single_cf.hpp"

#include <algorithm>
#include <cmath>

#include "groupcf/rng.hpp"

namespace groupcf {

void CfSearchConfig::validate() const {
    if (n_samples < 1) throw ConfigError("n_samples must be >= 1");
    if (!(stopping_threshold > 0.0 && stopping_threshold < 1.0)) {
        throw ConfigError("stopping_threshold must lie in (0,1)");
    }
    if (sparsity_param < 0.0 || sparsity_param > 1.0) {
        throw ConfigError("sparsity_param must lie in [0,1]");
    }
}

Instance apply_changes(const Instance& query, const ChangeMap& changes) {
    Instance out = query;
    for (const auto& [feature, change] : changes) {
        out.values.at(feature) = change.new_value;
    }
    return out;
}

namespace {

double scaled_magnitude(std::size_t feature, const FeatureChange& change,
                        const FeatureSchema& schema, const FeatureStats& stats) {
    if (schema.feature(feature).kind == FeatureKind::Continuous) {
        return std::abs(change.new_value - change.old_value) / stats.scale(feature);
    }
    return 1.0;
}

// Valid means both: the target probability reaches the stopping threshold and
// the argmax actually lands on the target class (ties break to class 0, so a
// bare threshold test is not enough at p = 0.5).
bool flips_to_target(const Model& model, const Instance& x, int target, double threshold) {
    const auto proba = model.predict_proba(x);
    if (proba[target] < threshold) return false;
    return (proba[1] > proba[0] ? 1 : 0) == target;
}

}  // namespace

Counterfactual generate_single_cf(const Model& model, const Instance& query, int target,
                                  const FeatureSchema& schema, const FeatureStats& stats,
                                  const CfSearchConfig& config) {
    config.validate();
    std::vector<std::size_t> actionable = schema.actionable_features();
    if (actionable.empty()) throw NoActionableFeaturesError("schema has no actionable features");

    const bool exact = config.exact_features_changed > 0;
    if (exact) {
        // Drop features whose training range cannot move off the query value,
        // so every candidate really changes the requested count.
        std::erase_if(actionable, [&](std::size_t f) {
            return schema.feature(f).kind == FeatureKind::Continuous &&
                   stats.features[f].continuous.min >= stats.features[f].continuous.max;
        });
        if (actionable.empty()) {
            throw NoActionableFeaturesError("all actionable features are degenerate");
        }
    }
    const std::size_t max_changed =
        exact ? std::min(config.exact_features_changed, actionable.size())
        : config.max_features_changed == 0
            ? actionable.size()
            : std::min(config.max_features_changed, actionable.size());

    Rng rng(config.seed);
    std::vector<std::size_t> pick_buffer = actionable;

    bool have_valid = false;
    double best_proximity = 0.0;
    ChangeMap best_changes;

    bool have_attempt = false;
    double best_p = -1.0;
    ChangeMap best_attempt;

    for (std::size_t draw = 0; draw < config.n_samples; ++draw) {
        const std::size_t k = exact ? max_changed : 1 + rng.index(max_changed);
        // partial Fisher-Yates: the first k entries become the feature subset
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = i + rng.index(pick_buffer.size() - i);
            std::swap(pick_buffer[i], pick_buffer[j]);
        }

        ChangeMap changes;
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t f = pick_buffer[i];
            const FeatureSpec& spec = schema.feature(f);
            const double old_value = query.values[f];
            double new_value;
            if (spec.kind == FeatureKind::Continuous) {
                const auto& c = stats.features[f].continuous;
                new_value = rng.uniform(c.min, c.max);
                if (new_value == old_value) continue;  // degenerate range or exact redraw
            } else {
                const std::size_t n_cats = spec.categories.size();
                const auto cur = static_cast<std::size_t>(old_value);
                std::size_t alt = rng.index(n_cats - 1);
                if (alt >= cur) ++alt;
                new_value = static_cast<double>(alt);
            }
            changes[f] = {old_value, new_value};
        }
        if (changes.empty() || (exact && changes.size() != max_changed)) continue;

        const Instance candidate = apply_changes(query, changes);
        const double p = model.predict_proba(candidate)[target];
        if (p >= config.stopping_threshold && flips_to_target(model, candidate, target,
                                                              config.stopping_threshold)) {
            const double prox = proximity(changes, stats, schema).total;
            if (!have_valid || prox < best_proximity) {
                have_valid = true;
                best_proximity = prox;
                best_changes = changes;
            }
        } else if (!have_valid && p > best_p) {
            have_attempt = true;
            best_p = p;
            best_attempt = changes;
        }
    }

    if (!have_valid && !have_attempt) {
        throw NoActionableFeaturesError(
            "no candidate produced an effective change; actionable features are degenerate");
    }

    Counterfactual cf;
    cf.query = query;
    cf.target_class = target;
    cf.valid = have_valid;
    cf.changes = have_valid ? best_changes : best_attempt;
    cf.proximity = proximity(cf.changes, stats, schema).total;
    cf.sparsity = cf.changes.size();
    if (have_valid && !exact) cf = posthoc_sparsify(model, query, cf, schema, stats, config);
    return cf;
}

Counterfactual posthoc_sparsify(const Model& model, const Instance& query,
                                const Counterfactual& candidate, const FeatureSchema& schema,
                                const FeatureStats& stats, const CfSearchConfig& config) {
    if (!candidate.valid) {
        throw InvalidCounterfactualError("posthoc_sparsify requires a valid counterfactual");
    }

    std::vector<double> scaled;
    for (const auto& [feature, change] : candidate.changes) {
        scaled.push_back(scaled_magnitude(feature, change, schema, stats));
    }
    const double cutoff = quantile_of(scaled, config.sparsity_param);

    // Smallest scaled change first, ties by feature index (the map iterates
    // in feature order, stable_sort preserves it).
    std::vector<std::pair<double, std::size_t>> order;
    for (const auto& [feature, change] : candidate.changes) {
        order.emplace_back(scaled_magnitude(feature, change, schema, stats), feature);
    }
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    ChangeMap kept = candidate.changes;
    Instance current = apply_changes(query, candidate.changes);
    for (const auto& [magnitude, feature] : order) {
        const bool continuous = schema.feature(feature).kind == FeatureKind::Continuous;
        if (continuous && magnitude > cutoff) continue;  // exempt from reversion
        Instance trial = current;
        trial.values[feature] = query.values[feature];
        if (flips_to_target(model, trial, candidate.target_class, config.stopping_threshold)) {
            current = trial;
            kept.erase(feature);
        }
    }

    Counterfactual out = candidate;
    out.changes = std::move(kept);
    out.proximity = proximity(out.changes, stats, schema).total;
    out.sparsity = out.changes.size();
    return out;
}

}  // namespace groupcf
