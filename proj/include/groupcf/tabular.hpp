#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "groupcf/errors.hpp"

namespace groupcf {

enum class FeatureKind { Continuous, Categorical };

struct FeatureSpec {
    std::string name;
    FeatureKind kind = FeatureKind::Continuous;
    std::vector<std::string> categories;  // categorical only, order defines the ordinal encoding
    bool actionable = true;
};

// Ordered feature list plus the two class labels. Immutable after construction.
class FeatureSchema {
public:
    FeatureSchema(std::vector<FeatureSpec> features, std::pair<std::string, std::string> class_names);

    static FeatureSchema from_json_file(const std::string& path);
    static FeatureSchema from_json_text(const std::string& text);
    std::string to_json_text() const;

    std::size_t feature_count() const { return features_.size(); }
    const FeatureSpec& feature(std::size_t i) const { return features_[i]; }
    const std::vector<FeatureSpec>& features() const { return features_; }

    std::optional<std::size_t> feature_index(const std::string& name) const;

    const std::string& class_name(int cls) const { return cls == 0 ? class_names_.first : class_names_.second; }
    std::optional<int> class_index(const std::string& label) const;

    // Ordinal index of `value` in the feature's category list.
    std::optional<std::size_t> category_index(std::size_t feature, const std::string& value) const;
    const std::string& category_name(std::size_t feature, std::size_t index) const;

    std::vector<std::size_t> actionable_features() const;

private:
    std::vector<FeatureSpec> features_;
    std::pair<std::string, std::string> class_names_;
};

// Feature-value vector aligned to schema order. Continuous features hold the
// raw number, categorical features hold the ordinal category index.
struct Instance {
    std::vector<double> values;
    bool operator==(const Instance&) const = default;
};

struct Dataset {
    FeatureSchema schema;
    std::vector<Instance> instances;
    std::vector<int> labels;  // class index, aligned with instances
    std::string source;
    std::string split_tag;

    std::size_t size() const { return instances.size(); }
};

// Per-feature statistics computed from a training split.
struct FeatureStats {
    struct Continuous {
        double median = 0.0;
        double mad = 0.0;
        double min = 0.0;
        double max = 0.0;
        std::vector<double> bin_edges;  // strictly increasing quantile edges
        bool degenerate = false;        // zero spread (MAD == 0)
    };
    struct Categorical {
        std::vector<std::size_t> counts;  // per category index
    };
    struct PerFeature {
        FeatureKind kind = FeatureKind::Continuous;
        Continuous continuous;
        Categorical categorical;
    };

    std::vector<PerFeature> features;
    std::size_t bins = 10;

    // MAD with the degenerate-spread substitution (MAD := 1) applied.
    double scale(std::size_t feature) const;
    // Quantile-bin index of a continuous value; bins are (-inf, e1], (e1, e2], ...
    std::size_t bin_index(std::size_t feature, double value) const;
};

double median_of(std::vector<double> values);
double mad_of(const std::vector<double>& values);
// Type-7 (linear interpolation) quantile, the convention used for bin edges.
double quantile_of(std::vector<double> values, double q);

Dataset load_dataset(const std::string& csv_path, const FeatureSchema& schema);
Dataset dataset_from_csv_text(const std::string& text, const FeatureSchema& schema, const std::string& source);
void write_dataset_csv(const Dataset& dataset, const std::string& path);

std::pair<Dataset, Dataset> split(const Dataset& dataset, double test_fraction, std::uint64_t seed);

// Row indices behind `split`, in dataset order: {train rows, test rows}.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    const Dataset& dataset, double test_fraction, std::uint64_t seed);

// The subset of `full` given by `rows` (all rows when empty).
Dataset subset(const Dataset& full, const std::vector<std::size_t>& rows,
               const std::string& split_tag);

FeatureStats compute_stats(const Dataset& train, std::size_t bins = 10);

}  // namespace groupcf
