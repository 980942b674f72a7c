#include "groupcf/tabular.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "groupcf/rng.hpp"

namespace groupcf {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r')) ++a;
    while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
    return s.substr(a, b - a);
}

// One CSV record; handles double-quoted fields with "" escapes.
std::vector<std::string> parse_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"' && trim(cur).empty()) {
            quoted = true;
            cur.clear();
        } else if (c == ',') {
            fields.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(trim(cur));
    return fields;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        out += c;
    }
    out += '"';
    return out;
}

double parse_number(const std::string& text, std::size_t row, const std::string& feature) {
    const std::string t = trim(text);
    double value = 0.0;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    const auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc() || res.ptr != last || t.empty()) {
        throw MalformedNumberError(row, feature, text);
    }
    return value;
}

// Trailing-zero-free rendering used for CSV round trips.
std::string format_number(double v) {
    if (v == static_cast<long long>(v) && std::abs(v) < 1e15) {
        return std::to_string(static_cast<long long>(v));
    }
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

FeatureSchema::FeatureSchema(std::vector<FeatureSpec> features,
                             std::pair<std::string, std::string> class_names)
    : features_(std::move(features)), class_names_(std::move(class_names)) {
    if (class_names_.first.empty() || class_names_.second.empty() ||
        class_names_.first == class_names_.second) {
        throw SchemaError("schema requires exactly two distinct, non-empty class labels");
    }
    std::unordered_set<std::string> seen;
    for (const auto& f : features_) {
        if (f.name.empty()) throw SchemaError("feature with empty name");
        if (!seen.insert(f.name).second) throw SchemaError("duplicate feature name: " + f.name);
        if (f.kind == FeatureKind::Categorical) {
            std::unordered_set<std::string> cats(f.categories.begin(), f.categories.end());
            if (f.categories.size() < 2 || cats.size() != f.categories.size()) {
                throw SchemaError("categorical feature '" + f.name +
                                  "' needs >= 2 distinct categories");
            }
        } else if (!f.categories.empty()) {
            throw SchemaError("continuous feature '" + f.name + "' must not list categories");
        }
    }
}

FeatureSchema FeatureSchema::from_json_text(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("schema JSON parse error: ") + e.what());
    }
    if (!doc.contains("features") || !doc["features"].is_array()) {
        throw SchemaError("schema JSON missing 'features' array");
    }
    if (!doc.contains("classes") || !doc["classes"].is_array() || doc["classes"].size() != 2) {
        throw SchemaError("schema JSON missing 'classes' pair");
    }
    std::vector<FeatureSpec> specs;
    for (const auto& f : doc["features"]) {
        FeatureSpec spec;
        if (!f.contains("name") || !f["name"].is_string()) {
            throw SchemaError("schema feature without a 'name'");
        }
        spec.name = f["name"].get<std::string>();
        const std::string kind = f.value("kind", std::string("continuous"));
        if (kind == "continuous") {
            spec.kind = FeatureKind::Continuous;
        } else if (kind == "categorical") {
            spec.kind = FeatureKind::Categorical;
        } else {
            throw SchemaError("feature '" + spec.name + "' has unknown kind '" + kind + "'");
        }
        if (f.contains("categories")) {
            for (const auto& c : f["categories"]) spec.categories.push_back(c.get<std::string>());
        }
        spec.actionable = f.value("actionable", true);
        specs.push_back(std::move(spec));
    }
    return FeatureSchema(std::move(specs),
                         {doc["classes"][0].get<std::string>(), doc["classes"][1].get<std::string>()});
}

FeatureSchema FeatureSchema::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open schema file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

std::string FeatureSchema::to_json_text() const {
    nlohmann::ordered_json doc;
    doc["features"] = nlohmann::ordered_json::array();
    for (const auto& f : features_) {
        nlohmann::ordered_json spec;
        spec["name"] = f.name;
        spec["kind"] = f.kind == FeatureKind::Continuous ? "continuous" : "categorical";
        if (f.kind == FeatureKind::Categorical) {
            spec["categories"] = f.categories;
        }
        spec["actionable"] = f.actionable;
        doc["features"].push_back(std::move(spec));
    }
    doc["classes"] = {class_names_.first, class_names_.second};
    return doc.dump(2) + "\n";
}

std::optional<std::size_t> FeatureSchema::feature_index(const std::string& name) const {
    for (std::size_t i = 0; i < features_.size(); ++i) {
        if (features_[i].name == name) return i;
    }
    return std::nullopt;
}

std::optional<int> FeatureSchema::class_index(const std::string& label) const {
    if (label == class_names_.first) return 0;
    if (label == class_names_.second) return 1;
    return std::nullopt;
}

std::optional<std::size_t> FeatureSchema::category_index(std::size_t feature,
                                                         const std::string& value) const {
    const auto& cats = features_[feature].categories;
    for (std::size_t i = 0; i < cats.size(); ++i) {
        if (cats[i] == value) return i;
    }
    return std::nullopt;
}

const std::string& FeatureSchema::category_name(std::size_t feature, std::size_t index) const {
    return features_[feature].categories.at(index);
}

std::vector<std::size_t> FeatureSchema::actionable_features() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < features_.size(); ++i) {
        if (features_[i].actionable) out.push_back(i);
    }
    return out;
}

Dataset dataset_from_csv_text(const std::string& text, const FeatureSchema& schema,
                              const std::string& source) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw MissingColumnError("label");
    const std::vector<std::string> header = parse_csv_line(line);

    std::unordered_map<std::string, std::size_t> col_of;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (col_of.count(header[i])) {
            throw SchemaMismatchError("duplicate CSV column: " + header[i]);
        }
        col_of[header[i]] = i;
    }
    std::vector<std::size_t> feature_col(schema.feature_count());
    for (std::size_t f = 0; f < schema.feature_count(); ++f) {
        const auto it = col_of.find(schema.feature(f).name);
        if (it == col_of.end()) throw MissingColumnError(schema.feature(f).name);
        feature_col[f] = it->second;
    }
    if (!col_of.count("label")) throw MissingColumnError("label");
    const std::size_t label_col = col_of["label"];
    if (header.size() != schema.feature_count() + 1) {
        throw SchemaMismatchError("CSV header has " + std::to_string(header.size()) +
                                  " columns; schema expects " +
                                  std::to_string(schema.feature_count() + 1));
    }

    Dataset out{schema, {}, {}, source, ""};
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row;
        const std::vector<std::string> fields = parse_csv_line(line);
        if (fields.size() != header.size()) {
            throw SchemaMismatchError("data row " + std::to_string(row) + " has " +
                                      std::to_string(fields.size()) + " fields; expected " +
                                      std::to_string(header.size()));
        }
        Instance inst;
        inst.values.resize(schema.feature_count());
        for (std::size_t f = 0; f < schema.feature_count(); ++f) {
            const std::string& cell = fields[feature_col[f]];
            const FeatureSpec& spec = schema.feature(f);
            if (spec.kind == FeatureKind::Continuous) {
                inst.values[f] = parse_number(cell, row, spec.name);
            } else {
                const auto idx = schema.category_index(f, cell);
                if (!idx) throw UnknownCategoryError(spec.name, cell, row);
                inst.values[f] = static_cast<double>(*idx);
            }
        }
        const auto cls = schema.class_index(fields[label_col]);
        if (!cls) throw UnknownCategoryError("label", fields[label_col], row);
        out.instances.push_back(std::move(inst));
        out.labels.push_back(*cls);
    }
    return out;
}

Dataset load_dataset(const std::string& csv_path, const FeatureSchema& schema) {
    std::ifstream in(csv_path);
    if (!in) throw IoError("cannot open dataset file: " + csv_path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return dataset_from_csv_text(buf.str(), schema, csv_path);
}

void write_dataset_csv(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write dataset file: " + path);
    const FeatureSchema& schema = dataset.schema;
    for (std::size_t f = 0; f < schema.feature_count(); ++f) {
        out << csv_escape(schema.feature(f).name) << ',';
    }
    out << "label\n";
    for (std::size_t r = 0; r < dataset.size(); ++r) {
        const Instance& inst = dataset.instances[r];
        for (std::size_t f = 0; f < schema.feature_count(); ++f) {
            const FeatureSpec& spec = schema.feature(f);
            if (spec.kind == FeatureKind::Continuous) {
                out << format_number(inst.values[f]);
            } else {
                out << csv_escape(schema.category_name(f, static_cast<std::size_t>(inst.values[f])));
            }
            out << ',';
        }
        out << csv_escape(schema.class_name(dataset.labels[r])) << '\n';
    }
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    const Dataset& dataset, double test_fraction, std::uint64_t seed) {
    if (dataset.size() == 0) throw InputError("cannot split an empty dataset");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw ConfigError("test fraction must lie in (0,1)");
    }

    // Stratified: shuffle each class's row list and cut it at the rounded
    // per-class test count.
    std::vector<std::vector<std::size_t>> by_class(2);
    for (std::size_t r = 0; r < dataset.size(); ++r) by_class[dataset.labels[r]].push_back(r);

    std::vector<bool> in_test(dataset.size(), false);
    Rng rng(seed);
    for (int cls = 0; cls < 2; ++cls) {
        auto rows = by_class[cls];
        rng.shuffle(rows);
        const auto n_test = static_cast<std::size_t>(
            std::llround(static_cast<double>(rows.size()) * test_fraction));
        for (std::size_t i = 0; i < n_test && i < rows.size(); ++i) in_test[rows[i]] = true;
    }

    std::pair<std::vector<std::size_t>, std::vector<std::size_t>> rows;
    for (std::size_t r = 0; r < dataset.size(); ++r) {
        (in_test[r] ? rows.second : rows.first).push_back(r);
    }
    if (rows.first.empty() || rows.second.empty()) {
        throw DegenerateSplitError("split would leave an empty side (n=" +
                                   std::to_string(dataset.size()) + ", fraction=" +
                                   std::to_string(test_fraction) + ")");
    }
    return rows;
}

Dataset subset(const Dataset& full, const std::vector<std::size_t>& rows,
               const std::string& split_tag) {
    if (rows.empty()) {
        Dataset out = full;
        out.split_tag = split_tag;
        return out;
    }
    Dataset out{full.schema, {}, {}, full.source, split_tag};
    out.instances.reserve(rows.size());
    out.labels.reserve(rows.size());
    for (const std::size_t r : rows) {
        if (r >= full.size()) {
            throw InputError("subset row " + std::to_string(r) + " out of range (dataset has " +
                             std::to_string(full.size()) + " rows)");
        }
        out.instances.push_back(full.instances[r]);
        out.labels.push_back(full.labels[r]);
    }
    return out;
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, double test_fraction, std::uint64_t seed) {
    auto rows = split_indices(dataset, test_fraction, seed);
    return {subset(dataset, rows.first, "train"), subset(dataset, rows.second, "test")};
}

// Even-length median = mean of the two middle order statistics.
double median_of(std::vector<double> values) {
    if (values.empty()) throw InputError("median of empty vector");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

double mad_of(const std::vector<double>& values) {
    const double med = median_of(values);
    std::vector<double> dev(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) dev[i] = std::abs(values[i] - med);
    return median_of(std::move(dev));
}

namespace {

// Type-7 (linear interpolation) quantile over a sorted vector.
double quantile_sorted(const std::vector<double>& sorted, double q) {
    const double h = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

double quantile_of(std::vector<double> values, double q) {
    if (values.empty()) throw InputError("quantile of empty vector");
    std::sort(values.begin(), values.end());
    return quantile_sorted(values, q);
}

FeatureStats compute_stats(const Dataset& train, std::size_t bins) {
    if (train.size() == 0) throw InputError("cannot compute stats on an empty dataset");
    if (bins < 2) throw ConfigError("bin count must be >= 2");

    FeatureStats stats;
    stats.bins = bins;
    stats.features.resize(train.schema.feature_count());
    for (std::size_t f = 0; f < train.schema.feature_count(); ++f) {
        auto& pf = stats.features[f];
        pf.kind = train.schema.feature(f).kind;
        if (pf.kind == FeatureKind::Categorical) {
            pf.categorical.counts.assign(train.schema.feature(f).categories.size(), 0);
            for (const Instance& inst : train.instances) {
                ++pf.categorical.counts[static_cast<std::size_t>(inst.values[f])];
            }
            continue;
        }
        std::vector<double> col(train.size());
        for (std::size_t r = 0; r < train.size(); ++r) col[r] = train.instances[r].values[f];
        pf.continuous.median = median_of(col);
        pf.continuous.mad = mad_of(col);
        std::sort(col.begin(), col.end());
        pf.continuous.min = col.front();
        pf.continuous.max = col.back();
        pf.continuous.degenerate = pf.continuous.mad == 0.0;
        for (std::size_t b = 1; b < bins; ++b) {
            const double edge = quantile_sorted(col, static_cast<double>(b) / static_cast<double>(bins));
            if (pf.continuous.bin_edges.empty() || edge > pf.continuous.bin_edges.back()) {
                pf.continuous.bin_edges.push_back(edge);
            }
        }
    }
    return stats;
}

double FeatureStats::scale(std::size_t feature) const {
    const auto& c = features.at(feature).continuous;
    return (c.mad == 0.0) ? 1.0 : c.mad;
}

std::size_t FeatureStats::bin_index(std::size_t feature, double value) const {
    const auto& edges = features.at(feature).continuous.bin_edges;
    const auto it = std::lower_bound(edges.begin(), edges.end(), value);
    // Value lands in the bin whose upper edge is the first edge >= value;
    // exact edge hits belong to the lower bin.
    return static_cast<std::size_t>(it - edges.begin());
}

}  // namespace groupcf
