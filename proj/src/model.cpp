#include "groupcf/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace groupcf {

namespace {

constexpr int kModelFormatVersion = 1;
constexpr double kMinGain = 1e-12;

struct SplitChoice {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double gain = 0.0;
};

// Exact greedy split on variance reduction of the residuals. Features are
// scanned in index order and thresholds ascending, with strict improvement
// required, so ties resolve to the lowest feature index then lowest threshold.
SplitChoice best_split(const std::vector<Instance>& xs, const std::vector<double>& residual,
                       const std::vector<std::size_t>& rows, std::size_t n_features) {
    SplitChoice best;
    const auto n = rows.size();
    if (n < 2) return best;

    double total_sum = 0.0;
    double total_sq = 0.0;
    for (const std::size_t r : rows) {
        total_sum += residual[r];
        total_sq += residual[r] * residual[r];
    }
    const double parent_sse = total_sq - total_sum * total_sum / static_cast<double>(n);

    std::vector<std::pair<double, double>> col(n);  // (feature value, residual)
    for (std::size_t f = 0; f < n_features; ++f) {
        for (std::size_t i = 0; i < n; ++i) {
            col[i] = {xs[rows[i]].values[f], residual[rows[i]]};
        }
        std::sort(col.begin(), col.end());
        if (col.front().first == col.back().first) continue;

        double left_sum = 0.0;
        double left_sq = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            left_sum += col[i].second;
            left_sq += col[i].second * col[i].second;
            if (col[i].first == col[i + 1].first) continue;
            const auto nl = static_cast<double>(i + 1);
            const auto nr = static_cast<double>(n - i - 1);
            const double right_sum = total_sum - left_sum;
            const double right_sq = total_sq - left_sq;
            const double sse = (left_sq - left_sum * left_sum / nl) +
                               (right_sq - right_sum * right_sum / nr);
            const double gain = parent_sse - sse;
            if (gain > best.gain + kMinGain || (!best.found && gain > kMinGain)) {
                best.found = true;
                best.feature = f;
                best.threshold = (col[i].first + col[i + 1].first) / 2.0;
                best.gain = gain;
            }
        }
    }
    return best;
}

// One-step Newton leaf estimate for log loss: sum(residual) / sum(p(1-p)).
double leaf_value(const std::vector<double>& residual, const std::vector<double>& hessian,
                  const std::vector<std::size_t>& rows) {
    double num = 0.0;
    double den = 0.0;
    for (const std::size_t r : rows) {
        num += residual[r];
        den += hessian[r];
    }
    if (den < 1e-12) return 0.0;
    return num / den;
}

void grow_node(RegressionTree& tree, int node_index, const std::vector<Instance>& xs,
               const std::vector<double>& residual, const std::vector<double>& hessian,
               std::vector<std::size_t> rows, int depth, int max_depth, std::size_t n_features) {
    if (depth >= max_depth) {
        tree.nodes[node_index].value = leaf_value(residual, hessian, rows);
        return;
    }
    const SplitChoice split = best_split(xs, residual, rows, n_features);
    if (!split.found) {
        tree.nodes[node_index].value = leaf_value(residual, hessian, rows);
        return;
    }
    std::vector<std::size_t> left_rows;
    std::vector<std::size_t> right_rows;
    for (const std::size_t r : rows) {
        (xs[r].values[split.feature] <= split.threshold ? left_rows : right_rows).push_back(r);
    }
    const int left = static_cast<int>(tree.nodes.size());
    const int right = left + 1;
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    // re-index: emplace_back may have reallocated the node storage
    TreeNode& parent = tree.nodes[node_index];
    parent.leaf = false;
    parent.feature = split.feature;
    parent.threshold = split.threshold;
    parent.left = left;
    parent.right = right;
    grow_node(tree, left, xs, residual, hessian, std::move(left_rows), depth + 1, max_depth,
              n_features);
    grow_node(tree, right, xs, residual, hessian, std::move(right_rows), depth + 1, max_depth,
              n_features);
}

}  // namespace

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void TrainConfig::validate() const {
    if (n_trees < 1) throw ConfigError("n_trees must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (max_depth < 1) throw ConfigError("max_depth must be >= 1");
}

double RegressionTree::predict(const Instance& x) const {
    int i = 0;
    while (!nodes[i].leaf) {
        i = (x.values[nodes[i].feature] <= nodes[i].threshold) ? nodes[i].left : nodes[i].right;
    }
    return nodes[i].value;
}

Model Model::boosted(std::size_t n_features, double initial_score, double learning_rate,
                     std::vector<RegressionTree> trees, TrainConfig config) {
    Model m;
    m.kind_ = Kind::BoostedTrees;
    m.n_features_ = n_features;
    m.initial_score_ = initial_score;
    m.learning_rate_ = learning_rate;
    m.trees_ = std::move(trees);
    m.config_ = config;
    return m;
}

Model Model::lookup_table(std::size_t n_features,
                          std::map<std::vector<double>, std::array<double, 2>> table) {
    Model m;
    m.kind_ = Kind::LookupTable;
    m.n_features_ = n_features;
    m.table_ = std::move(table);
    return m;
}

double Model::margin(const Instance& x, std::size_t max_trees) const {
    double score = initial_score_;
    const std::size_t n = std::min(max_trees, trees_.size());
    for (std::size_t t = 0; t < n; ++t) score += learning_rate_ * trees_[t].predict(x);
    return score;
}

std::array<double, 2> Model::predict_proba(const Instance& x) const {
    if (x.values.size() != n_features_) {
        throw SchemaMismatchError("instance has " + std::to_string(x.values.size()) +
                                  " features; model expects " + std::to_string(n_features_));
    }
    if (kind_ == Kind::LookupTable) {
        const auto it = table_.find(x.values);
        if (it == table_.end()) throw UnknownInstanceError("instance not present in lookup table");
        return it->second;
    }
    const double p1 = sigmoid(margin(x, trees_.size()));
    return {1.0 - p1, p1};
}

int Model::predict(const Instance& x) const {
    const auto p = predict_proba(x);
    return p[1] > p[0] ? 1 : 0;  // tie goes to class index 0
}

Model train_boosted(const Dataset& train, const TrainConfig& config) {
    config.validate();
    const std::size_t n = train.size();
    if (n == 0) throw InputError("cannot train on an empty dataset");
    const std::size_t positives =
        static_cast<std::size_t>(std::count(train.labels.begin(), train.labels.end(), 1));
    if (positives == 0 || positives == n) {
        throw SingleClassTrainingError("training data contains a single class");
    }

    const double p1 = static_cast<double>(positives) / static_cast<double>(n);
    const double initial_score = std::log(p1 / (1.0 - p1));

    std::vector<double> score(n, initial_score);
    std::vector<double> residual(n);
    std::vector<double> hessian(n);
    std::vector<std::size_t> all_rows(n);
    std::iota(all_rows.begin(), all_rows.end(), 0);

    std::vector<RegressionTree> trees;
    trees.reserve(static_cast<std::size_t>(config.n_trees));
    for (int round = 0; round < config.n_trees; ++round) {
        for (std::size_t r = 0; r < n; ++r) {
            const double p = sigmoid(score[r]);
            residual[r] = static_cast<double>(train.labels[r]) - p;
            hessian[r] = p * (1.0 - p);
        }
        RegressionTree tree;
        tree.nodes.emplace_back();
        grow_node(tree, 0, train.instances, residual, hessian, all_rows, 0, config.max_depth,
                  train.schema.feature_count());
        for (std::size_t r = 0; r < n; ++r) {
            score[r] += config.learning_rate * tree.predict(train.instances[r]);
        }
        trees.push_back(std::move(tree));
    }
    return Model::boosted(train.schema.feature_count(), initial_score, config.learning_rate,
                          std::move(trees), config);
}

double accuracy(const Model& model, const Dataset& data) {
    if (data.size() == 0) throw InputError("accuracy over an empty dataset");
    std::size_t hits = 0;
    for (std::size_t r = 0; r < data.size(); ++r) {
        if (model.predict(data.instances[r]) == data.labels[r]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(data.size());
}

std::string Model::to_json_text() const {
    nlohmann::ordered_json doc;
    doc["format_version"] = kModelFormatVersion;
    doc["n_features"] = n_features_;
    if (kind_ == Kind::BoostedTrees) {
        doc["kind"] = "boosted_trees";
        doc["initial_score"] = initial_score_;
        doc["learning_rate"] = learning_rate_;
        doc["config"] = {{"n_trees", config_.n_trees},
                         {"learning_rate", config_.learning_rate},
                         {"max_depth", config_.max_depth},
                         {"seed", config_.seed}};
        nlohmann::ordered_json trees = nlohmann::ordered_json::array();
        for (const auto& tree : trees_) {
            nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
            for (const auto& n : tree.nodes) {
                if (n.leaf) {
                    nodes.push_back({{"value", n.value}});
                } else {
                    nodes.push_back({{"feature", n.feature},
                                     {"threshold", n.threshold},
                                     {"left", n.left},
                                     {"right", n.right}});
                }
            }
            trees.push_back({{"nodes", std::move(nodes)}});
        }
        doc["trees"] = std::move(trees);
    } else {
        doc["kind"] = "lookup_table";
        nlohmann::ordered_json entries = nlohmann::ordered_json::array();
        for (const auto& [values, proba] : table_) {
            entries.push_back({{"values", values}, {"proba", {proba[0], proba[1]}}});
        }
        doc["entries"] = std::move(entries);
    }
    if (!train_rows_.empty()) {
        doc["train_rows"] = train_rows_;
    }
    return doc.dump(2) + "\n";
}

Model Model::from_json_text(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatVersionMismatchError(std::string("model file is not readable: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("format_version")) {
        throw FormatVersionMismatchError("model file lacks a format_version");
    }
    if (doc["format_version"].get<int>() != kModelFormatVersion) {
        throw FormatVersionMismatchError("unsupported model format_version " +
                                         doc["format_version"].dump());
    }
    try {
        const std::string kind = doc.at("kind").get<std::string>();
        const auto n_features = doc.at("n_features").get<std::size_t>();
        std::vector<std::size_t> train_rows;
        if (doc.contains("train_rows")) {
            train_rows = doc["train_rows"].get<std::vector<std::size_t>>();
        }
        if (kind == "boosted_trees") {
            TrainConfig cfg;
            cfg.n_trees = doc.at("config").at("n_trees").get<int>();
            cfg.learning_rate = doc.at("config").at("learning_rate").get<double>();
            cfg.max_depth = doc.at("config").at("max_depth").get<int>();
            cfg.seed = doc.at("config").at("seed").get<std::uint64_t>();
            std::vector<RegressionTree> trees;
            for (const auto& jt : doc.at("trees")) {
                RegressionTree tree;
                for (const auto& jn : jt.at("nodes")) {
                    TreeNode node;
                    if (jn.contains("value")) {
                        node.leaf = true;
                        node.value = jn.at("value").get<double>();
                    } else {
                        node.leaf = false;
                        node.feature = jn.at("feature").get<std::size_t>();
                        node.threshold = jn.at("threshold").get<double>();
                        node.left = jn.at("left").get<int>();
                        node.right = jn.at("right").get<int>();
                    }
                    tree.nodes.push_back(node);
                }
                trees.push_back(std::move(tree));
            }
            Model model = Model::boosted(n_features, doc.at("initial_score").get<double>(),
                                         doc.at("learning_rate").get<double>(), std::move(trees),
                                         cfg);
            model.set_train_rows(std::move(train_rows));
            return model;
        }
        if (kind == "lookup_table") {
            std::map<std::vector<double>, std::array<double, 2>> table;
            for (const auto& e : doc.at("entries")) {
                table[e.at("values").get<std::vector<double>>()] = {
                    e.at("proba")[0].get<double>(), e.at("proba")[1].get<double>()};
            }
            Model model = Model::lookup_table(n_features, std::move(table));
            model.set_train_rows(std::move(train_rows));
            return model;
        }
        throw FormatVersionMismatchError("unknown model kind: " + kind);
    } catch (const nlohmann::json::exception& e) {
        throw FormatVersionMismatchError(std::string("model file is structurally invalid: ") +
                                         e.what());
    }
}

void Model::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write model file: " + path);
    out << to_json_text();
}

Model Model::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open model file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

}  // namespace groupcf
