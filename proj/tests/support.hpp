#pragma once

// Shared helpers for the test binaries: tiny schema builders, discrete toy
// domains with lookup-table models, and scratch directories for file tests.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "groupcf/model.hpp"
#include "groupcf/tabular.hpp"

namespace testutil {

inline groupcf::FeatureSpec cont(const std::string& name, bool actionable = true) {
    groupcf::FeatureSpec spec;
    spec.name = name;
    spec.kind = groupcf::FeatureKind::Continuous;
    spec.actionable = actionable;
    return spec;
}

inline groupcf::FeatureSpec cat(const std::string& name, std::vector<std::string> categories,
                                bool actionable = true) {
    groupcf::FeatureSpec spec;
    spec.name = name;
    spec.kind = groupcf::FeatureKind::Categorical;
    spec.categories = std::move(categories);
    spec.actionable = actionable;
    return spec;
}

inline groupcf::Instance inst(std::vector<double> values) { return {std::move(values)}; }

// Category names "v0".."v<n-1>" for toy categorical features.
inline std::vector<std::string> values(std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back("v" + std::to_string(i));
    return out;
}

// Every instance of a discrete domain given per-feature cardinalities, in
// lexicographic order (last feature fastest).
inline std::vector<groupcf::Instance> enumerate_domain(const std::vector<std::size_t>& sizes) {
    std::vector<groupcf::Instance> out;
    std::vector<double> cur(sizes.size(), 0.0);
    const std::function<void(std::size_t)> rec = [&](std::size_t f) {
        if (f == sizes.size()) {
            out.push_back({cur});
            return;
        }
        for (std::size_t v = 0; v < sizes[f]; ++v) {
            cur[f] = static_cast<double>(v);
            rec(f + 1);
        }
    };
    rec(0);
    return out;
}

// Lookup-table model assigning p(class 1) = p1(x) to every given instance.
inline groupcf::Model lookup_model(const std::vector<groupcf::Instance>& instances,
                                   const std::function<double(const groupcf::Instance&)>& p1) {
    std::map<std::vector<double>, std::array<double, 2>> table;
    for (const auto& x : instances) {
        const double p = p1(x);
        table[x.values] = {1.0 - p, p};
    }
    return groupcf::Model::lookup_table(instances.empty() ? 0 : instances[0].values.size(),
                                        std::move(table));
}

// Dataset over the full domain with labels = model prediction (so every row
// is "correctly classified" where tests need that).
inline groupcf::Dataset domain_dataset(const groupcf::FeatureSchema& schema,
                                       const std::vector<groupcf::Instance>& instances,
                                       const groupcf::Model& model) {
    groupcf::Dataset data{schema, {}, {}, "toy", "train"};
    for (const auto& x : instances) {
        data.instances.push_back(x);
        data.labels.push_back(model.predict(x));
    }
    return data;
}

// Fresh scratch directory under the system temp root.
inline std::string scratch_dir(const std::string& tag) {
    std::string tmpl = std::string("/tmp/groupcf-test-") + tag + "-XXXXXX";
    std::vector<char> buf(tmpl.begin(), tmpl.end());
    buf.push_back('\0');
    const char* made = mkdtemp(buf.data());
    if (!made) throw std::runtime_error("mkdtemp failed for " + tmpl);
    return std::string(made);
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace testutil
