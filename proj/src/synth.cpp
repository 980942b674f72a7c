#include "groupcf/synth.hpp"

#include <algorithm>
#include <cmath>

#include "groupcf/rng.hpp"

namespace groupcf {

FeatureSchema census_schema() {
    std::vector<FeatureSpec> features;
    features.push_back({"Age", FeatureKind::Continuous, {}, false});
    features.push_back({"Weekly hours", FeatureKind::Continuous, {}, true});
    features.push_back({"Capital gain", FeatureKind::Continuous, {}, true});
    features.push_back({"Capital loss", FeatureKind::Continuous, {}, true});
    features.push_back({"Education",
                        FeatureKind::Categorical,
                        {"No diploma", "High school", "Some college", "Associate", "Bachelor's",
                         "Master's", "Doctorate"},
                        true});
    features.push_back({"Employment type",
                        FeatureKind::Categorical,
                        {"Private", "Self-employed", "Government", "Unemployed"},
                        true});
    features.push_back({"Occupation",
                        FeatureKind::Categorical,
                        {"Service", "Clerical", "Skilled trade", "Sales", "Professional",
                         "Management"},
                        true});
    features.push_back({"Marital status",
                        FeatureKind::Categorical,
                        {"Single", "Married", "Divorced", "Widowed"},
                        false});
    features.push_back({"Country of birth",
                        FeatureKind::Categorical,
                        {"United States", "Mexico", "Canada", "Germany", "India", "Philippines",
                         "Other"},
                        false});
    features.push_back({"Gender", FeatureKind::Categorical, {"Female", "Male"}, false});
    return FeatureSchema(std::move(features), {"Under $50k", "Over $50k"});
}

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::size_t pick(Rng& rng, const std::vector<double>& weights) {
    double total = 0.0;
    for (const double w : weights) total += w;
    double u = rng.uniform() * total;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        u -= weights[i];
        if (u < 0.0) return i;
    }
    return weights.size() - 1;
}

double clamp(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

}  // namespace

Dataset synth_census(std::size_t n_rows, std::uint64_t seed) {
    Dataset out{census_schema(), {}, {}, "synthetic census sample", ""};
    out.instances.reserve(n_rows);
    out.labels.reserve(n_rows);
    Rng rng(seed);

    for (std::size_t row = 0; row < n_rows; ++row) {
        // Latent earning potential ties education, occupation and capital
        // income together, as in real census samples.
        const double skill = rng.uniform();

        const double age = std::floor(17.0 + 63.0 * std::pow(rng.uniform(), 1.15));
        const double edu =
            clamp(std::floor(7.0 * (0.55 * skill + 0.45 * rng.uniform())), 0.0, 6.0);
        const double employment = static_cast<double>(
            pick(rng, {0.64, 0.12 + 0.10 * skill, 0.14, 0.10 - 0.08 * skill}));
        const double occupation =
            clamp(std::floor(edu * 5.0 / 6.0 + 2.6 * (rng.uniform() - 0.5) + 0.5), 0.0, 5.0);

        double hours;
        if (employment == 3.0) {  // unemployed: sporadic part-time work
            hours = std::floor(1.0 + 19.0 * rng.uniform());
        } else {
            const double base = 34.0 + 3.0 * (edu >= 4.0) + 4.0 * (employment == 1.0);
            hours = std::floor(clamp(base + 24.0 * (rng.uniform() - 0.35), 1.0, 80.0));
        }

        const double married =
            rng.uniform() < clamp(0.08 + (age - 17.0) * 0.013, 0.0, 0.72) ? 1.0 : 0.0;
        double marital = married;
        if (married == 0.0) {
            const double u = rng.uniform();
            marital = u < 0.78 ? 0.0 : (u < 0.94 ? 2.0 : 3.0);  // single / divorced / widowed
        }
        const double country =
            static_cast<double>(pick(rng, {0.72, 0.08, 0.04, 0.03, 0.05, 0.04, 0.04}));
        const double gender = rng.uniform() < 0.5 ? 0.0 : 1.0;

        double gain = 0.0;
        if (rng.uniform() < 0.06 + 0.10 * skill) {
            const double u = rng.uniform();
            gain = std::floor(400.0 + u * u * (15000.0 + 45000.0 * skill));
        }
        double loss = 0.0;
        if (gain == 0.0 && rng.uniform() < 0.05) {
            loss = std::floor(300.0 + 2800.0 * rng.uniform());
        }

        // Income odds: a logistic score over the usual census drivers. The
        // sharpness constant sets the Bayes accuracy of the problem.
        const double score = 0.62 * (edu - 2.6) + 0.062 * (hours - 38.0) +
                             0.030 * (age - 40.0) + 1.15 * married +
                             0.28 * (occupation - 2.5) + 0.35 * gender +
                             (gain > 3000.0 ? 2.2 : gain * 0.0004) -
                             (loss > 1200.0 ? 0.5 : 0.0) - (employment == 3.0 ? 1.4 : 0.0);
        const double p = sigmoid(1.55 * score - 1.75);
        const int label = rng.uniform() < p ? 1 : 0;

        out.instances.push_back(Instance{{age, hours, gain, loss, edu, employment, occupation,
                                          marital, country, gender}});
        out.labels.push_back(label);
    }
    return out;
}

}  // namespace groupcf
