#pragma once

#include <cstdint>

#include "groupcf/tabular.hpp"

namespace groupcf {

// Bundled demo schema: a census-style income problem with four continuous
// and six categorical features. Age, marital status, country of birth and
// gender are marked non-actionable.
FeatureSchema census_schema();

// Deterministic synthetic census sample: rows are drawn from a fixed
// generative model whose income odds rise with education, weekly hours,
// age and capital gain. Identical (n_rows, seed) pairs give identical data.
Dataset synth_census(std::size_t n_rows, std::uint64_t seed);

}  // namespace groupcf
