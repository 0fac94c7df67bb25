#pragma once

#include "pico/codec/gaussian_prior.hpp"
#include "pico/codec/mask.hpp"

namespace pico::codec {

inline constexpr double kBinWidth = 0.1;

// Mass of the standard-normal bin [k*w, (k+1)*w) containing `zscore`; bin
// edges sit on multiples of the width, so 0 is an edge.
double bin_probability(double zscore, double bin_width = kBinWidth);

// Sum over transmitted features of -log2 P(bin of the feature's z-score)
// under its marginal N(mean_i, var_i). Masked features cost nothing.
double measure_bits(const GaussianPrior& prior, const Vector& z, const MaskDecision& mask,
                    const GroupingScheme& grouping);

}  // namespace pico::codec
