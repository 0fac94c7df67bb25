#include "pico/codec/bits.hpp"

#include <cmath>
#include <numbers>

#include "pico/core/error.hpp"

namespace pico::codec {
namespace {

// Upper tail of the standard normal, accurate far into the tail.
double upper_tail(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

}  // namespace

double bin_probability(double zscore, double bin_width) {
    const double k = std::floor(zscore / bin_width);
    const double lo = k * bin_width, hi = (k + 1.0) * bin_width;
    // Difference of tails on the side away from the mean avoids cancellation.
    const double p = lo >= 0.0 ? upper_tail(lo) - upper_tail(hi) : upper_tail(-hi) - upper_tail(-lo);
    return std::max(p, 1e-300);
}

double measure_bits(const GaussianPrior& prior, const Vector& z, const MaskDecision& mask,
                    const GroupingScheme& grouping) {
    if (z.size() != prior.dim()) throw InputError("measure_bits: latent length does not match prior");
    const auto features = mask.transmitted_features(grouping);
    double bits = 0.0;
    for (int i = 0; i < prior.dim(); ++i) {
        if (!features[std::size_t(i)]) continue;
        const double var = prior.covariance(i, i);
        if (!(var > 0.0)) throw NumericalError("measure_bits: feature " + std::to_string(i) + " has zero variance");
        const double zscore = (z[i] - prior.mean[i]) / std::sqrt(var);
        bits -= std::log2(bin_probability(zscore));
    }
    return bits;
}

}  // namespace pico::codec
