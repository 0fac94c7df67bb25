#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pico/core/archive.hpp"
#include "pico/core/rng.hpp"
#include "pico/core/tensor.hpp"

namespace pico::codec {

inline constexpr double kDefaultRidge = 1e-6;

// Empirical Gaussian over latent features. `covariance` already includes
// ridge * I and is symmetric positive definite.
struct GaussianPrior {
    Vector mean;
    Matrix covariance;
    double ridge = kDefaultRidge;

    int dim() const { return static_cast<int>(mean.size()); }
    Vector marginal_stddev() const { return covariance.diagonal().cwiseSqrt(); }
    Vector sample(Rng& rng) const;

    Archive to_archive() const;
    static GaussianPrior from_archive(const Archive& archive);
};

// embeddings: D x N, one latent per column. Needs N >= D + 1.
GaussianPrior fit_prior(const Matrix& embeddings, double ridge = kDefaultRidge);
GaussianPrior fit_prior(const std::vector<Vector>& embeddings, double ridge = kDefaultRidge);

// Distribution of the features not in `transmitted` given the transmitted
// ones:
//   mean(z) = mu_1 + S_12 S_22^-1 (z_2 - mu_2)
//   cov     = S_11 - S_12 S_22^-1 S_21
// with S_22 regularized by the prior's ridge and solved by Cholesky.
class ConditionalGaussian {
public:
    ConditionalGaussian(const GaussianPrior& prior, const std::vector<bool>& transmitted);

    const std::vector<int>& masked() const { return masked_; }
    const std::vector<int>& transmitted() const { return transmitted_; }
    Vector mean(const Vector& z) const;
    const Matrix& covariance() const { return covariance_; }
    // Full-length latent: transmitted entries copied from z, masked drawn.
    Vector resample(const Vector& z, Rng& rng) const;

private:
    std::vector<int> masked_;
    std::vector<int> transmitted_;
    Vector prior_mean_masked_;
    Vector prior_mean_transmitted_;
    Matrix gain_;        // |M| x |S|
    Matrix covariance_;  // |M| x |M|
    Matrix factor_;      // covariance_ = factor_ * factor_^T
};

// z with its non-transmitted entries replaced by their conditional mean.
Vector conditional_mean(const GaussianPrior& prior, const Vector& z, const std::vector<bool>& transmitted);

}  // namespace pico::codec
