#include "pico/codec/gaussian_prior.hpp"

#include <cmath>

#include "pico/core/error.hpp"

namespace pico::codec {
namespace {

Matrix psd_factor(const Matrix& cov) {
    if (cov.size() == 0) return Matrix(0, 0);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition of conditional covariance failed");
    const Vector roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * roots.asDiagonal();
}

}  // namespace

Vector GaussianPrior::sample(Rng& rng) const {
    Eigen::LLT<Matrix> llt(covariance);
    if (llt.info() != Eigen::Success) throw NumericalError("prior covariance is not positive definite");
    return mean + llt.matrixL() * standard_normal(rng, mean.size());
}

Archive GaussianPrior::to_archive() const {
    Archive a("pico.gaussian_prior");
    a.meta()["ridge"] = ridge;
    a.put("mean", mean);
    a.put("covariance", covariance);
    return a;
}

GaussianPrior GaussianPrior::from_archive(const Archive& a) {
    a.expect_kind("pico.gaussian_prior");
    return GaussianPrior{a.vector("mean"), a.matrix("covariance"), a.meta().at("ridge").get<double>()};
}

GaussianPrior fit_prior(const Matrix& embeddings, double ridge) {
    const Eigen::Index d = embeddings.rows(), n = embeddings.cols();
    if (d < 1) throw EstimationError("fit_prior: embeddings have zero dimensions");
    if (n < d + 1)
        throw EstimationError("fit_prior: need at least " + std::to_string(d + 1) + " embeddings for " +
                              std::to_string(d) + " dimensions, got " + std::to_string(n));
    if (ridge < 0.0) throw EstimationError("fit_prior: ridge must be nonnegative");
    if (!embeddings.allFinite()) throw EstimationError("fit_prior: embeddings contain non-finite values");

    GaussianPrior prior;
    prior.ridge = ridge;
    prior.mean = embeddings.rowwise().mean();
    const Matrix centered = embeddings.colwise() - prior.mean;
    Matrix cov = centered * centered.transpose() / double(n - 1);
    cov = 0.5 * (cov + cov.transpose());
    cov.diagonal().array() += ridge;
    prior.covariance = std::move(cov);
    Eigen::LLT<Matrix> llt(prior.covariance);
    if (llt.info() != Eigen::Success)
        throw NumericalError("fit_prior: covariance not positive definite even with ridge " + std::to_string(ridge));
    return prior;
}

GaussianPrior fit_prior(const std::vector<Vector>& embeddings, double ridge) {
    if (embeddings.empty()) throw EstimationError("fit_prior: no embeddings");
    Matrix m(embeddings.front().size(), Eigen::Index(embeddings.size()));
    for (std::size_t i = 0; i < embeddings.size(); ++i) {
        if (embeddings[i].size() != m.rows()) throw EstimationError("fit_prior: embeddings differ in length");
        m.col(Eigen::Index(i)) = embeddings[i];
    }
    return fit_prior(m, ridge);
}

ConditionalGaussian::ConditionalGaussian(const GaussianPrior& prior, const std::vector<bool>& transmitted) {
    const int d = prior.dim();
    if (int(transmitted.size()) != d) throw InputError("conditioning mask length does not match prior dimension");
    for (int i = 0; i < d; ++i) (transmitted[std::size_t(i)] ? transmitted_ : masked_).push_back(i);
    const auto m = Eigen::Index(masked_.size()), s = Eigen::Index(transmitted_.size());

    prior_mean_masked_ = prior.mean(masked_);
    prior_mean_transmitted_ = prior.mean(transmitted_);
    const Matrix s11 = prior.covariance(masked_, masked_);
    if (s == 0) {
        gain_ = Matrix::Zero(m, 0);
        covariance_ = s11;
    } else if (m == 0) {
        gain_ = Matrix::Zero(0, s);
        covariance_ = Matrix::Zero(0, 0);
    } else {
        Matrix s22 = prior.covariance(transmitted_, transmitted_);
        s22.diagonal().array() += prior.ridge;
        const Matrix s12 = prior.covariance(masked_, transmitted_);
        Eigen::LLT<Matrix> llt(s22);
        if (llt.info() != Eigen::Success)
            throw NumericalError("covariance of transmitted features is singular after ridge");
        // gain = S_12 S_22^-1, computed as (S_22^-1 S_21)^T since S_22 is symmetric.
        gain_ = llt.solve(s12.transpose()).transpose();
        covariance_ = s11 - gain_ * s12.transpose();
        covariance_ = 0.5 * (covariance_ + covariance_.transpose());
    }
    factor_ = psd_factor(covariance_);
}

Vector ConditionalGaussian::mean(const Vector& z) const {
    if (transmitted_.empty()) return prior_mean_masked_;
    return prior_mean_masked_ + gain_ * (z(transmitted_) - prior_mean_transmitted_);
}

Vector ConditionalGaussian::resample(const Vector& z, Rng& rng) const {
    Vector out = z;
    if (masked_.empty()) return out;
    out(masked_) = mean(z) + factor_ * standard_normal(rng, Eigen::Index(masked_.size()));
    return out;
}

Vector conditional_mean(const GaussianPrior& prior, const Vector& z, const std::vector<bool>& transmitted) {
    const int d = prior.dim();
    if (int(transmitted.size()) != d || z.size() != d) throw InputError("conditional_mean: dimension mismatch");
    std::vector<int> sent, masked;
    for (int i = 0; i < d; ++i) (transmitted[std::size_t(i)] ? sent : masked).push_back(i);
    Vector out = z;
    if (masked.empty()) return out;
    if (sent.empty()) {
        out(masked) = prior.mean(masked);
        return out;
    }
    Matrix s22 = prior.covariance(sent, sent);
    s22.diagonal().array() += prior.ridge;
    Eigen::LLT<Matrix> llt(s22);
    if (llt.info() != Eigen::Success) throw NumericalError("covariance of transmitted features is singular after ridge");
    const Vector w = llt.solve(Vector(z(sent) - prior.mean(sent)));
    out(masked) = prior.mean(masked) + prior.covariance(masked, sent) * w;
    return out;
}

}  // namespace pico::codec
