#pragma once

#include "pico/adversary/networks.hpp"
#include "pico/codec/compress.hpp"
#include "pico/genmodel/dataset.hpp"
#include "pico/loop/training.hpp"

namespace pico::baselines {

// Mean absolute pixel difference; in [0,1] for [0,1]-valued images.
double perceptual_loss(const Matrix& originals, const Matrix& reconstructions);

// Differentiable stand-in for mask-and-resample used while training. With S
// the hard top-k transmitted set chosen from p, each group g is blended
// toward m_g, its conditional mean given the transmitted features other than
// g:  z_hat_g = z_g + p_g (m_g - z_g).  No sampling is involved.
struct Relaxation {
    Matrix latents;  // z_hat, D x N
    Matrix delta;    // m - z, D x N
};
Relaxation relax_latents(const codec::CodecBundle& codec, const Matrix& latents, const Matrix& probs, double lambda);

struct PerceptualConfig {
    double lambda = 0.5;
    loop::StageConfig stage;
    int hidden = 64;
    std::uint64_t seed = 0;
};

struct PerceptualResult {
    adversary::CompressionPolicy policy;
    loop::StageReport report;
};

// Mean relaxed perceptual loss and its gradients with respect to f_theta.
adversary::LossAndGradients perceptual_gradients(const adversary::CompressionPolicy& policy,
                                                 const codec::CodecBundle& codec, const Matrix& latents,
                                                 const Matrix& images, double lambda);
double relaxed_perceptual_loss(const adversary::CompressionPolicy& policy, const codec::CodecBundle& codec,
                               const Matrix& latents, const Matrix& images, double lambda);

// Fits f_theta to minimize |x - x_hat|. Takes images and their latents only;
// no interaction data is involved.
PerceptualResult train_perceptual_policy(const Matrix& latents, const Matrix& images,
                                         const codec::CodecBundle& codec, const PerceptualConfig& config);
PerceptualResult train_perceptual_policy(const genmodel::ImageDataset& images, const codec::CodecBundle& codec,
                                         const PerceptualConfig& config);

}  // namespace pico::baselines
