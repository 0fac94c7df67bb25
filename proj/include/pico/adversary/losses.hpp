#pragma once

#include <vector>

#include "pico/adversary/networks.hpp"
#include "pico/nn/adam.hpp"

namespace pico::adversary {

// Aligned per-record arrays: treatment T, action a, latent z (columns),
// mask probabilities p (columns).
struct TrainingBatch {
    std::vector<int> treatment;
    std::vector<int> actions;
    Matrix latents;
    Matrix probs;

    std::size_t size() const { return actions.size(); }
    bool empty() const { return actions.empty(); }
    // Throws InputError on misaligned arrays or T outside {0,1}.
    void validate() const;
    TrainingBatch subset(const std::vector<std::size_t>& indices) const;
    TrainingBatch with_treatment(int t) const;
};

struct LossAndGradients {
    double loss = 0.0;
    nn::Gradients grads;
};

// Mean binary cross-entropy of D_phi(a, z) against T (natural log).
double action_discriminator_loss(const ActionDiscriminator& d_phi, const TrainingBatch& batch);
LossAndGradients action_discriminator_gradients(const ActionDiscriminator& d_phi, const TrainingBatch& batch);

// Mean KL( Bernoulli(D_phi(a,z)) || Bernoulli(D_psi(p,z)) ). D_phi is fixed.
double distillation_loss(const ImageDiscriminator& d_psi, const ActionDiscriminator& d_phi,
                         const TrainingBatch& batch);
LossAndGradients distillation_gradients(const ImageDiscriminator& d_psi, const ActionDiscriminator& d_phi,
                                        const TrainingBatch& batch);
// Same loss against precomputed targets q = D_phi(a, z).
double distillation_loss(const ImageDiscriminator& d_psi, const Eigen::RowVectorXd& targets, const Matrix& probs,
                         const Matrix& latents);
LossAndGradients distillation_gradients(const ImageDiscriminator& d_psi, const Eigen::RowVectorXd& targets,
                                        const Matrix& probs, const Matrix& latents);

// Mean -log D_psi(f_theta(z), z). D_psi is fixed; gradients reach theta
// through the probabilities p only.
double generator_loss(const CompressionPolicy& f_theta, const ImageDiscriminator& d_psi, const Matrix& latents);
LossAndGradients generator_gradients(const CompressionPolicy& f_theta, const ImageDiscriminator& d_psi,
                                     const Matrix& latents);

// One Adam step on the component's own parameters; returns the pre-step loss.
double update_action_discriminator(ActionDiscriminator& d_phi, const TrainingBatch& batch, nn::Adam& opt);
double update_image_discriminator(ImageDiscriminator& d_psi, const ActionDiscriminator& d_phi,
                                  const TrainingBatch& batch, nn::Adam& opt);
double update_compression_policy(CompressionPolicy& f_theta, const ImageDiscriminator& d_psi,
                                 const TrainingBatch& batch, nn::Adam& opt);

// Fraction of records where D_phi > 0.5 agrees with T.
double action_discriminator_accuracy(const ActionDiscriminator& d_phi, const TrainingBatch& batch);

Vector policy_probs(const CompressionPolicy& f_theta, const Vector& z);

}  // namespace pico::adversary
