#include "pico/adversary/losses.hpp"

#include <cmath>

#include "pico/core/error.hpp"

namespace pico::adversary {
namespace {

double kl_bernoulli(double q, double r) {
    double out = 0.0;
    if (q > 0.0) out += q * std::log(q / r);
    if (q < 1.0) out += (1.0 - q) * std::log((1.0 - q) / (1.0 - r));
    return out;
}

Matrix logit_gradient(const ClampedProbability& prob, const Eigen::RowVectorXd& raw) {
    Matrix g(1, raw.size());
    for (Eigen::Index i = 0; i < raw.size(); ++i) g(0, i) = prob.active[i] ? raw[i] : 0.0;
    return g;
}

}  // namespace

void TrainingBatch::validate() const {
    const auto n = Eigen::Index(actions.size());
    if (treatment.size() != actions.size() || latents.cols() != n || probs.cols() != n)
        throw InputError("training batch arrays are misaligned");
    for (int t : treatment)
        if (t != 0 && t != 1) throw InputError("treatment must be 0 or 1");
}

TrainingBatch TrainingBatch::subset(const std::vector<std::size_t>& indices) const {
    TrainingBatch out;
    out.latents.resize(latents.rows(), Eigen::Index(indices.size()));
    out.probs.resize(probs.rows(), Eigen::Index(indices.size()));
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const std::size_t j = indices[i];
        if (j >= size()) throw InputError("training batch index out of range");
        out.treatment.push_back(treatment[j]);
        out.actions.push_back(actions[j]);
        out.latents.col(Eigen::Index(i)) = latents.col(Eigen::Index(j));
        out.probs.col(Eigen::Index(i)) = probs.col(Eigen::Index(j));
    }
    return out;
}

TrainingBatch TrainingBatch::with_treatment(int t) const {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < size(); ++i)
        if (treatment[i] == t) keep.push_back(i);
    return subset(keep);
}

double action_discriminator_loss(const ActionDiscriminator& d_phi, const TrainingBatch& batch) {
    batch.validate();
    if (batch.empty()) throw InputError("action discriminator loss of an empty batch");
    const auto q = d_phi.probability(batch.actions, batch.latents);
    double total = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i)
        total -= batch.treatment[i] ? std::log(q[Eigen::Index(i)]) : std::log(1.0 - q[Eigen::Index(i)]);
    return total / double(batch.size());
}

LossAndGradients action_discriminator_gradients(const ActionDiscriminator& d_phi, const TrainingBatch& batch) {
    batch.validate();
    if (batch.empty()) throw InputError("action discriminator loss of an empty batch");
    const double n = double(batch.size());
    nn::Tape tape;
    const Matrix logits = d_phi.network().forward(d_phi.inputs(batch.actions, batch.latents), tape);
    const auto q = clamped_sigmoid(logits.row(0));
    LossAndGradients out;
    Eigen::RowVectorXd raw(q.value.size());
    for (Eigen::Index i = 0; i < raw.size(); ++i) {
        const int t = batch.treatment[std::size_t(i)];
        out.loss -= t ? std::log(q.value[i]) : std::log(1.0 - q.value[i]);
        raw[i] = (q.value[i] - t) / n;
    }
    out.loss /= n;
    out.grads = d_phi.network().zero_gradients();
    d_phi.network().backward(tape, logit_gradient(q, raw), out.grads);
    return out;
}

double distillation_loss(const ImageDiscriminator& d_psi, const Eigen::RowVectorXd& targets, const Matrix& probs,
                         const Matrix& latents) {
    if (targets.size() == 0) throw InputError("distillation loss of an empty batch");
    if (targets.size() != latents.cols()) throw InputError("distillation targets are misaligned");
    const auto r = d_psi.probability(probs, latents);
    double total = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) total += kl_bernoulli(targets[i], r[i]);
    return total / double(r.size());
}

LossAndGradients distillation_gradients(const ImageDiscriminator& d_psi, const Eigen::RowVectorXd& targets,
                                        const Matrix& probs, const Matrix& latents) {
    if (targets.size() == 0) throw InputError("distillation loss of an empty batch");
    if (targets.size() != latents.cols()) throw InputError("distillation targets are misaligned");
    if (probs.rows() != d_psi.group_count() || latents.rows() != d_psi.latent_dim())
        throw InputError("image discriminator: input dimension mismatch");
    const double n = double(targets.size());
    nn::Tape tape;
    const Matrix logits = d_psi.network().forward(ImageDiscriminator::inputs(probs, latents), tape);
    const auto r = clamped_sigmoid(logits.row(0));
    LossAndGradients out;
    Eigen::RowVectorXd raw(r.value.size());
    for (Eigen::Index i = 0; i < raw.size(); ++i) {
        out.loss += kl_bernoulli(targets[i], r.value[i]);
        raw[i] = (r.value[i] - targets[i]) / n;
    }
    out.loss /= n;
    out.grads = d_psi.network().zero_gradients();
    d_psi.network().backward(tape, logit_gradient(r, raw), out.grads);
    return out;
}

double distillation_loss(const ImageDiscriminator& d_psi, const ActionDiscriminator& d_phi,
                         const TrainingBatch& batch) {
    batch.validate();
    return distillation_loss(d_psi, d_phi.probability(batch.actions, batch.latents), batch.probs, batch.latents);
}

LossAndGradients distillation_gradients(const ImageDiscriminator& d_psi, const ActionDiscriminator& d_phi,
                                        const TrainingBatch& batch) {
    batch.validate();
    return distillation_gradients(d_psi, d_phi.probability(batch.actions, batch.latents), batch.probs,
                                  batch.latents);
}

double generator_loss(const CompressionPolicy& f_theta, const ImageDiscriminator& d_psi, const Matrix& latents) {
    if (latents.cols() == 0) throw InputError("generator loss of an empty batch");
    const auto r = d_psi.probability(f_theta.probs(latents), latents);
    return -r.array().log().mean();
}

LossAndGradients generator_gradients(const CompressionPolicy& f_theta, const ImageDiscriminator& d_psi,
                                     const Matrix& latents) {
    if (latents.cols() == 0) throw InputError("generator loss of an empty batch");
    if (f_theta.group_count() != d_psi.group_count() || f_theta.latent_dim() != d_psi.latent_dim())
        throw InputError("policy and image discriminator disagree on dimensions");
    const double n = double(latents.cols());
    nn::Tape policy_tape;
    const Matrix p = f_theta.network().forward(latents, policy_tape);
    nn::Tape disc_tape;
    const Matrix logits = d_psi.network().forward(ImageDiscriminator::inputs(p, latents), disc_tape);
    const auto r = clamped_sigmoid(logits.row(0));
    LossAndGradients out;
    Eigen::RowVectorXd raw(r.value.size());
    for (Eigen::Index i = 0; i < raw.size(); ++i) {
        out.loss -= std::log(r.value[i]);
        raw[i] = -(1.0 - r.value[i]) / n;
    }
    out.loss /= n;
    // D_psi parameter gradients are computed and discarded; only dL/dp is used.
    nn::Gradients scratch = d_psi.network().zero_gradients();
    const Matrix grad_in = d_psi.network().backward(disc_tape, logit_gradient(r, raw), scratch);
    out.grads = f_theta.network().zero_gradients();
    f_theta.network().backward(policy_tape, grad_in.topRows(p.rows()), out.grads);
    return out;
}

double update_action_discriminator(ActionDiscriminator& d_phi, const TrainingBatch& batch, nn::Adam& opt) {
    auto lg = action_discriminator_gradients(d_phi, batch);
    if (!std::isfinite(lg.loss)) throw TrainingDivergenceError(0, "action discriminator loss is not finite");
    opt.step(d_phi.network(), lg.grads);
    return lg.loss;
}

double update_image_discriminator(ImageDiscriminator& d_psi, const ActionDiscriminator& d_phi,
                                  const TrainingBatch& batch, nn::Adam& opt) {
    auto lg = distillation_gradients(d_psi, d_phi, batch);
    if (!std::isfinite(lg.loss)) throw TrainingDivergenceError(0, "distillation loss is not finite");
    opt.step(d_psi.network(), lg.grads);
    return lg.loss;
}

double update_compression_policy(CompressionPolicy& f_theta, const ImageDiscriminator& d_psi,
                                 const TrainingBatch& batch, nn::Adam& opt) {
    auto lg = generator_gradients(f_theta, d_psi, batch.latents);
    if (!std::isfinite(lg.loss)) throw TrainingDivergenceError(0, "generator loss is not finite");
    opt.step(f_theta.network(), lg.grads);
    return lg.loss;
}

double action_discriminator_accuracy(const ActionDiscriminator& d_phi, const TrainingBatch& batch) {
    batch.validate();
    if (batch.empty()) throw InputError("accuracy of an empty batch");
    const auto q = d_phi.probability(batch.actions, batch.latents);
    int correct = 0;
    for (std::size_t i = 0; i < batch.size(); ++i) correct += (q[Eigen::Index(i)] > 0.5) == (batch.treatment[i] == 1);
    return double(correct) / double(batch.size());
}

Vector policy_probs(const CompressionPolicy& f_theta, const Vector& z) { return f_theta.probs(z); }

}  // namespace pico::adversary
