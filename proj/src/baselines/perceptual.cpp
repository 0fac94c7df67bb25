#include "pico/baselines/perceptual.hpp"

#include "pico/core/error.hpp"

namespace pico::baselines {
namespace {

Matrix sigmoid(const Matrix& logits) { return (1.0 + (-logits.array()).exp()).inverse().matrix(); }

void check_inputs(const codec::CodecBundle& codec, const Matrix& latents, const Matrix& images) {
    if (latents.rows() != codec.prior.dim()) throw InputError("perceptual: latent dimension mismatch");
    if (images.rows() != codec.model->image_shape().size()) throw InputError("perceptual: image size mismatch");
    if (latents.cols() != images.cols()) throw InputError("perceptual: latents and images are misaligned");
    if (latents.cols() == 0) throw InputError("perceptual: empty batch");
}

}  // namespace

double perceptual_loss(const Matrix& originals, const Matrix& reconstructions) {
    if (originals.rows() != reconstructions.rows() || originals.cols() != reconstructions.cols())
        throw InputError("perceptual_loss: shape mismatch");
    if (originals.size() == 0) throw InputError("perceptual_loss: empty input");
    return (originals - reconstructions).cwiseAbs().mean();
}

Relaxation relax_latents(const codec::CodecBundle& codec, const Matrix& latents, const Matrix& probs, double lambda) {
    const auto& grouping = codec.grouping;
    const int d = grouping.group_count();
    if (probs.rows() != d || probs.cols() != latents.cols()) throw InputError("relax_latents: probs shape mismatch");
    Relaxation out{latents, Matrix::Zero(latents.rows(), latents.cols())};
    for (Eigen::Index b = 0; b < latents.cols(); ++b) {
        const Vector z = latents.col(b);
        const Vector p = probs.col(b);
        const auto mask = codec::select_mask(p, lambda, grouping);
        const auto features = mask.transmitted_features(grouping);
        const Vector base = codec::conditional_mean(codec.prior, z, features);
        for (int g = 0; g < d; ++g) {
            const int lo = grouping.begin(g), n = grouping.end(g) - lo;
            Vector m;
            if (!mask.transmit[std::size_t(g)]) {
                m = base.segment(lo, n);
            } else {
                auto without = features;
                for (int f = lo; f < lo + n; ++f) without[std::size_t(f)] = false;
                m = codec::conditional_mean(codec.prior, z, without).segment(lo, n);
            }
            out.delta.col(b).segment(lo, n) = m - z.segment(lo, n);
            out.latents.col(b).segment(lo, n) += p[g] * out.delta.col(b).segment(lo, n);
        }
    }
    return out;
}

double relaxed_perceptual_loss(const adversary::CompressionPolicy& policy, const codec::CodecBundle& codec,
                               const Matrix& latents, const Matrix& images, double lambda) {
    check_inputs(codec, latents, images);
    const auto relaxed = relax_latents(codec, latents, policy.probs(latents), lambda);
    return perceptual_loss(images, sigmoid(codec.model->decoder_logits().forward(relaxed.latents)));
}

adversary::LossAndGradients perceptual_gradients(const adversary::CompressionPolicy& policy,
                                                 const codec::CodecBundle& codec, const Matrix& latents,
                                                 const Matrix& images, double lambda) {
    check_inputs(codec, latents, images);
    nn::Tape policy_tape;
    const Matrix p = policy.network().forward(latents, policy_tape);
    const auto relaxed = relax_latents(codec, latents, p, lambda);
    const auto& decoder = codec.model->decoder_logits();
    nn::Tape decoder_tape;
    const Matrix x_hat = sigmoid(decoder.forward(relaxed.latents, decoder_tape));

    adversary::LossAndGradients out;
    out.loss = perceptual_loss(images, x_hat);
    const double scale = 1.0 / double(images.size());
    const Matrix grad_x = (x_hat - images).array().sign().matrix() * scale;
    const Matrix grad_logits = grad_x.cwiseProduct(x_hat.cwiseProduct((1.0 - x_hat.array()).matrix()));
    nn::Gradients scratch = decoder.zero_gradients();
    const Matrix grad_z = decoder.backward(decoder_tape, grad_logits, scratch);
    const Matrix contrib = grad_z.cwiseProduct(relaxed.delta);
    const auto& grouping = codec.grouping;
    Matrix grad_p(p.rows(), p.cols());
    for (int g = 0; g < grouping.group_count(); ++g)
        grad_p.row(g) = contrib.middleRows(grouping.begin(g), grouping.end(g) - grouping.begin(g)).colwise().sum();
    out.grads = policy.network().zero_gradients();
    policy.network().backward(policy_tape, grad_p, out.grads);
    return out;
}

PerceptualResult train_perceptual_policy(const Matrix& latents, const Matrix& images,
                                         const codec::CodecBundle& codec, const PerceptualConfig& config) {
    codec.validate();
    check_inputs(codec, latents, images);
    codec::transmit_count(config.lambda, codec.group_count());
    Rng rng(config.seed);
    auto policy = adversary::CompressionPolicy::create(codec.prior.dim(), codec.group_count(), rng, config.hidden);
    const auto [train, val] = loop::split_indices(std::size_t(latents.cols()), config.stage.validation_fraction, rng);
    auto cols = [](const Matrix& m, const std::vector<std::size_t>& idx) { return Matrix(m(Eigen::all, idx)); };
    auto report = loop::train_stage(
        "perceptual_policy", policy.network(),
        [&](const std::vector<std::size_t>& idx) {
            return perceptual_gradients(policy, codec, cols(latents, idx), cols(images, idx), config.lambda);
        },
        [&](const std::vector<std::size_t>& idx) {
            return relaxed_perceptual_loss(policy, codec, cols(latents, idx), cols(images, idx), config.lambda);
        },
        train, val, config.stage, rng);
    return PerceptualResult{std::move(policy), std::move(report)};
}

PerceptualResult train_perceptual_policy(const genmodel::ImageDataset& images, const codec::CodecBundle& codec,
                                         const PerceptualConfig& config) {
    images.validate();
    if (images.empty()) throw InputError("perceptual training needs images");
    const Matrix x = images.as_matrix();
    return train_perceptual_policy(codec.model->encode_batch(x), x, codec, config);
}

}  // namespace pico::baselines
