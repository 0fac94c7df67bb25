#include "pico/adversary/networks.hpp"

#include <algorithm>
#include <cmath>

#include "pico/core/error.hpp"

namespace pico::adversary {

ClampedProbability clamped_sigmoid(const Eigen::RowVectorXd& logits) {
    ClampedProbability out;
    out.value.resize(logits.size());
    out.active.resize(logits.size());
    for (Eigen::Index i = 0; i < logits.size(); ++i) {
        const double s = 1.0 / (1.0 + std::exp(-logits[i]));
        out.active[i] = s > kClamp && s < 1.0 - kClamp;
        out.value[i] = std::clamp(s, kClamp, 1.0 - kClamp);
    }
    return out;
}

ActionDiscriminator::ActionDiscriminator(nn::Network net, int action_count, int latent_dim)
    : net_(std::move(net)), action_count_(action_count), latent_dim_(latent_dim) {
    if (action_count_ < 2) throw ConfigError("action discriminator needs at least two actions");
    if (latent_dim_ < 1) throw ConfigError("action discriminator needs a positive latent dimension");
}

ActionDiscriminator ActionDiscriminator::create(int action_count, int latent_dim, Rng& rng, int hidden) {
    return ActionDiscriminator(nn::make_mlp({action_count + latent_dim, hidden, hidden, 1}, rng), action_count,
                               latent_dim);
}

Matrix ActionDiscriminator::inputs(const std::vector<int>& actions, const Matrix& latents) const {
    if (latents.rows() != latent_dim_) throw InputError("action discriminator: latent dimension mismatch");
    if (Eigen::Index(actions.size()) != latents.cols())
        throw InputError("action discriminator: actions and latents are misaligned");
    Matrix x = Matrix::Zero(action_count_ + latent_dim_, latents.cols());
    for (std::size_t i = 0; i < actions.size(); ++i) {
        const int a = actions[i];
        if (a < 0 || a >= action_count_)
            throw InputError("action " + std::to_string(a) + " outside [0, " + std::to_string(action_count_) + ")");
        x(a, Eigen::Index(i)) = 1.0;
    }
    x.bottomRows(latent_dim_) = latents;
    return x;
}

Eigen::RowVectorXd ActionDiscriminator::probability(const std::vector<int>& actions, const Matrix& latents) const {
    return clamped_sigmoid(net_.forward(inputs(actions, latents)).row(0)).value;
}

ImageDiscriminator::ImageDiscriminator(nn::Network net, int group_count, int latent_dim)
    : net_(std::move(net)), group_count_(group_count), latent_dim_(latent_dim) {
    if (group_count_ < 1 || latent_dim_ < 1) throw ConfigError("image discriminator needs positive dimensions");
}

ImageDiscriminator ImageDiscriminator::create(int group_count, int latent_dim, Rng& rng, int hidden) {
    return ImageDiscriminator(nn::make_mlp({group_count + latent_dim, hidden, hidden, 1}, rng), group_count,
                              latent_dim);
}

Matrix ImageDiscriminator::inputs(const Matrix& probs, const Matrix& latents) {
    if (probs.cols() != latents.cols()) throw InputError("image discriminator: probs and latents are misaligned");
    Matrix x(probs.rows() + latents.rows(), probs.cols());
    x.topRows(probs.rows()) = probs;
    x.bottomRows(latents.rows()) = latents;
    return x;
}

Eigen::RowVectorXd ImageDiscriminator::probability(const Matrix& probs, const Matrix& latents) const {
    if (probs.rows() != group_count_ || latents.rows() != latent_dim_)
        throw InputError("image discriminator: input dimension mismatch");
    return clamped_sigmoid(net_.forward(inputs(probs, latents)).row(0)).value;
}

CompressionPolicy::CompressionPolicy(nn::Network net, int latent_dim, int group_count)
    : net_(std::move(net)), latent_dim_(latent_dim), group_count_(group_count) {
    if (group_count_ < 1 || latent_dim_ < 1) throw ConfigError("compression policy needs positive dimensions");
}

CompressionPolicy CompressionPolicy::create(int latent_dim, int group_count, Rng& rng, int hidden) {
    nn::Network net = nn::make_mlp({latent_dim, hidden, hidden, group_count}, rng);
    net.emplace<nn::CenteredSigmoid>();
    return CompressionPolicy(std::move(net), latent_dim, group_count);
}

Matrix CompressionPolicy::probs(const Matrix& latents) const {
    if (latents.rows() != latent_dim_) throw InputError("compression policy: latent dimension mismatch");
    return net_.forward(latents);
}

Vector CompressionPolicy::probs(const Vector& z) const { return probs(Matrix(z)).col(0); }

codec::ProbabilitySource CompressionPolicy::as_source() const {
    auto self = std::make_shared<const CompressionPolicy>(*this);
    return [self](const Vector& z, Rng&) { return self->probs(z); };
}

Archive CompressionPolicy::to_archive() const {
    Archive a("pico.compression_policy");
    a.meta()["latent_dim"] = latent_dim_;
    a.meta()["group_count"] = group_count_;
    net_.save(a, "policy");
    return a;
}

CompressionPolicy CompressionPolicy::from_archive(const Archive& a) {
    a.expect_kind("pico.compression_policy");
    return CompressionPolicy(nn::Network::load(a, "policy"), a.meta().at("latent_dim").get<int>(),
                             a.meta().at("group_count").get<int>());
}

PicoModels PicoModels::create(int action_count, int latent_dim, int group_count, const NetworkSizes& sizes,
                              Rng& rng) {
    auto d_phi = ActionDiscriminator::create(action_count, latent_dim, rng, sizes.discriminator_hidden);
    auto d_psi = ImageDiscriminator::create(group_count, latent_dim, rng, sizes.discriminator_hidden);
    auto f = CompressionPolicy::create(latent_dim, group_count, rng, sizes.policy_hidden);
    return PicoModels{std::move(d_phi), std::move(d_psi), std::move(f)};
}

Archive PicoModels::to_archive() const {
    Archive a(kArchiveKind);
    a.meta()["action_count"] = action_discriminator.action_count();
    a.meta()["latent_dim"] = policy.latent_dim();
    a.meta()["group_count"] = policy.group_count();
    action_discriminator.network().save(a, "action_discriminator");
    image_discriminator.network().save(a, "image_discriminator");
    a.merge(policy.to_archive(), "policy/");
    return a;
}

PicoModels PicoModels::from_archive(const Archive& a) {
    a.expect_kind(kArchiveKind);
    const int k = a.meta().at("action_count").get<int>();
    const int dim = a.meta().at("latent_dim").get<int>();
    const int groups = a.meta().at("group_count").get<int>();
    return PicoModels{ActionDiscriminator(nn::Network::load(a, "action_discriminator"), k, dim),
                      ImageDiscriminator(nn::Network::load(a, "image_discriminator"), groups, dim),
                      CompressionPolicy::from_archive(a.extract("policy/", "pico.compression_policy"))};
}

}  // namespace pico::adversary
