#pragma once

#include <vector>

#include "pico/codec/compress.hpp"
#include "pico/core/archive.hpp"
#include "pico/nn/network.hpp"

namespace pico::adversary {

// Discriminator outputs are clamped to [kClamp, 1 - kClamp] so every log in
// the losses stays finite.
inline constexpr double kClamp = 1e-7;

struct NetworkSizes {
    int discriminator_hidden = 256;
    int policy_hidden = 64;
};

// Sigmoid of a logit column, clamped; also reports which entries were clamped
// (their gradient is zero).
struct ClampedProbability {
    Eigen::RowVectorXd value;
    Eigen::Array<bool, 1, Eigen::Dynamic> active;
};
ClampedProbability clamped_sigmoid(const Eigen::RowVectorXd& logits);

// D_phi(a, z): probability that action a on the original with latent z was
// taken without compression. Actions enter one-hot.
class ActionDiscriminator {
public:
    static ActionDiscriminator create(int action_count, int latent_dim, Rng& rng, int hidden = 256);
    ActionDiscriminator(nn::Network net, int action_count, int latent_dim);

    Matrix inputs(const std::vector<int>& actions, const Matrix& latents) const;
    Eigen::RowVectorXd probability(const std::vector<int>& actions, const Matrix& latents) const;

    int action_count() const { return action_count_; }
    int latent_dim() const { return latent_dim_; }
    const nn::Network& network() const { return net_; }
    nn::Network& network() { return net_; }
    bool operator==(const ActionDiscriminator& o) const { return net_ == o.net_; }

private:
    nn::Network net_;
    int action_count_;
    int latent_dim_;
};

// D_psi(p, z): the action discriminator distilled onto mask probabilities.
class ImageDiscriminator {
public:
    static ImageDiscriminator create(int group_count, int latent_dim, Rng& rng, int hidden = 256);
    ImageDiscriminator(nn::Network net, int group_count, int latent_dim);

    static Matrix inputs(const Matrix& probs, const Matrix& latents);
    Eigen::RowVectorXd probability(const Matrix& probs, const Matrix& latents) const;

    int group_count() const { return group_count_; }
    int latent_dim() const { return latent_dim_; }
    const nn::Network& network() const { return net_; }
    nn::Network& network() { return net_; }
    bool operator==(const ImageDiscriminator& o) const { return net_ == o.net_; }

private:
    nn::Network net_;
    int group_count_;
    int latent_dim_;
};

// f_theta: latent -> per-group mask probabilities in (0,1). The output layer
// is a centered sigmoid, so probabilities cannot all collapse to 0 together.
class CompressionPolicy {
public:
    static CompressionPolicy create(int latent_dim, int group_count, Rng& rng, int hidden = 64);
    CompressionPolicy(nn::Network net, int latent_dim, int group_count);

    Matrix probs(const Matrix& latents) const;
    Vector probs(const Vector& z) const;
    codec::ProbabilitySource as_source() const;

    int latent_dim() const { return latent_dim_; }
    int group_count() const { return group_count_; }
    const nn::Network& network() const { return net_; }
    nn::Network& network() { return net_; }
    bool operator==(const CompressionPolicy& o) const { return net_ == o.net_; }

    Archive to_archive() const;
    static CompressionPolicy from_archive(const Archive& archive);

private:
    nn::Network net_;
    int latent_dim_;
    int group_count_;
};

// The three learned components trained together.
struct PicoModels {
    static constexpr const char* kArchiveKind = "pico.models";

    ActionDiscriminator action_discriminator;
    ImageDiscriminator image_discriminator;
    CompressionPolicy policy;

    static PicoModels create(int action_count, int latent_dim, int group_count, const NetworkSizes& sizes, Rng& rng);

    Archive to_archive() const;
    static PicoModels from_archive(const Archive& archive);
    void save(const std::filesystem::path& path) const { to_archive().save(path); }
    static PicoModels load(const std::filesystem::path& path) { return from_archive(Archive::load(path)); }
    bool operator==(const PicoModels& o) const {
        return action_discriminator == o.action_discriminator && image_discriminator == o.image_discriminator &&
               policy == o.policy;
    }
};

}  // namespace pico::adversary
