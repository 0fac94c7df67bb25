#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pico/core/archive.hpp"
#include "pico/core/rng.hpp"
#include "pico/genmodel/dataset.hpp"
#include "pico/nn/network.hpp"

namespace pico::genmodel {

struct VaeConfig {
    int latent_dim = 10;
    double beta = 4.0;
    int epochs = 10;
    int batch_size = 64;
    double learning_rate = 1e-3;
    double heldout_fraction = 0.1;
    std::uint64_t seed = 0;
};

// Task-agnostic beta-VAE backbone. Encoder: two stride-2 convolutions and a
// dense layer to (mean, log-variance). Decoder mirrors it with transposed
// convolutions; its sigmoid output keeps pixels inside [0,1]. Width and
// height must be multiples of 4.
class GenerativeModel {
public:
    static constexpr const char* kArchiveKind = "pico.generative_model";

    static GenerativeModel create(ImageShape shape, int latent_dim, double beta, Rng& rng);

    ImageShape image_shape() const { return shape_; }
    int latent_dim() const { return latent_dim_; }
    double beta() const { return beta_; }
    int epochs_trained() const { return epochs_trained_; }

    // Posterior mean; deterministic.
    Vector encode(const Image& x) const;
    Matrix encode_batch(const Matrix& images) const;
    Image decode(const Vector& z) const;
    Matrix decode_batch(const Matrix& latents) const;

    // Deterministic evaluation loss per image: reconstruction cross-entropy at
    // the posterior mean plus beta * KL(q(z|x) || N(0, I)).
    double evaluation_loss(const Matrix& images) const;

    const nn::Network& encoder() const { return encoder_; }
    // Produces logits; decode() applies the sigmoid.
    const nn::Network& decoder_logits() const { return decoder_; }

    Archive to_archive() const;
    static GenerativeModel from_archive(const Archive& archive);
    void save(const std::filesystem::path& path) const;
    static GenerativeModel load(const std::filesystem::path& path);
    std::string checksum() const;

    bool operator==(const GenerativeModel& other) const;

private:
    friend struct VaeTrainer;

    ImageShape shape_;
    int latent_dim_ = 0;
    double beta_ = 0.0;
    int epochs_trained_ = 0;
    nn::Network encoder_;
    nn::Network decoder_;
};

struct VaeTrainingReport {
    double initial_heldout_loss = 0.0;
    double final_heldout_loss = 0.0;
    std::vector<double> train_loss;    // per epoch
    std::vector<double> heldout_loss;  // per epoch
};

struct TrainedGenerativeModel {
    GenerativeModel model;
    VaeTrainingReport report;
};

// Throws ConfigError for an empty dataset or invalid hyperparameters and
// TrainingDivergenceError if a loss becomes non-finite.
TrainedGenerativeModel train_generative_model(const ImageDataset& data, const VaeConfig& config);

}  // namespace pico::genmodel
