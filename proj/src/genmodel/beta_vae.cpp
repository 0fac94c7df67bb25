#include "pico/genmodel/beta_vae.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pico/core/bytes.hpp"
#include "pico/core/error.hpp"
#include "pico/nn/adam.hpp"

namespace pico::genmodel {
namespace {

constexpr double kLogVarLimit = 8.0;

// Sum over pixels of the Bernoulli cross-entropy with logits, per column.
Eigen::RowVectorXd bce_with_logits(const Matrix& logits, const Matrix& target) {
    const Eigen::ArrayXXd l = logits.array();
    const Eigen::ArrayXXd softplus = l.max(0.0) + (-l.abs()).exp().log1p();
    return (softplus - target.array() * l).colwise().sum().matrix();
}

Eigen::RowVectorXd kl_to_standard_normal(const Matrix& mean, const Matrix& logvar) {
    return (0.5 * (mean.array().square() + logvar.array().exp() - 1.0 - logvar.array())).colwise().sum().matrix();
}

Matrix sigmoid(const Matrix& x) { return (1.0 / (1.0 + (-x.array()).exp())).matrix(); }

}  // namespace

struct VaeTrainer {
    static void set_epochs(GenerativeModel& m, int epochs) { m.epochs_trained_ = epochs; }
    static nn::Network& encoder(GenerativeModel& m) { return m.encoder_; }
    static nn::Network& decoder(GenerativeModel& m) { return m.decoder_; }
};

GenerativeModel GenerativeModel::create(ImageShape shape, int latent_dim, double beta, Rng& rng) {
    if (latent_dim < 1) throw ConfigError("latent_dim must be >= 1");
    if (beta < 0.0) throw ConfigError("beta must be >= 0");
    if (shape.width % 4 != 0 || shape.height % 4 != 0 || shape.channels < 1)
        throw ConfigError("image width and height must be multiples of 4, got " + shape.to_string());
    const int c = shape.channels, h = shape.height, w = shape.width;
    const int flat = 32 * (h / 4) * (w / 4);

    GenerativeModel m;
    m.shape_ = shape;
    m.latent_dim_ = latent_dim;
    m.beta_ = beta;
    m.encoder_.emplace<nn::Conv2d>(nn::ConvGeometry{c, 16, 4, 2, 1, h, w}, rng)
        .emplace<nn::Relu>()
        .emplace<nn::Conv2d>(nn::ConvGeometry{16, 32, 4, 2, 1, h / 2, w / 2}, rng)
        .emplace<nn::Relu>()
        .emplace<nn::Dense>(flat, 256, rng)
        .emplace<nn::Relu>()
        .emplace<nn::Dense>(256, 2 * latent_dim, rng);
    m.decoder_.emplace<nn::Dense>(latent_dim, 256, rng)
        .emplace<nn::Relu>()
        .emplace<nn::Dense>(256, flat, rng)
        .emplace<nn::Relu>()
        .emplace<nn::ConvTranspose2d>(nn::ConvGeometry{32, 16, 4, 2, 1, h / 4, w / 4}, rng)
        .emplace<nn::Relu>()
        .emplace<nn::ConvTranspose2d>(nn::ConvGeometry{16, c, 4, 2, 1, h / 2, w / 2}, rng);
    return m;
}

Vector GenerativeModel::encode(const Image& x) const {
    if (x.shape != shape_)
        throw InputError("encode: image shape " + x.shape.to_string() + " does not match model " + shape_.to_string());
    return encode_batch(Matrix(x.pixels)).col(0);
}

Matrix GenerativeModel::encode_batch(const Matrix& images) const {
    if (images.rows() != shape_.size()) throw InputError("encode: batch rows do not match the image size");
    return encoder_.forward(images).topRows(latent_dim_);
}

Image GenerativeModel::decode(const Vector& z) const {
    return Image(shape_, decode_batch(Matrix(z)).col(0));
}

Matrix GenerativeModel::decode_batch(const Matrix& latents) const {
    if (latents.rows() != latent_dim_)
        throw InputError("decode: expected latent length " + std::to_string(latent_dim_) + ", got " +
                         std::to_string(latents.rows()));
    if (!latents.allFinite()) throw InputError("decode: latent has non-finite entries");
    return sigmoid(decoder_.forward(latents));
}

double GenerativeModel::evaluation_loss(const Matrix& images) const {
    const Matrix h = encoder_.forward(images);
    const Matrix mean = h.topRows(latent_dim_);
    const Matrix logvar = h.bottomRows(latent_dim_).cwiseMax(-kLogVarLimit).cwiseMin(kLogVarLimit);
    const Matrix logits = decoder_.forward(mean);
    return (bce_with_logits(logits, images) + beta_ * kl_to_standard_normal(mean, logvar)).mean();
}

Archive GenerativeModel::to_archive() const {
    Archive a(kArchiveKind);
    a.meta()["image_shape"] = {shape_.width, shape_.height, shape_.channels};
    a.meta()["latent_dim"] = latent_dim_;
    a.meta()["beta"] = beta_;
    a.meta()["epochs_trained"] = epochs_trained_;
    encoder_.save(a, "encoder");
    decoder_.save(a, "decoder");
    return a;
}

GenerativeModel GenerativeModel::from_archive(const Archive& a) {
    a.expect_kind(kArchiveKind);
    GenerativeModel m;
    const auto& s = a.meta().at("image_shape");
    m.shape_ = ImageShape{s[0].get<int>(), s[1].get<int>(), s[2].get<int>()};
    m.latent_dim_ = a.meta().at("latent_dim").get<int>();
    m.beta_ = a.meta().at("beta").get<double>();
    m.epochs_trained_ = a.meta().at("epochs_trained").get<int>();
    m.encoder_ = nn::Network::load(a, "encoder");
    m.decoder_ = nn::Network::load(a, "decoder");
    return m;
}

void GenerativeModel::save(const std::filesystem::path& path) const { to_archive().save(path); }

GenerativeModel GenerativeModel::load(const std::filesystem::path& path) { return from_archive(Archive::load(path)); }

std::string GenerativeModel::checksum() const { return sha256_hex(to_archive().serialize()); }

bool GenerativeModel::operator==(const GenerativeModel& o) const {
    return shape_ == o.shape_ && latent_dim_ == o.latent_dim_ && beta_ == o.beta_ && encoder_ == o.encoder_ &&
           decoder_ == o.decoder_;
}

TrainedGenerativeModel train_generative_model(const ImageDataset& data, const VaeConfig& config) {
    if (data.empty()) throw ConfigError("train_generative_model: dataset is empty");
    data.validate();
    if (config.epochs < 0 || config.batch_size < 1) throw ConfigError("epochs must be >= 0 and batch_size >= 1");

    Rng rng(config.seed);
    GenerativeModel model = GenerativeModel::create(data.shape, config.latent_dim, config.beta, rng);
    auto [train, heldout] = split_dataset(data, data.size() >= 2 ? config.heldout_fraction : 0.0,
                                          derive_seed(config.seed, 1));
    const Matrix train_x = train.as_matrix();
    const Matrix heldout_x = heldout.empty() ? train_x : heldout.as_matrix();

    TrainedGenerativeModel out{model, {}};
    out.report.initial_heldout_loss = model.evaluation_loss(heldout_x);
    out.report.final_heldout_loss = out.report.initial_heldout_loss;
    if (config.epochs == 0) return out;

    nn::Network& enc = VaeTrainer::encoder(model);
    nn::Network& dec = VaeTrainer::decoder(model);
    const nn::AdamConfig adam_cfg{config.learning_rate};
    nn::Adam enc_opt(adam_cfg, enc), dec_opt(adam_cfg, dec);
    const int L = config.latent_dim;
    const Eigen::Index n = train_x.cols();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (Eigen::Index start = 0; start < n; start += config.batch_size) {
            const Eigen::Index b = std::min<Eigen::Index>(config.batch_size, n - start);
            Matrix x(train_x.rows(), b);
            for (Eigen::Index j = 0; j < b; ++j) x.col(j) = train_x.col(order[std::size_t(start + j)]);

            nn::Tape enc_tape, dec_tape;
            const Matrix h = enc.forward(x, enc_tape);
            const Matrix mean = h.topRows(L);
            const Matrix raw_logvar = h.bottomRows(L);
            const Matrix logvar = raw_logvar.cwiseMax(-kLogVarLimit).cwiseMin(kLogVarLimit);
            const Matrix stddev = (0.5 * logvar.array()).exp().matrix();
            Matrix eps(L, b);
            std::normal_distribution<double> normal(0.0, 1.0);
            for (Eigen::Index j = 0; j < b; ++j)
                for (int i = 0; i < L; ++i) eps(i, j) = normal(rng);
            const Matrix z = mean + (stddev.array() * eps.array()).matrix();
            const Matrix logits = dec.forward(z, dec_tape);

            const double loss =
                (bce_with_logits(logits, x) + config.beta * kl_to_standard_normal(mean, logvar)).mean();
            if (!std::isfinite(loss)) throw TrainingDivergenceError(epoch, "non-finite beta-VAE loss");
            epoch_loss += loss * double(b);

            const double inv_b = 1.0 / double(b);
            const Matrix grad_logits = (sigmoid(logits) - x) * inv_b;
            auto dec_grads = dec.zero_gradients();
            const Matrix grad_z = dec.backward(dec_tape, grad_logits, dec_grads);

            Matrix grad_h(2 * L, b);
            grad_h.topRows(L) = grad_z + config.beta * inv_b * mean;
            Matrix grad_logvar = (grad_z.array() * eps.array() * 0.5 * stddev.array() +
                                  config.beta * inv_b * 0.5 * (logvar.array().exp() - 1.0))
                                     .matrix();
            grad_logvar = (raw_logvar.array().abs() < kLogVarLimit).select(grad_logvar, 0.0);
            grad_h.bottomRows(L) = grad_logvar;
            auto enc_grads = enc.zero_gradients();
            enc.backward(enc_tape, grad_h, enc_grads);

            dec_opt.step(dec, dec_grads);
            enc_opt.step(enc, enc_grads);
        }
        const double heldout_loss = model.evaluation_loss(heldout_x);
        if (!std::isfinite(heldout_loss)) throw TrainingDivergenceError(epoch, "non-finite held-out loss");
        out.report.train_loss.push_back(epoch_loss / double(n));
        out.report.heldout_loss.push_back(heldout_loss);
        out.report.final_heldout_loss = heldout_loss;
        VaeTrainer::set_epochs(model, epoch);
    }
    out.model = std::move(model);
    return out;
}

}  // namespace pico::genmodel
