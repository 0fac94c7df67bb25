#include "pico/sim/sim_user.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pico/core/error.hpp"
#include "pico/nn/adam.hpp"

namespace pico::sim {
namespace {

Matrix softmax_columns(const Matrix& logits) {
    Matrix shifted = logits.rowwise() - logits.colwise().maxCoeff();
    Matrix e = shifted.array().exp().matrix();
    return e.array().rowwise() / e.colwise().sum().array();
}

int sample_categorical(const Eigen::Ref<const Vector>& probs, Rng& rng) {
    const double u = uniform01(rng);
    double acc = 0.0;
    for (Eigen::Index k = 0; k < probs.size(); ++k) {
        acc += probs[k];
        if (u < acc) return int(k);
    }
    return int(probs.size()) - 1;
}

int argmax(const Eigen::Ref<const Vector>& v) {
    Eigen::Index best = 0;
    v.maxCoeff(&best);
    return int(best);
}

}  // namespace

std::string to_string(ActionMode mode) { return mode == ActionMode::Sample ? "sample" : "argmax"; }

ActionMode action_mode_from_string(const std::string& name) {
    if (name == "sample") return ActionMode::Sample;
    if (name == "argmax") return ActionMode::Argmax;
    throw ConfigError("unknown action mode '" + name + "'");
}

SimulatedUser::SimulatedUser(nn::Network classifier, ImageShape shape, int action_count, ActionMode mode,
                             double temperature)
    : classifier_(std::move(classifier)),
      shape_(shape),
      action_count_(action_count),
      mode_(mode),
      temperature_(temperature) {
    if (action_count_ < 1) throw ConfigError("simulated user needs at least one action");
    if (!(temperature_ > 0.0)) throw ConfigError("temperature must be positive");
}

SimulatedUser SimulatedUser::create(ImageShape shape, int action_count, Rng& rng) {
    if (shape.width % 4 != 0 || shape.height % 4 != 0)
        throw ConfigError("classifier needs width and height divisible by 4, got " + shape.to_string());
    const int h = shape.height, w = shape.width;
    nn::Network net;
    net.emplace<nn::Conv2d>(nn::ConvGeometry{shape.channels, 8, 5, 2, 2, h, w}, rng)
        .emplace<nn::Relu>()
        .emplace<nn::Conv2d>(nn::ConvGeometry{8, 16, 5, 2, 2, h / 2, w / 2}, rng)
        .emplace<nn::Relu>()
        .emplace<nn::Dense>(16 * (h / 4) * (w / 4), 128, rng)
        .emplace<nn::Relu>()
        .emplace<nn::Dense>(128, action_count, rng);
    return SimulatedUser(std::move(net), shape, action_count, ActionMode::Sample, 1.0);
}

Matrix SimulatedUser::distribution_batch(const Matrix& images) const {
    if (images.rows() != shape_.size()) throw InputError("simulated user: image size does not match " + shape_.to_string());
    return softmax_columns(classifier_.forward(images) / temperature_);
}

Vector SimulatedUser::distribution(const Image& image) const {
    if (image.shape != shape_) throw InputError("simulated user: image shape mismatch");
    return distribution_batch(Matrix(image.pixels)).col(0);
}

std::vector<int> SimulatedUser::argmax_batch(const Matrix& images) const {
    const Matrix logits = classifier_.forward(images);
    std::vector<int> out(std::size_t(logits.cols()));
    for (Eigen::Index j = 0; j < logits.cols(); ++j) out[std::size_t(j)] = argmax(logits.col(j));
    return out;
}

int SimulatedUser::act(const Image& image, ActionMode mode, Rng& rng) const {
    const Vector p = distribution(image);
    return mode == ActionMode::Argmax ? argmax(p) : sample_categorical(p, rng);
}

Archive SimulatedUser::to_archive() const {
    Archive a(kArchiveKind);
    a.meta()["image_shape"] = {shape_.width, shape_.height, shape_.channels};
    a.meta()["action_count"] = action_count_;
    a.meta()["mode"] = to_string(mode_);
    a.meta()["temperature"] = temperature_;
    classifier_.save(a, "classifier");
    return a;
}

SimulatedUser SimulatedUser::from_archive(const Archive& a) {
    a.expect_kind(kArchiveKind);
    const auto& s = a.meta().at("image_shape");
    return SimulatedUser(nn::Network::load(a, "classifier"), ImageShape{s[0].get<int>(), s[1].get<int>(), s[2].get<int>()},
                         a.meta().at("action_count").get<int>(),
                         action_mode_from_string(a.meta().at("mode").get<std::string>()),
                         a.meta().at("temperature").get<double>());
}

TrainedSimUser train_sim_user(const genmodel::ImageDataset& labeled, const SimUserConfig& config) {
    if (labeled.empty()) throw ConfigError("train_sim_user: dataset is empty");
    if (!labeled.has_labels()) throw ConfigError("train_sim_user: dataset has no labels");
    labeled.validate();
    const int max_label = *std::max_element(labeled.labels.begin(), labeled.labels.end());
    if (*std::min_element(labeled.labels.begin(), labeled.labels.end()) < 0) throw ConfigError("labels must be >= 0");
    const int k = config.action_count > 0 ? config.action_count : max_label + 1;
    if (max_label >= k) throw ConfigError("label " + std::to_string(max_label) + " outside the action set");

    Rng rng(config.seed);
    SimulatedUser user = SimulatedUser::create(labeled.shape, k, rng);
    auto [train, heldout] = split_dataset(labeled, labeled.size() >= 2 ? config.heldout_fraction : 0.0,
                                          derive_seed(config.seed, 1));
    const Matrix x = train.as_matrix();
    nn::Network& net = user.classifier();
    nn::Adam opt(nn::AdamConfig{config.learning_rate}, net);
    TrainedSimUser out{user, 0.0, {}};

    std::vector<Eigen::Index> order(std::size_t(x.cols()));
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double total = 0.0;
        for (Eigen::Index start = 0; start < x.cols(); start += config.batch_size) {
            const Eigen::Index b = std::min<Eigen::Index>(config.batch_size, x.cols() - start);
            Matrix batch(x.rows(), b);
            Matrix onehot = Matrix::Zero(k, b);
            for (Eigen::Index j = 0; j < b; ++j) {
                const auto idx = order[std::size_t(start + j)];
                batch.col(j) = x.col(idx);
                onehot(train.labels[std::size_t(idx)], j) = 1.0;
            }
            nn::Tape tape;
            const Matrix probs = softmax_columns(net.forward(batch, tape));
            const double loss = -(onehot.array() * probs.array().max(1e-300).log()).sum() / double(b);
            if (!std::isfinite(loss)) throw TrainingDivergenceError(epoch, "non-finite classifier loss");
            total += loss * double(b);
            auto grads = net.zero_gradients();
            net.backward(tape, (probs - onehot) / double(b), grads);
            opt.step(net, grads);
        }
        out.train_loss.push_back(total / double(x.cols()));
    }
    out.user = SimulatedUser(user.classifier(), labeled.shape, k, config.mode, config.temperature);
    out.heldout_accuracy = label_accuracy(out.user, heldout.empty() ? train : heldout);
    return out;
}

double label_accuracy(const SimulatedUser& user, const genmodel::ImageDataset& labeled) {
    if (labeled.empty() || !labeled.has_labels()) throw InputError("label_accuracy needs a labeled, nonempty dataset");
    std::size_t correct = 0;
    constexpr std::size_t kChunk = 512;
    for (std::size_t start = 0; start < labeled.size(); start += kChunk) {
        const std::size_t n = std::min(kChunk, labeled.size() - start);
        Matrix batch(labeled.shape.size(), Eigen::Index(n));
        for (std::size_t j = 0; j < n; ++j) batch.col(Eigen::Index(j)) = labeled.images[start + j].pixels;
        const auto pred = user.argmax_batch(batch);
        for (std::size_t j = 0; j < n; ++j) correct += pred[j] == labeled.labels[start + j] ? 1 : 0;
    }
    return double(correct) / double(labeled.size());
}

double action_agreement(const UserPolicy& user, const std::vector<Image>& originals,
                        const std::vector<Image>& compressed, ActionMode mode, Rng& rng) {
    if (originals.empty()) throw InputError("action_agreement: no stimuli");
    if (originals.size() != compressed.size())
        throw InputError("action_agreement: " + std::to_string(originals.size()) + " originals but " +
                         std::to_string(compressed.size()) + " compressed images");
    std::size_t same = 0;
    for (std::size_t i = 0; i < originals.size(); ++i)
        same += user.act(originals[i], mode, rng) == user.act(compressed[i], mode, rng) ? 1 : 0;
    return double(same) / double(originals.size());
}

}  // namespace pico::sim
