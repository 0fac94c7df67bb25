#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "pico/core/archive.hpp"
#include "pico/core/image.hpp"
#include "pico/core/rng.hpp"
#include "pico/genmodel/dataset.hpp"
#include "pico/nn/network.hpp"

namespace pico::sim {

enum class ActionMode { Sample, Argmax };

std::string to_string(ActionMode mode);
ActionMode action_mode_from_string(const std::string& name);

// Anything that picks an action id in [0, action_count()) after seeing an
// image. Implementations must be safe for concurrent act() calls.
class UserPolicy {
public:
    virtual ~UserPolicy() = default;
    virtual int action_count() const = 0;
    virtual int act(const Image& image, ActionMode mode, Rng& rng) const = 0;
};

// Classifier-backed stand-in for a human: a small conv net whose softmax is
// the action distribution.
class SimulatedUser final : public UserPolicy {
public:
    static constexpr const char* kArchiveKind = "pico.simulated_user";

    SimulatedUser(nn::Network classifier, ImageShape shape, int action_count, ActionMode mode, double temperature);
    static SimulatedUser create(ImageShape shape, int action_count, Rng& rng);

    int action_count() const override { return action_count_; }
    int act(const Image& image, ActionMode mode, Rng& rng) const override;
    int act(const Image& image, Rng& rng) const { return act(image, mode_, rng); }

    // Softmax(logits / temperature), one column per image.
    Matrix distribution_batch(const Matrix& images) const;
    Vector distribution(const Image& image) const;
    std::vector<int> argmax_batch(const Matrix& images) const;

    ActionMode mode() const { return mode_; }
    double temperature() const { return temperature_; }
    void set_mode(ActionMode mode) { mode_ = mode; }
    const nn::Network& classifier() const { return classifier_; }
    nn::Network& classifier() { return classifier_; }

    Archive to_archive() const;
    static SimulatedUser from_archive(const Archive& archive);
    void save(const std::filesystem::path& path) const { to_archive().save(path); }
    static SimulatedUser load(const std::filesystem::path& path) { return from_archive(Archive::load(path)); }

private:
    nn::Network classifier_;
    ImageShape shape_;
    int action_count_;
    ActionMode mode_;
    double temperature_;
};

// A user who ignores the stimulus.
class ConstantUser final : public UserPolicy {
public:
    ConstantUser(int action, int action_count) : action_(action), action_count_(action_count) {}
    int action_count() const override { return action_count_; }
    int act(const Image&, ActionMode, Rng&) const override { return action_; }

private:
    int action_;
    int action_count_;
};

struct SimUserConfig {
    int action_count = 0;  // 0: one more than the largest label
    int epochs = 3;
    int batch_size = 64;
    double learning_rate = 1e-3;
    double heldout_fraction = 0.1;
    ActionMode mode = ActionMode::Sample;
    double temperature = 1.0;
    std::uint64_t seed = 0;
};

struct TrainedSimUser {
    SimulatedUser user;
    double heldout_accuracy = 0.0;
    std::vector<double> train_loss;  // per epoch
};

TrainedSimUser train_sim_user(const genmodel::ImageDataset& labeled, const SimUserConfig& config);

// Argmax accuracy against dataset labels.
double label_accuracy(const SimulatedUser& user, const genmodel::ImageDataset& labeled);

// Fraction of aligned pairs on which the user acts identically. Throws
// InputError for empty or misaligned lists.
double action_agreement(const UserPolicy& user, const std::vector<Image>& originals,
                        const std::vector<Image>& compressed, ActionMode mode, Rng& rng);

}  // namespace pico::sim
