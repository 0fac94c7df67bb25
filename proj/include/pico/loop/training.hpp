#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pico/adversary/losses.hpp"
#include "pico/genmodel/dataset.hpp"
#include "pico/loop/collect.hpp"

namespace pico::loop {

// "Train to convergence": at most max_epochs, stopping once the validation
// loss has not improved for `patience` epochs; the best parameters are kept.
struct StageConfig {
    int max_epochs = 200;
    int patience = 20;
    double validation_fraction = 0.1;
    int batch_size = 64;
    double learning_rate = 1e-3;

    void validate() const;
    nlohmann::json to_json() const;
    static StageConfig from_json(const nlohmann::json& j);
};

struct TrainingConfig {
    StageConfig stage;
    std::uint64_t seed = 0;
};

struct StageReport {
    std::string name;
    int epochs_run = 0;
    int best_epoch = 0;
    double best_validation_loss = 0.0;
    std::vector<double> train_curve;
    std::vector<double> validation_curve;
};

struct TrainingReport {
    std::vector<StageReport> stages;
    double action_discriminator_accuracy = 0.0;  // on the validation split
    std::size_t records = 0;
    std::size_t positives = 0;
    std::size_t negatives = 0;

    const StageReport& stage(const std::string& name) const;
    // Columns step,loss_name,value; one row per (stage, split, epoch).
    void write_csv(const std::filesystem::path& path) const;
    nlohmann::json summary() const;
};

// Minibatch Adam with early stopping on a held-out split. `gradients` returns
// the loss and parameter gradients of `net` on the given index set;
// `validation_loss` scores an index set without touching parameters.
StageReport train_stage(const std::string& name, nn::Network& net,
                        const std::function<adversary::LossAndGradients(const std::vector<std::size_t>&)>& gradients,
                        const std::function<double(const std::vector<std::size_t>&)>& validation_loss,
                        const std::vector<std::size_t>& train, const std::vector<std::size_t>& validation,
                        const StageConfig& config, Rng& rng);

// Shuffled split into (train, validation); validation gets
// round(fraction * n) items, at least one when n >= 2.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, double fraction,
                                                                            Rng& rng);

// D_phi on all records, then D_psi distilled from it on the T = 0 records,
// then f_theta against D_psi on every record's latent.
TrainingReport run_batch_training(const std::vector<InteractionRecord>& records, const TrainingConfig& config,
                                  adversary::PicoModels& models);

struct OnlineConfig {
    int steps = 1000;
    int batch_size = 64;
    double lambda = 0.5;
    double learning_rate = 1e-3;
    sim::ActionMode mode = sim::ActionMode::Sample;
    std::uint64_t seed = 0;
};

struct OnlineResult {
    std::vector<InteractionRecord> records;
    std::vector<double> action_loss;
    std::vector<double> distillation_loss;
    std::vector<double> generator_loss;
};

// Interleaves one interaction with one gradient step on each component.
OnlineResult run_online_training(ImageSource& source, const sim::UserPolicy& user, const codec::CodecBundle& codec,
                                 const OnlineConfig& config, adversary::PicoModels& models);

struct ProtocolConfig {
    int rounds = 2;
    std::size_t negatives_per_round = 1000;
    std::size_t corpus_positives = 1000;  // injected once, in round 1
    double lambda = 0.5;
    sim::ActionMode collection_mode = sim::ActionMode::Sample;
    TrainingConfig training;
    adversary::NetworkSizes sizes;
    std::uint64_t seed = 0;
};

struct RoundReport {
    int round = 0;
    std::size_t collected = 0;
    TrainingReport training;
};

struct ProtocolResult {
    adversary::PicoModels models;
    std::vector<adversary::PicoModels> round_models;
    std::vector<RoundReport> rounds;
    std::vector<InteractionRecord> records;
};

// Round 1 collects under uniform-random mask probabilities, later rounds under
// the previous round's f_theta; each round trains fresh models on everything
// collected so far.
ProtocolResult run_two_round_protocol(ImageSource& source, const genmodel::ImageDataset& positives_corpus,
                                      const sim::UserPolicy& user, const codec::CodecBundle& codec,
                                      const ProtocolConfig& config);

}  // namespace pico::loop
