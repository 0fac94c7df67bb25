#pragma once

#include <filesystem>
#include <vector>

#include <json.hpp>

#include "pico/loop/training.hpp"

namespace pico::loop {

// Declarative description of a simulated experiment; CLI flags override
// individual fields.
struct ExperimentConfig {
    double training_lambda = 0.5;
    std::vector<double> sweep_lambdas{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 1.0};
    int repeats = 5;
    std::size_t negatives_per_round = 1000;
    std::size_t corpus_positives = 1000;
    int rounds = 2;
    std::size_t heldout_size = 100;
    StageConfig stage;
    std::size_t perceptual_images = 4000;
    sim::ActionMode collection_mode = sim::ActionMode::Sample;
    sim::ActionMode evaluation_mode = sim::ActionMode::Argmax;
    std::uint64_t seed = 0;

    // Throws ConfigError on non-positive counts or lambdas outside [0,1].
    void validate() const;
    ProtocolConfig protocol() const;

    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
};

}  // namespace pico::loop
