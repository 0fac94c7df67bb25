#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pico/baselines/perceptual.hpp"
#include "pico/eval/sweep.hpp"
#include "pico/loop/experiment_config.hpp"

namespace pico::eval {

struct ExperimentInputs {
    const genmodel::ImageDataset* corpus = nullptr;   // labeled training images
    const genmodel::ImageDataset* heldout = nullptr;  // disjoint evaluation images
    const codec::CodecBundle* codec = nullptr;
    const sim::UserPolicy* user = nullptr;
};

struct ExperimentOutputs {
    loop::ProtocolResult protocol;
    baselines::PerceptualResult perceptual;
    std::vector<SweepResult> sweeps;  // pico, perceptual, nonadaptive
    double reference_agreement = 0.0;
};

using ProgressFn = std::function<void(const std::string&)>;

// Two-round protocol, perceptual baseline and lambda sweeps of all three
// methods on the held-out set.
ExperimentOutputs run_simulated_experiment(const ExperimentInputs& inputs, const loop::ExperimentConfig& config,
                                           const ProgressFn& progress = {});

// sha256 of a policy network's serialized parameters.
std::string policy_checksum(const adversary::CompressionPolicy& policy);

}  // namespace pico::eval
