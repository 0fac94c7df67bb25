#pragma once

#include <string>
#include <vector>

#include "pico/codec/compress.hpp"
#include "pico/genmodel/dataset.hpp"
#include "pico/sim/sim_user.hpp"

namespace pico::eval {

struct SweepPoint {
    double lambda = 0.0;
    double mean_bits = 0.0;
    double bits_per_dim = 0.0;  // mean bits / (w * h * c)
    double agreement = 0.0;
    double std_error = 0.0;  // across images of the per-image agreement rate
    std::size_t images = 0;
    int repeats = 0;
};

struct MethodUnderTest {
    std::string name;
    codec::ProbabilitySource probs;
    std::string checksum;  // identifies the policy parameters, may be empty
};

struct SweepConfig {
    std::vector<double> lambdas{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 1.0};
    int repeats = 5;
    sim::ActionMode mode = sim::ActionMode::Argmax;
    std::uint64_t seed = 0;
    int threads = 0;  // 0: hardware concurrency
};

struct SweepResult {
    std::string method;
    std::vector<SweepPoint> points;
    std::uint64_t seed = 0;
    std::string model_checksum;
    std::string policy_checksum;

    // Throws NotFoundError when lambda was not swept.
    const SweepPoint& at(double lambda) const;
};

// Throws EvaluationError when a held-out id also appears in training_ids.
void check_disjoint(const genmodel::ImageDataset& heldout, const std::vector<std::string>& training_ids);

// Compresses every held-out image `repeats` times per lambda and compares the
// user's action on each compression with its action on the original. Cells
// (image, lambda) use independent derived streams, so the result does not
// depend on the thread count.
SweepResult sweep_lambda(const codec::CodecBundle& codec, const MethodUnderTest& method, const sim::UserPolicy& user,
                         const genmodel::ImageDataset& heldout, const SweepConfig& config,
                         const std::vector<std::string>& training_ids = {});

// Agreement between act(x) and act(dec(enc(x))): the upper reference reached
// at lambda = 1.
double reconstruction_agreement(const codec::CodecBundle& codec, const sim::UserPolicy& user,
                                const genmodel::ImageDataset& heldout, sim::ActionMode mode, std::uint64_t seed);

// Mean agreement over the given lambdas.
double mean_agreement(const SweepResult& result, const std::vector<double>& lambdas);

}  // namespace pico::eval
