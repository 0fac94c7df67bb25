#include "pico/eval/experiment.hpp"

#include <algorithm>
#include <numeric>

#include "pico/baselines/nonadaptive.hpp"
#include "pico/core/bytes.hpp"
#include "pico/core/error.hpp"

namespace pico::eval {

std::string policy_checksum(const adversary::CompressionPolicy& policy) {
    return sha256_hex(policy.to_archive().serialize());
}

ExperimentOutputs run_simulated_experiment(const ExperimentInputs& in, const loop::ExperimentConfig& config,
                                           const ProgressFn& progress) {
    if (!in.corpus || !in.heldout || !in.codec || !in.user) throw ConfigError("experiment inputs are incomplete");
    config.validate();
    auto note = [&](const std::string& msg) {
        if (progress) progress(msg);
    };
    const auto& codec = *in.codec;
    check_disjoint(*in.heldout, in.corpus->ids);

    note("two-round protocol");
    loop::DatasetSource source(*in.corpus);
    auto protocol = loop::run_two_round_protocol(source, *in.corpus, *in.user, codec, config.protocol());

    note("perceptual baseline");
    baselines::PerceptualConfig pc;
    pc.lambda = config.training_lambda;
    pc.stage = config.stage;
    pc.seed = derive_seed(config.seed, 7);
    Rng pick(derive_seed(config.seed, 8));
    std::vector<std::size_t> idx(in.corpus->size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), pick);
    idx.resize(std::min(idx.size(), config.perceptual_images));
    std::sort(idx.begin(), idx.end());
    auto perceptual = baselines::train_perceptual_policy(in.corpus->subset(idx), codec, pc);

    SweepConfig sc;
    sc.lambdas = config.sweep_lambdas;
    sc.repeats = config.repeats;
    sc.mode = config.evaluation_mode;
    sc.seed = derive_seed(config.seed, 9);
    const std::vector<MethodUnderTest> methods{
        {"pico", protocol.models.policy.as_source(), policy_checksum(protocol.models.policy)},
        {"perceptual", perceptual.policy.as_source(), policy_checksum(perceptual.policy)},
        {"nonadaptive", baselines::uniform_random_source(codec.group_count()), "uniform-random"}};
    std::vector<SweepResult> sweeps;
    for (const auto& m : methods) {
        note("sweep " + m.name);
        sweeps.push_back(sweep_lambda(codec, m, *in.user, *in.heldout, sc, in.corpus->ids));
    }
    const double reference = reconstruction_agreement(codec, *in.user, *in.heldout, sc.mode, sc.seed);
    return ExperimentOutputs{std::move(protocol), std::move(perceptual), std::move(sweeps), reference};
}

}  // namespace pico::eval
