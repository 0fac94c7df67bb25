#include "pico/loop/experiment_config.hpp"

#include <fstream>

#include "pico/core/error.hpp"

namespace pico::loop {

void ExperimentConfig::validate() const {
    auto check_lambda = [](double l) {
        if (!(l >= 0.0 && l <= 1.0)) throw ConfigError("lambda " + std::to_string(l) + " outside [0,1]");
    };
    check_lambda(training_lambda);
    if (sweep_lambdas.empty()) throw ConfigError("sweep_lambdas must not be empty");
    for (double l : sweep_lambdas) check_lambda(l);
    if (repeats < 1) throw ConfigError("repeats must be positive");
    if (negatives_per_round == 0) throw ConfigError("negatives_per_round must be positive");
    if (corpus_positives == 0) throw ConfigError("corpus_positives must be positive");
    if (rounds < 1) throw ConfigError("rounds must be positive");
    if (heldout_size == 0) throw ConfigError("heldout_size must be positive");
    if (perceptual_images == 0) throw ConfigError("perceptual_images must be positive");
    stage.validate();
}

ProtocolConfig ExperimentConfig::protocol() const {
    ProtocolConfig p;
    p.rounds = rounds;
    p.negatives_per_round = negatives_per_round;
    p.corpus_positives = corpus_positives;
    p.lambda = training_lambda;
    p.collection_mode = collection_mode;
    p.training.stage = stage;
    p.training.seed = seed;
    p.seed = seed;
    return p;
}

nlohmann::json ExperimentConfig::to_json() const {
    return {{"schema", 1},
            {"training_lambda", training_lambda},
            {"sweep_lambdas", sweep_lambdas},
            {"repeats", repeats},
            {"negatives_per_round", negatives_per_round},
            {"corpus_positives", corpus_positives},
            {"rounds", rounds},
            {"heldout_size", heldout_size},
            {"stage", stage.to_json()},
            {"perceptual_images", perceptual_images},
            {"collection_mode", sim::to_string(collection_mode)},
            {"evaluation_mode", sim::to_string(evaluation_mode)},
            {"seed", seed}};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    try {
        ExperimentConfig c;
        if (j.contains("schema") && j.at("schema").get<int>() != 1)
            throw ConfigError("unsupported experiment config schema");
        c.training_lambda = j.value("training_lambda", c.training_lambda);
        c.sweep_lambdas = j.value("sweep_lambdas", c.sweep_lambdas);
        c.repeats = j.value("repeats", c.repeats);
        c.negatives_per_round = j.value("negatives_per_round", c.negatives_per_round);
        c.corpus_positives = j.value("corpus_positives", c.corpus_positives);
        c.rounds = j.value("rounds", c.rounds);
        c.heldout_size = j.value("heldout_size", c.heldout_size);
        if (j.contains("stage")) c.stage = StageConfig::from_json(j.at("stage"));
        c.perceptual_images = j.value("perceptual_images", c.perceptual_images);
        if (j.contains("collection_mode"))
            c.collection_mode = sim::action_mode_from_string(j.at("collection_mode").get<std::string>());
        if (j.contains("evaluation_mode"))
            c.evaluation_mode = sim::action_mode_from_string(j.at("evaluation_mode").get<std::string>());
        c.seed = j.value("seed", c.seed);
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed experiment config: ") + e.what());
    }
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read experiment config " + path.string());
    try {
        return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void ExperimentConfig::save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << to_json().dump(2) << '\n';
}

}  // namespace pico::loop
