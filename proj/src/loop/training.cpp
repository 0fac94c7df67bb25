#include "pico/loop/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "pico/baselines/nonadaptive.hpp"
#include "pico/core/error.hpp"

namespace pico::loop {
namespace {

Matrix columns(const Matrix& m, const std::vector<std::size_t>& idx) { return m(Eigen::all, idx); }

Eigen::RowVectorXd entries(const Eigen::RowVectorXd& v, const std::vector<std::size_t>& idx) {
    Eigen::RowVectorXd out(Eigen::Index(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out[Eigen::Index(i)] = v[Eigen::Index(idx[i])];
    return out;
}

std::vector<std::size_t> with_treatment(const adversary::TrainingBatch& batch, const std::vector<std::size_t>& idx,
                                        int t) {
    std::vector<std::size_t> out;
    for (std::size_t i : idx)
        if (batch.treatment[i] == t) out.push_back(i);
    return out;
}

}  // namespace

void StageConfig::validate() const {
    if (max_epochs < 0) throw ConfigError("max_epochs must be non-negative");
    if (patience < 1) throw ConfigError("patience must be positive");
    if (batch_size < 1) throw ConfigError("batch_size must be positive");
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
        throw ConfigError("validation_fraction must lie in (0,1)");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
}

nlohmann::json StageConfig::to_json() const {
    return {{"max_epochs", max_epochs},
            {"patience", patience},
            {"validation_fraction", validation_fraction},
            {"batch_size", batch_size},
            {"learning_rate", learning_rate}};
}

StageConfig StageConfig::from_json(const nlohmann::json& j) {
    StageConfig c;
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.patience = j.value("patience", c.patience);
    c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    return c;
}

const StageReport& TrainingReport::stage(const std::string& name) const {
    for (const auto& s : stages)
        if (s.name == name) return s;
    throw NotFoundError("no training stage '" + name + "'");
}

void TrainingReport::write_csv(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out.precision(17);
    out << "step,loss_name,value\n";
    for (const auto& s : stages) {
        for (std::size_t e = 0; e < s.train_curve.size(); ++e)
            out << e + 1 << ',' << s.name << "/train," << s.train_curve[e] << '\n';
        for (std::size_t e = 0; e < s.validation_curve.size(); ++e)
            out << e + 1 << ',' << s.name << "/validation," << s.validation_curve[e] << '\n';
    }
}

nlohmann::json TrainingReport::summary() const {
    nlohmann::json stages_json = nlohmann::json::array();
    for (const auto& s : stages)
        stages_json.push_back({{"name", s.name},
                               {"epochs_run", s.epochs_run},
                               {"best_epoch", s.best_epoch},
                               {"best_validation_loss", s.best_validation_loss}});
    return {{"records", records},
            {"positives", positives},
            {"negatives", negatives},
            {"action_discriminator_accuracy", action_discriminator_accuracy},
            {"stages", stages_json}};
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, double fraction,
                                                                            Rng& rng) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t n_val = std::size_t(std::llround(fraction * double(n)));
    if (n >= 2) n_val = std::clamp<std::size_t>(n_val, 1, n - 1);
    else n_val = 0;
    std::vector<std::size_t> val(order.begin(), order.begin() + std::ptrdiff_t(n_val));
    std::vector<std::size_t> train(order.begin() + std::ptrdiff_t(n_val), order.end());
    std::sort(val.begin(), val.end());
    std::sort(train.begin(), train.end());
    return {train, val};
}

StageReport train_stage(const std::string& name, nn::Network& net,
                        const std::function<adversary::LossAndGradients(const std::vector<std::size_t>&)>& gradients,
                        const std::function<double(const std::vector<std::size_t>&)>& validation_loss,
                        const std::vector<std::size_t>& train, const std::vector<std::size_t>& validation,
                        const StageConfig& config, Rng& rng) {
    config.validate();
    if (train.empty()) throw TrainingError(name + ": empty training split");
    const auto& val = validation.empty() ? train : validation;
    StageReport report;
    report.name = name;
    nn::Adam opt({config.learning_rate}, net);
    nn::Network best = net;
    report.best_validation_loss = validation_loss(val);
    std::vector<std::size_t> order = train;
    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double total = 0.0;
        for (std::size_t start = 0; start < order.size(); start += std::size_t(config.batch_size)) {
            const std::size_t stop = std::min(order.size(), start + std::size_t(config.batch_size));
            const std::vector<std::size_t> chunk(order.begin() + std::ptrdiff_t(start),
                                                 order.begin() + std::ptrdiff_t(stop));
            auto lg = gradients(chunk);
            if (!std::isfinite(lg.loss)) throw TrainingDivergenceError(epoch, name + " loss is not finite");
            opt.step(net, lg.grads);
            total += lg.loss * double(chunk.size());
        }
        report.train_curve.push_back(total / double(order.size()));
        const double v = validation_loss(val);
        if (!std::isfinite(v)) throw TrainingDivergenceError(epoch, name + " validation loss is not finite");
        report.validation_curve.push_back(v);
        report.epochs_run = epoch;
        if (v < report.best_validation_loss) {
            report.best_validation_loss = v;
            report.best_epoch = epoch;
            best = net;
        } else if (epoch - report.best_epoch >= config.patience) {
            break;
        }
    }
    net = std::move(best);
    return report;
}

TrainingReport run_batch_training(const std::vector<InteractionRecord>& records, const TrainingConfig& config,
                                  adversary::PicoModels& models) {
    config.stage.validate();
    if (records.empty()) throw TrainingError("batch training needs records");
    TrainingReport report;
    report.records = records.size();
    for (const auto& r : records) {
        r.validate(models.action_discriminator.action_count());
        (r.treatment == 1 ? report.positives : report.negatives) += 1;
    }
    if (report.positives == 0 || report.negatives == 0)
        throw TrainingError("batch training needs both T=0 and T=1 records (got " + std::to_string(report.positives) +
                            " positives, " + std::to_string(report.negatives) + " negatives)");
    const auto batch = to_batch(records);
    if (batch.latents.rows() != models.policy.latent_dim() || batch.probs.rows() != models.policy.group_count())
        throw InputError("records do not match the model dimensions");

    Rng rng(derive_seed(config.seed, 1));
    const auto [train, val] = split_indices(batch.size(), config.stage.validation_fraction, rng);

    auto& d_phi = models.action_discriminator;
    report.stages.push_back(train_stage(
        "action_discriminator", d_phi.network(),
        [&](const std::vector<std::size_t>& idx) {
            return adversary::action_discriminator_gradients(d_phi, batch.subset(idx));
        },
        [&](const std::vector<std::size_t>& idx) {
            return adversary::action_discriminator_loss(d_phi, batch.subset(idx));
        },
        train, val, config.stage, rng));
    report.action_discriminator_accuracy = adversary::action_discriminator_accuracy(d_phi, batch.subset(val));

    const Eigen::RowVectorXd targets = d_phi.probability(batch.actions, batch.latents);
    auto& d_psi = models.image_discriminator;
    report.stages.push_back(train_stage(
        "image_discriminator", d_psi.network(),
        [&](const std::vector<std::size_t>& idx) {
            return adversary::distillation_gradients(d_psi, entries(targets, idx), columns(batch.probs, idx),
                                                     columns(batch.latents, idx));
        },
        [&](const std::vector<std::size_t>& idx) {
            return adversary::distillation_loss(d_psi, entries(targets, idx), columns(batch.probs, idx),
                                                columns(batch.latents, idx));
        },
        with_treatment(batch, train, 0), with_treatment(batch, val, 0), config.stage, rng));

    auto& f = models.policy;
    report.stages.push_back(train_stage(
        "policy", f.network(),
        [&](const std::vector<std::size_t>& idx) {
            return adversary::generator_gradients(f, d_psi, columns(batch.latents, idx));
        },
        [&](const std::vector<std::size_t>& idx) {
            return adversary::generator_loss(f, d_psi, columns(batch.latents, idx));
        },
        train, val, config.stage, rng));
    return report;
}

OnlineResult run_online_training(ImageSource& source, const sim::UserPolicy& user, const codec::CodecBundle& codec,
                                 const OnlineConfig& config, adversary::PicoModels& models) {
    if (config.steps < 1 || config.batch_size < 1) throw ConfigError("online training needs positive steps and batch size");
    Rng rng(config.seed);
    nn::Adam opt_phi({config.learning_rate}, models.action_discriminator.network());
    nn::Adam opt_psi({config.learning_rate}, models.image_discriminator.network());
    nn::Adam opt_f({config.learning_rate}, models.policy.network());
    CollectContext ctx;
    ctx.codec = &codec;
    ctx.policy = [&models](const Vector& z, Rng&) { return models.policy.probs(z); };
    ctx.lambda = config.lambda;
    ctx.mode = config.mode;
    ctx.session = "online";
    OnlineResult out;
    for (int step = 0; step < config.steps; ++step) {
        out.records.push_back(collect_interaction(source, user, ctx, rng));
        const std::size_t n = out.records.size();
        const std::size_t m = std::min(n, std::size_t(config.batch_size));
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        std::vector<InteractionRecord> sample;
        sample.reserve(m);
        for (std::size_t i = 0; i < m; ++i) sample.push_back(out.records[pick(rng)]);
        const auto batch = to_batch(sample);
        const auto negatives = batch.with_treatment(0);
        if (!negatives.empty() && negatives.size() < batch.size())
            out.action_loss.push_back(adversary::update_action_discriminator(models.action_discriminator, batch, opt_phi));
        if (!negatives.empty())
            out.distillation_loss.push_back(adversary::update_image_discriminator(
                models.image_discriminator, models.action_discriminator, negatives, opt_psi));
        out.generator_loss.push_back(
            adversary::update_compression_policy(models.policy, models.image_discriminator, batch, opt_f));
    }
    return out;
}

ProtocolResult run_two_round_protocol(ImageSource& source, const genmodel::ImageDataset& positives_corpus,
                                      const sim::UserPolicy& user, const codec::CodecBundle& codec,
                                      const ProtocolConfig& config) {
    if (config.rounds < 1) throw ConfigError("protocol needs at least one round");
    if (config.negatives_per_round == 0) throw ConfigError("negatives_per_round must be positive");
    codec.validate();
    const int k = user.action_count();
    const int dim = codec.prior.dim();
    const int groups = codec.group_count();

    std::vector<InteractionRecord> records;
    std::vector<RoundReport> reports;
    std::vector<adversary::PicoModels> round_models;
    for (int round = 1; round <= config.rounds; ++round) {
        CollectContext ctx;
        ctx.codec = &codec;
        ctx.policy = round == 1 ? baselines::uniform_random_source(groups) : round_models.back().policy.as_source();
        ctx.lambda = config.lambda;
        ctx.mode = config.collection_mode;
        ctx.session = "sim-round-" + std::to_string(round);
        ctx.round = round;
        Rng collect_rng(derive_seed(config.seed, 100 + std::uint64_t(round)));
        auto collected = collect_until_negatives(source, user, ctx, config.negatives_per_round, collect_rng);
        const std::size_t n_collected = collected.size();
        records.insert(records.end(), std::make_move_iterator(collected.begin()),
                       std::make_move_iterator(collected.end()));
        if (round == 1) {
            auto positives = corpus_positives(positives_corpus, codec, config.corpus_positives, round, collect_rng);
            records.insert(records.end(), std::make_move_iterator(positives.begin()),
                           std::make_move_iterator(positives.end()));
        }
        Rng init_rng(derive_seed(config.seed, 200 + std::uint64_t(round)));
        auto models = adversary::PicoModels::create(k, dim, groups, config.sizes, init_rng);
        TrainingConfig training = config.training;
        training.seed = derive_seed(config.seed, 300 + std::uint64_t(round));
        RoundReport report{round, n_collected, run_batch_training(records, training, models)};
        reports.push_back(std::move(report));
        round_models.push_back(std::move(models));
    }
    adversary::PicoModels final_models = round_models.back();
    return ProtocolResult{std::move(final_models), std::move(round_models), std::move(reports), std::move(records)};
}

}  // namespace pico::loop
