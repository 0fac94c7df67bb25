#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "pico/baselines/nonadaptive.hpp"
#include "pico/baselines/perceptual.hpp"
#include "pico/core/bytes.hpp"
#include "pico/core/error.hpp"
#include "pico/eval/experiment.hpp"
#include "pico/eval/report.hpp"
#include "pico/genmodel/synthetic_digits.hpp"
#include "pico/loop/record_log.hpp"
#include "pico/service/http_server.hpp"

using namespace pico;
namespace fs = std::filesystem;

namespace {

void note(const std::string& msg) {
    static const auto t0 = std::chrono::steady_clock::now();
    std::cerr << "[" << std::fixed << std::setprecision(1)
              << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << "s] " << msg
              << std::endl;
}

void print(const nlohmann::json& j) { std::cout << j.dump(2) << std::endl; }

genmodel::Split parse_split(const std::string& s) {
    if (s == "train") return genmodel::Split::Train;
    if (s == "heldout") return genmodel::Split::Heldout;
    throw ConfigError("split must be train or heldout, got '" + s + "'");
}

codec::CodecBundle load_codec(const fs::path& model_path, const fs::path& prior_path) {
    auto model = std::make_shared<const genmodel::GenerativeModel>(genmodel::GenerativeModel::load(model_path));
    auto pf = codec::load_prior(prior_path);
    if (!pf.model_checksum.empty() && pf.model_checksum != model->checksum())
        throw ConfigError("prior " + prior_path.string() + " was fitted to a different backbone");
    codec::CodecBundle bundle{std::move(model), std::move(pf.prior), std::move(pf.grouping)};
    bundle.validate();
    return bundle;
}

// Accepts a bare policy archive or a full PICO model archive.
adversary::CompressionPolicy load_policy(const fs::path& path) {
    const auto a = Archive::load(path);
    if (a.kind() == adversary::PicoModels::kArchiveKind) return adversary::PicoModels::from_archive(a).policy;
    return adversary::CompressionPolicy::from_archive(a);
}

std::string run_stamp(std::uint64_t seed) {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream s;
    s << std::put_time(&tm, "%Y%m%dT%H%M%SZ") << "-s" << seed;
    return s.str();
}

void write_training_csv(const fs::path& path, const std::vector<double>& values, const std::string& name) {
    std::ofstream out(path);
    out << "step,loss_name,value\n" << std::setprecision(17);
    for (std::size_t i = 0; i < values.size(); ++i) out << i << "," << name << "," << values[i] << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pragmatic compression toolkit"};
    app.require_subcommand(1);

    // make-digits
    std::size_t count = 1000;
    std::uint64_t seed = 0;
    std::string split = "train";
    fs::path out;
    auto* make_digits = app.add_subcommand("make-digits", "Render a synthetic digit corpus as IDX files");
    make_digits->add_option("--count", count, "Number of images");
    make_digits->add_option("--seed", seed, "Random seed");
    make_digits->add_option("--split", split, "train or heldout");
    make_digits->add_option("--out", out, "Output prefix; writes <out>-images-idx3-ubyte and labels")->required();

    // train-backbone
    fs::path data, model_path, prior_path, user_path, policy_path, records_path, heldout_path, config_path;
    genmodel::VaeConfig vae;
    auto* train_backbone = app.add_subcommand("train-backbone", "Train the beta-VAE backbone");
    train_backbone->add_option("--data", data, "IDX images file or image directory")->required();
    train_backbone->add_option("--epochs", vae.epochs, "Training epochs");
    train_backbone->add_option("--latent-dim", vae.latent_dim, "Latent features");
    train_backbone->add_option("--beta", vae.beta, "KL weight");
    train_backbone->add_option("--seed", vae.seed, "Random seed");
    train_backbone->add_option("--out", out, "Checkpoint path")->required();

    // fit-prior
    int groups = 0;
    double ridge = codec::kDefaultRidge;
    auto* fit = app.add_subcommand("fit-prior", "Fit the Gaussian latent prior on a corpus");
    fit->add_option("--model", model_path, "Backbone checkpoint")->required();
    fit->add_option("--data", data, "Corpus")->required();
    fit->add_option("--groups", groups, "Mask groups (default: one per latent feature)");
    fit->add_option("--ridge", ridge, "Diagonal ridge");
    fit->add_option("--out", out, "Prior path")->required();

    // train-user
    sim::SimUserConfig user_cfg;
    std::string mode = "sample";
    auto* train_user = app.add_subcommand("train-user", "Train the simulated user");
    train_user->add_option("--data", data, "Labeled corpus")->required();
    train_user->add_option("--epochs", user_cfg.epochs, "Training epochs");
    train_user->add_option("--seed", user_cfg.seed, "Random seed");
    train_user->add_option("--mode", mode, "Default action mode: sample or argmax");
    train_user->add_option("--out", out, "User checkpoint")->required();

    // collect
    std::size_t negatives = 1000;
    double lambda = 0.5;
    auto* collect = app.add_subcommand("collect", "Collect interactions with the simulated user");
    collect->add_option("--model", model_path, "Backbone checkpoint")->required();
    collect->add_option("--prior", prior_path, "Prior file")->required();
    collect->add_option("--user", user_path, "Simulated user")->required();
    collect->add_option("--data", data, "Image source")->required();
    collect->add_option("--policy", policy_path, "Compression policy (default: uniform random)");
    collect->add_option("--negatives", negatives, "Stop after this many T=0 records");
    collect->add_option("--lambda", lambda, "Transmitted fraction");
    collect->add_option("--mode", mode, "Action mode");
    collect->add_option("--seed", seed, "Random seed");
    collect->add_option("--out", out, "Record log (appended)")->required();

    // train-pico
    loop::TrainingConfig training;
    adversary::NetworkSizes sizes;
    fs::path curves_path;
    int actions = 10;
    auto* train_pico = app.add_subcommand("train-pico", "Train D_phi, D_psi and f_theta on collected records");
    train_pico->add_option("--records", records_path, "Record log")->required();
    train_pico->add_option("--actions", actions, "Action count");
    train_pico->add_option("--max-epochs", training.stage.max_epochs, "Epoch cap per stage");
    train_pico->add_option("--patience", training.stage.patience, "Early stopping patience");
    train_pico->add_option("--seed", training.seed, "Random seed");
    train_pico->add_option("--loss-csv", curves_path, "Loss curves CSV");
    train_pico->add_option("--out", out, "Model archive")->required();

    // train-baseline
    baselines::PerceptualConfig perceptual_cfg;
    std::size_t images = 4000;
    auto* train_baseline = app.add_subcommand("train-baseline", "Train the perceptual-loss baseline policy");
    train_baseline->add_option("--model", model_path, "Backbone checkpoint")->required();
    train_baseline->add_option("--prior", prior_path, "Prior file")->required();
    train_baseline->add_option("--data", data, "Corpus")->required();
    train_baseline->add_option("--images", images, "Corpus images used");
    train_baseline->add_option("--lambda", perceptual_cfg.lambda, "Transmitted fraction");
    train_baseline->add_option("--seed", perceptual_cfg.seed, "Random seed");
    train_baseline->add_option("--out", out, "Policy archive")->required();

    // sweep
    eval::SweepConfig sweep_cfg;
    std::string method = "pico";
    auto* sweep = app.add_subcommand("sweep", "Agreement against bitrate across lambda");
    sweep->add_option("--model", model_path, "Backbone checkpoint")->required();
    sweep->add_option("--prior", prior_path, "Prior file")->required();
    sweep->add_option("--user", user_path, "Simulated user")->required();
    sweep->add_option("--heldout", heldout_path, "Held-out images")->required();
    sweep->add_option("--policy", policy_path, "Policy archive (omit for the non-adaptive baseline)");
    sweep->add_option("--method", method, "Method name in the output");
    sweep->add_option("--lambdas", sweep_cfg.lambdas, "Lambda grid");
    sweep->add_option("--repeats", sweep_cfg.repeats, "Compressions per image and lambda");
    sweep->add_option("--threads", sweep_cfg.threads, "Worker threads (0: all cores)");
    sweep->add_option("--seed", sweep_cfg.seed, "Random seed");
    sweep->add_option("--out", out, "Curves CSV")->required();

    // report
    std::vector<fs::path> inputs;
    auto* report = app.add_subcommand("report", "Merge curve CSVs into a table and plot");
    report->add_option("--curves", inputs, "Curve CSV files")->required();
    report->add_option("--out", out, "Output directory")->required();

    // serve
    service::ServiceConfig service_cfg;
    service::HttpOptions http;
    std::string host = "127.0.0.1";
    int port = 8080;
    auto* serve = app.add_subcommand("serve", "Run the human-in-the-loop service");
    serve->add_option("--model", model_path, "Backbone checkpoint")->required();
    serve->add_option("--prior", prior_path, "Prior file")->required();
    serve->add_option("--stimuli", data, "Images shown to participants")->required();
    serve->add_option("--policy", policy_path, "Initial serving policy (default: uniform random)");
    serve->add_option("--data-dir", service_cfg.data_dir, "Record logs, object store and checkpoints");
    serve->add_option("--per-session", service_cfg.stimuli_per_session, "Stimuli per session");
    serve->add_option("--lambda", service_cfg.lambda, "Transmitted fraction");
    serve->add_option("--seed", service_cfg.seed, "Random seed");
    serve->add_option("--host", host, "Bind address");
    serve->add_option("--port", port, "Port (0: any)");
    serve->add_option("--cors-origin", http.cors_origin, "Access-Control-Allow-Origin value");
    serve->add_option("--admin-token", http.admin_token, "Bearer token for round control and export");

    // experiment
    std::size_t train_size = 20000;
    fs::path runs_dir = "runs";
    std::string train_data, heldout_data;
    auto* experiment = app.add_subcommand("experiment", "End-to-end simulated-user experiment");
    experiment->add_option("--config", config_path, "Experiment config JSON");
    experiment->add_option("--seed", seed, "Overrides the config seed");
    experiment->add_option("--train-size", train_size, "Synthetic training images");
    experiment->add_option("--vae-epochs", vae.epochs, "Backbone epochs");
    experiment->add_option("--train-data", train_data, "Corpus replacing the synthetic digits");
    experiment->add_option("--heldout-data", heldout_data, "Held-out images for the sweep")
        ->needs(experiment->get_option("--train-data"));
    experiment->add_option("--runs-dir", runs_dir, "Parent of the run directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*make_digits) {
            const auto d = genmodel::make_synthetic_digits({count, seed, parse_split(split), split});
            const fs::path imgs = out.string() + "-images-idx3-ubyte", labels = out.string() + "-labels-idx1-ubyte";
            if (out.has_parent_path()) fs::create_directories(out.parent_path());
            genmodel::save_idx(d, imgs, labels);
            print({{"images", imgs.string()}, {"labels", labels.string()}, {"count", d.size()}});
        } else if (*train_backbone) {
            const auto d = genmodel::load_dataset(data);
            note("training backbone on " + std::to_string(d.size()) + " images");
            const auto trained = genmodel::train_generative_model(d, vae);
            trained.model.save(out);
            write_training_csv(out.string() + ".heldout-loss.csv", trained.report.heldout_loss, "backbone/validation");
            print({{"checkpoint", out.string()},
                   {"checksum", trained.model.checksum()},
                   {"final_heldout_loss", trained.report.final_heldout_loss}});
        } else if (*fit) {
            const auto model = genmodel::GenerativeModel::load(model_path);
            const auto d = genmodel::load_dataset(data);
            auto prior = codec::fit_prior(model.encode_batch(d.as_matrix()), ridge);
            const int g = groups > 0 ? groups : prior.dim();
            codec::save_prior(out, {prior, codec::GroupingScheme::contiguous(prior.dim(), g), model.checksum()});
            const Vector sd = prior.marginal_stddev();
            print({{"prior", out.string()}, {"groups", g}, {"marginal_sd", std::vector<double>(sd.begin(), sd.end())}});
        } else if (*train_user) {
            const auto d = genmodel::load_dataset(data);
            user_cfg.mode = sim::action_mode_from_string(mode);
            const auto trained = sim::train_sim_user(d, user_cfg);
            trained.user.save(out);
            print({{"user", out.string()}, {"heldout_accuracy", trained.heldout_accuracy}});
        } else if (*collect) {
            const auto bundle = load_codec(model_path, prior_path);
            const auto user = sim::SimulatedUser::load(user_path);
            const auto d = genmodel::load_dataset(data);
            loop::DatasetSource source(d);
            loop::CollectContext ctx;
            ctx.codec = &bundle;
            ctx.policy = policy_path.empty() ? baselines::uniform_random_source(bundle.group_count())
                                             : load_policy(policy_path).as_source();
            ctx.lambda = lambda;
            ctx.mode = sim::action_mode_from_string(mode);
            ctx.session = "cli";
            Rng rng(seed);
            const auto records = loop::collect_until_negatives(source, user, ctx, negatives, rng);
            loop::RecordLog log_file(out);
            for (const auto& r : records) log_file.append(r);
            print({{"records", out.string()}, {"appended", records.size()}});
        } else if (*train_pico) {
            const auto records = loop::read_records(records_path);
            if (records.empty()) throw InputError("no records in " + records_path.string());
            Rng init(derive_seed(training.seed, 0));
            auto models = adversary::PicoModels::create(actions, int(records.front().latent.size()),
                                                        int(records.front().probs.size()), sizes, init);
            const auto rep = loop::run_batch_training(records, training, models);
            models.save(out);
            if (!curves_path.empty()) rep.write_csv(curves_path);
            print({{"models", out.string()}, {"report", rep.summary()}});
        } else if (*train_baseline) {
            const auto bundle = load_codec(model_path, prior_path);
            const auto d = genmodel::load_dataset(data);
            const auto result = baselines::train_perceptual_policy(d.head(std::min(images, d.size())), bundle,
                                                                   perceptual_cfg);
            result.policy.to_archive().save(out);
            print({{"policy", out.string()},
                   {"epochs", result.report.epochs_run},
                   {"best_validation_loss", result.report.best_validation_loss}});
        } else if (*sweep) {
            const auto bundle = load_codec(model_path, prior_path);
            const auto user = sim::SimulatedUser::load(user_path);
            const auto held = genmodel::load_dataset(heldout_path, genmodel::Split::Heldout);
            eval::MethodUnderTest m{method, baselines::uniform_random_source(bundle.group_count()), "uniform-random"};
            if (!policy_path.empty()) {
                const auto policy = load_policy(policy_path);
                m.probs = policy.as_source();
                m.checksum = eval::policy_checksum(policy);
            } else if (method == "pico") {
                m.name = "nonadaptive";
            }
            auto result = eval::sweep_lambda(bundle, m, user, held, sweep_cfg);
            result.model_checksum = bundle.model->checksum();
            eval::write_curves_csv(out, {result});
            std::cout << eval::compare_methods({result}).table();
        } else if (*report) {
            std::vector<eval::SweepResult> sweeps;
            for (const auto& p : inputs)
                for (auto& s : eval::read_curves_csv(p)) sweeps.push_back(std::move(s));
            const auto files = eval::emit_report(sweeps, out);
            std::cout << eval::compare_methods(sweeps).table();
            print({{"csv", files.csv.string()}, {"svg", files.svg.string()}, {"table", files.table.string()}});
        } else if (*serve) {
            auto bundle = load_codec(model_path, prior_path);
            auto stimuli = genmodel::load_dataset(data, genmodel::Split::Heldout);
            service::SessionManager manager(service_cfg, std::move(bundle), std::move(stimuli),
                                            {service::digit_task()});
            if (!policy_path.empty())
                manager.set_policy("digits", std::make_shared<const adversary::CompressionPolicy>(load_policy(policy_path)));
            service::HttpServer server(manager, http);
            const int bound = server.bind(host, port);
            note("serving on http://" + host + ":" + std::to_string(bound));
            server.serve();
        } else if (*experiment) {
            auto cfg = config_path.empty() ? loop::ExperimentConfig{} : loop::ExperimentConfig::load(config_path);
            if (experiment->count("--seed")) cfg.seed = seed;
            const fs::path run = runs_dir / run_stamp(cfg.seed);
            fs::create_directories(run);
            cfg.save(run / "config.json");
            note("run directory " + run.string());

            genmodel::ImageDataset train, held;
            if (!train_data.empty()) {
                train = genmodel::load_dataset(train_data);
                held = genmodel::load_dataset(heldout_data, genmodel::Split::Heldout).head(cfg.heldout_size);
            } else {
                train = genmodel::make_synthetic_digits({train_size, derive_seed(cfg.seed, 1), genmodel::Split::Train, "train"});
                held = genmodel::make_synthetic_digits(
                    {cfg.heldout_size, derive_seed(cfg.seed, 2), genmodel::Split::Heldout, "heldout"});
            }
            vae.seed = derive_seed(cfg.seed, 4);
            note("training backbone");
            auto trained = genmodel::train_generative_model(train, vae);
            trained.model.save(run / "backbone.pico");
            auto model = std::make_shared<const genmodel::GenerativeModel>(std::move(trained.model));
            auto prior = codec::fit_prior(model->encode_batch(train.as_matrix()));
            const codec::CodecBundle bundle{model, prior, codec::GroupingScheme::contiguous(prior.dim(), prior.dim())};
            codec::save_prior(run / "prior.pico", {bundle.prior, bundle.grouping, model->checksum()});
            note("training simulated user");
            user_cfg.seed = derive_seed(cfg.seed, 5);
            const auto user = sim::train_sim_user(train, user_cfg);
            user.user.save(run / "user.pico");

            const auto result = eval::run_simulated_experiment({&train, &held, &bundle, &user.user}, cfg, note);
            result.protocol.models.save(run / "pico-models.pico");
            result.perceptual.policy.to_archive().save(run / "perceptual-policy.pico");
            loop::write_records(run / "records.jsonl", result.protocol.records);
            for (const auto& r : result.protocol.rounds)
                r.training.write_csv(run / ("round-" + std::to_string(r.round) + "-loss.csv"));
            auto sweeps = result.sweeps;
            for (auto& s : sweeps) s.model_checksum = model->checksum();
            eval::emit_report(sweeps, run / "report");
            std::cout << eval::compare_methods(sweeps).table() << "reference agreement "
                      << result.reference_agreement << "\n";
            print({{"run", run.string()}, {"simulated_user_heldout_accuracy", user.heldout_accuracy}});
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
    return 0;
}
