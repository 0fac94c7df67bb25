#include <doctest.h>

#include <cmath>
#include <fstream>

#include "helpers.hpp"
#include "pico/core/error.hpp"
#include "pico/loop/collect.hpp"
#include "pico/loop/experiment_config.hpp"
#include "pico/loop/record_log.hpp"
#include "pico/loop/training.hpp"
#include "pico/sim/sim_user.hpp"

using namespace pico;
using namespace pico::loop;

namespace {

genmodel::ImageDataset tiny_corpus(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    genmodel::ImageDataset d;
    d.shape = {8, 8, 1};
    for (std::size_t i = 0; i < n; ++i) {
        d.images.push_back(testing::random_image(d.shape, rng));
        d.labels.push_back(int(i % 10));
        d.ids.push_back("tiny-" + std::to_string(i));
    }
    return d;
}

CollectContext context(const codec::CodecBundle& codec, double lambda) {
    CollectContext ctx;
    ctx.codec = &codec;
    ctx.policy = [](const Vector&, Rng& rng) { return uniform_vector(rng, 4); };
    ctx.lambda = lambda;
    return ctx;
}

// Smallest and largest k whose two-sided exact binomial tail mass exceeds alpha/2.
std::pair<int, int> binomial_band(int n, double p, double alpha) {
    std::vector<double> pmf(std::size_t(n) + 1);
    for (int k = 0; k <= n; ++k)
        pmf[std::size_t(k)] = std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
                                       k * std::log(p) + (n - k) * std::log(1 - p));
    int lo = 0, hi = n;
    for (double tail = 0.0; tail + pmf[std::size_t(lo)] < alpha / 2; ++lo) tail += pmf[std::size_t(lo)];
    for (double tail = 0.0; tail + pmf[std::size_t(hi)] < alpha / 2; --hi) tail += pmf[std::size_t(hi)];
    return {lo, hi};
}

TrainingConfig quick_training(std::uint64_t seed) {
    TrainingConfig t;
    t.stage.max_epochs = 30;
    t.stage.patience = 5;
    t.seed = seed;
    return t;
}

InteractionRecord sample_record(bool with_mask) {
    InteractionRecord r;
    r.treatment = with_mask ? 0 : 1;
    r.latent = Vector::LinSpaced(4, -1.0, 1.0 / 3.0);
    r.probs = Vector::Constant(2, 0.5);
    if (with_mask) {
        r.probs << 0.1, 0.7;
        r.mask = codec::MaskDecision{r.probs, {true, false}, 0.5};
    }
    r.action = 4;
    r.bits = 12.345678901234567;
    r.session = "s-1";
    r.timestamp = now_utc_iso8601();
    r.lambda = 0.5;
    r.round = 2;
    r.image_id = "img-9";
    r.original_hash = std::string(64, 'a');
    r.stimulus_hash = std::string(64, 'b');
    if (with_mask) r.latency_ms = 812.5;
    return r;
}

}  // namespace

TEST_CASE("forced treatments") {
    const auto codec = testing::tiny_bundle(8, 4, 1);
    const auto corpus = tiny_corpus(5, 2);
    Rng rng(3);
    const auto ctx = context(codec, 0.5);

    const auto shown = prepare_interaction(corpus.images[0], "a", ctx, rng, {1});
    CHECK(shown.record.treatment == 1);
    CHECK(!shown.record.mask);
    CHECK(shown.stimulus.pixels == corpus.images[0].pixels);
    CHECK(shown.record.probs == Vector::Constant(4, 0.5));
    const codec::MaskDecision all{shown.record.probs, {true, true, true, true}, 1.0};
    CHECK(shown.record.bits == codec::measure_bits(codec.prior, shown.record.latent, all, codec.grouping));

    const auto hidden = prepare_interaction(corpus.images[0], "a", ctx, rng, {0});
    CHECK(hidden.record.treatment == 0);
    REQUIRE(hidden.record.mask);
    CHECK(hidden.record.mask->transmitted_count() == 2);
    CHECK(hidden.record.bits ==
          codec::measure_bits(codec.prior, hidden.record.latent, *hidden.record.mask, codec.grouping));
    CHECK(hidden.record.latent == codec.model->encode(corpus.images[0]));
    CHECK(hidden.stimulus.pixels != corpus.images[0].pixels);
    CHECK_THROWS_AS(prepare_interaction(corpus.images[0], "a", ctx, rng, {2}), InputError);
}

TEST_CASE("treatment is a fair coin") {
    const auto codec = testing::tiny_bundle(8, 4, 4);
    const auto corpus = tiny_corpus(50, 5);
    DatasetSource source(corpus);
    const sim::ConstantUser user(1, 10);
    Rng rng(6);
    const auto ctx = context(codec, 0.5);
    const int n = 10000;
    int shown = 0;
    for (int i = 0; i < n; ++i) shown += collect_interaction(source, user, ctx, rng).treatment;
    const auto [lo, hi] = binomial_band(n, 0.5, 1e-4);
    CHECK(lo > 4500);
    CHECK(hi < 5500);
    CHECK(shown >= lo);
    CHECK(shown <= hi);
}

TEST_CASE("collection stores images and stops at the negative quota") {
    const auto codec = testing::tiny_bundle(8, 4, 7);
    const auto corpus = tiny_corpus(20, 8);
    DatasetSource source(corpus);
    const sim::ConstantUser user(2, 10);
    const auto dir = testing::temp_dir("collect");
    ObjectStore store(dir / "objects");
    auto ctx = context(codec, 0.25);
    ctx.store = &store;
    Rng rng(9);
    const auto records = collect_until_negatives(source, user, ctx, 30, rng);
    CHECK(std::count_if(records.begin(), records.end(), [](auto& r) { return r.treatment == 0; }) == 30);
    CHECK(records.back().treatment == 0);
    for (const auto& r : records) {
        CHECK(r.action == 2);
        CHECK(store.contains(r.original_hash));
        CHECK(store.contains(r.stimulus_hash));
        if (r.treatment == 1) CHECK(r.stimulus_hash == r.original_hash);
        CHECK_NOTHROW(r.validate(10));
    }
    const auto& first = records.front();
    CHECK(quantize(store.get(first.original_hash)) ==
          quantize(corpus.images[std::size_t(std::stoi(first.image_id.substr(5)))]));
    std::filesystem::remove_all(dir);
}

TEST_CASE("corpus positives") {
    const auto codec = testing::tiny_bundle(8, 4, 10);
    const auto corpus = tiny_corpus(30, 11);
    Rng rng(12);
    const auto pos = corpus_positives(corpus, codec, 25, 1, rng);
    CHECK(pos.size() == 25);
    for (const auto& r : pos) {
        CHECK(r.treatment == 1);
        CHECK(r.source == RecordSource::Corpus);
        const std::size_t i = std::size_t(std::stoi(r.image_id.substr(5)));
        CHECK(r.action == corpus.labels[i]);
        CHECK(r.latent == codec.model->encode(corpus.images[i]));
    }
}

TEST_CASE("record json and log round trip") {
    for (bool masked : {false, true}) {
        const auto r = sample_record(masked);
        CHECK(InteractionRecord::from_json(nlohmann::json::parse(r.to_json().dump())) == r);
    }
    const auto j = sample_record(false).to_json();
    CHECK(j.contains("T"));
    CHECK(j.at("schema") == kRecordSchemaVersion);
    auto future = j;
    future["schema"] = 99;
    CHECK_THROWS_AS(InteractionRecord::from_json(future), FormatError);
    auto bad = sample_record(true);
    bad.mask.reset();
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    CHECK_THROWS_AS(sample_record(false).validate(3), ValidationError);

    const auto dir = testing::temp_dir("log");
    RecordLog log(dir / "task" / "records.jsonl");
    log.append(sample_record(false));
    log.append(sample_record(true));
    CHECK(log.size() == 2);
    {
        std::ofstream out(log.path(), std::ios::app);
        out << R"({"schema":1,"T":0,"z":[0.1)";  // torn final line
    }
    const auto back = log.read_all();
    REQUIRE(back.size() == 2);
    auto expected = sample_record(true);
    expected.timestamp = back[1].timestamp;
    CHECK(back[1] == expected);
    {
        std::ofstream out(log.path(), std::ios::app);
        out << "\nnot json\n";
    }
    CHECK_THROWS_AS(log.read_all(), FormatError);

    write_records(dir / "copy.jsonl", back);
    CHECK(read_records(dir / "copy.jsonl") == back);
    CHECK(read_records(dir / "missing.jsonl").empty());
    std::filesystem::remove_all(dir);
}

TEST_CASE("object store") {
    const auto dir = testing::temp_dir("objects");
    ObjectStore store(dir);
    Rng rng(13);
    const Image x = testing::random_image({8, 8, 3}, rng);
    const auto h = store.put(x);
    CHECK(h.size() == 64);
    CHECK(store.put(x) == h);
    CHECK(quantize(store.get(h)) == quantize(x));
    CHECK(store.get(h).shape == x.shape);
    CHECK(!store.contains(std::string(64, '0')));
    CHECK_THROWS(store.path_of("../etc/passwd"));
    CHECK_THROWS_AS(store.get(std::string(64, '0')), NotFoundError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("batch training") {
    const auto codec = testing::tiny_bundle(8, 4, 14);
    const auto corpus = tiny_corpus(40, 15);
    DatasetSource source(corpus);
    const sim::ConstantUser user(0, 10);
    Rng rng(16);
    const auto records = collect_until_negatives(source, user, context(codec, 0.5), 60, rng);

    SUBCASE("single class is rejected") {
        std::vector<InteractionRecord> positives;
        for (const auto& r : records)
            if (r.treatment == 1) positives.push_back(r);
        Rng init(1);
        auto models = adversary::PicoModels::create(10, 8, 4, {16, 8}, init);
        CHECK_THROWS_AS(run_batch_training(positives, quick_training(1), models), TrainingError);
    }
    SUBCASE("deterministic given the seed") {
        auto run = [&] {
            Rng init(2);
            auto models = adversary::PicoModels::create(10, 8, 4, {16, 8}, init);
            const auto report = run_batch_training(records, quick_training(3), models);
            return std::make_pair(models, report.summary());
        };
        const auto a = run(), b = run();
        CHECK(a.first == b.first);
        CHECK(a.second == b.second);
        CHECK(a.second.at("stages").size() == 3);
    }
    SUBCASE("report csv") {
        Rng init(4);
        auto models = adversary::PicoModels::create(10, 8, 4, {16, 8}, init);
        const auto report = run_batch_training(records, quick_training(5), models);
        CHECK(report.positives + report.negatives == records.size());
        const auto& s = report.stage("policy");
        CHECK(s.epochs_run == int(s.train_curve.size()));
        CHECK(s.best_validation_loss == doctest::Approx(*std::min_element(s.validation_curve.begin(),
                                                                           s.validation_curve.end())));
        const auto dir = testing::temp_dir("csv");
        report.write_csv(dir / "loss.csv");
        std::ifstream in(dir / "loss.csv");
        std::string header;
        std::getline(in, header);
        CHECK(header == "step,loss_name,value");
        std::size_t rows = 0;
        for (std::string line; std::getline(in, line);) ++rows;
        std::size_t expected = 0;
        for (const auto& st : report.stages) expected += st.train_curve.size() + st.validation_curve.size();
        CHECK(rows == expected);
        std::filesystem::remove_all(dir);
        CHECK_THROWS_AS(report.stage("nope"), NotFoundError);
    }
}

TEST_CASE("split indices") {
    Rng rng(17);
    const auto [train, val] = split_indices(100, 0.1, rng);
    CHECK(val.size() == 10);
    CHECK(train.size() == 90);
    std::vector<std::size_t> all(train);
    all.insert(all.end(), val.begin(), val.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < 100; ++i) CHECK(all[i] == i);
    CHECK(split_indices(2, 0.1, rng).second.size() == 1);
}

TEST_CASE("two-round protocol") {
    const auto codec = testing::tiny_bundle(8, 4, 18);
    const auto corpus = tiny_corpus(60, 19);
    const auto prior_before = codec.prior;
    const sim::ConstantUser user(5, 10);
    ProtocolConfig cfg;
    cfg.negatives_per_round = 80;
    cfg.corpus_positives = 40;
    cfg.training = quick_training(0);
    cfg.sizes = {16, 8};
    cfg.seed = 20;

    auto run = [&] {
        DatasetSource source(corpus);
        return run_two_round_protocol(source, corpus, user, codec, cfg);
    };
    const auto result = run();
    REQUIRE(result.rounds.size() == 2);
    CHECK(result.round_models.size() == 2);
    CHECK(result.models == result.round_models.back());
    std::size_t negatives = 0, corpus_records = 0;
    for (const auto& r : result.records) {
        negatives += r.treatment == 0;
        if (r.source == RecordSource::Corpus) {
            ++corpus_records;
            CHECK(r.round == 1);
        }
    }
    CHECK(negatives == 160);
    CHECK(corpus_records == 40);
    CHECK(result.rounds[0].training.records == result.rounds[0].collected + 40);
    CHECK(result.rounds[1].training.records == result.records.size());
    CHECK(codec.prior.mean == prior_before.mean);
    CHECK(codec.prior.covariance == prior_before.covariance);

    const auto again = run();
    CHECK(again.models == result.models);
    CHECK(again.records.size() == result.records.size());
    for (std::size_t i = 0; i < result.records.size(); ++i) {
        CHECK(again.records[i].latent == result.records[i].latent);
        CHECK(again.records[i].probs == result.records[i].probs);
        CHECK(again.records[i].treatment == result.records[i].treatment);
    }
}

TEST_CASE("constant-action user gives the discriminator nothing to find") {
    const auto codec = testing::tiny_bundle(8, 4, 21);
    const auto corpus = tiny_corpus(200, 22);
    DatasetSource source(corpus);
    const sim::ConstantUser user(3, 10);
    Rng rng(23);
    const auto records = collect_until_negatives(source, user, context(codec, 0.5), 1000, rng);
    Rng init(24);
    auto models = adversary::PicoModels::create(10, 8, 4, {32, 16}, init);
    const auto report = run_batch_training(records, quick_training(25), models);
    // Validation split holds ~200 records; 4 standard errors around 0.5.
    CHECK(report.action_discriminator_accuracy > 0.36);
    CHECK(report.action_discriminator_accuracy < 0.64);
}

TEST_CASE("experiment config round trip") {
    ExperimentConfig cfg;
    cfg.seed = 77;
    cfg.sweep_lambdas = {0.0, 0.25, 1.0};
    const auto dir = testing::temp_dir("config");
    cfg.save(dir / "config.json");
    const auto back = ExperimentConfig::load(dir / "config.json");
    CHECK(back.to_json() == cfg.to_json());
    auto j = cfg.to_json();
    j["sweep_lambdas"] = {0.5, 1.5};
    CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);
    CHECK(cfg.protocol().seed == 77);
    std::filesystem::remove_all(dir);
}
