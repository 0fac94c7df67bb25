#include <doctest.h>

#include <fstream>

#include "helpers.hpp"
#include "pico/baselines/nonadaptive.hpp"
#include "pico/core/error.hpp"
#include "pico/eval/report.hpp"
#include "pico/eval/sweep.hpp"

using namespace pico;
using namespace pico::eval;

namespace {

genmodel::ImageDataset heldout_set(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    genmodel::ImageDataset d;
    d.shape = {8, 8, 1};
    d.split = genmodel::Split::Heldout;
    for (std::size_t i = 0; i < n; ++i) {
        d.images.push_back(testing::random_image(d.shape, rng));
        d.ids.push_back("held-" + std::to_string(i));
    }
    return d;
}

struct Fixture {
    codec::CodecBundle codec = testing::tiny_bundle(8, 4, 1);
    genmodel::ImageDataset heldout = heldout_set(24, 2);
    sim::SimulatedUser user = [] {
        Rng rng(3);
        return sim::SimulatedUser::create({8, 8, 1}, 10, rng);
    }();
    MethodUnderTest method{"nonadaptive", baselines::uniform_random_source(4), ""};
};

SweepConfig config(int threads) {
    SweepConfig c;
    c.lambdas = {0.0, 0.25, 0.5, 0.75, 1.0};
    c.repeats = 3;
    c.seed = 4;
    c.threads = threads;
    return c;
}

}  // namespace

TEST_CASE("sweep accounting") {
    const Fixture f;
    const auto r = sweep_lambda(f.codec, f.method, f.user, f.heldout, config(1));
    REQUIRE(r.points.size() == 5);
    CHECK(r.method == "nonadaptive");
    CHECK(r.at(0.0).mean_bits == 0.0);
    for (std::size_t i = 1; i < r.points.size(); ++i) CHECK(r.points[i].mean_bits > r.points[i - 1].mean_bits);
    for (const auto& p : r.points) {
        CHECK(p.bits_per_dim == doctest::Approx(p.mean_bits / 64.0).epsilon(1e-14));
        CHECK(p.images == 24);
        CHECK(p.repeats == 3);
        CHECK(p.agreement >= 0.0);
        CHECK(p.agreement <= 1.0);
        CHECK(p.std_error >= 0.0);
    }
    // At lambda = 1 the stimulus is dec(enc(x)), so argmax agreement is the reference.
    CHECK(r.at(1.0).agreement == reconstruction_agreement(f.codec, f.user, f.heldout, sim::ActionMode::Argmax, 4));
    CHECK_THROWS_AS(r.at(0.3), NotFoundError);
}

TEST_CASE("sweep is independent of the thread count") {
    const Fixture f;
    const auto one = sweep_lambda(f.codec, f.method, f.user, f.heldout, config(1));
    const auto three = sweep_lambda(f.codec, f.method, f.user, f.heldout, config(3));
    for (std::size_t i = 0; i < one.points.size(); ++i) {
        CHECK(one.points[i].mean_bits == three.points[i].mean_bits);
        CHECK(one.points[i].agreement == three.points[i].agreement);
        CHECK(one.points[i].std_error == three.points[i].std_error);
    }
}

TEST_CASE("constant user always agrees") {
    const Fixture f;
    const sim::ConstantUser user(6, 10);
    const auto r = sweep_lambda(f.codec, f.method, user, f.heldout, config(1));
    for (const auto& p : r.points) {
        CHECK(p.agreement == 1.0);
        CHECK(p.std_error == 0.0);
    }
}

TEST_CASE("held-out overlap is rejected") {
    const Fixture f;
    CHECK_NOTHROW(check_disjoint(f.heldout, {"train-1", "train-2"}));
    CHECK_THROWS_AS(check_disjoint(f.heldout, {"train-1", "held-7"}), EvaluationError);
    CHECK_THROWS_AS(sweep_lambda(f.codec, f.method, f.user, f.heldout, config(1), {"held-0"}), EvaluationError);
}

TEST_CASE("mean agreement") {
    SweepResult r;
    r.points = {{0.3, 0, 0, 0.4}, {0.4, 0, 0, 0.6}, {0.5, 0, 0, 0.8}};
    CHECK(mean_agreement(r, {0.3, 0.4, 0.5}) == doctest::Approx(0.6));
    CHECK(mean_agreement(r, {0.5}) == 0.8);
}

TEST_CASE("curves csv, svg and comparison") {
    const Fixture f;
    auto a = sweep_lambda(f.codec, f.method, f.user, f.heldout, config(1));
    a.model_checksum = "m1";
    a.policy_checksum = "p1";
    auto b = a;
    b.method = "other";
    for (auto& p : b.points) p.agreement = 1.0 - p.agreement;

    const auto dir = testing::temp_dir("report");
    write_curves_csv(dir / "curves.csv", {a, b});
    std::ifstream in(dir / "curves.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header ==
          "schema_version,method,lambda,mean_bits,bits_per_dim,agreement,std_error,images,repeats,seed,"
          "model_checksum,policy_checksum");
    const auto back = read_curves_csv(dir / "curves.csv");
    REQUIRE(back.size() == 2);
    CHECK(back[0].method == "nonadaptive");
    CHECK(back[1].method == "other");
    CHECK(back[0].model_checksum == "m1");
    CHECK(back[0].policy_checksum == "p1");
    CHECK(back[0].seed == a.seed);
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        CHECK(back[0].points[i].lambda == a.points[i].lambda);
        CHECK(back[0].points[i].mean_bits == a.points[i].mean_bits);
        CHECK(back[0].points[i].agreement == a.points[i].agreement);
        CHECK(back[0].points[i].std_error == a.points[i].std_error);
        CHECK(back[1].points[i].agreement == b.points[i].agreement);
    }

    const std::string svg = render_curves_svg({a, b});
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("nonadaptive") != std::string::npos);
    CHECK(svg.find("other") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);

    const auto cmp = compare_methods({a, b});
    CHECK(cmp.methods == std::vector<std::string>{"nonadaptive", "other"});
    REQUIRE(cmp.rows.size() == 5);
    CHECK(cmp.rows[2].agreement[1] == b.points[2].agreement);
    CHECK(cmp.table().find("other") != std::string::npos);
    auto c = a;
    c.points.pop_back();
    CHECK_THROWS_AS(compare_methods({a, c}), EvaluationError);

    const auto files = emit_report({a, b}, dir / "out");
    CHECK(std::filesystem::exists(files.csv));
    CHECK(std::filesystem::exists(files.svg));
    CHECK(std::filesystem::exists(files.table));
    std::filesystem::remove_all(dir);
}
