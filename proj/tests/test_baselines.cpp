#include <doctest.h>

#include "helpers.hpp"
#include "pico/baselines/nonadaptive.hpp"
#include "pico/baselines/perceptual.hpp"
#include "pico/core/error.hpp"

using namespace pico;
using namespace pico::baselines;

TEST_CASE("non-adaptive masks are uniform subsets of exact size") {
    Rng rng(1);
    const int d = 8, n = 100000;
    std::vector<int> hits(d, 0);
    for (int i = 0; i < n; ++i) {
        const auto m = nonadaptive_mask(d, 0.5, rng);
        CHECK(m.transmitted_count() == 4);
        for (int g = 0; g < d; ++g) hits[std::size_t(g)] += m.transmit[std::size_t(g)];
    }
    for (int g = 0; g < d; ++g) CHECK(std::abs(hits[std::size_t(g)] / double(n) - 0.5) < 0.01);

    for (double l : {0.0, 0.3, 0.7, 1.0}) CHECK(nonadaptive_mask(10, l, rng).transmitted_count() == codec::transmit_count(l, 10));
    CHECK(nonadaptive_mask(8, 1.0, rng).transmitted_count() == 8);
    CHECK_THROWS_AS(nonadaptive_mask(8, 1.1, rng), InputError);

    Rng a(5), b(5);
    for (int i = 0; i < 20; ++i) CHECK(nonadaptive_mask(8, 0.5, a) == nonadaptive_mask(8, 0.5, b));

    const auto source = uniform_random_source(6);
    const Vector p = source(Vector::Zero(3), rng);
    CHECK(p.size() == 6);
    CHECK((p.array() >= 0.0).all());
    CHECK((p.array() <= 1.0).all());
}

TEST_CASE("perceptual loss") {
    Rng rng(2);
    const Matrix x = Matrix::Random(20, 5).cwiseAbs();
    CHECK(perceptual_loss(x, x) == 0.0);
    CHECK(perceptual_loss(Matrix::Zero(4, 3), Matrix::Ones(4, 3)) == 1.0);
    const Matrix y = Matrix::Random(20, 5).cwiseAbs();
    const double l = perceptual_loss(x, y);
    CHECK(l > 0.0);
    CHECK(l <= 1.0);
    CHECK(l == doctest::Approx((x - y).cwiseAbs().mean()).epsilon(1e-14));
    CHECK_THROWS_AS(perceptual_loss(x, Matrix::Zero(20, 4)), InputError);
}

TEST_CASE("relaxation endpoints") {
    const auto codec = testing::tiny_bundle(8, 4, 3);
    Rng rng(4);
    const Matrix z = Matrix::Random(8, 6);
    const Matrix zero_p = Matrix::Zero(4, 6);
    const auto r0 = relax_latents(codec, z, zero_p, 0.5);
    CHECK((r0.latents - z).cwiseAbs().maxCoeff() == 0.0);

    // p = 1 on a group lands it on its conditional mean given the transmitted others.
    Matrix p = Matrix::Constant(4, 6, 0.5);
    p.row(3).setOnes();
    const auto r1 = relax_latents(codec, z, p, 0.5);
    for (int i = 0; i < 6; ++i) {
        std::vector<bool> sent(8, false);
        for (int f = 0; f < 4; ++f) sent[std::size_t(f)] = true;  // ties: groups 0 and 1
        const Vector m = codec::conditional_mean(codec.prior, Vector(z.col(i)), sent);
        CHECK((r1.latents.col(i).tail(2) - m.tail(2)).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("perceptual gradients match finite differences") {
    const auto codec = testing::tiny_bundle(8, 4, 5);
    Rng rng(6);
    auto policy = adversary::CompressionPolicy::create(8, 4, rng, 16);
    Matrix images(64, 10);
    for (int i = 0; i < 10; ++i) images.col(i) = testing::random_image({8, 8, 1}, rng).pixels;
    const Matrix z = codec.model->encode_batch(images);
    const auto lg = perceptual_gradients(policy, codec, z, images, 0.5);
    CHECK(lg.loss == doctest::Approx(relaxed_perceptual_loss(policy, codec, z, images, 0.5)).epsilon(1e-12));
    const auto r = testing::check_gradients(
        policy.network(), lg.grads, [&] { return relaxed_perceptual_loss(policy, codec, z, images, 0.5); }, rng);
    CHECK(r.max_relative_error < 1e-4);
        CHECK(testing::conclusive(r));
}

TEST_CASE("perceptual training lowers the relaxed loss") {
    const auto codec = testing::tiny_bundle(8, 4, 7);
    Rng rng(8);
    Matrix images(64, 300);
    for (int i = 0; i < 300; ++i) images.col(i) = testing::random_image({8, 8, 1}, rng).pixels;
    const Matrix z = codec.model->encode_batch(images);
    PerceptualConfig cfg;
    cfg.stage.max_epochs = 40;
    cfg.stage.learning_rate = 1e-2;
    cfg.hidden = 16;
    cfg.seed = 9;
    const auto result = train_perceptual_policy(z, images, codec, cfg);
    CHECK(result.report.best_validation_loss <= result.report.validation_curve.front());
    CHECK(relaxed_perceptual_loss(result.policy, codec, z, images, 0.5) < 1.0);
    const auto again = train_perceptual_policy(z, images, codec, cfg);
    CHECK(again.policy == result.policy);
}
