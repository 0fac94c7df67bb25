#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "pico/codec/bits.hpp"
#include "pico/codec/compress.hpp"
#include "pico/core/error.hpp"

using namespace pico;
using namespace pico::codec;

namespace {

double normal_cdf(double x) { return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))); }

std::vector<bool> all_groups(int d, bool value) { return std::vector<bool>(std::size_t(d), value); }

MaskDecision mask_of(const std::vector<bool>& transmit) {
    MaskDecision m;
    m.probs = Vector::Constant(Eigen::Index(transmit.size()), 0.5);
    m.transmit = transmit;
    m.lambda = 0.0;
    return m;
}

// Closed-form conditional moments via an explicit inverse of the ridged S22
// (the library uses a Cholesky solve).
std::pair<Vector, Matrix> closed_form(const GaussianPrior& p, const Vector& z, const std::vector<int>& masked,
                                      const std::vector<int>& sent) {
    const Matrix s11 = p.covariance(masked, masked), s12 = p.covariance(masked, sent);
    const Matrix s22 = p.covariance(sent, sent) + p.ridge * Matrix::Identity(Eigen::Index(sent.size()), Eigen::Index(sent.size()));
    const Matrix s22_inv = s22.fullPivLu().inverse();
    const Vector mu = p.mean(masked) + s12 * s22_inv * (z(sent) - p.mean(sent));
    return {mu, s11 - s12 * s22_inv * s12.transpose()};
}

}  // namespace

TEST_CASE("grouping schemes") {
    const auto g = GroupingScheme::contiguous(10, 3);
    CHECK(g.offsets() == std::vector<int>{0, 4, 7, 10});
    CHECK(g.group_of(0) == 0);
    CHECK(g.group_of(4) == 1);
    CHECK(g.group_of(9) == 2);
    CHECK(GroupingScheme::from_json(g.to_json()) == g);
    CHECK_THROWS(GroupingScheme::from_offsets({0, 3, 3, 5}));
    CHECK_THROWS(GroupingScheme::from_offsets({1, 5}));
    CHECK_THROWS(GroupingScheme::contiguous(3, 4));
    CHECK_THROWS(g.group_of(10));
}

TEST_CASE("select_mask examples") {
    const auto g4 = GroupingScheme::contiguous(4, 4);
    Vector p(4);
    p << 0.1, 0.9, 0.5, 0.2;
    const auto m = select_mask(p, 0.5, g4);
    CHECK(m.transmit == std::vector<bool>{true, false, false, true});
    CHECK(m.transmitted_count() == 2);
    CHECK(select_mask(p, 1.0, g4).transmitted_count() == 4);
    CHECK(select_mask(p, 0.0, g4).transmitted_count() == 0);
    CHECK(select_mask(Vector::Constant(4, 0.3), 0.5, g4).transmit == std::vector<bool>{true, true, false, false});
    CHECK_THROWS_AS(select_mask(p, 1.5, g4), InputError);
    CHECK_THROWS_AS(select_mask(p, -0.1, g4), InputError);
    CHECK_THROWS_AS(select_mask(Vector::Constant(3, 0.1), 0.5, g4), InputError);
    Vector out_of_range = p;
    out_of_range[0] = 1.2;
    CHECK_THROWS_AS(select_mask(out_of_range, 0.5, g4), InputError);
}

TEST_CASE("transmit count is floor(lambda d) without representation error") {
    CHECK(transmit_count(0.3, 10) == 3);
    CHECK(transmit_count(0.7, 10) == 7);
    CHECK(transmit_count(0.5, 7) == 3);
    CHECK(transmit_count(1.0, 7) == 7);
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        const double l = uniform01(rng);
        const int d = std::uniform_int_distribution<int>(1, 40)(rng);
        const int k = transmit_count(l, d);
        CHECK(k >= 0);
        CHECK(k <= d);
        CHECK(std::abs(k - std::floor(l * d)) <= 1);
    }
}

TEST_CASE("mask decision json round trip") {
    Vector p(3);
    p << 0.25, 0.125, 0.75;
    const auto m = select_mask(p, 0.7, GroupingScheme::contiguous(3, 3));
    CHECK(MaskDecision::from_json(nlohmann::json::parse(m.to_json().dump())) == m);
}

TEST_CASE("fit_prior") {
    SUBCASE("constant embeddings") {
        Vector v(3);
        v << 1, -2, 0.5;
        std::vector<Vector> e(5, v);
        const auto p = fit_prior(e, 1e-6);
        CHECK(p.mean == v);
        CHECK((p.covariance - 1e-6 * Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-18);
    }
    SUBCASE("known 2-D gaussian") {
        Rng rng(2);
        Vector mu(2);
        mu << 0.5, -1.0;
        Matrix sigma(2, 2);
        sigma << 1.0, 0.6, 0.6, 2.0;
        const Matrix l = sigma.llt().matrixL();
        Matrix draws(2, 10000);
        for (int i = 0; i < 10000; ++i) draws.col(i) = mu + l * standard_normal(rng, 2);
        const auto p = fit_prior(draws);
        CHECK((p.mean - mu).cwiseAbs().maxCoeff() < 0.05);
        CHECK((p.covariance - sigma).cwiseAbs().maxCoeff() < 0.05);
    }
    SUBCASE("too few samples") {
        CHECK_THROWS_AS(fit_prior(Matrix::Random(4, 4)), EstimationError);
        CHECK_NOTHROW(fit_prior(Matrix::Random(4, 5)));
    }
}

TEST_CASE("conditional resampling") {
    Rng rng(3);
    const auto prior = testing::random_prior(6, rng);
    const auto g = GroupingScheme::contiguous(6, 6);
    const Vector z = standard_normal(rng, 6);

    SUBCASE("all transmitted returns z exactly") {
        CHECK(conditional_resample(prior, z, mask_of(all_groups(6, true)), g, rng) == z);
    }
    SUBCASE("transmitted coordinates are copied exactly") {
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<bool> t(6);
            for (auto&& b : t) b = bernoulli(rng, 0.5);
            const Vector out = conditional_resample(prior, z, mask_of(t), g, rng);
            for (int i = 0; i < 6; ++i)
                if (t[std::size_t(i)]) CHECK(out[i] == z[i]);
        }
    }
    SUBCASE("diagonal covariance means independence") {
        GaussianPrior diag = prior;
        diag.covariance = prior.covariance.diagonal().asDiagonal();
        const std::vector<bool> t{true, false, true, false, false, true};
        const ConditionalGaussian cg(diag, t);
        const Vector mean = cg.mean(z);
        CHECK((mean - diag.mean(cg.masked())).cwiseAbs().maxCoeff() < 1e-12);
        const Matrix expected = diag.covariance(cg.masked(), cg.masked());
        CHECK((cg.covariance() - expected).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("moments match the closed form") {
        const std::vector<bool> t{true, false, false, true, false, true};
        std::vector<int> masked, sent;
        for (int i = 0; i < 6; ++i) (t[std::size_t(i)] ? sent : masked).push_back(i);
        const auto [mu, cov] = closed_form(prior, z, masked, sent);
        const int n = 100000;
        Matrix draws(3, n);
        for (int i = 0; i < n; ++i) draws.col(i) = conditional_resample(prior, z, mask_of(t), g, rng)(masked);
        const Vector mean = draws.rowwise().mean();
        const Matrix centered = draws.colwise() - mean;
        const Matrix emp = centered * centered.transpose() / double(n - 1);
        CHECK((mean - mu).cwiseAbs().maxCoeff() < 0.05);
        CHECK((emp - cov).cwiseAbs().maxCoeff() < 0.05);
    }
    SUBCASE("nothing transmitted samples the prior") {
        const int n = 100000;
        Matrix draws(6, n);
        for (int i = 0; i < n; ++i) draws.col(i) = conditional_resample(prior, z, mask_of(all_groups(6, false)), g, rng);
        CHECK((Vector(draws.rowwise().mean()) - prior.mean).cwiseAbs().maxCoeff() < 0.05);
    }
    SUBCASE("conditional covariance is PSD for every mask") {
        for (int bits = 0; bits < 64; ++bits) {
            std::vector<bool> t(6);
            for (int i = 0; i < 6; ++i) t[std::size_t(i)] = (bits >> i) & 1;
            const ConditionalGaussian cg(prior, t);
            if (cg.covariance().size() == 0) continue;
            Eigen::SelfAdjointEigenSolver<Matrix> es(cg.covariance());
            CHECK(es.eigenvalues().minCoeff() >= -1e-8);
        }
    }
    SUBCASE("conditional_mean agrees with the closed form") {
        const std::vector<bool> t{false, true, true, false, true, false};
        std::vector<int> masked, sent;
        for (int i = 0; i < 6; ++i) (t[std::size_t(i)] ? sent : masked).push_back(i);
        const Vector m = conditional_mean(prior, z, t);
        CHECK((Vector(m(masked)) - closed_form(prior, z, masked, sent).first).cwiseAbs().maxCoeff() < 1e-8);
        CHECK(Vector(m(sent)) == Vector(z(sent)));
    }
}

TEST_CASE("bit accounting") {
    GaussianPrior standard;
    standard.mean = Vector::Zero(1);
    standard.covariance = Matrix::Identity(1, 1);
    const auto g1 = GroupingScheme::contiguous(1, 1);
    const double oracle = -std::log2(normal_cdf(0.1) - normal_cdf(0.0));
    CHECK(std::abs(oracle - 4.65) < 0.01);
    CHECK(std::abs(measure_bits(standard, Vector::Zero(1), mask_of({true}), g1) - oracle) < 1e-6);
    CHECK(measure_bits(standard, Vector::Zero(1), mask_of({false}), g1) == 0.0);

    // Negative z-score bins and far tails.
    for (double zs : {-0.05, -1.37, 2.42, 6.5, -9.0}) {
        const double k = std::floor(zs / 0.1);
        const double expected = -std::log2(normal_cdf((k + 1) * 0.1) - normal_cdf(k * 0.1));
        if (std::abs(zs) < 6.0) CHECK(std::abs(measure_bits(standard, Vector::Constant(1, zs), mask_of({true}), g1) - expected) < 1e-6);
        CHECK(std::isfinite(measure_bits(standard, Vector::Constant(1, zs), mask_of({true}), g1)));
    }

    Rng rng(4);
    const auto prior = testing::random_prior(5, rng);
    const auto g5 = GroupingScheme::contiguous(5, 5);
    for (int trial = 0; trial < 100; ++trial) {
        const Vector z = standard_normal(rng, 5);
        const Vector p = uniform_vector(rng, 5);
        double previous = -1.0;
        for (double l : {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}) {
            const double bits = measure_bits(prior, z, select_mask(p, l, g5), g5);
            CHECK(bits >= 0.0);
            CHECK(bits > previous);
            previous = bits;
        }
    }

    GaussianPrior degenerate = standard;
    degenerate.covariance(0, 0) = 0.0;
    CHECK_THROWS_WITH_AS(measure_bits(degenerate, Vector::Zero(1), mask_of({true}), g1), doctest::Contains("feature 0"),
                         NumericalError);
}

TEST_CASE("compress end to end") {
    const auto bundle = testing::tiny_bundle(6, 3, 9);
    Rng rng(10);
    const Image x = testing::random_image({8, 8, 1}, rng);
    const ProbabilitySource probs = [](const Vector&, Rng& r) { return uniform_vector(r, 3); };

    const auto full = compress(bundle, probs, {1.0, std::nullopt, 0}, x, rng);
    CHECK(full.resampled == full.latent);
    CHECK(full.image.pixels == bundle.model->decode(full.latent).pixels);
    CHECK(full.bits > 0.0);

    const auto none = compress(bundle, probs, {0.0, std::nullopt, 0}, x, rng);
    CHECK(none.bits == 0.0);
    CHECK(none.mask.transmitted_count() == 0);

    const auto budget = compress(bundle, probs, {1.0, full.bits / 2.0, 0}, x, rng);
    CHECK(budget.bits <= full.bits / 2.0);
    CHECK(budget.mask.lambda == doctest::Approx(budget.mask.transmitted_count() / 3.0));

    CHECK_THROWS_AS(compress(bundle, probs, {1.0, std::nullopt, 0}, Image(ImageShape{4, 4, 1}), rng), InputError);

    auto mismatched = bundle;
    mismatched.grouping = GroupingScheme::contiguous(5, 5);
    CHECK_THROWS_AS(mismatched.validate(), InputError);
}

TEST_CASE("prior file round trip") {
    const auto dir = testing::temp_dir("prior");
    Rng rng(11);
    const PriorFile f{testing::random_prior(4, rng), GroupingScheme::contiguous(4, 2), "abc123"};
    save_prior(dir / "prior.pico", f);
    const auto back = load_prior(dir / "prior.pico");
    CHECK(back.prior.mean == f.prior.mean);
    CHECK(back.prior.covariance == f.prior.covariance);
    CHECK(back.grouping == f.grouping);
    CHECK(back.model_checksum == "abc123");
    std::filesystem::remove_all(dir);
}
