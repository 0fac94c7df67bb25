#include <doctest.h>

#include "helpers.hpp"
#include "pico/core/error.hpp"
#include "pico/genmodel/synthetic_digits.hpp"
#include "pico/sim/sim_user.hpp"

using namespace pico;
using namespace pico::sim;

namespace {

const genmodel::ImageDataset& digits() {
    static const auto data = genmodel::make_synthetic_digits({3000, 21});
    return data;
}

const TrainedSimUser& trained() {
    static const TrainedSimUser t = [] {
        SimUserConfig cfg;
        cfg.epochs = 3;
        cfg.seed = 5;
        return train_sim_user(digits(), cfg);
    }();
    return t;
}

}  // namespace

TEST_CASE("simulated user learns the digit labels") {
    const auto& t = trained();
    CHECK(t.heldout_accuracy > 0.9);
    CHECK(t.train_loss.size() == 3);
    CHECK(t.train_loss.back() < t.train_loss.front());
    const auto test = genmodel::make_synthetic_digits({500, 99, genmodel::Split::Heldout, "test"});
    CHECK(label_accuracy(t.user, test) > 0.9);
}

TEST_CASE("action distribution is a probability vector") {
    const auto& user = trained().user;
    Rng rng(1);
    for (int i = 0; i < 20; ++i) {
        const Vector q = user.distribution(testing::random_image({28, 28, 1}, rng));
        CHECK(q.size() == 10);
        CHECK((q.array() >= 0.0).all());
        CHECK(q.sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
    const Matrix batch = digits().head(16).as_matrix();
    const Matrix qs = user.distribution_batch(batch);
    const auto argmax = user.argmax_batch(batch);
    for (int i = 0; i < 16; ++i) {
        Eigen::Index best;
        qs.col(i).maxCoeff(&best);
        CHECK(argmax[std::size_t(i)] == int(best));
        CHECK(user.act(digits().images[std::size_t(i)], ActionMode::Argmax, rng) == int(best));
    }
}

TEST_CASE("single-class training yields that class") {
    auto data = digits().head(400);
    std::fill(data.labels.begin(), data.labels.end(), 7);
    SimUserConfig cfg;
    cfg.epochs = 1;
    cfg.action_count = 10;
    const auto t = train_sim_user(data, cfg);
    Rng rng(2);
    for (int i = 0; i < 20; ++i)
        CHECK(t.user.act(digits().images[std::size_t(400 + i)], ActionMode::Argmax, rng) == 7);
}

TEST_CASE("agreement properties") {
    const auto& user = trained().user;
    const auto data = digits().head(200);
    Rng rng(3);
    CHECK(action_agreement(user, data.images, data.images, ActionMode::Argmax, rng) == 1.0);

    // Reversing both lists together leaves the fraction unchanged.
    std::vector<Image> noisy;
    for (const auto& x : data.images) {
        Image y = x;
        y.pixels = (y.pixels + 0.4 * uniform_vector(rng, y.pixels.size())).cwiseMin(1.0);
        noisy.push_back(std::move(y));
    }
    const double forward = action_agreement(user, data.images, noisy, ActionMode::Argmax, rng);
    std::vector<Image> a(data.images.rbegin(), data.images.rend()), b(noisy.rbegin(), noisy.rend());
    CHECK(action_agreement(user, a, b, ActionMode::Argmax, rng) == forward);

    // Sampling twice on the same image agrees with probability sum_i q_i^2.
    std::vector<Image> repeated(4000, testing::random_image({28, 28, 1}, rng));
    const double expected = user.distribution(repeated.front()).squaredNorm();
    const double observed = action_agreement(user, repeated, repeated, ActionMode::Sample, rng);
    CHECK(std::abs(observed - expected) < 4.0 * std::sqrt(expected * (1 - expected) / 4000.0) + 1e-3);

    CHECK_THROWS_AS(action_agreement(user, {}, {}, ActionMode::Argmax, rng), InputError);
    CHECK_THROWS_AS(action_agreement(user, a, std::vector<Image>(a.begin(), a.end() - 1), ActionMode::Argmax, rng),
                    InputError);
}

TEST_CASE("simulated user persistence") {
    const auto& user = trained().user;
    const auto dir = testing::temp_dir("simuser");
    user.save(dir / "u.pico");
    const auto back = SimulatedUser::load(dir / "u.pico");
    const Matrix batch = digits().head(32).as_matrix();
    CHECK(back.distribution_batch(batch) == user.distribution_batch(batch));
    CHECK(back.mode() == user.mode());
    CHECK(back.temperature() == user.temperature());
    std::filesystem::remove_all(dir);
    CHECK(action_mode_from_string(to_string(ActionMode::Sample)) == ActionMode::Sample);
    CHECK_THROWS_AS(action_mode_from_string("greedy"), ConfigError);
}

TEST_CASE("constant user ignores the stimulus") {
    const ConstantUser user(3, 10);
    Rng rng(4);
    for (int i = 0; i < 10; ++i) CHECK(user.act(testing::random_image({28, 28, 1}, rng), ActionMode::Sample, rng) == 3);
}
