#include "pico/eval/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>
#include <unordered_set>

#include "pico/core/error.hpp"

namespace pico::eval {

const SweepPoint& SweepResult::at(double lambda) const {
    for (const auto& p : points)
        if (std::abs(p.lambda - lambda) < 1e-12) return p;
    throw NotFoundError("sweep of " + method + " has no point at lambda " + std::to_string(lambda));
}

void check_disjoint(const genmodel::ImageDataset& heldout, const std::vector<std::string>& training_ids) {
    const std::unordered_set<std::string> train(training_ids.begin(), training_ids.end());
    for (const auto& id : heldout.ids)
        if (train.count(id)) throw EvaluationError("held-out image '" + id + "' also appears in training data");
}

SweepResult sweep_lambda(const codec::CodecBundle& codec, const MethodUnderTest& method, const sim::UserPolicy& user,
                         const genmodel::ImageDataset& heldout, const SweepConfig& config,
                         const std::vector<std::string>& training_ids) {
    codec.validate();
    heldout.validate();
    if (heldout.empty()) throw EvaluationError("held-out set is empty");
    if (config.lambdas.empty()) throw ConfigError("sweep needs at least one lambda");
    if (config.repeats < 1) throw ConfigError("sweep needs at least one repeat");
    if (!method.probs) throw ConfigError("method '" + method.name + "' has no probability source");
    for (double l : config.lambdas) codec::transmit_count(l, codec.group_count());
    check_disjoint(heldout, training_ids);

    const std::size_t n = heldout.size();
    const std::size_t n_lambda = config.lambdas.size();
    std::vector<int> reference(n);
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(derive_seed(config.seed, i));
        reference[i] = user.act(heldout.images[i], config.mode, rng);
    }

    // cell = j * n + i  (lambda j, image i)
    std::vector<double> cell_agreement(n * n_lambda), cell_bits(n * n_lambda);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t cell; (cell = next.fetch_add(1)) < n * n_lambda;) {
            try {
                const std::size_t j = cell / n, i = cell % n;
                Rng rng(derive_seed(config.seed, 1'000'000 + cell));
                const codec::CompressionConfig cc{config.lambdas[j], std::nullopt, 0};
                int matches = 0;
                double bits = 0.0;
                for (int r = 0; r < config.repeats; ++r) {
                    const auto c = codec::compress(codec, method.probs, cc, heldout.images[i], rng);
                    bits += c.bits;
                    matches += user.act(c.image, config.mode, rng) == reference[i];
                }
                cell_agreement[cell] = double(matches) / config.repeats;
                cell_bits[cell] = bits / config.repeats;
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = n * n_lambda;
            }
        }
    };
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t threads =
        std::min<std::size_t>(config.threads > 0 ? std::size_t(config.threads) : hw, n * n_lambda);
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    SweepResult out;
    out.method = method.name;
    out.seed = config.seed;
    out.model_checksum = codec.model->checksum();
    out.policy_checksum = method.checksum;
    const double dims = double(heldout.shape.size());
    for (std::size_t j = 0; j < n_lambda; ++j) {
        SweepPoint p;
        p.lambda = config.lambdas[j];
        p.images = n;
        p.repeats = config.repeats;
        double sum_a = 0.0, sum_b = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sum_a += cell_agreement[j * n + i];
            sum_b += cell_bits[j * n + i];
        }
        p.agreement = sum_a / double(n);
        p.mean_bits = sum_b / double(n);
        p.bits_per_dim = p.mean_bits / dims;
        if (n > 1) {
            double ss = 0.0;
            for (std::size_t i = 0; i < n; ++i) ss += std::pow(cell_agreement[j * n + i] - p.agreement, 2);
            p.std_error = std::sqrt(ss / double(n - 1)) / std::sqrt(double(n));
        }
        out.points.push_back(p);
    }
    return out;
}

double reconstruction_agreement(const codec::CodecBundle& codec, const sim::UserPolicy& user,
                                const genmodel::ImageDataset& heldout, sim::ActionMode mode, std::uint64_t seed) {
    if (heldout.empty()) throw EvaluationError("held-out set is empty");
    int matches = 0;
    for (std::size_t i = 0; i < heldout.size(); ++i) {
        Rng rng(derive_seed(seed, i));
        const Image& x = heldout.images[i];
        const int a = user.act(x, mode, rng);
        matches += user.act(codec.model->decode(codec.model->encode(x)), mode, rng) == a;
    }
    return double(matches) / double(heldout.size());
}

double mean_agreement(const SweepResult& result, const std::vector<double>& lambdas) {
    if (lambdas.empty()) throw InputError("mean_agreement needs at least one lambda");
    double total = 0.0;
    for (double l : lambdas) total += result.at(l).agreement;
    return total / double(lambdas.size());
}

}  // namespace pico::eval
