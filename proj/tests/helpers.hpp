#pragma once

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>

#include "pico/codec/compress.hpp"
#include "pico/nn/network.hpp"

namespace pico::testing {

struct GradCheck {
    double max_relative_error = 0.0;
    std::size_t checked = 0;
    std::size_t kinks = 0;  // coordinates excluded for straddling a ReLU kink
};

// Central differences of `loss` against `analytic` over every output-layer
// coordinate plus `samples` random coordinates of the other tensors. The
// relative error of a coordinate is |a - n| / max(|a|, |n|, floor).
//
// A coordinate is excluded (counted in `kinks`) when the loss is not smooth
// within the step: for a smooth loss the second difference S(step) scales as
// step^2, so 16 S(h/4) matches S(h); a ReLU kink inside [w-h, w+h] breaks
// that scaling.
inline GradCheck check_gradients(nn::Network& net, const nn::Gradients& analytic, const std::function<double()>& loss,
                                 Rng& rng, int samples = 400, double h = 1e-5, double floor = 1e-6) {
    auto params = net.parameters();
    GradCheck out;
    const double base = loss();
    const double noise = 1e-13 * std::max(1.0, std::abs(base));
    auto probe = [&](std::size_t t, Eigen::Index i) {
        double& w = params[t]->data()[i];
        const double saved = w;
        auto at = [&](double v) {
            w = v;
            return loss();
        };
        const double up = at(saved + h), down = at(saved - h);
        const double up4 = at(saved + h / 4), down4 = at(saved - h / 4);
        w = saved;
        const double s1 = up + down - 2.0 * base, s4 = up4 + down4 - 2.0 * base;
        if (std::abs(16.0 * s4 - s1) > 0.1 * std::abs(s1) + noise) {
            ++out.kinks;
            return;
        }
        const double numeric = (up - down) / (2.0 * h);
        const double a = analytic[t].data()[i];
        const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
        out.max_relative_error = std::max(out.max_relative_error, rel);
        ++out.checked;
    };
    const std::size_t last = params.size() - 1;
    for (std::size_t t = params.size() - 2; t <= last; ++t)
        for (Eigen::Index i = 0; i < params[t]->size(); ++i) probe(t, i);
    std::uniform_int_distribution<std::size_t> pick_tensor(0, params.size() - 1);
    for (int s = 0; s < samples; ++s) {
        const std::size_t t = pick_tensor(rng);
        std::uniform_int_distribution<Eigen::Index> pick(0, params[t]->size() - 1);
        probe(t, pick(rng));
    }
    return out;
}

// A check only counts when nearly every probed coordinate was differentiable.
inline bool conclusive(const GradCheck& r) { return r.kinks * 100 <= r.checked + r.kinks && r.checked > 0; }

inline std::filesystem::path temp_dir(const std::string& name) {
    static int counter = 0;
    auto dir = std::filesystem::temp_directory_path() /
               ("pico-test-" + name + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// Random SPD covariance with eigenvalues bounded away from zero.
inline codec::GaussianPrior random_prior(int dim, Rng& rng) {
    Matrix a(dim, dim);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = standard_normal(rng, 1)[0];
    codec::GaussianPrior p;
    p.mean = standard_normal(rng, dim);
    p.covariance = a * a.transpose() / double(dim) + 0.2 * Matrix::Identity(dim, dim);
    return p;
}

// Untrained backbone on 8x8 grayscale images with a random prior.
inline codec::CodecBundle tiny_bundle(int latent_dim, int groups, std::uint64_t seed) {
    Rng rng(seed);
    auto model = std::make_shared<const genmodel::GenerativeModel>(
        genmodel::GenerativeModel::create(ImageShape{8, 8, 1}, latent_dim, 1.0, rng));
    return codec::CodecBundle{model, random_prior(latent_dim, rng), codec::GroupingScheme::contiguous(latent_dim, groups)};
}

inline Image random_image(ImageShape shape, Rng& rng) {
    return Image(shape, uniform_vector(rng, shape.size()));
}

}  // namespace pico::testing
