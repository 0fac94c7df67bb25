#pragma once

#include "pico/nn/network.hpp"

namespace pico::nn {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

class Adam {
public:
    Adam() = default;
    Adam(AdamConfig config, const Network& net);

    // Descends along `grads` (gradients of a loss to be minimized).
    void step(Network& net, const Gradients& grads);
    long steps() const { return steps_; }
    const AdamConfig& config() const { return config_; }

private:
    AdamConfig config_;
    std::vector<Matrix> m_;
    std::vector<Matrix> v_;
    long steps_ = 0;
};

}  // namespace pico::nn
