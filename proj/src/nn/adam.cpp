#include "pico/nn/adam.hpp"

#include <cmath>

#include "pico/core/error.hpp"

namespace pico::nn {

Adam::Adam(AdamConfig config, const Network& net) : config_(config) {
    for (const Matrix* p : net.parameters()) {
        m_.push_back(Matrix::Zero(p->rows(), p->cols()));
        v_.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
}

void Adam::step(Network& net, const Gradients& grads) {
    auto params = net.parameters();
    if (params.size() != m_.size() || grads.size() != m_.size())
        throw InputError("adam: optimizer state does not match network");
    ++steps_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * grads[i];
        v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * grads[i].cwiseAbs2();
        params[i]->array() -= config_.learning_rate * (m_[i].array() / c1) /
                              ((v_[i].array() / c2).sqrt() + config_.epsilon);
    }
}

}  // namespace pico::nn
