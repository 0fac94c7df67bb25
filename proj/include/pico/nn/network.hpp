#pragma once

#include <memory>
#include <string>
#include <vector>

#include "pico/core/archive.hpp"
#include "pico/nn/layers.hpp"

namespace pico::nn {

// One gradient buffer per parameter tensor, in Network::parameters() order.
using Gradients = std::vector<Matrix>;

// Activations recorded by a forward pass; activations[0] is the input.
struct Tape {
    std::vector<Matrix> activations;
};

// Sequential stack of layers with value semantics.
class Network {
public:
    Network() = default;
    Network(const Network& other);
    Network& operator=(const Network& other);
    Network(Network&&) noexcept = default;
    Network& operator=(Network&&) noexcept = default;

    Network& add(std::unique_ptr<Layer> layer);
    template <typename L, typename... Args>
    Network& emplace(Args&&... args) {
        return add(std::make_unique<L>(std::forward<Args>(args)...));
    }

    std::size_t layer_count() const { return layers_.size(); }
    bool empty() const { return layers_.empty(); }

    Matrix forward(const Matrix& x) const;
    Matrix forward(const Matrix& x, Tape& tape) const;
    // Returns d(loss)/d(input); accumulates parameter gradients into `grads`.
    Matrix backward(const Tape& tape, const Matrix& grad_out, Gradients& grads) const;

    std::vector<Matrix*> parameters();
    std::vector<const Matrix*> parameters() const;
    Gradients zero_gradients() const;
    std::size_t parameter_count() const;

    void save(Archive& archive, const std::string& name) const;
    static Network load(const Archive& archive, const std::string& name);

    bool operator==(const Network& other) const;

private:
    std::vector<std::unique_ptr<Layer>> layers_;
};

// Dense stack: sizes = {in, hidden..., out}, ReLU between layers; the output
// layer is left linear so callers append the activation they need.
Network make_mlp(const std::vector<int>& sizes, Rng& rng);

}  // namespace pico::nn
