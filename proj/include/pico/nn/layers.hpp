#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pico/core/rng.hpp"
#include "pico/core/tensor.hpp"

namespace pico::nn {

// A layer is an immutable function of its parameters. forward() never mutates
// the layer, so trained networks can be evaluated concurrently; backward()
// receives the cached input/output and accumulates parameter gradients into
// caller-owned buffers aligned with parameters().
class Layer {
public:
    virtual ~Layer() = default;

    virtual Matrix forward(const Matrix& x) const = 0;
    virtual Matrix backward(const Matrix& x, const Matrix& y, const Matrix& grad_out,
                            std::span<Matrix> param_grads) const = 0;

    virtual std::vector<Matrix*> parameters() { return {}; }
    virtual std::vector<const Matrix*> parameters() const { return {}; }

    virtual std::unique_ptr<Layer> clone() const = 0;
    virtual nlohmann::json config() const = 0;
};

class Dense final : public Layer {
public:
    Dense(int in, int out, Rng& rng);
    Dense(Matrix weight, Matrix bias);

    Matrix forward(const Matrix& x) const override;
    Matrix backward(const Matrix& x, const Matrix& y, const Matrix& grad_out,
                    std::span<Matrix> param_grads) const override;
    std::vector<Matrix*> parameters() override { return {&weight_, &bias_}; }
    std::vector<const Matrix*> parameters() const override { return {&weight_, &bias_}; }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Dense>(*this); }
    nlohmann::json config() const override;

private:
    Matrix weight_;  // out x in
    Matrix bias_;    // out x 1
};

class Relu final : public Layer {
public:
    Matrix forward(const Matrix& x) const override;
    Matrix backward(const Matrix& x, const Matrix& y, const Matrix& grad_out,
                    std::span<Matrix> param_grads) const override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Relu>(); }
    nlohmann::json config() const override { return {{"type", "relu"}}; }
};

class Sigmoid final : public Layer {
public:
    Matrix forward(const Matrix& x) const override;
    Matrix backward(const Matrix& x, const Matrix& y, const Matrix& grad_out,
                    std::span<Matrix> param_grads) const override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Sigmoid>(); }
    nlohmann::json config() const override { return {{"type", "sigmoid"}}; }
};

// sigmoid(x - mean(x)) per column: outputs stay in (0,1) but the column
// cannot drift uniformly toward 0 or 1, only its ordering can change.
class CenteredSigmoid final : public Layer {
public:
    Matrix forward(const Matrix& x) const override;
    Matrix backward(const Matrix& x, const Matrix& y, const Matrix& grad_out,
                    std::span<Matrix> param_grads) const override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<CenteredSigmoid>(); }
    nlohmann::json config() const override { return {{"type", "centered_sigmoid"}}; }
};

struct ConvGeometry {
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 0;
    int stride = 1;
    int padding = 0;
    int in_height = 0;
    int in_width = 0;

    int out_height() const;
    int out_width() const;
    int in_size() const { return in_channels * in_height * in_width; }
    int out_size() const { return out_channels * out_height() * out_width(); }
    nlohmann::json to_json() const;
    static ConvGeometry from_json(const nlohmann::json& j);
};

class Conv2d final : public Layer {
public:
    Conv2d(ConvGeometry g, Rng& rng);
    Conv2d(ConvGeometry g, Matrix weight, Matrix bias);

    Matrix forward(const Matrix& x) const override;
    Matrix backward(const Matrix& x, const Matrix& y, const Matrix& grad_out,
                    std::span<Matrix> param_grads) const override;
    std::vector<Matrix*> parameters() override { return {&weight_, &bias_}; }
    std::vector<const Matrix*> parameters() const override { return {&weight_, &bias_}; }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv2d>(*this); }
    nlohmann::json config() const override;
    const ConvGeometry& geometry() const { return g_; }

private:
    ConvGeometry g_;
    Matrix weight_;  // out_channels x (in_channels * k * k)
    Matrix bias_;    // out_channels x 1
};

// Adjoint of Conv2d in the data argument; upsamples by `stride`.
// Output size is (in - 1) * stride - 2 * padding + kernel.
class ConvTranspose2d final : public Layer {
public:
    ConvTranspose2d(ConvGeometry g, Rng& rng);
    ConvTranspose2d(ConvGeometry g, Matrix weight, Matrix bias);

    Matrix forward(const Matrix& x) const override;
    Matrix backward(const Matrix& x, const Matrix& y, const Matrix& grad_out,
                    std::span<Matrix> param_grads) const override;
    std::vector<Matrix*> parameters() override { return {&weight_, &bias_}; }
    std::vector<const Matrix*> parameters() const override { return {&weight_, &bias_}; }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<ConvTranspose2d>(*this); }
    nlohmann::json config() const override;

    int out_height() const;
    int out_width() const;

private:
    ConvGeometry g_;
    Matrix weight_;  // in_channels x (out_channels * k * k)
    Matrix bias_;    // out_channels x 1
};

// Rebuilds a layer from config() plus its parameter tensors.
std::unique_ptr<Layer> make_layer(const nlohmann::json& config, std::vector<Matrix> params);

}  // namespace pico::nn
