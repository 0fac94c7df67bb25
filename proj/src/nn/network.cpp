#include "pico/nn/network.hpp"

#include "pico/core/error.hpp"

namespace pico::nn {

Network::Network(const Network& other) {
    layers_.reserve(other.layers_.size());
    for (const auto& layer : other.layers_) layers_.push_back(layer->clone());
}

Network& Network::operator=(const Network& other) {
    if (this != &other) {
        Network copy(other);
        *this = std::move(copy);
    }
    return *this;
}

Network& Network::add(std::unique_ptr<Layer> layer) {
    layers_.push_back(std::move(layer));
    return *this;
}

Matrix Network::forward(const Matrix& x) const {
    Matrix h = x;
    for (const auto& layer : layers_) h = layer->forward(h);
    return h;
}

Matrix Network::forward(const Matrix& x, Tape& tape) const {
    tape.activations.clear();
    tape.activations.reserve(layers_.size() + 1);
    tape.activations.push_back(x);
    for (const auto& layer : layers_) tape.activations.push_back(layer->forward(tape.activations.back()));
    return tape.activations.back();
}

Matrix Network::backward(const Tape& tape, const Matrix& grad_out, Gradients& grads) const {
    if (tape.activations.size() != layers_.size() + 1) throw InputError("backward: tape does not match network");
    if (grads.size() != parameters().size()) throw InputError("backward: gradient buffers do not match network");
    std::size_t offset = grads.size();
    Matrix g = grad_out;
    for (std::size_t i = layers_.size(); i-- > 0;) {
        const std::size_t n = layers_[i]->parameters().size();
        offset -= n;
        g = layers_[i]->backward(tape.activations[i], tape.activations[i + 1], g,
                                 std::span<Matrix>(grads.data() + offset, n));
    }
    return g;
}

std::vector<Matrix*> Network::parameters() {
    std::vector<Matrix*> out;
    for (auto& layer : layers_)
        for (Matrix* p : layer->parameters()) out.push_back(p);
    return out;
}

std::vector<const Matrix*> Network::parameters() const {
    std::vector<const Matrix*> out;
    for (const auto& layer : layers_)
        for (const Matrix* p : static_cast<const Layer&>(*layer).parameters()) out.push_back(p);
    return out;
}

Gradients Network::zero_gradients() const {
    Gradients grads;
    for (const Matrix* p : parameters()) grads.push_back(Matrix::Zero(p->rows(), p->cols()));
    return grads;
}

std::size_t Network::parameter_count() const {
    std::size_t n = 0;
    for (const Matrix* p : parameters()) n += static_cast<std::size_t>(p->size());
    return n;
}

void Network::save(Archive& archive, const std::string& name) const {
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        layers.push_back(layers_[i]->config());
        const auto params = static_cast<const Layer&>(*layers_[i]).parameters();
        for (std::size_t j = 0; j < params.size(); ++j)
            archive.put(name + "/" + std::to_string(i) + "/" + std::to_string(j), *params[j]);
    }
    archive.meta()["networks"][name] = layers;
}

Network Network::load(const Archive& archive, const std::string& name) {
    const auto& nets = archive.meta().at("networks");
    if (!nets.contains(name)) throw FormatError("archive has no network '" + name + "'");
    Network net;
    const auto& layers = nets.at(name);
    for (std::size_t i = 0; i < layers.size(); ++i) {
        std::vector<Matrix> params;
        for (std::size_t j = 0;; ++j) {
            const auto key = name + "/" + std::to_string(i) + "/" + std::to_string(j);
            if (!archive.contains(key)) break;
            params.push_back(archive.matrix(key));
        }
        net.add(make_layer(layers[i], std::move(params)));
    }
    return net;
}

bool Network::operator==(const Network& other) const {
    const auto a = parameters();
    const auto b = other.parameters();
    if (a.size() != b.size() || layers_.size() != other.layers_.size()) return false;
    for (std::size_t i = 0; i < layers_.size(); ++i)
        if (layers_[i]->config() != other.layers_[i]->config()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i]->rows() != b[i]->rows() || a[i]->cols() != b[i]->cols() || *a[i] != *b[i]) return false;
    return true;
}

Network make_mlp(const std::vector<int>& sizes, Rng& rng) {
    if (sizes.size() < 2) throw ConfigError("make_mlp: need at least input and output sizes");
    Network net;
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
        net.emplace<Dense>(sizes[i], sizes[i + 1], rng);
        if (i + 2 < sizes.size()) net.emplace<Relu>();
    }
    return net;
}

}  // namespace pico::nn
