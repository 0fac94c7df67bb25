#include "pico/nn/layers.hpp"

#include <cmath>

#include "pico/core/error.hpp"

namespace pico::nn {
namespace {

Matrix uniform_init(Eigen::Index rows, Eigen::Index cols, double bound, Rng& rng) {
    std::uniform_real_distribution<double> u(-bound, bound);
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = u(rng);
    return m;
}

// Unfolds one channel-major image (C,H,W) into (C*k*k) x (OH*OW) patches.
void im2col(const double* img, int channels, int height, int width, int k, int stride, int pad, int out_h,
            int out_w, Matrix& cols) {
    cols.resize(static_cast<Eigen::Index>(channels) * k * k, static_cast<Eigen::Index>(out_h) * out_w);
    for (int c = 0; c < channels; ++c)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                const Eigen::Index row = (static_cast<Eigen::Index>(c) * k + ky) * k + kx;
                for (int oy = 0; oy < out_h; ++oy) {
                    const int y = oy * stride - pad + ky;
                    for (int ox = 0; ox < out_w; ++ox) {
                        const int x = ox * stride - pad + kx;
                        const bool inside = y >= 0 && y < height && x >= 0 && x < width;
                        cols(row, oy * out_w + ox) = inside ? img[(c * height + y) * width + x] : 0.0;
                    }
                }
            }
}

// Adjoint of im2col: scatters patch values back, accumulating overlaps.
void col2im(const Matrix& cols, int channels, int height, int width, int k, int stride, int pad, int out_h,
            int out_w, double* img) {
    for (int c = 0; c < channels; ++c)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                const Eigen::Index row = (static_cast<Eigen::Index>(c) * k + ky) * k + kx;
                for (int oy = 0; oy < out_h; ++oy) {
                    const int y = oy * stride - pad + ky;
                    if (y < 0 || y >= height) continue;
                    for (int ox = 0; ox < out_w; ++ox) {
                        const int x = ox * stride - pad + kx;
                        if (x < 0 || x >= width) continue;
                        img[(c * height + y) * width + x] += cols(row, oy * out_w + ox);
                    }
                }
            }
}

void check_rows(const Matrix& x, Eigen::Index expected, const char* layer) {
    if (x.rows() != expected)
        throw InputError(std::string(layer) + ": expected " + std::to_string(expected) + " input features, got " +
                         std::to_string(x.rows()));
}

}  // namespace

// ---- Dense ----

Dense::Dense(int in, int out, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    weight_ = uniform_init(out, in, bound, rng);
    bias_ = uniform_init(out, 1, bound, rng);
}

Dense::Dense(Matrix weight, Matrix bias) : weight_(std::move(weight)), bias_(std::move(bias)) {
    if (bias_.rows() != weight_.rows() || bias_.cols() != 1) throw FormatError("dense: bias shape mismatch");
}

Matrix Dense::forward(const Matrix& x) const {
    check_rows(x, weight_.cols(), "dense");
    Matrix y = weight_ * x;
    y.colwise() += bias_.col(0);
    return y;
}

Matrix Dense::backward(const Matrix& x, const Matrix&, const Matrix& grad_out,
                       std::span<Matrix> param_grads) const {
    param_grads[0].noalias() += grad_out * x.transpose();
    param_grads[1].col(0) += grad_out.rowwise().sum();
    return weight_.transpose() * grad_out;
}

nlohmann::json Dense::config() const {
    return {{"type", "dense"}, {"in", weight_.cols()}, {"out", weight_.rows()}};
}

// ---- activations ----

Matrix Relu::forward(const Matrix& x) const { return x.cwiseMax(0.0); }

Matrix Relu::backward(const Matrix& x, const Matrix&, const Matrix& grad_out, std::span<Matrix>) const {
    return (x.array() > 0.0).select(grad_out, 0.0);
}

Matrix Sigmoid::forward(const Matrix& x) const { return (1.0 / (1.0 + (-x.array()).exp())).matrix(); }

Matrix Sigmoid::backward(const Matrix&, const Matrix& y, const Matrix& grad_out, std::span<Matrix>) const {
    return (grad_out.array() * y.array() * (1.0 - y.array())).matrix();
}

Matrix CenteredSigmoid::forward(const Matrix& x) const {
    Matrix centered = x.rowwise() - x.colwise().mean();
    return (1.0 / (1.0 + (-centered.array()).exp())).matrix();
}

Matrix CenteredSigmoid::backward(const Matrix&, const Matrix& y, const Matrix& grad_out,
                                 std::span<Matrix>) const {
    Matrix s = (grad_out.array() * y.array() * (1.0 - y.array())).matrix();
    return s.rowwise() - s.colwise().mean();
}

// ---- convolution ----

int ConvGeometry::out_height() const { return (in_height + 2 * padding - kernel) / stride + 1; }
int ConvGeometry::out_width() const { return (in_width + 2 * padding - kernel) / stride + 1; }

nlohmann::json ConvGeometry::to_json() const {
    return {{"in_channels", in_channels}, {"out_channels", out_channels}, {"kernel", kernel}, {"stride", stride},
            {"padding", padding},         {"in_height", in_height},       {"in_width", in_width}};
}

ConvGeometry ConvGeometry::from_json(const nlohmann::json& j) {
    return ConvGeometry{j.at("in_channels").get<int>(), j.at("out_channels").get<int>(), j.at("kernel").get<int>(),
                        j.at("stride").get<int>(),      j.at("padding").get<int>(),      j.at("in_height").get<int>(),
                        j.at("in_width").get<int>()};
}

Conv2d::Conv2d(ConvGeometry g, Rng& rng) : g_(g) {
    const int fan_in = g.in_channels * g.kernel * g.kernel;
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    weight_ = uniform_init(g.out_channels, fan_in, bound, rng);
    bias_ = uniform_init(g.out_channels, 1, bound, rng);
}

Conv2d::Conv2d(ConvGeometry g, Matrix weight, Matrix bias) : g_(g), weight_(std::move(weight)), bias_(std::move(bias)) {
    if (weight_.rows() != g.out_channels || weight_.cols() != g.in_channels * g.kernel * g.kernel)
        throw FormatError("conv2d: weight shape mismatch");
}

Matrix Conv2d::forward(const Matrix& x) const {
    check_rows(x, g_.in_size(), "conv2d");
    const int oh = g_.out_height(), ow = g_.out_width(), spatial = oh * ow;
    Matrix y(g_.out_size(), x.cols());
    Matrix cols;
    for (Eigen::Index b = 0; b < x.cols(); ++b) {
        im2col(x.col(b).data(), g_.in_channels, g_.in_height, g_.in_width, g_.kernel, g_.stride, g_.padding, oh, ow,
               cols);
        Matrix out = weight_ * cols;  // out_channels x spatial
        out.colwise() += bias_.col(0);
        Eigen::Map<Matrix>(y.col(b).data(), spatial, g_.out_channels) = out.transpose();
    }
    return y;
}

Matrix Conv2d::backward(const Matrix& x, const Matrix&, const Matrix& grad_out,
                        std::span<Matrix> param_grads) const {
    const int oh = g_.out_height(), ow = g_.out_width(), spatial = oh * ow;
    Matrix grad_in = Matrix::Zero(x.rows(), x.cols());
    Matrix cols;
    for (Eigen::Index b = 0; b < x.cols(); ++b) {
        im2col(x.col(b).data(), g_.in_channels, g_.in_height, g_.in_width, g_.kernel, g_.stride, g_.padding, oh, ow,
               cols);
        const Matrix g = Eigen::Map<const Matrix>(grad_out.col(b).data(), spatial, g_.out_channels).transpose();
        param_grads[0].noalias() += g * cols.transpose();
        param_grads[1].col(0) += g.rowwise().sum();
        const Matrix dcols = weight_.transpose() * g;
        col2im(dcols, g_.in_channels, g_.in_height, g_.in_width, g_.kernel, g_.stride, g_.padding, oh, ow,
               grad_in.col(b).data());
    }
    return grad_in;
}

nlohmann::json Conv2d::config() const { return {{"type", "conv2d"}, {"geometry", g_.to_json()}}; }

// ConvTranspose2d reuses the conv helpers with the roles of the two images
// swapped: the (large) output image is the "input" of the underlying conv.

ConvTranspose2d::ConvTranspose2d(ConvGeometry g, Rng& rng) : g_(g) {
    const double overlap = std::max(1.0, static_cast<double>(g.kernel) / g.stride);
    const double bound = 1.0 / std::sqrt(g.in_channels * overlap * overlap);
    weight_ = uniform_init(g.in_channels, static_cast<Eigen::Index>(g.out_channels) * g.kernel * g.kernel, bound, rng);
    bias_ = uniform_init(g.out_channels, 1, bound, rng);
}

ConvTranspose2d::ConvTranspose2d(ConvGeometry g, Matrix weight, Matrix bias)
    : g_(g), weight_(std::move(weight)), bias_(std::move(bias)) {
    if (weight_.rows() != g.in_channels || weight_.cols() != g.out_channels * g.kernel * g.kernel)
        throw FormatError("conv_transpose2d: weight shape mismatch");
}

int ConvTranspose2d::out_height() const { return (g_.in_height - 1) * g_.stride - 2 * g_.padding + g_.kernel; }
int ConvTranspose2d::out_width() const { return (g_.in_width - 1) * g_.stride - 2 * g_.padding + g_.kernel; }

Matrix ConvTranspose2d::forward(const Matrix& x) const {
    check_rows(x, g_.in_size(), "conv_transpose2d");
    const int oh = out_height(), ow = out_width();
    const int in_spatial = g_.in_height * g_.in_width, out_spatial = oh * ow;
    Matrix y(static_cast<Eigen::Index>(g_.out_channels) * out_spatial, x.cols());
    for (Eigen::Index b = 0; b < x.cols(); ++b) {
        const Matrix in = Eigen::Map<const Matrix>(x.col(b).data(), in_spatial, g_.in_channels).transpose();
        const Matrix cols = weight_.transpose() * in;  // (out_c*k*k) x in_spatial
        y.col(b).setZero();
        col2im(cols, g_.out_channels, oh, ow, g_.kernel, g_.stride, g_.padding, g_.in_height, g_.in_width,
               y.col(b).data());
        for (int c = 0; c < g_.out_channels; ++c) y.col(b).segment(c * out_spatial, out_spatial).array() += bias_(c, 0);
    }
    return y;
}

Matrix ConvTranspose2d::backward(const Matrix& x, const Matrix&, const Matrix& grad_out,
                                 std::span<Matrix> param_grads) const {
    const int oh = out_height(), ow = out_width();
    const int in_spatial = g_.in_height * g_.in_width, out_spatial = oh * ow;
    Matrix grad_in(x.rows(), x.cols());
    Matrix gcols;
    for (Eigen::Index b = 0; b < x.cols(); ++b) {
        im2col(grad_out.col(b).data(), g_.out_channels, oh, ow, g_.kernel, g_.stride, g_.padding, g_.in_height,
               g_.in_width, gcols);
        const Matrix in = Eigen::Map<const Matrix>(x.col(b).data(), in_spatial, g_.in_channels).transpose();
        param_grads[0].noalias() += in * gcols.transpose();
        for (int c = 0; c < g_.out_channels; ++c)
            param_grads[1](c, 0) += grad_out.col(b).segment(c * out_spatial, out_spatial).sum();
        const Matrix din = weight_ * gcols;  // in_c x in_spatial
        Eigen::Map<Matrix>(grad_in.col(b).data(), in_spatial, g_.in_channels) = din.transpose();
    }
    return grad_in;
}

nlohmann::json ConvTranspose2d::config() const {
    return {{"type", "conv_transpose2d"}, {"geometry", g_.to_json()}};
}

std::unique_ptr<Layer> make_layer(const nlohmann::json& config, std::vector<Matrix> params) {
    const auto type = config.at("type").get<std::string>();
    auto need = [&](std::size_t n) {
        if (params.size() != n) throw FormatError("layer '" + type + "' expects " + std::to_string(n) + " tensors");
    };
    if (type == "dense") {
        need(2);
        return std::make_unique<Dense>(std::move(params[0]), std::move(params[1]));
    }
    if (type == "conv2d") {
        need(2);
        return std::make_unique<Conv2d>(ConvGeometry::from_json(config.at("geometry")), std::move(params[0]),
                                        std::move(params[1]));
    }
    if (type == "conv_transpose2d") {
        need(2);
        return std::make_unique<ConvTranspose2d>(ConvGeometry::from_json(config.at("geometry")),
                                                 std::move(params[0]), std::move(params[1]));
    }
    need(0);
    if (type == "relu") return std::make_unique<Relu>();
    if (type == "sigmoid") return std::make_unique<Sigmoid>();
    if (type == "centered_sigmoid") return std::make_unique<CenteredSigmoid>();
    throw FormatError("unknown layer type '" + type + "'");
}

}  // namespace pico::nn
