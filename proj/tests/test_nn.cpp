#include <doctest.h>

#include "helpers.hpp"
#include "pico/core/error.hpp"
#include "pico/nn/adam.hpp"
#include "pico/nn/network.hpp"

using namespace pico;
using namespace pico::nn;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
    return Eigen::Map<Matrix>(standard_normal(rng, r * c).data(), r, c);
}

// Direct summation: y[o, oy, ox] = b[o] + sum_{c,ky,kx} W[o, (c,ky,kx)] x[c, oy*s-p+ky, ox*s-p+kx].
Vector naive_conv(const ConvGeometry& g, const Matrix& w, const Matrix& b, const Vector& x) {
    const int oh = g.out_height(), ow = g.out_width(), k = g.kernel;
    Vector y(g.out_channels * oh * ow);
    for (int o = 0; o < g.out_channels; ++o)
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                double acc = b(o, 0);
                for (int c = 0; c < g.in_channels; ++c)
                    for (int ky = 0; ky < k; ++ky)
                        for (int kx = 0; kx < k; ++kx) {
                            const int iy = oy * g.stride - g.padding + ky, ix = ox * g.stride - g.padding + kx;
                            if (iy < 0 || iy >= g.in_height || ix < 0 || ix >= g.in_width) continue;
                            acc += w(o, (c * k + ky) * k + kx) * x[(c * g.in_height + iy) * g.in_width + ix];
                        }
                y[(o * oh + oy) * ow + ox] = acc;
            }
    return y;
}

// Sum of squares of a fixed random projection of the output, so every
// output coordinate receives a distinct gradient.
struct ProbeLoss {
    Matrix weights;
    double value(const Matrix& y) const { return 0.5 * (y.cwiseProduct(weights)).squaredNorm(); }
    Matrix grad(const Matrix& y) const { return y.cwiseProduct(weights).cwiseProduct(weights); }
};

void check_network_gradients(Network& net, const Matrix& x, Rng& rng) {
    Tape tape;
    const Matrix y = net.forward(x, tape);
    ProbeLoss probe{random_matrix(y.rows(), y.cols(), rng)};
    Gradients grads = net.zero_gradients();
    const Matrix grad_in = net.backward(tape, probe.grad(y), grads);
    auto loss = [&] { return probe.value(net.forward(x)); };
    const auto result = testing::check_gradients(net, grads, loss, rng, 300);
    CHECK(result.max_relative_error < 1e-4);
    CHECK(testing::conclusive(result));

    // Input gradient on a few coordinates.
    Matrix xp = x;
    for (int s = 0; s < 20; ++s) {
        const Eigen::Index i = std::uniform_int_distribution<Eigen::Index>(0, x.size() - 1)(rng);
        const double h = 1e-6, saved = xp.data()[i];
        xp.data()[i] = saved + h;
        const double up = probe.value(net.forward(xp));
        xp.data()[i] = saved - h;
        const double down = probe.value(net.forward(xp));
        xp.data()[i] = saved;
        const double numeric = (up - down) / (2 * h);
        const double a = grad_in.data()[i];
        CHECK(std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6}) < 1e-4);
    }
}

}  // namespace

TEST_CASE("conv2d matches direct summation") {
    Rng rng(1);
    const ConvGeometry g{2, 3, 3, 2, 1, 7, 6};
    Conv2d conv(g, rng);
    const auto params = static_cast<const Layer&>(conv).parameters();
    Matrix x = random_matrix(g.in_size(), 3, rng);
    const Matrix y = conv.forward(x);
    REQUIRE(y.rows() == g.out_size());
    for (Eigen::Index b = 0; b < x.cols(); ++b)
        CHECK((y.col(b) - naive_conv(g, *params[0], *params[1], x.col(b))).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("conv transpose is the adjoint of conv") {
    Rng rng(2);
    const ConvGeometry g{3, 4, 4, 2, 1, 8, 8};
    const Matrix w = random_matrix(4, 3 * 16, rng);
    Conv2d conv(g, w, Matrix::Zero(4, 1));
    ConvTranspose2d convt(ConvGeometry{4, 3, 4, 2, 1, g.out_height(), g.out_width()}, w, Matrix::Zero(3, 1));
    REQUIRE(convt.out_height() == 8);
    const Matrix x = random_matrix(g.in_size(), 1, rng);
    const Matrix y = random_matrix(g.out_size(), 1, rng);
    const double lhs = conv.forward(x).col(0).dot(y.col(0));
    const double rhs = x.col(0).dot(convt.forward(y).col(0));
    CHECK(std::abs(lhs - rhs) < 1e-10 * std::max(1.0, std::abs(lhs)));
}

TEST_CASE("layer gradients match central differences") {
    Rng rng(3);
    SUBCASE("dense + relu + sigmoid") {
        Network net;
        net.emplace<Dense>(5, 7, rng).emplace<Relu>().emplace<Dense>(7, 3, rng).emplace<Sigmoid>();
        check_network_gradients(net, random_matrix(5, 4, rng), rng);
    }
    SUBCASE("centered sigmoid") {
        Network net;
        net.emplace<Dense>(4, 6, rng).emplace<CenteredSigmoid>();
        check_network_gradients(net, random_matrix(4, 5, rng), rng);
    }
    SUBCASE("conv stack") {
        Network net;
        net.emplace<Conv2d>(ConvGeometry{1, 3, 4, 2, 1, 8, 8}, rng)
            .emplace<Relu>()
            .emplace<ConvTranspose2d>(ConvGeometry{3, 2, 4, 2, 1, 4, 4}, rng);
        check_network_gradients(net, random_matrix(64, 3, rng), rng);
    }
}

TEST_CASE("centered sigmoid ignores a common shift and stays in (0,1)") {
    CenteredSigmoid s;
    Matrix x(3, 2);
    x << 1, -2, 2, 0, 3, 5;
    Matrix shifted = x.array() + 10.0;
    CHECK((s.forward(x) - s.forward(shifted)).cwiseAbs().maxCoeff() < 1e-12);
    const Matrix y = s.forward(x);
    CHECK((y.array() > 0).all());
    CHECK((y.array() < 1).all());
    CHECK(y(0, 0) < y(1, 0));
}

TEST_CASE("network rejects wrong input sizes") {
    Rng rng(4);
    Network net = make_mlp({3, 4, 2}, rng);
    CHECK_THROWS_AS(net.forward(Matrix::Zero(5, 1)), InputError);
}

TEST_CASE("network save and load reproduce outputs") {
    Rng rng(5);
    Network net;
    net.emplace<Conv2d>(ConvGeometry{1, 2, 3, 1, 1, 4, 4}, rng).emplace<Relu>().emplace<Dense>(32, 3, rng).emplace<CenteredSigmoid>();
    Archive a("net");
    net.save(a, "n");
    const Network back = Network::load(Archive::deserialize(a.serialize()), "n");
    CHECK(back == net);
    const Matrix x = random_matrix(16, 2, rng);
    CHECK(back.forward(x) == net.forward(x));
    Network copy = net;
    copy.parameters()[0]->data()[0] += 1.0;
    CHECK_FALSE(copy == net);
}

TEST_CASE("adam minimizes a least-squares problem") {
    Rng rng(6);
    Network net;
    net.emplace<Dense>(3, 1, rng);
    const Matrix x = random_matrix(3, 64, rng);
    Matrix target = (Eigen::RowVector3d(1.0, -2.0, 0.5) * x).array() + 0.3;
    Adam opt({0.05}, net);
    double loss = 0.0;
    for (int step = 0; step < 2000; ++step) {
        Tape tape;
        const Matrix y = net.forward(x, tape);
        const Matrix diff = y - target;
        loss = diff.squaredNorm() / double(x.cols());
        Gradients g = net.zero_gradients();
        net.backward(tape, 2.0 * diff / double(x.cols()), g);
        opt.step(net, g);
    }
    CHECK(loss < 1e-6);
    CHECK(opt.steps() == 2000);
}
