#include "pico/genmodel/synthetic_digits.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "pico/core/rng.hpp"

namespace pico::genmodel {
namespace {

struct Point {
    double x;
    double y;
};

using Stroke = std::vector<Point>;

// Templates live in a unit box with y pointing down.
struct Arc {
    double cx, cy, rx, ry, from_deg, to_deg;
};

Stroke arc(const Arc& a, double jitter_r, Rng& rng) {
    std::uniform_real_distribution<double> j(-jitter_r, jitter_r);
    const double cx = a.cx + j(rng), cy = a.cy + j(rng);
    const double rx = a.rx * (1.0 + j(rng)), ry = a.ry * (1.0 + j(rng));
    const int segments = std::max(6, int(std::abs(a.to_deg - a.from_deg) / 12.0));
    Stroke s;
    for (int i = 0; i <= segments; ++i) {
        const double t = (a.from_deg + (a.to_deg - a.from_deg) * i / segments) * std::numbers::pi / 180.0;
        s.push_back({cx + rx * std::cos(t), cy + ry * std::sin(t)});
    }
    return s;
}

Stroke poly(std::initializer_list<Point> pts, double jitter, Rng& rng) {
    std::uniform_real_distribution<double> j(-jitter, jitter);
    Stroke s;
    for (auto p : pts) s.push_back({p.x + j(rng), p.y + j(rng)});
    return s;
}

std::vector<Stroke> digit_strokes(int digit, Rng& rng) {
    const double jp = 0.035;  // control point jitter
    const double ja = 0.06;   // relative arc jitter
    switch (digit) {
        case 0:
            return {arc({0.5, 0.5, 0.27, 0.40, 0, 360}, ja, rng)};
        case 1:
            return {poly({{0.36, 0.26}, {0.54, 0.10}, {0.54, 0.90}}, jp, rng)};
        case 2: {
            auto top = arc({0.5, 0.32, 0.26, 0.22, 200, 400}, ja, rng);
            const Point end = top.back();
            return {top, poly({{end.x, end.y}, {0.22, 0.90}, {0.80, 0.90}}, jp, rng)};
        }
        case 3:
            return {arc({0.47, 0.30, 0.24, 0.20, 200, 450}, ja, rng), arc({0.47, 0.70, 0.27, 0.20, 270, 520}, ja, rng)};
        case 4:
            return {poly({{0.62, 0.90}, {0.62, 0.10}, {0.18, 0.64}, {0.84, 0.64}}, jp, rng)};
        case 5: {
            auto bowl = arc({0.5, 0.66, 0.26, 0.24, 215, 520}, ja, rng);
            const Point start = bowl.front();
            return {poly({{0.76, 0.10}, {0.32, 0.10}, {start.x, start.y}}, jp, rng), bowl};
        }
        case 6:
            return {poly({{0.68, 0.10}, {0.50, 0.20}, {0.34, 0.38}, {0.26, 0.64}}, jp, rng),
                    arc({0.50, 0.68, 0.24, 0.21, 0, 360}, ja, rng)};
        case 7:
            return {poly({{0.20, 0.12}, {0.80, 0.12}, {0.42, 0.90}}, jp, rng)};
        case 8:
            return {arc({0.5, 0.30, 0.20, 0.19, 0, 360}, ja, rng), arc({0.5, 0.70, 0.24, 0.21, 0, 360}, ja, rng)};
        default:
            return {arc({0.5, 0.32, 0.22, 0.20, 0, 360}, ja, rng), poly({{0.72, 0.32}, {0.64, 0.90}}, jp, rng)};
    }
}

double segment_distance(double px, double py, Point a, Point b) {
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0 ? ((px - a.x) * dx + (py - a.y) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double ex = a.x + t * dx - px, ey = a.y + t * dy - py;
    return std::sqrt(ex * ex + ey * ey);
}

Image render(int digit, Rng& rng) {
    constexpr int kSize = 28;
    constexpr double kBox = 20.0;  // digit occupies the central 20x20 box, as in MNIST
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto range = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };

    const double rotation = range(-0.25, 0.25);
    const double shear = range(-0.35, 0.35);
    const double sx = range(0.75, 1.10), sy = range(0.85, 1.10);
    const double tx = range(-1.5, 1.5), ty = range(-1.5, 1.5);
    const double thickness = range(1.0, 3.2);
    const double ink = range(0.8, 1.0);

    const double c = std::cos(rotation), s = std::sin(rotation);
    auto place = [&](Point p) {
        double x = (p.x - 0.5) * sx, y = (p.y - 0.5) * sy;
        x += shear * y;
        const double rx = c * x - s * y, ry = s * x + c * y;
        return Point{14.0 + tx + kBox * rx, 14.0 + ty + kBox * ry};
    };

    std::array<double, kSize * kSize> dist;
    dist.fill(1e9);
    const double reach = thickness / 2.0 + 1.0;
    for (const auto& stroke : digit_strokes(digit, rng)) {
        for (std::size_t i = 0; i + 1 < stroke.size(); ++i) {
            const Point a = place(stroke[i]), b = place(stroke[i + 1]);
            const int x0 = std::max(0, int(std::floor(std::min(a.x, b.x) - reach)));
            const int x1 = std::min(kSize - 1, int(std::ceil(std::max(a.x, b.x) + reach)));
            const int y0 = std::max(0, int(std::floor(std::min(a.y, b.y) - reach)));
            const int y1 = std::min(kSize - 1, int(std::ceil(std::max(a.y, b.y) + reach)));
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    double& d = dist[std::size_t(y * kSize + x)];
                    d = std::min(d, segment_distance(x + 0.5, y + 0.5, a, b));
                }
        }
    }
    Image img(ImageShape{kSize, kSize, 1});
    for (int i = 0; i < kSize * kSize; ++i)
        img.pixels[i] = ink * std::clamp(thickness / 2.0 + 0.5 - dist[std::size_t(i)], 0.0, 1.0);
    return img;
}

}  // namespace

ImageDataset make_synthetic_digits(const SyntheticDigitConfig& config) {
    ImageDataset out;
    out.shape = ImageShape{28, 28, 1};
    out.split = config.split;
    out.images.reserve(config.count);
    for (std::size_t i = 0; i < config.count; ++i) {
        // One stream per image so any prefix of the corpus is stable.
        Rng rng(derive_seed(config.seed, i));
        const int digit = int(i % 10);
        out.images.push_back(render(digit, rng));
        out.labels.push_back(digit);
        out.ids.push_back(config.id_prefix + ":" + std::to_string(config.seed) + ":" + std::to_string(i));
    }
    return out;
}

}  // namespace pico::genmodel
