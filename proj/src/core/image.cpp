#include "pico/core/image.hpp"

#include <algorithm>
#include <cmath>

#include "pico/core/error.hpp"

namespace pico {

std::string ImageShape::to_string() const {
    return std::to_string(width) + "x" + std::to_string(height) + "x" + std::to_string(channels);
}

Image::Image(ImageShape s, Vector p) : shape(s), pixels(std::move(p)) {
    if (pixels.size() != shape.size())
        throw InputError("image of shape " + shape.to_string() + " needs " + std::to_string(shape.size()) +
                         " values, got " + std::to_string(pixels.size()));
}

Image::Image(ImageShape s) : shape(s), pixels(Vector::Zero(s.size())) {}

Matrix stack_images(const std::vector<Image>& images) {
    if (images.empty()) return Matrix();
    Matrix out(images.front().pixels.size(), static_cast<Eigen::Index>(images.size()));
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (images[i].shape != images.front().shape) throw InputError("stack_images: mixed image shapes");
        out.col(static_cast<Eigen::Index>(i)) = images[i].pixels;
    }
    return out;
}

Matrix stack_images(const std::vector<const Image*>& images) {
    if (images.empty()) return Matrix();
    Matrix out(images.front()->pixels.size(), static_cast<Eigen::Index>(images.size()));
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (images[i]->shape != images.front()->shape) throw InputError("stack_images: mixed image shapes");
        out.col(static_cast<Eigen::Index>(i)) = images[i]->pixels;
    }
    return out;
}

std::vector<std::uint8_t> quantize(const Image& image) {
    std::vector<std::uint8_t> out(static_cast<std::size_t>(image.pixels.size()));
    for (Eigen::Index i = 0; i < image.pixels.size(); ++i) {
        const double v = std::clamp(image.pixels[i], 0.0, 1.0);
        out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
    return out;
}

}  // namespace pico
