#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pico/core/tensor.hpp"

namespace pico {

struct ImageShape {
    int width = 0;
    int height = 0;
    int channels = 0;

    int size() const { return width * height * channels; }
    bool operator==(const ImageShape&) const = default;
    std::string to_string() const;
};

// Pixel intensities in [0,1], stored channel-major (c, y, x) so a flattened
// image is directly a column for the conv layers.
struct Image {
    ImageShape shape;
    Vector pixels;

    Image() = default;
    Image(ImageShape s, Vector p);
    explicit Image(ImageShape s);

    double at(int c, int y, int x) const { return pixels[(c * shape.height + y) * shape.width + x]; }
    double& at(int c, int y, int x) { return pixels[(c * shape.height + y) * shape.width + x]; }
};

// Stacks flattened images into a (pixels x count) batch.
Matrix stack_images(const std::vector<Image>& images);
Matrix stack_images(const std::vector<const Image*>& images);

// 8-bit quantization used by the PNG payloads and content hashing.
std::vector<std::uint8_t> quantize(const Image& image);

}  // namespace pico
