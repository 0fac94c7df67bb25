#pragma once

#include <cstdint>
#include <string>

#include "pico/genmodel/dataset.hpp"

namespace pico::genmodel {

// Handwriting-like 28x28x1 digits rendered from stroke templates with random
// slant, shear, scale, offset, stroke width and control-point jitter. Used as
// the reference corpus when no MNIST dump is supplied. Labels cycle 0..9.
struct SyntheticDigitConfig {
    std::size_t count = 1000;
    std::uint64_t seed = 0;
    Split split = Split::Train;
    std::string id_prefix = "synth";
};

ImageDataset make_synthetic_digits(const SyntheticDigitConfig& config);

}  // namespace pico::genmodel
