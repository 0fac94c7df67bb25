#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pico/core/image.hpp"

namespace pico::genmodel {

enum class Split { Train, Heldout };

std::string to_string(Split split);

// A fixed corpus standing in for the environment's image distribution.
// `ids` are stable identifiers used to prove train/held-out disjointness.
struct ImageDataset {
    ImageShape shape;
    std::vector<Image> images;
    std::vector<int> labels;  // empty, or aligned 1:1 with images
    std::vector<std::string> ids;
    Split split = Split::Train;

    std::size_t size() const { return images.size(); }
    bool empty() const { return images.empty(); }
    bool has_labels() const { return !labels.empty(); }

    // Throws InputError on mixed shapes or misaligned labels/ids.
    void validate() const;
    ImageDataset subset(const std::vector<std::size_t>& indices) const;
    ImageDataset head(std::size_t n) const;
    Matrix as_matrix() const { return stack_images(images); }
};

// Splits off a seeded random fraction as held-out data.
std::pair<ImageDataset, ImageDataset> split_dataset(const ImageDataset& data, double heldout_fraction,
                                                    std::uint64_t seed);

// MNIST-style IDX array dumps (idx3 images, optional idx1 labels).
ImageDataset load_idx(const std::filesystem::path& images, const std::optional<std::filesystem::path>& labels,
                      Split split = Split::Train);
void save_idx(const ImageDataset& data, const std::filesystem::path& images,
              const std::optional<std::filesystem::path>& labels);

// Directory of PNG files. Subdirectories named by an integer are class
// labels (root/3/foo.png has label 3); PNGs directly under root are
// unlabeled. Files are visited in sorted order.
ImageDataset load_image_directory(const std::filesystem::path& root, Split split = Split::Train);

// Dispatches on the path: a directory, or an *idx3-ubyte file whose labels
// live next to it with "images-idx3" replaced by "labels-idx1".
ImageDataset load_dataset(const std::filesystem::path& path, Split split = Split::Train);

}  // namespace pico::genmodel
