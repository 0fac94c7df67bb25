#include "pico/genmodel/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "pico/core/bytes.hpp"
#include "pico/core/error.hpp"
#include "pico/core/rng.hpp"

namespace pico::genmodel {
namespace {

std::uint32_t read_be32(const Bytes& bytes, std::size_t pos) {
    if (pos + 4 > bytes.size()) throw FormatError("idx file truncated");
    return (std::uint32_t(bytes[pos]) << 24) | (std::uint32_t(bytes[pos + 1]) << 16) |
           (std::uint32_t(bytes[pos + 2]) << 8) | std::uint32_t(bytes[pos + 3]);
}

void write_be32(std::ofstream& out, std::uint32_t v) {
    const char b[4] = {char(v >> 24), char(v >> 16), char(v >> 8), char(v)};
    out.write(b, 4);
}

}  // namespace

std::string to_string(Split split) { return split == Split::Train ? "train" : "heldout"; }

void ImageDataset::validate() const {
    for (const auto& img : images)
        if (img.shape != shape)
            throw InputError("dataset mixes image shapes " + shape.to_string() + " and " + img.shape.to_string());
    if (!labels.empty() && labels.size() != images.size())
        throw InputError("dataset has " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(images.size()) + " images");
    if (ids.size() != images.size()) throw InputError("dataset ids are not aligned with images");
}

ImageDataset ImageDataset::subset(const std::vector<std::size_t>& indices) const {
    ImageDataset out;
    out.shape = shape;
    out.split = split;
    for (std::size_t i : indices) {
        if (i >= images.size()) throw InputError("subset index out of range");
        out.images.push_back(images[i]);
        out.ids.push_back(ids[i]);
        if (has_labels()) out.labels.push_back(labels[i]);
    }
    return out;
}

ImageDataset ImageDataset::head(std::size_t n) const {
    std::vector<std::size_t> idx(std::min(n, size()));
    std::iota(idx.begin(), idx.end(), 0);
    return subset(idx);
}

std::pair<ImageDataset, ImageDataset> split_dataset(const ImageDataset& data, double heldout_fraction,
                                                    std::uint64_t seed) {
    if (heldout_fraction < 0.0 || heldout_fraction >= 1.0) throw ConfigError("heldout fraction must be in [0,1)");
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t n_heldout = static_cast<std::size_t>(heldout_fraction * static_cast<double>(data.size()));
    if (heldout_fraction > 0.0 && n_heldout == 0 && data.size() >= 2) n_heldout = 1;
    std::vector<std::size_t> heldout(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_heldout));
    std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_heldout), order.end());
    std::sort(heldout.begin(), heldout.end());
    std::sort(train.begin(), train.end());
    auto a = data.subset(train);
    auto b = data.subset(heldout);
    a.split = Split::Train;
    b.split = Split::Heldout;
    return {std::move(a), std::move(b)};
}

ImageDataset load_idx(const std::filesystem::path& images, const std::optional<std::filesystem::path>& labels,
                      Split split) {
    const Bytes img = read_file(images);
    if (read_be32(img, 0) != 0x00000803) throw FormatError(images.string() + " is not an idx3 image file");
    const std::uint32_t count = read_be32(img, 4), rows = read_be32(img, 8), cols = read_be32(img, 12);
    const std::size_t pixels = std::size_t(rows) * cols;
    if (img.size() < 16 + pixels * count) throw FormatError(images.string() + " is truncated");

    ImageDataset out;
    out.shape = ImageShape{int(cols), int(rows), 1};
    out.split = split;
    out.images.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        Image im(out.shape);
        for (std::size_t p = 0; p < pixels; ++p) im.pixels[Eigen::Index(p)] = img[16 + i * pixels + p] / 255.0;
        out.images.push_back(std::move(im));
        out.ids.push_back(images.filename().string() + "#" + std::to_string(i));
    }
    if (labels) {
        const Bytes lab = read_file(*labels);
        if (read_be32(lab, 0) != 0x00000801) throw FormatError(labels->string() + " is not an idx1 label file");
        if (read_be32(lab, 4) != count || lab.size() < 8 + count)
            throw FormatError(labels->string() + " does not match " + images.string());
        out.labels.assign(lab.begin() + 8, lab.begin() + 8 + count);
    }
    out.validate();
    return out;
}

void save_idx(const ImageDataset& data, const std::filesystem::path& images,
              const std::optional<std::filesystem::path>& labels) {
    if (data.shape.channels != 1) throw InputError("idx export supports single-channel images only");
    if (images.has_parent_path()) std::filesystem::create_directories(images.parent_path());
    std::ofstream out(images, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + images.string());
    write_be32(out, 0x00000803);
    write_be32(out, std::uint32_t(data.size()));
    write_be32(out, std::uint32_t(data.shape.height));
    write_be32(out, std::uint32_t(data.shape.width));
    for (const auto& im : data.images) {
        const auto q = quantize(im);
        out.write(reinterpret_cast<const char*>(q.data()), std::streamsize(q.size()));
    }
    if (labels) {
        if (!data.has_labels()) throw InputError("dataset has no labels to export");
        std::ofstream lo(*labels, std::ios::binary | std::ios::trunc);
        write_be32(lo, 0x00000801);
        write_be32(lo, std::uint32_t(data.size()));
        for (int l : data.labels) lo.put(char(l));
    }
}

ImageDataset load_image_directory(const std::filesystem::path& root, Split split) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(root)) throw InputError(root.string() + " is not a directory");
    std::vector<std::pair<fs::path, int>> files;  // label -1 = unlabeled
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_regular_file() && entry.path().extension() == ".png") {
            files.emplace_back(entry.path(), -1);
        } else if (entry.is_directory()) {
            const auto name = entry.path().filename().string();
            if (name.empty() || !std::all_of(name.begin(), name.end(), ::isdigit)) continue;
            for (const auto& f : fs::directory_iterator(entry.path()))
                if (f.is_regular_file() && f.path().extension() == ".png") files.emplace_back(f.path(), std::stoi(name));
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw InputError("no PNG images under " + root.string());
    const bool labeled = files.front().second >= 0;
    ImageDataset out;
    out.split = split;
    for (const auto& [path, label] : files) {
        if ((label >= 0) != labeled) throw InputError(root.string() + " mixes labeled and unlabeled images");
        out.images.push_back(read_png(path));
        out.ids.push_back(fs::relative(path, root).string());
        if (labeled) out.labels.push_back(label);
    }
    out.shape = out.images.front().shape;
    out.validate();
    return out;
}

ImageDataset load_dataset(const std::filesystem::path& path, Split split) {
    if (std::filesystem::is_directory(path)) return load_image_directory(path, split);
    const std::string name = path.filename().string();
    const auto pos = name.find("images-idx3");
    std::optional<std::filesystem::path> labels;
    if (pos != std::string::npos) {
        auto label_name = name;
        label_name.replace(pos, 11, "labels-idx1");
        const auto candidate = path.parent_path() / label_name;
        if (std::filesystem::exists(candidate)) labels = candidate;
    }
    return load_idx(path, labels, split);
}

}  // namespace pico::genmodel
