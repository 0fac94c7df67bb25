#include "pico/core/archive.hpp"

#include <bit>
#include <cstring>

#include "pico/core/bytes.hpp"
#include "pico/core/error.hpp"

namespace pico {
namespace {

constexpr char kMagic[8] = {'P', 'I', 'C', 'O', 'A', 'R', 'C', '\0'};

static_assert(std::endian::native == std::endian::little, "archive I/O assumes a little-endian host");

template <typename T>
void append_raw(std::vector<std::uint8_t>& out, const T& value) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    out.insert(out.end(), p, p + sizeof(T));
}

template <typename T>
T read_raw(std::span<const std::uint8_t> bytes, std::size_t& pos) {
    if (pos + sizeof(T) > bytes.size()) throw FormatError("archive truncated");
    T value;
    std::memcpy(&value, bytes.data() + pos, sizeof(T));
    pos += sizeof(T);
    return value;
}

}  // namespace

void Archive::put(const std::string& name, const Matrix& value) { tensors_[name] = value; }

void Archive::put(const std::string& name, const Vector& value) { tensors_[name] = Matrix(value); }

const Matrix& Archive::matrix(const std::string& name) const {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw FormatError("archive '" + kind_ + "' has no tensor '" + name + "'");
    return it->second;
}

Vector Archive::vector(const std::string& name) const {
    const Matrix& m = matrix(name);
    if (m.cols() != 1) throw FormatError("tensor '" + name + "' is not a vector");
    return m.col(0);
}

void Archive::merge(const Archive& other, const std::string& prefix) {
    for (const auto& [name, value] : other.tensors_) tensors_[prefix + name] = value;
    meta_[prefix] = {{"kind", other.kind_}, {"meta", other.meta_}};
}

Archive Archive::extract(const std::string& prefix, std::string kind) const {
    Archive out(std::move(kind));
    auto entry = meta_.find(prefix);
    if (entry == meta_.end()) throw FormatError("archive has no nested component '" + prefix + "'");
    if (entry->at("kind").get<std::string>() != out.kind_)
        throw FormatError("nested component '" + prefix + "' is a " + entry->at("kind").get<std::string>());
    out.meta_ = entry->at("meta");
    for (const auto& [name, value] : tensors_)
        if (name.rfind(prefix, 0) == 0) out.tensors_[name.substr(prefix.size())] = value;
    return out;
}

std::vector<std::uint8_t> Archive::serialize() const {
    nlohmann::json table = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const auto& [name, value] : tensors_) {
        table.push_back({{"name", name}, {"rows", value.rows()}, {"cols", value.cols()}, {"offset", offset}});
        offset += static_cast<std::uint64_t>(value.size()) * sizeof(double);
    }
    nlohmann::json manifest = {
        {"format_version", kFormatVersion}, {"kind", kind_}, {"meta", meta_}, {"tensors", table}};
    const std::string text = manifest.dump();

    std::vector<std::uint8_t> out;
    out.reserve(sizeof(kMagic) + 12 + text.size() + offset);
    out.insert(out.end(), kMagic, kMagic + sizeof(kMagic));
    append_raw(out, kFormatVersion);
    append_raw(out, static_cast<std::uint64_t>(text.size()));
    out.insert(out.end(), text.begin(), text.end());
    for (const auto& [name, value] : tensors_) {
        const auto* p = reinterpret_cast<const std::uint8_t*>(value.data());
        out.insert(out.end(), p, p + value.size() * sizeof(double));
    }
    return out;
}

Archive Archive::deserialize(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
        throw FormatError("not a pico archive (bad magic)");
    std::size_t pos = sizeof(kMagic);
    const auto version = read_raw<std::uint32_t>(bytes, pos);
    if (version != kFormatVersion)
        throw FormatError("unsupported archive version " + std::to_string(version));
    const auto manifest_len = read_raw<std::uint64_t>(bytes, pos);
    if (pos + manifest_len > bytes.size()) throw FormatError("archive truncated in manifest");
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(bytes.begin() + pos, bytes.begin() + pos + manifest_len);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("archive manifest unreadable: ") + e.what());
    }
    pos += manifest_len;

    Archive out(manifest.at("kind").get<std::string>());
    out.meta_ = manifest.at("meta");
    const std::size_t data_start = pos;
    for (const auto& entry : manifest.at("tensors")) {
        const auto rows = entry.at("rows").get<Eigen::Index>();
        const auto cols = entry.at("cols").get<Eigen::Index>();
        const auto offset = entry.at("offset").get<std::uint64_t>();
        const std::size_t nbytes = static_cast<std::size_t>(rows * cols) * sizeof(double);
        if (data_start + offset + nbytes > bytes.size())
            throw FormatError("archive truncated in tensor '" + entry.at("name").get<std::string>() + "'");
        Matrix value(rows, cols);
        std::memcpy(value.data(), bytes.data() + data_start + offset, nbytes);
        out.tensors_[entry.at("name").get<std::string>()] = std::move(value);
    }
    return out;
}

void Archive::save(const std::filesystem::path& path) const {
    const auto bytes = serialize();
    write_file_atomic(path, bytes);
}

Archive Archive::load(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    return deserialize(bytes);
}

void Archive::expect_kind(const std::string& expected) const {
    if (kind_ != expected) throw FormatError("expected a '" + expected + "' archive, found '" + kind_ + "'");
}

}  // namespace pico
