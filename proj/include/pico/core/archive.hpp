#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>

#include <json.hpp>

#include "pico/core/tensor.hpp"

namespace pico {

// Self-describing checkpoint container shared by every persisted component.
//
// Layout (little endian):
//   magic "PICOARC\0" | u32 format version | u64 manifest length |
//   manifest (JSON: kind, meta, tensor table) | raw float64 tensor data
//
// Tensors round-trip bit-exactly. `kind` names the component so a loader can
// reject an archive written by a different one.
class Archive {
public:
    static constexpr std::uint32_t kFormatVersion = 1;

    explicit Archive(std::string kind = {}) : kind_(std::move(kind)) {}

    const std::string& kind() const { return kind_; }
    nlohmann::json& meta() { return meta_; }
    const nlohmann::json& meta() const { return meta_; }

    void put(const std::string& name, const Matrix& value);
    void put(const std::string& name, const Vector& value);
    bool contains(const std::string& name) const { return tensors_.count(name) != 0; }
    const Matrix& matrix(const std::string& name) const;
    Vector vector(const std::string& name) const;
    const std::map<std::string, Matrix>& tensors() const { return tensors_; }

    // Prefixes are used to nest one component's archive inside another.
    void merge(const Archive& other, const std::string& prefix);
    Archive extract(const std::string& prefix, std::string kind) const;

    std::vector<std::uint8_t> serialize() const;
    static Archive deserialize(std::span<const std::uint8_t> bytes);

    void save(const std::filesystem::path& path) const;
    static Archive load(const std::filesystem::path& path);

    // Throws FormatError unless kind() == expected.
    void expect_kind(const std::string& expected) const;

private:
    std::string kind_;
    nlohmann::json meta_ = nlohmann::json::object();
    std::map<std::string, Matrix> tensors_;
};

}  // namespace pico
