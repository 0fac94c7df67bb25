#pragma once

#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

#include "pico/core/image.hpp"
#include "pico/loop/record.hpp"

namespace pico::loop {

// Append-only line-delimited record log. Each append writes one complete line
// with a single write call under a lock; a torn final line (no newline) left by
// a crash is ignored on read.
class RecordLog {
public:
    explicit RecordLog(std::filesystem::path path);

    void append(const InteractionRecord& record);
    std::vector<InteractionRecord> read_all() const;
    std::size_t size() const;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    mutable std::mutex mutex_;
};

std::vector<InteractionRecord> read_records(const std::filesystem::path& path);
void write_records(const std::filesystem::path& path, const std::vector<InteractionRecord>& records);

// Content-addressed PNG store: objects/<sha256 of png bytes>.png.
class ObjectStore {
public:
    explicit ObjectStore(std::filesystem::path root);

    std::string put(const Image& image);
    std::string put_png(const std::vector<std::uint8_t>& png);
    bool contains(const std::string& hash) const;
    Image get(const std::string& hash) const;
    std::filesystem::path path_of(const std::string& hash) const;
    const std::filesystem::path& root() const { return root_; }

private:
    std::filesystem::path root_;
};

}  // namespace pico::loop
