#include "pico/loop/record_log.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "pico/core/bytes.hpp"
#include "pico/core/error.hpp"

namespace pico::loop {
namespace {

void write_all(int fd, const std::string& text, const std::filesystem::path& path) {
    std::size_t done = 0;
    while (done < text.size()) {
        const ssize_t n = ::write(fd, text.data() + done, text.size() - done);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw Error("write to " + path.string() + " failed: " + std::strerror(errno));
        }
        done += std::size_t(n);
    }
}

}  // namespace

RecordLog::RecordLog(std::filesystem::path path) : path_(std::move(path)) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
}

void RecordLog::append(const InteractionRecord& record) {
    const std::string line = record.to_json().dump() + "\n";
    std::lock_guard lock(mutex_);
    const int fd = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd < 0) throw Error("cannot open record log " + path_.string() + ": " + std::strerror(errno));
    try {
        write_all(fd, line, path_);
    } catch (...) {
        ::close(fd);
        throw;
    }
    ::fsync(fd);
    ::close(fd);
}

std::vector<InteractionRecord> RecordLog::read_all() const {
    std::lock_guard lock(mutex_);
    return read_records(path_);
}

std::size_t RecordLog::size() const { return read_all().size(); }

std::vector<InteractionRecord> read_records(const std::filesystem::path& path) {
    std::vector<InteractionRecord> out;
    if (!std::filesystem::exists(path)) return out;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read record log " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    std::size_t start = 0;
    std::size_t line_no = 0;
    while (start < text.size()) {
        const std::size_t end = text.find('\n', start);
        if (end == std::string::npos) break;  // torn final line
        ++line_no;
        const std::string_view line(text.data() + start, end - start);
        if (!line.empty()) {
            try {
                out.push_back(InteractionRecord::from_json(nlohmann::json::parse(line)));
            } catch (const nlohmann::json::exception& e) {
                throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
            }
        }
        start = end + 1;
    }
    return out;
}

void write_records(const std::filesystem::path& path, const std::vector<InteractionRecord>& records) {
    std::string text;
    for (const auto& r : records) text += r.to_json().dump() + "\n";
    write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

ObjectStore::ObjectStore(std::filesystem::path root) : root_(std::move(root)) {
    std::filesystem::create_directories(root_);
}

std::string ObjectStore::put(const Image& image) { return put_png(encode_png(image)); }

std::string ObjectStore::put_png(const std::vector<std::uint8_t>& png) {
    const std::string hash = sha256_hex(png);
    if (!contains(hash)) write_file_atomic(path_of(hash), png);
    return hash;
}

bool ObjectStore::contains(const std::string& hash) const { return std::filesystem::exists(path_of(hash)); }

Image ObjectStore::get(const std::string& hash) const {
    if (!contains(hash)) throw NotFoundError("object " + hash + " not in store");
    return read_png(path_of(hash));
}

std::filesystem::path ObjectStore::path_of(const std::string& hash) const {
    if (hash.size() != 64 || hash.find_first_not_of("0123456789abcdef") != std::string::npos)
        throw InputError("malformed object hash '" + hash + "'");
    return root_ / (hash + ".png");
}

}  // namespace pico::loop
