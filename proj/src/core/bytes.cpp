#include "pico/core/bytes.hpp"

#include <unistd.h>

#include <atomic>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include <openssl/evp.h>
#include <png.h>

#include "pico/core/error.hpp"

namespace pico {

std::string sha256_hex(std::span<const std::uint8_t> data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error("sha256 failed");
    std::ostringstream out;
    for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return out.str();
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

std::string base64_encode(std::span<const std::uint8_t> data) {
    std::string out(4 * ((data.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data.data(),
                                  static_cast<int>(data.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

Bytes base64_decode(const std::string& text) {
    if (text.size() % 4 != 0) throw FormatError("base64 length not a multiple of 4");
    Bytes out(text.size() / 4 * 3);
    const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                  static_cast<int>(text.size()));
    if (n < 0) throw FormatError("invalid base64");
    std::size_t pad = 0;
    if (!text.empty() && text.back() == '=') ++pad;
    if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
    out.resize(static_cast<std::size_t>(n) - pad);
    return out;
}

Bytes encode_png(const Image& image) {
    const int c = image.shape.channels;
    if (c != 1 && c != 3) throw InputError("PNG payloads support 1 or 3 channels, got " + std::to_string(c));
    const auto planar = quantize(image);
    const int w = image.shape.width, h = image.shape.height;
    Bytes interleaved(planar.size());
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                interleaved[static_cast<std::size_t>((y * w + x) * c + ch)] =
                    planar[static_cast<std::size_t>((ch * h + y) * w + x)];

    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(w);
    png.height = static_cast<png_uint_32>(h);
    png.format = c == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&png, nullptr, &size, 0, interleaved.data(), 0, nullptr))
        throw Error(std::string("png sizing failed: ") + png.message);
    Bytes out(size);
    if (!png_image_write_to_memory(&png, out.data(), &size, 0, interleaved.data(), 0, nullptr))
        throw Error(std::string("png encode failed: ") + png.message);
    out.resize(size);
    return out;
}

namespace {

Image finish_png_read(png_image& png) {
    const bool gray = (png.format & PNG_FORMAT_FLAG_COLOR) == 0;
    png.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    const int c = gray ? 1 : 3;
    const int w = static_cast<int>(png.width), h = static_cast<int>(png.height);
    Bytes buffer(PNG_IMAGE_SIZE(png));
    if (!png_image_finish_read(&png, nullptr, buffer.data(), 0, nullptr)) {
        std::string msg = png.message;
        png_image_free(&png);
        throw FormatError("png decode failed: " + msg);
    }
    Image out(ImageShape{w, h, c});
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                out.at(ch, y, x) = buffer[static_cast<std::size_t>((y * w + x) * c + ch)] / 255.0;
    return out;
}

}  // namespace

Image decode_png(std::span<const std::uint8_t> data) {
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&png, data.data(), data.size()))
        throw FormatError(std::string("png header unreadable: ") + png.message);
    return finish_png_read(png);
}

Image read_png(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    return decode_png(bytes);
}

Bytes read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> data) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    static std::atomic<unsigned long> counter{0};
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter.fetch_add(1));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write " + tmp.string());
        out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
        if (!out) throw InputError("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace pico
