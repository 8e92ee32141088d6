#include "s2s/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "s2s/checkpoint.hpp"
#include "s2s/error.hpp"

namespace s2s {

namespace {

std::uint8_t to_level(float v)
{
    const float c = std::clamp(v, 0.0f, 1.0f);
    return std::uint8_t(std::lround(c * 255.0f));
}

} // namespace

float quantize_8bit(float v)
{
    return float(to_level(v)) / 255.0f;
}

std::vector<std::uint8_t> encode_pgm(const Image& image)
{
    const std::string header =
        "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + image.pixels.size());
    for (float v : image.pixels) out.push_back(to_level(v));
    return out;
}

Image decode_pgm(const std::vector<std::uint8_t>& bytes)
{
    std::size_t pos = 0;
    auto skip_space = [&] {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_uint = [&](const char* what) {
        skip_space();
        std::size_t start = pos;
        std::size_t value = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) value = value * 10 + (bytes[pos++] - '0');
        if (pos == start) throw ParseError(std::string("PGM: expected ") + what, long(start));
        return value;
    };

    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') throw FormatError("not a binary PGM (P5) file");
    pos = 2;
    const std::size_t w = read_uint("width");
    const std::size_t h = read_uint("height");
    const std::size_t maxval = read_uint("maxval");
    if (maxval != 255) throw FormatError("PGM: only maxval 255 is supported, got " + std::to_string(maxval));
    if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw ParseError("PGM: malformed header", long(pos));
    ++pos;
    if (w == 0 || h == 0) throw FormatError("PGM: empty image");
    if (bytes.size() - pos != w * h)
        throw FormatError("PGM: expected " + std::to_string(w * h) + " pixel bytes, found " +
                          std::to_string(bytes.size() - pos));
    Image img(w, h);
    for (std::size_t i = 0; i < w * h; ++i) img.pixels[i] = float(bytes[pos + i]) / 255.0f;
    return img;
}

void write_pgm(const std::filesystem::path& path, const Image& image)
{
    write_file_bytes(path, encode_pgm(image));
}

Image read_pgm(const std::filesystem::path& path)
{
    return decode_pgm(read_file_bytes(path));
}

} // namespace s2s
