#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace s2s {

// Single-channel float image, row-major, values normally in [0,1].
struct Image {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<float> pixels;

    Image() = default;
    Image(std::size_t w, std::size_t h, float fill = 0.0f) : width(w), height(h), pixels(w * h, fill) {}

    float& at(std::size_t x, std::size_t y) { return pixels[y * width + x]; }
    float at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
    std::size_t size() const { return pixels.size(); }

    friend bool operator==(const Image&, const Image&) = default;
};

// 8-bit binary PGM (P5, maxval 255). Values are clamped to [0,1] and
// rounded to the nearest level on write; reads return level/255.
std::vector<std::uint8_t> encode_pgm(const Image& image);
Image decode_pgm(const std::vector<std::uint8_t>& bytes);
void write_pgm(const std::filesystem::path& path, const Image& image);
Image read_pgm(const std::filesystem::path& path);

// Round to the nearest of the 256 PGM levels.
float quantize_8bit(float v);

} // namespace s2s
