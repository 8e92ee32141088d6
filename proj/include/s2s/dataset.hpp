#pragma once

// Synthetic paired phantoms: a body silhouette (the contour image) and an
// internal-structure image computed from the silhouette's geometry, so the
// structure is predictable from the outline.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "s2s/image.hpp"
#include "s2s/tensor.hpp"

namespace s2s {

inline constexpr float kBoneValue = 1.0f;

struct PhantomPair {
    Image contour;   // binary silhouette
    Image structure; // bone 1.0, organs in [0.4, 0.7], elsewhere 0
    std::uint64_t seed = 0;
    std::uint64_t index = 0;
};

// Pure function of (seed, index, resolution); resolution in {32, 64, 128, 256}.
PhantomPair generate_phantom_pair(std::uint64_t seed, std::uint64_t index, std::size_t resolution);

struct DatasetSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

// Seeded shuffle of [0, count); the first round(test_fraction * count)
// indices form the test set. count must be >= 5.
DatasetSplit split_dataset(std::size_t count, double test_fraction, std::uint64_t seed);

struct DatasetManifest {
    std::size_t count = 0;
    std::uint64_t seed = 0;
    std::size_t resolution = 0;
};

class PairDataset {
public:
    PairDataset() = default;
    PairDataset(DatasetManifest manifest, std::vector<PhantomPair> pairs);

    static PairDataset generate(std::size_t count, std::uint64_t seed, std::size_t resolution);

    // Reads manifest.txt plus {index:06}_y.pgm / {index:06}_x.pgm.
    static PairDataset load(const std::filesystem::path& dir);
    void save(const std::filesystem::path& dir) const;

    const DatasetManifest& manifest() const { return manifest_; }
    std::size_t size() const { return pairs_.size(); }
    std::size_t resolution() const { return manifest_.resolution; }
    const PhantomPair& operator[](std::size_t i) const { return pairs_.at(i); }

private:
    DatasetManifest manifest_;
    std::vector<PhantomPair> pairs_;
};

std::string pair_file_stem(std::size_t index);

// Map [0,1] image values to the network range [-1,1] and back.
inline float to_network_range(float v) { return 2.0f * v - 1.0f; }
inline float to_unit_range(float v) { return 0.5f * (v + 1.0f); }

// Stack images into a [B,1,H,W] tensor in the network range.
TensorF images_to_tensor(const std::vector<const Image*>& images);
// Split a [B,1,H,W] network-range tensor into [0,1] images.
std::vector<Image> tensor_to_images(const TensorF& t);

struct Batch {
    std::vector<std::size_t> indices;
    TensorF contours;   // y, [B,1,R,R] in [-1,1]
    TensorF structures; // x, [B,1,R,R] in [-1,1]
};

// One epoch over `indices` in an order shuffled by `epoch_seed`; the last
// batch may be short.
class BatchLoader {
public:
    BatchLoader(const PairDataset& data, std::vector<std::size_t> indices, std::size_t batch_size,
                std::uint64_t epoch_seed);

    std::optional<Batch> next();
    const std::vector<std::size_t>& order() const { return order_; }

private:
    const PairDataset& data_;
    std::vector<std::size_t> order_;
    std::size_t batch_size_;
    std::size_t cursor_ = 0;
};

} // namespace s2s
