#pragma once

// Generator and patch-discriminator builders.
//
// Discriminators come from one family: (n-1) stride-2 convolutions with
// 4x4 kernels followed by a 2x2 stride-1 head, giving a receptive field of
// 2^(n+1) - 2 pixels per output logit for n = 1..6.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "s2s/ops.hpp"

namespace s2s {

struct LayerDesc {
    std::size_t kernel = 0;
    std::size_t stride = 1;
};

// Iterates r <- stride * (r - 1) + kernel from r = 1, output layer first.
std::size_t compute_receptive_field(std::span<const LayerDesc> layers);

inline constexpr std::array<std::size_t, 6> kPatchSizes{2, 6, 14, 30, 62, 126};

// Layer count n for a patch size in kPatchSizes; throws UnsupportedPatchSize.
std::size_t discriminator_layer_count(std::size_t patch_size);

// Kernel/stride list of an n-layer discriminator, input to output.
std::vector<LayerDesc> discriminator_layers(std::size_t layer_count);

// Deepest discriminator whose logit map is still at least 1x1 at this resolution.
std::size_t max_discriminator_layers(std::size_t resolution);

struct DiscriminatorSpec {
    std::size_t patch_size = 6;
    double weight = 1.0;
    bool conditional = true;
};

struct ChannelOptions {
    std::size_t base = 16;
    std::size_t max = 128;
};

template <typename T>
using NamedTensors = std::vector<std::pair<std::string, Tensor<T>>>;

template <typename T>
struct ConvLayer {
    Tensor<T> weight;
    Tensor<T> bias; // undefined when a norm layer follows
    Conv2dGeometry geometry;
    bool transposed = false;

    Tensor<T> operator()(const Tensor<T>& x) const;
};

template <typename T>
struct NormLayer {
    Tensor<T> gamma;
    Tensor<T> beta;
    BatchNormStats<T> stats;

    explicit NormLayer(std::size_t channels);
    Tensor<T> operator()(const Tensor<T>& x, NormMode mode);
};

template <typename T>
class DiscriminatorNet {
public:
    // resolution = 0 disables depth clamping.
    DiscriminatorNet(DiscriminatorSpec spec, std::size_t in_channels, std::size_t resolution,
                     ChannelOptions channels, std::uint64_t seed);

    // Concatenates the condition in front of the candidate when the net is
    // conditional. Returns [B,1,h,w] logits, one per patch.
    Tensor<T> forward(const Tensor<T>& candidate, const std::optional<Tensor<T>>& condition,
                      NormMode mode = NormMode::train);

    const DiscriminatorSpec& spec() const { return spec_; }
    std::size_t in_channels() const { return in_channels_; }
    std::size_t requested_layers() const { return requested_layers_; }
    std::size_t layer_count() const { return convs_.size(); }
    std::vector<LayerDesc> layer_descs() const;
    std::size_t receptive_field() const;

    ConvLayer<T>& head() { return convs_.back(); }

    std::vector<Tensor<T>> parameters() const;
    // Parameters plus running statistics, stable names.
    NamedTensors<T> named_tensors(const std::string& prefix) const;

private:
    DiscriminatorSpec spec_;
    std::size_t in_channels_;
    std::size_t requested_layers_;
    std::vector<ConvLayer<T>> convs_;
    std::vector<std::optional<NormLayer<T>>> norms_; // one slot per conv
};

// Encoder widths, input to bottleneck; the depth equals log2(resolution).
struct GeneratorArch {
    std::size_t in_channels = 1;
    std::size_t out_channels = 1;
    std::vector<std::size_t> encoder_channels;

    std::size_t depth() const { return encoder_channels.size(); }
    std::size_t resolution() const { return std::size_t{1} << depth(); }
};

// Throws ContractError unless resolution is a power of two in [16, 256].
GeneratorArch generator_arch(std::size_t resolution, ChannelOptions channels = {});

template <typename T>
class GeneratorNet {
public:
    GeneratorNet(GeneratorArch arch, std::uint64_t seed);

    // Rebuilds the architecture from checkpoint tensor shapes and loads them.
    static GeneratorNet from_tensors(const NamedTensors<T>& tensors, const std::string& prefix = "g");

    // x: [B,in,R,R] -> [B,out,R,R] in (-1,1).
    Tensor<T> forward(const Tensor<T>& x, NormMode mode = NormMode::train);

    const GeneratorArch& arch() const { return arch_; }
    std::size_t resolution() const { return arch_.resolution(); }

    std::vector<Tensor<T>> parameters() const;
    NamedTensors<T> named_tensors(const std::string& prefix) const;

private:
    GeneratorArch arch_;
    std::vector<ConvLayer<T>> encoder_;
    std::vector<std::optional<NormLayer<T>>> encoder_norms_;
    std::vector<ConvLayer<T>> decoder_;
    std::vector<std::optional<NormLayer<T>>> decoder_norms_;
};

template <typename T>
DiscriminatorNet<T> build_discriminator(const DiscriminatorSpec& spec, std::size_t in_channels,
                                        std::size_t resolution = 0, ChannelOptions channels = {},
                                        std::uint64_t seed = 0);

template <typename T>
GeneratorNet<T> build_generator(std::size_t resolution, ChannelOptions channels = {}, std::uint64_t seed = 0);

// Copies values of same-named tensors from `source` into `target`.
// Throws FormatError on a missing name or shape mismatch.
template <typename T>
void load_named_tensors(const NamedTensors<T>& target, const NamedTensors<T>& source);

extern template class DiscriminatorNet<float>;
extern template class DiscriminatorNet<double>;
extern template class GeneratorNet<float>;
extern template class GeneratorNet<double>;

} // namespace s2s
