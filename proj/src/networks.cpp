#include "s2s/networks.hpp"

#include <algorithm>
#include <unordered_map>

#include "s2s/random.hpp"

namespace s2s {

namespace {

constexpr double kInitStddev = 0.02;

template <typename T>
Tensor<T> normal_tensor(Shape shape, Rng& rng)
{
    std::vector<T> values(shape_numel(shape));
    for (auto& v : values) v = T(rng.normal(0.0, kInitStddev));
    Tensor<T> t(std::move(shape), std::move(values));
    t.set_requires_grad();
    return t;
}

template <typename T>
Tensor<T> zero_param(std::size_t n)
{
    Tensor<T> t(Shape{n}, T(0));
    t.set_requires_grad();
    return t;
}

template <typename T>
ConvLayer<T> make_conv(std::size_t in, std::size_t out, std::size_t kernel, Conv2dGeometry geometry,
                       bool with_bias, bool transposed, Rng& rng)
{
    ConvLayer<T> layer;
    layer.weight = transposed ? normal_tensor<T>(Shape{in, out, kernel, kernel}, rng)
                              : normal_tensor<T>(Shape{out, in, kernel, kernel}, rng);
    if (with_bias) layer.bias = zero_param<T>(out);
    layer.geometry = geometry;
    layer.transposed = transposed;
    return layer;
}

template <typename T>
void push_conv(NamedTensors<T>& out, const std::string& name, const ConvLayer<T>& conv)
{
    out.emplace_back(name + ".weight", conv.weight);
    if (conv.bias.defined()) out.emplace_back(name + ".bias", conv.bias);
}

template <typename T>
void push_norm(NamedTensors<T>& out, const std::string& name, const std::optional<NormLayer<T>>& norm)
{
    if (!norm) return;
    out.emplace_back(name + ".gamma", norm->gamma);
    out.emplace_back(name + ".beta", norm->beta);
    out.emplace_back(name + ".running_mean", norm->stats.running_mean);
    out.emplace_back(name + ".running_var", norm->stats.running_var);
}

template <typename T>
void collect_params(std::vector<Tensor<T>>& out, const std::vector<ConvLayer<T>>& convs,
                    const std::vector<std::optional<NormLayer<T>>>& norms)
{
    for (std::size_t i = 0; i < convs.size(); ++i) {
        out.push_back(convs[i].weight);
        if (convs[i].bias.defined()) out.push_back(convs[i].bias);
        if (norms[i]) {
            out.push_back(norms[i]->gamma);
            out.push_back(norms[i]->beta);
        }
    }
}

constexpr Conv2dGeometry kDown{2, 1};
constexpr Conv2dGeometry kHead{1, 0};

} // namespace

std::size_t compute_receptive_field(std::span<const LayerDesc> layers)
{
    if (layers.empty()) throw ContractError("compute_receptive_field: empty layer list");
    std::size_t r = 1;
    for (auto it = layers.rbegin(); it != layers.rend(); ++it) {
        if (it->kernel == 0 || it->stride == 0)
            throw ContractError("compute_receptive_field: kernel and stride must be positive");
        r = it->stride * (r - 1) + it->kernel;
    }
    return r;
}

std::size_t discriminator_layer_count(std::size_t patch_size)
{
    for (std::size_t n = 1; n <= kPatchSizes.size(); ++n)
        if (kPatchSizes[n - 1] == patch_size) return n;
    throw UnsupportedPatchSize("unsupported patch size " + std::to_string(patch_size) +
                               "; valid sizes are {2, 6, 14, 30, 62, 126}");
}

std::vector<LayerDesc> discriminator_layers(std::size_t layer_count)
{
    if (layer_count == 0) throw ContractError("discriminator needs at least one layer");
    std::vector<LayerDesc> layers(layer_count - 1, LayerDesc{4, 2});
    layers.push_back(LayerDesc{2, 1});
    return layers;
}

std::size_t max_discriminator_layers(std::size_t resolution)
{
    if (resolution < 2) throw ContractError("discriminator input must be at least 2x2");
    std::size_t n = 1;
    while ((resolution >> n) >= 2) ++n;
    return n;
}

template <typename T>
Tensor<T> ConvLayer<T>::operator()(const Tensor<T>& x) const
{
    return transposed ? conv_transpose2d(x, weight, bias, geometry) : conv2d(x, weight, bias, geometry);
}

template <typename T>
NormLayer<T>::NormLayer(std::size_t channels)
    : gamma(Shape{channels}, T(1)), beta(Shape{channels}, T(0)), stats(channels)
{
    gamma.set_requires_grad();
    beta.set_requires_grad();
}

template <typename T>
Tensor<T> NormLayer<T>::operator()(const Tensor<T>& x, NormMode mode)
{
    return batch_norm(x, gamma, beta, stats, mode);
}

// ---------------------------------------------------------------------------
// Discriminator

template <typename T>
DiscriminatorNet<T>::DiscriminatorNet(DiscriminatorSpec spec, std::size_t in_channels, std::size_t resolution,
                                      ChannelOptions channels, std::uint64_t seed)
    : spec_(spec), in_channels_(in_channels), requested_layers_(discriminator_layer_count(spec.patch_size))
{
    if (in_channels == 0) throw ContractError("discriminator needs at least one input channel");
    std::size_t n = requested_layers_;
    if (resolution != 0) {
        if (resolution < 2) throw ContractError("discriminator input must be at least 2x2");
        n = std::min(n, max_discriminator_layers(resolution));
    }

    Rng rng(seed);
    std::size_t width = in_channels;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const std::size_t out = std::min(channels.base << i, channels.max);
        const bool normed = i > 0;
        convs_.push_back(make_conv<T>(width, out, 4, kDown, !normed, false, rng));
        norms_.push_back(normed ? std::optional<NormLayer<T>>(NormLayer<T>(out)) : std::nullopt);
        width = out;
    }
    convs_.push_back(make_conv<T>(width, 1, 2, kHead, true, false, rng));
    norms_.push_back(std::nullopt);
}

template <typename T>
Tensor<T> DiscriminatorNet<T>::forward(const Tensor<T>& candidate, const std::optional<Tensor<T>>& condition,
                                       NormMode mode)
{
    Tensor<T> x = candidate;
    if (spec_.conditional) {
        if (!condition) throw ContractError("conditional discriminator requires a condition image");
        const auto& cs = condition->shape();
        const auto& xs = candidate.shape();
        if (cs.size() != 4 || xs.size() != 4 || cs[2] != xs[2] || cs[3] != xs[3])
            throw ContractError("condition image must match the candidate resolution");
        x = concat_channels(*condition, candidate);
    }
    if (x.rank() != 4 || x.dim(1) != in_channels_)
        throw DimensionError("discriminator expects " + std::to_string(in_channels_) + " input channels, got " +
                             shape_to_string(x.shape()));

    for (std::size_t i = 0; i < convs_.size(); ++i) {
        x = convs_[i](x);
        if (i + 1 == convs_.size()) break;
        if (norms_[i]) x = (*norms_[i])(x, mode);
        x = activate(x, Activation::leaky_relu(0.2));
    }
    return x;
}

template <typename T>
std::vector<LayerDesc> DiscriminatorNet<T>::layer_descs() const
{
    return discriminator_layers(convs_.size());
}

template <typename T>
std::size_t DiscriminatorNet<T>::receptive_field() const
{
    const auto layers = layer_descs();
    return compute_receptive_field(layers);
}

template <typename T>
std::vector<Tensor<T>> DiscriminatorNet<T>::parameters() const
{
    std::vector<Tensor<T>> out;
    collect_params(out, convs_, norms_);
    return out;
}

template <typename T>
NamedTensors<T> DiscriminatorNet<T>::named_tensors(const std::string& prefix) const
{
    NamedTensors<T> out;
    for (std::size_t i = 0; i < convs_.size(); ++i) {
        const std::string name = prefix + ".conv" + std::to_string(i);
        push_conv(out, name, convs_[i]);
        push_norm(out, prefix + ".norm" + std::to_string(i), norms_[i]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Generator

GeneratorArch generator_arch(std::size_t resolution, ChannelOptions channels)
{
    if (resolution < 16 || resolution > 256 || (resolution & (resolution - 1)) != 0)
        throw ContractError("generator resolution must be a power of two in [16, 256], got " +
                            std::to_string(resolution));
    GeneratorArch arch;
    for (std::size_t r = resolution, i = 0; r > 1; r >>= 1, ++i)
        arch.encoder_channels.push_back(std::min(channels.base << i, channels.max));
    return arch;
}

template <typename T>
GeneratorNet<T>::GeneratorNet(GeneratorArch arch, std::uint64_t seed) : arch_(std::move(arch))
{
    const std::size_t depth = arch_.depth();
    if (depth < 2) throw ContractError("generator needs at least two encoder stages");
    const auto& ch = arch_.encoder_channels;
    Rng rng(seed);

    // Encoder: no norm on the first stage or on the 1x1 bottleneck.
    for (std::size_t i = 0; i < depth; ++i) {
        const std::size_t in = i == 0 ? arch_.in_channels : ch[i - 1];
        const bool normed = i > 0 && i + 1 < depth;
        encoder_.push_back(make_conv<T>(in, ch[i], 4, kDown, !normed, false, rng));
        encoder_norms_.push_back(normed ? std::optional<NormLayer<T>>(NormLayer<T>(ch[i])) : std::nullopt);
    }
    // Decoder stage j restores the resolution of encoder stage depth-2-j.
    for (std::size_t j = 0; j < depth; ++j) {
        const std::size_t level = depth - 1 - j;
        const std::size_t in = j == 0 ? ch[level] : 2 * ch[level];
        const bool last = j + 1 == depth;
        const std::size_t out = last ? arch_.out_channels : ch[level - 1];
        decoder_.push_back(make_conv<T>(in, out, 4, kDown, last, true, rng));
        decoder_norms_.push_back(last ? std::nullopt : std::optional<NormLayer<T>>(NormLayer<T>(out)));
    }
}

template <typename T>
Tensor<T> GeneratorNet<T>::forward(const Tensor<T>& x, NormMode mode)
{
    const std::size_t res = resolution();
    if (x.rank() != 4 || x.dim(1) != arch_.in_channels || x.dim(2) != res || x.dim(3) != res)
        throw DimensionError("generator expects [B," + std::to_string(arch_.in_channels) + "," +
                             std::to_string(res) + "," + std::to_string(res) + "], got " +
                             shape_to_string(x.shape()));
    const std::size_t depth = arch_.depth();
    std::vector<Tensor<T>> skips;
    skips.reserve(depth);
    Tensor<T> h = x;
    for (std::size_t i = 0; i < depth; ++i) {
        h = encoder_[i](h);
        if (encoder_norms_[i]) h = (*encoder_norms_[i])(h, mode);
        h = activate(h, Activation::leaky_relu(0.2));
        skips.push_back(h);
    }
    for (std::size_t j = 0; j < depth; ++j) {
        if (j > 0) h = concat_channels(h, skips[depth - 1 - j]);
        h = decoder_[j](h);
        if (j + 1 == depth) break;
        if (decoder_norms_[j]) h = (*decoder_norms_[j])(h, mode);
        h = activate(h, Activation::relu());
    }
    return activate(h, Activation::tanh());
}

template <typename T>
std::vector<Tensor<T>> GeneratorNet<T>::parameters() const
{
    std::vector<Tensor<T>> out;
    collect_params(out, encoder_, encoder_norms_);
    collect_params(out, decoder_, decoder_norms_);
    return out;
}

template <typename T>
NamedTensors<T> GeneratorNet<T>::named_tensors(const std::string& prefix) const
{
    NamedTensors<T> out;
    for (std::size_t i = 0; i < encoder_.size(); ++i) {
        push_conv(out, prefix + ".enc" + std::to_string(i), encoder_[i]);
        push_norm(out, prefix + ".enc" + std::to_string(i) + ".norm", encoder_norms_[i]);
    }
    for (std::size_t j = 0; j < decoder_.size(); ++j) {
        push_conv(out, prefix + ".dec" + std::to_string(j), decoder_[j]);
        push_norm(out, prefix + ".dec" + std::to_string(j) + ".norm", decoder_norms_[j]);
    }
    return out;
}

template <typename T>
GeneratorNet<T> GeneratorNet<T>::from_tensors(const NamedTensors<T>& tensors, const std::string& prefix)
{
    std::unordered_map<std::string, const Tensor<T>*> by_name;
    for (const auto& [name, t] : tensors) by_name[name] = &t;

    GeneratorArch arch;
    for (std::size_t i = 0;; ++i) {
        auto it = by_name.find(prefix + ".enc" + std::to_string(i) + ".weight");
        if (it == by_name.end()) break;
        const auto& s = it->second->shape();
        if (s.size() != 4) throw FormatError("generator weight " + it->first + " has rank " + std::to_string(s.size()));
        if (i == 0) arch.in_channels = s[1];
        arch.encoder_channels.push_back(s[0]);
    }
    if (arch.depth() < 2) throw FormatError("checkpoint does not contain a generator under prefix '" + prefix + "'");
    auto last = by_name.find(prefix + ".dec" + std::to_string(arch.depth() - 1) + ".weight");
    if (last == by_name.end()) throw FormatError("checkpoint generator is missing its output layer");
    arch.out_channels = last->second->shape().at(1);

    GeneratorNet net(arch, 0);
    load_named_tensors(net.named_tensors(prefix), tensors);
    return net;
}

template <typename T>
DiscriminatorNet<T> build_discriminator(const DiscriminatorSpec& spec, std::size_t in_channels,
                                        std::size_t resolution, ChannelOptions channels, std::uint64_t seed)
{
    return DiscriminatorNet<T>(spec, in_channels, resolution, channels, seed);
}

template <typename T>
GeneratorNet<T> build_generator(std::size_t resolution, ChannelOptions channels, std::uint64_t seed)
{
    return GeneratorNet<T>(generator_arch(resolution, channels), seed);
}

template <typename T>
void load_named_tensors(const NamedTensors<T>& target, const NamedTensors<T>& source)
{
    std::unordered_map<std::string, const Tensor<T>*> by_name;
    for (const auto& [name, t] : source) by_name[name] = &t;
    // Validate everything before writing anything.
    for (const auto& [name, t] : target) {
        auto it = by_name.find(name);
        if (it == by_name.end()) throw FormatError("missing tensor '" + name + "'");
        if (it->second->shape() != t.shape())
            throw FormatError("tensor '" + name + "' has shape " + shape_to_string(it->second->shape()) +
                              ", expected " + shape_to_string(t.shape()));
    }
    for (const auto& [name, t] : target) {
        Tensor<T> handle = t;
        auto dst = handle.data();
        auto src = by_name.at(name)->data();
        std::copy(src.begin(), src.end(), dst.begin());
    }
}

template struct ConvLayer<float>;
template struct ConvLayer<double>;
template struct NormLayer<float>;
template struct NormLayer<double>;
template class DiscriminatorNet<float>;
template class DiscriminatorNet<double>;
template class GeneratorNet<float>;
template class GeneratorNet<double>;
template DiscriminatorNet<float> build_discriminator<float>(const DiscriminatorSpec&, std::size_t, std::size_t,
                                                            ChannelOptions, std::uint64_t);
template DiscriminatorNet<double> build_discriminator<double>(const DiscriminatorSpec&, std::size_t, std::size_t,
                                                              ChannelOptions, std::uint64_t);
template GeneratorNet<float> build_generator<float>(std::size_t, ChannelOptions, std::uint64_t);
template GeneratorNet<double> build_generator<double>(std::size_t, ChannelOptions, std::uint64_t);
template void load_named_tensors<float>(const NamedTensors<float>&, const NamedTensors<float>&);
template void load_named_tensors<double>(const NamedTensors<double>&, const NamedTensors<double>&);

} // namespace s2s
