#pragma once

// Multi-discriminator conditional GAN training.
//
// The generator minimizes
//     sum_i w_i * BCE(D_i(y, G(y)), 1) + lambda * mean|x - G(y)|
// where BCE against label 1 is -log(sigmoid(logit)) averaged over each
// discriminator's patch map. Each D_i is updated on its own with
// 0.5 * [BCE(D_i(y, x), 1) + BCE(D_i(y, G(y)), 0)] using a detached G(y).

#include <chrono>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "s2s/adam.hpp"
#include "s2s/dataset.hpp"
#include "s2s/networks.hpp"

namespace s2s {

struct TrainConfig {
    std::vector<DiscriminatorSpec> discriminators{{6, 0.25, true}, {126, 0.75, true}};
    double lambda = 100.0;
    std::size_t resolution = 64;
    std::size_t batch_size = 4;
    std::size_t epochs = 20;
    std::uint64_t seed = 7;
    AdamConfig generator_optimizer{};
    AdamConfig discriminator_optimizer{};
    std::size_t checkpoint_every = 0; // epochs between snapshots; 0 = final only
    ChannelOptions generator_channels{16, 128};
    ChannelOptions discriminator_channels{16, 128};

    // Throws ConfigError: weights must sum to 1 within 1e-9, lambda >= 0,
    // at least one discriminator, positive batch size.
    void validate() const;

    // Parses "6:0.25,126:0.75".
    static std::vector<DiscriminatorSpec> parse_discriminators(const std::string& text, bool conditional = true);
};

struct GeneratorLossParts {
    std::vector<double> adversarial; // unweighted -mean log D_i per discriminator
    double l1 = 0;
};

// Generator objective from raw discriminator logit maps.
template <typename T>
Tensor<T> generator_loss(const std::vector<Tensor<T>>& d_logits, std::span<const double> weights,
                         const Tensor<T>& fake, const Tensor<T>& real, double lambda,
                         GeneratorLossParts* parts = nullptr);

// Same objective from patch scores already in (0,1]; score 1 contributes 0.
template <typename T>
Tensor<T> generator_loss_from_scores(const std::vector<Tensor<T>>& d_scores, std::span<const double> weights,
                                     const Tensor<T>& fake, const Tensor<T>& real, double lambda,
                                     GeneratorLossParts* parts = nullptr);

template <typename T>
struct ImagePair {
    Tensor<T> condition; // y
    Tensor<T> candidate; // x or G(y)
};

template <typename T>
Tensor<T> discriminator_loss(DiscriminatorNet<T>& d, const ImagePair<T>& real, const ImagePair<T>& fake);

struct StepRecord {
    std::size_t step = 0;
    std::size_t epoch = 0;
    double generator_total = 0;
    std::vector<double> adversarial;
    double l1 = 0;
    std::vector<double> discriminator;

    std::string to_json_line() const;
};

struct TrainReport {
    std::vector<StepRecord> steps;
    double wall_seconds = 0;
    std::vector<std::size_t> effective_receptive_fields;
};

class Trainer {
public:
    explicit Trainer(TrainConfig config);

    // One step: every discriminator first (independently, on a detached
    // fake batch), then one generator update.
    StepRecord train_step(const TensorF& contours, const TensorF& structures);

    GeneratorNet<float>& generator() { return generator_; }
    std::vector<DiscriminatorNet<float>>& discriminators() { return discriminators_; }
    const TrainConfig& config() const { return config_; }
    std::size_t steps_taken() const { return step_; }

    NamedTensors<float> generator_tensors() const { return generator_.named_tensors("g"); }
    NamedTensors<float> discriminator_tensors() const;

    // g.s2s1, d.s2s1 and run.json in `dir`.
    void save(const std::filesystem::path& dir, const std::string& tag = "") const;

private:
    TrainConfig config_;
    GeneratorNet<float> generator_;
    std::vector<DiscriminatorNet<float>> discriminators_;
    std::unique_ptr<Adam<float>> generator_opt_;
    std::vector<std::unique_ptr<Adam<float>>> discriminator_opts_;
    std::vector<double> weights_;
    std::size_t step_ = 0;
    std::size_t epoch_ = 0;

    friend TrainReport train(const TrainConfig&, const PairDataset&, const std::vector<std::size_t>&,
                             const std::filesystem::path&, std::ostream*, Trainer*);
};

// Runs config.epochs epochs over `train_indices`. Writes checkpoints and a
// line-delimited train_log.jsonl into out_dir (skipped when empty). If
// `trainer` is given it is used (and left trained) instead of a fresh one.
TrainReport train(const TrainConfig& config, const PairDataset& data, const std::vector<std::size_t>& train_indices,
                  const std::filesystem::path& out_dir, std::ostream* log = nullptr, Trainer* trainer = nullptr);

struct TranslationScore {
    double l1 = 0;   // mean |pred - truth| in [0,1] units
    double psnr = 0; // mean per-image PSNR
    double ssim = 0;
};

// Runs the generator in eval mode over `indices` and scores it.
TranslationScore evaluate_translation(GeneratorNet<float>& generator, const PairDataset& data,
                                      const std::vector<std::size_t>& indices, std::size_t batch_size = 16);

// Predict [0,1] structure images for contour images in [0,1].
std::vector<Image> translate_images(GeneratorNet<float>& generator, const std::vector<Image>& contours,
                                    std::size_t batch_size = 16);

} // namespace s2s
