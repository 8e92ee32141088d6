#include "s2s/training.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "s2s/checkpoint.hpp"
#include "s2s/error.hpp"
#include "s2s/metrics.hpp"
#include "s2s/ops.hpp"
#include "s2s/random.hpp"

namespace s2s {

using json = nlohmann::json;

void TrainConfig::validate() const
{
    if (discriminators.empty()) throw ConfigError("at least one discriminator is required");
    double total = 0;
    for (const auto& d : discriminators) {
        discriminator_layer_count(d.patch_size);
        if (!(d.weight >= 0.0)) throw ConfigError("discriminator weights must be non-negative");
        total += d.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        std::ostringstream os;
        os << "discriminator weights sum to " << std::setprecision(17) << total << ", expected 1";
        throw ConfigError(os.str());
    }
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
    if (batch_size == 0) throw ConfigError("batch size must be positive");
    generator_arch(resolution, generator_channels);
}

std::vector<DiscriminatorSpec> TrainConfig::parse_discriminators(const std::string& text, bool conditional)
{
    std::vector<DiscriminatorSpec> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos)
            throw ConfigError("discriminator entry '" + item + "' is not of the form patch:weight");
        DiscriminatorSpec spec;
        try {
            std::size_t used = 0;
            spec.patch_size = std::stoul(item.substr(0, colon), &used);
            spec.weight = std::stod(item.substr(colon + 1));
        } catch (const std::logic_error&) {
            throw ConfigError("discriminator entry '" + item + "' is not of the form patch:weight");
        }
        spec.conditional = conditional;
        out.push_back(spec);
    }
    if (out.empty()) throw ConfigError("no discriminators given");
    return out;
}

namespace {

void check_weights(std::size_t maps, std::span<const double> weights)
{
    if (maps != weights.size())
        throw ContractError(std::to_string(maps) + " discriminator outputs for " + std::to_string(weights.size()) +
                            " weights");
    if (maps == 0) throw ConfigError("at least one discriminator is required");
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("discriminator weights must sum to 1");
}

template <typename T>
Tensor<T> combine(std::vector<Tensor<T>> terms, std::span<const double> weights, const Tensor<T>& fake,
                  const Tensor<T>& real, double lambda, GeneratorLossParts* parts)
{
    if (fake.shape() != real.shape())
        throw DimensionError("fake " + shape_to_string(fake.shape()) + " and real " + shape_to_string(real.shape()) +
                             " differ");
    Tensor<T> l1 = l1_loss(real, fake);
    Tensor<T> total = scale(l1, T(lambda));
    for (std::size_t i = 0; i < terms.size(); ++i) total = add(total, scale(terms[i], T(weights[i])));
    if (parts) {
        parts->adversarial.clear();
        for (const auto& t : terms) parts->adversarial.push_back(double(t.item()));
        parts->l1 = double(l1.item());
    }
    return total;
}

} // namespace

template <typename T>
Tensor<T> generator_loss(const std::vector<Tensor<T>>& d_logits, std::span<const double> weights,
                         const Tensor<T>& fake, const Tensor<T>& real, double lambda, GeneratorLossParts* parts)
{
    check_weights(d_logits.size(), weights);
    std::vector<Tensor<T>> terms;
    for (const auto& z : d_logits) terms.push_back(bce_with_logits(z, T(1)));
    return combine(std::move(terms), weights, fake, real, lambda, parts);
}

template <typename T>
Tensor<T> generator_loss_from_scores(const std::vector<Tensor<T>>& d_scores, std::span<const double> weights,
                                     const Tensor<T>& fake, const Tensor<T>& real, double lambda,
                                     GeneratorLossParts* parts)
{
    check_weights(d_scores.size(), weights);
    std::vector<Tensor<T>> terms;
    for (const auto& s : d_scores) terms.push_back(scale(mean(log(s)), T(-1)));
    return combine(std::move(terms), weights, fake, real, lambda, parts);
}

template <typename T>
Tensor<T> discriminator_loss(DiscriminatorNet<T>& d, const ImagePair<T>& real, const ImagePair<T>& fake)
{
    if (real.candidate.shape() != fake.candidate.shape())
        throw DimensionError("real " + shape_to_string(real.candidate.shape()) + " and fake " +
                             shape_to_string(fake.candidate.shape()) + " batches differ");
    auto cond = [&](const ImagePair<T>& p) {
        return d.spec().conditional ? std::optional<Tensor<T>>(p.condition) : std::nullopt;
    };
    Tensor<T> on_real = bce_with_logits(d.forward(real.candidate, cond(real)), T(1));
    Tensor<T> on_fake = bce_with_logits(d.forward(fake.candidate.detach(), cond(fake)), T(0));
    return scale(add(on_real, on_fake), T(0.5));
}

std::string StepRecord::to_json_line() const
{
    json j{{"step", step},       {"epoch", epoch}, {"loss_g", generator_total},
           {"adv", adversarial}, {"l1", l1},       {"loss_d", discriminator}};
    return j.dump();
}

Trainer::Trainer(TrainConfig config)
    : config_((config.validate(), std::move(config))),
      generator_(build_generator<float>(config_.resolution, config_.generator_channels, mix_seed(config_.seed, 1)))
{
    generator_opt_ = std::make_unique<Adam<float>>(generator_.parameters(), config_.generator_optimizer);
    for (std::size_t i = 0; i < config_.discriminators.size(); ++i) {
        const auto& spec = config_.discriminators[i];
        discriminators_.push_back(build_discriminator<float>(spec, spec.conditional ? 2 : 1, config_.resolution,
                                                             config_.discriminator_channels,
                                                             mix_seed(config_.seed, 100 + i)));
        weights_.push_back(spec.weight);
    }
    for (auto& d : discriminators_)
        discriminator_opts_.push_back(std::make_unique<Adam<float>>(d.parameters(), config_.discriminator_optimizer));
}

namespace {

void require_finite(double v, const std::string& term, std::size_t step)
{
    if (!std::isfinite(v))
        throw TrainingDiverged("non-finite " + term + " at step " + std::to_string(step) + "; training aborted");
}

std::string disc_label(const DiscriminatorSpec& s, std::size_t i)
{
    return "discriminator " + std::to_string(i) + " (patch " + std::to_string(s.patch_size) + ")";
}

} // namespace

StepRecord Trainer::train_step(const TensorF& contours, const TensorF& structures)
{
    if (contours.rank() != 4 || contours.dim(0) == 0) throw ContractError("train_step needs a non-empty batch");
    if (contours.shape() != structures.shape())
        throw DimensionError("contour batch " + shape_to_string(contours.shape()) + " and structure batch " +
                             shape_to_string(structures.shape()) + " differ");
    if (contours.dim(2) != config_.resolution || contours.dim(3) != config_.resolution)
        throw DimensionError("batch resolution " + shape_to_string(contours.shape()) + " does not match the " +
                             std::to_string(config_.resolution) + " configured");

    StepRecord rec;
    rec.step = step_;
    rec.epoch = epoch_;

    // The fake batch is computed once; D updates see it detached.
    TensorF fake = generator_.forward(contours, NormMode::train);

    for (std::size_t i = 0; i < discriminators_.size(); ++i) {
        discriminator_opts_[i]->zero_grad();
        TensorF loss = discriminator_loss(discriminators_[i], {contours, structures}, {contours, fake});
        const double v = loss.item();
        require_finite(v, disc_label(config_.discriminators[i], i) + " loss", step_);
        loss.backward();
        discriminator_opts_[i]->step();
        rec.discriminator.push_back(v);
    }

    generator_opt_->zero_grad();
    std::vector<TensorF> logits;
    for (auto& d : discriminators_)
        logits.push_back(d.forward(fake, d.spec().conditional ? std::optional<TensorF>(contours) : std::nullopt));
    GeneratorLossParts parts;
    TensorF g_loss = generator_loss(logits, weights_, fake, structures, config_.lambda, &parts);
    for (std::size_t i = 0; i < parts.adversarial.size(); ++i)
        require_finite(parts.adversarial[i], "adversarial term of " + disc_label(config_.discriminators[i], i), step_);
    require_finite(parts.l1, "L1 term", step_);
    rec.generator_total = g_loss.item();
    require_finite(rec.generator_total, "generator loss", step_);
    g_loss.backward();
    generator_opt_->step();
    // The generator pass also filled discriminator gradients; drop them.
    for (auto& opt : discriminator_opts_) opt->zero_grad();

    rec.adversarial = std::move(parts.adversarial);
    rec.l1 = parts.l1;
    ++step_;
    return rec;
}

NamedTensors<float> Trainer::discriminator_tensors() const
{
    NamedTensors<float> out;
    for (std::size_t i = 0; i < discriminators_.size(); ++i) {
        auto part = discriminators_[i].named_tensors("d" + std::to_string(i));
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

void Trainer::save(const std::filesystem::path& dir, const std::string& tag) const
{
    std::filesystem::create_directories(dir);
    save_checkpoint(generator_tensors(), dir / ("g" + tag + ".s2s1"));
    save_checkpoint(discriminator_tensors(), dir / ("d" + tag + ".s2s1"));

    json discs = json::array();
    for (std::size_t i = 0; i < discriminators_.size(); ++i) {
        const auto& d = discriminators_[i];
        discs.push_back({{"patch_size", d.spec().patch_size},
                         {"weight", d.spec().weight},
                         {"conditional", d.spec().conditional},
                         {"layers", d.layer_count()},
                         {"effective_receptive_field", d.receptive_field()}});
    }
    json run{{"resolution", config_.resolution},
             {"lambda", config_.lambda},
             {"batch_size", config_.batch_size},
             {"epochs", config_.epochs},
             {"seed", config_.seed},
             {"steps", step_},
             {"generator_channels", {{"base", config_.generator_channels.base}, {"max", config_.generator_channels.max}}},
             {"discriminators", discs}};
    const std::string text = run.dump(2) + "\n";
    write_file_bytes(dir / ("run" + tag + ".json"), std::vector<std::uint8_t>(text.begin(), text.end()));
}

TrainReport train(const TrainConfig& config, const PairDataset& data, const std::vector<std::size_t>& train_indices,
                  const std::filesystem::path& out_dir, std::ostream* log, Trainer* trainer)
{
    config.validate();
    if (train_indices.empty() || data.size() == 0) throw ConfigError("training set is empty");
    if (data.resolution() != config.resolution)
        throw ConfigError("dataset resolution " + std::to_string(data.resolution()) + " differs from the configured " +
                          std::to_string(config.resolution));

    std::unique_ptr<Trainer> owned;
    if (!trainer) {
        owned = std::make_unique<Trainer>(config);
        trainer = owned.get();
    }

    std::ofstream jsonl;
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        jsonl.open(out_dir / "train_log.jsonl", std::ios::trunc);
    }

    TrainReport report;
    for (const auto& d : trainer->discriminators()) report.effective_receptive_fields.push_back(d.receptive_field());
    const auto start = std::chrono::steady_clock::now();

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        trainer->epoch_ = epoch;
        BatchLoader loader(data, train_indices, config.batch_size, mix_seed(config.seed, epoch));
        while (auto batch = loader.next()) {
            StepRecord rec = trainer->train_step(batch->contours, batch->structures);
            if (jsonl) jsonl << rec.to_json_line() << '\n';
            report.steps.push_back(std::move(rec));
        }
        if (log) {
            const auto& last = report.steps.back();
            *log << "epoch " << epoch + 1 << "/" << config.epochs << "  loss_g " << last.generator_total << "  l1 "
                 << last.l1 << std::endl;
        }
        if (!out_dir.empty() && config.checkpoint_every && (epoch + 1) % config.checkpoint_every == 0 &&
            epoch + 1 < config.epochs) {
            char tag[32];
            std::snprintf(tag, sizeof tag, "_epoch%03zu", epoch + 1);
            trainer->save(out_dir, tag);
        }
    }
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!out_dir.empty()) trainer->save(out_dir);
    return report;
}

std::vector<Image> translate_images(GeneratorNet<float>& generator, const std::vector<Image>& contours,
                                    std::size_t batch_size)
{
    if (batch_size == 0) throw ContractError("batch size must be positive");
    NoGradGuard guard;
    std::vector<Image> out;
    out.reserve(contours.size());
    for (std::size_t start = 0; start < contours.size(); start += batch_size) {
        const std::size_t end = std::min(contours.size(), start + batch_size);
        std::vector<const Image*> batch;
        for (std::size_t i = start; i < end; ++i) {
            if (contours[i].width != generator.resolution() || contours[i].height != generator.resolution())
                throw DimensionError("image " + std::to_string(i) + " is " + std::to_string(contours[i].width) +
                                     "x" + std::to_string(contours[i].height) + ", generator expects " +
                                     std::to_string(generator.resolution()));
            batch.push_back(&contours[i]);
        }
        auto images = tensor_to_images(generator.forward(images_to_tensor(batch), NormMode::eval));
        for (auto& img : images) out.push_back(std::move(img));
    }
    return out;
}

TranslationScore evaluate_translation(GeneratorNet<float>& generator, const PairDataset& data,
                                      const std::vector<std::size_t>& indices, std::size_t batch_size)
{
    if (indices.empty()) throw ContractError("nothing to evaluate");
    std::vector<Image> inputs, truth;
    for (auto i : indices) {
        inputs.push_back(data[i].contour);
        truth.push_back(data[i].structure);
    }
    const auto pred = translate_images(generator, inputs, batch_size);
    TranslationScore score;
    double l1 = 0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < pred.size(); ++k)
        for (std::size_t p = 0; p < pred[k].pixels.size(); ++p, ++n)
            l1 += std::abs(double(pred[k].pixels[p]) - double(truth[k].pixels[p]));
    score.l1 = l1 / double(n);
    const auto report = evaluate_images(pred, truth);
    double psnr_sum = 0;
    for (const auto& m : report.items) psnr_sum += m.psnr;
    score.psnr = psnr_sum / double(report.count());
    score.ssim = report.mean_ssim;
    return score;
}

#define S2S_INSTANTIATE(T)                                                                                            \
    template Tensor<T> generator_loss(const std::vector<Tensor<T>>&, std::span<const double>, const Tensor<T>&,     \
                                      const Tensor<T>&, double, GeneratorLossParts*);                              \
    template Tensor<T> generator_loss_from_scores(const std::vector<Tensor<T>>&, std::span<const double>,           \
                                                  const Tensor<T>&, const Tensor<T>&, double, GeneratorLossParts*); \
    template Tensor<T> discriminator_loss(DiscriminatorNet<T>&, const ImagePair<T>&, const ImagePair<T>&);

S2S_INSTANTIATE(float)
S2S_INSTANTIATE(double)

} // namespace s2s
