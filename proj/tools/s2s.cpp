// Command-line front end: data generation, training, inference, extraction,
// metrics and the HTTP service.

#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "s2s/checkpoint.hpp"
#include "s2s/dataset.hpp"
#include "s2s/metrics.hpp"
#include "s2s/pipeline.hpp"
#include "s2s/service.hpp"
#include "s2s/training.hpp"

namespace fs = std::filesystem;
using namespace s2s;

namespace {

HttpServer* g_server = nullptr;

void on_signal(int)
{
    if (g_server) g_server->stop();
}

fs::path axis_sidecar(const fs::path& volume) { return fs::path(volume.string() + ".json"); }

MeshFormat format_for(const fs::path& path)
{
    auto ext = path.extension().string();
    for (auto& c : ext) c = char(std::tolower(static_cast<unsigned char>(c)));
    if (ext == ".obj") return MeshFormat::obj;
    if (ext == ".stl") return MeshFormat::stl_binary;
    throw ConfigError("cannot infer a mesh format from '" + path.string() + "' (use .stl or .obj)");
}

std::vector<fs::path> pgm_files(const fs::path& dir)
{
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".pgm") out.push_back(e.path().filename());
    std::sort(out.begin(), out.end());
    return out;
}

int run_metrics(const fs::path& pred, const fs::path& truth)
{
    MetricReport report;
    if (fs::is_regular_file(pred) && fs::is_regular_file(truth)) {
        report = evaluate_volume(read_volume(pred), read_volume(truth));
    } else {
        const auto names = pgm_files(truth);
        if (names.empty()) throw ConfigError("no .pgm files in " + truth.string());
        std::vector<Image> p, t;
        for (const auto& name : names) {
            if (!fs::exists(pred / name)) throw ConfigError("prediction missing for " + name.string());
            p.push_back(read_pgm(pred / name));
            t.push_back(read_pgm(truth / name));
        }
        report = evaluate_images(p, t);
    }
    std::cout << format_metric_records(report);
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Contour-to-structure translation: training, inference and mesh service"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("gen-data", "Write a synthetic paired phantom corpus");
    fs::path gen_out;
    std::size_t gen_count = 512, gen_res = 64;
    std::uint64_t gen_seed = 7;
    gen->add_option("--out", gen_out, "Output directory")->required();
    gen->add_option("--count", gen_count, "Number of pairs")->capture_default_str();
    gen->add_option("--res", gen_res, "Image resolution")->capture_default_str();
    gen->add_option("--seed", gen_seed, "Corpus seed")->capture_default_str();

    auto* train_cmd = app.add_subcommand("train", "Train a generator against one or more discriminators");
    fs::path data_dir, train_out = "ckpt";
    std::string disc = "6:0.25,126:0.75";
    TrainConfig tc;
    double test_fraction = 0.2;
    bool unconditional = false;
    train_cmd->add_option("--data", data_dir, "Corpus directory from gen-data")->required();
    train_cmd->add_option("--disc", disc, "patch:weight list")->capture_default_str();
    train_cmd->add_option("--lambda", tc.lambda, "L1 weight")->capture_default_str();
    train_cmd->add_option("--epochs", tc.epochs, "Epochs")->capture_default_str();
    train_cmd->add_option("--seed", tc.seed, "Training seed")->capture_default_str();
    train_cmd->add_option("--batch", tc.batch_size, "Batch size")->capture_default_str();
    train_cmd->add_option("--lr", tc.generator_optimizer.lr, "Adam learning rate (both nets)")->capture_default_str();
    train_cmd->add_option("--checkpoint-every", tc.checkpoint_every, "Snapshot every N epochs (0: end only)");
    train_cmd->add_option("--test-fraction", test_fraction, "Held-out fraction")->capture_default_str();
    train_cmd->add_flag("--unconditional", unconditional, "Discriminators see only the candidate image");
    train_cmd->add_option("--out", train_out, "Checkpoint directory")->capture_default_str();

    auto* infer = app.add_subcommand("infer", "Estimate a structure volume for a surface mesh");
    fs::path mesh_path, ckpt_path, vol_out;
    std::string axis = "z", mode = "silhouette";
    std::size_t infer_res = 0, slices = 0;
    infer->add_option("--mesh", mesh_path, "OBJ or STL surface")->required();
    infer->add_option("--ckpt", ckpt_path, "Generator checkpoint")->required();
    infer->add_option("--axis", axis, "Slicing axis")->check(CLI::IsMember({"x", "y", "z"}))->capture_default_str();
    infer->add_option("--res", infer_res, "Slice resolution (default: the checkpoint's)");
    infer->add_option("--slices", slices, "Number of slices (default: resolution)");
    infer->add_option("--mode", mode, "silhouette or outline")->capture_default_str();
    infer->add_option("--out", vol_out, "Volume file")->required();

    auto* extract = app.add_subcommand("extract", "Extract an isosurface from a volume");
    fs::path vol_in, mesh_out;
    double threshold = 0.5;
    std::string extract_axis;
    extract->add_option("--vol", vol_in, "Volume file")->required();
    extract->add_option("--threshold", threshold, "Isovalue in (0,1)")->capture_default_str();
    extract->add_option("--axis", extract_axis, "Slicing axis of the volume (default: from the sidecar, else z)");
    extract->add_option("--out", mesh_out, ".stl or .obj output")->required();

    auto* metrics = app.add_subcommand("metrics", "PSNR and SSIM of predictions against ground truth");
    fs::path pred_path, truth_path;
    metrics->add_option("--pred", pred_path, "Directory of .pgm files or a volume")->required();
    metrics->add_option("--truth", truth_path, "Directory of .pgm files or a volume")->required();

    auto* serve = app.add_subcommand("serve", "Run the HTTP job service");
    ServiceConfig sc;
    std::string host = "0.0.0.0";
    int port = 8080;
    serve->add_option("--port", port, "Listen port")->envname("S2S_PORT")->capture_default_str();
    serve->add_option("--host", host, "Listen address")->envname("S2S_HOST")->capture_default_str();
    serve->add_option("--ckpt-dir", sc.checkpoint_dir, "Checkpoint directory")->envname("S2S_CKPT_DIR")
        ->capture_default_str();
    serve->add_option("--artifact-dir", sc.artifact_dir, "Artifact directory")->envname("S2S_ARTIFACT_DIR")
        ->capture_default_str();
    serve->add_option("--workers", sc.workers, "Worker threads")->envname("S2S_WORKERS")->capture_default_str();
    serve->add_option("--upload-limit", sc.upload_limit, "Maximum upload size in bytes")
        ->envname("S2S_UPLOAD_LIMIT")
        ->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            PairDataset::generate(gen_count, gen_seed, gen_res).save(gen_out);
            std::cout << "wrote " << gen_count << " pairs to " << gen_out << "\n";
        } else if (*train_cmd) {
            const auto data = PairDataset::load(data_dir);
            tc.discriminators = TrainConfig::parse_discriminators(disc, !unconditional);
            tc.discriminator_optimizer.lr = tc.generator_optimizer.lr;
            tc.resolution = data.resolution();
            const auto split = split_dataset(data.size(), test_fraction, tc.seed);
            Trainer trainer(tc);
            const auto report = train(tc, data, split.train, train_out, &std::cout, &trainer);
            const auto score = evaluate_translation(trainer.generator(), data, split.test);
            std::cout << "steps " << report.steps.size() << "  wall " << report.wall_seconds << " s\n"
                      << "test l1 " << score.l1 << "  psnr " << score.psnr << "  ssim " << score.ssim << "\n";
        } else if (*infer) {
            auto generator = GeneratorNet<float>::from_tensors(load_checkpoint(ckpt_path));
            PipelineOptions opt;
            opt.axis = parse_axis(axis);
            opt.resolution = infer_res ? infer_res : generator.resolution();
            opt.slices = slices;
            opt.mode = parse_raster_mode(mode);
            const auto mesh = parse_mesh(read_file_bytes(mesh_path));
            const auto result = estimate_volume(mesh, generator, opt);
            for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
            write_volume(vol_out, result.volume);
            std::ofstream(axis_sidecar(vol_out)) << nlohmann::json{{"axis", axis}}.dump() << "\n";
            std::cout << "volume " << result.volume.nx << "x" << result.volume.ny << "x" << result.volume.nz
                      << " -> " << vol_out << "\n";
        } else if (*extract) {
            std::string a = extract_axis;
            if (a.empty() && fs::exists(axis_sidecar(vol_in))) {
                std::ifstream in(axis_sidecar(vol_in));
                a = nlohmann::json::parse(in).value("axis", "z");
            }
            const auto region = extract_region(read_volume(vol_in), threshold, parse_axis(a.empty() ? "z" : a));
            write_file_bytes(mesh_out, export_mesh(region.mesh, format_for(mesh_out)));
            std::cout << "triangles " << region.mesh.triangles.size() << "  voxels above " << region.voxels_above
                      << " -> " << mesh_out << "\n";
        } else if (*metrics) {
            return run_metrics(pred_path, truth_path);
        } else if (*serve) {
            JobService service(sc);
            HttpServer server(service);
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cout << "listening on " << host << ":" << port << std::endl;
            if (!server.listen(host, port)) {
                std::cerr << "error: cannot listen on " << host << ":" << port << "\n";
                return 1;
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
