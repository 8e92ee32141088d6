#include "s2s/service.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include "s2s/checkpoint.hpp"
#include "s2s/image.hpp"

namespace s2s {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool is_id(const std::string& s)
{
    if (s.size() != 32) return false;
    for (char c : s)
        if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
    return true;
}

const char* axis_name(Axis a)
{
    switch (a) {
    case Axis::x: return "x";
    case Axis::y: return "y";
    case Axis::z: break;
    }
    return "z";
}

MeshFormat download_format(const std::string& name)
{
    if (name.empty() || name == "stl" || name == "stl_binary") return MeshFormat::stl_binary;
    if (name == "obj") return MeshFormat::obj;
    throw ServiceError(422, "unsupported download format '" + name + "' (expected stl or obj)");
}

} // namespace

const char* job_state_name(JobState state)
{
    switch (state) {
    case JobState::queued: return "queued";
    case JobState::running: return "running";
    case JobState::done: return "done";
    case JobState::error: break;
    }
    return "error";
}

std::string random_id()
{
    static std::mutex m;
    static std::random_device rd;
    std::lock_guard lock(m);
    static const char* hex = "0123456789abcdef";
    std::string id;
    for (int i = 0; i < 4; ++i) {
        std::uint32_t v = rd();
        for (int k = 0; k < 8; ++k, v >>= 4) id.push_back(hex[v & 15]);
    }
    return id;
}

JobService::JobService(ServiceConfig config) : config_(std::move(config))
{
    if (config_.workers == 0) throw ConfigError("the service needs at least one worker");
    if (config_.batch_size == 0) throw ConfigError("batch size must be positive");
    for (const char* d : {"models", "volumes", "meshes"}) fs::create_directories(dir(d));
    restore();
    for (std::size_t i = 0; i < config_.workers; ++i) workers_.emplace_back([this] { worker_loop(); });
}

JobService::~JobService()
{
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
    }
    wake_.notify_all();
    for (auto& t : workers_) t.join();
}

void JobService::restore()
{
    for (const auto& entry : fs::directory_iterator(dir("volumes"))) {
        const auto path = entry.path();
        if (path.extension() != ".json" || !is_id(path.stem().string())) continue;
        const auto volume_path = fs::path(path).replace_extension(".s2svol");
        if (!fs::exists(volume_path)) continue;
        try {
            std::ifstream in(path);
            const json meta = json::parse(in);
            JobRecord job;
            job.status.id = path.stem().string();
            job.status.model_id = meta.at("model_id").get<std::string>();
            job.status.state = JobState::done;
            job.status.progress = 1.0;
            job.status.warnings = meta.value("warnings", std::vector<std::string>{});
            job.params.axis = parse_axis(meta.at("axis").get<std::string>());
            job.params.resolution = meta.at("resolution").get<std::size_t>();
            job.params.checkpoint = meta.at("checkpoint").get<std::string>();
            auto volume = std::make_shared<VolumeGrid>(read_volume(volume_path));
            job.status.dims = {volume->nx, volume->ny, volume->nz};
            job.volume = std::move(volume);
            jobs_.emplace(job.status.id, std::move(job));
        } catch (const std::exception&) {
            // A half-written artifact is skipped rather than fatal.
        }
    }
}

void JobService::persist_job(const JobRecord& job) const
{
    const auto base = dir("volumes") / job.status.id;
    write_volume(fs::path(base).replace_extension(".s2svol"), *job.volume);
    json meta = {{"model_id", job.status.model_id},
                 {"axis", axis_name(job.params.axis)},
                 {"resolution", job.params.resolution},
                 {"checkpoint", job.params.checkpoint},
                 {"warnings", job.status.warnings}};
    // Metadata last: its presence marks a complete job.
    std::ofstream(fs::path(base).replace_extension(".json")) << meta.dump(2) << "\n";
}

std::string JobService::create_model(const std::vector<std::uint8_t>& body, const std::string& format)
{
    if (body.size() > config_.upload_limit)
        throw ServiceError(413, "upload of " + std::to_string(body.size()) + " bytes exceeds the limit of " +
                                    std::to_string(config_.upload_limit));
    MeshFormat fmt;
    try {
        fmt = parse_mesh_format(format.empty() ? "auto" : format);
    } catch (const Error& e) {
        throw ServiceError(422, e.what());
    }
    MeshSurface mesh;
    try {
        mesh = parse_mesh(body, fmt);
    } catch (const ParseError& e) {
        throw ServiceError(422, e.what());
    } catch (const FormatError& e) {
        throw ServiceError(422, std::string("no geometry: ") + e.what());
    }
    const auto extent = bounding_box(mesh).extent();
    if (!(extent[0] > 0 && extent[1] > 0 && extent[2] > 0))
        throw ServiceError(422, "mesh is flat along at least one axis");
    const std::string id = random_id();
    write_file_bytes(dir("models") / (id + ".obj"), export_mesh(mesh, MeshFormat::obj));
    return id;
}

fs::path JobService::checkpoint_path(const std::string& name) const
{
    const bool safe = !name.empty() && name[0] != '.' &&
                      name.find_first_not_of("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_.-") ==
                          std::string::npos;
    if (!safe) throw ServiceError(404, "unknown checkpoint '" + name + "'");
    std::vector<fs::path> candidates;
    if (name == "default") {
        candidates = {config_.checkpoint_dir / "default.s2s1", config_.checkpoint_dir / "g.s2s1"};
    } else {
        candidates = {config_.checkpoint_dir / (name + ".s2s1"), config_.checkpoint_dir / name};
    }
    for (const auto& p : candidates)
        if (fs::is_regular_file(p)) return p;
    throw ServiceError(404, "unknown checkpoint '" + name + "'");
}

std::string JobService::create_job(const std::string& model_id, const JobParams& params)
{
    if (!is_id(model_id) || !fs::exists(dir("models") / (model_id + ".obj")))
        throw ServiceError(404, "unknown model '" + model_id + "'");
    checkpoint_path(params.checkpoint);
    if (params.resolution != 0 &&
        (params.resolution < 16 || params.resolution > 256 || !std::has_single_bit(params.resolution)))
        throw ServiceError(422, "resolution must be a power of two in [16, 256]");

    JobRecord job;
    job.status.id = random_id();
    job.status.model_id = model_id;
    job.params = params;
    const std::string id = job.status.id;
    {
        std::lock_guard lock(mutex_);
        jobs_.emplace(id, std::move(job));
        queue_.push_back(id);
    }
    wake_.notify_one();
    return id;
}

JobService::JobRecord& JobService::find_job(const std::string& id)
{
    auto it = jobs_.find(id);
    if (it == jobs_.end()) throw ServiceError(404, "unknown job '" + id + "'");
    return it->second;
}

const JobService::JobRecord& JobService::find_job(const std::string& id) const
{
    auto it = jobs_.find(id);
    if (it == jobs_.end()) throw ServiceError(404, "unknown job '" + id + "'");
    return it->second;
}

JobStatus JobService::job(const std::string& job_id) const
{
    std::lock_guard lock(mutex_);
    return find_job(job_id).status;
}

VolumeGrid JobService::volume(const std::string& job_id) const
{
    std::lock_guard lock(mutex_);
    const auto& job = find_job(job_id);
    if (job.status.state != JobState::done)
        throw ServiceError(409, std::string("job is ") + job_state_name(job.status.state));
    return *job.volume;
}

std::vector<std::uint8_t> JobService::slice_pgm(const std::string& job_id, long k) const
{
    std::shared_ptr<const VolumeGrid> volume;
    {
        std::lock_guard lock(mutex_);
        const auto& job = find_job(job_id);
        if (job.status.state != JobState::done)
            throw ServiceError(409, std::string("job is ") + job_state_name(job.status.state));
        volume = job.volume;
    }
    if (k < 0 || std::size_t(k) >= volume->nz)
        throw ServiceError(422, "slice index " + std::to_string(k) + " outside [0, " + std::to_string(volume->nz) +
                                    ")");
    return encode_pgm(volume->plane(std::size_t(k)));
}

Extraction JobService::extract(const std::string& job_id, double threshold)
{
    std::shared_ptr<const VolumeGrid> volume;
    Axis axis;
    const std::uint64_t key = std::bit_cast<std::uint64_t>(threshold);
    {
        std::lock_guard lock(mutex_);
        auto& job = find_job(job_id);
        if (!(threshold > 0.0 && threshold < 1.0))
            throw ServiceError(422, "threshold must lie in (0, 1), got " + std::to_string(threshold));
        if (job.status.state != JobState::done)
            throw ServiceError(409, std::string("job is ") + job_state_name(job.status.state));
        if (auto it = job.extractions.find(key); it != job.extractions.end()) return it->second;
        volume = job.volume;
        axis = job.params.axis;
    }
    auto region = extract_region(*volume, threshold, axis);
    Extraction result{random_id(), region.voxels_above, region.mesh.triangles.size()};
    write_file_bytes(dir("meshes") / (result.mesh_id + ".obj"), export_mesh(region.mesh, MeshFormat::obj));

    std::lock_guard lock(mutex_);
    return find_job(job_id).extractions.emplace(key, result).first->second;
}

std::vector<std::uint8_t> JobService::mesh_bytes(const std::string& mesh_id, const std::string& format) const
{
    const auto fmt = download_format(format);
    const auto path = dir("meshes") / (mesh_id + ".obj");
    if (!is_id(mesh_id) || !fs::exists(path)) throw ServiceError(404, "unknown mesh '" + mesh_id + "'");
    const auto stored = read_file_bytes(path);
    if (fmt == MeshFormat::obj) return stored;
    MeshSurface mesh;
    if (!stored.empty()) {
        try {
            mesh = parse_mesh(stored, MeshFormat::obj);
        } catch (const ParseError&) {
            // An empty extraction is stored as an empty file.
        }
    }
    return export_mesh(mesh, fmt);
}

void JobService::pause()
{
    std::lock_guard lock(mutex_);
    paused_ = true;
}

void JobService::resume()
{
    {
        std::lock_guard lock(mutex_);
        paused_ = false;
    }
    wake_.notify_all();
}

void JobService::wait_idle()
{
    std::unique_lock lock(mutex_);
    idle_.wait(lock, [this] { return (queue_.empty() || paused_) && running_ == 0; });
}

void JobService::worker_loop()
{
    while (true) {
        std::string id;
        {
            std::unique_lock lock(mutex_);
            wake_.wait(lock, [this] { return stopping_ || (!paused_ && !queue_.empty()); });
            if (stopping_) return;
            id = queue_.front();
            queue_.pop_front();
            ++running_;
            find_job(id).status.state = JobState::running;
        }
        run_job(id);
        {
            std::lock_guard lock(mutex_);
            --running_;
        }
        idle_.notify_all();
    }
}

void JobService::run_job(const std::string& id)
{
    JobParams params;
    std::string model_id;
    {
        std::lock_guard lock(mutex_);
        const auto& job = find_job(id);
        params = job.params;
        model_id = job.status.model_id;
    }
    try {
        auto mesh = parse_mesh(read_file_bytes(dir("models") / (model_id + ".obj")), MeshFormat::obj);
        auto generator = GeneratorNet<float>::from_tensors(load_checkpoint(checkpoint_path(params.checkpoint)));
        if (params.resolution == 0) params.resolution = generator.resolution();
        if (params.resolution != generator.resolution())
            throw ConfigError("resolution " + std::to_string(params.resolution) + " does not match checkpoint '" +
                              params.checkpoint + "' (" + std::to_string(generator.resolution()) + ")");

        PipelineOptions options;
        options.axis = params.axis;
        options.resolution = params.resolution;
        options.batch_size = config_.batch_size;
        auto result = estimate_volume(mesh, generator, options, [&](std::size_t done, std::size_t total) {
            std::lock_guard lock(mutex_);
            auto& status = find_job(id).status;
            status.progress = std::max(status.progress, double(done) / double(total));
        });

        JobRecord snapshot;
        {
            std::lock_guard lock(mutex_);
            auto& job = find_job(id);
            job.params = params;
            job.status.warnings = std::move(result.warnings);
            job.status.dims = {result.volume.nx, result.volume.ny, result.volume.nz};
            job.volume = std::make_shared<const VolumeGrid>(std::move(result.volume));
            snapshot.status = job.status;
            snapshot.params = job.params;
            snapshot.volume = job.volume;
        }
        persist_job(snapshot);
        std::lock_guard lock(mutex_);
        auto& status = find_job(id).status;
        status.progress = 1.0;
        status.state = JobState::done;
    } catch (const std::exception& e) {
        std::lock_guard lock(mutex_);
        auto& job = find_job(id);
        job.volume.reset();
        job.status.state = JobState::error;
        job.status.error = e.what();
    }
}

} // namespace s2s
