#pragma once

// Job service behind the HTTP API: mesh uploads, volume estimation jobs,
// threshold extraction and artifact downloads. Artifacts live on disk under
// models/, volumes/ and meshes/ so a restarted service re-serves them.

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "s2s/error.hpp"
#include "s2s/pipeline.hpp"

namespace s2s {

// An error with the HTTP status it maps to.
class ServiceError : public Error {
public:
    ServiceError(int status, const std::string& what) : Error(what), status_(status) {}
    int status() const noexcept { return status_; }

private:
    int status_;
};

struct ServiceConfig {
    std::filesystem::path artifact_dir = "artifacts";
    std::filesystem::path checkpoint_dir = "ckpt";
    std::size_t workers = 1;
    std::size_t upload_limit = std::size_t{64} << 20;
    std::size_t batch_size = 16;
};

enum class JobState { queued, running, done, error };
const char* job_state_name(JobState state);

struct JobParams {
    Axis axis = Axis::z;
    std::size_t resolution = 0; // 0: the checkpoint's resolution
    std::string checkpoint = "default";
};

struct JobStatus {
    std::string id;
    std::string model_id;
    JobState state = JobState::queued;
    double progress = 0;
    std::string error;
    std::vector<std::string> warnings;
    std::array<std::size_t, 3> dims{0, 0, 0};
};

struct Extraction {
    std::string mesh_id;
    std::size_t voxels_above = 0;
    std::size_t triangles = 0;
};

// 32 lowercase hex digits from the system entropy source.
std::string random_id();

class JobService {
public:
    explicit JobService(ServiceConfig config);
    ~JobService();
    JobService(const JobService&) = delete;
    JobService& operator=(const JobService&) = delete;

    const ServiceConfig& config() const { return config_; }

    std::string create_model(const std::vector<std::uint8_t>& body, const std::string& format);
    std::string create_job(const std::string& model_id, const JobParams& params);
    JobStatus job(const std::string& job_id) const;
    std::vector<std::uint8_t> slice_pgm(const std::string& job_id, long k) const;
    Extraction extract(const std::string& job_id, double threshold);
    std::vector<std::uint8_t> mesh_bytes(const std::string& mesh_id, const std::string& format) const;
    VolumeGrid volume(const std::string& job_id) const;

    // Holding the queue lets callers observe queued jobs deterministically.
    void pause();
    void resume();
    // Blocks until the queue is empty and no job is running.
    void wait_idle();

    // Resolves a checkpoint name to a generator file, or throws 404.
    std::filesystem::path checkpoint_path(const std::string& name) const;

private:
    struct JobRecord {
        JobStatus status;
        JobParams params;
        std::shared_ptr<const VolumeGrid> volume;
        std::map<std::uint64_t, Extraction> extractions; // keyed by threshold bits
    };

    void worker_loop();
    void run_job(const std::string& id);
    void restore();
    void persist_job(const JobRecord& job) const;
    std::filesystem::path dir(const char* name) const { return config_.artifact_dir / name; }
    JobRecord& find_job(const std::string& id);
    const JobRecord& find_job(const std::string& id) const;

    ServiceConfig config_;
    mutable std::mutex mutex_;
    std::condition_variable wake_;
    std::condition_variable idle_;
    std::deque<std::string> queue_;
    std::map<std::string, JobRecord> jobs_;
    std::size_t running_ = 0;
    bool paused_ = false;
    bool stopping_ = false;
    std::vector<std::thread> workers_;
};

// HTTP front end. Routes live under /api; errors are JSON
// {"error": {"code": <status>, "message": <text>}}.
class HttpServer {
public:
    explicit HttpServer(JobService& service);
    ~HttpServer();

    // Binds and serves on a background thread. Port 0 picks a free port.
    int start(const std::string& host, int port);
    // Serves on the calling thread until stop().
    bool listen(const std::string& host, int port);
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace s2s
