#include <atomic>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "s2s/service.hpp"

namespace s2s {

using nlohmann::json;

namespace {

void send_error(httplib::Response& res, int status, const std::string& message)
{
    res.status = status;
    res.set_content(json{{"error", {{"code", status}, {"message", message}}}}.dump(), "application/json");
}

void send_json(httplib::Response& res, int status, const json& body)
{
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

json parse_body(const httplib::Request& req)
{
    if (req.body.empty()) return json::object();
    try {
        auto body = json::parse(req.body);
        if (!body.is_object()) throw ServiceError(422, "request body must be a JSON object");
        return body;
    } catch (const json::exception& e) {
        throw ServiceError(422, std::string("malformed JSON body: ") + e.what());
    }
}

json status_json(const JobStatus& s)
{
    return {{"job_id", s.id},
            {"model_id", s.model_id},
            {"state", job_state_name(s.state)},
            {"progress", s.progress},
            {"error", s.error.empty() ? json(nullptr) : json(s.error)},
            {"warnings", s.warnings},
            {"dims", s.dims}};
}

// Runs a handler and maps library and service errors to JSON bodies.
template <class F>
httplib::Server::Handler guarded(F f)
{
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const ServiceError& e) {
            send_error(res, e.status(), e.what());
        } catch (const json::exception& e) {
            send_error(res, 422, e.what());
        } catch (const ConfigError& e) {
            send_error(res, 422, e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, e.what());
        }
    };
}

} // namespace

struct HttpServer::Impl {
    JobService& service;
    httplib::Server server;
    std::thread thread;

    explicit Impl(JobService& s) : service(s) { routes(); }

    void routes()
    {
        server.set_payload_max_length(service.config().upload_limit);
        server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
            if (res.body.empty()) send_error(res, res.status, httplib::status_message(res.status));
        });
        server.set_post_routing_handler([](const httplib::Request&, httplib::Response& res) {
            res.set_header("Access-Control-Allow-Origin", "*");
        });
        server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
            res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Content-Type");
            res.status = 204;
        });

        server.Post("/api/models", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const std::vector<std::uint8_t> body(req.body.begin(), req.body.end());
            const auto id = service.create_model(body, req.get_param_value("format"));
            send_json(res, 201, {{"model_id", id}});
        }));

        server.Post(R"(/api/models/([^/]+)/jobs)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto body = parse_body(req);
            JobParams params;
            if (body.contains("axis")) params.axis = parse_axis(body.at("axis").get<std::string>());
            if (body.contains("resolution")) {
                const auto& r = body.at("resolution");
                if (!r.is_number_integer() || r.get<long>() <= 0)
                    throw ServiceError(422, "resolution must be a positive integer");
                params.resolution = r.get<std::size_t>();
            }
            if (body.contains("checkpoint")) params.checkpoint = body.at("checkpoint").get<std::string>();
            const auto id = service.create_job(req.matches[1], params);
            send_json(res, 202, {{"job_id", id}, {"state", "queued"}});
        }));

        server.Get(R"(/api/jobs/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, status_json(service.job(req.matches[1])));
        }));

        server.Get(R"(/api/jobs/([^/]+)/slices/([^/]+))",
                   guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const std::string text = req.matches[2];
                       long k = 0;
                       std::size_t used = 0;
                       try {
                           k = std::stol(text, &used);
                       } catch (const std::exception&) {
                           used = 0;
                       }
                       service.job(req.matches[1]); // 404 before 422
                       if (used == 0 || used != text.size())
                           throw ServiceError(422, "slice index '" + text + "' is not an integer");
                       const auto pgm = service.slice_pgm(req.matches[1], k);
                       res.set_content(std::string(pgm.begin(), pgm.end()), "image/x-portable-graymap");
                   }));

        server.Post(R"(/api/jobs/([^/]+)/extract)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto body = parse_body(req);
            double threshold = 0.5;
            if (body.contains("threshold")) {
                if (!body.at("threshold").is_number()) throw ServiceError(422, "threshold must be a number");
                threshold = body.at("threshold").get<double>();
            }
            const auto e = service.extract(req.matches[1], threshold);
            send_json(res, 200, {{"mesh_id", e.mesh_id}, {"voxels_above", e.voxels_above}, {"triangles", e.triangles}});
        }));

        server.Get(R"(/api/meshes/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const std::string format = req.has_param("format") ? req.get_param_value("format") : "stl";
            const auto bytes = service.mesh_bytes(req.matches[1], format);
            const bool obj = format == "obj";
            res.set_header("Content-Disposition",
                           std::string("attachment; filename=\"") + std::string(req.matches[1]) + (obj ? ".obj\"" : ".stl\""));
            res.set_content(std::string(bytes.begin(), bytes.end()), obj ? "text/plain" : "model/stl");
        }));
    }
};

HttpServer::HttpServer(JobService& service) : impl_(std::make_unique<Impl>(service)) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port)
{
    int bound = port;
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(host);
    } else if (!impl_->server.bind_to_port(host, port)) {
        bound = -1;
    }
    if (bound < 0) throw ConfigError("cannot bind " + host + ":" + std::to_string(port));
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return bound;
}

bool HttpServer::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

void HttpServer::stop()
{
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

} // namespace s2s
