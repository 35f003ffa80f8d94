// Copyright 2026 The TerraSeg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli/service.hpp"

#include <cstdlib>

#include <httplib.h>

#include "cli/operations.hpp"
#include "terraseg/error.hpp"

namespace terraseg {

std::size_t resolve_max_body_bytes(std::optional<std::size_t> flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("TERRASEG_MAX_BODY_BYTES")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0' || v == 0) {
      throw Error(ErrorCode::kInvalidArgument,
                  std::string("TERRASEG_MAX_BODY_BYTES is not a positive integer: ") + env);
    }
    return static_cast<std::size_t>(v);
  }
  return kDefaultMaxBodyBytes;
}

namespace {

using ops::ByteView;

constexpr const char* kJson = "application/json";

ByteView view(const std::string& s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

const std::string& part(const httplib::Request& req, const std::string& name) {
  if (!req.is_multipart_form_data()) {
    throw Error(ErrorCode::kInvalidArgument, "expected multipart/form-data");
  }
  const auto it = req.files.find(name);
  if (it == req.files.end()) {
    throw Error(ErrorCode::kMissingField, "missing form part '" + name + "'");
  }
  return it->second.content;
}

nlohmann::json optional_json_part(const httplib::Request& req, const std::string& name) {
  const auto it = req.files.find(name);
  if (it == req.files.end() || it->second.content.empty()) return nullptr;
  return ops::parse_json(it->second.content, name);
}

struct Part {
  std::string name;
  std::string content_type;
  std::string body;
};

void send_multipart(httplib::Response& res, const std::vector<Part>& parts) {
  const std::string boundary = "terraseg-part-boundary";
  std::string body;
  for (const auto& p : parts) {
    body += "--" + boundary + "\r\n";
    body += "Content-Disposition: form-data; name=\"" + p.name + "\"\r\n";
    body += "Content-Type: " + p.content_type + "\r\n\r\n";
    body += p.body + "\r\n";
  }
  body += "--" + boundary + "--\r\n";
  res.set_content(body, "multipart/form-data; boundary=" + boundary);
}

void send_error(httplib::Response& res, int status, ErrorCode code, const std::string& message) {
  res.status = status;
  res.set_content(ops::render(ops::error_json(code, message)), kJson);
}

}  // namespace

struct Service::Impl {
  ClassSchema schema;
  ServiceConfig config;
  httplib::Server server;
  int bound_port = -1;

  Impl(ClassSchema s, ServiceConfig c) : schema(std::move(s)), config(std::move(c)) {}

  // Wraps a handler so every library error becomes a structured 400.
  template <typename F>
  httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const Error& e) {
        send_error(res, 400, e.code(), e.what());
      } catch (const nlohmann::json::exception& e) {
        send_error(res, 400, ErrorCode::kInvalidArgument, e.what());
      } catch (const std::bad_alloc&) {
        send_error(res, 413, ErrorCode::kInvalidArgument, "request too large to process");
      }
    };
  }

  void install() {
    server.set_payload_max_length(config.max_body_bytes);
    const int threads = std::max(1, config.threads);
    server.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
    server.set_exception_handler(
        [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
          try {
            std::rethrow_exception(ep);
          } catch (const std::exception& e) {
            send_error(res, 500, ErrorCode::kInvalidArgument, e.what());
          } catch (...) {
            send_error(res, 500, ErrorCode::kInvalidArgument, "unknown failure");
          }
        });
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.status == 413) {
        send_error(res, 413, ErrorCode::kInvalidArgument, "payload exceeds the configured limit");
      } else if (res.body.empty()) {
        send_error(res, res.status, ErrorCode::kInvalidArgument, httplib::status_message(res.status));
      }
    });

    server.Get("/v1/healthz", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(ops::render({{"status", "ok"}}), kJson);
    });

    server.Post("/v1/metrics", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto acc = ops::accumulate_bytes(view(part(req, "gt")), view(part(req, "pred")), schema);
      res.set_content(ops::render(ops::metrics_json(acc, schema)), kJson);
    }));

    server.Post("/v1/loss", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const LossOptions options = ops::loss_options_from_json(optional_json_part(req, "params"));
      res.set_content(ops::render(ops::loss_json(view(part(req, "logits")), view(part(req, "mask")),
                                                 schema, options)),
                      kJson);
    }));

    server.Post("/v1/crf", guarded([](const httplib::Request& req, httplib::Response& res) {
      const CrfParams params = crf_params_from_json(optional_json_part(req, "params"));
      const Bytes out = ops::crf_tst1(view(part(req, "probs")), view(part(req, "image")), params);
      res.set_content(std::string(out.begin(), out.end()), "application/octet-stream");
    }));

    server.Post("/v1/uncertainty", guarded([](const httplib::Request& req, httplib::Response& res) {
      const auto options = ops::uncertainty_options_from_json(optional_json_part(req, "params"));
      const auto out = ops::uncertainty_outputs(view(part(req, "probs")), options);
      const std::string report = ops::render(out.report);
      if (req.get_param_value("heatmap") == "1") {
        send_multipart(res, {{"report", kJson, report},
                             {"heatmap", "image/png",
                              std::string(out.heatmap_png.begin(), out.heatmap_png.end())}});
      } else {
        res.set_content(report, kJson);
      }
    }));

    server.Post("/v1/costmap", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto request = ops::costmap_request_from_json(optional_json_part(req, "params"));
      const auto out = ops::costmap_outputs(view(part(req, "mask")), schema, request);
      send_multipart(res, {{"sidecar", kJson, ops::render(out.sidecar)},
                           {"costmap", "image/png", std::string(out.png.begin(), out.png.end())}});
    }));

    server.Post("/v1/plan", guarded([](const httplib::Request& req, httplib::Response& res) {
      const auto request = ops::plan_request_from_json(ops::parse_json(part(req, "request"), "request"));
      res.set_content(ops::render(ops::plan_json(view(part(req, "costmap")), request)), kJson);
    }));
  }
};

Service::Service(ClassSchema schema, ServiceConfig config)
    : impl_(std::make_unique<Impl>(std::move(schema), std::move(config))) {
  impl_->install();
}

Service::~Service() { stop(); }

int Service::bind() {
  auto& s = impl_->server;
  if (impl_->config.port == 0) {
    impl_->bound_port = s.bind_to_any_port(impl_->config.host);
  } else if (s.bind_to_port(impl_->config.host, impl_->config.port)) {
    impl_->bound_port = impl_->config.port;
  }
  if (impl_->bound_port < 0) {
    throw Error(ErrorCode::kIo, "cannot bind " + impl_->config.host + ":" +
                                    std::to_string(impl_->config.port));
  }
  return impl_->bound_port;
}

void Service::run() {
  if (!impl_->server.listen_after_bind()) throw Error(ErrorCode::kIo, "listen failed");
}

void Service::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

void Service::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace terraseg
