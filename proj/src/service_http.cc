// Copyright 2026 The stb Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "httplib.h"
#include "stb/error.h"
#include "stb/service.h"

namespace stb::service {
namespace {

using nlohmann::json;

std::string BearerToken(const httplib::Request& req) {
  const std::string auth = req.get_header_value("Authorization");
  constexpr std::string_view kPrefix = "Bearer ";
  if (auth.size() > kPrefix.size() && auth.compare(0, kPrefix.size(), kPrefix) == 0) {
    return auth.substr(kPrefix.size());
  }
  return "";
}

void Reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

int StatusFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDuplicate: return 409;
    case ErrorKind::kUnassignedWorker: return 403;
    case ErrorKind::kStorage: return 500;
    case ErrorKind::kNotFound: return 404;
    default: return 400;
  }
}

void ReplyError(httplib::Response& res, const Error& e) {
  Reply(res, StatusFor(e.kind()),
        {{"error", ErrorKindName(e.kind())}, {"message", e.what()}});
}

}  // namespace

struct HttpServer::Impl {
  AnnotationService& service;
  httplib::Server server;

  explicit Impl(AnnotationService& s) : service(s) {
    server.Get("/api/batch/next", [this](const httplib::Request& req,
                                         httplib::Response& res) {
      try {
        std::string token = BearerToken(req);
        std::optional<std::string> worker;
        if (token.empty()) {
          token = service.IssueToken();
          worker = service.WorkerOf(token);
        } else {
          worker = service.WorkerOf(token);
          if (!worker) {
            Reply(res, 401, {{"error", "unauthorized"}, {"message", "unknown token"}});
            return;
          }
        }
        json body = {{"token", token}, {"worker_id", *worker}, {"batch", nullptr}};
        if (const auto batch = service.NextBatch(*worker)) {
          body["batch"] = RenderBatch(service.plan(), *batch,
                                      service.DoneItems(*worker, *batch));
        }
        Reply(res, 200, body);
      } catch (const Error& e) {
        ReplyError(res, e);
      }
    });

    server.Post("/api/annotation", [this](const httplib::Request& req,
                                          httplib::Response& res) {
      const auto worker = service.WorkerOf(BearerToken(req));
      if (!worker) {
        Reply(res, 401, {{"error", "unauthorized"}, {"message", "missing or unknown token"}});
        return;
      }
      try {
        json body = json::parse(req.body);
        if (!body.is_object()) throw Error(ErrorKind::kParse, "body must be an object");
        // Identity comes from the token, never from the payload.
        body["worker_id"] = *worker;
        const auto record = annotation::RecordFromJson(body);
        const uint64_t offset = service.Submit(record);
        Reply(res, 200, {{"status", "accepted"}, {"offset", offset}});
      } catch (const json::exception& e) {
        Reply(res, 400, {{"error", "parse"}, {"message", e.what()}});
      } catch (const Error& e) {
        ReplyError(res, e);
      }
    });

    server.Get("/api/progress", [this](const httplib::Request&, httplib::Response& res) {
      Reply(res, 200, service.GetProgress().ToJson());
    });

    server.Get("/api/export", [this](const httplib::Request& req, httplib::Response& res) {
      if (!service.IsAdmin(BearerToken(req))) {
        Reply(res, 403, {{"error", "forbidden"}, {"message", "admin token required"}});
        return;
      }
      try {
        res.status = 200;
        res.set_content(service.ExportLog(), "application/x-ndjson");
      } catch (const Error& e) {
        ReplyError(res, e);
      }
    });
  }
};

HttpServer::HttpServer(AnnotationService& service)
    : impl_(std::make_unique<Impl>(service)) {}

HttpServer::~HttpServer() { Stop(); }

bool HttpServer::Listen(const std::string& host, int port) {
  return impl_->server.listen(host, port);
}

int HttpServer::Start(const std::string& host) {
  const int port = impl_->server.bind_to_any_port(host);
  if (port <= 0) throw Error(ErrorKind::kStorage, "cannot bind " + host);
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port;
}

void HttpServer::Stop() {
  impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace stb::service
