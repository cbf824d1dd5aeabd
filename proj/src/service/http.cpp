#include "tabsense/service/http.hpp"

#include <httplib.h>

#include "tabsense/service/wire.hpp"

namespace tabsense::service {

using nlohmann::json;

int HttpStatusFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kFormat: return 400;
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kConflict: return 409;
    case ErrorCode::kPrecondition:
    case ErrorCode::kVersion:
    case ErrorCode::kChecksum:
    case ErrorCode::kFingerprintMismatch:
    case ErrorCode::kDomain: return 422;
    case ErrorCode::kIo:
    case ErrorCode::kInternal: return 500;
  }
  return 500;
}

namespace {

void SendJson(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json ParseBody(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    Fail(ErrorCode::kInvalidArgument, std::string("malformed JSON body: ") + e.what());
  }
}

json QueryObject(const httplib::Request& req) {
  json q = json::object();
  for (const auto& [key, value] : req.params) q[key] = value;
  return q;
}

using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

}  // namespace

struct HttpServer::Impl {
  Workbench& wb;
  httplib::Server server;

  explicit Impl(Workbench& w) : wb(w) { Routes(); }

  // Runs a handler and turns failures into the error payload.
  Handler Wrap(Handler h) {
    return [this, h](const httplib::Request& req, httplib::Response& res) {
      int status = 500;
      json error;
      try {
        h(req, res);
        return;
      } catch (const Error& e) {
        status = HttpStatusFor(e.code());
        error = {{"code", ErrorCodeName(e.code())}, {"message", e.what()}};
      } catch (const json::exception& e) {
        status = 400;
        error = {{"code", "invalid_argument"}, {"message", e.what()}};
      } catch (const std::exception& e) {
        error = {{"code", "internal"}, {"message", e.what()}};
      }
      json body{{"schema_version", kSchemaVersion}, {"error", error}};
      auto sid = req.path_params.find("sid");
      if (sid != req.path_params.end()) {
        try {
          body["revision"] = wb.Revision(sid->second);
        } catch (const Error&) {
        }
      }
      SendJson(res, status, body);
    };
  }

  static const std::string& Param(const httplib::Request& req, const char* name) {
    return req.path_params.at(name);
  }

  void Routes() {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    server.set_payload_max_length(512ull << 20);
    const std::string base = "/api/v1";

    server.Get(base + "/health", Wrap([](const auto&, auto& res) {
                 SendJson(res, 200, {{"schema_version", kSchemaVersion}, {"status", "ok"}});
               }));
    server.Get(base + "/sessions",
               Wrap([this](const auto&, auto& res) { SendJson(res, 200, wb.ListSessions()); }));
    server.Post(base + "/sessions", Wrap([this](const auto& req, auto& res) {
                  SendJson(res, 201, wb.CreateSession(ParseBody(req)));
                }));
    server.Get(base + "/sessions/:sid", Wrap([this](const auto& req, auto& res) {
                 SendJson(res, 200, wb.GetSession(Param(req, "sid")));
               }));
    server.Post(base + "/sessions/:sid/dataset", Wrap([this](const auto& req, auto& res) {
                  json body;
                  const std::string type = req.get_header_value("Content-Type");
                  if (type.rfind("text/csv", 0) == 0) {
                    body = {{"csv", req.body}};
                    if (req.has_param("role")) body["role"] = req.get_param_value("role");
                  } else {
                    body = ParseBody(req);
                  }
                  SendJson(res, 200, wb.UploadDataset(Param(req, "sid"), body));
                }));
    server.Post(base + "/sessions/:sid/configure", Wrap([this](const auto& req, auto& res) {
                  SendJson(res, 200, wb.Configure(Param(req, "sid"), ParseBody(req)));
                }));
    server.Post(base + "/sessions/:sid/models", Wrap([this](const auto& req, auto& res) {
                  SendJson(res, 202, wb.TrainModel(Param(req, "sid"), ParseBody(req)));
                }));
    server.Get(base + "/sessions/:sid/models", Wrap([this](const auto& req, auto& res) {
                 SendJson(res, 200, wb.ListModels(Param(req, "sid")));
               }));
    server.Post(base + "/sessions/:sid/models/upload", Wrap([this](const auto& req, auto& res) {
                  SendJson(res, 201, wb.UploadModel(Param(req, "sid"), req.body));
                }));
    server.Get(base + "/sessions/:sid/models/:mid", Wrap([this](const auto& req, auto& res) {
                 SendJson(res, 200, wb.GetModel(Param(req, "sid"), Param(req, "mid")));
               }));
    server.Get(base + "/sessions/:sid/models/:mid/file", Wrap([this](const auto& req, auto& res) {
                 const std::string sid = Param(req, "sid");
                 const std::string mid = Param(req, "mid");
                 res.set_content(wb.DownloadModel(sid, mid), "application/octet-stream");
                 res.set_header("Content-Disposition", "attachment; filename=\"" + mid + ".model\"");
                 res.set_header("X-Revision", std::to_string(wb.Revision(sid)));
               }));
    server.Post(base + "/sessions/:sid/evaluate", Wrap([this](const auto& req, auto& res) {
                  SendJson(res, 200, wb.Evaluate(Param(req, "sid"), ParseBody(req)));
                }));
    server.Get(base + "/sessions/:sid/evaluation", Wrap([this](const auto& req, auto& res) {
                 SendJson(res, 200, wb.GetEvaluation(Param(req, "sid")));
               }));
    server.Get(base + "/sessions/:sid/plot", Wrap([this](const auto& req, auto& res) {
                 SendJson(res, 200, wb.GetPlot(Param(req, "sid"), QueryObject(req)));
               }));
    server.Get(base + "/sessions/:sid/gsa", Wrap([this](const auto& req, auto& res) {
                 bool pending = false;
                 json body = wb.GetGsa(Param(req, "sid"), &pending);
                 SendJson(res, pending ? 202 : 200, body);
               }));
    server.Post(base + "/sessions/:sid/gsa", Wrap([this](const auto& req, auto& res) {
                  SendJson(res, 202, wb.StartGsa(Param(req, "sid"), ParseBody(req)));
                }));
    server.Post(base + "/sessions/:sid/explain", Wrap([this](const auto& req, auto& res) {
                  json body = wb.Explain(Param(req, "sid"), ParseBody(req));
                  SendJson(res, body.contains("job_id") ? 202 : 200, body);
                }));
    server.Post(base + "/sessions/:sid/balance", Wrap([this](const auto& req, auto& res) {
                  SendJson(res, 200, wb.Balance(Param(req, "sid"), ParseBody(req)));
                }));
    server.Get(base + "/sessions/:sid/correlation", Wrap([this](const auto& req, auto& res) {
                 json body = json::object();
                 if (req.has_param("threshold")) {
                   try {
                     body["threshold"] = std::stod(req.get_param_value("threshold"));
                   } catch (const std::exception&) {
                     Fail(ErrorCode::kInvalidArgument, "threshold must be a number");
                   }
                 }
                 SendJson(res, 200, wb.Correlation(Param(req, "sid"), body));
               }));
    server.Get(base + "/sessions/:sid/jobs/:jid", Wrap([this](const auto& req, auto& res) {
                 SendJson(res, 200, wb.GetJob(Param(req, "jid"), Param(req, "sid")));
               }));
    server.Get(base + "/jobs/:jid", Wrap([this](const auto& req, auto& res) {
                 SendJson(res, 200, wb.GetJob(Param(req, "jid")));
               }));
  }
};

HttpServer::HttpServer(Workbench& workbench) : impl_(std::make_unique<Impl>(workbench)) {}
HttpServer::~HttpServer() { Stop(); }

bool HttpServer::Listen(const std::string& host, int port) { return impl_->server.listen(host, port); }
int HttpServer::BindToAnyPort(const std::string& host) { return impl_->server.bind_to_any_port(host); }
bool HttpServer::ListenAfterBind() { return impl_->server.listen_after_bind(); }
void HttpServer::Stop() {
  if (impl_) impl_->server.stop();
}
void HttpServer::WaitUntilReady() const { impl_->server.wait_until_ready(); }

}  // namespace tabsense::service
