// Copyright 2026 The geneval Authors
// SPDX-License-Identifier: Apache-2.0

#include "geneval/study/server.hpp"

#include "geneval/gemb.hpp"

#include <fmt/format.h>
#include <httplib.h>

#include <algorithm>
#include <cctype>

namespace geneval::study {

namespace {

using json = nlohmann::json;

int status_for(StudyError::Code code) {
  switch (code) {
    case StudyError::Code::not_found: return 404;
    case StudyError::Code::conflict: return 409;
    case StudyError::Code::invalid: return 422;
    case StudyError::Code::forbidden: return 403;
  }
  return 500;
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}});
}

// Runs a handler, translating library exceptions into HTTP errors.
template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const StudyError& e) {
    send_error(res, status_for(e.code()), e.what());
  } catch (const InputError& e) {
    send_error(res, 400, e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, e.what());
  }
}

json parse_body(const httplib::Request& req) {
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded()) throw ValidationError("request body is not valid JSON");
  return body;
}

std::string percent_encode(std::string_view s) {
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out += static_cast<char>(c);
    } else {
      out += fmt::format("%{:02X}", c);
    }
  }
  return out;
}

std::string content_type_for(const std::filesystem::path& p) {
  const std::string ext = normalize_label(p.extension().string());
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".tif" || ext == ".tiff") return "image/tiff";
  if (ext == ".webp") return "image/webp";
  return "application/octet-stream";
}

}  // namespace

std::string image_url(const std::string& study_id, const std::string& image_id) {
  return fmt::format("/studies/{}/images/{}", percent_encode(study_id), percent_encode(image_id));
}

json next_task_to_json(const NextTask& next) {
  switch (next.status) {
    case NextTask::Status::task: {
      const Task& t = *next.task;
      return {{"status", "task"},
              {"study_id", t.study_id},
              {"user_id", t.user_id},
              {"image_id", t.image_id},
              {"image_url", image_url(t.study_id, t.image_id)},
              {"progress", {{"labeled", t.labeled}, {"total", t.total}}},
              {"user_labeled", t.user_labeled}};
    }
    case NextTask::Status::waiting:
      return {{"status", "waiting"}, {"retry_after_seconds", next.retry_after_seconds}, {"user_labeled", next.user_labeled}};
    case NextTask::Status::exhausted:
      break;
  }
  return {{"status", "exhausted"}, {"user_labeled", next.user_labeled}};
}

StudyServer::StudyServer(StudyStore& store, ServerOptions options)
    : store_(store), options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

StudyServer::~StudyServer() { stop(); }

int StudyServer::bind() {
  int port = options_.port;
  if (port == 0) {
    port = server_->bind_to_any_port(options_.host);
  } else if (!server_->bind_to_port(options_.host, port)) {
    port = -1;
  }
  if (port <= 0) throw IoError(fmt::format("cannot bind {}:{}", options_.host, options_.port));
  return port;
}

void StudyServer::run() { server_->listen_after_bind(); }

void StudyServer::stop() {
  if (server_) server_->stop();
}

void StudyServer::install_routes() {
  auto& svr = *server_;

  svr.Post("/studies", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string id = store_.create_study(definition_from_json(parse_body(req)));
      send_json(res, 201, {{"study_id", id}});
    });
  });

  svr.Get(R"(/studies/([^/]+)/next)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      if (!req.has_param("user")) throw StudyError(StudyError::Code::invalid, "missing query parameter 'user'");
      const auto next = store_.next_task(req.matches[1], req.get_param_value("user"));
      send_json(res, 200, next_task_to_json(next));
    });
  });

  svr.Post(R"(/studies/([^/]+)/annotations)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = parse_body(req);
      auto str = [&](const char* key) {
        auto it = body.find(key);
        if (it == body.end() || !it->is_string()) {
          throw StudyError(StudyError::Code::invalid, fmt::format("missing string field '{}'", key));
        }
        return it->get<std::string>();
      };
      const std::string image_id = str("image_id");
      const auto outcome = store_.submit_annotation(req.matches[1], image_id, str("user_id"), str("label"));
      const bool stored = outcome == SubmitOutcome::stored;
      send_json(res, stored ? 201 : 200, {{"status", stored ? "stored" : "duplicate"}, {"image_id", image_id}});
    });
  });

  svr.Get(R"(/studies/([^/]+)/results)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, results_to_json(store_.compute_results(req.matches[1]))); });
  });

  svr.Get(R"(/studies/([^/]+)/export)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string user = req.has_param("user") ? req.get_param_value("user") : "";
      const auto& admins = options_.admins;
      if (user.empty() || std::find(admins.begin(), admins.end(), user) == admins.end()) {
        throw StudyError(StudyError::Code::forbidden, "export requires an admin user");
      }
      std::string body;
      for (const auto& record : store_.export_log(req.matches[1])) body += record.dump() + "\n";
      res.status = 200;
      res.set_content(body, "application/x-ndjson");
    });
  });

  svr.Get(R"(/studies/([^/]+)/images/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto rel = store_.image_path(req.matches[1], req.matches[2]);
      if (!rel) throw StudyError(StudyError::Code::not_found, "unknown image");
      const auto root = std::filesystem::weakly_canonical(options_.image_root);
      const auto file = std::filesystem::weakly_canonical(root / *rel);
      const auto [root_end, _] = std::mismatch(root.begin(), root.end(), file.begin(), file.end());
      if (root_end != root.end() || !std::filesystem::is_regular_file(file)) {
        throw StudyError(StudyError::Code::not_found, "image file not available");
      }
      const auto bytes = read_file_bytes(file);
      res.status = 200;
      res.set_content(std::string(bytes.begin(), bytes.end()), content_type_for(file));
    });
  });

  if (options_.ui_dir) svr.set_mount_point("/ui", options_.ui_dir->string());
}

}  // namespace geneval::study
