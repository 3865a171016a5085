// Copyright 2026 The geneval Authors
// SPDX-License-Identifier: Apache-2.0

// HTTP+JSON front of StudyStore.
//
//   POST /studies                          create (201)
//   GET  /studies/{id}/next?user=U         lease the next task
//   POST /studies/{id}/annotations         {image_id, user_id, label}
//   GET  /studies/{id}/results             per-source tallies
//   GET  /studies/{id}/export?user=ADMIN   full log as NDJSON
//   GET  /studies/{id}/images/{image_id}   image bytes from the image root
//
// 404 unknown ids, 409 already labeled or lease conflict, 422 invalid label
// or definition, 400 malformed JSON, 403 export by a non-admin.

#pragma once

#include "geneval/study/study.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace httplib {
class Server;
}

namespace geneval::study {

struct ServerOptions {
  std::string host = "127.0.0.1";
  /// 0 binds an ephemeral port.
  int port = 8080;
  std::filesystem::path image_root = ".";
  /// Static annotation UI bundle, mounted at /ui when set.
  std::optional<std::filesystem::path> ui_dir;
  /// User ids allowed to call /export.
  std::vector<std::string> admins;
};

class StudyServer {
 public:
  StudyServer(StudyStore& store, ServerOptions options);
  ~StudyServer();

  StudyServer(const StudyServer&) = delete;
  StudyServer& operator=(const StudyServer&) = delete;

  /// Binds the socket; returns the bound port. Throws IoError on failure.
  int bind();
  /// Serves until stop(); call bind() first.
  void run();
  void stop();

 private:
  void install_routes();

  StudyStore& store_;
  ServerOptions options_;
  std::unique_ptr<httplib::Server> server_;
};

/// Relative URL under which the server exposes an image to annotators.
std::string image_url(const std::string& study_id, const std::string& image_id);

/// Annotator-facing payload of a next-task response. Contains no source or
/// path information.
nlohmann::json next_task_to_json(const NextTask& next);

}  // namespace geneval::study
