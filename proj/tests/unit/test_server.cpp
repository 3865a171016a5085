// Copyright 2026 The geneval Authors
// SPDX-License-Identifier: Apache-2.0

#include "geneval/study/server.hpp"
#include "server_harness.hpp"
#include "temp_dir.hpp"

#include <doctest.h>
#include <fmt/format.h>

#include <filesystem>
#include <fstream>

using namespace geneval;
using namespace geneval::study;
using geneval::testing::RunningServer;
using geneval::testing::TempDir;
using nlohmann::json;

namespace {

StoreOptions no_sync() {
  StoreOptions o;
  o.sync_each_append = false;
  return o;
}

json definition_doc() {
  return {{"study_id", "s1"},
          {"roster",
           {{{"image_id", "a"}, {"image_path", "real/a.png"}, {"true_source", "real"}},
            {{"image_id", "b"}, {"image_path", "db/b.png"}, {"true_source", "DB"}},
            {{"image_id", "c"}, {"image_path", "../outside.png"}, {"true_source", "TI"}}}},
          {"annotators", {"ann", "bob"}},
          {"lease_seconds", 600},
          {"seed", 3}};
}

json body_of(const httplib::Result& r) {
  REQUIRE(r);
  return json::parse(r->body);
}

httplib::Result post(httplib::Client& c, const std::string& path, const json& body) {
  return c.Post(path.c_str(), body.dump(), "application/json");
}

bool mentions(const json& j, const std::string& needle) { return j.dump().find(needle) != std::string::npos; }

}  // namespace

TEST_CASE("study lifecycle over http") {
  TempDir tmp;
  std::filesystem::create_directories(tmp / "images" / "real");
  std::ofstream(tmp / "images" / "real" / "a.png", std::ios::binary) << "PNGDATA";
  std::ofstream(tmp / "outside.png", std::ios::binary) << "SECRET";

  StudyStore store(tmp / "log", no_sync());
  ServerOptions opts;
  opts.image_root = tmp / "images";
  opts.admins = {"root"};
  RunningServer server(store, opts);
  auto c = server.client();

  auto created = post(c, "/studies", definition_doc());
  REQUIRE(created);
  CHECK(created->status == 201);
  CHECK(body_of(created)["study_id"] == "s1");
  CHECK(post(c, "/studies", definition_doc())->status == 409);
  CHECK(c.Post("/studies", "{oops", "application/json")->status == 400);
  auto bad_def = definition_doc();
  bad_def["annotators"] = json::array();
  CHECK(post(c, "/studies", bad_def)->status == 422);
  CHECK(post(c, "/studies", json{{"study_id", "x"}})->status == 422);

  auto next = c.Get("/studies/s1/next?user=ann");
  REQUIRE(next);
  CHECK(next->status == 200);
  const auto task = body_of(next);
  CHECK(task["status"] == "task");
  CHECK(task["progress"]["total"] == 3);
  CHECK(task["image_url"] == image_url("s1", task["image_id"]));
  for (const std::string secret : {"true_source", "image_path", "real/a.png", "db/b.png", "outside", "\"DB\"", "\"TI\""}) {
    CHECK_MESSAGE(!mentions(task, secret), secret);
  }
  const std::string image = task["image_id"];

  CHECK(c.Get("/studies/nope/next?user=ann")->status == 404);
  CHECK(c.Get("/studies/s1/next?user=eve")->status == 404);
  CHECK(c.Get("/studies/s1/next")->status == 422);

  const std::string ann_path = "/studies/s1/annotations";
  CHECK(post(c, ann_path, {{"image_id", image}, {"user_id", "ann"}, {"label", "maybe"}})->status == 422);
  CHECK(post(c, ann_path, {{"image_id", image}, {"user_id", "bob"}, {"label", "real"}})->status == 409);
  CHECK(post(c, ann_path, {{"image_id", "zzz"}, {"user_id", "ann"}, {"label", "real"}})->status == 404);
  CHECK(post(c, ann_path, {{"image_id", image}, {"user_id", "ann"}})->status == 422);
  CHECK(c.Post(ann_path.c_str(), "[1,", "application/json")->status == 400);

  auto stored = post(c, ann_path, {{"image_id", image}, {"user_id", "ann"}, {"label", "fake"}});
  CHECK(stored->status == 201);
  CHECK(body_of(stored)["status"] == "stored");
  auto dup = post(c, ann_path, {{"image_id", image}, {"user_id", "ann"}, {"label", "fake"}});
  CHECK(dup->status == 200);
  CHECK(body_of(dup)["status"] == "duplicate");
  CHECK(post(c, ann_path, {{"image_id", image}, {"user_id", "ann"}, {"label", "real"}})->status == 409);

  auto results = c.Get("/studies/s1/results");
  CHECK(results->status == 200);
  const auto r = body_of(results);
  CHECK(r["total_annotated"] == 1);
  CHECK(r["sources"][0]["source"] == "real");
  CHECK(c.Get("/studies/zz/results")->status == 404);

  CHECK(c.Get("/studies/s1/export")->status == 403);
  CHECK(c.Get("/studies/s1/export?user=ann")->status == 403);
  auto exported = c.Get("/studies/s1/export?user=root");
  REQUIRE(exported);
  CHECK(exported->status == 200);
  CHECK(exported->get_header_value("Content-Type") == "application/x-ndjson");
  std::size_t lines = 0;
  for (char ch : exported->body) lines += ch == '\n' ? 1 : 0;
  CHECK(lines == store.export_log("s1").size());

  auto img = c.Get("/studies/s1/images/a");
  REQUIRE(img);
  CHECK(img->status == 200);
  CHECK(img->body == "PNGDATA");
  CHECK(img->get_header_value("Content-Type") == "image/png");
  CHECK(c.Get("/studies/s1/images/b")->status == 404);  // listed but absent on disk
  auto escape = c.Get("/studies/s1/images/c");
  CHECK(escape->status == 404);
  CHECK(escape->body.find("SECRET") == std::string::npos);
  CHECK(c.Get("/studies/s1/images/..%2F..%2Foutside.png")->status == 404);
  CHECK(c.Get("/studies/s1/images/zzz")->status == 404);
}

TEST_CASE("waiting and exhausted statuses") {
  TempDir tmp;
  StudyStore store(tmp / "log", no_sync());
  RunningServer server(store);
  auto c = server.client();
  auto def = definition_doc();
  def["roster"] = {{{"image_id", "only"}, {"true_source", "real"}}};
  REQUIRE(post(c, "/studies", def)->status == 201);

  const auto first = body_of(c.Get("/studies/s1/next?user=ann"));
  CHECK(first["image_id"] == "only");
  const auto wait = body_of(c.Get("/studies/s1/next?user=bob"));
  CHECK(wait["status"] == "waiting");
  CHECK(wait["retry_after_seconds"] == 600);
  REQUIRE(post(c, "/studies/s1/annotations", {{"image_id", "only"}, {"user_id", "ann"}, {"label", "real"}})->status ==
          201);
  const auto done = body_of(c.Get("/studies/s1/next?user=bob"));
  CHECK(done["status"] == "exhausted");
  CHECK(body_of(c.Get("/studies/s1/next?user=ann"))["user_labeled"] == 1);
}

TEST_CASE("static ui mount") {
  TempDir tmp;
  std::filesystem::create_directories(tmp / "ui");
  std::ofstream(tmp / "ui" / "index.html") << "<html>ui</html>";
  StudyStore store(tmp / "log", no_sync());
  ServerOptions opts;
  opts.ui_dir = tmp / "ui";
  RunningServer server(store, opts);
  auto c = server.client();
  auto page = c.Get("/ui/index.html");
  REQUIRE(page);
  CHECK(page->status == 200);
  CHECK(page->body == "<html>ui</html>");

  RunningServer bare(store);
  auto c2 = bare.client();
  CHECK(c2.Get("/ui/index.html")->status == 404);
}

TEST_CASE("image urls are percent-encoded") {
  CHECK(image_url("s 1", "a/b") == "/studies/s%201/images/a%2Fb");
  NextTask exhausted;
  exhausted.user_labeled = 4;
  CHECK(next_task_to_json(exhausted) == json{{"status", "exhausted"}, {"user_labeled", 4}});
}
