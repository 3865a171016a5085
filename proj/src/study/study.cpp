// Copyright 2026 The geneval Authors
// SPDX-License-Identifier: Apache-2.0

#include "geneval/study/study.hpp"

#include "geneval/random.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <mutex>
#include <unordered_set>

namespace geneval::study {

namespace {

using json = nlohmann::json;

StudyError not_found(const std::string& what) { return StudyError(StudyError::Code::not_found, what); }
StudyError conflict(const std::string& what) { return StudyError(StudyError::Code::conflict, what); }
StudyError invalid(const std::string& what) { return StudyError(StudyError::Code::invalid, what); }

template <typename T>
T field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw invalid(fmt::format("missing field '{}'", key));
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw invalid(fmt::format("field '{}' has the wrong type", key));
  }
}

}  // namespace

std::string_view to_string(Label label) { return label == Label::real ? "real" : "fake"; }

std::optional<Label> parse_label(std::string_view s) {
  if (s == "real") return Label::real;
  if (s == "fake") return Label::fake;
  return std::nullopt;
}

ValidationReport StudyDefinition::validate() const {
  ValidationReport report;
  if (study_id.empty()) report.violations.emplace_back("study_id is empty");
  if (roster.empty()) report.violations.emplace_back("roster is empty");
  if (annotators.empty()) report.violations.emplace_back("annotator list is empty");
  if (lease_seconds <= 0) report.violations.push_back(fmt::format("lease_seconds must be positive, got {}", lease_seconds));
  if (quota_per_user && *quota_per_user == 0) report.violations.emplace_back("quota_per_user must be positive");
  std::unordered_set<std::string> ids;
  for (const auto& e : roster) {
    if (e.image_id.empty()) report.violations.emplace_back("roster entry with empty image_id");
    if (e.true_source.empty()) report.violations.push_back(fmt::format("image '{}' has an empty true_source", e.image_id));
    if (!ids.insert(e.image_id).second) report.violations.push_back(fmt::format("duplicate image_id '{}'", e.image_id));
  }
  std::unordered_set<std::string> users;
  for (const auto& u : annotators) {
    if (u.empty()) report.violations.emplace_back("empty annotator id");
    if (!users.insert(u).second) report.violations.push_back(fmt::format("duplicate annotator '{}'", u));
  }
  return report;
}

json to_json(const StudyDefinition& def) {
  json roster = json::array();
  for (const auto& e : def.roster) {
    roster.push_back({{"image_id", e.image_id}, {"image_path", e.image_path}, {"true_source", e.true_source}});
  }
  json j = {{"study_id", def.study_id},
            {"roster", std::move(roster)},
            {"annotators", def.annotators},
            {"lease_seconds", def.lease_seconds},
            {"seed", def.seed}};
  j["quota_per_user"] = def.quota_per_user ? json(*def.quota_per_user) : json(nullptr);
  return j;
}

StudyDefinition definition_from_json(const json& j) {
  if (!j.is_object()) throw invalid("study definition must be a JSON object");
  StudyDefinition def;
  def.study_id = field<std::string>(j, "study_id");
  const auto roster = field<json>(j, "roster");
  if (!roster.is_array()) throw invalid("field 'roster' must be an array");
  for (const auto& e : roster) {
    if (!e.is_object()) throw invalid("roster entries must be objects");
    def.roster.push_back({field<std::string>(e, "image_id"), e.value("image_path", std::string()),
                          field<std::string>(e, "true_source")});
  }
  def.annotators = field<std::vector<std::string>>(j, "annotators");
  if (j.contains("lease_seconds")) def.lease_seconds = field<std::int64_t>(j, "lease_seconds");
  if (j.contains("seed")) def.seed = field<std::uint64_t>(j, "seed");
  if (j.contains("quota_per_user") && !j["quota_per_user"].is_null()) {
    def.quota_per_user = field<std::size_t>(j, "quota_per_user");
  }
  return def;
}

const SourceTally* StudyResults::find(std::string_view source) const {
  for (const auto& s : sources) {
    if (labels_equal(s.source, source)) return &s;
  }
  return nullptr;
}

StudyResults tally(const StudyDefinition& def, const std::vector<AnnotationRecord>& labels) {
  StudyResults out;
  std::unordered_map<std::string, std::size_t> slot;
  auto slot_of = [&](const std::string& source) -> SourceTally& {
    const auto key = normalize_label(source);
    auto it = slot.find(key);
    if (it == slot.end()) {
      it = slot.emplace(key, out.sources.size()).first;
      SourceTally fresh;
      fresh.source = source;
      out.sources.push_back(std::move(fresh));
    }
    return out.sources[it->second];
  };
  for (const auto& e : def.roster) {
    if (is_real_label(e.true_source)) slot_of(e.true_source);
  }
  std::unordered_map<std::string, const RosterEntry*> by_id;
  for (const auto& e : def.roster) {
    slot_of(e.true_source).missing += 1;
    by_id.emplace(e.image_id, &e);
  }
  for (const auto& rec : labels) {
    auto it = by_id.find(rec.image_id);
    if (it == by_id.end()) continue;
    SourceTally& t = slot_of(it->second->true_source);
    (rec.label == Label::real ? t.predicted_real : t.predicted_fake) += 1;
    t.annotated += 1;
    t.missing -= 1;
    out.total_annotated += 1;
  }
  for (auto& t : out.sources) {
    if (t.annotated > 0) t.success_rate = static_cast<double>(t.predicted_real) / static_cast<double>(t.annotated);
  }
  return out;
}

int success_percent(std::size_t predicted_real, std::size_t annotated) {
  // floor(100 r / a + 1/2) == floor((200 r + a) / (2 a))
  return static_cast<int>((200 * predicted_real + annotated) / (2 * annotated));
}

std::string format_success_rate(const SourceTally& t) {
  if (t.annotated == 0) return "—";
  return fmt::format("{}%", success_percent(t.predicted_real, t.annotated));
}

json results_to_json(const StudyResults& r) {
  json sources = json::array();
  for (const auto& t : r.sources) {
    json s = {{"source", t.source},
              {"predicted_real", t.predicted_real},
              {"predicted_fake", t.predicted_fake},
              {"annotated", t.annotated},
              {"missing", t.missing},
              {"success_rate_display", format_success_rate(t)}};
    s["success_rate"] = t.success_rate ? json(*t.success_rate) : json(nullptr);
    sources.push_back(std::move(s));
  }
  return {{"sources", std::move(sources)}, {"total_annotated", r.total_annotated}};
}

std::string render_results_markdown(const StudyResults& r) {
  std::string out = "| Method |";
  std::string rule = "|:---|";
  for (const auto& t : r.sources) {
    out += fmt::format(" {} |", t.source);
    rule += ":---:|";
  }
  out += "\n" + rule + "\n";
  auto row = [&](std::string_view name, auto&& cell) {
    out += fmt::format("| {} |", name);
    for (const auto& t : r.sources) out += fmt::format(" {} |", cell(t));
    out += '\n';
  };
  row("Predicted as \"Real\"", [](const SourceTally& t) { return fmt::format("{}", t.predicted_real); });
  row("Predicted as \"Fake\"", [](const SourceTally& t) { return fmt::format("{}", t.predicted_fake); });
  row("Missing", [](const SourceTally& t) { return fmt::format("{}", t.missing); });
  row("Success Rate", [](const SourceTally& t) { return format_success_rate(t); });
  out += fmt::format("\nTotal annotated: {}\n", r.total_annotated);
  return out;
}

std::int64_t system_clock_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

StudyStore::StudyStore(std::filesystem::path log_path, StoreOptions options) : options_(std::move(options)) {
  for (const auto& record : EventLog::read_all(log_path)) {
    try {
      apply(record);
    } catch (const StudyError& e) {
      throw FormatError(fmt::format("{}: inconsistent record {}: {}", log_path.string(), record.dump(), e.what()));
    } catch (const json::exception& e) {
      throw FormatError(fmt::format("{}: malformed record {}: {}", log_path.string(), record.dump(), e.what()));
    }
    next_seq_ = std::max(next_seq_, record.value("seq", std::uint64_t{0}) + 1);
  }
  if (!options_.read_only) log_ = std::make_unique<EventLog>(std::move(log_path), options_.sync_each_append);
}

StudyStore::StudyState& StudyStore::state_for(const std::string& study_id) {
  auto it = studies_.find(study_id);
  if (it == studies_.end()) throw not_found(fmt::format("unknown study '{}'", study_id));
  return it->second;
}

const StudyStore::StudyState& StudyStore::state_for(const std::string& study_id) const {
  auto it = studies_.find(study_id);
  if (it == studies_.end()) throw not_found(fmt::format("unknown study '{}'", study_id));
  return it->second;
}

bool StudyStore::is_annotator(const StudyState& s, const std::string& user_id) {
  return std::find(s.def.annotators.begin(), s.def.annotators.end(), user_id) != s.def.annotators.end();
}

void StudyStore::commit(json event) {
  if (!log_) throw StudyError(StudyError::Code::forbidden, "study store is read-only");
  event["seq"] = next_seq_;
  event["at"] = options_.clock();
  log_->append(event);
  ++next_seq_;
  apply(event);
}

void StudyStore::apply(const json& event) {
  const auto type = event.at("type").get<std::string>();
  if (type == "study_created") {
    StudyDefinition def = definition_from_json(event.at("definition"));
    if (studies_.count(def.study_id)) throw conflict(fmt::format("study '{}' already exists", def.study_id));
    StudyState s;
    const auto n = def.roster.size();
    Rng rng(def.seed);
    for (auto i : rng.permutation(static_cast<std::int64_t>(n))) s.order.push_back(static_cast<std::size_t>(i));
    for (std::size_t i = 0; i < n; ++i) s.index.emplace(def.roster[i].image_id, i);
    s.labels.resize(n);
    s.leases.resize(n);
    s.def = std::move(def);
    s.events.push_back(event);
    const std::string id = s.def.study_id;
    studies_.emplace(id, std::move(s));
    return;
  }

  StudyState& s = state_for(event.at("study_id").get<std::string>());
  const auto image_id = event.at("image_id").get<std::string>();
  auto it = s.index.find(image_id);
  if (it == s.index.end()) throw not_found(fmt::format("unknown image '{}'", image_id));
  const std::size_t i = it->second;
  const auto user_id = event.at("user_id").get<std::string>();

  if (type == "lease_granted") {
    if (s.labels[i]) throw conflict(fmt::format("image '{}' already labeled", image_id));
    s.leases[i] = Lease{user_id, event.at("expires_at").get<std::int64_t>()};
  } else if (type == "annotation") {
    if (s.labels[i]) throw conflict(fmt::format("image '{}' already labeled", image_id));
    const auto label = parse_label(event.at("label").get<std::string>());
    if (!label) throw invalid("bad label in log");
    s.labels[i] = AnnotationRecord{s.def.study_id, image_id, user_id, *label, event.at("at").get<std::int64_t>()};
    s.leases[i].reset();
    s.labeled += 1;
    s.labeled_by_user[user_id] += 1;
  } else {
    throw invalid(fmt::format("unknown record type '{}'", type));
  }
  s.events.push_back(event);
}

std::string StudyStore::create_study(const StudyDefinition& def) {
  const auto report = def.validate();
  if (!report.ok()) throw invalid("invalid study definition: " + report.summary());
  std::unique_lock lock(mutex_);
  if (studies_.count(def.study_id)) throw conflict(fmt::format("study '{}' already exists", def.study_id));
  commit({{"type", "study_created"}, {"definition", to_json(def)}});
  return def.study_id;
}

NextTask StudyStore::next_task(const std::string& study_id, const std::string& user_id) {
  std::unique_lock lock(mutex_);
  StudyState& s = state_for(study_id);
  if (!is_annotator(s, user_id)) throw not_found(fmt::format("unknown user '{}' for study '{}'", user_id, study_id));
  const std::int64_t now = options_.clock();
  const std::size_t user_labeled = s.labeled_by_user.count(user_id) ? s.labeled_by_user.at(user_id) : 0;

  NextTask out;
  out.user_labeled = user_labeled;
  auto make_task = [&](std::size_t i) {
    out.status = NextTask::Status::task;
    out.task = Task{study_id, s.def.roster[i].image_id, user_id, s.labeled, s.def.roster.size(), user_labeled};
    return out;
  };

  if (s.labeled == s.def.roster.size()) return out;
  if (s.def.quota_per_user && user_labeled >= *s.def.quota_per_user) return out;

  // An unexpired lease already held by this user is served again.
  for (std::size_t i : s.order) {
    const auto& lease = s.leases[i];
    if (!s.labels[i] && lease && lease->user_id == user_id && lease->expires_at_ms > now) return make_task(i);
  }

  std::optional<std::int64_t> earliest_expiry;
  for (std::size_t i : s.order) {
    if (s.labels[i]) continue;
    const auto& lease = s.leases[i];
    if (lease && lease->expires_at_ms > now) {
      earliest_expiry = std::min(earliest_expiry.value_or(lease->expires_at_ms), lease->expires_at_ms);
      continue;
    }
    commit({{"type", "lease_granted"},
            {"study_id", study_id},
            {"image_id", s.def.roster[i].image_id},
            {"user_id", user_id},
            {"expires_at", now + s.def.lease_seconds * 1000}});
    return make_task(i);
  }
  out.status = NextTask::Status::waiting;
  out.retry_after_seconds = std::max<std::int64_t>(1, (earliest_expiry.value_or(now) - now + 999) / 1000);
  return out;
}

SubmitOutcome StudyStore::submit_annotation(const std::string& study_id, const std::string& image_id,
                                            const std::string& user_id, std::string_view label) {
  std::unique_lock lock(mutex_);
  StudyState& s = state_for(study_id);
  auto it = s.index.find(image_id);
  if (it == s.index.end()) throw not_found(fmt::format("unknown image '{}' in study '{}'", image_id, study_id));
  if (!is_annotator(s, user_id)) throw not_found(fmt::format("unknown user '{}' for study '{}'", user_id, study_id));
  const auto parsed = parse_label(label);
  if (!parsed) throw invalid(fmt::format("invalid label '{}' (expected real or fake)", label));
  const std::size_t i = it->second;

  if (const auto& existing = s.labels[i]) {
    if (existing->user_id == user_id && existing->label == *parsed) return SubmitOutcome::duplicate;
    throw conflict(fmt::format("image '{}' already labeled", image_id));
  }
  const auto& lease = s.leases[i];
  const std::int64_t now = options_.clock();
  if (!lease) throw conflict(fmt::format("image '{}' is not leased to '{}'", image_id, user_id));
  if (lease->user_id != user_id) {
    if (lease->expires_at_ms > now) throw conflict(fmt::format("image '{}' is leased to another user", image_id));
    throw conflict(fmt::format("image '{}' is not leased to '{}'", image_id, user_id));
  }
  commit({{"type", "annotation"},
          {"study_id", study_id},
          {"image_id", image_id},
          {"user_id", user_id},
          {"label", std::string(to_string(*parsed))}});
  return SubmitOutcome::stored;
}

std::vector<AnnotationRecord> StudyStore::annotations(const std::string& study_id) const {
  std::shared_lock lock(mutex_);
  const StudyState& s = state_for(study_id);
  std::vector<AnnotationRecord> out;
  for (const auto& l : s.labels) {
    if (l) out.push_back(*l);
  }
  return out;
}

StudyResults StudyStore::compute_results(const std::string& study_id) const {
  std::shared_lock lock(mutex_);
  const StudyState& s = state_for(study_id);
  std::vector<AnnotationRecord> labels;
  for (const auto& l : s.labels) {
    if (l) labels.push_back(*l);
  }
  return tally(s.def, labels);
}

std::vector<json> StudyStore::export_log(const std::string& study_id) const {
  std::shared_lock lock(mutex_);
  return state_for(study_id).events;
}

StudyDefinition StudyStore::definition(const std::string& study_id) const {
  std::shared_lock lock(mutex_);
  return state_for(study_id).def;
}

std::optional<std::string> StudyStore::image_path(const std::string& study_id, const std::string& image_id) const {
  std::shared_lock lock(mutex_);
  const StudyState& s = state_for(study_id);
  auto it = s.index.find(image_id);
  if (it == s.index.end()) return std::nullopt;
  return s.def.roster[it->second].image_path;
}

std::vector<std::string> StudyStore::study_ids() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, _] : studies_) ids.push_back(id);
  return ids;
}

}  // namespace geneval::study
