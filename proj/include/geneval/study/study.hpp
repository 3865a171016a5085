// Copyright 2026 The geneval Authors
// SPDX-License-Identifier: Apache-2.0

// Blind real-vs-fake annotation study. Every image in a roster receives at
// most one label; annotators pull tasks under time-limited leases, and all
// state changes go through an append-only log that is replayed on startup.

#pragma once

#include "geneval/error.hpp"
#include "geneval/study/event_log.hpp"
#include "geneval/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

namespace geneval::study {

enum class Label { real, fake };

std::string_view to_string(Label label);
std::optional<Label> parse_label(std::string_view s);

struct RosterEntry {
  std::string image_id;
  std::string image_path;
  /// "real" or the generating method. Never sent to annotators.
  std::string true_source;
};

struct StudyDefinition {
  std::string study_id;
  std::vector<RosterEntry> roster;
  std::vector<std::string> annotators;
  std::int64_t lease_seconds = 300;
  /// Seeds the serving order.
  std::uint64_t seed = 0;
  /// Maximum labels per annotator; unset means free pull.
  std::optional<std::size_t> quota_per_user;

  ValidationReport validate() const;
};

nlohmann::json to_json(const StudyDefinition& def);
/// Throws StudyError(invalid) for schema problems.
StudyDefinition definition_from_json(const nlohmann::json& j);

struct AnnotationRecord {
  std::string study_id;
  std::string image_id;
  std::string user_id;
  Label label = Label::real;
  std::int64_t submitted_at_ms = 0;
};

struct SourceTally {
  std::string source;
  std::size_t predicted_real = 0;
  std::size_t predicted_fake = 0;
  std::size_t annotated = 0;
  std::size_t missing = 0;
  /// predicted_real / annotated; unset when nothing was annotated.
  std::optional<double> success_rate;

  bool operator==(const SourceTally&) const = default;
};

struct StudyResults {
  /// "real" first, then other sources in roster order.
  std::vector<SourceTally> sources;
  std::size_t total_annotated = 0;

  const SourceTally* find(std::string_view source) const;
  bool operator==(const StudyResults&) const = default;
};

/// Aggregates labels per true source. Unlabeled images count as missing.
StudyResults tally(const StudyDefinition& def, const std::vector<AnnotationRecord>& labels);

/// round-half-up of 100 * real / annotated in exact integer arithmetic.
int success_percent(std::size_t predicted_real, std::size_t annotated);
/// "75%", or U+2014 alone when the rate is undefined.
std::string format_success_rate(const SourceTally& t);

nlohmann::json results_to_json(const StudyResults& r);
std::string render_results_markdown(const StudyResults& r);

class StudyError : public Error {
 public:
  enum class Code { not_found, conflict, invalid, forbidden };

  StudyError(Code code, const std::string& message) : Error(message), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

struct Task {
  std::string study_id;
  std::string image_id;
  std::string user_id;
  std::size_t labeled = 0;
  std::size_t total = 0;
  std::size_t user_labeled = 0;
};

struct NextTask {
  enum class Status { task, exhausted, waiting };
  Status status = Status::exhausted;
  std::optional<Task> task;
  /// For waiting: seconds until the earliest foreign lease expires.
  std::int64_t retry_after_seconds = 0;
  std::size_t user_labeled = 0;
};

enum class SubmitOutcome { stored, duplicate };

/// Unix time in milliseconds.
using Clock = std::function<std::int64_t()>;
std::int64_t system_clock_ms();

struct StoreOptions {
  bool sync_each_append = true;
  /// Replay only; mutations throw and the log file is never modified.
  bool read_only = false;
  Clock clock = system_clock_ms;
};

/// Thread-safe. Mutations hold an exclusive lock across "check, append to
/// log, apply", so lease grants and labels are atomic with respect to each
/// other; reads take a shared lock.
class StudyStore {
 public:
  /// Replays `log_path` if it exists, then appends to it.
  explicit StudyStore(std::filesystem::path log_path, StoreOptions options = {});

  /// Errors: invalid definition, duplicate study_id (conflict).
  std::string create_study(const StudyDefinition& def);

  /// Errors: unknown study or user (not_found).
  NextTask next_task(const std::string& study_id, const std::string& user_id);

  /// Errors: unknown study/image/user (not_found), label outside
  /// {real, fake} (invalid), already labeled or lease held elsewhere
  /// (conflict). A retry with an identical payload returns duplicate.
  SubmitOutcome submit_annotation(const std::string& study_id, const std::string& image_id,
                                  const std::string& user_id, std::string_view label);

  StudyResults compute_results(const std::string& study_id) const;
  std::vector<AnnotationRecord> annotations(const std::string& study_id) const;
  /// Every log record belonging to the study, in log order.
  std::vector<nlohmann::json> export_log(const std::string& study_id) const;
  StudyDefinition definition(const std::string& study_id) const;
  std::optional<std::string> image_path(const std::string& study_id, const std::string& image_id) const;
  std::vector<std::string> study_ids() const;

 private:
  struct Lease {
    std::string user_id;
    std::int64_t expires_at_ms = 0;
  };

  struct StudyState {
    StudyDefinition def;
    std::vector<std::size_t> order;
    std::unordered_map<std::string, std::size_t> index;
    std::vector<std::optional<AnnotationRecord>> labels;
    std::vector<std::optional<Lease>> leases;
    std::size_t labeled = 0;
    std::map<std::string, std::size_t> labeled_by_user;
    std::vector<nlohmann::json> events;
  };

  void commit(nlohmann::json event);
  void apply(const nlohmann::json& event);
  StudyState& state_for(const std::string& study_id);
  const StudyState& state_for(const std::string& study_id) const;
  static bool is_annotator(const StudyState& s, const std::string& user_id);

  StoreOptions options_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, StudyState> studies_;
  std::uint64_t next_seq_ = 1;
  std::unique_ptr<EventLog> log_;
};

}  // namespace geneval::study
