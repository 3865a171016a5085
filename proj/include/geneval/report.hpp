// Copyright 2026 The geneval Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "geneval/types.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace geneval {

/// One report row.
struct ModelResults {
  std::string model;
  /// Reference rows (e.g. real data) are shown but never marked best.
  bool reference = false;
  std::vector<MetricResult> results;
};

enum class ReportFormat { markdown, csv, json };

ReportFormat parse_report_format(std::string_view s);

/// "4.06 ± 0.42", or "139.65" without a dispersion. Two decimals, C locale.
std::string format_value(const MetricResult& r);

/// Placeholder for a metric a model does not have.
inline constexpr std::string_view kMissingCell = "---";

/// One row per model, one column per metric present anywhere (canonical
/// order) with direction markers. Best value per column is bolded in
/// markdown and flagged in csv/json.
std::string render_report(const std::vector<ModelResults>& models, ReportFormat format);

nlohmann::json metric_result_to_json(const MetricResult& r);
MetricResult metric_result_from_json(const nlohmann::json& j);

}  // namespace geneval
