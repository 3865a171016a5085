// Copyright 2026 The geneval Authors
// SPDX-License-Identifier: Apache-2.0

#include "geneval/report.hpp"

#include "geneval/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <optional>

namespace geneval {

namespace {

std::string fixed2(double v) {
  std::string s = fmt::format("{:.2f}", v);
  if (s == "-0.00") s = "0.00";
  return s;
}

std::string_view arrow(Better b) { return b == Better::higher ? "↑" : "↓"; }

const MetricResult* find(const ModelResults& m, MetricName metric) {
  for (const auto& r : m.results) {
    if (r.metric == metric) return &r;
  }
  return nullptr;
}

struct Layout {
  std::vector<MetricName> columns;
  // best[row][col]
  std::vector<std::vector<bool>> best;
};

Layout layout(const std::vector<ModelResults>& models) {
  Layout out;
  for (MetricName m : kAllMetrics) {
    for (const auto& model : models) {
      if (find(model, m)) {
        out.columns.push_back(m);
        break;
      }
    }
  }
  out.best.assign(models.size(), std::vector<bool>(out.columns.size(), false));
  for (std::size_t c = 0; c < out.columns.size(); ++c) {
    const MetricName metric = out.columns[c];
    std::optional<double> best;
    for (const auto& model : models) {
      const auto* r = model.reference ? nullptr : find(model, metric);
      if (!r) continue;
      if (!best || (better_direction(metric) == Better::higher ? r->value > *best : r->value < *best)) best = r->value;
    }
    if (!best) continue;
    for (std::size_t row = 0; row < models.size(); ++row) {
      const auto* r = models[row].reference ? nullptr : find(models[row], metric);
      out.best[row][c] = r && r->value == *best;
    }
  }
  return out;
}

std::string header_label(MetricName m) { return fmt::format("{} {}", display_name(m), arrow(better_direction(m))); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string render_markdown(const std::vector<ModelResults>& models, const Layout& l) {
  std::string out = "| Model/Data |";
  for (MetricName m : l.columns) out += fmt::format(" {} |", header_label(m));
  out += "\n|:---|";
  for (std::size_t c = 0; c < l.columns.size(); ++c) out += "---:|";
  out += '\n';
  for (std::size_t row = 0; row < models.size(); ++row) {
    out += fmt::format("| {} |", models[row].model);
    for (std::size_t c = 0; c < l.columns.size(); ++c) {
      const auto* r = find(models[row], l.columns[c]);
      if (!r) {
        out += fmt::format(" {} |", kMissingCell);
      } else if (l.best[row][c]) {
        out += fmt::format(" **{}** |", format_value(*r));
      } else {
        out += fmt::format(" {} |", format_value(*r));
      }
    }
    out += '\n';
  }
  return out;
}

std::string render_csv(const std::vector<ModelResults>& models, const Layout& l) {
  std::string out = "model";
  for (MetricName m : l.columns) out += "," + csv_field(header_label(m));
  out += ",best\n";
  for (std::size_t row = 0; row < models.size(); ++row) {
    out += csv_field(models[row].model);
    std::vector<std::string_view> best;
    for (std::size_t c = 0; c < l.columns.size(); ++c) {
      const auto* r = find(models[row], l.columns[c]);
      out += "," + csv_field(r ? format_value(*r) : std::string(kMissingCell));
      if (l.best[row][c]) best.push_back(to_string(l.columns[c]));
    }
    out += fmt::format(",{}\n", fmt::join(best, ";"));
  }
  return out;
}

std::string render_json(const std::vector<ModelResults>& models, const Layout& l) {
  nlohmann::json columns = nlohmann::json::array();
  for (MetricName m : l.columns) {
    columns.push_back({{"metric", std::string(to_string(m))},
                       {"label", std::string(display_name(m))},
                       {"better", std::string(to_string(better_direction(m)))},
                       {"arrow", std::string(arrow(better_direction(m)))}});
  }
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t row = 0; row < models.size(); ++row) {
    nlohmann::json cells = nlohmann::json::object();
    for (std::size_t c = 0; c < l.columns.size(); ++c) {
      const auto key = std::string(to_string(l.columns[c]));
      const auto* r = find(models[row], l.columns[c]);
      if (!r) {
        cells[key] = {{"missing", true}, {"display", std::string(kMissingCell)}};
        continue;
      }
      nlohmann::json cell = metric_result_to_json(*r);
      cell["display"] = format_value(*r);
      cell["best"] = static_cast<bool>(l.best[row][c]);
      cells[key] = std::move(cell);
    }
    rows.push_back({{"model", models[row].model}, {"reference", models[row].reference}, {"cells", std::move(cells)}});
  }
  return nlohmann::json{{"columns", std::move(columns)}, {"rows", std::move(rows)}}.dump(2) + "\n";
}

}  // namespace

ReportFormat parse_report_format(std::string_view s) {
  if (labels_equal(s, "markdown") || labels_equal(s, "md")) return ReportFormat::markdown;
  if (labels_equal(s, "csv")) return ReportFormat::csv;
  if (labels_equal(s, "json")) return ReportFormat::json;
  throw ValidationError(fmt::format("unknown report format '{}' (expected markdown, csv or json)", s));
}

std::string format_value(const MetricResult& r) {
  if (r.dispersion) return fmt::format("{} ± {}", fixed2(r.value), fixed2(*r.dispersion));
  return fixed2(r.value);
}

std::string render_report(const std::vector<ModelResults>& models, ReportFormat format) {
  const Layout l = layout(models);
  switch (format) {
    case ReportFormat::markdown: return render_markdown(models, l);
    case ReportFormat::csv: return render_csv(models, l);
    case ReportFormat::json: return render_json(models, l);
  }
  return {};
}

nlohmann::json metric_result_to_json(const MetricResult& r) {
  nlohmann::json j = {{"metric", std::string(to_string(r.metric))},
                      {"value", r.value},
                      {"better", std::string(to_string(r.better))},
                      {"n_gen", r.n_gen},
                      {"backbone_id", r.backbone_id}};
  j["dispersion"] = r.dispersion ? nlohmann::json(*r.dispersion) : nlohmann::json(nullptr);
  j["n_real"] = r.n_real ? nlohmann::json(*r.n_real) : nlohmann::json(nullptr);
  j["seed"] = r.seed ? nlohmann::json(*r.seed) : nlohmann::json(nullptr);
  return j;
}

MetricResult metric_result_from_json(const nlohmann::json& j) {
  try {
    MetricResult r = make_result(parse_metric_name(j.at("metric").get<std::string>()), j.at("value").get<double>(),
                                 std::nullopt, std::nullopt, j.value("n_gen", Index{0}), j.value("backbone_id", ""));
    if (j.contains("dispersion") && !j["dispersion"].is_null()) r.dispersion = j["dispersion"].get<double>();
    if (j.contains("n_real") && !j["n_real"].is_null()) r.n_real = j["n_real"].get<Index>();
    if (j.contains("seed") && !j["seed"].is_null()) r.seed = j["seed"].get<std::uint64_t>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(fmt::format("malformed metric result: {}", e.what()));
  }
}

}  // namespace geneval
