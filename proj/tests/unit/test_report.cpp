// Copyright 2026 The geneval Authors
// SPDX-License-Identifier: Apache-2.0

#include "geneval/error.hpp"
#include "geneval/report.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <clocale>
#include <sstream>

using namespace geneval;

namespace {

MetricResult is(MetricName m, double v, std::optional<double> sd = std::nullopt) {
  return make_result(m, v, sd, std::nullopt, 202, m == MetricName::IS ? "base-classifier" : "domain-finetuned");
}

// Small-sample block of the per-site IS comparison.
std::vector<ModelResults> table1() {
  return {
      {"Real train images", true, {is(MetricName::IS, 3.12, 0.44), is(MetricName::IS_star, 3.80, 0.43)}},
      {"DB Neckar", false, {is(MetricName::IS, 2.84, 0.38), is(MetricName::IS_star, 2.13, 0.21)}},
      {"TI Neckar", false, {is(MetricName::IS, 4.06, 0.42), is(MetricName::IS_star, 3.52, 0.93)}},
      {"DB All", false, {is(MetricName::IS, 2.30, 0.26), is(MetricName::IS_star, 2.49, 0.28)}},
      {"TI All", false, {is(MetricName::IS, 3.36, 0.36), is(MetricName::IS_star, 4.26, 0.66)}},
      {"Van. SDiff", false, {is(MetricName::IS, 2.99, 0.32), is(MetricName::IS_star, 3.25, 0.59)}},
  };
}

MetricResult full(MetricName m, double v, std::optional<double> sd = std::nullopt) {
  return make_result(m, v, sd, 420, 420, "base-classifier");
}

// The full UCM comparison.
std::vector<ModelResults> table2() {
  using M = MetricName;
  auto row = [](std::string name, double is_v, double is_sd, double iss, double iss_sd, double fid, double fids,
                double fcd, double kid_v, double kid_sd, double p, double r) {
    return ModelResults{std::move(name), false,
                        {full(M::IS, is_v, is_sd), full(M::IS_star, iss, iss_sd), full(M::FID, fid),
                         full(M::FID_star, fids), full(M::FCD, fcd), full(M::KID, kid_v, kid_sd),
                         full(M::Precision, p), full(M::Recall, r)}};
  };
  return {
      {"UCM Val+Test", true, {full(M::IS, 5.85, 0.68), full(M::IS_star, 13.78, 1.30)}},
      row("Text2Img", 6.86, 0.80, 13.01, 0.85, 139.65, 23.32, 12.62, 0.01, 0.02, 0.56, 0.38),
      row("DB", 5.99, 0.44, 10.40, 0.71, 171.69, 35.67, 15.99, 0.01, 0.02, 0.34, 0.27),
      row("TI", 6.08, 0.73, 8.10, 0.70, 177.61, 22.13, 16.75, 0.02, 0.02, 0.33, 0.17),
      row("SDiff", 7.55, 1.23, 7.27, 0.71, 207.41, 65.55, 41.15, 0.05, 0.02, 0.02, 0.48),
  };
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("format_value renders two decimals and a plus-minus dispersion") {
  CHECK(format_value(is(MetricName::IS, 4.06, 0.42)) == "4.06 ± 0.42");
  CHECK(format_value(full(MetricName::FID, 139.65)) == "139.65");
  CHECK(format_value(full(MetricName::KID, -0.001, 0.02)) == "0.00 ± 0.02");
  CHECK(format_value(full(MetricName::Recall, 0.375)) == "0.38");
}

TEST_CASE("markdown: per-site IS fixture") {
  const auto doc = render_report(table1(), ReportFormat::markdown);
  const auto l = lines(doc);
  REQUIRE(l.size() >= 8);
  CHECK(l[0] == "| Model/Data | IS ↑ | IS* ↑ |");
  CHECK(l[2] == "| Real train images | 3.12 ± 0.44 | 3.80 ± 0.43 |");
  CHECK(l[4] == "| TI Neckar | **4.06 ± 0.42** | 3.52 ± 0.93 |");
  CHECK(l[6] == "| TI All | 3.36 ± 0.36 | **4.26 ± 0.66** |");
}

TEST_CASE("markdown: UCM comparison fixture flags the best generated value per column") {
  const auto l = lines(render_report(table2(), ReportFormat::markdown));
  CHECK(l[0] == "| Model/Data | IS ↑ | IS* ↑ | FID ↓ | FID* ↓ | FCD ↓ | KID ↓ | Precision ↑ | Recall ↑ |");
  CHECK(l[2] == "| UCM Val+Test | 5.85 ± 0.68 | 13.78 ± 1.30 | --- | --- | --- | --- | --- | --- |");
  CHECK(l[3] ==
        "| Text2Img | 6.86 ± 0.80 | **13.01 ± 0.85** | **139.65** | 23.32 | **12.62** | **0.01 ± 0.02** | **0.56** | 0.38 |");
  // Rounded fixture values tie on KID; exact ties are all flagged.
  CHECK(l[4] == "| DB | 5.99 ± 0.44 | 10.40 ± 0.71 | 171.69 | 35.67 | 15.99 | **0.01 ± 0.02** | 0.34 | 0.27 |");
  CHECK(l[5] == "| TI | 6.08 ± 0.73 | 8.10 ± 0.70 | 177.61 | **22.13** | 16.75 | 0.02 ± 0.02 | 0.33 | 0.17 |");
  CHECK(l[6] ==
        "| SDiff | **7.55 ± 1.23** | 7.27 ± 0.71 | 207.41 | 65.55 | 41.15 | 0.05 ± 0.02 | 0.02 | **0.48** |");
}

TEST_CASE("single model, single metric") {
  const auto l = lines(render_report({{"m", false, {full(MetricName::FID, 1.0)}}}, ReportFormat::markdown));
  REQUIRE(l.size() == 3);
  CHECK(l[0] == "| Model/Data | FID ↓ |");
  CHECK(l[2] == "| m | **1.00** |");
}

TEST_CASE("missing metrics render as ---") {
  std::vector<ModelResults> models = {{"a", false, {full(MetricName::FID, 2.0), full(MetricName::KID, 0.1)}},
                                      {"b", false, {full(MetricName::FID, 1.0)}}};
  const auto l = lines(render_report(models, ReportFormat::markdown));
  CHECK(l[3] == "| b | **1.00** | --- |");
}

TEST_CASE("csv layout") {
  const auto l = lines(render_report(table1(), ReportFormat::csv));
  CHECK(l[0] == "model,IS ↑,IS* ↑,best");
  CHECK(l[1] == "Real train images,3.12 ± 0.44,3.80 ± 0.43,");
  CHECK(l[3] == "TI Neckar,4.06 ± 0.42,3.52 ± 0.93,IS");
  CHECK(l[5] == "TI All,3.36 ± 0.36,4.26 ± 0.66,IS_star");

  const auto quoted = lines(render_report({{"DB, \"All\"", false, {full(MetricName::FID, 1.0)}}}, ReportFormat::csv));
  CHECK(quoted[1] == "\"DB, \"\"All\"\"\",1.00,FID");
}

TEST_CASE("json layout and round-trip of results") {
  const auto doc = nlohmann::json::parse(render_report(table2(), ReportFormat::json));
  REQUIRE(doc["columns"].size() == 8);
  CHECK(doc["columns"][2]["metric"] == "FID");
  CHECK(doc["columns"][2]["better"] == "lower");
  CHECK(doc["columns"][2]["arrow"] == "↓");
  CHECK(doc["columns"][1]["label"] == "IS*");
  const auto& real = doc["rows"][0];
  CHECK(real["reference"] == true);
  CHECK(real["cells"]["FID"]["missing"] == true);
  CHECK(real["cells"]["FID"]["display"] == "---");
  const auto& t2i = doc["rows"][1];
  CHECK(t2i["cells"]["FID"]["best"] == true);
  CHECK(t2i["cells"]["FID"]["value"] == 139.65);
  CHECK(t2i["cells"]["Recall"]["best"] == false);

  const auto r = full(MetricName::KID, 0.0123, 0.02);
  const auto back = metric_result_from_json(metric_result_to_json(r));
  CHECK(back.metric == r.metric);
  CHECK(back.value == r.value);
  CHECK(back.dispersion == r.dispersion);
  CHECK(back.n_real == r.n_real);
  CHECK(back.backbone_id == r.backbone_id);
}

TEST_CASE("rendering is deterministic and independent of the C locale") {
  const auto before = render_report(table2(), ReportFormat::csv);
  if (std::setlocale(LC_ALL, "de_DE.UTF-8") != nullptr) {
    CHECK(render_report(table2(), ReportFormat::csv) == before);
    std::setlocale(LC_ALL, "C");
  }
  CHECK(render_report(table2(), ReportFormat::csv) == before);
}

TEST_CASE("report format names") {
  CHECK(parse_report_format("Markdown") == ReportFormat::markdown);
  CHECK(parse_report_format("json") == ReportFormat::json);
  CHECK_THROWS_AS(parse_report_format("html"), ValidationError);
}
