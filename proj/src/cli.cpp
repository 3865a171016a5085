// Copyright 2026 The geneval Authors
// SPDX-License-Identifier: Apache-2.0

#include "geneval/cli.hpp"

#include "geneval/csv_import.hpp"
#include "geneval/error.hpp"
#include "geneval/gemb.hpp"
#include "geneval/manifest_io.hpp"
#include "geneval/metrics.hpp"
#include "geneval/random.hpp"
#include "geneval/report.hpp"
#include "geneval/study/server.hpp"
#include "geneval/study/study.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <chrono>
#include <fstream>
#include <iostream>
#include <set>

namespace geneval::cli {

namespace {

namespace fs = std::filesystem;

struct InputArg {
  std::string flag;
  std::optional<std::string> backbone;
  fs::path path;
};

InputArg parse_input(const std::string& flag, const std::string& value) {
  InputArg arg{flag, std::nullopt, value};
  const auto eq = value.find('=');
  if (eq != std::string::npos && value.substr(0, eq).find('/') == std::string::npos) {
    arg.backbone = value.substr(0, eq);
    arg.path = value.substr(eq + 1);
    if (arg.backbone->empty() || arg.path.empty()) {
      throw ValidationError(fmt::format("{} {}: expected backbone=path", flag, value));
    }
  }
  return arg;
}

AnySet load_input(const InputArg& arg) {
  if (!fs::exists(arg.path)) throw IoError(fmt::format("{}: file not found: '{}'", arg.flag, arg.path.string()));
  AnySet set = read_gemb(arg.path);
  if (arg.backbone && backbone_of(set) != *arg.backbone) {
    throw ValidationError(fmt::format("{}: '{}' holds backbone '{}', not '{}'", arg.flag, arg.path.string(),
                                      backbone_of(set), *arg.backbone));
  }
  return set;
}

// Same backbone and kind are row-concatenated in argument order.
void add_to_bundle(FeatureBundle& bundle, AnySet set) {
  if (auto* e = std::get_if<EmbeddingSet>(&set)) {
    for (auto& existing : bundle.embeddings) {
      if (existing.backbone_id() == e->backbone_id()) {
        existing = merge_sets(existing, *e);
        return;
      }
    }
    bundle.embeddings.push_back(std::move(*e));
    return;
  }
  auto& p = std::get<ProbabilitySet>(set);
  for (auto& existing : bundle.probabilities) {
    if (existing.backbone_id() == p.backbone_id()) {
      existing = merge_sets(existing, p);
      return;
    }
  }
  bundle.probabilities.push_back(std::move(p));
}

struct NamedBundle {
  std::string name;
  FeatureBundle bundle;
};

struct Inputs {
  std::optional<NamedBundle> real;
  std::vector<NamedBundle> models;
};

Inputs load_inputs(const std::vector<std::string>& real_args, const std::vector<std::string>& gen_args) {
  Inputs in;
  for (const auto& value : real_args) {
    AnySet set = load_input(parse_input("--real", value));
    if (!in.real) in.real = NamedBundle{label_of(set).empty() ? std::string(kRealLabel) : label_of(set), {}};
    add_to_bundle(in.real->bundle, std::move(set));
  }
  for (const auto& value : gen_args) {
    AnySet set = load_input(parse_input("--gen", value));
    const std::string& label = label_of(set);
    auto it = std::find_if(in.models.begin(), in.models.end(),
                           [&](const NamedBundle& m) { return labels_equal(m.name, label); });
    if (it == in.models.end()) {
      in.models.push_back(NamedBundle{label, {}});
      it = std::prev(in.models.end());
    }
    add_to_bundle(it->bundle, std::move(set));
  }
  if (in.models.empty()) throw ValidationError("--gen: at least one generated input is required");
  return in;
}

FeatureBundle subset_bundle(const FeatureBundle& b, const std::vector<Index>& rows) {
  FeatureBundle out;
  for (const auto& e : b.embeddings) out.embeddings.push_back(e.subset(rows));
  for (const auto& p : b.probabilities) out.probabilities.push_back(p.subset(rows));
  return out;
}

std::vector<MetricName> parse_metric_list(const std::string& s) {
  std::vector<MetricName> out;
  if (s.empty() || labels_equal(s, "all")) return out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto end = s.find(',', start);
    const auto token = s.substr(start, end == std::string::npos ? std::string::npos : end - start);
    if (!token.empty()) {
      try {
        out.push_back(parse_metric_name(token));
      } catch (const ValidationError& e) {
        throw ValidationError(fmt::format("--metrics: {}", e.what()));
      }
    }
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

BackboneRoles load_backbone_map(const std::string& path) {
  BackboneRoles roles = BackboneRoles::defaults();
  if (path.empty()) return roles;
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("--backbone-map: cannot open '{}'", path));
  const auto doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw FormatError(fmt::format("--backbone-map: '{}' must be a JSON object of prefix -> role", path));
  }
  for (const auto& [prefix, role] : doc.items()) {
    if (!role.is_string()) throw FormatError(fmt::format("--backbone-map: role for '{}' must be a string", prefix));
    roles.set(prefix, parse_backbone_role(role.get<std::string>()));
  }
  return roles;
}

struct MetricFlags {
  std::vector<std::string> real;
  std::vector<std::string> gen;
  std::string metrics = "all";
  Index splits = 10;
  std::optional<std::uint64_t> split_seed;
  std::optional<Index> kid_subset_size;
  Index kid_subsets = 100;
  Index pr_k = 3;
  std::uint64_t seed = 0;
  std::string backbone_map;
  std::string distribution_role = "base";
  std::string out;

  SuiteSpecs specs() const {
    SuiteSpecs s;
    s.split.split_count = splits;
    s.split.seed = split_seed;
    s.kid.subset_size = kid_subset_size;
    s.kid.subset_count = kid_subsets;
    s.kid.seed = seed;
    s.pr.neighborhood_k = pr_k;
    s.roles = load_backbone_map(backbone_map);
    s.distribution_role = parse_backbone_role(distribution_role);
    s.requested = parse_metric_list(metrics);
    return s;
  }
};

void add_metric_flags(CLI::App* cmd, MetricFlags& f) {
  cmd->add_option("--real", f.real, "Real-image input, [backbone=]path to a GEMB file (repeatable)");
  cmd->add_option("--gen", f.gen, "Generated-image input, [backbone=]path (repeatable); grouped by source label")
      ->required();
  cmd->add_option("--metrics", f.metrics, "Comma-separated metric names, or 'all'");
  cmd->add_option("--splits", f.splits, "Inception Score split count")->check(CLI::PositiveNumber);
  cmd->add_option("--split-seed", f.split_seed, "Shuffle rows before splitting with this seed");
  cmd->add_option("--kid-subset-size", f.kid_subset_size, "KID subset size (default min(1000, n))")
      ->check(CLI::Range(Index{2}, std::numeric_limits<Index>::max()));
  cmd->add_option("--kid-subsets", f.kid_subsets, "KID subset count")->check(CLI::PositiveNumber);
  cmd->add_option("--pr-k", f.pr_k, "Neighborhood size for precision/recall")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", f.seed, "Seed for every random draw");
  cmd->add_option("--backbone-map", f.backbone_map, "JSON object mapping backbone prefixes to base/domain/clip");
  cmd->add_option("--distribution-role", f.distribution_role, "Feature space for KID and precision/recall");
  cmd->add_option("--out", f.out, "Output file (default: standard output)");
}

void emit(const std::string& document, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) {
    out << document;
    return;
  }
  std::ofstream file(out_path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError(fmt::format("--out: cannot open '{}' for writing", out_path));
  file << document;
  if (!file) throw IoError(fmt::format("--out: write to '{}' failed", out_path));
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

int cmd_compute(const MetricFlags& flags, const std::string& format_name, bool timestamps, std::ostream& out,
                std::ostream& err) {
  const ReportFormat format = parse_report_format(format_name);
  const SuiteSpecs specs = flags.specs();
  const Inputs inputs = load_inputs(flags.real, flags.gen);
  const FeatureBundle empty_real;
  const FeatureBundle& real = inputs.real ? inputs.real->bundle : empty_real;

  std::vector<ModelResults> rows;
  if (inputs.real && !inputs.real->bundle.probabilities.empty()) {
    SuiteSpecs is_only = specs;
    is_only.requested.clear();
    for (MetricName m : {MetricName::IS, MetricName::IS_star}) {
      if (specs.requested.empty() ||
          std::find(specs.requested.begin(), specs.requested.end(), m) != specs.requested.end()) {
        is_only.requested.push_back(m);
      }
    }
    if (!is_only.requested.empty()) {
      FeatureBundle probs_only;
      probs_only.probabilities = inputs.real->bundle.probabilities;
      auto outcome = evaluate_suite(FeatureBundle{}, probs_only, is_only);
      rows.push_back(ModelResults{inputs.real->name, true, std::move(outcome.results)});
    }
  }
  for (const auto& model : inputs.models) {
    auto outcome = evaluate_suite(real, model.bundle, specs);
    for (const auto& notice : outcome.notices) fmt::print(err, "note: {}: {}\n", model.name, notice);
    rows.push_back(ModelResults{model.name, false, std::move(outcome.results)});
  }

  std::string document = render_report(rows, format);
  if (timestamps) {
    if (format == ReportFormat::json) {
      auto doc = nlohmann::json::parse(document);
      doc["generated_at"] = utc_timestamp();
      document = doc.dump(2) + "\n";
    } else {
      document += fmt::format("{}generated at {}\n", format == ReportFormat::csv ? "# " : "\n", utc_timestamp());
    }
  }
  emit(document, flags.out, out);
  return kExitOk;
}

std::string fmt_optional(const std::optional<double>& v) { return v ? fmt::format("{:.17g}", *v) : ""; }

int cmd_sweep(const MetricFlags& flags, const std::vector<Index>& sizes, Index repeats, std::ostream& out,
              std::ostream& err) {
  if (sizes.empty()) throw ValidationError("--sizes: at least one sample size is required");
  const SuiteSpecs base_specs = flags.specs();
  const Inputs inputs = load_inputs(flags.real, flags.gen);
  const Index n_real = inputs.real ? inputs.real->bundle.row_count().value_or(0) : 0;

  std::string csv = "model,size,repeat,metric,value,dispersion,n_real,n_gen,backbone_id,seed\n";
  std::set<std::string> reported;
  for (const auto& model : inputs.models) {
    const Index n_gen = *model.bundle.row_count();
    for (Index size : sizes) {
      if (size > n_gen) {
        throw ValidationError(fmt::format("--sizes: size {} exceeds the {} rows of generated set '{}'", size, n_gen,
                                          model.name));
      }
      if (inputs.real && size > n_real) {
        throw ValidationError(fmt::format("--sizes: size {} exceeds the {} rows of the real set", size, n_real));
      }
      for (Index repeat = 0; repeat < repeats; ++repeat) {
        const std::uint64_t draw_seed =
            mix_seed({flags.seed, static_cast<std::uint64_t>(size), static_cast<std::uint64_t>(repeat)});
        Rng rng(draw_seed);
        const auto gen_rows = rng.sample_without_replacement(n_gen, size);
        FeatureBundle real_subset;
        if (inputs.real) real_subset = subset_bundle(inputs.real->bundle, rng.sample_without_replacement(n_real, size));
        SuiteSpecs specs = base_specs;
        specs.kid.seed = draw_seed;
        const auto outcome = evaluate_suite(real_subset, subset_bundle(model.bundle, gen_rows), specs);
        for (const auto& notice : outcome.notices) {
          if (reported.insert(model.name + notice).second) fmt::print(err, "note: {}: {}\n", model.name, notice);
        }
        for (const auto& r : outcome.results) {
          csv += fmt::format("{},{},{},{},{:.17g},{},{},{},{},{}\n", model.name, size, repeat, to_string(r.metric),
                             r.value, fmt_optional(r.dispersion), r.n_real ? fmt::format("{}", *r.n_real) : "",
                             r.n_gen, r.backbone_id, r.seed ? fmt::format("{}", *r.seed) : "");
        }
      }
    }
  }
  emit(csv, flags.out, out);
  return kExitOk;
}

void check_values(const RowMatrix& m, GembKind kind, std::vector<std::string>& problems) {
  if (kind == GembKind::probabilities) {
    for (auto& v : validate_probabilities(m).violations) problems.push_back(std::move(v));
    return;
  }
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (!std::isfinite(m(i, j))) problems.push_back(fmt::format("non-finite entry at ({},{})", i, j));
    }
  }
}

// Lists every problem found in one file; empty means valid.
std::vector<std::string> inspect_file(const fs::path& path, GembKind csv_kind, const CsvOptions& csv_options,
                                      std::string& summary) {
  std::vector<std::string> problems;
  if (!fs::exists(path)) return {fmt::format("file not found")};
  const std::string ext = normalize_label(path.extension().string());
  try {
    if (ext == ".json") {
      const auto manifest = read_manifest(path);
      summary = fmt::format("manifest '{}' with {} entries", manifest.dataset(), manifest.entries().size());
    } else if (ext == ".csv") {
      std::ifstream in(path);
      if (!in) throw IoError("cannot open file");
      const RowMatrix m = read_csv_matrix(in, csv_options, "csv");
      summary = fmt::format("{} {}x{}", to_string(csv_kind), m.rows(), m.cols());
      check_values(m, csv_kind, problems);
    } else {
      const auto contents = decode_gemb_unchecked(read_file_bytes(path));
      const auto& h = contents.header;
      summary = fmt::format("{} {}x{} backbone '{}' label '{}'", to_string(h.kind), h.n, h.d, h.backbone_id,
                            h.source_label);
      if (h.backbone_id.empty()) problems.emplace_back("empty backbone_id");
      if (h.n == 0 || h.d == 0) problems.push_back(fmt::format("empty matrix {}x{}", h.n, h.d));
      check_values(contents.data, h.kind, problems);
    }
  } catch (const InputError& e) {
    problems.emplace_back(e.what());
  }
  return problems;
}

constexpr std::size_t kMaxListedViolations = 50;

int cmd_validate(const std::vector<std::string>& paths, const std::string& kind, bool skip_header, std::ostream& out) {
  const GembKind csv_kind = parse_gemb_kind(kind);
  CsvOptions csv_options;
  csv_options.skip_header = skip_header;
  bool all_ok = true;
  for (const auto& p : paths) {
    std::string summary;
    const auto problems = inspect_file(p, csv_kind, csv_options, summary);
    if (problems.empty()) {
      fmt::print(out, "{}: OK ({})\n", p, summary);
      continue;
    }
    all_ok = false;
    const std::size_t shown = std::min(problems.size(), kMaxListedViolations);
    for (std::size_t i = 0; i < shown; ++i) fmt::print(out, "{}: {}\n", p, problems[i]);
    if (problems.size() > shown) fmt::print(out, "{}: ... and {} more violations\n", p, problems.size() - shown);
    fmt::print(out, "{}: INVALID ({} violations)\n", p, problems.size());
  }
  return all_ok ? kExitOk : kExitInput;
}

int cmd_manifest(const std::string& path, const std::string& root, std::ostream& out) {
  const auto manifest = read_manifest(path);
  fmt::print(out, "{}: dataset '{}', {} entries (train {}, val {}, test {}, generated {})\n", path, manifest.dataset(),
             manifest.entries().size(), manifest.count(Split::train), manifest.count(Split::val),
             manifest.count(Split::test), manifest.count(Split::generated));
  if (root.empty()) return kExitOk;
  const auto problems = verify_manifest_files(manifest, root);
  for (const auto& p : problems) fmt::print(out, "{}: {}\n", path, p);
  if (problems.empty()) fmt::print(out, "{}: all checksums verified under '{}'\n", path, root);
  return problems.empty() ? kExitOk : kExitInput;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Evaluation toolkit for synthetic imagery: metrics, reports and a blind annotation study"};
  app.require_subcommand(1);

  MetricFlags compute_flags;
  std::string format = "markdown";
  bool timestamps = false;
  auto* compute = app.add_subcommand("compute", "Compute metrics and render a comparison report");
  add_metric_flags(compute, compute_flags);
  compute->add_option("--format", format, "markdown, csv or json");
  compute->add_flag("--timestamps", timestamps, "Stamp the report with the generation time");

  MetricFlags sweep_flags;
  std::vector<Index> sizes;
  Index repeats = 1;
  auto* sweep = app.add_subcommand("sweep", "Recompute metrics on seeded subsets of several sizes (long CSV)");
  add_metric_flags(sweep, sweep_flags);
  sweep->add_option("--sizes", sizes, "Sample sizes")->required()->delimiter(',')->check(CLI::PositiveNumber);
  sweep->add_option("--repeats", repeats, "Draws per size")->check(CLI::PositiveNumber);

  std::vector<std::string> validate_paths;
  std::string validate_kind = "embeddings";
  bool validate_skip_header = false;
  auto* validate = app.add_subcommand("validate", "Check GEMB, CSV and manifest files and list every violation");
  validate->add_option("paths", validate_paths, "Files to check")->required();
  validate->add_option("--kind", validate_kind, "Kind of CSV inputs: embeddings or probabilities");
  validate->add_flag("--skip-header", validate_skip_header, "CSV inputs have a header row");

  std::string csv_input, csv_kind = "embeddings", csv_backbone, csv_label, csv_out;
  bool csv_skip_header = false;
  char csv_delimiter = ',';
  auto* import = app.add_subcommand("import-csv", "Convert a numeric CSV into a GEMB file");
  import->add_option("input", csv_input, "CSV file")->required();
  import->add_option("--kind", csv_kind, "embeddings or probabilities");
  import->add_option("--backbone", csv_backbone, "Backbone id stamped into the file")->required();
  import->add_option("--label", csv_label, "Source label (e.g. real, text2img)")->required();
  import->add_option("--out", csv_out, "Destination GEMB file")->required();
  import->add_flag("--skip-header", csv_skip_header, "Skip the first non-blank line");
  import->add_option("--delimiter", csv_delimiter, "Cell delimiter");

  std::string manifest_path, manifest_root;
  auto* manifest = app.add_subcommand("manifest", "Summarize a dataset manifest and optionally verify checksums");
  manifest->add_option("path", manifest_path, "Manifest JSON")->required();
  manifest->add_option("--root", manifest_root, "Directory the entry paths are relative to");

  std::string results_log, results_study, results_format = "markdown";
  auto* results = app.add_subcommand("study-results", "Tally an annotation study from its log");
  results->add_option("--log", results_log, "Study log file")->required();
  results->add_option("--study", results_study, "Study id")->required();
  results->add_option("--format", results_format, "markdown or json");

  study::ServerOptions server_options;
  std::string serve_log;
  bool no_fsync = false;
  std::string image_root = ".";
  std::string ui_dir;
  auto* serve = app.add_subcommand("serve", "Run the annotation study HTTP service");
  serve->add_option("--log", serve_log, "Append-only study log (replayed at startup)")->required();
  serve->add_option("--host", server_options.host, "Bind address");
  serve->add_option("--port", server_options.port, "Port (0 picks a free one)");
  serve->add_option("--image-root", image_root, "Directory roster image paths are relative to");
  serve->add_option("--ui-dir", ui_dir, "Static annotation UI bundle served at /ui");
  serve->add_option("--admin", server_options.admins, "User id allowed to export logs (repeatable)");
  serve->add_flag("--no-fsync", no_fsync, "Do not fsync after each log append");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*compute) return cmd_compute(compute_flags, format, timestamps, out, err);
    if (*sweep) return cmd_sweep(sweep_flags, sizes, repeats, out, err);
    if (*validate) return cmd_validate(validate_paths, validate_kind, validate_skip_header, out);
    if (*import) {
      CsvOptions options;
      options.skip_header = csv_skip_header;
      options.delimiter = csv_delimiter;
      const auto set = import_csv(csv_input, parse_gemb_kind(csv_kind), csv_backbone, csv_label, options);
      const auto bytes = write_gemb(set, csv_out);
      fmt::print(out, "wrote {} ({} {}x{}, {} bytes)\n", csv_out, to_string(kind_of(set)), rows_of(set),
                 matrix_of(set).cols(), bytes);
      return kExitOk;
    }
    if (*manifest) return cmd_manifest(manifest_path, manifest_root, out);
    if (*results) {
      if (!fs::exists(results_log)) throw IoError(fmt::format("--log: file not found: '{}'", results_log));
      study::StoreOptions options;
      options.read_only = true;
      study::StudyStore store(results_log, options);
      const auto r = store.compute_results(results_study);
      if (labels_equal(results_format, "json")) {
        out << study::results_to_json(r).dump(2) << '\n';
      } else {
        out << study::render_results_markdown(r);
      }
      return kExitOk;
    }
    if (*serve) {
      study::StoreOptions options;
      options.sync_each_append = !no_fsync;
      study::StudyStore store(serve_log, options);
      server_options.image_root = image_root;
      if (!ui_dir.empty()) server_options.ui_dir = ui_dir;
      study::StudyServer server(store, server_options);
      const int port = server.bind();
      fmt::print(err, "serving studies on http://{}:{} (log '{}')\n", server_options.host, port, serve_log);
      err.flush();
      server.run();
      return kExitOk;
    }
  } catch (const InputError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitInput;
  } catch (const study::StudyError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return e.code() == study::StudyError::Code::not_found || e.code() == study::StudyError::Code::invalid
               ? kExitInput
               : kExitInternal;
  } catch (const std::exception& e) {
    fmt::print(err, "internal error: {}\n", e.what());
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace geneval::cli
