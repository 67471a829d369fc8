#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "anatgraph/config.hpp"
#include "anatgraph/errors.hpp"
#include "anatgraph/experiments.hpp"
#include "anatgraph/gradcheck.hpp"
#include "anatgraph/log.hpp"

namespace fs = std::filesystem;
using namespace anatgraph;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNonFinite = 3;

// One JSON object per line on stderr, so callers can parse failures.
int fail(int code, const std::string& kind, const std::string& message, const std::string& path = {}) {
  nlohmann::ordered_json j;
  j["error"] = kind;
  if (!path.empty()) j["path"] = path;
  j["message"] = message;
  std::cerr << j.dump() << '\n';
  return code;
}

struct CommonOptions {
  std::string config = "synth_default";
  std::string out = "out";
  std::vector<std::string> sets;
  long long seed = -1;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "preset name or JSON config file")->capture_default_str();
  cmd->add_option("--out", o.out, "output directory")->capture_default_str();
  cmd->add_option("--set", o.sets, "override a config field: key=value (dotted path or unique leaf)");
  cmd->add_option("--seed", o.seed, "run seed (overrides the config)");
}

RunConfig resolve(const CommonOptions& o) {
  RunConfig cfg = load_config(o.config);
  if (o.seed >= 0) cfg.seed = static_cast<std::uint64_t>(o.seed);
  for (const auto& s : o.sets) apply_override(cfg, s);
  cfg.validate();
  return cfg;
}

void prepare_out(const fs::path& out, const RunConfig& cfg) {
  fs::create_directories(out);
  write_config(out / "config.json", cfg);
}

int cmd_generate(const CommonOptions& o) {
  RunConfig cfg = resolve(o);
  if (cfg.data.source != DataSource::synthetic)
    throw ConfigError("generate needs data.source = synthetic", "data.source");
  const fs::path out = o.out;
  prepare_out(out, cfg);
  const PreparedData data = prepare_data(cfg);
  write_csv(out / "dataset.csv", data.dataset);
  std::ofstream(out / "manifest.json") << manifest_to_json(data.dataset.manifest).dump(2) << '\n';
  std::cout << "wrote " << data.dataset.recordings.size() << " recordings, " << data.windows.size()
            << " windows to " << (out / "dataset.csv").string() << '\n';
  return 0;
}

void print_summary(const RunRecord& record) {
  const RunSummary s = record.summary();
  for (const auto& f : record.folds)
    std::printf("fold %-8s accuracy %.4f  within-user %.4f  edge-class %.4f\n", f.name.c_str(), f.accuracy,
                f.within_user_accuracy, f.edge_class_accuracy);
  std::printf("mean accuracy %.4f  std %.4f\n", s.mean_accuracy, s.std_accuracy);
}

int cmd_train(const CommonOptions& o, bool loso, int parallel) {
  RunConfig cfg = resolve(o);
  const fs::path out = o.out;
  prepare_out(out, cfg);
  const PreparedData data = prepare_data(cfg);
  const RunRecord record = loso ? run_loso(data, cfg, parallel) : run_single(data, cfg);
  write_report(record, out, static_cast<std::size_t>(cfg.analysis.pearson_step));
  print_summary(record);
  return 0;
}

int cmd_report(const std::string& from, const std::string& out, int step) {
  std::ifstream in(fs::path(from) / "run_record.json");
  if (!in) throw ProtocolError("no run_record.json under " + from);
  const RunRecord record = run_record_from_json(nlohmann::ordered_json::parse(in));
  int prefix = step;
  if (prefix <= 0) {
    const auto& c = record.config;
    prefix = c.contains("analysis") ? c["analysis"].value("pearson_step", 10) : 10;
  }
  write_report(record, out.empty() ? fs::path(from) : fs::path(out), static_cast<std::size_t>(prefix));
  print_summary(record);
  return 0;
}

int cmd_gradcheck(int trials, long long seed, double tolerance) {
  const auto cases = run_gradcheck_suite(trials, static_cast<std::uint64_t>(seed < 0 ? 0 : seed));
  bool ok = true;
  double total = 0.0;
  std::printf("%-32s %14s %14s %9s %8s %8s\n", "case", "max_rel_err", "max_abs_err", "checked", "kinks", "seconds");
  for (const auto& c : cases) {
    std::printf("%-32s %14.3e %14.3e %9ld %8ld %8.2f\n", c.name.c_str(), c.result.max_relative_error,
                c.result.max_absolute_error, static_cast<long>(c.result.checked),
                static_cast<long>(c.result.skipped_nonsmooth), c.seconds);
    ok = ok && c.result.max_relative_error < tolerance && c.result.checked > 0;
    total += c.seconds;
  }
  std::printf("%zu cases x %d trials, %.1f s, tolerance %.0e: %s\n", cases.size(), trials, total, tolerance,
              ok ? "PASS" : "FAIL");
  return ok ? 0 : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anatomical graph models for cross-user activity recognition"};
  app.require_subcommand(1);

  CommonOptions gen_opts, train_opts, loso_opts;
  auto* gen = app.add_subcommand("generate", "write a synthetic dataset as CSV + manifest");
  add_common(gen, gen_opts);
  auto* train = app.add_subcommand("train", "train and evaluate one held-out cluster");
  add_common(train, train_opts);
  auto* loso = app.add_subcommand("loso", "leave-one-cluster-out protocol over all clusters");
  add_common(loso, loso_opts);
  int parallel = 1;
  loso->add_option("--parallel-folds", parallel, "folds trained concurrently")->check(CLI::PositiveNumber);

  auto* report = app.add_subcommand("report", "re-render report files from a saved run");
  std::string report_from, report_out;
  int report_step = 0;
  report->add_option("--from", report_from, "run directory containing run_record.json")->required();
  report->add_option("--out", report_out, "output directory (default: the run directory)");
  report->add_option("--pearson-step", report_step, "epoch prefix step (default: from the saved config)");

  auto* grad = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  int trials = 100;
  long long grad_seed = 0;
  double tolerance = 1e-4;
  grad->add_option("--trials", trials, "seeded trials per case")->capture_default_str();
  grad->add_option("--seed", grad_seed, "suite seed")->capture_default_str();
  grad->add_option("--tolerance", tolerance, "max relative error")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(kExitConfig, "usage", e.what());
  }

  try {
    if (*gen) return cmd_generate(gen_opts);
    if (*train) return cmd_train(train_opts, false, 1);
    if (*loso) return cmd_train(loso_opts, true, parallel);
    if (*report) return cmd_report(report_from, report_out, report_step);
    if (*grad) return cmd_gradcheck(trials, grad_seed, tolerance);
  } catch (const ConfigError& e) {
    return fail(kExitConfig, "config", e.what(), e.path().empty() ? "<unknown>" : e.path());
  } catch (const NonFiniteLossError& e) {
    return fail(kExitNonFinite, "non_finite_loss", e.what(), e.term());
  } catch (const std::exception& e) {
    return fail(kExitRuntime, "runtime", e.what());
  }
  return 0;
}
