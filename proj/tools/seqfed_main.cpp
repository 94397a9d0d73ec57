// seqfed command-line driver.
//
//   seqfed run <config> [--output DIR] [--seed-override N] [--repeats N]
//   seqfed compare <dir>... [--output DIR]
//   seqfed partition-preview <config>
//
// Output directory precedence: --output, then $SEQFED_OUTPUT_DIR, then the
// config's output_dir. Failures exit 1 after printing one JSON error line to
// stderr.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "seqfed/config.hpp"
#include "seqfed/error.hpp"
#include "seqfed/experiment.hpp"

namespace {

int report_error(std::string_view kind, const std::string& message) {
  std::cerr << nlohmann::json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << '\n';
  return 1;
}

std::string resolve_config(const std::string& positional, const std::string& flag) {
  if (!positional.empty() && !flag.empty() && positional != flag)
    throw seqfed::Error(seqfed::ErrorKind::kConfig, "config given both positionally and via --config");
  const std::string path = flag.empty() ? positional : flag;
  if (path.empty()) throw seqfed::Error(seqfed::ErrorKind::kConfig, "no config file given");
  return path;
}

std::optional<std::string> env_output() {
  if (const char* env = std::getenv("SEQFED_OUTPUT_DIR"); env && *env) return std::string(env);
  return std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential federated learning simulator"};
  app.require_subcommand(1);

  std::string run_config_pos;
  std::string run_config_flag;
  std::string run_output;
  std::optional<std::uint64_t> seed_override;
  std::optional<std::size_t> repeats;
  auto* run = app.add_subcommand("run", "Run an experiment described by a config file");
  run->add_option("config_file", run_config_pos, "Config file");
  run->add_option("--config", run_config_flag, "Config file");
  run->add_option("--output", run_output, "Output directory");
  run->add_option("--seed-override", seed_override, "Replace hp.seed");
  run->add_option("--repeats", repeats, "Replace repeats");

  std::vector<std::string> compare_dirs;
  std::string compare_output;
  auto* compare = app.add_subcommand("compare", "Compare runs of two or more protocols");
  compare->add_option("dirs", compare_dirs, "Run output directories")->required();
  compare->add_option("--output", compare_output, "Output directory");

  std::string preview_pos;
  std::string preview_flag;
  auto* preview = app.add_subcommand("partition-preview", "Print per-client class histograms");
  preview->add_option("config_file", preview_pos, "Config file");
  preview->add_option("--config", preview_flag, "Config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("usage", e.what());
  }

  try {
    if (*run) {
      auto config = seqfed::load_config(resolve_config(run_config_pos, run_config_flag));
      if (seed_override) config.hp.seed = *seed_override;
      if (repeats) config.repeats = *repeats;
      if (!run_output.empty()) config.output_dir = run_output;
      else if (auto env = env_output()) config.output_dir = *env;
      const auto outcome = seqfed::run_experiment(config);
      for (const auto& row : outcome.rows)
        std::cout << row.protocol << " seed=" << row.seed << " accuracy=" << row.global_test_accuracy
                  << " ledger_bytes=" << row.ledger_bytes << " epochs=" << row.total_epochs << '\n';
      std::cout << "results written to " << config.output_dir << '\n';
    } else if (*compare) {
      std::vector<std::filesystem::path> dirs(compare_dirs.begin(), compare_dirs.end());
      std::string out = compare_output;
      if (out.empty()) out = env_output().value_or("comparison");
      seqfed::emit_comparison(dirs, out);
      std::cout << "comparison written to " << out << '\n';
    } else if (*preview) {
      const auto config = seqfed::load_config(resolve_config(preview_pos, preview_flag));
      std::cout << seqfed::partition_preview(config);
    }
  } catch (const seqfed::Error& e) {
    return report_error(seqfed::to_string(e.kind()), e.what());
  } catch (const std::exception& e) {
    return report_error("internal", e.what());
  }
  return 0;
}
