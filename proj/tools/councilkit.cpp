// councilkit: command-line driver for the meeting pipeline.

#include <omp.h>

#include <CLI11.hpp>
#include <iostream>

#include "council/common.hpp"
#include "council/pipeline.hpp"

namespace cp = council::pipeline;

int main(int argc, char** argv) {
  CLI::App app{"Public-comment meeting pipeline: parse, annotate, link, validate, stats, did, report"};
  app.set_version_flag("--version", std::string(council::kVersion));
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> output_dir;
  bool force = false;
  app.add_option("-c,--config", config_path, "JSON configuration file")->required()->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Master seed for stochastic stages (overrides the config)");
  app.add_option("-j,--jobs", jobs, "OpenMP threads (0: runtime default)")->check(CLI::NonNegativeNumber);
  app.add_option("-o,--output-dir", output_dir, "Output root (overrides the config)");
  app.add_flag("-f,--force", force, "Replace existing stage outputs");

  using Command = void (*)(const cp::Config&, const cp::StageOptions&, std::ostream&);
  const std::vector<std::tuple<const char*, const char*, Command>> commands{
      {"parse", "Parse and filter diarized transcripts", cp::cmd_parse},
      {"annotate-ingest", "Ingest speaker, issue, topic and stance annotations", cp::cmd_annotate_ingest},
      {"link", "Link public speakers to the voter file", cp::cmd_link},
      {"validate", "Compare automated labels with human labels", cp::cmd_validate},
      {"stats", "Descriptive statistics and configured regressions", cp::cmd_stats},
      {"did", "Staggered difference-in-differences with bootstrap inference", cp::cmd_did},
      {"report", "Index every artifact of the run with content hashes", cp::cmd_report},
      {"all", "Run every configured stage in order", cp::cmd_all},
  };
  std::map<CLI::App*, Command> handlers;
  for (const auto& [name, help, fn] : commands) handlers[app.add_subcommand(name, help)] = fn;

  CLI11_PARSE(app, argc, argv);

  try {
    cp::LoadOptions lo;
    lo.seed = seed;
    lo.jobs = jobs;
    if (output_dir) lo.output_dir = *output_dir;
    const auto cfg = cp::load_config(config_path, lo);
    if (cfg.jobs > 0) omp_set_num_threads(cfg.jobs);
    for (auto* sub : app.get_subcommands()) {
      handlers.at(sub)(cfg, cp::StageOptions{force}, std::cerr);
    }
    std::cout << cp::run_directory(cfg).string() << "\n";
  } catch (const cp::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const council::SchemaError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "failed: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
