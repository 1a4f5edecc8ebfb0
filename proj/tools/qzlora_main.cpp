#include "qzlora/error.hpp"
#include "qzlora/pipeline/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitUpstream = 3;
constexpr int kExitUnitFailures = 4;

void print(const qzlora::pipeline::StageReport& r) {
  std::cout << qzlora::pipeline::to_string(r.stage) << ": " << r.executed << " run, " << r.skipped << " already done, "
            << r.failures.size() << " failed\n";
  for (const auto& f : r.failures) std::cout << "  FAILED " << f.key << ": " << f.reason << "\n";
  for (const auto& line : r.dry_run_lines) std::cout << "  " << line << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  using namespace qzlora;

  CLI::App app{"Quiz-ranked image selection for LoRA fine-tuning"};
  app.require_subcommand(1);

  std::string config_path = "qzlora.ini";
  std::string topics;
  std::string work;
  bool dry_run = false;
  bool quiet = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> parallelism;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Pipeline config file")->capture_default_str();
    cmd->add_option("--topics", topics, "Comma-separated topic ids (default: all configured)");
    cmd->add_option("--work", work, "Override [paths] work");
    cmd->add_flag("--dry-run", dry_run, "Print trainer commands and generation requests without running them");
    cmd->add_option("--seed", seed, "Override [pipeline] seed");
    cmd->add_option("--parallelism", parallelism, "Override [pipeline] parallelism")->check(CLI::PositiveNumber);
    cmd->add_flag("-q,--quiet", quiet, "Only print stage summaries");
  };

  std::vector<std::pair<CLI::App*, std::optional<pipeline::Stage>>> commands;
  for (pipeline::Stage s : pipeline::kStageOrder) {
    const std::string name(pipeline::to_string(s));
    CLI::App* cmd = app.add_subcommand(name, "Run the " + name + " stage");
    add_common(cmd);
    commands.emplace_back(cmd, s);
  }
  CLI::App* run_all = app.add_subcommand("run-all", "Run every stage in order, resuming finished work");
  add_common(run_all);
  commands.emplace_back(run_all, std::nullopt);

  CLI11_PARSE(app, argc, argv);

  try {
    pipeline::PipelineConfig config = pipeline::PipelineConfig::load(config_path);
    if (!work.empty()) config.work = fs::absolute(work).lexically_normal();
    if (seed) config.seed = *seed;
    if (parallelism) config.parallelism = *parallelism;

    pipeline::Pipeline::Logger logger;
    if (!quiet) logger = [](const std::string& line) { std::cerr << line << "\n"; };
    pipeline::Pipeline p(std::move(config), {}, logger);
    pipeline::RunOptions options{pipeline::split_list(topics), dry_run};

    std::vector<pipeline::StageReport> reports;
    for (const auto& [cmd, stage] : commands) {
      if (!cmd->parsed()) continue;
      if (stage) {
        reports.push_back(p.run_stage(*stage, options));
      } else {
        reports = p.run_all(options);
      }
    }
    bool failed = false;
    for (const auto& r : reports) {
      print(r);
      failed = failed || !r.ok();
    }
    return failed ? kExitUnitFailures : kExitOk;
  } catch (const Error& e) {
    std::cerr << "qzlora: " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::ConfigError: return kExitConfig;
      case ErrorCode::UpstreamIncomplete: return kExitUpstream;
      default: return kExitOther;
    }
  } catch (const std::exception& e) {
    std::cerr << "qzlora: " << e.what() << "\n";
    return kExitOther;
  }
}
