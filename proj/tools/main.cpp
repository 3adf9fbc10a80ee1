// otrf command-line driver: run, sweep, verify, gen-data, plot.
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "otrf/config.hpp"
#include "otrf/datagen.hpp"
#include "otrf/errors.hpp"
#include "otrf/runner.hpp"
#include "otrf/svg.hpp"
#include "otrf/sweep.hpp"

namespace {

struct CommonFlags {
  std::optional<std::uint64_t> seed;
  int workers = 0;
  std::string out_dir;
  std::string preset;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--seed", f.seed, "Base random seed");
  cmd->add_option("--workers", f.workers, "Worker threads (default: $OTRF_WORKERS or 1)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--out-dir", f.out_dir, "Output directory");
  cmd->add_option("--preset", f.preset, "Named hyperparameter preset");
  cmd->add_option("--set", f.sets, "Override a config key (key=value, repeatable)")
      ->allow_extra_args(false);
}

otrf::Overrides overrides_from(const CommonFlags& f) {
  otrf::Overrides out;
  for (const auto& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw otrf::ConfigError("--set expects key=value, got '" + s + "'");
    }
    out.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  if (f.seed) out.emplace_back("seed", std::to_string(*f.seed));
  if (!f.out_dir.empty()) out.emplace_back("output_dir", "\"" + f.out_dir + "\"");
  return out;
}

int report(const otrf::RunOutcome& outcome) {
  for (const auto& f : outcome.files) std::cout << f.string() << "\n";
  if (!outcome.message.empty()) std::cerr << "otrf: " << outcome.message << "\n";
  return static_cast<int>(outcome.code);
}

int run_config(const std::string& path, const CommonFlags& flags, bool force_verify) {
  auto ov = overrides_from(flags);
  if (force_verify) ov.emplace_back("algorithm", "verify");
  const auto cfg = otrf::load_config(path, ov, flags.preset);
  return report(otrf::run_experiment(cfg, flags.workers));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transport-guided rectified-flow editing toolkit"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string config_path;

  auto* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("config", config_path, "Experiment YAML")->required();
  add_common(run, flags);

  auto* verify = app.add_subcommand("verify", "Run the bound verification suite on a config");
  verify->add_option("config", config_path, "Experiment YAML")->required();
  add_common(verify, flags);

  std::string sweep_path;
  auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep");
  sweep->add_option("spec", sweep_path, "Sweep YAML")->required();
  add_common(sweep, flags);

  std::string datagen_path;
  auto* gen = app.add_subcommand("gen-data", "Write synthetic point sets to CSV");
  gen->add_option("spec", datagen_path, "Data generation YAML")->required();
  gen->add_option("--seed", flags.seed, "Random seed");
  gen->add_option("--out-dir", flags.out_dir, "Output directory");

  std::vector<std::string> plot_args;
  std::vector<int> projection;
  std::string metric = "reconstruction_l2";
  auto* plot = app.add_subcommand("plot", "Render trajectory CSVs or a sweep CSV to SVG");
  plot->add_option("files", plot_args, "<input.csv>... <output.svg>")->required()->expected(2, -1);
  plot->add_option("--projection", projection, "Two coordinate indices for d > 2")->expected(2);
  plot->add_option("--metric", metric, "Sweep metric column");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Usage errors share the config-error exit code.
    return app.exit(e) == 0 ? 0 : static_cast<int>(otrf::ExitCode::kConfigError);
  }

  try {
    if (run->parsed()) return run_config(config_path, flags, false);
    if (verify->parsed()) return run_config(config_path, flags, true);
    if (sweep->parsed()) {
      auto spec = otrf::load_sweep_spec(sweep_path);
      auto ov = overrides_from(flags);
      if (!flags.preset.empty()) ov.emplace_back("preset", flags.preset);
      const std::filesystem::path out = flags.out_dir.empty() ? "." : flags.out_dir;
      // The sweep writes one CSV; output_dir inside cells is irrelevant.
      std::erase_if(ov, [](const auto& kv) { return kv.first == "output_dir"; });
      return report(otrf::run_sweep(spec, flags.workers, out, ov));
    }
    if (gen->parsed()) {
      auto spec = otrf::load_datagen_spec(datagen_path);
      if (flags.seed) spec.seed = *flags.seed;
      std::filesystem::path out = flags.out_dir.empty() ? spec.output_dir : flags.out_dir;
      for (const auto& f : otrf::write_datasets(spec, out)) std::cout << f.string() << "\n";
      return 0;
    }
    if (plot->parsed()) {
      std::vector<std::filesystem::path> inputs(plot_args.begin(), plot_args.end() - 1);
      const std::filesystem::path output = plot_args.back();
      std::optional<otrf::Projection> proj;
      if (projection.size() == 2) proj = otrf::Projection{projection[0], projection[1]};
      otrf::emit_plot(inputs, output, proj ? &*proj : nullptr, metric);
      std::cout << output.string() << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "otrf: " << otrf::failing_module(e) << ": " << e.what() << "\n";
    return static_cast<int>(otrf::exit_code_for(e));
  }
  return 1;
}
