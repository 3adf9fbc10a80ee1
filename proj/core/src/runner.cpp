#include "otrf/runner.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <limits>
#include <numbers>
#include <thread>

#include "otrf/csv.hpp"
#include "otrf/metrics.hpp"
#include "otrf/report.hpp"
#include "otrf/rng.hpp"
#include "otrf/svg.hpp"

namespace otrf {

namespace {

namespace fs = std::filesystem;

// Stream tags for derive_seed so that the different random uses of one
// experiment never share a stream.
constexpr std::uint64_t kInputStream = 1;
constexpr std::uint64_t kTargetStream = 2;
constexpr std::uint64_t kEditStream = 3;
constexpr std::uint64_t kNoiseStream = 4;
constexpr std::uint64_t kReferenceStream = 5;
constexpr std::uint64_t kVerifyStream = 6;

// Runs fn(i) for i in [0, n) on `workers` threads. Results must be written
// to index-addressed storage by fn. The exception of the lowest failing
// index is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto body = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(body);
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

InversionEditConfig inversion_config(const ExperimentConfig& cfg) {
  InversionEditConfig ic;
  ic.eta = cfg.eta;
  ic.eta_window = cfg.eta_window;
  ic.transport = cfg.transport;
  ic.n_steps = cfg.n_steps;
  ic.condition_target = parse_condition(cfg.condition_target);
  ic.condition_inversion = parse_condition(cfg.condition_inversion);
  ic.scales = cfg.scales;
  return ic;
}

FlowEditConfig flowedit_config(const ExperimentConfig& cfg) {
  FlowEditConfig fc;
  fc.transport = cfg.transport;
  fc.n_steps = cfg.n_steps;
  fc.cond_src = parse_condition(cfg.cond_src);
  fc.cond_tar = parse_condition(cfg.cond_tar);
  fc.scales = cfg.scales;
  fc.n_avg = cfg.n_avg;
  fc.n_max = cfg.n_max;
  fc.n_min = cfg.n_min;
  return fc;
}

// Noise at t = 1. "rotational" draws count/symmetry base vectors and rotates
// each by multiples of 2 pi / symmetry (2D only).
PointSet generation_noise(const ExperimentConfig& cfg, Eigen::Index dim) {
  const auto& g = cfg.generate;
  PointSet out;
  out.reserve(static_cast<std::size_t>(g.count));
  if (g.noise == "iid") {
    for (int i = 0; i < g.count; ++i) {
      NormalStream rng(RngSeed{derive_seed(cfg.seed, kNoiseStream, static_cast<std::uint64_t>(i))});
      out.push_back(rng.next_vector(dim));
    }
    return out;
  }
  if (dim != 2) throw ConfigError("generate.noise 'rotational' requires 2D data");
  if (g.count % g.symmetry != 0) {
    throw ConfigError("generate.count must be a multiple of generate.symmetry");
  }
  const int base = g.count / g.symmetry;
  for (int b = 0; b < base; ++b) {
    NormalStream rng(RngSeed{derive_seed(cfg.seed, kNoiseStream, static_cast<std::uint64_t>(b))});
    const LatentState e = rng.next_vector(2);
    for (int k = 0; k < g.symmetry; ++k) {
      const double a = 2.0 * std::numbers::pi * k / g.symmetry;
      LatentState r(2);
      r << std::cos(a) * e[0] - std::sin(a) * e[1], std::sin(a) * e[0] + std::cos(a) * e[1];
      out.push_back(std::move(r));
    }
  }
  return out;
}

// Equal-size comparison cloud for W2: a point set tiled to `count`, or
// `count` samples of a Gaussian.
PointSet reference_cloud(const ExperimentConfig& cfg, const FieldRegistry& registry,
                         std::size_t count) {
  const std::string& name = cfg.generate.reference;
  if (const PointSet* pts = registry.points(name)) {
    if (count % pts->size() != 0) {
      throw ConfigError("generate.count must be a multiple of the reference dataset size");
    }
    PointSet out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back((*pts)[i % pts->size()]);
    return out;
  }
  PointSource src;
  src.sample_dataset = name;
  src.sample_count = static_cast<int>(count);
  return resolve_points(src, registry, cfg.base_dir, derive_seed(cfg.seed, kReferenceStream));
}

void run_verify(const ExperimentConfig& cfg, const FieldRegistry& registry,
                const LatentCodec& codec, ExperimentOutput& out) {
  const auto& v = cfg.verify;
  for (const auto& kind : v.kinds) {
    if (kind == "discretization") {
      const RegistryField field(registry, cfg.scales.w);
      DiscretizationSetup ds;
      ds.field = &field;
      const LatentState z_ref = codec.encode(out.inputs.front());
      if (v.field == "reference") {
        ds.condition = ConditionSpec::reference(z_ref);
      } else {
        ds.condition = parse_condition(v.field);
      }
      ds.transport = cfg.transport;
      ds.transport.beta0 = v.beta0;
      NormalStream rng(RngSeed{derive_seed(cfg.seed, kVerifyStream)});
      ds.z_init = rng.next_vector(z_ref.size());
      ds.z_target = out.targets.empty() ? z_ref : codec.encode(out.targets.front());
      ds.t_start = 1.0;
      ds.t_end = v.t_end;
      ds.t_local = v.t_local;
      ds.n_fine = v.n_fine;
      out.reports.push_back(verify_discretization_bound(ds, v.step_counts));
    } else {
      InversionBoundSetup setup;
      setup.registry = &registry;
      setup.codec = codec;
      setup.config = inversion_config(cfg);
      setup.inputs = out.inputs;
      setup.targets = out.inputs;
      if (kind == "convergence") {
        out.reports.push_back(verify_convergence_bound(setup, v.beta0_list));
      } else {
        out.reports.push_back(verify_edit_control_bound(setup, v.edit_beta0_list, cfg.transport.phi));
      }
    }
  }
}

void finish_metrics(ExperimentOutput& out) {
  RunMetrics m;
  if (!out.summaries.empty()) {
    for (const auto& s : out.summaries) {
      m.reconstruction_l2 += s.reconstruction_l2;
      m.displacement_l2 += s.displacement_l2;
      m.transport_work += s.transport_work;
    }
    const double n = static_cast<double>(out.summaries.size());
    m.reconstruction_l2 /= n;
    m.displacement_l2 /= n;
    m.transport_work /= n;
  }
  m.w2_to_target = std::numeric_limits<double>::quiet_NaN();
  if (!out.targets.empty() && out.targets.size() == out.outputs.size() &&
      out.outputs.size() <= kMaxAssignmentSize) {
    m.w2_to_target = w2_empirical_exact(out.outputs, out.targets).first;
  }
  out.metrics = m;
}

}  // namespace

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("OTRF_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0 && v <= 1024) return static_cast<int>(v);
  }
  return 1;
}

ExperimentOutput execute_experiment(const ExperimentConfig& cfg, int workers) {
  const FieldRegistry registry = build_registry(cfg);
  ExperimentOutput out;
  out.inputs = resolve_points(cfg.inputs, registry, cfg.base_dir,
                              derive_seed(cfg.seed, kInputStream));
  if (cfg.targets) {
    out.targets = resolve_points(*cfg.targets, registry, cfg.base_dir,
                                 derive_seed(cfg.seed, kTargetStream));
  }
  Eigen::Index dim = registry.dimension();
  if (dim == 0 && !out.inputs.empty()) dim = out.inputs.front().size();
  if (dim == 0) throw ConfigError("cannot infer the data dimension");
  for (const auto* set : {&out.inputs, &out.targets}) {
    for (const auto& p : *set) {
      if (p.size() != dim) {
        throw DimensionError("input/target dimension " + std::to_string(p.size()) +
                             " does not match data dimension " + std::to_string(dim));
      }
    }
  }
  const LatentCodec codec = build_codec(cfg, dim);

  switch (cfg.algorithm) {
    case Algorithm::kInvertEdit: {
      const InversionEditConfig ic = inversion_config(cfg);
      const std::size_t n = out.inputs.size();
      std::vector<EditResult> results(n);
      parallel_for(n, workers, [&](std::size_t i) {
        results[i] = transport_guided_inversion_edit(ic, registry, codec, out.inputs[i]);
      });
      for (auto& r : results) {
        out.outputs.push_back(std::move(r.output));
        out.trajectories.push_back(std::move(r.trajectory));
        out.summaries.push_back(r.summary);
      }
      break;
    }
    case Algorithm::kFlowEdit: {
      const FlowEditConfig base = flowedit_config(cfg);
      const std::size_t n = out.inputs.size();
      std::vector<EditResult> results(n);
      parallel_for(n, workers, [&](std::size_t i) {
        FlowEditConfig fc = base;
        fc.seed = RngSeed{derive_seed(cfg.seed, kEditStream, i)};
        results[i] = transport_enhanced_flowedit(fc, registry, codec, out.inputs[i]);
      });
      for (auto& r : results) {
        out.outputs.push_back(std::move(r.output));
        out.trajectories.push_back(std::move(r.trajectory));
        out.summaries.push_back(r.summary);
      }
      break;
    }
    case Algorithm::kGenerate: {
      const PointSet noise = generation_noise(cfg, dim);
      const RegistryField field(registry, cfg.scales.w);
      const ConditionSpec cond = parse_condition(cfg.generate.condition);
      const TimeGrid grid = make_time_grid(cfg.n_steps, 1.0, 0.0);
      std::vector<Trajectory> trajs(noise.size());
      parallel_for(noise.size(), workers,
                   [&](std::size_t i) { trajs[i] = rf_denoise(field, noise[i], grid, cond); });
      for (auto& t : trajs) {
        out.outputs.push_back(codec.decode(t.final_state()));
        out.trajectories.push_back(std::move(t));
      }
      if (!cfg.generate.reference.empty()) {
        out.targets = reference_cloud(cfg, registry, out.outputs.size());
      }
      break;
    }
    case Algorithm::kVerify:
      if (out.inputs.empty()) throw ConfigError("verify needs inputs");
      run_verify(cfg, registry, codec, out);
      break;
  }
  finish_metrics(out);
  return out;
}

std::string failing_module(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return "harness-cli (config)";
  if (dynamic_cast<const FieldError*>(&e)) return "velocity-fields";
  if (dynamic_cast<const DimensionError*>(&e)) return "flow-core";
  if (dynamic_cast<const NumericalAbort*>(&e)) return "flow-core (integration)";
  return "runtime";
}

ExitCode exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return ExitCode::kConfigError;
  if (dynamic_cast<const FieldError*>(&e)) return ExitCode::kConfigError;
  if (dynamic_cast<const DimensionError*>(&e)) return ExitCode::kConfigError;
  if (dynamic_cast<const NumericalAbort*>(&e)) return ExitCode::kNumericalAbort;
  return ExitCode::kGenericError;
}

RunOutcome run_experiment(const ExperimentConfig& cfg, int workers) {
  RunOutcome outcome;
  try {
    const ExperimentOutput out = execute_experiment(cfg, resolve_workers(workers));
    const fs::path dir = cfg.output_dir;
    fs::create_directories(dir);

    const std::size_t n_traj =
        std::min(out.trajectories.size(), static_cast<std::size_t>(cfg.max_trajectories));
    for (std::size_t i = 0; i < n_traj; ++i) {
      char name[48];
      std::snprintf(name, sizeof(name), "trajectory_%03zu.csv", i);
      write_file_atomic(dir / name, trajectory_to_csv(out.trajectories[i]));
      outcome.files.push_back(dir / name);
    }
    if (!out.outputs.empty()) {
      write_file_atomic(dir / "outputs.csv", points_to_csv(out.outputs));
      outcome.files.push_back(dir / "outputs.csv");
    }
    write_file_atomic(dir / "summary.json",
                      summary_to_json(cfg.name, std::string(to_string(cfg.algorithm)), out));
    outcome.files.push_back(dir / "summary.json");

    if (cfg.algorithm == Algorithm::kVerify) {
      write_file_atomic(dir / "bound_report.json", bound_reports_to_json(out.reports));
      outcome.files.push_back(dir / "bound_report.json");
    }
    if (cfg.plot.enabled && n_traj > 0) {
      const std::vector<Trajectory> shown(out.trajectories.begin(),
                                          out.trajectories.begin() + static_cast<long>(n_traj));
      const Projection proj{cfg.plot.projection[0], cfg.plot.projection[1]};
      write_file_atomic(dir / "plot.svg", trajectories_svg(shown, &proj, cfg.name));
      outcome.files.push_back(dir / "plot.svg");
    }

    for (const auto& r : out.reports) {
      if (!r.pass) {
        outcome.code = ExitCode::kVerificationFailure;
        outcome.message += std::string(to_string(r.kind)) + " bound failed" +
                           (r.note.empty() ? "" : ": " + r.note) + "\n";
      }
    }
  } catch (const std::exception& e) {
    outcome.code = exit_code_for(e);
    outcome.message = failing_module(e) + ": " + e.what();
    if (const auto* na = dynamic_cast<const NumericalAbort*>(&e)) {
      outcome.message += " (t=" + format_double(na->time()) + ", step " +
                         std::to_string(na->step()) + ")";
    }
  }
  return outcome;
}

}  // namespace otrf
