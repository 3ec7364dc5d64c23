#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "flownet/errors.hpp"
#include "flownet/specfile.hpp"
#include "flownet/stability.hpp"

namespace {

using flownet::NetworkSpecFile;
using flownet::StaticReport;
using nlohmann::json;

// 0: certified or exact verdict; 2: no conclusion either way.
int verdict_exit_code(StaticReport::Verdict v) {
  switch (v) {
    case StaticReport::Verdict::Consensus:
    case StaticReport::Verdict::Clustering:
    case StaticReport::Verdict::Unstable:
    case StaticReport::Verdict::CertifiedConsensus:
      return 0;
    case StaticReport::Verdict::SteadyStateNoConsensus:
    case StaticReport::Verdict::Inconclusive:
      return 2;
  }
  return 2;
}

const char* classification_name(flownet::TrajectoryClass c) {
  switch (c) {
    case flownet::TrajectoryClass::Consensus:
      return "consensus";
    case flownet::TrajectoryClass::Clustering:
      return "clustering";
    case flownet::TrajectoryClass::Divergent:
      return "divergent";
    case flownet::TrajectoryClass::Undecided:
      return "undecided";
  }
  return "undecided";
}

std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void write_text(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  out << text;
}

int cmd_analyze(const std::string& spec_path, const std::string& out_path) {
  NetworkSpecFile spec = flownet::parse_spec_file(spec_path);
  StaticReport report = flownet::analyze_network(spec.system);

  json doc = flownet::report_to_json(report);
  doc["input"] = {{"spec", spec_path},
                  {"vertices", spec.system.graph.vertex_count()},
                  {"edges", spec.system.graph.edge_count()},
                  {"mode", spec.system.mode == flownet::ControlMode::Constrained
                               ? "constrained"
                               : "unconstrained"}};
  write_text(out_path, doc.dump(2) + "\n");
  return verdict_exit_code(report.verdict);
}

int cmd_simulate(const std::string& spec_path, const std::string& out_path,
                 std::optional<std::uint64_t> seed, double horizon, double step, int stride,
                 const std::string& backend_name, bool refine, const std::string& format) {
  NetworkSpecFile spec = flownet::parse_spec_file(spec_path);

  flownet::SimOptions opts;
  opts.horizon = horizon;
  opts.step = step;
  opts.record_stride = stride;
  opts.refine_on_diagnostics = refine;
  if (backend_name == "openmp") {
    if (flownet::kernels::openmp_enabled()) {
      opts.backend = flownet::kernels::Backend::OpenMP;
    } else {
      std::cerr << "warning: built without OpenMP, using the serial backend\n";
    }
  }

  flownet::NetworkState initial = flownet::resolve_initial_state(spec, seed);
  flownet::Trajectory traj = flownet::simulate(spec.system, initial, opts);
  flownet::Classification cls = flownet::classify_trajectory(spec.system, traj);

  std::optional<std::uint64_t> recorded_seed;
  if (seed)
    recorded_seed = seed;
  else if (!spec.initial_state)
    recorded_seed = spec.seed.value_or(0);

  std::ostringstream summary;
  summary << "summary: classification=" << classification_name(cls.kind);
  if (cls.kind == flownet::TrajectoryClass::Consensus)
    summary << " alpha=" << fmt_g(cls.alpha);
  if (cls.kind == flownet::TrajectoryClass::Divergent)
    summary << " growth_rate=" << fmt_g(cls.growth_rate);
  summary << " final_V=" << fmt_g(traj.lyapunov.back())
          << " conservation_residual=" << fmt_g(traj.max_conservation_residual)
          << " completed=" << (traj.completed ? "true" : "false");
  if (!traj.failure.empty()) summary << " failure=\"" << traj.failure << "\"";
  summary << "\n";

  if (format == "report") {
    json doc;
    doc["schema_version"] = 1;
    doc["classification"] = classification_name(cls.kind);
    if (cls.kind == flownet::TrajectoryClass::Consensus) doc["alpha"] = cls.alpha;
    if (!cls.cluster_values.empty()) doc["cluster_values"] = cls.cluster_values;
    if (cls.kind == flownet::TrajectoryClass::Divergent) doc["growth_rate"] = cls.growth_rate;
    doc["final_time"] = traj.times.back();
    doc["final_V"] = traj.lyapunov.back();
    doc["final_grad_spread"] = traj.grad_spread.back();
    doc["conservation_residual"] = traj.max_conservation_residual;
    doc["lyapunov_valid"] = traj.lyapunov_valid;
    doc["max_lyapunov_increase"] = traj.max_lyapunov_increase;
    doc["completed"] = traj.completed;
    if (!traj.failure.empty()) doc["failure"] = traj.failure;
    doc["step"] = traj.step_used;
    doc["refinements"] = traj.refinements;
    if (recorded_seed) doc["seed"] = *recorded_seed;
    write_text(out_path, doc.dump(2) + "\n");
    return 0;
  }

  flownet::CsvMetadata meta;
  meta.seed = recorded_seed;
  meta.step = traj.step_used;
  meta.horizon = horizon;
  meta.stride = stride;

  if (out_path.empty()) {
    flownet::write_trajectory_csv(std::cout, traj, meta);
    std::cerr << summary.str();
  } else {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    flownet::write_trajectory_csv(out, traj, meta);
    std::cout << summary.str();
  }
  return 0;
}

int cmd_cover(const std::string& spec_path, const std::string& out_path, bool augment,
              const std::string& breakpoints_json, int rotation) {
  NetworkSpecFile spec = flownet::parse_spec_file(spec_path);
  flownet::CycleCover cover = flownet::minimal_cover(spec.system.graph, rotation);

  json doc;
  doc["schema_version"] = 1;
  doc["cycles"] = json::array();
  for (const flownet::DirectedCycle& c : cover.cycles) doc["cycles"].push_back(c.edge_ids);
  doc["multiplicity"] = cover.multiplicity;

  if (augment) {
    if (spec.system.mode != flownet::ControlMode::Constrained)
      throw std::runtime_error("--augment needs a constrained spec (flow intervals)");
    flownet::ConstrainedNetwork net = spec.system.network();

    std::vector<std::vector<double>> breakpoints;
    if (breakpoints_json.empty()) {
      breakpoints = flownet::default_breakpoints(net, cover);
    } else {
      json parsed = json::parse(breakpoints_json, nullptr, false);
      if (parsed.is_discarded() || !parsed.is_array())
        throw std::runtime_error("--breakpoints expects a JSON array of per-edge arrays");
      breakpoints = parsed.get<std::vector<std::vector<double>>>();
    }

    flownet::AugmentedNetwork augmented = flownet::augment(net, cover, breakpoints);
    doc["augmented"] = {{"network", flownet::network_to_json(augmented.network)},
                        {"mapping", flownet::mapping_to_json(augmented.mapping)},
                        {"cover", flownet::cover_to_json(augmented.cover)},
                        {"breakpoints", breakpoints}};
  }

  write_text(out_path, doc.dump(2) + "\n");
  return 0;
}

int cmd_normalize(const std::string& spec_path, const std::string& out_path) {
  NetworkSpecFile spec = flownet::parse_spec_file(spec_path);
  if (spec.system.mode != flownet::ControlMode::Constrained)
    throw std::runtime_error("normalize needs a constrained spec (flow intervals)");

  flownet::ConstrainedNetwork net = spec.system.network();
  std::vector<double> matching_state;
  std::vector<double> inflow = spec.system.external_inflow();
  bool has_inflow = false;
  for (double b : inflow) has_inflow = has_inflow || b != 0.0;
  if (has_inflow) {
    flownet::AbsorbResult absorbed =
        flownet::absorb_disturbance(net, spec.system.terminals, spec.system.disturbance);
    matching_state = absorbed.matching_state;
    net = std::move(absorbed.network);
  }

  flownet::TransformResult normalized = flownet::normalize_orientation(net);

  NetworkSpecFile out_spec;
  out_spec.system.mode = flownet::ControlMode::Constrained;
  out_spec.system.graph = normalized.network.graph;
  out_spec.system.constraints = normalized.network.constraints;
  out_spec.system.hamiltonian = spec.system.hamiltonian;
  out_spec.seed = spec.seed;
  if (spec.initial_state) {
    flownet::NetworkState state;
    state.x = spec.initial_state->x;
    std::vector<double> shifted = spec.initial_state->xc;
    for (size_t e = 0; e < shifted.size(); ++e)
      if (!matching_state.empty()) shifted[e] -= matching_state[e];
    state.xc = normalized.mapping.map_controller_state(shifted);
    out_spec.initial_state = std::move(state);
  }

  json doc;
  doc["schema_version"] = 1;
  doc["spec"] = flownet::spec_to_json(out_spec);
  doc["mapping"] = flownet::mapping_to_json(normalized.mapping);
  if (!matching_state.empty()) doc["matching_state"] = matching_state;
  write_text(out_path, doc.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Saturated flow-network control: static verdicts and simulation"};
  app.require_subcommand(1);

  std::string spec_path;
  std::string out_path;
  std::string format = "csv";
  std::string backend = "serial";
  std::string breakpoints_json;
  std::optional<std::uint64_t> seed;
  double horizon = 200.0;
  double step = 1e-3;
  int stride = 100;
  int rotation = 0;
  bool refine = false;
  bool augment = false;

  CLI::App* analyze = app.add_subcommand("analyze", "Static verdict for a network spec");
  analyze->add_option("--spec", spec_path, "network spec file")->required();
  analyze->add_option("--out", out_path, "write the report here instead of stdout");

  CLI::App* simulate = app.add_subcommand("simulate", "Integrate the closed loop");
  simulate->add_option("--spec", spec_path, "network spec file")->required();
  simulate->add_option("--out", out_path, "write the trajectory here instead of stdout");
  simulate->add_option("--seed", seed, "draw the initial state from this seed");
  simulate->add_option("--horizon", horizon, "integration horizon")->check(CLI::PositiveNumber);
  simulate->add_option("--step", step, "integrator step")->check(CLI::PositiveNumber);
  simulate->add_option("--stride", stride, "record every k-th step")->check(CLI::PositiveNumber);
  simulate->add_option("--backend", backend, "kernel backend")
      ->check(CLI::IsMember({"serial", "openmp"}));
  simulate->add_flag("--refine", refine, "halve the step until diagnostics pass");
  simulate->add_option("--format", format, "csv trajectory or report summary")
      ->check(CLI::IsMember({"csv", "report"}));

  CLI::App* cover = app.add_subcommand("cover", "Minimal cycle cover of the graph");
  cover->add_option("--spec", spec_path, "network spec file")->required();
  cover->add_option("--out", out_path, "write the cover here instead of stdout");
  cover->add_flag("--augment", augment, "also split edges along the cover");
  cover->add_option("--breakpoints", breakpoints_json,
                    "per-edge breakpoint arrays as inline JSON (default: equal spacing)");
  cover->add_option("--rotation", rotation, "tie-break rotation for alternative covers");

  CLI::App* normalize =
      app.add_subcommand("normalize", "Absorb terminal flows and normalize orientation");
  normalize->add_option("--spec", spec_path, "network spec file")->required();
  normalize->add_option("--out", out_path, "write the result here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (app.got_subcommand(analyze)) return cmd_analyze(spec_path, out_path);
    if (app.got_subcommand(simulate))
      return cmd_simulate(spec_path, out_path, seed, horizon, step, stride, backend, refine,
                          format);
    if (app.got_subcommand(cover))
      return cmd_cover(spec_path, out_path, augment, breakpoints_json, rotation);
    if (app.got_subcommand(normalize)) return cmd_normalize(spec_path, out_path);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 1;
}
