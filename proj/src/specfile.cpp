#include "flownet/specfile.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <random>
#include <stdexcept>

#include "flownet/errors.hpp"

namespace flownet {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& origin, const std::string& path,
                       const std::string& message) {
  throw SpecParseError(origin + ": " + path + ": " + message);
}

const json* find(const json& obj, const char* key) {
  if (!obj.is_object()) return nullptr;
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

const json& require(const json& obj, const char* key, const std::string& origin,
                    const std::string& path) {
  const json* v = find(obj, key);
  if (v == nullptr) fail(origin, path.empty() ? key : path + "." + key, "missing required field");
  return *v;
}

double as_number(const json& v, const std::string& origin, const std::string& path) {
  if (!v.is_number()) fail(origin, path, "expected a number");
  return v.get<double>();
}

int as_int(const json& v, const std::string& origin, const std::string& path) {
  if (!v.is_number_integer()) fail(origin, path, "expected an integer");
  return v.get<int>();
}

std::vector<double> as_number_array(const json& v, const std::string& origin,
                                    const std::string& path) {
  if (!v.is_array()) fail(origin, path, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (size_t i = 0; i < v.size(); ++i)
    out.push_back(as_number(v[i], origin, path + "[" + std::to_string(i) + "]"));
  return out;
}

// Named storage functions available to spec files. All are strictly convex
// with globally invertible gradients.
Hamiltonian named_hamiltonian(const std::string& name, int n, const std::string& origin,
                              const std::string& path) {
  Hamiltonian::Potential p;
  if (name == "cosh") {
    p.value = [](double x) { return std::cosh(x) - 1.0; };
    p.grad = [](double x) { return std::sinh(x); };
  } else if (name == "quartic") {
    p.value = [](double x) { return 0.25 * x * x * x * x + 0.5 * x * x; };
    p.grad = [](double x) { return x * x * x + x; };
  } else {
    fail(origin, path, "unknown storage function '" + name + "' (available: cosh, quartic)");
  }
  return Hamiltonian::custom(
      std::vector<Hamiltonian::Potential>(static_cast<size_t>(n), p), name);
}

}  // namespace

NetworkSpecFile parse_spec_json(const json& doc, const std::string& origin) {
  if (!doc.is_object()) fail(origin, "$", "spec must be a JSON object");

  NetworkSpecFile spec;
  if (const json* v = find(doc, "version")) {
    spec.version = as_int(*v, origin, "version");
    if (spec.version != 1)
      fail(origin, "version", "unsupported schema version " + std::to_string(spec.version));
  }

  const json& mode = require(doc, "mode", origin, "");
  if (!mode.is_string()) fail(origin, "mode", "expected \"constrained\" or \"unconstrained\"");
  const std::string mode_name = mode.get<std::string>();
  if (mode_name == "constrained")
    spec.system.mode = ControlMode::Constrained;
  else if (mode_name == "unconstrained")
    spec.system.mode = ControlMode::Unconstrained;
  else
    fail(origin, "mode", "expected \"constrained\" or \"unconstrained\", got \"" + mode_name +
                             "\"");

  const int n = as_int(require(doc, "vertices", origin, ""), origin, "vertices");
  if (n < 0) fail(origin, "vertices", "vertex count must be nonnegative");

  const json& edges = require(doc, "edges", origin, "");
  if (!edges.is_array()) fail(origin, "edges", "expected an array of edge records");
  std::vector<Edge> edge_list;
  std::vector<FlowConstraint> constraints;
  for (size_t j = 0; j < edges.size(); ++j) {
    const std::string path = "edges[" + std::to_string(j) + "]";
    const json& rec = edges[j];
    if (!rec.is_object()) fail(origin, path, "expected an edge object");
    Edge e;
    e.tail = as_int(require(rec, "tail", origin, path), origin, path + ".tail");
    e.head = as_int(require(rec, "head", origin, path), origin, path + ".head");
    edge_list.push_back(e);
    const bool has_interval = find(rec, "lo") != nullptr || find(rec, "hi") != nullptr;
    if (spec.system.mode == ControlMode::Constrained) {
      FlowConstraint c;
      c.lo = as_number(require(rec, "lo", origin, path), origin, path + ".lo");
      c.hi = as_number(require(rec, "hi", origin, path), origin, path + ".hi");
      try {
        validate_constraint(c);
      } catch (const std::exception& ex) {
        fail(origin, path, ex.what());
      }
      constraints.push_back(c);
    } else if (has_interval) {
      fail(origin, path, "flow intervals are only valid in constrained mode");
    }
  }

  try {
    spec.system.graph = DirectedGraph(n, std::move(edge_list));
  } catch (const std::exception& ex) {
    fail(origin, "edges", ex.what());
  }
  spec.system.constraints = std::move(constraints);

  if (const json* v = find(doc, "terminals")) {
    if (!v->is_array()) fail(origin, "terminals", "expected an array of terminal records");
    std::vector<TerminalColumn> columns;
    for (size_t j = 0; j < v->size(); ++j) {
      const std::string path = "terminals[" + std::to_string(j) + "]";
      const json& rec = (*v)[j];
      if (!rec.is_object()) fail(origin, path, "expected a terminal object");
      TerminalColumn col;
      col.vertex = as_int(require(rec, "vertex", origin, path), origin, path + ".vertex");
      col.sign = as_int(require(rec, "sign", origin, path), origin, path + ".sign");
      columns.push_back(col);
    }
    try {
      spec.system.terminals = TerminalPattern(std::move(columns));
    } catch (const std::exception& ex) {
      fail(origin, "terminals", ex.what());
    }
  }

  if (const json* v = find(doc, "disturbance"))
    spec.system.disturbance = as_number_array(*v, origin, "disturbance");
  else
    spec.system.disturbance.assign(
        static_cast<size_t>(spec.system.terminals.terminal_count()), 0.0);

  if (const json* v = find(doc, "hamiltonian")) {
    const json& type_field = require(*v, "type", origin, "hamiltonian");
    if (!type_field.is_string()) fail(origin, "hamiltonian.type", "expected a string");
    const std::string type = type_field.get<std::string>();
    if (type == "quadratic") {
      if (const json* w = find(*v, "weights")) {
        std::vector<double> weights = as_number_array(*w, origin, "hamiltonian.weights");
        try {
          spec.system.hamiltonian = Hamiltonian::quadratic(std::move(weights));
        } catch (const std::exception& ex) {
          fail(origin, "hamiltonian.weights", ex.what());
        }
      } else {
        spec.system.hamiltonian = Hamiltonian::quadratic_identity(n);
      }
    } else if (type == "custom") {
      const json& name = require(*v, "name", origin, "hamiltonian");
      if (!name.is_string()) fail(origin, "hamiltonian.name", "expected a string");
      spec.system.hamiltonian =
          named_hamiltonian(name.get<std::string>(), n, origin, "hamiltonian.name");
    } else {
      fail(origin, "hamiltonian.type", "expected \"quadratic\" or \"custom\"");
    }
  } else {
    spec.system.hamiltonian = Hamiltonian::quadratic_identity(n);
  }

  if (const json* v = find(doc, "gain")) {
    if (spec.system.mode != ControlMode::Unconstrained)
      fail(origin, "gain", "gains are only valid in unconstrained mode");
    spec.system.gain = as_number_array(*v, origin, "gain");
  }

  if (const json* v = find(doc, "initial_state")) {
    NetworkState state;
    state.x = as_number_array(require(*v, "x", origin, "initial_state"), origin,
                              "initial_state.x");
    state.xc = as_number_array(require(*v, "xc", origin, "initial_state"), origin,
                               "initial_state.xc");
    if (static_cast<int>(state.x.size()) != n)
      fail(origin, "initial_state.x", "expected " + std::to_string(n) + " entries");
    if (static_cast<int>(state.xc.size()) != spec.system.graph.edge_count())
      fail(origin, "initial_state.xc",
           "expected " + std::to_string(spec.system.graph.edge_count()) + " entries");
    spec.initial_state = std::move(state);
  }

  if (const json* v = find(doc, "seed")) {
    if (!v->is_number_unsigned() && !v->is_number_integer())
      fail(origin, "seed", "expected a nonnegative integer");
    if (v->is_number_integer() && v->get<long long>() < 0)
      fail(origin, "seed", "expected a nonnegative integer");
    spec.seed = v->get<std::uint64_t>();
  }

  try {
    spec.system.validate();
  } catch (const std::exception& ex) {
    fail(origin, "$", ex.what());
  }
  return spec;
}

NetworkSpecFile parse_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecParseError(path + ": cannot open file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& ex) {
    throw SpecParseError(path + ": " + ex.what());
  }
  return parse_spec_json(doc, path);
}

json spec_to_json(const NetworkSpecFile& spec) {
  json doc;
  doc["version"] = spec.version;
  doc["mode"] =
      spec.system.mode == ControlMode::Constrained ? "constrained" : "unconstrained";
  doc["vertices"] = spec.system.graph.vertex_count();
  json edges = json::array();
  for (int j = 0; j < spec.system.graph.edge_count(); ++j) {
    json rec;
    rec["tail"] = spec.system.graph.edge(j).tail;
    rec["head"] = spec.system.graph.edge(j).head;
    if (spec.system.mode == ControlMode::Constrained) {
      rec["lo"] = spec.system.constraints[static_cast<size_t>(j)].lo;
      rec["hi"] = spec.system.constraints[static_cast<size_t>(j)].hi;
    }
    edges.push_back(std::move(rec));
  }
  doc["edges"] = std::move(edges);

  if (!spec.system.terminals.empty()) {
    json terminals = json::array();
    for (const TerminalColumn& col : spec.system.terminals.columns())
      terminals.push_back({{"vertex", col.vertex}, {"sign", col.sign}});
    doc["terminals"] = std::move(terminals);
    doc["disturbance"] = spec.system.disturbance;
  }

  if (spec.system.hamiltonian.quadratic_form()) {
    doc["hamiltonian"] = {{"type", "quadratic"},
                          {"weights", spec.system.hamiltonian.weights()}};
  } else {
    doc["hamiltonian"] = {{"type", "custom"}, {"name", spec.system.hamiltonian.label()}};
  }

  if (!spec.system.gain.empty()) doc["gain"] = spec.system.gain;
  if (spec.initial_state) {
    doc["initial_state"] = {{"x", spec.initial_state->x}, {"xc", spec.initial_state->xc}};
  }
  if (spec.seed) doc["seed"] = *spec.seed;
  return doc;
}

NetworkState resolve_initial_state(const NetworkSpecFile& spec,
                                   std::optional<std::uint64_t> seed_override) {
  if (spec.initial_state && !seed_override) return *spec.initial_state;
  const std::uint64_t seed = seed_override ? *seed_override : spec.seed.value_or(0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  NetworkState state;
  state.x.resize(static_cast<size_t>(spec.system.graph.vertex_count()));
  state.xc.resize(static_cast<size_t>(spec.system.graph.edge_count()));
  for (double& v : state.x) v = uniform(rng);
  for (double& v : state.xc) v = uniform(rng);
  return state;
}

json mapping_to_json(const EdgeMapping& mapping) {
  json doc;
  doc["original_edges"] = mapping.original_edge_count();
  doc["target_edges"] = mapping.target_edge_count();
  json images = json::array();
  for (int e = 0; e < mapping.original_edge_count(); ++e) {
    json list = json::array();
    for (const EdgeImage& im : mapping.images_of(e))
      list.push_back({{"target", im.target}, {"sign", im.sign}, {"offset", im.offset}});
    images.push_back(std::move(list));
  }
  doc["images"] = std::move(images);
  return doc;
}

json cover_to_json(const CycleCover& cover) {
  json doc;
  json cycles = json::array();
  for (const DirectedCycle& c : cover.cycles) cycles.push_back(c.edge_ids);
  doc["cycles"] = std::move(cycles);
  doc["multiplicity"] = cover.multiplicity;
  return doc;
}

json certificate_to_json(const ConsensusCertificate& cert) {
  json doc;
  doc["cover"] = cover_to_json(cert.cover);
  doc["breakpoints"] = cert.breakpoints;
  doc["copy_assignment"] = cert.copy_assignment;
  json intersections = json::array();
  for (const Interval& iv : cert.cycle_intersections)
    intersections.push_back({{"lo", iv.lo}, {"hi", iv.hi}});
  doc["cycle_intersections"] = std::move(intersections);
  doc["min_width"] = cert.min_width;
  return doc;
}

json network_to_json(const ConstrainedNetwork& net) {
  json doc;
  doc["vertices"] = net.graph.vertex_count();
  json edges = json::array();
  for (int j = 0; j < net.graph.edge_count(); ++j) {
    edges.push_back({{"tail", net.graph.edge(j).tail},
                     {"head", net.graph.edge(j).head},
                     {"lo", net.constraints[static_cast<size_t>(j)].lo},
                     {"hi", net.constraints[static_cast<size_t>(j)].hi}});
  }
  doc["edges"] = std::move(edges);
  return doc;
}

json report_to_json(const StaticReport& report) {
  json doc;
  doc["schema_version"] = 1;
  doc["verdict"] = verdict_name(report.verdict);
  doc["exact"] = report.exact;
  doc["detail"] = report.detail;
  doc["weakly_connected"] = report.weak.connected;
  doc["weak_components"] = report.weak.component_count;
  doc["strongly_connected"] = report.strongly_connected;
  if (!report.matching_state.empty()) doc["matching_state"] = report.matching_state;
  if (report.normalized) doc["normalized_network"] = network_to_json(*report.normalized);
  if (report.mapping) doc["edge_mapping"] = mapping_to_json(*report.mapping);
  if (report.cycle_verdict) {
    doc["cycle"] = {{"classification", cycle_class_name(report.cycle_verdict->classification)},
                    {"lo", report.cycle_verdict->lo},
                    {"hi", report.cycle_verdict->hi},
                    {"boundary", report.cycle_verdict->boundary}};
  }
  if (report.certificate) doc["certificate"] = certificate_to_json(*report.certificate);
  doc["covers_tried"] = report.covers_tried;
  doc["assignments_tried"] = report.assignments_tried;
  return doc;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const CsvMetadata& meta) {
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::string(buf);
  };

  out << "# step=" << num(meta.step) << " horizon=" << num(meta.horizon)
      << " stride=" << meta.stride << "\n";
  if (meta.seed) out << "# seed=" << *meta.seed << "\n";
  if (!traj.failure.empty()) out << "# failure=" << traj.failure << "\n";

  out << "t";
  for (int i = 0; i < traj.vertex_count; ++i) out << ",x_" << i;
  for (int e = 0; e < traj.edge_count; ++e) out << ",xc_" << e;
  for (int e = 0; e < traj.edge_count; ++e) out << ",u_" << e;
  out << ",V,sum_x\n";

  for (size_t k = 0; k < traj.times.size(); ++k) {
    out << num(traj.times[k]);
    for (double v : traj.x[k]) out << "," << num(v);
    for (double v : traj.xc[k]) out << "," << num(v);
    for (double v : traj.u[k]) out << "," << num(v);
    out << "," << num(traj.lyapunov[k]) << "," << num(traj.storage_sum[k]) << "\n";
  }
}

}  // namespace flownet
