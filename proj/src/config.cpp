#include "pumpkit/config.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "pumpkit/errors.hpp"

namespace pumpkit::io {

using nlohmann::json;

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

std::string format_double(double x) {
  // shortest representation that round-trips exactly
  for (int prec = 1; prec <= 17; ++prec) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.*g", prec, x);
    if (std::stod(buf) == x) return buf;
  }
  return "nan";
}

// ---------------------------------------------------------------------------
// INI/TOML-like front end: "[section]" headers, "key = value" lines,
// '#' comments, scalar values (number / bool / "string") and flat arrays.

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

json parse_scalar(const std::string& raw, int line_no) {
  const std::string v = trim(raw);
  if (v.empty())
    throw ConfigError("config line " + std::to_string(line_no) +
                      ": empty value");
  if (v == "true") return true;
  if (v == "false") return false;
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"')
    return v.substr(1, v.size() - 2);
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) {
      // preserve integers so the canonical JSON stays type-stable
      if (d == static_cast<long long>(d) &&
          v.find_first_of(".eE") == std::string::npos)
        return static_cast<long long>(d);
      return d;
    }
  } catch (const std::exception&) {
  }
  throw ConfigError("config line " + std::to_string(line_no) +
                    ": cannot parse value '" + v + "'");
}

json parse_value(const std::string& raw, int line_no) {
  const std::string v = trim(raw);
  if (!v.empty() && v.front() == '[') {
    if (v.back() != ']')
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": unterminated array");
    json arr = json::array();
    const std::string body = v.substr(1, v.size() - 2);
    std::string item;
    std::istringstream is(body);
    while (std::getline(is, item, ','))
      if (!trim(item).empty()) arr.push_back(parse_scalar(item, line_no));
    return arr;
  }
  return parse_scalar(v, line_no);
}

json parse_ini(std::istream& in) {
  json root = json::object();
  std::string section;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line.erase(hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": empty section name");
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty() || section.empty())
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": key outside a [section]");
    root[section][key] = parse_value(line.substr(eq + 1), line_no);
  }
  return root;
}

void check_keys(const json& section, const std::string& name,
                const std::set<std::string>& allowed) {
  for (auto it = section.begin(); it != section.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError("unknown key '" + name + "." + it.key() + "'");
}

template <class T>
T get_or(const json& section, const std::string& key, T fallback) {
  if (!section.contains(key)) return fallback;
  return section.at(key).get<T>();
}

circuit::TubeConfig::Boundary boundary_from(const std::string& s) {
  if (s == "hold") return circuit::TubeConfig::Boundary::Hold;
  if (s == "mirror") return circuit::TubeConfig::Boundary::Mirror;
  throw ConfigError("ensemble.boundary must be 'hold' or 'mirror', got '" + s +
                    "'");
}

circuit::Engine engine_from(const std::string& s) {
  if (s == "pair") return circuit::Engine::PairRegistry;
  if (s == "statevector") return circuit::Engine::StateVector;
  throw ConfigError("ensemble.engine must be 'pair' or 'statevector', got '" +
                    s + "'");
}

circuit::Circuit circuit_from_json(const json& j) {
  circuit::Circuit circ;
  const json& layers = j.is_array() ? j : j.at("layers");
  for (const json& jl : layers) {
    circuit::Layer layer;
    if (jl.is_number()) {
      layer.alpha = jl.get<double>();
    } else {
      layer.alpha = jl.value("alpha", 1.0);
      if (jl.contains("bonds"))
        for (auto it = jl.at("bonds").begin(); it != jl.at("bonds").end(); ++it)
          layer.bond_alpha[std::stoi(it.key())] = it.value().get<double>();
    }
    circ.layers.push_back(std::move(layer));
  }
  if (j.is_object()) {
    if (j.contains("period_s")) circ.period_s = j.at("period_s").get<double>();
    if (j.contains("direction"))
      circ.direction = j.at("direction").get<int>();
  }
  return circ;
}

}  // namespace

circuit::Circuit load_circuit_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw MissingArtifactError("circuit file not found: " + path.string());
  try {
    return circuit_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw ConfigError("circuit file " + path.string() + ": " + e.what());
  }
}

ExperimentConfig config_from_json(const json& j,
                                  const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config root must be an object");
  static const std::set<std::string> sections{
      "lattice", "pump",  "solver",  "hubbard", "gates", "circuit",
      "sto",     "ensemble", "noise", "shuttle", "output"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!sections.count(it.key()))
      throw ConfigError("unknown config section '" + it.key() + "'");

  ExperimentConfig cfg;
  const json empty = json::object();
  auto sec = [&](const char* name) -> const json& {
    return j.contains(name) ? j.at(name) : empty;
  };

  try {
    const json& lat = sec("lattice");
    check_keys(lat, "lattice",
               {"v_x", "v_xint", "v_z", "i_xz", "theta", "lambda_m"});
    cfg.potential.V_X = get_or(lat, "v_x", 7.603);
    cfg.potential.V_Xint = get_or(lat, "v_xint", 0.261);
    cfg.potential.V_Z = get_or(lat, "v_z", 27.03);
    cfg.potential.I_XZ = get_or(lat, "i_xz", cfg.potential.I_XZ);
    cfg.potential.theta = get_or(lat, "theta", cfg.potential.theta);
    cfg.potential.lambda_m = get_or(lat, "lambda_m", cfg.potential.lambda_m);

    const json& pump = sec("pump");
    check_keys(pump, "pump", {"period_s", "phi0", "direction", "n_samples"});
    cfg.pump.period_s = get_or(pump, "period_s", cfg.pump.period_s);
    cfg.pump.phi0 = get_or(pump, "phi0", cfg.pump.phi0);
    cfg.pump.direction = get_or(pump, "direction", cfg.pump.direction);
    cfg.pump.n_samples = get_or(pump, "n_samples", cfg.pump.n_samples);

    const json& sol = sec("solver");
    check_keys(sol, "solver", {"max_harmonic", "n_q", "n_bands"});
    cfg.solver.max_harmonic = get_or(sol, "max_harmonic", cfg.solver.max_harmonic);
    cfg.solver.n_q = get_or(sol, "n_q", cfg.solver.n_q);
    cfg.solver.n_bands = get_or(sol, "n_bands", cfg.solver.n_bands);

    const json& hub = sec("hubbard");
    check_keys(hub, "hubbard", {"u"});
    cfg.hubbard_u = get_or(hub, "u", cfg.hubbard_u);

    const json& gat = sec("gates");
    check_keys(gat, "gates",
               {"delta_updown_hz", "vx_lo", "vx_hi", "vx_points",
                "period_lo_factor", "period_hi_factor", "period_points",
                "targets"});
    cfg.delta_updown_hz = get_or(gat, "delta_updown_hz", cfg.delta_updown_hz);
    cfg.gate_scan.vx_lo = get_or(gat, "vx_lo", cfg.gate_scan.vx_lo);
    cfg.gate_scan.vx_hi = get_or(gat, "vx_hi", cfg.gate_scan.vx_hi);
    cfg.gate_scan.vx_points = get_or(gat, "vx_points", cfg.gate_scan.vx_points);
    cfg.gate_scan.period_lo_factor =
        get_or(gat, "period_lo_factor", cfg.gate_scan.period_lo_factor);
    cfg.gate_scan.period_hi_factor =
        get_or(gat, "period_hi_factor", cfg.gate_scan.period_hi_factor);
    cfg.gate_scan.period_points =
        get_or(gat, "period_points", cfg.gate_scan.period_points);
    if (gat.contains("targets"))
      cfg.gate_scan.targets = gat.at("targets").get<std::vector<double>>();

    const json& cir = sec("circuit");
    check_keys(cir, "circuit", {"alphas", "file", "layers", "period_s",
                                "direction"});
    if (cir.contains("file")) {
      cfg.circ = load_circuit_file(base_dir / cir.at("file").get<std::string>());
    } else if (cir.contains("layers")) {
      cfg.circ = circuit_from_json(cir);
    } else if (cir.contains("alphas")) {
      cfg.circ =
          circuit::Circuit::uniform(cir.at("alphas").get<std::vector<double>>());
    } else {
      cfg.circ = circuit::Circuit::uniform({1.0});
    }
    cfg.circ.period_s = get_or(cir, "period_s", cfg.pump.period_s);
    cfg.circ.direction = get_or(cir, "direction", cfg.pump.direction);

    const json& sto = sec("sto");
    check_keys(sto, "sto", {"f1_hz", "tau_max_s", "n_tau"});
    cfg.sto.f1_hz = get_or(sto, "f1_hz", cfg.sto.f1_hz);
    cfg.tau_max_s = get_or(sto, "tau_max_s", cfg.tau_max_s);
    cfg.n_tau = get_or(sto, "n_tau", cfg.n_tau);
    if (cfg.n_tau < 1) throw ConfigError("sto.n_tau must be >= 1");
    if (cfg.tau_max_s <= 0.0) throw ConfigError("sto.tau_max_s must be > 0");
    cfg.sto.tau_s.clear();
    for (int k = 0; k < cfg.n_tau; ++k)
      cfg.sto.tau_s.push_back(cfg.n_tau == 1 ? 0.0
                                             : cfg.tau_max_s * k /
                                                   (cfg.n_tau - 1));

    const json& ens = sec("ensemble");
    check_keys(ens, "ensemble",
               {"n_tubes", "n_cells", "filling", "seed", "boundary",
                "edge_margin_cells", "singles_fraction", "engine"});
    cfg.n_tubes = get_or(ens, "n_tubes", cfg.n_tubes);
    cfg.tube.n_cells = get_or(ens, "n_cells", cfg.tube.n_cells);
    cfg.tube.filling = get_or(ens, "filling", cfg.tube.filling);
    cfg.tube.seed = get_or(ens, "seed", cfg.tube.seed);
    cfg.tube.boundary = boundary_from(get_or<std::string>(ens, "boundary", "hold"));
    cfg.tube.edge_margin_cells =
        get_or(ens, "edge_margin_cells", cfg.tube.edge_margin_cells);
    cfg.tube.singles_fraction =
        get_or(ens, "singles_fraction", cfg.tube.singles_fraction);
    cfg.engine = engine_from(get_or<std::string>(ens, "engine", "pair"));

    const json& noi = sec("noise");
    check_keys(noi, "noise", {"alpha_sigma", "survival"});
    cfg.noise.alpha_sigma = get_or(noi, "alpha_sigma", cfg.noise.alpha_sigma);
    cfg.noise.survival = get_or(noi, "survival", cfg.noise.survival);

    const json& shu = sec("shuttle");
    check_keys(shu, "shuttle",
               {"enabled", "survival", "n_cyc", "reversal_cycle"});
    cfg.shuttle.enabled = get_or(shu, "enabled", cfg.shuttle.enabled);
    cfg.shuttle.survival = get_or(shu, "survival", cfg.shuttle.survival);
    cfg.shuttle.n_cyc = get_or(shu, "n_cyc", cfg.shuttle.n_cyc);
    cfg.shuttle.reversal_cycle =
        get_or(shu, "reversal_cycle", cfg.shuttle.reversal_cycle);

    const json& out = sec("output");
    check_keys(out, "output", {"dir"});
    cfg.out_dir = get_or<std::string>(out, "dir", cfg.out_dir.string());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config value: ") + e.what());
  }

  // fail fast on inconsistent physics inputs
  cfg.potential.validate();
  cfg.pump.validate();
  cfg.tube.validate();
  cfg.noise.validate();
  cfg.sto.validate();
  if (cfg.hubbard_u <= 0.0) throw ConfigError("hubbard.u must be > 0");
  if (cfg.n_tubes < 1) throw ConfigError("ensemble.n_tubes must be >= 1");
  if (cfg.circ.depth() < 1) throw ConfigError("circuit must have >= 1 layer");
  return cfg;
}

json ExperimentConfig::canonical() const {
  json j;
  j["lattice"] = {{"v_x", potential.V_X},     {"v_xint", potential.V_Xint},
                  {"v_z", potential.V_Z},     {"i_xz", potential.I_XZ},
                  {"theta", potential.theta}, {"lambda_m", potential.lambda_m}};
  j["pump"] = {{"period_s", pump.period_s},
               {"phi0", pump.phi0},
               {"direction", pump.direction},
               {"n_samples", pump.n_samples}};
  j["solver"] = {{"max_harmonic", solver.max_harmonic},
                 {"n_q", solver.n_q},
                 {"n_bands", solver.n_bands}};
  j["hubbard"] = {{"u", hubbard_u}};
  j["gates"] = {{"delta_updown_hz", delta_updown_hz},
                {"vx_lo", gate_scan.vx_lo},
                {"vx_hi", gate_scan.vx_hi},
                {"vx_points", gate_scan.vx_points},
                {"period_lo_factor", gate_scan.period_lo_factor},
                {"period_hi_factor", gate_scan.period_hi_factor},
                {"period_points", gate_scan.period_points},
                {"targets", gate_scan.targets}};
  json layers = json::array();
  for (const circuit::Layer& l : circ.layers) {
    json jl = {{"alpha", l.alpha}};
    if (!l.bond_alpha.empty()) {
      json bonds = json::object();
      for (auto [site, a] : l.bond_alpha) bonds[std::to_string(site)] = a;
      jl["bonds"] = bonds;
    }
    layers.push_back(jl);
  }
  j["circuit"] = {{"layers", layers},
                  {"period_s", circ.period_s},
                  {"direction", circ.direction}};
  j["sto"] = {{"f1_hz", sto.f1_hz},
              {"tau_max_s", tau_max_s},
              {"n_tau", n_tau}};
  j["ensemble"] = {
      {"n_tubes", n_tubes},
      {"n_cells", tube.n_cells},
      {"filling", tube.filling},
      {"seed", tube.seed},
      {"boundary",
       tube.boundary == circuit::TubeConfig::Boundary::Hold ? "hold" : "mirror"},
      {"edge_margin_cells", tube.edge_margin_cells},
      {"singles_fraction", tube.singles_fraction},
      {"engine", engine == circuit::Engine::PairRegistry ? "pair"
                                                         : "statevector"}};
  j["noise"] = {{"alpha_sigma", noise.alpha_sigma},
                {"survival", noise.survival}};
  j["shuttle"] = {{"enabled", shuttle.enabled},
                  {"survival", shuttle.survival},
                  {"n_cyc", shuttle.n_cyc},
                  {"reversal_cycle", shuttle.reversal_cycle}};
  j["output"] = {{"dir", out_dir.string()}};
  return j;
}

ExperimentConfig load_config(const std::filesystem::path& path,
                             std::optional<std::uint64_t> seed_override,
                             std::optional<std::string> out_override) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not found: " + path.string());
  json j;
  if (path.extension() == ".json") {
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError("config file " + path.string() + ": " + e.what());
    }
  } else {
    j = parse_ini(in);
  }
  ExperimentConfig cfg = config_from_json(j, path.parent_path());
  if (seed_override) cfg.tube.seed = *seed_override;
  if (out_override) cfg.out_dir = *out_override;
  cfg.hash = fnv1a(cfg.canonical().dump());
  return cfg;
}

// ---------------------------------------------------------------------------
// trace CSV

void write_trace_csv(const std::filesystem::path& path,
                     const circuit::TimeTrace& trace,
                     std::uint64_t config_hash) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "# pumpkit " << kVersion << "\n";
  out << "# config_hash=" << hash_hex(config_hash) << "\n";
  out << "# f1_hz=" << format_double(trace.f1_hz) << "\n";
  out << "# seed=" << trace.seed << "\n";
  if (!trace.metadata.empty()) out << "# " << trace.metadata << "\n";
  out << "tau_s,value,stderr\n";
  for (std::size_t k = 0; k < trace.tau_s.size(); ++k) {
    out << format_double(trace.tau_s[k]) << ','
        << format_double(trace.value[k]) << ','
        << format_double(k < trace.stderr_value.size() ? trace.stderr_value[k]
                                                       : 0.0)
        << '\n';
  }
}

circuit::TimeTrace read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("trace file not found: " + path.string());
  circuit::TimeTrace trace;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto grab = [&](const std::string& key) -> std::optional<std::string> {
        const std::string tag = key + "=";
        const std::size_t pos = line.find(tag);
        if (pos == std::string::npos) return std::nullopt;
        return trim(line.substr(pos + tag.size()));
      };
      if (auto v = grab("f1_hz")) trace.f1_hz = std::stod(*v);
      if (auto v = grab("seed")) trace.seed = std::stoull(*v);
      continue;
    }
    if (line.rfind("tau_s", 0) == 0) continue;  // header row
    std::istringstream is(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(is, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                          ": malformed CSV cell '" + cell + "'");
      }
    }
    if (row.size() < 2)
      throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                        ": expected tau_s,value[,stderr]");
    trace.tau_s.push_back(row[0]);
    trace.value.push_back(row[1]);
    trace.stderr_value.push_back(row.size() > 2 ? row[2] : 0.0);
  }
  if (trace.tau_s.empty())
    throw InsufficientDataError("trace file has no samples: " + path.string());
  return trace;
}

}  // namespace pumpkit::io
