#include "nullcone/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace nullcone {

namespace {

using nlohmann::json;

json yaml_to_json(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Null:
      return nullptr;
    case YAML::NodeType::Scalar: {
      long long i;
      if (YAML::convert<long long>::decode(node, i)) return i;
      double d;
      if (YAML::convert<double>::decode(node, d)) return d;
      bool b;
      if (YAML::convert<bool>::decode(node, b)) return b;
      return node.as<std::string>();
    }
    case YAML::NodeType::Sequence: {
      json arr = json::array();
      for (const auto& child : node) arr.push_back(yaml_to_json(child));
      return arr;
    }
    case YAML::NodeType::Map: {
      json obj = json::object();
      for (const auto& kv : node)
        obj[kv.first.as<std::string>()] = yaml_to_json(kv.second);
      return obj;
    }
    default:
      throw Error(ErrorCode::ScenarioInvalid, "unsupported YAML node type");
  }
}

double num(const json& j, const char* key) {
  if (!j.at(key).is_number())
    throw Error(ErrorCode::ScenarioInvalid,
                std::string("expected number for ") + key);
  return j.at(key).get<double>();
}

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const char* where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw Error(ErrorCode::ScenarioInvalid,
                  std::string("unknown key '") + it.key() + "' in " + where);
}

void fill_params(const json& j, FamilyParams& p) {
  check_keys(j,
             {"lapse", "period", "amplitude", "width", "center", "omega",
              "z_extent", "contraction_rate"},
             "params");
  if (j.contains("lapse")) p.lapse = num(j, "lapse");
  if (j.contains("period")) p.period = num(j, "period");
  if (j.contains("amplitude")) p.amplitude = num(j, "amplitude");
  if (j.contains("width")) p.width = num(j, "width");
  if (j.contains("omega")) p.omega = num(j, "omega");
  if (j.contains("z_extent")) p.z_extent = num(j, "z_extent");
  if (j.contains("contraction_rate"))
    p.contraction_rate = num(j, "contraction_rate");
  if (j.contains("center")) {
    const json& c = j.at("center");
    if (!c.is_array() || c.size() != 3)
      throw Error(ErrorCode::ScenarioInvalid, "center needs 3 entries");
    for (int i = 0; i < 3; ++i) p.center[i] = c.at(i).get<double>();
  }
}

void fill_budget(const json& j, Budget& b) {
  check_keys(j,
             {"N0", "K0", "R0", "I0", "rho0", "epsilon", "r0", "delta_star",
              "delta0", "epsilon0", "varpi", "time_lo", "time_hi",
              "c_gronwall"},
             "budget");
  if (j.contains("N0")) b.N0 = num(j, "N0");
  if (j.contains("K0")) b.K0 = num(j, "K0");
  if (j.contains("R0")) b.R0 = num(j, "R0");
  if (j.contains("I0")) b.I0 = num(j, "I0");
  if (j.contains("rho0")) b.rho0 = num(j, "rho0");
  if (j.contains("epsilon")) b.epsilon = num(j, "epsilon");
  if (j.contains("r0")) b.r0 = num(j, "r0");
  if (j.contains("delta_star")) b.delta_star = num(j, "delta_star");
  if (j.contains("delta0")) b.delta0 = num(j, "delta0");
  if (j.contains("epsilon0")) b.epsilon0 = num(j, "epsilon0");
  if (j.contains("varpi")) b.varpi = num(j, "varpi");
  if (j.contains("time_lo")) b.time_lo = num(j, "time_lo");
  if (j.contains("time_hi")) b.time_hi = num(j, "time_hi");
  if (j.contains("c_gronwall")) b.c_gronwall = num(j, "c_gronwall");
}

Scenario from_json(const json& j) {
  Scenario sc;
  check_keys(j,
             {"name", "family", "params", "provider", "fd_step", "budget",
              "base_points", "grid_level", "s_max", "t_levels",
              "delta_ladder", "i_star_estimate", "match_tol", "eps_inclusion",
              "slice_resolution", "slice_box", "energy_t_lo", "energy_t_hi",
              "energy_t_steps", "rho", "out_dir", "seed", "workers"},
             "scenario");
  if (!j.contains("name") || !j.at("name").is_string())
    throw Error(ErrorCode::ScenarioInvalid, "scenario needs a string name");
  sc.name = j.at("name").get<std::string>();
  if (j.contains("family")) sc.family = j.at("family").get<std::string>();
  if (j.contains("params")) fill_params(j.at("params"), sc.params);
  if (j.contains("provider")) {
    std::string p = j.at("provider").get<std::string>();
    if (p == "analytic")
      sc.provider = JetProvider::kAnalytic;
    else if (p == "fd")
      sc.provider = JetProvider::kFiniteDifference;
    else
      throw Error(ErrorCode::ScenarioInvalid,
                  "provider must be 'analytic' or 'fd'");
  }
  if (j.contains("fd_step")) sc.fd_step = num(j, "fd_step");
  if (j.contains("budget")) fill_budget(j.at("budget"), sc.budget);
  if (j.contains("base_points")) {
    for (const json& bp : j.at("base_points")) {
      check_keys(bp, {"chart", "x"}, "base point");
      SpacetimePoint p;
      if (bp.contains("chart")) p.chart = bp.at("chart").get<int>();
      const json& x = bp.at("x");
      if (!x.is_array() || x.size() != 4)
        throw Error(ErrorCode::ScenarioInvalid, "base point x needs 4 entries");
      for (int i = 0; i < 4; ++i) p.x[i] = x.at(i).get<double>();
      sc.base_points.push_back(p);
    }
  }
  if (j.contains("grid_level")) sc.grid_level = j.at("grid_level").get<int>();
  if (j.contains("s_max")) sc.s_max = num(j, "s_max");
  if (j.contains("t_levels"))
    for (const json& t : j.at("t_levels")) sc.t_levels.push_back(t.get<double>());
  if (j.contains("delta_ladder"))
    for (const json& d : j.at("delta_ladder"))
      sc.delta_ladder.push_back(d.get<double>());
  if (j.contains("i_star_estimate"))
    sc.i_star_estimate = num(j, "i_star_estimate");
  if (j.contains("match_tol")) sc.match_tol = num(j, "match_tol");
  if (j.contains("eps_inclusion")) sc.eps_inclusion = num(j, "eps_inclusion");
  if (j.contains("slice_resolution"))
    sc.slice_resolution = j.at("slice_resolution").get<int>();
  if (j.contains("slice_box")) {
    const json& b = j.at("slice_box");
    if (!b.is_array() || b.size() != 3)
      throw Error(ErrorCode::ScenarioInvalid, "slice_box needs 3 axis pairs");
    std::array<Interval, 3> box;
    for (int a = 0; a < 3; ++a) {
      if (!b.at(a).is_array() || b.at(a).size() != 2)
        throw Error(ErrorCode::ScenarioInvalid, "slice_box axis needs [lo, hi]");
      box[a] = {b.at(a).at(0).get<double>(), b.at(a).at(1).get<double>()};
    }
    sc.slice_box = box;
  }
  if (j.contains("energy_t_lo")) sc.energy_t_lo = num(j, "energy_t_lo");
  if (j.contains("energy_t_hi")) sc.energy_t_hi = num(j, "energy_t_hi");
  if (j.contains("energy_t_steps"))
    sc.energy_t_steps = j.at("energy_t_steps").get<int>();
  if (j.contains("rho")) sc.rho = num(j, "rho");
  if (j.contains("out_dir")) sc.out_dir = j.at("out_dir").get<std::string>();
  if (j.contains("seed")) sc.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("workers")) sc.workers = j.at("workers").get<int>();
  sc.validate();
  return sc;
}

}  // namespace

void Scenario::validate() const {
  if (name.empty())
    throw Error(ErrorCode::ScenarioInvalid, "scenario name is empty");
  static const std::set<std::string> families = {
      "minkowski",           "flat_torus",       "torus_lapse_bump",
      "minkowski_lapse_bump", "spherical_cylinder", "exp_contracting",
      "torus_wave"};
  if (!families.count(family))
    throw Error(ErrorCode::ScenarioInvalid, "unknown family '" + family + "'");
  if (grid_level < 0 || grid_level > 7)
    throw Error(ErrorCode::LevelOutOfRange, "grid_level must be in [0, 7]");
  if (!(s_max > 0.0))
    throw Error(ErrorCode::ScenarioInvalid, "s_max must be positive");
  if (!(fd_step > 0.0))
    throw Error(ErrorCode::ScenarioInvalid, "fd_step must be positive");
  if (!(match_tol > 0.0))
    throw Error(ErrorCode::ScenarioInvalid, "match_tol must be positive");
  if (!(rho > 0.0))
    throw Error(ErrorCode::ScenarioInvalid, "rho must be positive");
  if (slice_resolution < 2)
    throw Error(ErrorCode::ScenarioInvalid, "slice_resolution too small");
  if (energy_t_steps < 1)
    throw Error(ErrorCode::ScenarioInvalid, "energy_t_steps must be >= 1");
  if (workers < 0)
    throw Error(ErrorCode::ScenarioInvalid, "workers must be >= 0");
  budget.validate();
  for (double d : delta_ladder)
    if (!(d > 0.0))
      throw Error(ErrorCode::ScenarioInvalid, "delta ladder entries positive");
  for (std::size_t i = 1; i < delta_ladder.size(); ++i)
    if (delta_ladder[i] <= delta_ladder[i - 1])
      throw Error(ErrorCode::ScenarioInvalid,
                  "delta ladder must be strictly increasing");
}

Scenario parse_scenario(const std::string& text, bool json_input) {
  json j;
  if (json_input) {
    j = json::parse(text, nullptr, false);
    if (j.is_discarded())
      throw Error(ErrorCode::ScenarioInvalid, "JSON parse failure");
  } else {
    try {
      j = yaml_to_json(YAML::Load(text));
    } catch (const YAML::Exception& e) {
      throw Error(ErrorCode::ScenarioInvalid,
                  std::string("YAML parse failure: ") + e.what());
    }
  }
  if (!j.is_object())
    throw Error(ErrorCode::ScenarioInvalid, "scenario root must be a map");
  Scenario sc;
  try {
    sc = from_json(j);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ScenarioInvalid,
                std::string("scenario field type mismatch: ") + e.what());
  }
  sc.raw_text = text;
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorCode::ScenarioInvalid, "cannot open scenario " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  bool json_input = path.size() > 5 && path.substr(path.size() - 5) == ".json";
  return parse_scenario(ss.str(), json_input);
}

std::shared_ptr<const MetricField> scenario_field(const Scenario& sc) {
  std::shared_ptr<const MetricField> base = make_field(sc.family, sc.params);
  if (sc.provider == JetProvider::kAnalytic) return base;
  return finite_difference_provider(base, sc.fd_step);
}

std::uint64_t scenario_hash(const Scenario& sc) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : sc.raw_text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace nullcone
