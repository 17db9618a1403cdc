#include "ddlambda/config.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace ddlambda {

using json = nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) { throw ConfigError(path + ": " + what); }

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(path, "expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) fail(path + "." + it.key(), "unknown key");
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "must be finite");
  return v;
}

double get_angle(const json& j, const std::string& path) {
  if (j.is_string()) {
    try {
      return parse_angle(j.get<std::string>());
    } catch (const std::invalid_argument& e) {
      fail(path, e.what());
    }
  }
  if (!j.is_number()) fail(path, "expected an angle (number or string like \"pi/2\")");
  return get_number(j, path);
}

int get_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<int>();
}

std::size_t get_size(const json& j, const std::string& path) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0))
    fail(path, "expected a non-negative integer");
  return j.get<std::size_t>();
}

std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

bool get_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected true or false");
  return j.get<bool>();
}

// Assigns field from j[key] when present.
template <typename T, typename Get>
void read(const json& j, const std::string& path, const char* key, T& field, Get get) {
  if (j.contains(key)) field = get(j.at(key), path + "." + key);
}

EnsembleDescriptor parse_scenario(const json& j, const std::string& path) {
  if (j.is_null() || (j.is_object() && j.empty())) fail(path, "exactly one scenario required");
  if (!j.is_object()) fail(path, "expected an object");
  if (!j.contains("kind")) fail(path + ".kind", "missing scenario kind");
  const std::string kind = get_string(j.at("kind"), path + ".kind");
  if (kind == "single") {
    check_keys(j, path, {"kind", "r12", "theta", "phi"});
    SingleGeometry s;
    read(j, path, "r12", s.r12, get_number);
    read(j, path, "theta", s.theta, get_angle);
    read(j, path, "phi", s.phi, get_angle);
    return s;
  }
  if (kind == "distance_oscillation") {
    check_keys(j, path, {"kind", "r_m", "r_a", "theta", "phi", "n"});
    DistanceOscillation s;
    read(j, path, "r_m", s.r_m, get_number);
    read(j, path, "r_a", s.r_a, get_number);
    read(j, path, "theta", s.theta, get_angle);
    read(j, path, "phi", s.phi, get_angle);
    read(j, path, "n", s.n, get_int);
    return s;
  }
  if (kind == "theta_circle") {
    check_keys(j, path, {"kind", "phi", "r12", "n"});
    ThetaCircle s;
    read(j, path, "phi", s.phi, get_angle);
    read(j, path, "r12", s.r12, get_number);
    read(j, path, "n", s.n, get_int);
    return s;
  }
  if (kind == "phi_circle") {
    check_keys(j, path, {"kind", "theta", "r12", "n"});
    PhiCircle s;
    read(j, path, "theta", s.theta, get_angle);
    read(j, path, "r12", s.r12, get_number);
    read(j, path, "n", s.n, get_int);
    return s;
  }
  if (kind == "sphere") {
    check_keys(j, path, {"kind", "r12", "n_theta", "n_phi"});
    Sphere s;
    read(j, path, "r12", s.r12, get_number);
    read(j, path, "n_theta", s.n_theta, get_int);
    read(j, path, "n_phi", s.n_phi, get_int);
    return s;
  }
  if (kind == "sphere_with_breathing") {
    check_keys(j, path, {"kind", "r_m", "r_a", "n_r", "n_theta", "n_phi"});
    SphereWithBreathing s;
    read(j, path, "r_m", s.r_m, get_number);
    read(j, path, "r_a", s.r_a, get_number);
    read(j, path, "n_r", s.n_r, get_int);
    read(j, path, "n_theta", s.n_theta, get_int);
    read(j, path, "n_phi", s.n_phi, get_int);
    return s;
  }
  if (kind == "flyby") {
    check_keys(j, path, {"kind", "r_min", "phi", "z_max", "n", "measure"});
    Flyby s;
    read(j, path, "r_min", s.r_min, get_number);
    read(j, path, "phi", s.phi, get_angle);
    read(j, path, "z_max", s.z_max, get_number);
    read(j, path, "n", s.n, get_int);
    if (j.contains("measure")) {
      const std::string m = get_string(j.at("measure"), path + ".measure");
      if (m == "uniform_z")
        s.measure = FlybyMeasure::uniform_z;
      else if (m == "spherical_volume")
        s.measure = FlybyMeasure::spherical_volume;
      else
        fail(path + ".measure", "expected \"uniform_z\" or \"spherical_volume\"");
    }
    return s;
  }
  fail(path + ".kind", "unknown scenario kind \"" + kind + "\"");
}

json scenario_json(const EnsembleDescriptor& d) {
  json j;
  j["kind"] = kind_name(d);
  std::visit(
      [&j](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, SingleGeometry>) {
          j["r12"] = s.r12;
          j["theta"] = s.theta;
          j["phi"] = s.phi;
        } else if constexpr (std::is_same_v<T, DistanceOscillation>) {
          j["r_m"] = s.r_m;
          j["r_a"] = s.r_a;
          j["theta"] = s.theta;
          j["phi"] = s.phi;
          j["n"] = s.n;
        } else if constexpr (std::is_same_v<T, ThetaCircle>) {
          j["phi"] = s.phi;
          j["r12"] = s.r12;
          j["n"] = s.n;
        } else if constexpr (std::is_same_v<T, PhiCircle>) {
          j["theta"] = s.theta;
          j["r12"] = s.r12;
          j["n"] = s.n;
        } else if constexpr (std::is_same_v<T, Sphere>) {
          j["r12"] = s.r12;
          j["n_theta"] = s.n_theta;
          j["n_phi"] = s.n_phi;
        } else if constexpr (std::is_same_v<T, SphereWithBreathing>) {
          j["r_m"] = s.r_m;
          j["r_a"] = s.r_a;
          j["n_r"] = s.n_r;
          j["n_theta"] = s.n_theta;
          j["n_phi"] = s.n_phi;
        } else {
          j["r_min"] = s.r_min;
          j["phi"] = s.phi;
          j["z_max"] = s.z_max;
          j["n"] = s.n;
          j["measure"] = s.measure == FlybyMeasure::uniform_z ? "uniform_z" : "spherical_volume";
        }
      },
      d);
  return j;
}

Method parse_method(const std::string& s, const std::string& path) {
  if (s == "single") return Method::single;
  if (s == "ac") return Method::ac;
  if (s == "ap") return Method::ap;
  fail(path, "expected \"single\", \"ac\" or \"ap\"");
}

SweepMetric parse_metric(const std::string& s, const std::string& path) {
  if (s == "delta_i") return SweepMetric::delta_i;
  if (s == "i_mean") return SweepMetric::i_mean;
  if (s == "stationary") return SweepMetric::stationary;
  fail(path, "expected \"delta_i\", \"i_mean\" or \"stationary\"");
}

}  // namespace

double parse_angle(const std::string& text) {
  std::string s;
  for (char c : text)
    if (c != ' ') s += c;
  if (s.empty()) throw std::invalid_argument("empty angle");
  const auto pos = s.find("pi");
  auto number = [&text](const std::string& part, double fallback) {
    if (part.empty()) return fallback;
    if (part == "-") return -fallback;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(part, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("cannot parse angle \"" + text + "\"");
    }
    if (used != part.size()) throw std::invalid_argument("cannot parse angle \"" + text + "\"");
    return v;
  };
  if (pos == std::string::npos) return number(s, 0.0);
  std::string coeff = s.substr(0, pos);
  if (!coeff.empty() && coeff.back() == '*') coeff.pop_back();
  const std::string rest = s.substr(pos + 2);
  double divisor = 1.0;
  if (!rest.empty()) {
    if (rest[0] != '/') throw std::invalid_argument("cannot parse angle \"" + text + "\"");
    divisor = number(rest.substr(1), 0.0);
    if (divisor == 0.0) throw std::invalid_argument("division by zero in angle \"" + text + "\"");
  }
  return number(coeff, 1.0) * kPi / divisor;
}

std::string method_name(Method m) {
  switch (m) {
    case Method::single:
      return "single";
    case Method::ac:
      return "ac";
    case Method::ap:
      return "ap";
  }
  return "?";
}

std::string metric_name(SweepMetric m) {
  switch (m) {
    case SweepMetric::delta_i:
      return "delta_i";
    case SweepMetric::i_mean:
      return "i_mean";
    case SweepMetric::stationary:
      return "stationary";
  }
  return "?";
}

AverageOptions RunConfig::average_options() const {
  AverageOptions o;
  o.integrator = integrator;
  o.threads = threads;
  o.verify = verify;
  o.ap_laser_phase = ap_laser_phase;
  return o;
}

RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("$: malformed JSON: ") + e.what());
  }
  const std::string p = "$";
  check_keys(root, p,
             {"laser", "atom", "initial_state", "scenario", "method", "integrator", "analysis", "averaging", "sweep",
              "output", "threads", "separation_floor", "verify"});
  RunConfig c;

  if (root.contains("laser")) {
    const json& j = root.at("laser");
    const std::string q = p + ".laser";
    check_keys(j, q, {"rabi1", "rabi2", "det1", "det2"});
    read(j, q, "rabi1", c.params.rabi1, get_number);
    read(j, q, "rabi2", c.params.rabi2, get_number);
    read(j, q, "det1", c.params.det1, get_number);
    read(j, q, "det2", c.params.det2, get_number);
  }
  if (root.contains("atom")) {
    const json& j = root.at("atom");
    const std::string q = p + ".atom";
    check_keys(j, q, {"delta_lower", "gamma1", "gamma2", "k0"});
    read(j, q, "delta_lower", c.params.delta_lower, get_number);
    read(j, q, "gamma1", c.params.gamma1, get_number);
    read(j, q, "gamma2", c.params.gamma2, get_number);
    read(j, q, "k0", c.params.k0, get_number);
    if (!(c.params.gamma1 > 0.0)) fail(q + ".gamma1", "must be positive");
    if (!(c.params.gamma2 > 0.0)) fail(q + ".gamma2", "must be positive");
    if (!(c.params.k0 > 0.0)) fail(q + ".k0", "must be positive");
  }

  if (root.contains("initial_state")) {
    const json& j = root.at("initial_state");
    const std::string q = p + ".initial_state";
    if (j.is_string()) {
      const std::string s = j.get<std::string>();
      if (s == "excited") {
        c.initial_a = c.initial_b = 3;
      } else if (s == "ground") {
        c.initial_a = c.initial_b = 1;
      } else {
        fail(q, "expected \"excited\", \"ground\" or [a, b]");
      }
    } else if (j.is_array() && j.size() == 2) {
      c.initial_a = get_int(j[0], q + "[0]");
      c.initial_b = get_int(j[1], q + "[1]");
      if (c.initial_a < 1 || c.initial_a > 3) fail(q + "[0]", "level must be 1, 2 or 3");
      if (c.initial_b < 1 || c.initial_b > 3) fail(q + "[1]", "level must be 1, 2 or 3");
    } else {
      fail(q, "expected \"excited\", \"ground\" or [a, b]");
    }
  }

  if (!root.contains("scenario")) fail(p + ".scenario", "exactly one scenario required");
  c.scenario = parse_scenario(root.at("scenario"), p + ".scenario");

  if (root.contains("method")) c.method = parse_method(get_string(root.at("method"), p + ".method"), p + ".method");

  if (root.contains("integrator")) {
    const json& j = root.at("integrator");
    const std::string q = p + ".integrator";
    check_keys(j, q, {"t_end", "dt_out", "rtol", "atol", "positivity_stride", "representation"});
    read(j, q, "t_end", c.grid.t_end, get_number);
    read(j, q, "dt_out", c.grid.dt, get_number);
    read(j, q, "rtol", c.integrator.rtol, get_number);
    read(j, q, "atol", c.integrator.atol, get_number);
    read(j, q, "positivity_stride", c.integrator.positivity_stride, get_size);
    if (j.contains("representation")) {
      const std::string r = get_string(j.at("representation"), q + ".representation");
      if (r == "hermitian")
        c.integrator.representation = StateRepresentation::hermitian;
      else if (r == "complex")
        c.integrator.representation = StateRepresentation::complex;
      else
        fail(q + ".representation", "expected \"hermitian\" or \"complex\"");
    }
    if (!(c.grid.t_end > 0.0)) fail(q + ".t_end", "must be positive");
    if (!(c.grid.dt > 0.0) || c.grid.dt > c.grid.t_end) fail(q + ".dt_out", "must be in (0, t_end]");
    if (!(c.integrator.rtol > 0.0)) fail(q + ".rtol", "must be positive");
    if (!(c.integrator.atol > 0.0)) fail(q + ".atol", "must be positive");
    if (c.integrator.positivity_stride == 0) fail(q + ".positivity_stride", "must be at least 1");
  }

  if (root.contains("analysis")) {
    const json& j = root.at("analysis");
    const std::string q = p + ".analysis";
    check_keys(j, q, {"window_fraction", "min_periods", "settle_tolerance"});
    read(j, q, "window_fraction", c.analysis.window_fraction, get_number);
    read(j, q, "min_periods", c.analysis.min_periods, get_number);
    read(j, q, "settle_tolerance", c.analysis.settle_tolerance, get_number);
    if (!(c.analysis.window_fraction > 0.0 && c.analysis.window_fraction <= 1.0))
      fail(q + ".window_fraction", "must be in (0, 1]");
  }

  if (root.contains("averaging")) {
    const json& j = root.at("averaging");
    const std::string q = p + ".averaging";
    check_keys(j, q, {"ap_laser_phase"});
    if (j.contains("ap_laser_phase")) {
      const std::string s = get_string(j.at("ap_laser_phase"), q + ".ap_laser_phase");
      if (s == "averaged")
        c.ap_laser_phase = ApLaserPhase::averaged;
      else if (s == "unit")
        c.ap_laser_phase = ApLaserPhase::unit;
      else
        fail(q + ".ap_laser_phase", "expected \"averaged\" or \"unit\"");
    }
  }

  if (root.contains("sweep") && !root.at("sweep").is_null()) {
    const json& j = root.at("sweep");
    const std::string q = p + ".sweep";
    check_keys(j, q, {"axis", "values", "metric"});
    if (c.method == Method::single) fail(q, "a sweep requires method \"ac\" or \"ap\"");
    SweepConfig s;
    if (!j.contains("axis")) fail(q + ".axis", "missing");
    s.axis = get_string(j.at("axis"), q + ".axis");
    if (!is_valid_axis(c.scenario, s.axis))
      fail(q + ".axis", "\"" + s.axis + "\" is not a parameter of scenario " + kind_name(c.scenario));
    if (!j.contains("values") || !j.at("values").is_array() || j.at("values").empty())
      fail(q + ".values", "expected a non-empty array");
    const json& values = j.at("values");
    for (std::size_t i = 0; i < values.size(); ++i)
      s.values.push_back(get_angle(values[i], q + ".values[" + std::to_string(i) + "]"));
    if (j.contains("metric")) s.metric = parse_metric(get_string(j.at("metric"), q + ".metric"), q + ".metric");
    c.sweep = s;
  }

  if (root.contains("output")) {
    const json& j = root.at("output");
    const std::string q = p + ".output";
    check_keys(j, q, {"dir", "dump_states"});
    read(j, q, "dir", c.output.dir, get_string);
    read(j, q, "dump_states", c.output.dump_states, get_bool);
    if (c.output.dir.empty()) fail(q + ".dir", "must not be empty");
  }

  read(root, p, "threads", c.threads, get_int);
  if (c.threads < 0) fail(p + ".threads", "must be non-negative");
  read(root, p, "separation_floor", c.separation_floor, get_number);
  if (!(c.separation_floor > 0.0)) fail(p + ".separation_floor", "must be positive");
  read(root, p, "verify", c.verify, get_bool);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& c) {
  json root;
  root["laser"] = {{"rabi1", c.params.rabi1}, {"rabi2", c.params.rabi2}, {"det1", c.params.det1},
                   {"det2", c.params.det2}};
  root["atom"] = {{"delta_lower", c.params.delta_lower}, {"gamma1", c.params.gamma1},
                  {"gamma2", c.params.gamma2}, {"k0", c.params.k0}};
  root["initial_state"] = json::array({c.initial_a, c.initial_b});
  root["scenario"] = scenario_json(c.scenario);
  root["method"] = method_name(c.method);
  root["integrator"] = {
      {"t_end", c.grid.t_end},
      {"dt_out", c.grid.dt},
      {"rtol", c.integrator.rtol},
      {"atol", c.integrator.atol},
      {"positivity_stride", c.integrator.positivity_stride},
      {"representation", c.integrator.representation == StateRepresentation::hermitian ? "hermitian" : "complex"}};
  root["analysis"] = {{"window_fraction", c.analysis.window_fraction},
                      {"min_periods", c.analysis.min_periods},
                      {"settle_tolerance", c.analysis.settle_tolerance}};
  root["averaging"] = {{"ap_laser_phase", c.ap_laser_phase == ApLaserPhase::averaged ? "averaged" : "unit"}};
  if (c.sweep) root["sweep"] = {{"axis", c.sweep->axis}, {"values", c.sweep->values}, {"metric", metric_name(c.sweep->metric)}};
  root["output"] = {{"dir", c.output.dir}, {"dump_states", c.output.dump_states}};
  root["threads"] = c.threads;
  root["separation_floor"] = c.separation_floor;
  root["verify"] = c.verify;
  return root.dump(2);
}

}  // namespace ddlambda
