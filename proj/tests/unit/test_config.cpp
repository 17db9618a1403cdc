#include "ddlambda/config.hpp"
#include "ddlambda/run.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ddlambda;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ddlambda_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("parse_config: schema rules") {
  CHECK(error_of("{}").find("exactly one scenario required") != std::string::npos);
  CHECK(error_of(R"({"scenario": {}})").find("exactly one scenario required") != std::string::npos);
  CHECK(error_of(R"({"scenario": {"kind": "single"}, "method": "single", "sweep": {"axis": "r12", "values": [0.1]}})") !=
        "");
  CHECK(error_of(R"({"scenario": {"kind": "single"}, "laser": {"rabi1": "x"}})").rfind("$.laser.rabi1:", 0) == 0);
  CHECK(error_of(R"({"scenario": {"kind": "single", "r13": 1}})").rfind("$.scenario.r13:", 0) == 0);
  CHECK(error_of(R"({"scenario": {"kind": "cube"}})").rfind("$.scenario.kind:", 0) == 0);
  CHECK(error_of(R"({"scenario": {"kind": "single"}, "atom": {"gamma1": -1}})").rfind("$.atom.gamma1:", 0) == 0);
  CHECK(error_of(R"({"scenario": {"kind": "single"}, "initial_state": [1, 4]})").rfind("$.initial_state[1]:", 0) ==
        0);
  CHECK(error_of(R"({"scenario": {"kind": "sphere"}, "method": "ac", "sweep": {"axis": "phi", "values": [1]}})")
            .rfind("$.sweep.axis:", 0) == 0);
  CHECK(error_of("{not json").rfind("$:", 0) == 0);
}

TEST_CASE("parse_config: defaults") {
  const RunConfig c = parse_config(R"({"scenario": {"kind": "single", "r12": 0.25, "theta": "pi/2", "phi": "pi/4"}})");
  CHECK(c.params.rabi1 == 3.0);
  CHECK(c.params.rabi2 == 5.0);
  CHECK(c.params.det1 == 0.0);
  CHECK(c.params.det2 == 2.0);
  CHECK(c.params.delta_lower == 0.0);
  CHECK(c.initial_a == 3);
  CHECK(c.initial_b == 3);
  CHECK(c.method == Method::single);
  CHECK(c.grid == TimeGrid{});
  CHECK(std::get<SingleGeometry>(c.scenario).theta == kPi / 2);
  CHECK(parse_config(R"({"scenario": {"kind": "single"}, "initial_state": "ground"})").initial_a == 1);
}

TEST_CASE("angles") {
  CHECK(parse_angle("pi") == kPi);
  CHECK(parse_angle("pi/2") == kPi / 2);
  CHECK(parse_angle("0.2pi") == 0.2 * kPi);
  CHECK(parse_angle("3pi/4") == 3 * kPi / 4);
  CHECK(parse_angle("-pi/3") == -kPi / 3);
  CHECK(parse_angle("2*pi") == 2 * kPi);
  CHECK(parse_angle("1.25") == 1.25);
  CHECK_THROWS_AS(parse_angle("pie"), std::invalid_argument);
  CHECK_THROWS_AS(parse_angle("pi/0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_angle(""), std::invalid_argument);
}

TEST_CASE("serialize/parse round trip") {
  const char* configs[] = {
      R"({"scenario": {"kind": "single", "r12": 0.1, "theta": "0.3pi", "phi": 1.0}})",
      R"({"scenario": {"kind": "distance_oscillation", "r_m": 0.25, "r_a": 0.14, "n": 33}, "method": "ac",
          "laser": {"rabi1": 1.5}, "atom": {"gamma2": 0.7}, "initial_state": [1, 3], "threads": 2,
          "integrator": {"t_end": 30, "dt_out": 0.02, "rtol": 1e-9, "positivity_stride": 3, "representation": "complex"},
          "analysis": {"window_fraction": 0.3}, "output": {"dir": "x/y", "dump_states": true}, "verify": true})",
      R"({"scenario": {"kind": "flyby", "measure": "spherical_volume"}, "method": "ap",
          "averaging": {"ap_laser_phase": "unit"},
          "sweep": {"axis": "z_max", "values": [0, 0.1, "pi/10"], "metric": "i_mean"}, "separation_floor": 0.02})",
      R"({"scenario": {"kind": "theta_circle", "phi": "0.2pi"}})",
      R"({"scenario": {"kind": "phi_circle", "theta": "0.3pi"}})",
      R"({"scenario": {"kind": "sphere", "n_theta": 4, "n_phi": 6}})",
      R"({"scenario": {"kind": "sphere_with_breathing", "r_a": 0.05}})",
  };
  for (const char* text : configs) {
    const RunConfig c = parse_config(text);
    const std::string s = serialize_config(c);
    CHECK(parse_config(s) == c);
    CHECK(serialize_config(parse_config(s)) == s);
  }
}

TEST_CASE("run: single trajectory CSV, determinism, manifest") {
  const fs::path a = scratch("single_a"), b = scratch("single_b");
  RunConfig c = parse_config(R"({"scenario": {"kind": "single", "r12": 0.25, "theta": "pi/2", "phi": "pi/4"}})");
  std::ostringstream log;
  c.output.dir = a.string();
  const RunResult ra = run(c, log);
  CHECK(ra.code == ExitCode::ok);
  c.output.dir = b.string();
  const RunResult rb = run(c, log);
  CHECK(rb.code == ExitCode::ok);

  const std::string csv = slurp(a / "trajectory.csv");
  const auto rows = lines(csv);
  REQUIRE(rows.size() == 5002);
  CHECK(rows[0] == "t,I_y");
  CHECK(rows[1] == "0,2");
  CHECK(csv == slurp(b / "trajectory.csv"));

  const auto m = nlohmann::json::parse(slurp(a / "manifest.json"));
  CHECK(m["files"][0] == "trajectory.csv");
  CHECK(m["version"] == kToolVersion);
  CHECK(m["ensemble"]["members"] == 1);
  CHECK(m["validity"]["positive"] == true);
  CHECK(m.contains("wall_time_s"));
  CHECK(parse_config(m["config"].dump()) == parse_config(serialize_config(
                                                  [&] {
                                                    RunConfig x = c;
                                                    x.output.dir = a.string();
                                                    return x;
                                                  }())));
}

TEST_CASE("run: state dump has the Hermitian coordinates") {
  const fs::path dir = scratch("dump");
  RunConfig c = parse_config(R"({"scenario": {"kind": "single"}, "integrator": {"t_end": 1, "dt_out": 0.1},
                                 "output": {"dump_states": true}})");
  c.output.dir = dir.string();
  std::ostringstream log;
  REQUIRE(run(c, log).code == ExitCode::ok);
  const auto rows = lines(slurp(dir / "trajectory.csv"));
  REQUIRE(rows.size() == 12);
  CHECK(std::count(rows[0].begin(), rows[0].end(), ',') == 82);
}

TEST_CASE("run: AC manifest records members") {
  const fs::path dir = scratch("ac");
  RunConfig c = parse_config(R"({"scenario": {"kind": "distance_oscillation", "r_m": 0.25, "r_a": 0.14, "n": 64},
                                 "method": "ac"})");
  c.output.dir = dir.string();
  std::ostringstream log;
  REQUIRE(run(c, log).code == ExitCode::ok);
  const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(m["ensemble"]["members"] == 64);
  REQUIRE(m["members"].size() == 64);
  CHECK(m["members"][63]["index"] == 63);
  CHECK(m["members"][0]["stats"]["accepted_steps"].get<int>() > 0);
  CHECK(m["metrics"]["stationary"] == false);
}

TEST_CASE("run: sweep CSV") {
  const fs::path dir = scratch("sweep");
  RunConfig c = parse_config(R"({"scenario": {"kind": "distance_oscillation", "n": 4}, "method": "ap",
                                 "sweep": {"axis": "r_a", "values": [0.02, 0.3]}})");
  c.output.dir = dir.string();
  std::ostringstream log;
  const RunResult r = run(c, log);
  CHECK(r.code == ExitCode::integration_failure);
  const auto rows = lines(slurp(dir / "sweep.csv"));
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == "value,delta_i,i_mean,stationary");
  CHECK(rows[2] == "0.29999999999999999,nan,nan,nan");
  const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(m["files"][0] == "sweep.csv");
  CHECK(m["rows"][1]["error"].is_string());
}

TEST_CASE("run: I/O failure") {
  RunConfig c = parse_config(R"({"scenario": {"kind": "single"}})");
  c.output.dir = "/proc/ddlambda/not/writable";
  std::ostringstream log;
  CHECK(run(c, log).code == ExitCode::io_failure);
}

TEST_CASE("dump_ensemble") {
  std::ostringstream log;
  auto dump = [&](const std::string& scenario, const std::string& name) {
    const fs::path dir = scratch(name);
    RunConfig c = parse_config(R"({"scenario": )" + scenario + "}");
    c.output.dir = dir.string();
    REQUIRE(dump_ensemble(c, log).code == ExitCode::ok);
    CHECK(fs::exists(dir / "ensemble_manifest.json"));
    auto rows = lines(slurp(dir / "ensemble.csv"));
    CHECK(rows[0] == "r,theta,phi,weight");
    rows.erase(rows.begin());
    return rows;
  };
  const auto single = dump(R"({"kind": "single"})", "ens_single");
  REQUIRE(single.size() == 1);
  CHECK(single[0].substr(single[0].rfind(',') + 1) == "1");

  const auto circle = dump(R"({"kind": "phi_circle", "theta": "pi/2", "n": 4})", "ens_circle");
  REQUIRE(circle.size() == 4);
  for (const auto& row : circle) CHECK(row.substr(row.rfind(',') + 1) == "0.25");

  const auto fly = dump(R"({"kind": "flyby", "n": 101, "z_max": 1})", "ens_fly");
  REQUIRE(fly.size() == 101);
  auto theta_of = [](const std::string& row) {
    const auto a = row.find(',');
    return std::stod(row.substr(a + 1, row.find(',', a + 1) - a - 1));
  };
  for (std::size_t k = 0; k < fly.size(); ++k)
    CHECK(theta_of(fly[k]) == doctest::Approx(kPi - theta_of(fly[fly.size() - 1 - k])).epsilon(1e-14));
}

TEST_CASE("format_double keeps 17 significant digits") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("CLI couplings subcommand") {
  const std::string cmd = std::string(DDLAMBDA_CLI) + " couplings --r12 0.05 --theta pi/2 --phi pi/4 --json";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[256];
  while (std::fgets(buf, sizeof buf, pipe)) out += buf;
  CHECK(pclose(pipe) == 0);
  const auto j = nlohmann::json::parse(out);
  CHECK(j["omega_vc"].get<double>() == doctest::Approx(73.78858449432992793).epsilon(1e-12));
}
