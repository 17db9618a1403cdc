#include "ddlambda/couplings.hpp"
#include "ddlambda/run.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <iostream>

using namespace ddlambda;

namespace {

struct Common {
  std::string config_path;
  std::string out_dir;
  int threads = -1;
  bool verify = false;
};

RunConfig load(const Common& o) {
  RunConfig c = o.config_path.empty() ? parse_config(R"({"scenario": {"kind": "single"}})") : load_config(o.config_path);
  if (!o.out_dir.empty()) c.output.dir = o.out_dir;
  if (o.threads >= 0) c.threads = o.threads;
  if (o.verify) c.verify = true;
  return c;
}

int finish(const RunResult& r) {
  if (!r.error.empty()) std::cerr << "error: " << r.error << '\n';
  for (const auto& f : r.files) std::cout << f << '\n';
  return static_cast<int>(r.code);
}

int run_couplings(const Common& o, const std::string& r12, const std::string& theta, const std::string& phi,
                  bool as_json) {
  RunConfig c = load(o);
  Geometry g;
  if (!r12.empty() || !theta.empty() || !phi.empty()) {
    const SingleGeometry d;
    g = make_geometry(r12.empty() ? d.r12 : std::stod(r12), theta.empty() ? d.theta : parse_angle(theta),
                      phi.empty() ? d.phi : parse_angle(phi));
  } else {
    const WeightedEnsemble e = make_ensemble(c.scenario);
    if (e.size() != 1) throw std::invalid_argument("couplings: scenario must be a single geometry");
    g = e.members.front().geometry;
  }
  for (const auto& w : validate_params(c.params, g.r12, c.separation_floor)) std::cerr << "warning: " << w << '\n';
  const CouplingSet s = all_couplings(g, c.params, c.verify);
  if (as_json) {
    nlohmann::ordered_json j = {{"r12", g.r12},           {"theta", g.theta},         {"phi", g.phi},
                                {"gamma1_dd", s.gamma1_dd}, {"omega1_dd", s.omega1_dd}, {"gamma2_dd", s.gamma2_dd},
                                {"omega2_dd", s.omega2_dd}, {"gamma_vc", s.gamma_vc},   {"omega_vc", s.omega_vc}};
    std::cout << j.dump(2) << '\n';
  } else {
    std::printf("r12 = %s  theta = %s  phi = %s\n", format_double(g.r12).c_str(), format_double(g.theta).c_str(),
                format_double(g.phi).c_str());
    std::printf("gamma1_dd = %s\nomega1_dd = %s\ngamma2_dd = %s\nomega2_dd = %s\ngamma_vc  = %s\nomega_vc  = %s\n",
                format_double(s.gamma1_dd).c_str(), format_double(s.omega1_dd).c_str(),
                format_double(s.gamma2_dd).c_str(), format_double(s.omega2_dd).c_str(),
                format_double(s.gamma_vc).c_str(), format_double(s.omega_vc).c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-atom dipole-dipole Lambda-system fluorescence simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  Common o;
  auto add_common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON run configuration");
    sub->add_option("--out", o.out_dir, "Output directory (overrides output.dir)");
    sub->add_option("--threads", o.threads, "Worker threads, 0 = all cores (overrides config)");
    sub->add_flag("--verify", o.verify, "Cross-check couplings and rerun with fixed-step RK4");
  };

  auto* single = app.add_subcommand("single", "Integrate one geometry");
  auto* ac = app.add_subcommand("ac", "Adiabatic-case ensemble average");
  auto* ap = app.add_subcommand("ap", "Averaged-potential run");
  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep a parameter; needs a sweep block");
  auto* couplings = app.add_subcommand("couplings", "Print the coupling constants of one geometry");
  auto* ensemble = app.add_subcommand("ensemble", "Ensemble utilities");
  auto* dump = ensemble->add_subcommand("dump", "Write the weighted member list");
  ensemble->require_subcommand(1);
  for (auto* sub : {single, ac, ap, sweep_cmd, couplings, dump}) add_common(sub);

  std::string r12, theta, phi;
  bool as_json = false;
  couplings->add_option("--r12", r12, "Separation in wavelengths");
  couplings->add_option("--theta", theta, "Polar angle (radians or e.g. pi/2)");
  couplings->add_option("--phi", phi, "Azimuthal angle (radians or e.g. 0.25pi)");
  couplings->add_flag("--json", as_json, "JSON output");

  CLI11_PARSE(app, argc, argv);

  try {
    if (couplings->parsed()) return run_couplings(o, r12, theta, phi, as_json);
    RunConfig c = load(o);
    if (dump->parsed()) return finish(dump_ensemble(c, std::cerr));
    if (sweep_cmd->parsed()) {
      if (!c.sweep) throw ConfigError("$.sweep: the sweep subcommand needs a sweep block");
      return finish(run(c, std::cerr));
    }
    if (c.sweep) throw ConfigError("$.sweep: use the sweep subcommand for configs with a sweep block");
    c.method = single->parsed() ? Method::single : ac->parsed() ? Method::ac : Method::ap;
    return finish(run(c, std::cerr));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::usage);
  }
}
