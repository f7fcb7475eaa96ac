#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hflow/config.hpp"
#include "hflow/errors.hpp"
#include "hflow/report.hpp"
#include "hflow/verify.hpp"

namespace fs = std::filesystem;
using namespace hflow;

namespace {

enum Exit { kOk = 0, kVerifyFailed = 1, kConfig = 2, kGeometry = 3 };

fs::path output_dir(const std::string& flag, const RunConfig& c) {
  fs::path dir = !flag.empty() ? fs::path(flag) : !c.output.empty() ? fs::path(c.output) : fs::path(".");
  fs::create_directories(dir);
  return dir;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

int cmd_evaluate(const RunConfig& c, const std::string& out_flag) {
  const fs::path dir = output_dir(out_flag, c);
  const Spacetime model = make_spacetime(c.spacetime);
  const Evaluation e = evaluate_surface(c, model);
  write_json(dir / "mass.json", mass_document(c, e));
  write_json(dir / "variation.json", variation_document(e.variation, e.plane, e.cylinder, e.bhms, e.certificate));
  auto integrands = open_out(dir / "integrands.csv");
  write_integrands_csv(integrands, *e.extr, e.beta, e.variation, e.certificate);
  auto bhms = open_out(dir / "bhms_integrands.csv");
  write_bhms_csv(bhms, *e.extr, e.bhms);
  auto surface = open_out(dir / "surface.csv");
  build_surface(c.surface, model, c.n_theta, c.n_phi).write_csv(surface);
  std::cout << "m_H = " << e.mass.m_H << "  area = " << e.mass.area << "  dm_H/ds = " << e.variation.mass_rate() << '\n';
  return kOk;
}

int cmd_flow(const RunConfig& c, const std::string& out_flag) {
  const fs::path dir = output_dir(out_flag, c);
  const Spacetime model = make_spacetime(c.spacetime);
  const SurfaceGrid initial = build_surface(c.surface, model, c.n_theta, c.n_phi);
  const Trajectory t = run(initial, model, c.beta, run_options(c));

  auto csv = open_out(dir / "trajectory.csv");
  write_trajectory_header(csv);
  for (const auto& r : t.records) write_trajectory_row(csv, r);
  csv.close();
  auto first = open_out(dir / "surface_initial.csv");
  initial.write_csv(first);
  auto last = open_out(dir / "surface_final.csv");
  t.final_state.grid.write_csv(last);
  write_json(dir / "summary.json", summary_document(c, t));

  const FlowSummary& s = t.summary;
  std::cout << "steps " << s.steps << "  s = " << s.s_final << "  m_H " << s.mass_initial << " -> " << s.mass_final
            << "  min step " << s.min_mass_step << "  monotone " << (s.monotone ? "yes" : "no") << '\n';
  if (!t.completed) {
    std::cerr << "flow stopped at s = " << s.s_final << ": " << t.error_type << ": " << t.error << '\n';
    return kGeometry;
  }
  return kOk;
}

int cmd_verify(const RunConfig& c, const std::string& out_flag, const std::vector<std::string>& only) {
  const fs::path dir = output_dir(out_flag, c);
  const VerifyReport r = run_verify(c, only);
  write_json(dir / "verify.json", r.to_json());
  for (const auto& ch : r.checks)
    std::cout << (ch.pass ? "ok    " : "FAIL  ") << ch.name << "  error " << ch.error << "  tol " << ch.tolerance
              << "  (" << ch.seconds << " s)" << (ch.detail.empty() ? "" : "  " + ch.detail) << '\n';
  if (!r.pass) {
    for (const auto& ch : r.checks)
      if (!ch.pass) std::cerr << "failed check: " << ch.name << '\n';
    return kVerifyFailed;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hawking mass along uniformly area expanding flows"};
  app.require_subcommand(1);
  std::string config_path, out;
  std::vector<std::string> only;

  auto* eval = app.add_subcommand("evaluate", "mass and variation reports for one surface");
  eval->add_option("--config", config_path, "JSON run configuration")->required();
  eval->add_option("--out", out, "output directory");

  auto* flow = app.add_subcommand("flow", "evolve the surface and record the trajectory");
  flow->add_option("--config", config_path, "JSON run configuration")->required();
  flow->add_option("--out", out, "output directory");

  auto* verify = app.add_subcommand("verify", "run the property checks");
  verify->add_option("--config", config_path, "JSON run configuration (built-in default if omitted)");
  verify->add_option("--out", out, "directory for verify.json");
  verify->add_option("--only", only, "comma-separated check names")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    const RunConfig c = config_path.empty() ? default_config() : load_config(config_path);
    if (eval->parsed()) return cmd_evaluate(c, out);
    if (flow->parsed()) return cmd_flow(c, out);
    return cmd_verify(c, out, only);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const ThetaNotMonotone& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const Error& e) {
    std::cerr << "geometry error: " << e.what() << '\n';
    return kGeometry;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  }
}
