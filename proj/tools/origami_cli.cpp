// origami: command-line front end to the design -> mesh -> simulate -> optimize
// pipeline. Every run ends with one JSON summary line on stdout.
// Exit codes: 0 success, 1 domain error, 2 usage error.

#include "origami/catapult.hpp"
#include "origami/design_io.hpp"
#include "origami/mjcf_export.hpp"
#include "origami/scene_io.hpp"
#include "origami/service.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

using namespace origami;

namespace {

struct Dims {
  int a = 0, b = 0;
};

// "72x40" -> {72, 40}
Dims parse_dims(const std::string& s, const char* what) {
  Dims d;
  char x = 0, extra = 0;
  if (std::sscanf(s.c_str(), "%d%c%d%c", &d.a, &x, &d.b, &extra) != 3 || (x != 'x' && x != 'X') || d.a <= 0 || d.b <= 0)
    throw CLI::ValidationError(what, "expected <positive int>x<positive int>, got '" + s + "'");
  return d;
}

// "100:226" -> {100, 226}
Range parse_range(const std::string& s, const char* what) {
  Range r;
  char colon = 0, extra = 0;
  if (std::sscanf(s.c_str(), "%lf%c%lf%c", &r.lo, &colon, &r.hi, &extra) != 3 || colon != ':' || !(r.lo <= r.hi))
    throw CLI::ValidationError(what, "expected lo:hi, got '" + s + "'");
  return r;
}

SceneFile load_scene(const std::string& path) { return path.empty() ? SceneFile{} : parse_scene(read_text_file(path)); }

void emit(const json& j) { std::cout << j.dump() << std::endl; }

const char* env_or(const char* name, const char* fallback) {
  const char* v = std::getenv(name);
  return v && *v ? v : fallback;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"origami: crease pattern design, simulation and optimization"};
  app.require_subcommand(1);
  std::string command;

  std::string design, out, scene_path, frames_path, grid = "72x40", bins, bins_out, theta_range = "100:226", l_range = "0.08:0.18";
  double sigma = 0.025, theta = kInitialDesign.theta_deg, arm = kInitialDesign.arm_length;
  int generations = 200, population = 0, port = std::atoi(env_or("ORIGAMI_PORT", "8765"));
  unsigned threads = default_threads(), workers = 2;
  std::uint64_t seed = 1;
  std::string data_dir = env_or("ORIGAMI_DATA_DIR", "origami-data");

  auto* validate_cmd = app.add_subcommand("validate", "check a design file");
  validate_cmd->add_option("design", design, "design JSON")->required();

  auto* mesh_cmd = app.add_subcommand("mesh", "triangulate a design's panels");
  mesh_cmd->add_option("design", design, "design JSON")->required();
  mesh_cmd->add_option("--out", out, "write the mesh as JSON");

  auto* export_cmd = app.add_subcommand("export", "write a MuJoCo MJCF model");
  export_cmd->add_option("design", design, "design JSON")->required();
  export_cmd->add_option("--out", out, "model.xml")->required();
  export_cmd->add_option("--scene", scene_path, "scene JSON");

  auto* sim_cmd = app.add_subcommand("simulate", "run one rollout");
  sim_cmd->add_option("design", design, "design JSON")->required();
  sim_cmd->add_option("--scene", scene_path, "scene JSON");
  sim_cmd->add_option("--frames", frames_path, "write frames as JSON lines");

  auto* eval_cmd = app.add_subcommand("evaluate", "throw once with the catapult");
  eval_cmd->add_option("--theta", theta, "sector angle, degrees");
  eval_cmd->add_option("--l", arm, "arm length, m");

  auto* sweep_cmd = app.add_subcommand("sweep", "catapult grid sweep");
  sweep_cmd->add_option("--grid", grid, "TxL grid points")->capture_default_str();
  sweep_cmd->add_option("--out", out, "heatmap.csv")->required();
  sweep_cmd->add_option("--bins", bins, "TxL bins for the averaged heatmap (default: the grid)");
  sweep_cmd->add_option("--bins-out", bins_out, "binned heatmap CSV");
  sweep_cmd->add_option("--theta", theta_range, "theta range lo:hi")->capture_default_str();
  sweep_cmd->add_option("--l", l_range, "arm length range lo:hi")->capture_default_str();
  sweep_cmd->add_option("--threads", threads, "worker threads");

  auto* opt_cmd = app.add_subcommand("optimize", "CMA-ES on the catapult");
  opt_cmd->add_option("--sigma", sigma, "initial step, fraction of each range")->capture_default_str();
  opt_cmd->add_option("--generations", generations, "generations")->capture_default_str();
  opt_cmd->add_option("--seed", seed, "random seed")->capture_default_str();
  opt_cmd->add_option("--population", population, "population size (0: default)");
  opt_cmd->add_option("--threads", threads, "worker threads");
  opt_cmd->add_option("--out", out, "result JSON")->required();

  auto* serve_cmd = app.add_subcommand("serve", "run the HTTP JSON service");
  serve_cmd->add_option("--port", port, "port, 0 for any free one (env ORIGAMI_PORT)")->capture_default_str();
  serve_cmd->add_option("--data", data_dir, "data directory (env ORIGAMI_DATA_DIR)")->capture_default_str();
  serve_cmd->add_option("--workers", workers, "job workers")->capture_default_str();

  try {
    app.parse(argc, argv);
    command = app.get_subcommands().front()->get_name();
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  json summary{{"command", command}};
  try {
    if (command == "validate") {
      const auto v = validate(load_design(design));
      for (const auto& x : v)
        std::cerr << (x.warning ? "warning " : "error ") << to_string(x.code) << ": " << x.message << "\n";
      summary["ok"] = !has_errors(v);
      summary["violations"] = v.size();
      emit(summary);
      return has_errors(v) ? 1 : 0;
    }
    if (command == "mesh") {
      const auto p = load_design(design);
      const auto mesh = mesh_pattern(p);
      if (!out.empty()) {
        json tris = json::array();
        for (const auto& t : mesh.triangles) tris.push_back({{"ids", t.ids}, {"panel", t.panel}});
        write_text_file(out, json{{"version", 1}, {"triangles", tris}}.dump(2) + "\n");
      }
      summary.update({{"ok", true}, {"panels", p.panels.size()}, {"triangles", mesh.triangles.size()}});
    } else if (command == "export") {
      const auto p = load_design(design);
      const auto sf = load_scene(scene_path);
      MjcfOptions opt;
      opt.events = events_for(sf, p);
      const auto mesh = mesh_pattern(p);
      const auto doc = export_mjcf(p, mesh, sf.scene, sf.material, opt);
      write_text_file(out, doc.xml_text);
      const auto issues = check_mjcf(doc.xml_text, p, mesh);
      summary.update({{"ok", issues.empty()},
                      {"out", out},
                      {"flex", doc.stats.flex_count},
                      {"bodies", doc.stats.body_count},
                      {"actuators", doc.stats.actuator_count}});
      if (!issues.empty()) {
        for (const auto& x : issues) std::cerr << to_string(x.code) << ": " << x.message << "\n";
        emit(summary);
        return 1;
      }
    } else if (command == "simulate") {
      const auto p = load_design(design);
      const auto sf = load_scene(scene_path);
      const auto sim = assemble(p, mesh_pattern(p), sf.material, sf.scene);
      RolloutOptions ro;
      ro.frame_stride = sf.frame_stride;
      const auto tr = run_rollout(sim, events_for(sf, p), ro);
      if (!frames_path.empty()) {
        std::ofstream f(frames_path, std::ios::binary);
        if (!f) throw Error(Errc::NotFound, "cannot write " + frames_path, frames_path);
        write_frames(f, tr);
      }
      summary.update({{"ok", true}, {"steps", tr.steps}, {"frames", tr.frames.size()}, {"time", tr.frames.back().t}});
      if (tr.has_sphere) {
        summary["sphere_at_rest"] = tr.sphere_at_rest;
        if (tr.sphere_at_rest) summary["distance"] = throw_distance(tr, Axis::Y);
      }
    } else if (command == "evaluate") {
      const auto r = throw_sphere({theta, arm});
      summary.update({{"ok", true}, {"theta_deg", theta}, {"l_m", arm}, {"distance_m", r.distance},
                      {"drive_angular_velocity", r.drive_angular_velocity}});
    } else if (command == "sweep") {
      SweepConfig cfg;
      const Dims g = parse_dims(grid, "--grid");
      const Dims b = bins.empty() ? g : parse_dims(bins, "--bins");
      cfg.theta_steps = g.a;
      cfg.arm_steps = g.b;
      cfg.theta = parse_range(theta_range, "--theta");
      cfg.arm = parse_range(l_range, "--l");
      cfg.threads = threads;
      const auto rows = sweep(cfg);
      std::ofstream heat(out, std::ios::binary);
      if (!heat) throw Error(Errc::NotFound, "cannot write " + out, out);
      write_sweep_csv(heat, rows);
      if (!bins_out.empty()) {
        std::ofstream f(bins_out, std::ios::binary);
        if (!f) throw Error(Errc::NotFound, "cannot write " + bins_out, bins_out);
        write_bins_csv(f, bin_rows(rows, cfg.theta, cfg.arm, b.a, b.b));
      }
      const auto best = std::max_element(rows.begin(), rows.end(), [](const auto& x, const auto& y) { return x.distance < y.distance; });
      const auto failed = std::count_if(rows.begin(), rows.end(), [](const auto& r) { return r.failed; });
      summary.update({{"ok", true}, {"rows", rows.size()}, {"failed", failed},
                      {"best", {{"theta_deg", best->theta_deg}, {"l_m", best->arm_length}, {"distance_m", best->distance}}}});
    } else if (command == "optimize") {
      const auto cfg = catapult_cma_config(seed, generations, sigma, population);
      OptimizeOptions opt;
      opt.threads = threads;
      const auto r = optimize_catapult(cfg, {}, {}, catapult_scene({}), opt);
      write_text_file(out, opt_result_to_json(r).dump(2) + "\n");
      summary.update({{"ok", true}, {"best_params", r.best_params}, {"best_fitness", r.best_fitness}, {"evaluations", r.evaluations}});
    } else if (command == "serve") {
      Service service({data_dir, workers});
      httplib::Server srv;
      service.mount(srv);
      // port 0 picks a free port; the summary reports the one bound
      if (port == 0) port = srv.bind_to_any_port("127.0.0.1");
      else if (!srv.bind_to_port("127.0.0.1", port)) port = -1;
      if (port < 0) throw Error(Errc::InvalidArgument, "cannot bind the requested port", "port");
      summary.update({{"ok", true}, {"port", port}, {"data", data_dir}});
      emit(summary);
      srv.listen_after_bind();
      return 0;
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << "\n" << app.help();
    summary.update({{"ok", false}, {"code", "Usage"}, {"message", e.what()}});
    emit(summary);
    return 2;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    summary.update({{"ok", false}, {"code", to_string(e.code())}, {"message", e.message()}, {"entity", e.entity()}});
    emit(summary);
    return 1;
  }
  emit(summary);
  return 0;
}
