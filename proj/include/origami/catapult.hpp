#pragma once

// Parametric catapult: a six-panel sheet whose throwing arm rises when the two
// drive keypoints are pulled apart. See docs/catapult.md for the keypoint
// diagram and the throw protocol.

#include "origami/cmaes.hpp"
#include "origami/design_graph.hpp"
#include "origami/fixtures.hpp"
#include "origami/panel_mesh.hpp"
#include "origami/parallel.hpp"
#include "origami/sim_core.hpp"

#include <algorithm>
#include <cmath>
#include <concepts>
#include <numbers>
#include <optional>
#include <ostream>
#include <vector>

namespace origami {

struct CatapultParams {
  double theta_deg = 163.0;  // sector angle between the two mountain folds
  double arm_length = 0.13;  // m, center to arm tip

  static constexpr double kThetaMin = 100.0, kThetaMax = 226.0;
  static constexpr double kArmMin = 0.08, kArmMax = 0.18;

  void check() const {
    if (!(theta_deg >= kThetaMin && theta_deg <= kThetaMax))
      throw Error(Errc::ParamsOutOfRange, "theta must lie in [100, 226] degrees", "theta");
    if (!(arm_length >= kArmMin && arm_length <= kArmMax))
      throw Error(Errc::ParamsOutOfRange, "arm length must lie in [0.08, 0.18] m", "arm_length");
  }
};

// The centre of the parameter box; optimization runs start here.
inline constexpr CatapultParams kInitialDesign{163.0, 0.13};

// Fixed geometry shared by every catapult, given for the left half (x < 0);
// the right half mirrors it. Only keypoints 2, 6 and 10 depend on the
// parameters.
struct CatapultTemplate {
  double fold_radius = 0.05;         // |kp2|, |kp6|
  Vec2 wing_outer{-0.075, -0.044};   // kp3 (kp7)
  Vec2 drive{-0.031, -0.10};         // kp4 (kp8), pulled outward along x
  Vec2 flap_outer{-0.10, -0.07};     // kp5 (kp11)
  Vec2 flap_back{-0.05, -0.12};      // kp1 (kp9)
};

namespace catapult_ids {
inline constexpr int kCenter = 0, kFoldL = 2, kFoldR = 6, kTip = 10, kDriveL = 4, kDriveR = 8;
inline constexpr int kWingL[] = {1, 2, 3, 4, 5}, kWingR[] = {9, 6, 7, 8, 11};
}  // namespace catapult_ids

// The centre is pinned, the drive keypoints slide in the ground plane and the
// wing fold points stay on the ground, so the only way for the sheet to take
// up the drive motion is to lift the arm.
inline CreasePattern build_catapult(const CatapultParams& params, const CatapultTemplate& tpl = {}) {
  params.check();
  using fixtures::at;
  using fixtures::kFree;
  using fixtures::kLocked;
  const double half = params.theta_deg * std::numbers::pi / 360.0;
  const Vec2 fold{-tpl.fold_radius * std::sin(half), tpl.fold_radius * std::cos(half)};
  const DofMask planar{true, true, false};

  CreasePattern p;
  p.name = "catapult";
  auto side = [&](int id, double sx) {
    switch (id) {
      case 1: return at(sx * tpl.flap_back.x(), tpl.flap_back.y());
      case 2: return at(sx * fold.x(), fold.y());
      case 3: return at(sx * tpl.wing_outer.x(), tpl.wing_outer.y());
      case 4: return at(sx * tpl.drive.x(), tpl.drive.y());
      default: return at(sx * tpl.flap_outer.x(), tpl.flap_outer.y());
    }
  };
  add_keypoint(p, at(0, 0), kLocked);                  // 0 center
  add_keypoint(p, side(1, 1), kFree);                  // 1
  add_keypoint(p, side(2, 1), planar);                 // 2 fold point
  add_keypoint(p, side(3, 1), planar);                 // 3
  add_keypoint(p, side(4, 1), planar, Axis::X);        // 4 drive
  add_keypoint(p, side(5, 1), kFree);                  // 5
  add_keypoint(p, side(2, -1), planar);                // 6 fold point
  add_keypoint(p, side(3, -1), planar);                // 7
  add_keypoint(p, side(4, -1), planar, Axis::X);       // 8 drive
  add_keypoint(p, side(1, -1), kFree);                 // 9
  add_keypoint(p, at(0, params.arm_length), kFree);    // 10 arm tip
  add_keypoint(p, side(5, -1), kFree);                 // 11

  // three central folds
  add_edge(p, 0, 2, EdgeKind::Crease);
  add_edge(p, 0, 10, EdgeKind::Crease);
  add_edge(p, 0, 6, EdgeKind::Crease);
  // flap hinges
  add_edge(p, 3, 4, EdgeKind::Crease);
  add_edge(p, 7, 8, EdgeKind::Crease);
  for (auto [a, b] : {std::pair{2, 10}, {10, 6}, {2, 3}, {3, 5}, {5, 1}, {1, 4}, {4, 0}, {6, 7}, {7, 11}, {11, 9}, {9, 8}, {8, 0}})
    add_edge(p, a, b, EdgeKind::Boundary);

  fixtures::add_panel(p, {0, 10, 2});
  fixtures::add_panel(p, {0, 6, 10});
  fixtures::add_panel(p, {0, 2, 3, 4});
  fixtures::add_panel(p, {0, 8, 7, 6});
  fixtures::add_panel(p, {3, 5, 1, 4});
  fixtures::add_panel(p, {7, 8, 9, 11});
  return p;
}

struct ThrowProtocol {
  RigidSphere sphere{0.001, 0.01};
  double drop_clearance = 0.002;  // m between the sphere and the arm surface
  double tip_inset = 0.01;        // m, sphere centre back from the tip along the arm
  int contact_steps = 10;         // the servo starts once the sphere has settled this long
  std::optional<int> trigger_step;  // fixed-step trigger instead of the settle rule
  Axis axis = Axis::Y;            // throwing axis
  double prefold_deg = 3.0;       // starting wing rotation, picks the fold direction
  double max_prefold_elevation_deg = 30.0;
  double stroke = 0.02;           // m per drive keypoint
  double max_speed = 0.0405;      // m/s, calibrated to the drive angular velocity target
  double gain = 300.0;            // 1/s
  double max_force = 0.5;         // N per drive keypoint
  double friction = 0.9;          // ground friction coefficient
  double max_time = 4.0;          // s
  bool actuated = true;
  Vec3 offset = Vec3::Zero();     // rigid translation of the whole scene, in the ground plane

  static constexpr double kDriveAngularVelocity = 2.08;  // rad/s, peak target
};

// Arm elevation for the prefold: the wings turn by prefold_deg about the
// centre while staying on the ground, which lifts the arm panels out of the
// plane. Near-flat sectors turn a small wing rotation into a large lift, so
// the elevation is capped. Returns 0 (flat start) for sectors of 180 degrees
// or more, which this drive cannot fold upward.
inline double prefold_elevation(const CatapultParams& params, const ThrowProtocol& protocol) {
  const double half = params.theta_deg * std::numbers::pi / 360.0;
  const double psi = protocol.prefold_deg * std::numbers::pi / 180.0;
  const double cap = protocol.max_prefold_elevation_deg * std::numbers::pi / 180.0;
  if (params.theta_deg >= 180.0) return 0.0;
  const double c = std::cos(half) / std::cos(half - psi);
  return std::min(cap, c > 0 && c < 1 ? std::acos(c) : cap);
}

inline SceneConfig catapult_scene(const ThrowProtocol& protocol) {
  SceneConfig scene;
  scene.ground.friction = protocol.friction;
  scene.max_time = protocol.max_time;
  return scene;
}

struct CatapultModel {
  CreasePattern pattern;
  TriMesh mesh;
  Simulation sim;
  std::vector<ActuationEvent> events;
};

// Builds the pattern, folds it to the starting pose and places the sphere
// above the arm tip.
inline CatapultModel make_catapult_model(const CatapultParams& params, const ThrowProtocol& protocol = {},
                                         const Material& material = {}, SceneConfig scene = {}) {
  using namespace catapult_ids;
  CatapultModel m;
  m.pattern = build_catapult(params);
  for (auto& kp : m.pattern.keypoints) kp.position += protocol.offset;
  m.mesh = mesh_pattern(m.pattern);
  RigidSphere sphere = protocol.sphere;
  sphere.initial_position = protocol.offset;
  scene.payload = sphere;
  m.sim = assemble(m.pattern, m.mesh, material, scene);

  const double eps = prefold_elevation(params, protocol);
  const Vec3 c = protocol.offset;
  if (eps > 0) {
    const double half = params.theta_deg * std::numbers::pi / 360.0;
    const double b = std::cos(half) / std::cos(eps);
    const double folded = std::atan2(b, -std::sqrt(1 - b * b));
    const double turn = folded - (std::numbers::pi / 2 + half);
    auto rotate = [&](int id, double a) {
      const Vec3 r = m.sim.rest[m.sim.node(id)] - c;
      m.sim.start[m.sim.node(id)] = c + Vec3(std::cos(a) * r.x() - std::sin(a) * r.y(), std::sin(a) * r.x() + std::cos(a) * r.y(), 0);
    };
    for (int id : kWingL) rotate(id, turn);
    for (int id : kWingR) rotate(id, -turn);
  }
  const Vec3 dir(0, std::cos(eps), std::sin(eps));
  const Vec3 up(0, -std::sin(eps), std::cos(eps));
  m.sim.start[m.sim.node(kTip)] = c + params.arm_length * dir;
  const double lift = protocol.sphere.radius + material.thickness / 2 + protocol.drop_clearance;
  m.sim.scene.payload->initial_position = c + (params.arm_length - protocol.tip_inset) * dir + lift * up;

  if (protocol.actuated) {
    for (int s : {-1, 1}) {
      ActuationEvent ev;
      ev.keypoints = {s < 0 ? kDriveL : kDriveR};
      ev.axis = Axis::X;
      ev.target_displacement = s * protocol.stroke;
      ev.hold = true;
      if (protocol.trigger_step) {
        ev.trigger_step = *protocol.trigger_step;
      } else {
        ev.wait_for_payload = true;
        ev.contact_steps = protocol.contact_steps;
      }
      ev.max_speed = protocol.max_speed;
      ev.gain = protocol.gain;
      ev.max_force = protocol.max_force;
      ev.limit_travel = true;
      m.events.push_back(ev);
    }
  }
  return m;
}

// Peak angular velocity of the left drive keypoint about the centre, from
// angle differences over `window` seconds so single-frame jitter does not
// count as rotation.
inline double peak_drive_angular_velocity(const Simulation& sim, const Trajectory& tr, double window = 0.005) {
  const int c = sim.node(catapult_ids::kCenter), q = sim.node(catapult_ids::kDriveL);
  double peak = 0;
  std::size_t j = 0;
  for (std::size_t i = 1; i < tr.frames.size(); ++i) {
    while (j + 1 < i && tr.frames[i].t - tr.frames[j + 1].t >= window - 1e-12) ++j;
    const double span = tr.frames[i].t - tr.frames[j].t;
    if (span < window - 1e-12) continue;
    const Vec3 a = tr.frames[j].kp[q] - tr.frames[j].kp[c];
    const Vec3 b = tr.frames[i].kp[q] - tr.frames[i].kp[c];
    peak = std::max(peak, std::abs(std::atan2(a.x() * b.y() - a.y() * b.x(), a.x() * b.x() + a.y() * b.y())) / span);
  }
  return peak;
}

struct ThrowResult {
  double distance = 0;
  double drive_angular_velocity = 0;  // rad/s, peak
  Trajectory trajectory;
};

// Runs one throw. Errors (bad parameters, divergence, a sphere that never
// settles) propagate.
inline ThrowResult throw_sphere(const CatapultParams& params, const ThrowProtocol& protocol = {},
                                const Material& material = {}, const SceneConfig& scene = catapult_scene({})) {
  const auto m = make_catapult_model(params, protocol, material, scene);
  RolloutOptions ro;
  ro.frame_stride = 10;
  ThrowResult r;
  r.trajectory = run_rollout(m.sim, m.events, ro);
  r.distance = throw_distance(r.trajectory, protocol.axis);
  r.drive_angular_velocity = peak_drive_angular_velocity(m.sim, r.trajectory);
  return r;
}

inline double evaluate(const CatapultParams& params, const ThrowProtocol& protocol = {}, const Material& material = {},
                       const SceneConfig& scene = catapult_scene({})) {
  return throw_sphere(params, protocol, material, scene).distance;
}

struct Score {
  double distance = 0;
  bool failed = false;
};

// Failed rollouts score zero and keep the flag.
inline Score score(const CatapultParams& params, const ThrowProtocol& protocol = {}, const Material& material = {},
                   const SceneConfig& scene = catapult_scene({})) {
  try {
    return {evaluate(params, protocol, material, scene), false};
  } catch (const Error&) {
    return {0.0, true};
  }
}

// ---------------------------------------------------------------------------
// Optimization

// CMA-ES over (theta, arm_length) starting from the initial design.
inline CmaConfig catapult_cma_config(std::uint64_t seed, int generations = 200, double sigma = 0.025, int population = 0) {
  CmaConfig c;
  c.lower = {CatapultParams::kThetaMin, CatapultParams::kArmMin};
  c.upper = {CatapultParams::kThetaMax, CatapultParams::kArmMax};
  c.sigma0 = sigma;
  c.max_generations = generations;
  c.population = population;
  c.seed = seed;
  c.start = std::vector<double>{kInitialDesign.theta_deg, kInitialDesign.arm_length};
  return c;
}

// Maximizes throw distance; failed rollouts score zero.
inline OptResult optimize_catapult(const CmaConfig& config, const ThrowProtocol& protocol = {}, const Material& material = {},
                                   const SceneConfig& scene = catapult_scene({}), const OptimizeOptions& options = {}) {
  const Objective f = [&](const std::vector<double>& x) { return score({x[0], x[1]}, protocol, material, scene).distance; };
  return optimize(f, config, options);
}

// ---------------------------------------------------------------------------
// Sweeps

struct Range {
  double lo = 0, hi = 0;
};

struct SweepRow {
  double theta_deg = 0, arm_length = 0, distance = 0;
  bool failed = false;
};

// Grid values with both endpoints included; a single point sits at lo.
inline std::vector<double> grid_values(Range r, int n) {
  if (n <= 0) throw Error(Errc::InvalidArgument, "grid dimensions must be positive", "grid");
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = n == 1 ? r.lo : r.lo + (r.hi - r.lo) * i / (n - 1);
  return v;
}

struct SweepConfig {
  Range theta{CatapultParams::kThetaMin, CatapultParams::kThetaMax};
  Range arm{CatapultParams::kArmMin, CatapultParams::kArmMax};
  int theta_steps = 72, arm_steps = 40;
  unsigned threads = default_threads();
};

// Rows come out theta-major, in grid order, whatever the thread count.
template <class Eval>
  requires std::invocable<Eval&, const CatapultParams&>
std::vector<SweepRow> sweep(const SweepConfig& cfg, Eval&& eval) {
  const auto ths = grid_values(cfg.theta, cfg.theta_steps);
  const auto ls = grid_values(cfg.arm, cfg.arm_steps);
  std::vector<SweepRow> rows(ths.size() * ls.size());
  parallel_for(rows.size(), cfg.threads, [&](std::size_t k) {
    const CatapultParams p{ths[k / ls.size()], ls[k % ls.size()]};
    const Score s = eval(p);
    rows[k] = {p.theta_deg, p.arm_length, s.distance, s.failed};
  });
  return rows;
}

inline std::vector<SweepRow> sweep(const SweepConfig& cfg, const ThrowProtocol& protocol = {}, const Material& material = {},
                                   const SceneConfig& scene = catapult_scene({})) {
  return sweep(cfg, [&](const CatapultParams& p) { return score(p, protocol, material, scene); });
}

struct HeatBin {
  double theta_lo = 0, theta_hi = 0, l_lo = 0, l_hi = 0;
  double mean = 0;
  int count = 0;
};

// Averages the rows into an equal-width theta_bins x l_bins grid over the
// ranges. Points on an interior edge go to the upper bin; the top edge
// belongs to the last bin. Failed rows count as zero.
inline std::vector<HeatBin> bin_rows(const std::vector<SweepRow>& rows, Range theta, Range arm, int theta_bins, int l_bins) {
  if (theta_bins <= 0 || l_bins <= 0) throw Error(Errc::InvalidArgument, "bin counts must be positive", "bins");
  std::vector<HeatBin> bins(theta_bins * l_bins);
  const double wt = (theta.hi - theta.lo) / theta_bins, wl = (arm.hi - arm.lo) / l_bins;
  for (int i = 0; i < theta_bins; ++i)
    for (int j = 0; j < l_bins; ++j) {
      auto& b = bins[i * l_bins + j];
      b.theta_lo = theta.lo + i * wt;
      b.theta_hi = i + 1 == theta_bins ? theta.hi : theta.lo + (i + 1) * wt;
      b.l_lo = arm.lo + j * wl;
      b.l_hi = j + 1 == l_bins ? arm.hi : arm.lo + (j + 1) * wl;
    }
  auto index = [](double v, Range r, int n) {
    const double w = (r.hi - r.lo) / n;
    const int k = w > 0 ? static_cast<int>(std::floor((v - r.lo) / w)) : 0;
    return std::clamp(k, 0, n - 1);
  };
  for (const auto& r : rows) {
    if (r.theta_deg < theta.lo || r.theta_deg > theta.hi || r.arm_length < arm.lo || r.arm_length > arm.hi) continue;
    auto& b = bins[index(r.theta_deg, theta, theta_bins) * l_bins + index(r.arm_length, arm, l_bins)];
    b.mean += r.distance;
    ++b.count;
  }
  for (auto& b : bins)
    if (b.count) b.mean /= b.count;
  return bins;
}

// Bins holding at least one point whose mean reaches the 90th percentile of
// the occupied bins.
inline std::vector<HeatBin> top_decile(const std::vector<HeatBin>& bins) {
  std::vector<double> means;
  for (const auto& b : bins)
    if (b.count) means.push_back(b.mean);
  if (means.empty()) return {};
  std::sort(means.begin(), means.end());
  const double cut = means[static_cast<std::size_t>(std::floor(0.9 * (means.size() - 1)))];
  std::vector<HeatBin> out;
  for (const auto& b : bins)
    if (b.count && b.mean >= cut) out.push_back(b);
  return out;
}

inline bool in_bin(const HeatBin& b, double theta, double l) {
  return theta >= b.theta_lo && theta <= b.theta_hi && l >= b.l_lo && l <= b.l_hi;
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  char buf[128];
  out << "theta_deg,l_m,distance_m,failed\n";
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%d\n", r.theta_deg, r.arm_length, r.distance, r.failed ? 1 : 0);
    out << buf;
  }
}

inline void write_bins_csv(std::ostream& out, const std::vector<HeatBin>& bins) {
  char buf[192];
  out << "theta_bin_lo,theta_bin_hi,l_bin_lo,l_bin_hi,mean_distance_m,count\n";
  for (const auto& b : bins) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", b.theta_lo, b.theta_hi, b.l_lo, b.l_hi, b.mean, b.count);
    out << buf;
  }
}

}  // namespace origami
