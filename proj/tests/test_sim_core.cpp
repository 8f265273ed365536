#include "support.hpp"
#include "sim_oracles.hpp"

#include "origami/fixtures.hpp"
#include "origami/sim_core.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace origami;
using namespace origami::testing;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an origami::Error";
  return Errc::InvalidArgument;
}

SceneConfig no_ground() {
  SceneConfig s;
  s.ground.enabled = false;
  s.gravity = Vec3::Zero();
  return s;
}

CreasePattern right_triangle(double leg = 1.0) {
  CreasePattern p;
  add_keypoint(p, {0, 0, 0}, kFree);
  add_keypoint(p, {leg, 0, 0}, kFree);
  add_keypoint(p, {0, leg, 0}, kFree);
  add_edge(p, 0, 1, EdgeKind::Crease);
  add_edge(p, 1, 2, EdgeKind::Boundary);
  add_edge(p, 2, 0, EdgeKind::Boundary);
  return define_panel(p, {leg / 4, leg / 4});
}

// Square split into two triangles with a panel-interior diagonal (a hinge).
CreasePattern hinged_square() {
  CreasePattern p;
  add_keypoint(p, {0, 0, 0}, kFree);
  add_keypoint(p, {1, 0, 0}, kFree);
  add_keypoint(p, {1, 1, 0}, kFree);
  add_keypoint(p, {0, 1, 0}, kFree);
  add_edge(p, 0, 1, EdgeKind::Crease);
  add_edge(p, 1, 2, EdgeKind::Boundary);
  add_edge(p, 2, 3, EdgeKind::Boundary);
  add_edge(p, 3, 0, EdgeKind::Boundary);
  return define_panel(p, {0.5, 0.4});
}

Simulation build(const CreasePattern& p, Material m = {}, SceneConfig s = no_ground()) {
  return assemble(p, mesh_pattern(p), m, s);
}

}  // namespace

// ---------------------------------------------------------------------------
// assemble

TEST(Assemble, UnitSquareMasses) {
  Material m;
  m.density = 1000;
  m.thickness = 0.002;
  const auto p = define_panel(unit_square(true, EdgeKind::Crease), {0.75, 0.25});
  auto q = define_panel(p, {0.25, 0.75});
  const auto sim = build(q, m);
  double total = 0;
  for (double x : sim.mass) total += x;
  EXPECT_NEAR(total, 2.0, 1e-12);
  // corners on the diagonal touch both triangles: 2 x (1000 * 0.002 * 0.5) / 3
  EXPECT_NEAR(sim.mass[sim.node(0)], 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(sim.mass[sim.node(2)], 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(sim.mass[sim.node(1)], 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(sim.mass[sim.node(3)], 1.0 / 3.0, 1e-12);
}

TEST(Assemble, SharedKeypointMassIsAdditive) {
  const auto p = fixtures::tripod();
  const auto mesh = mesh_pattern(p);
  const auto sim = assemble(p, mesh, {}, no_ground());
  const Material m;
  double expected = 0;
  for (const auto& t : mesh.triangles)
    for (int id : t.ids)
      if (id == 0) {
        std::vector<Vec2> tri{p.at(t.ids[0]).xy(), p.at(t.ids[1]).xy(), p.at(t.ids[2]).xy()};
        expected += m.density * m.thickness * poly_area(tri) / 3;
      }
  EXPECT_NEAR(sim.mass[sim.node(0)], expected, 1e-15);
}

TEST(Assemble, IsolatedKeypoint) {
  auto p = right_triangle();
  add_keypoint(p, {5, 5, 0}, kFree);
  EXPECT_EQ(code_of([&] { build(p); }), Errc::ZeroMassKeypoint);
}

TEST(Assemble, MergedKeypointsShareANode) {
  const auto p = fixtures::box_loop();
  const auto sim = build(p);
  EXPECT_EQ(sim.size(), p.live_keypoint_count());
  EXPECT_EQ(sim.node(4), sim.node(0));
  EXPECT_EQ(sim.node(9), sim.node(5));
}

// ---------------------------------------------------------------------------
// membrane

TEST(Membrane, UndeformedAndRotatedAreForceFree) {
  const auto sim = build(right_triangle());
  auto x = sim.rest;
  for (const auto& f : membrane_forces(sim, x)) EXPECT_EQ(f, Vec3::Zero());
  const Eigen::Matrix3d rot = (Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized())).toRotationMatrix();
  for (auto& p : x) p = rot * p + Vec3(0.3, -1, 2);
  for (const auto& f : membrane_forces(sim, x)) EXPECT_LT(f.norm(), 1e-6);
}

TEST(Membrane, UniaxialStretchMatchesFiniteDifference) {
  const auto p = right_triangle();
  const auto mesh = mesh_pattern(p);
  const auto sim = assemble(p, mesh, {}, no_ground());
  auto x = sim.rest;
  for (auto& q : x) q.x() *= 1.01;
  const auto analytic = membrane_forces(sim, x);
  const auto fd = central_difference(x, [&](const std::vector<Vec3>& y) { return oracle_membrane_energy(sim, p, mesh, y); }, 1e-7);
  EXPECT_LT(max_rel_error(analytic, fd), 1e-6);
  EXPECT_NEAR(membrane_energy(sim, x), oracle_membrane_energy(sim, p, mesh, x), 1e-12);
}

TEST(Membrane, PerTriangleBalance) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0, 0.05);
  const auto sim = build(right_triangle(0.1));
  for (int trial = 0; trial < 100; ++trial) {
    auto x = sim.rest;
    for (auto& q : x) q += 0.1 * Vec3(n(rng), n(rng), n(rng));
    const auto f = membrane_forces(sim, x);
    Vec3 sum = Vec3::Zero(), torque = Vec3::Zero(), c = (x[0] + x[1] + x[2]) / 3;
    for (int i = 0; i < 3; ++i) {
      sum += f[i];
      torque += (x[i] - c).cross(f[i]);
    }
    double scale = 0;
    for (const auto& v : f) scale = std::max(scale, v.norm());
    EXPECT_LT(sum.norm(), 1e-10 * std::max(1.0, scale));
    EXPECT_LT(torque.norm(), 1e-10 * std::max(1.0, scale));
  }
}

TEST(Membrane, DegenerateRestTriangle) {
  CreasePattern p;
  add_keypoint(p, {0, 0, 0}, kFree);
  add_keypoint(p, {1e-6, 0, 0}, kFree);
  add_keypoint(p, {0, 1e-7, 0}, kFree);
  add_edge(p, 0, 1, EdgeKind::Crease);
  add_edge(p, 1, 2, EdgeKind::Boundary);
  add_edge(p, 2, 0, EdgeKind::Boundary);
  p = define_panel(p, {2e-7, 2e-8});
  EXPECT_EQ(code_of([&] { build(p); }), Errc::DegenerateRestTriangle);
}

// ---------------------------------------------------------------------------
// hinge

TEST(Hinge, OnlyPanelInteriorEdges) {
  EXPECT_EQ(build(hinged_square()).hinges.size(), 1u);
  EXPECT_TRUE(build(fixtures::tripod()).hinges.empty());  // creases carry no bending stiffness
}

TEST(Hinge, FlatAndZeroStiffnessAreForceFree) {
  const auto sim = build(hinged_square());
  for (const auto& f : hinge_forces(sim, sim.rest)) EXPECT_EQ(f, Vec3::Zero());
  Material m;
  m.panel_bend_stiffness = 0;
  const auto soft = build(hinged_square(), m);
  auto x = soft.rest;
  x[soft.node(1)].z() = 0.5;
  for (const auto& f : hinge_forces(soft, x)) EXPECT_EQ(f, Vec3::Zero());
}

TEST(Hinge, NinetyDegreeFoldMatchesFiniteDifference) {
  Material m;
  m.panel_bend_stiffness = 1.0;
  const auto sim = build(hinged_square(), m);
  ASSERT_EQ(sim.hinges.size(), 1u);
  const auto& h = sim.hinges[0];
  // rotate one apex about the hinge line by 90 degrees
  auto x = sim.rest;
  const Vec3 axis = (x[h.e1] - x[h.e0]).normalized();
  const Eigen::Matrix3d rot = Eigen::AngleAxisd(M_PI / 2, axis).toRotationMatrix();
  x[h.a1] = x[h.e0] + rot * (x[h.a1] - x[h.e0]);
  EXPECT_NEAR(std::abs(detail::dihedral(x[h.e0], x[h.e1], x[h.a0], x[h.a1])), M_PI / 2, 1e-12);
  EXPECT_NEAR(oracle_hinge_energy(sim, x), 0.5 * (M_PI / 2) * (M_PI / 2), 1e-12);
  const auto analytic = hinge_forces(sim, x);
  const auto fd = central_difference(x, [&](const std::vector<Vec3>& y) { return oracle_hinge_energy(sim, y); }, 1e-6);
  EXPECT_LT(max_rel_error(analytic, fd), 1e-5);
  // torque about the hinge line = k * angle
  const Vec3 arm = x[h.a1] - x[h.e0];
  const Vec3 lever = arm - arm.dot(axis) * axis;
  EXPECT_NEAR(std::abs(lever.cross(analytic[h.a1]).dot(axis)), M_PI / 2, 1e-9);
}

TEST(ElasticForces, RandomConfigurationsMatchEnergyGradient) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n(0, 1);
  for (const auto& p : {fixtures::corrugation(), hinged_square(), fixtures::gripper()}) {
    const auto mesh = mesh_pattern(p);
    const auto sim = assemble(p, mesh, {}, no_ground());
    double scale = 0;
    for (const auto& r : sim.rest) scale = std::max(scale, r.norm());
    for (int trial = 0; trial < 20; ++trial) {
      auto x = sim.rest;
      for (auto& q : x) q += 0.02 * scale * Vec3(n(rng), n(rng), n(rng));
      auto f = membrane_forces(sim, x);
      const auto fh = hinge_forces(sim, x);
      for (std::size_t i = 0; i < f.size(); ++i) f[i] += fh[i];
      const auto fd = central_difference(
          x, [&](const std::vector<Vec3>& y) { return oracle_membrane_energy(sim, p, mesh, y) + oracle_hinge_energy(sim, y); },
          1e-7 * scale);
      EXPECT_LT(max_rel_error(f, fd), 1e-4) << p.name << " trial " << trial;
    }
  }
}

// ---------------------------------------------------------------------------
// contact

TEST(Contact, NothingTouching) {
  SceneConfig s;
  s.payload = RigidSphere{0.001, 0.01, {5, 5, 1}};
  const auto sim = build(right_triangle(), {}, s);
  auto st = initial_state(sim);
  for (auto& q : st.x) q.z() = 0.1;
  const auto cf = contact_forces(sim, st);
  for (const auto& f : cf.nodes) EXPECT_EQ(f, Vec3::Zero());
  EXPECT_EQ(cf.sphere, Vec3::Zero());
  EXPECT_FALSE(cf.sphere_ground || cf.sphere_mesh);
}

TEST(Contact, GroundPenetrationGivesTenNewtons) {
  Material m;
  m.density = 1000;
  SceneConfig s;
  s.ground.stiffness = 1e4;
  const auto sim = build(right_triangle(), m, s);
  auto st = initial_state(sim);
  st.x[0].z() = -0.001;
  const auto cf = contact_forces(sim, st);
  EXPECT_NEAR(cf.nodes[0].z(), 10.0, 1e-12);
  EXPECT_EQ(cf.nodes[0].head<2>(), Eigen::Vector2d::Zero());
  EXPECT_EQ(cf.nodes[1], Vec3::Zero());
}

TEST(Contact, FrictionOpposesSlidingAndIsBounded) {
  Material m;
  m.density = 1000;
  SceneConfig s;
  const auto sim = build(right_triangle(), m, s);
  auto st = initial_state(sim);
  st.x[0].z() = -0.001;
  st.v[0] = Vec3(1.0, 0.5, 0);
  const auto f = contact_forces(sim, st).nodes[0];
  EXPECT_NEAR(f.head<2>().norm(), 0.5 * f.z(), 1e-12);
  EXPECT_LT(f.head<2>().dot(st.v[0].head<2>()), 0);
}

TEST(Contact, SphereOnTriangleSplitsWeightBarycentrically) {
  SceneConfig s;
  s.dt = 1e-4;
  s.ground.enabled = false;
  const Vec3 center(0.2, 0.3, 0.0);
  s.payload = RigidSphere{0.001, 0.01, center};
  Material m;
  m.density = 1000;
  const auto sim = build(right_triangle(), m, s);
  auto st = initial_state(sim);
  const double weight = 0.001 * 9.81;
  // the sheet surface sits half a thickness above the mid-plane
  st.sphere_x = Vec3(center.x(), center.y(), 0.01 + m.thickness / 2 - weight / s.ground.stiffness);
  const auto cf = contact_forces(sim, st);
  EXPECT_NEAR(cf.sphere.z(), weight, 1e-12);
  Vec3 sum = Vec3::Zero();
  for (const auto& f : cf.nodes) sum += f;
  EXPECT_NEAR(sum.z(), -weight, 1e-12);
  // barycentric coordinates of (0.2, 0.3) in (0,0),(1,0),(0,1)
  const double bary[3] = {1 - 0.2 - 0.3, 0.2, 0.3};
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(cf.nodes[sim.node(i)].z() / -weight, bary[i], 1e-9);
}

TEST(Contact, SharedEdgeCountedOnce) {
  SceneConfig s;
  s.dt = 1e-4;
  s.ground.enabled = false;
  s.payload = RigidSphere{0.001, 0.01, {0.5, 0.5, 0.009}};  // above the square's diagonal
  Material m;
  m.density = 1000;
  auto p = define_panel(unit_square(true, EdgeKind::Crease), {0.75, 0.25});
  p = define_panel(p, {0.25, 0.75});
  const auto sim = build(p, m, s);
  const auto cf = contact_forces(sim, initial_state(sim));
  EXPECT_NEAR(cf.sphere.z(), s.ground.stiffness * (0.001 + m.thickness / 2), 1e-9);
}

// ---------------------------------------------------------------------------
// step

TEST(Step, EquilibriumIsStationary) {
  const auto sim = build(fixtures::tripod());
  auto st = initial_state(sim);
  const auto before = st.x;
  step(sim, st);
  EXPECT_EQ(st.x, before);
  EXPECT_DOUBLE_EQ(st.time, sim.scene.dt);
}

TEST(Step, FreeFallRecurrence) {
  SceneConfig s;
  s.ground.enabled = false;
  s.dt = 0.01;
  s.payload = RigidSphere{0.001, 0.01, {10, 10, 10}};
  const auto sim = build(right_triangle(), {}, s);
  auto st = initial_state(sim);
  step(sim, st);
  step(sim, st);
  EXPECT_NEAR(st.sphere_x.z() - 10, -0.002943, 1e-12);
  EXPECT_NEAR(st.sphere_v.z(), -0.1962, 1e-12);
  // sheet nodes follow the same recurrence up to mass-proportional damping
  Material light;
  light.damping = 1e-12;
  const auto sheet = build(right_triangle(), light, s);
  auto ss = initial_state(sheet);
  step(sheet, ss);
  step(sheet, ss);
  for (const auto& v : ss.v) EXPECT_NEAR(v.z(), -0.1962, 1e-12);
  for (std::size_t i = 0; i < sheet.size(); ++i) EXPECT_NEAR(ss.x[i].z() - sheet.rest[i].z(), -0.002943, 1e-12);
}

TEST(Step, LockedAxesNeverMove) {
  auto p = right_triangle();
  p.find(1)->dof = {false, false, true};
  SceneConfig s;
  s.gravity = Vec3(3, -2, -9.81);
  const auto sim = build(p, {}, s);
  auto st = initial_state(sim);
  const Vec3 start = st.x[sim.node(1)];
  for (int i = 0; i < 1.0 / sim.scene.dt; ++i) step(sim, st);
  EXPECT_EQ(st.x[sim.node(1)].x(), start.x());
  EXPECT_EQ(st.x[sim.node(1)].y(), start.y());
  EXPECT_NE(st.x[sim.node(0)].x(), sim.rest[sim.node(0)].x());
}

TEST(Step, BlowupReported) {
  SceneConfig s = no_ground();
  s.dt = 0.05;
  const auto sim = build(right_triangle(0.01), {}, s);
  auto st = initial_state(sim);
  st.x[0].x() += 0.002;
  try {
    for (int i = 0; i < 10000; ++i) step(sim, st);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NumericalBlowup);
    EXPECT_EQ(e.entity().rfind("step ", 0), 0u);
  }
}

// ---------------------------------------------------------------------------
// actuation

TEST(Actuation, InactiveBeforeTrigger) {
  auto p = fixtures::tripod();
  const auto sim = build(p);
  ActuationEvent ev;
  ev.trigger_step = 10;
  ev.keypoints = {3};
  ev.target_displacement = 0.05;
  auto st = initial_state(sim, 1);
  for (int i = 0; i < 10; ++i) {
    update_triggers(sim, st, {ev});
    for (const auto& f : actuation_forces(sim, st, {ev})) EXPECT_EQ(f, Vec3::Zero());
    step(sim, st, {ev});
  }
  update_triggers(sim, st, {ev});
  EXPECT_EQ(st.triggered_at[0], 10);
}

TEST(Actuation, ZeroTargetHoldsRest) {
  const auto p = fixtures::tripod();
  SceneConfig s;
  const auto sim = build(p, {}, s);
  ActuationEvent ev;
  ev.keypoints = {3, 4, 5};
  ev.target_displacement = 0.0;
  auto st = initial_state(sim, 1);
  for (int i = 0; i < 2.0 / sim.scene.dt; ++i) step(sim, st, {ev});
  for (int id : {3, 4, 5}) EXPECT_NEAR(st.x[sim.node(id)].z(), 0.0, 1e-3);
}

TEST(Actuation, ReachesTargetAtCappedSpeed) {
  const auto p = fixtures::tripod();
  const auto sim = build(p);
  ActuationEvent ev;
  ev.keypoints = {3, 4, 5};
  ev.target_displacement = 0.03;
  ev.max_speed = 0.1;
  auto st = initial_state(sim, 1);
  double peak = 0;
  for (int i = 0; i < 0.6 / sim.scene.dt; ++i) {
    step(sim, st, {ev});
    peak = std::max(peak, st.v[sim.node(3)].z());
  }
  EXPECT_NEAR(st.x[sim.node(3)].z(), 0.03, 2e-3);
  EXPECT_LT(peak, 0.15);
}

TEST(Actuation, ForceLimitClampsServo) {
  const auto sim = build(fixtures::tripod());
  ActuationEvent ev;
  ev.keypoints = {3};
  ev.target_displacement = 0.01;
  ev.max_force = 0.02;
  ev.hold = true;  // not triggered: the command is the start position at rest
  auto st = initial_state(sim, 1);
  const int n = sim.node(3);
  st.x[n].z() = -0.5;  // far below the command
  EXPECT_DOUBLE_EQ(actuation_forces(sim, st, {ev})[n].z(), 0.02);
  st.x[n].z() = 0.5;
  EXPECT_DOUBLE_EQ(actuation_forces(sim, st, {ev})[n].z(), -0.02);
  // small errors stay on the unclamped law m (g^2 e + 2 g e')
  st.x[n].z() = -1e-6;
  const double g = ev.gain, expect = sim.mass[n] * g * g * 1e-6;
  EXPECT_NEAR(actuation_forces(sim, st, {ev})[n].z(), expect, 1e-12 * expect + 1e-15);
}

TEST(Actuation, TravelStopsAreInelastic) {
  const auto sim = build(fixtures::tripod());
  ActuationEvent ev;
  ev.keypoints = {3};
  ev.target_displacement = -0.03;
  ev.limit_travel = true;
  auto st = initial_state(sim, 1);
  const int n = sim.node(3);
  const double z0 = sim.start[n].z();
  st.x[n].z() = z0 + 0.01;
  st.v[n].z() = 0.4;
  apply_travel_stops(sim, st, {ev});
  EXPECT_EQ(st.x[n].z(), z0);
  EXPECT_EQ(st.v[n].z(), 0.0);
  st.x[n].z() = z0 - 0.05;
  st.v[n].z() = -0.4;
  apply_travel_stops(sim, st, {ev});
  EXPECT_EQ(st.x[n].z(), z0 - 0.03);
  EXPECT_EQ(st.v[n].z(), 0.0);
  // inside the range, or moving back into it: untouched
  st.x[n].z() = z0 - 0.01;
  st.v[n].z() = 0.4;
  apply_travel_stops(sim, st, {ev});
  EXPECT_EQ(st.x[n].z(), z0 - 0.01);
  EXPECT_EQ(st.v[n].z(), 0.4);
}

TEST(Actuation, TravelStopsBoundWholeRollout) {
  SceneConfig s;
  s.max_time = 0.4;
  const auto sim = build(fixtures::tripod(), {}, s);
  ActuationEvent ev;
  ev.keypoints = {3, 4, 5};
  ev.target_displacement = 0.02;
  ev.max_speed = 0.5;
  ev.gain = 600;  // stiff enough to overshoot without stops
  ev.limit_travel = true;
  RolloutOptions ro;
  ro.frame_stride = 1;
  const auto tr = run_rollout(sim, {ev}, ro);
  for (const auto& fr : tr.frames)
    for (int id : {3, 4, 5}) {
      const double dz = fr.kp[sim.node(id)].z() - sim.start[sim.node(id)].z();
      ASSERT_GE(dz, 0.0);
      ASSERT_LE(dz, 0.02);
    }
}

TEST(Actuation, RejectsUnactuatedKeypoint) {
  const auto sim = build(fixtures::tripod());
  ActuationEvent ev;
  ev.keypoints = {0};
  EXPECT_EQ(code_of([&] { run_rollout(sim, {ev}); }), Errc::NotActuatedKeypoint);
  ev.keypoints = {3};
  ev.axis = Axis::X;
  EXPECT_EQ(code_of([&] { run_rollout(sim, {ev}); }), Errc::NotActuatedKeypoint);
}

// ---------------------------------------------------------------------------
// rollouts

TEST(Rollout, FlatSheetSettles) {
  SceneConfig s;
  s.max_time = 5.0;
  const auto sim = build(fixtures::tripod(), {}, s);
  const auto tr = run_rollout(sim, {});
  double worst = 0;
  for (const auto& fr : tr.frames)
    for (std::size_t i = 0; i < sim.size(); ++i) worst = std::max(worst, (fr.kp[i] - sim.rest[i]).norm());
  EXPECT_LT(worst, 1e-3);
  EXPECT_NEAR(tr.frames.back().t, 5.0, 1e-9);
}

TEST(Rollout, Deterministic) {
  SceneConfig s;
  s.max_time = 0.5;
  s.payload = RigidSphere{0.001, 0.01, {0, 0, 0.012}};
  const auto sim = build(fixtures::tripod(), {}, s);
  ActuationEvent ev;
  ev.keypoints = {3, 4, 5};
  ev.target_displacement = 0.04;
  std::ostringstream a, b;
  write_frames(a, run_rollout(sim, {ev}));
  write_frames(b, run_rollout(sim, {ev}));
  EXPECT_EQ(a.str(), b.str());
  EXPECT_GT(a.str().size(), 1000u);
}

TEST(Rollout, LockedComponentsBitExact) {
  auto p = fixtures::tripod();
  p.find(0)->dof = {false, true, false};
  p.find(3)->dof = {false, false, true};
  SceneConfig s;
  s.max_time = 1.0;
  const auto sim = build(p, {}, s);
  ActuationEvent ev;
  ev.keypoints = {3, 4, 5};
  ev.target_displacement = 0.05;
  const auto tr = run_rollout(sim, {ev}, {.frame_stride = 1});
  for (const auto& fr : tr.frames) {
    EXPECT_EQ(fr.kp[sim.node(0)].x(), sim.rest[sim.node(0)].x());
    EXPECT_EQ(fr.kp[sim.node(0)].z(), sim.rest[sim.node(0)].z());
    EXPECT_EQ(fr.kp[sim.node(3)].head<2>(), sim.rest[sim.node(3)].head<2>());
  }
}

TEST(Rollout, PayloadDropsAndRests) {
  SceneConfig s;
  s.max_time = 3.0;
  s.payload = RigidSphere{0.001, 0.01, {0.3, 0.3, 0.05}};  // clear of the sheet
  const auto sim = build(fixtures::tripod(), {}, s);
  const auto tr = run_rollout(sim, {});
  ASSERT_TRUE(tr.sphere_at_rest);
  EXPECT_LT(tr.rest_time, 1.0);
  EXPECT_NEAR(throw_distance(tr, Axis::X), 0.0, 1e-6);
  EXPECT_NEAR(tr.sphere_final.z(), 0.01, 1e-4);
}

TEST(ThrowDistance, AxisProjection) {
  Trajectory tr;
  tr.sphere_at_rest = true;
  tr.sphere_initial = Vec3(0, 0, 0.02);
  tr.sphere_final = Vec3(0.30, 0, 0.01);
  EXPECT_DOUBLE_EQ(throw_distance(tr, Axis::X), 0.30);
  tr.sphere_final = Vec3(0, 0.4, 0.01);
  EXPECT_DOUBLE_EQ(throw_distance(tr, Axis::X), 0.0);
  tr.sphere_final = tr.sphere_initial;
  EXPECT_DOUBLE_EQ(throw_distance(tr, Axis::Y), 0.0);
  tr.sphere_at_rest = false;
  EXPECT_EQ(code_of([&] { throw_distance(tr, Axis::X); }), Errc::SphereNeverAtRest);
}

TEST(Energy, PassiveDissipation) {
  SceneConfig s;
  s.max_time = 2.0;
  s.payload = RigidSphere{0.001, 0.01, {0.0, 0.0, 0.03}};
  auto p = fixtures::tripod();
  const auto sim = build(p, {}, s);
  auto st = initial_state(sim);
  // fold each arm up by 30 degrees about its crease so the sheet starts unstrained but raised
  const int arms[3][3] = {{3, 1, 2}, {4, 2, 0}, {5, 0, 1}};
  for (const auto& a : arms) {
    const Vec3 o = sim.rest[sim.node(a[1])], axis = (sim.rest[sim.node(a[2])] - o).normalized();
    const Eigen::Matrix3d rot = Eigen::AngleAxisd(M_PI / 6, axis).toRotationMatrix();
    Vec3& tip = st.x[sim.node(a[0])];
    tip = o + rot * (tip - o);
    if (tip.z() < 0) tip = o + rot.transpose() * rot.transpose() * (tip - o);
  }
  ASSERT_LT(energy(sim, st).membrane, 1e-12);
  double prev = energy(sim, st).total();
  const double e0 = prev;
  ASSERT_GT(e0, 0.0);
  for (int i = 0; i < 2.0 / sim.scene.dt; ++i) {
    step(sim, st);
    if (i % 20 == 19) {
      const double e = energy(sim, st).total();
      EXPECT_LE(e, prev + 0.01 * e0) << "step " << i;
      prev = e;
    }
  }
}

TEST(ClosedLoop, StartsFoldedShutWithoutStrain) {
  for (const auto& p : {fixtures::box_loop(), fixtures::block_contract()}) {
    const auto mesh = mesh_pattern(p);
    const auto sim = assemble(p, mesh, {}, SceneConfig{});
    // every triangle edge, seam ones included, keeps its design length
    double worst = 0;
    for (const auto& t : mesh.triangles)
      for (int i = 0; i < 3; ++i) {
        const int a = t.ids[i], b = t.ids[(i + 1) % 3];
        const double now = (sim.start[sim.node(a)] - sim.start[sim.node(b)]).norm();
        worst = std::max(worst, std::abs(now - (p.at(a).position - p.at(b).position).norm()));
      }
    EXPECT_LT(worst, 1e-6) << p.name;
    for (const auto& x : sim.start) EXPECT_GE(x.z(), -1e-12) << p.name;
  }
}

TEST(ClosedLoop, BoxSeamPanelReachesRestShape) {
  const auto p = fixtures::box_loop();
  SceneConfig s;
  s.max_time = 3.0;
  const auto sim = build(p, {}, s);
  ActuationEvent ev;
  ev.keypoints = {2, 7};
  ev.target_displacement = 0.05;
  const auto tr = run_rollout(sim, {ev});
  const auto& x = tr.frames.back().kp;
  // panel 3 spans the seam: its keypoints 3, 8 and the survivors 0, 5 of the merged pairs
  auto len = [&](int a, int b) { return (x[sim.node(a)] - x[sim.node(b)]).norm(); };
  auto rest = [&](int a, int b) { return (p.at(a).position - p.at(b).position).norm(); };
  EXPECT_NEAR(len(3, 0), rest(3, 4), 1e-3);
  EXPECT_NEAR(len(8, 5), rest(8, 9), 1e-3);
  EXPECT_NEAR(len(0, 5), rest(4, 9), 1e-3);
  EXPECT_NEAR(len(3, 8), rest(3, 8), 1e-3);
}
