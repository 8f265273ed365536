#pragma once

// Point-mass deformable sheet: constant-strain StVK membranes per triangle,
// dihedral springs across panel-interior edges, penalty ground and payload
// contact with Coulomb friction, per-keypoint DOF locks and position servos.
// Integration is semi-implicit Euler.

#include "origami/design_graph.hpp"
#include "origami/panel_mesh.hpp"

#include <Eigen/Dense>

#include <cstdio>
#include <limits>
#include <optional>
#include <set>
#include <ostream>
#include <string>
#include <vector>

namespace origami {

using Mat2 = Eigen::Matrix2d;
using Mat32 = Eigen::Matrix<double, 3, 2>;

struct Material {
  double youngs_modulus = 1e7;     // Pa
  double poisson_ratio = 0.3;
  double thickness = 0.002;        // m
  double density = 1270.0;         // kg/m^3
  double panel_bend_stiffness = 0.05;  // N m / rad, panel-interior edges only
  double damping = 2.0;            // 1/s, mass proportional

  double lame_mu() const { return youngs_modulus / (2.0 * (1.0 + poisson_ratio)); }
  double lame_lambda() const { return youngs_modulus * poisson_ratio / (1.0 - poisson_ratio * poisson_ratio); }

  void check() const {
    if (!(youngs_modulus > 0 && thickness > 0 && density > 0 && damping > 0 && panel_bend_stiffness >= 0 &&
          poisson_ratio >= 0 && poisson_ratio <= 0.49))
      throw Error(Errc::InvalidArgument, "material parameters out of range", "material");
  }
};

struct GroundContact {
  bool enabled = true;
  double stiffness = 1e4;  // N/m
  double damping = 10.0;   // N s/m
  double friction = 0.5;
};

struct RigidSphere {
  double mass = 0.001;
  double radius = 0.01;
  Vec3 initial_position = Vec3::Zero();
};

struct SceneConfig {
  Vec3 gravity{0.0, 0.0, -9.81};
  GroundContact ground;
  std::optional<RigidSphere> payload;
  double dt = 1e-4;
  double max_time = 5.0;

  void check() const {
    if (!(dt > 0) || !(max_time >= 0)) throw Error(Errc::InvalidArgument, "dt must be positive", "scene");
    if (ground.stiffness < 0 || ground.damping < 0 || ground.friction < 0)
      throw Error(Errc::InvalidArgument, "contact parameters must be non-negative", "scene");
    if (payload && !(payload->mass > 0 && payload->radius > 0))
      throw Error(Errc::InvalidArgument, "payload mass and radius must be positive", "scene");
  }
};

// A position command on one axis for a set of actuated keypoints. The servo
// starts at trigger_step, or at the first step the payload has been touching
// the sheet for contact_steps consecutive steps when wait_for_payload is set
// (whichever is later). Targets are offsets from the starting position. With
// hold set, the servo keeps the keypoint at its start until the trigger.
struct ActuationEvent {
  int trigger_step = 0;
  bool wait_for_payload = false;
  int contact_steps = 10;
  bool hold = false;
  std::vector<int> keypoints;
  Axis axis = Axis::Z;
  double target_displacement = 0.0;  // m, from the start position
  double max_speed = 0.21;           // m/s
  double gain = 200.0;               // 1/s
  double max_force = 0.0;            // N, 0 = unlimited
  bool limit_travel = false;         // hard stops at the start and at the target
};

// ---------------------------------------------------------------------------
// Assembled model

struct MembraneElement {
  std::array<int, 3> node{};
  Mat2 rest_inv;      // inverse of the 2x2 rest edge matrix
  double volume = 0;  // thickness x rest area
};

struct HingeElement {
  int e0 = 0, e1 = 0;  // shared edge
  int a0 = 0, a1 = 0;  // apex of the triangle on each side
  double rest_angle = 0;
  double stiffness = 0;
};

struct Simulation {
  Material material;
  SceneConfig scene;
  std::vector<int> node_ids;                // live keypoint id per node
  std::map<int, int> node_of;               // any design id (tombstones too) -> node
  std::vector<Vec3> rest;
  std::vector<Vec3> start;  // initial positions; rest unless seams were closed or the caller posed the sheet
  std::vector<double> mass;
  std::vector<DofMask> dof;
  std::vector<std::optional<Axis>> actuation;
  std::vector<MembraneElement> elements;
  std::vector<HingeElement> hinges;
  std::vector<std::array<int, 3>> faces;     // per element, for payload contact
  std::map<EdgeKey, std::vector<int>> edge_faces;
  std::vector<std::vector<int>> node_faces;

  std::size_t size() const { return node_ids.size(); }
  int node(int keypoint_id) const {
    auto it = node_of.find(keypoint_id);
    if (it == node_of.end()) throw Error(Errc::UnknownKeypoint, "keypoint " + std::to_string(keypoint_id) + " is not simulated", "keypoint " + std::to_string(keypoint_id));
    return it->second;
  }
};

struct SimState {
  double time = 0;
  long step = 0;
  std::vector<Vec3> x, v;
  Vec3 sphere_x = Vec3::Zero(), sphere_v = Vec3::Zero();
  bool sphere_ground = false, sphere_mesh = false;
  int payload_contact_run = 0;
  std::vector<long> triggered_at;  // per event, -1 until triggered
};

namespace detail {

// Unsigned dihedral-style signed angle of the hinge (x0,x1 | x2 on one side,
// x3 on the other). Zero when flat.
inline double dihedral(const Vec3& x0, const Vec3& x1, const Vec3& x2, const Vec3& x3) {
  const Vec3 e = x1 - x0;
  const Vec3 n1 = e.cross(x2 - x0), n2 = (x3 - x0).cross(e);
  const double en = e.norm();
  return std::atan2(n1.cross(n2).dot(e) / en, n1.dot(n2));
}

inline Simulation assemble_flat(const CreasePattern& pattern, const TriMesh& mesh, const Material& material, const SceneConfig& scene) {
  material.check();
  scene.check();
  Simulation sim;
  sim.material = material;
  sim.scene = scene;
  for (const auto& k : pattern.keypoints) {
    if (!k.live()) continue;
    sim.node_of[k.id] = static_cast<int>(sim.node_ids.size());
    sim.node_ids.push_back(k.id);
    sim.rest.push_back(k.position);
    sim.dof.push_back(k.dof);
    sim.actuation.push_back(k.actuation);
  }
  for (const auto& k : pattern.keypoints)
    if (!k.live()) sim.node_of[k.id] = sim.node_of.at(pattern.canonical(k.id));
  sim.mass.assign(sim.size(), 0.0);
  sim.node_faces.resize(sim.size());

  std::map<EdgeKey, std::vector<std::pair<int, int>>> panel_edges;  // design edge -> (element, apex design id)
  for (const auto& t : mesh.triangles) {
    const Vec2 p0 = pattern.at(t.ids[0]).xy(), p1 = pattern.at(t.ids[1]).xy(), p2 = pattern.at(t.ids[2]).xy();
    Mat2 dm;
    dm.col(0) = p1 - p0;
    dm.col(1) = p2 - p0;
    const double area = 0.5 * dm.determinant();
    const int index = static_cast<int>(sim.elements.size());
    if (std::abs(area) < 1e-12)
      throw Error(Errc::DegenerateRestTriangle, "rest triangle area below 1e-12 m^2", "triangle " + std::to_string(index));
    MembraneElement el;
    for (int i = 0; i < 3; ++i) el.node[i] = sim.node_of.at(t.ids[i]);
    el.rest_inv = dm.inverse();
    el.volume = material.thickness * std::abs(area);
    for (int n : el.node) sim.mass[n] += material.density * el.volume / 3.0;
    sim.elements.push_back(el);
    sim.faces.push_back(el.node);
    for (int i = 0; i < 3; ++i) {
      sim.node_faces[el.node[i]].push_back(index);
      sim.edge_faces[edge_key(el.node[i], el.node[(i + 1) % 3])].push_back(index);
      if (t.panel >= 0) panel_edges[edge_key(t.ids[i], t.ids[(i + 1) % 3])].push_back({index, t.ids[(i + 2) % 3]});
    }
  }
  for (std::size_t n = 0; n < sim.size(); ++n)
    if (sim.mass[n] <= 0.0)
      throw Error(Errc::ZeroMassKeypoint, "keypoint belongs to no triangle", "keypoint " + std::to_string(sim.node_ids[n]));

  // Panel-interior edges: shared by two triangles of the same panel and not a
  // crease or boundary line. Creases stay free hinges.
  for (const auto& [key, owners] : panel_edges) {
    if (owners.size() != 2 || mesh.constrained_edges.count(key)) continue;
    const auto& tri0 = mesh.triangles[owners[0].first];
    // orient the edge as it appears in the first triangle
    int e0 = key.first, e1 = key.second;
    for (int i = 0; i < 3; ++i)
      if (tri0.ids[i] == key.second && tri0.ids[(i + 1) % 3] == key.first) std::swap(e0, e1);
    HingeElement h;
    h.e0 = sim.node_of.at(e0);
    h.e1 = sim.node_of.at(e1);
    h.a0 = sim.node_of.at(owners[0].second);
    h.a1 = sim.node_of.at(owners[1].second);
    h.rest_angle = detail::dihedral(pattern.at(e0).position, pattern.at(e1).position, pattern.at(owners[0].second).position,
                                    pattern.at(owners[1].second).position);
    h.stiffness = material.panel_bend_stiffness;
    sim.hinges.push_back(h);
  }
  sim.start = sim.rest;
  return sim;
}

}  // namespace detail

inline SimState initial_state(const Simulation& sim, std::size_t event_count = 0) {
  SimState s;
  s.x = sim.start;
  s.v.assign(sim.size(), Vec3::Zero());
  if (sim.scene.payload) s.sphere_x = sim.scene.payload->initial_position;
  s.triggered_at.assign(event_count, -1);
  return s;
}

// ---------------------------------------------------------------------------
// Elastic forces

namespace detail {

inline Mat32 deformation_gradient(const MembraneElement& el, const std::vector<Vec3>& x) {
  Mat32 ds;
  ds.col(0) = x[el.node[1]] - x[el.node[0]];
  ds.col(1) = x[el.node[2]] - x[el.node[0]];
  return ds * el.rest_inv;
}

}  // namespace detail

inline double membrane_energy(const Simulation& sim, const std::vector<Vec3>& x) {
  const double mu = sim.material.lame_mu(), lambda = sim.material.lame_lambda();
  double w = 0;
  for (const auto& el : sim.elements) {
    const Mat32 f = detail::deformation_gradient(el, x);
    const Mat2 e = 0.5 * (f.transpose() * f - Mat2::Identity());
    w += el.volume * (mu * e.squaredNorm() + 0.5 * lambda * e.trace() * e.trace());
  }
  return w;
}

inline void add_membrane_forces(const Simulation& sim, const std::vector<Vec3>& x, std::vector<Vec3>& f) {
  const double mu = sim.material.lame_mu(), lambda = sim.material.lame_lambda();
  for (const auto& el : sim.elements) {
    const Mat32 def = detail::deformation_gradient(el, x);
    const Mat2 e = 0.5 * (def.transpose() * def - Mat2::Identity());
    const Mat2 s = lambda * e.trace() * Mat2::Identity() + 2.0 * mu * e;
    const Mat32 h = -el.volume * (def * s) * el.rest_inv.transpose();
    f[el.node[1]] += h.col(0);
    f[el.node[2]] += h.col(1);
    f[el.node[0]] -= h.col(0) + h.col(1);
  }
}

inline std::vector<Vec3> membrane_forces(const Simulation& sim, const std::vector<Vec3>& x) {
  std::vector<Vec3> f(sim.size(), Vec3::Zero());
  add_membrane_forces(sim, x, f);
  return f;
}

inline double hinge_energy(const Simulation& sim, const std::vector<Vec3>& x) {
  double w = 0;
  for (const auto& h : sim.hinges) {
    const double d = detail::dihedral(x[h.e0], x[h.e1], x[h.a0], x[h.a1]) - h.rest_angle;
    w += 0.5 * h.stiffness * d * d;
  }
  return w;
}

inline void add_hinge_forces(const Simulation& sim, const std::vector<Vec3>& x, std::vector<Vec3>& f) {
  for (const auto& h : sim.hinges) {
    if (h.stiffness == 0.0) continue;
    const Vec3 &x0 = x[h.e0], &x1 = x[h.e1], &x2 = x[h.a0], &x3 = x[h.a1];
    const Vec3 e = x1 - x0;
    const double ee = e.squaredNorm();
    const Vec3 n1 = e.cross(x2 - x0), n2 = (x3 - x0).cross(e);
    const double n1n = n1.squaredNorm(), n2n = n2.squaredNorm();
    if (ee <= 0 || n1n <= 0 || n2n <= 0) continue;
    // apex gradients: along each face normal, scaled by 1 / apex height
    const double len = std::sqrt(ee);
    const Vec3 g2 = -len / n1n * n1;
    const Vec3 g3 = -len / n2n * n2;
    const double t2 = (x2 - x0).dot(e) / ee, t3 = (x3 - x0).dot(e) / ee;
    const Vec3 g0 = -(1.0 - t2) * g2 - (1.0 - t3) * g3;
    const Vec3 g1 = -t2 * g2 - t3 * g3;
    const double torque = -h.stiffness * (detail::dihedral(x0, x1, x2, x3) - h.rest_angle);
    f[h.e0] += torque * g0;
    f[h.e1] += torque * g1;
    f[h.a0] += torque * g2;
    f[h.a1] += torque * g3;
  }
}

inline std::vector<Vec3> hinge_forces(const Simulation& sim, const std::vector<Vec3>& x) {
  std::vector<Vec3> f(sim.size(), Vec3::Zero());
  add_hinge_forces(sim, x, f);
  return f;
}

namespace detail {

// A merged pattern cannot start flat: every triangle is rest-shaped from the
// unmerged design, so the seam panels would begin hugely strained. Instead the
// unmerged sheet is pulled shut by zero-length springs between each merged pair
// (with a slight upward bowl to pick a fold direction) under heavy damping, and
// each merged node starts at the midpoint of its pair.
inline std::vector<Vec3> close_seams(const CreasePattern& pattern, const TriMesh& mesh, const Simulation& merged) {
  std::set<int> used;
  for (const auto& t : mesh.triangles) used.insert(t.ids.begin(), t.ids.end());
  CreasePattern open = pattern;
  std::vector<std::pair<int, int>> seams;  // (tombstone id, live id)
  for (auto& k : open.keypoints)
    if (k.merged_into && used.count(k.id)) {
      seams.push_back({k.id, pattern.canonical(k.id)});
      k.merged_into.reset();
    }
  SceneConfig quiet = merged.scene;
  quiet.ground.enabled = false;
  quiet.payload.reset();
  if (seams.empty()) return merged.start;
  const Simulation sheet = assemble_flat(open, mesh, merged.material, quiet);
  const double dt = quiet.dt;

  Eigen::AlignedBox2d box;
  Vec3 center = Vec3::Zero();
  for (const auto& r : sheet.rest) {
    box.extend(r.head<2>());
    center += r / static_cast<double>(sheet.size());
  }
  const double diag = box.diagonal().norm();
  std::vector<Vec3> x = sheet.rest, v(sheet.size(), Vec3::Zero());

  // Strip loops (every seam joins points one common offset apart) start rolled
  // onto a cylinder whose circumference is that offset, so the seams already
  // meet. Other loops start from a slight upward bowl.
  const Vec3 offset = sheet.rest[sheet.node(seams[0].first)] - sheet.rest[sheet.node(seams[0].second)];
  bool strip = offset.norm() > 1e-6 * diag;
  for (const auto& [dead, live] : seams)
    strip = strip && (sheet.rest[sheet.node(dead)] - sheet.rest[sheet.node(live)] - offset).norm() < 1e-9 * diag;
  if (strip) {
    const double circumference = offset.norm(), radius = circumference / (2 * M_PI);
    const Vec3 along = offset / circumference;
    double u_min = std::numeric_limits<double>::infinity();
    for (const auto& r : sheet.rest) u_min = std::min(u_min, r.dot(along));
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double u = sheet.rest[i].dot(along) - u_min, phi = u / radius;
      x[i] += (radius * std::sin(phi) - u) * along + Vec3(0, 0, radius * (1 - std::cos(phi)));
    }
  } else {
    for (std::size_t i = 0; i < x.size(); ++i)
      if (sheet.dof[i][2]) x[i].z() += 0.05 * (x[i] - center).head<2>().squaredNorm() / diag;
  }

  // Constant pull sized so the seam closes at roughly 0.1 m/s against the drag,
  // turning into a stiff spring for the last stretch.
  const double drag = 0.5 / dt;
  std::vector<std::pair<int, int>> pairs;
  double pull = std::numeric_limits<double>::infinity(), k_seam = pull;
  for (const auto& [a, b] : seams) {
    pairs.push_back({sheet.node(a), sheet.node(b)});
    const double m = std::min(sheet.mass[pairs.back().first], sheet.mass[pairs.back().second]);
    pull = std::min(pull, m * drag * 0.1);
    k_seam = std::min(k_seam, 0.05 * m / (dt * dt));
  }
  std::vector<Vec3> f(x.size());
  for (int it = 0; it < 200000; ++it) {
    std::fill(f.begin(), f.end(), Vec3::Zero());
    add_membrane_forces(sheet, x, f);
    add_hinge_forces(sheet, x, f);
    double gap = 0;
    for (const auto& [a, b] : pairs) {
      const Vec3 d = x[b] - x[a];
      gap = std::max(gap, d.norm());
      const Vec3 fs = d * std::min(k_seam, pull / std::max(d.norm(), 1e-300));
      f[a] += fs;
      f[b] -= fs;
    }
    double kinetic = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      v[i] = (v[i] + dt * f[i] / sheet.mass[i]) * (1.0 - drag * dt);
      for (int c = 0; c < 3; ++c)
        if (!sheet.dof[i][c]) v[i][c] = 0.0;
      x[i] += dt * v[i];
      kinetic += 0.5 * sheet.mass[i] * v[i].squaredNorm();
    }
    if (gap < 1e-7 * diag && kinetic < 1e-14) break;
  }

  // keep the closed shape from starting below the design plane
  double lowest = std::numeric_limits<double>::infinity(), floor = lowest;
  for (std::size_t i = 0; i < x.size(); ++i) {
    lowest = std::min(lowest, x[i].z());
    floor = std::min(floor, sheet.rest[i].z());
  }
  if (lowest < floor)
    for (auto& p : x) p.z() += floor - lowest;

  std::vector<Vec3> start = merged.rest;
  for (std::size_t n = 0; n < merged.size(); ++n) start[n] = x[sheet.node(merged.node_ids[n])];
  for (const auto& [dead, live] : seams)
    start[merged.node(live)] = 0.5 * (x[sheet.node(dead)] + x[sheet.node(live)]);
  return start;
}

}  // namespace detail

inline Simulation assemble(const CreasePattern& pattern, const TriMesh& mesh, const Material& material, const SceneConfig& scene) {
  Simulation sim = detail::assemble_flat(pattern, mesh, material, scene);
  if (sim.size() != pattern.keypoints.size()) sim.start = detail::close_seams(pattern, mesh, sim);
  return sim;
}

// ---------------------------------------------------------------------------
// Contact

// Explicit penalty contact is only stable while the spring and damper cannot
// overshoot within one step; both are capped by the lighter body's mass.
struct ContactLaw {
  double stiffness;
  double damping;
  double friction;

  // Caps keep a body explicit-stable even when it touches the ground and the
  // sheet at once (two springs plus two dampers in the same step).
  static ContactLaw clamped(const GroundContact& g, double mass, double dt) {
    return {std::min(g.stiffness, 0.25 * mass / (dt * dt)), std::min(g.damping, 0.25 * mass / dt), g.friction};
  }

  // Force on the body given penetration depth, normal and relative velocity.
  Vec3 force(double depth, const Vec3& n, const Vec3& rel_v, double mass, double dt) const {
    const double vn = rel_v.dot(n);
    const double fn = std::max(0.0, stiffness * depth - damping * vn);
    Vec3 out = fn * n;
    const Vec3 vt = rel_v - vn * n;
    const double speed = vt.norm();
    if (speed > 0.0 && fn > 0.0) out -= std::min(friction * fn, mass * speed / dt) / speed * vt;
    return out;
  }

  double energy(double depth) const { return 0.5 * stiffness * depth * depth; }
};

struct ClosestPoint {
  Vec3 point;
  Vec3 bary;    // weights of (a, b, c)
  int feature;  // 0 face, 1..3 vertex a/b/c, 4..6 edge ab/bc/ca
};

// Closest point on triangle (a, b, c) to p (Ericson, Real-Time Collision
// Detection, 5.1.5).
inline ClosestPoint closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return {a, {1, 0, 0}, 1};
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return {b, {0, 1, 0}, 2};
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) {
    const double v = d1 / (d1 - d3);
    return {a + v * ab, {1 - v, v, 0}, 4};
  }
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return {c, {0, 0, 1}, 3};
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) {
    const double w = d2 / (d2 - d6);
    return {a + w * ac, {1 - w, 0, w}, 6};
  }
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return {b + w * (c - b), {0, 1 - w, w}, 5};
  }
  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom, w = vc * denom;
  return {a + ab * v + ac * w, {1 - v - w, v, w}, 0};
}

struct PayloadContact {
  int face = 0;
  ClosestPoint cp;
  double depth = 0;
  Vec3 normal = Vec3::UnitZ();
};

// Sphere-sheet contacts, one per touched mesh feature. A shared edge or vertex
// is reported once, and not at all when a face next to it is already in
// contact.
inline std::vector<PayloadContact> payload_contacts(const Simulation& sim, const std::vector<Vec3>& x, const Vec3& center) {
  if (!sim.scene.payload) return {};
  // the sheet collides with its half thickness, like a flex radius
  const double r = sim.scene.payload->radius + 0.5 * sim.material.thickness;
  std::vector<PayloadContact> found;
  std::map<std::array<int, 3>, std::size_t> by_feature;
  for (std::size_t f = 0; f < sim.faces.size(); ++f) {
    const auto& tri = sim.faces[f];
    const Vec3 &a = x[tri[0]], &b = x[tri[1]], &c = x[tri[2]];
    // cheap reject on the bounding box
    const Vec3 lo = a.cwiseMin(b).cwiseMin(c).array() - r, hi = a.cwiseMax(b).cwiseMax(c).array() + r;
    if ((center.array() < lo.array()).any() || (center.array() > hi.array()).any()) continue;
    const ClosestPoint cp = closest_point_on_triangle(center, a, b, c);
    const Vec3 d = center - cp.point;
    const double dist = d.norm();
    if (dist >= r) continue;
    Vec3 n;
    if (dist > 1e-12) {
      n = d / dist;
    } else {
      n = (b - a).cross(c - a).normalized();
      if (n.z() < 0) n = -n;
    }
    std::array<int, 3> key;
    if (cp.feature == 0)
      key = {0, static_cast<int>(f), 0};
    else if (cp.feature <= 3)
      key = {1, tri[cp.feature - 1], 0};
    else {
      const int i = cp.feature - 4;
      const auto ek = edge_key(tri[i], tri[(i + 1) % 3]);
      key = {2, ek.first, ek.second};
    }
    PayloadContact pc{static_cast<int>(f), cp, r - dist, n};
    auto [it, inserted] = by_feature.emplace(key, found.size());
    if (inserted)
      found.push_back(pc);
    else if (pc.depth > found[it->second].depth)
      found[it->second] = pc;
  }
  std::set<int> face_hits;
  for (const auto& [key, i] : by_feature)
    if (key[0] == 0) face_hits.insert(key[1]);
  std::set<int> edge_nodes;
  for (const auto& [key, i] : by_feature)
    if (key[0] == 2) {
      bool covered = false;
      for (int f : sim.edge_faces.at({key[1], key[2]})) covered |= face_hits.count(f) > 0;
      if (!covered) edge_nodes.insert({key[1], key[2]});
    }
  std::vector<PayloadContact> out;
  for (const auto& [key, i] : by_feature) {
    if (key[0] == 2) {
      bool covered = false;
      for (int f : sim.edge_faces.at({key[1], key[2]})) covered |= face_hits.count(f) > 0;
      if (covered) continue;
    } else if (key[0] == 1) {
      bool covered = edge_nodes.count(key[1]) > 0;
      for (int f : sim.node_faces[key[1]]) covered |= face_hits.count(f) > 0;
      if (covered) continue;
    }
    out.push_back(found[i]);
  }
  return out;
}

struct ContactForces {
  std::vector<Vec3> nodes;
  Vec3 sphere = Vec3::Zero();
  bool sphere_ground = false;
  bool sphere_mesh = false;
};

inline ContactForces contact_forces(const Simulation& sim, const SimState& s) {
  ContactForces out;
  out.nodes.assign(sim.size(), Vec3::Zero());
  const double dt = sim.scene.dt;
  const auto& g = sim.scene.ground;
  if (g.enabled) {
    for (std::size_t i = 0; i < sim.size(); ++i) {
      const double depth = -s.x[i].z();
      if (depth <= 0) continue;
      out.nodes[i] += ContactLaw::clamped(g, sim.mass[i], dt).force(depth, Vec3::UnitZ(), s.v[i], sim.mass[i], dt);
    }
  }
  if (!sim.scene.payload) return out;
  const auto& ball = *sim.scene.payload;
  if (g.enabled) {
    const double depth = ball.radius - s.sphere_x.z();
    if (depth > 0) {
      out.sphere += ContactLaw::clamped(g, ball.mass, dt).force(depth, Vec3::UnitZ(), s.sphere_v, ball.mass, dt);
      out.sphere_ground = true;
    }
  }
  for (const auto& c : payload_contacts(sim, s.x, s.sphere_x)) {
    const auto& tri = sim.faces[c.face];
    double m_min = ball.mass;
    Vec3 surface_v = Vec3::Zero();
    for (int k = 0; k < 3; ++k) {
      surface_v += c.cp.bary[k] * s.v[tri[k]];
      if (c.cp.bary[k] > 0) m_min = std::min(m_min, sim.mass[tri[k]]);
    }
    const Vec3 f = ContactLaw::clamped(g, m_min, dt).force(c.depth, c.normal, s.sphere_v - surface_v, ball.mass, dt);
    out.sphere += f;
    for (int k = 0; k < 3; ++k) out.nodes[tri[k]] -= c.cp.bary[k] * f;
    out.sphere_mesh = true;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Actuation

inline void check_events(const Simulation& sim, const std::vector<ActuationEvent>& events) {
  for (const auto& ev : events)
    for (int id : ev.keypoints) {
      const int n = sim.node(id);
      if (sim.actuation[n] != ev.axis)
        throw Error(Errc::NotActuatedKeypoint, std::string("keypoint is not actuated on axis ") + axis_name(ev.axis),
                    "keypoint " + std::to_string(id));
    }
}

// Servo command (position offset and speed along the axis) t seconds after the trigger.
inline std::pair<double, double> servo_command(const ActuationEvent& ev, double t) {
  const double dir = ev.target_displacement >= 0 ? 1.0 : -1.0;
  const double reach = std::abs(ev.target_displacement);
  const double travelled = ev.max_speed * t;
  if (travelled >= reach) return {ev.target_displacement, 0.0};
  return {dir * travelled, dir * ev.max_speed};
}

inline std::vector<Vec3> actuation_forces(const Simulation& sim, const SimState& s, const std::vector<ActuationEvent>& events) {
  std::vector<Vec3> f(sim.size(), Vec3::Zero());
  for (std::size_t e = 0; e < events.size(); ++e) {
    const long at = e < s.triggered_at.size() ? s.triggered_at[e] : -1;
    const auto& ev = events[e];
    if (at < 0 && !ev.hold) continue;
    const auto [offset, speed] = at < 0 ? std::pair{0.0, 0.0} : servo_command(ev, (s.step - at) * sim.scene.dt);
    const int a = static_cast<int>(ev.axis);
    for (int id : ev.keypoints) {
      const int n = sim.node(id);
      const double err = sim.start[n][a] + offset - s.x[n][a];
      const double verr = speed - s.v[n][a];
      double force = sim.mass[n] * (ev.gain * ev.gain * err + 2.0 * ev.gain * verr);
      if (ev.max_force > 0) force = std::clamp(force, -ev.max_force, ev.max_force);
      f[n][a] += force;
    }
  }
  return f;
}

// ---------------------------------------------------------------------------
// Stepping

struct Energy {
  double kinetic = 0, gravity = 0, membrane = 0, hinge = 0, contact = 0;
  double total() const { return kinetic + gravity + membrane + hinge + contact; }
};

inline Energy energy(const Simulation& sim, const SimState& s) {
  Energy e;
  const Vec3& g = sim.scene.gravity;
  for (std::size_t i = 0; i < sim.size(); ++i) {
    e.kinetic += 0.5 * sim.mass[i] * s.v[i].squaredNorm();
    e.gravity -= sim.mass[i] * g.dot(s.x[i]);
    if (sim.scene.ground.enabled && s.x[i].z() < 0)
      e.contact += ContactLaw::clamped(sim.scene.ground, sim.mass[i], sim.scene.dt).energy(-s.x[i].z());
  }
  e.membrane = membrane_energy(sim, s.x);
  e.hinge = hinge_energy(sim, s.x);
  if (sim.scene.payload) {
    const auto& ball = *sim.scene.payload;
    e.kinetic += 0.5 * ball.mass * s.sphere_v.squaredNorm();
    e.gravity -= ball.mass * g.dot(s.sphere_x);
    if (sim.scene.ground.enabled && s.sphere_x.z() < ball.radius)
      e.contact += ContactLaw::clamped(sim.scene.ground, ball.mass, sim.scene.dt).energy(ball.radius - s.sphere_x.z());
    for (const auto& c : payload_contacts(sim, s.x, s.sphere_x)) {
      double m_min = ball.mass;
      for (int k = 0; k < 3; ++k)
        if (c.cp.bary[k] > 0) m_min = std::min(m_min, sim.mass[sim.faces[c.face][k]]);
      e.contact += ContactLaw::clamped(sim.scene.ground, m_min, sim.scene.dt).energy(c.depth);
    }
  }
  return e;
}

// Inelastic stops: a keypoint leaving [start, start + target] along its axis is
// put back on the bound and loses its outward velocity.
inline void apply_travel_stops(const Simulation& sim, SimState& s, const std::vector<ActuationEvent>& events) {
  for (const auto& ev : events) {
    if (!ev.limit_travel) continue;
    const int a = static_cast<int>(ev.axis);
    for (int id : ev.keypoints) {
      const int n = sim.node(id);
      const double lo = sim.start[n][a] + std::min(0.0, ev.target_displacement);
      const double hi = sim.start[n][a] + std::max(0.0, ev.target_displacement);
      if (s.x[n][a] < lo) {
        s.x[n][a] = lo;
        s.v[n][a] = std::max(0.0, s.v[n][a]);
      } else if (s.x[n][a] > hi) {
        s.x[n][a] = hi;
        s.v[n][a] = std::min(0.0, s.v[n][a]);
      }
    }
  }
}

inline void update_triggers(const Simulation& sim, SimState& s, const std::vector<ActuationEvent>& events) {
  (void)sim;
  if (s.triggered_at.size() < events.size()) s.triggered_at.resize(events.size(), -1);
  for (std::size_t e = 0; e < events.size(); ++e) {
    if (s.triggered_at[e] >= 0) continue;
    const auto& ev = events[e];
    if (s.step < ev.trigger_step) continue;
    if (ev.wait_for_payload && s.payload_contact_run < ev.contact_steps) continue;
    s.triggered_at[e] = s.step;
  }
}

inline void step(const Simulation& sim, SimState& s, const std::vector<ActuationEvent>& events = {}) {
  const double dt = sim.scene.dt;
  update_triggers(sim, s, events);
  ContactForces cf = contact_forces(sim, s);
  std::vector<Vec3>& f = cf.nodes;
  add_membrane_forces(sim, s.x, f);
  add_hinge_forces(sim, s.x, f);
  if (!events.empty()) {
    const auto fa = actuation_forces(sim, s, events);
    for (std::size_t i = 0; i < sim.size(); ++i) f[i] += fa[i];
  }
  const double alpha = sim.material.damping;
  for (std::size_t i = 0; i < sim.size(); ++i) {
    const double m = sim.mass[i];
    Vec3 v = s.v[i] + dt * (f[i] / m + sim.scene.gravity - alpha * s.v[i]);
    for (int a = 0; a < 3; ++a)
      if (!sim.dof[i][a]) v[a] = 0.0;
    s.v[i] = v;
    s.x[i] += dt * v;
  }
  apply_travel_stops(sim, s, events);
  if (sim.scene.payload) {
    s.sphere_v += dt * (cf.sphere / sim.scene.payload->mass + sim.scene.gravity);
    s.sphere_x += dt * s.sphere_v;
    s.sphere_ground = cf.sphere_ground;
    s.sphere_mesh = cf.sphere_mesh;
    s.payload_contact_run = cf.sphere_mesh ? s.payload_contact_run + 1 : 0;
  }
  ++s.step;
  s.time = s.step * dt;

  auto bad = [](const Vec3& p) { return !p.allFinite() || p.cwiseAbs().maxCoeff() > 1e3; };
  bool blown = sim.scene.payload && bad(s.sphere_x);
  for (const auto& p : s.x) blown = blown || bad(p);
  if (blown) throw Error(Errc::NumericalBlowup, "simulation diverged", "step " + std::to_string(s.step));
}

// ---------------------------------------------------------------------------
// Rollouts

struct Frame {
  double t = 0;
  std::vector<Vec3> kp;  // per node, in keypoint id order
  Vec3 sphere_pos = Vec3::Zero();
  Vec3 sphere_vel = Vec3::Zero();
};

struct Trajectory {
  std::vector<int> keypoint_ids;
  std::vector<Frame> frames;
  bool has_sphere = false;
  Vec3 sphere_initial = Vec3::Zero();
  Vec3 sphere_final = Vec3::Zero();
  bool sphere_at_rest = false;
  double rest_time = -1;
  long steps = 0;
  std::vector<long> triggered_at;
};

struct RolloutOptions {
  int frame_stride = 20;      // steps between stored frames
  bool early_stop = true;
  double rest_speed = 1e-3;   // m/s
  double rest_duration = 0.2; // s
};

// Runs until max_time, or until the payload has been in contact (with the
// ground or the sheet) and slower than rest_speed for rest_duration after
// every actuation event has fired and its servo command has reached the
// target.
inline Trajectory run_rollout(const Simulation& sim, const std::vector<ActuationEvent>& events, const RolloutOptions& opt = {}) {
  check_events(sim, events);
  SimState s = initial_state(sim, events.size());
  Trajectory tr;
  tr.keypoint_ids = sim.node_ids;
  tr.has_sphere = sim.scene.payload.has_value();
  tr.sphere_initial = s.sphere_x;
  auto record = [&] { tr.frames.push_back({s.time, s.x, s.sphere_x, s.sphere_v}); };
  record();
  const long total = static_cast<long>(std::llround(sim.scene.max_time / sim.scene.dt));
  const long rest_steps = static_cast<long>(std::ceil(opt.rest_duration / sim.scene.dt));
  long still = 0;
  const int stride = std::max(1, opt.frame_stride);
  while (s.step < total) {
    step(sim, s, events);
    if (s.step % stride == 0) record();
    if (!tr.has_sphere) continue;
    bool armed = true;
    for (std::size_t e = 0; e < events.size(); ++e) {
      const long at = s.triggered_at[e];
      armed = armed && at >= 0 && (s.step - at) * sim.scene.dt >= std::abs(events[e].target_displacement) / events[e].max_speed;
    }
    const bool slow = (s.sphere_ground || s.sphere_mesh) && s.sphere_v.norm() < opt.rest_speed;
    still = (armed && slow) ? still + 1 : 0;
    if (still >= rest_steps && !tr.sphere_at_rest) {
      tr.sphere_at_rest = true;
      tr.rest_time = s.time;
      if (opt.early_stop) break;
    }
  }
  if (tr.frames.back().t != s.time) record();
  tr.sphere_final = s.sphere_x;
  tr.steps = s.step;
  tr.triggered_at = s.triggered_at;
  return tr;
}

inline double throw_distance(const Trajectory& tr, Axis axis) {
  if (!tr.sphere_at_rest) throw Error(Errc::SphereNeverAtRest, "payload never came to rest", "trajectory");
  const int a = static_cast<int>(axis);
  return std::abs(tr.sphere_final[a] - tr.sphere_initial[a]);
}

// One JSON object per frame: {"t":s,"kp":[[x,y,z]...],"sphere":{"pos":[...],"vel":[...]}}
inline void write_frames(std::ostream& out, const Trajectory& tr) {
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
  };
  auto vec = [&](const Vec3& p) {
    out << '[';
    num(p.x());
    out << ',';
    num(p.y());
    out << ',';
    num(p.z());
    out << ']';
  };
  for (const auto& fr : tr.frames) {
    out << "{\"t\":";
    num(fr.t);
    out << ",\"kp\":[";
    for (std::size_t i = 0; i < fr.kp.size(); ++i) {
      if (i) out << ',';
      vec(fr.kp[i]);
    }
    out << ']';
    if (tr.has_sphere) {
      out << ",\"sphere\":{\"pos\":";
      vec(fr.sphere_pos);
      out << ",\"vel\":";
      vec(fr.sphere_vel);
      out << '}';
    }
    out << "}\n";
  }
}

}  // namespace origami
