#pragma once

// Builders for the bundled example patterns. Every panel is defined the way an
// editor user would: by clicking inside the closed region.

#include "origami/design_graph.hpp"
#include "origami/panel_mesh.hpp"

#include <functional>
#include <map>
#include <string>

namespace origami::fixtures {

inline constexpr DofMask kFree{true, true, true};
inline constexpr DofMask kLocked{false, false, false};

inline Vec3 at(double x, double y) { return {x, y, 0.0}; }

// Click at the vertex average of the expected cycle and check the detected
// panel matches it.
inline void add_panel(CreasePattern& p, std::initializer_list<int> ids) {
  Vec2 c = Vec2::Zero();
  for (int id : ids) c += p.at(id).xy();
  c /= static_cast<double>(ids.size());
  Panel pn = detect_panel(p, c);
  if (std::set<int>(pn.cycle.begin(), pn.cycle.end()) != std::set<int>(ids))
    throw Error(Errc::InvalidPanel, "fixture panel click selected an unexpected face", p.name);
  p.panels.push_back(std::move(pn));
}

// Central triangle with a triangular arm on each side; the arm tips lift.
inline CreasePattern tripod() {
  CreasePattern p;
  p.name = "fig2_tripod";
  add_keypoint(p, at(0.0, 0.06), kFree);
  add_keypoint(p, at(-0.052, -0.03), kFree);
  add_keypoint(p, at(0.052, -0.03), kFree);
  add_keypoint(p, at(0.0, -0.12), kFree, Axis::Z);
  add_keypoint(p, at(0.104, 0.06), kFree, Axis::Z);
  add_keypoint(p, at(-0.104, 0.06), kFree, Axis::Z);
  add_edge(p, 0, 1, EdgeKind::Crease);
  add_edge(p, 1, 2, EdgeKind::Crease);
  add_edge(p, 2, 0, EdgeKind::Crease);
  add_edge(p, 1, 3, EdgeKind::Boundary);
  add_edge(p, 3, 2, EdgeKind::Boundary);
  add_edge(p, 2, 4, EdgeKind::Boundary);
  add_edge(p, 4, 0, EdgeKind::Boundary);
  add_edge(p, 0, 5, EdgeKind::Boundary);
  add_edge(p, 5, 1, EdgeKind::Boundary);
  add_panel(p, {0, 1, 2});
  add_panel(p, {1, 3, 2});
  add_panel(p, {2, 4, 0});
  add_panel(p, {0, 5, 1});
  return p;
}

// Four strips joined by parallel creases; one end is anchored, the other is
// pushed along x.
inline CreasePattern accordion() {
  CreasePattern p;
  p.name = "accordion";
  for (int i = 0; i < 5; ++i) add_keypoint(p, at(0.03 * i, 0.0), i == 0 ? kLocked : kFree, i == 4 ? std::optional(Axis::X) : std::nullopt);
  for (int i = 0; i < 5; ++i) add_keypoint(p, at(0.03 * i, 0.1), i == 0 ? kLocked : kFree, i == 4 ? std::optional(Axis::X) : std::nullopt);
  for (int i = 0; i < 4; ++i) {
    add_edge(p, i, i + 1, EdgeKind::Boundary);
    add_edge(p, 5 + i, 6 + i, EdgeKind::Boundary);
  }
  for (int i = 0; i < 5; ++i) add_edge(p, i, 5 + i, (i == 0 || i == 4) ? EdgeKind::Boundary : EdgeKind::Crease);
  for (int i = 0; i < 4; ++i) add_panel(p, {i, i + 1, 6 + i, 5 + i});
  return p;
}

// Two rows of quads: zig-zag valley creases under a central ridge that lifts.
inline CreasePattern corrugation() {
  CreasePattern p;
  p.name = "corrugation";
  const double xs[3][4] = {{0.0, 0.04, 0.08, 0.12}, {0.0, 0.05, 0.09, 0.12}, {0.0, 0.04, 0.08, 0.12}};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) {
      const bool ridge = r == 1 && (c == 1 || c == 2);
      add_keypoint(p, at(xs[r][c], 0.05 * r), kFree, ridge ? std::optional(Axis::Z) : std::nullopt);
    }
  auto id = [](int r, int c) { return 4 * r + c; };
  for (int c = 0; c < 3; ++c) {
    add_edge(p, id(0, c), id(0, c + 1), EdgeKind::Boundary);
    add_edge(p, id(2, c), id(2, c + 1), EdgeKind::Boundary);
    add_edge(p, id(1, c), id(1, c + 1), EdgeKind::Crease);
  }
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 4; ++c)
      add_edge(p, id(r, c), id(r + 1, c), (c == 0 || c == 3) ? EdgeKind::Boundary : EdgeKind::Crease);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 3; ++c) add_panel(p, {id(r, c), id(r, c + 1), id(r + 1, c + 1), id(r + 1, c)});
  return p;
}

// Strip of `n` square-ish panels whose ends are merged into a closed tube. The
// first panel's seam side carries a midpoint so the merged seam does not
// duplicate an edge.
inline CreasePattern closed_strip(const std::string& name, int n, double width, double height) {
  CreasePattern p;
  p.name = name;
  for (int i = 0; i <= n; ++i) add_keypoint(p, at(width * i, 0.0), kFree);
  for (int i = 0; i <= n; ++i) add_keypoint(p, at(width * i, height), kFree);
  const int top = n + 1;
  const int mid = add_keypoint(p, at(0.0, height / 2), kFree);
  for (int i = 0; i < n; ++i) {
    add_edge(p, i, i + 1, EdgeKind::Boundary);
    add_edge(p, top + i, top + i + 1, EdgeKind::Boundary);
  }
  add_edge(p, 0, mid, EdgeKind::Boundary);
  add_edge(p, mid, top, EdgeKind::Boundary);
  for (int i = 1; i < n; ++i) add_edge(p, i, top + i, EdgeKind::Crease);
  add_edge(p, n, top + n, EdgeKind::Boundary);
  add_panel(p, {0, 1, top + 1, top, mid});
  for (int i = 1; i < n; ++i) add_panel(p, {i, i + 1, top + i + 1, top + i});
  p = merge_keypoints(p, 0, n);
  p = merge_keypoints(p, top, top + n);
  return p;
}

// Four-panel loop folded into a box: the crease between the second and third
// panel is lifted.
inline CreasePattern box_loop() {
  CreasePattern p = closed_strip("box_loop", 4, 0.05, 0.05);
  for (int id : {2, 7}) p.find(id)->actuation = Axis::Z;
  return p;
}

// Six-panel loop contracted horizontally by pulling one crease toward the
// opposite one.
inline CreasePattern block_contract() {
  CreasePattern p = closed_strip("block_contract", 6, 0.03, 0.05);
  for (int id : {3, 10}) p.find(id)->actuation = Axis::X;
  return p;
}

// Square palm with a finger panel on each side; the finger tips lift.
inline CreasePattern gripper() {
  CreasePattern p;
  p.name = "gripper";
  add_keypoint(p, at(0.0, 0.0), kFree);
  add_keypoint(p, at(0.06, 0.0), kFree);
  add_keypoint(p, at(0.06, 0.06), kFree);
  add_keypoint(p, at(0.0, 0.06), kFree);
  add_keypoint(p, at(-0.06, 0.0), kFree, Axis::Z);
  add_keypoint(p, at(-0.06, 0.06), kFree, Axis::Z);
  add_keypoint(p, at(0.12, 0.0), kFree, Axis::Z);
  add_keypoint(p, at(0.12, 0.06), kFree, Axis::Z);
  add_edge(p, 0, 1, EdgeKind::Boundary);
  add_edge(p, 2, 3, EdgeKind::Boundary);
  add_edge(p, 0, 3, EdgeKind::Crease);
  add_edge(p, 1, 2, EdgeKind::Crease);
  add_edge(p, 0, 4, EdgeKind::Boundary);
  add_edge(p, 4, 5, EdgeKind::Boundary);
  add_edge(p, 5, 3, EdgeKind::Boundary);
  add_edge(p, 1, 6, EdgeKind::Boundary);
  add_edge(p, 6, 7, EdgeKind::Boundary);
  add_edge(p, 7, 2, EdgeKind::Boundary);
  add_panel(p, {0, 1, 2, 3});
  add_panel(p, {4, 0, 3, 5});
  add_panel(p, {1, 6, 7, 2});
  return p;
}

// Square body with a triangular leg on every side.
inline CreasePattern walker() {
  CreasePattern p;
  p.name = "walker";
  add_keypoint(p, at(0.0, 0.0), kFree);
  add_keypoint(p, at(0.08, 0.0), kFree);
  add_keypoint(p, at(0.08, 0.08), kFree);
  add_keypoint(p, at(0.0, 0.08), kFree);
  add_keypoint(p, at(0.04, -0.05), kFree, Axis::Z);
  add_keypoint(p, at(0.13, 0.04), kFree, Axis::Z);
  add_keypoint(p, at(0.04, 0.13), kFree, Axis::Z);
  add_keypoint(p, at(-0.05, 0.04), kFree, Axis::Z);
  for (int i = 0; i < 4; ++i) {
    const int a = i, b = (i + 1) % 4, tip = 4 + i;
    add_edge(p, a, b, EdgeKind::Crease);
    add_edge(p, a, tip, EdgeKind::Boundary);
    add_edge(p, tip, b, EdgeKind::Boundary);
  }
  add_panel(p, {0, 1, 2, 3});
  for (int i = 0; i < 4; ++i) add_panel(p, {i, 4 + i, (i + 1) % 4});
  return p;
}

// Triangular platform on three quad legs whose feet are actuated vertically.
inline CreasePattern balancer() {
  CreasePattern p;
  p.name = "balancer";
  const Vec2 c[3] = {{0.0, 0.06}, {-0.052, -0.03}, {0.052, -0.03}};
  for (const auto& v : c) add_keypoint(p, at(v.x(), v.y()), kFree);
  for (int i = 0; i < 3; ++i) {
    const Vec2 a = c[i], b = c[(i + 1) % 3];
    const Vec2 d = b - a;
    const Vec2 out = Vec2(d.y(), -d.x()).normalized() * 0.05;
    add_keypoint(p, at(a.x() + out.x(), a.y() + out.y()), kFree, Axis::Z);
    add_keypoint(p, at(b.x() + out.x(), b.y() + out.y()), kFree, Axis::Z);
  }
  for (int i = 0; i < 3; ++i) {
    const int a = i, b = (i + 1) % 3, fa = 3 + 2 * i, fb = 4 + 2 * i;
    add_edge(p, a, b, EdgeKind::Crease);
    add_edge(p, a, fa, EdgeKind::Boundary);
    add_edge(p, fa, fb, EdgeKind::Boundary);
    add_edge(p, fb, b, EdgeKind::Boundary);
  }
  add_panel(p, {0, 1, 2});
  for (int i = 0; i < 3; ++i) add_panel(p, {i, 3 + 2 * i, 4 + 2 * i, (i + 1) % 3});
  return p;
}

}  // namespace origami::fixtures
