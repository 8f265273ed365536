#pragma once

// Panel detection and triangulation.
//
//   detect_panel      click -> smallest planar face containing it (needs a crease)
//   sort_ccw          centroid angle sort, ties broken by ascending id
//   perturb_collinear nudges collinear runs inward so the polygon is strictly simple
//   triangulate_panel ear clipping followed by Lawson flips (constrained Delaunay)
//   mesh_pattern      all panels -> TriMesh referencing original keypoint ids

#include "origami/design_graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <span>
#include <vector>

namespace origami {

using PointMap = std::map<int, Vec2>;
using Tri = std::array<int, 3>;

struct MeshTriangle {
  int panel = 0;
  Tri ids{};
};

struct TriMesh {
  std::vector<MeshTriangle> triangles;
  std::set<EdgeKey> constrained_edges;  // every crease and boundary edge (design ids)

  std::size_t panel_count() const {
    int hi = -1;
    for (const auto& t : triangles) hi = std::max(hi, t.panel);
    return static_cast<std::size_t>(hi + 1);
  }
  std::vector<Tri> panel_triangles(int panel) const {
    std::vector<Tri> out;
    for (const auto& t : triangles)
      if (t.panel == panel) out.push_back(t.ids);
    return out;
  }
};

inline PointMap design_points(const CreasePattern& p) {
  PointMap m;
  for (const auto& k : p.keypoints) m[k.id] = k.xy();
  return m;
}

// ---------------------------------------------------------------------------
// Planar faces

struct Face {
  std::vector<int> cycle;  // counterclockwise for bounded faces
  double area = 0.0;       // signed; negative for the outer face of a component
};

inline std::vector<Face> planar_faces(const CreasePattern& p) {
  const PointMap pts = design_points(p);
  std::map<int, std::vector<int>> adj;
  for (const auto& e : p.edges) {
    adj[e.a].push_back(e.b);
    adj[e.b].push_back(e.a);
  }
  // Dangling trees bound no face.
  for (bool changed = true; changed;) {
    changed = false;
    for (auto it = adj.begin(); it != adj.end();) {
      if (it->second.size() <= 1) {
        for (int nb : it->second) {
          auto& back = adj[nb];
          back.erase(std::remove(back.begin(), back.end(), it->first), back.end());
        }
        it = adj.erase(it);
        changed = true;
      } else {
        ++it;
      }
    }
  }
  for (auto& [v, nbs] : adj) {
    const Vec2 c = pts.at(v);
    std::sort(nbs.begin(), nbs.end(), [&](int a, int b) {
      const Vec2 da = pts.at(a) - c, db = pts.at(b) - c;
      const double aa = std::atan2(da.y(), da.x()), ab = std::atan2(db.y(), db.x());
      return aa != ab ? aa < ab : a < b;
    });
  }
  std::set<std::pair<int, int>> used;
  std::vector<Face> faces;
  for (const auto& [u0, nbs0] : adj) {
    for (int v0 : nbs0) {
      if (used.count({u0, v0})) continue;
      Face f;
      int u = u0, v = v0;
      for (std::size_t guard = 0; guard <= 4 * p.edges.size() + 4; ++guard) {
        used.insert({u, v});
        f.cycle.push_back(u);
        const auto& around = adj.at(v);
        const auto pos = std::find(around.begin(), around.end(), u) - around.begin();
        const int w = around[(pos + around.size() - 1) % around.size()];
        u = v;
        v = w;
        if (u == u0 && v == v0) break;
      }
      std::vector<Vec2> poly;
      for (int id : f.cycle) poly.push_back(pts.at(id));
      f.area = geom::signed_area(poly);
      faces.push_back(std::move(f));
    }
  }
  return faces;
}

// ---------------------------------------------------------------------------
// Counterclockwise sort

inline std::vector<int> sort_ccw(std::span<const int> cycle, const PointMap& pts) {
  if (cycle.size() < 3) throw Error(Errc::DegeneratePolygon, "a panel needs at least three keypoints");
  Vec2 c = Vec2::Zero();
  for (int id : cycle) c += pts.at(id);
  c /= static_cast<double>(cycle.size());
  bool all_collinear = true;
  for (std::size_t i = 2; i < cycle.size() && all_collinear; ++i)
    all_collinear = geom::orient(pts.at(cycle[0]), pts.at(cycle[1]), pts.at(cycle[i])) == 0;
  if (all_collinear) throw Error(Errc::DegeneratePolygon, "panel keypoints are collinear");

  std::vector<int> out(cycle.begin(), cycle.end());
  std::stable_sort(out.begin(), out.end(), [&](int a, int b) {
    const Vec2 da = pts.at(a) - c, db = pts.at(b) - c;
    const double aa = std::atan2(da.y(), da.x()), ab = std::atan2(db.y(), db.x());
    return aa != ab ? aa < ab : a < b;
  });
  // Start at the caller's first id so an already-sorted cycle comes back unchanged.
  auto first = std::find(out.begin(), out.end(), cycle.front());
  std::rotate(out.begin(), first, out.end());
  return out;
}

inline bool same_cyclic_order(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size() || a.empty()) return false;
  auto it = std::find(b.begin(), b.end(), a.front());
  if (it == b.end()) return false;
  const std::size_t off = static_cast<std::size_t>(it - b.begin());
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[(off + i) % b.size()]) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Panel detection

inline Panel detect_panel(const CreasePattern& p, const Vec2& click) {
  const PointMap pts = design_points(p);
  for (std::size_t i = 0; i < p.edges.size(); ++i)
    if (geom::on_segment(pts.at(p.edges[i].a), pts.at(p.edges[i].b), click))
      throw Error(Errc::OnEdgeAmbiguous, "click lies on edge " + std::to_string(i), "edge " + std::to_string(i));

  const Face* best = nullptr;
  const auto faces = planar_faces(p);
  for (const auto& f : faces) {
    if (f.area <= 0.0) continue;
    std::vector<Vec2> poly;
    for (int id : f.cycle) poly.push_back(pts.at(id));
    if (!geom::point_in_polygon(poly, click)) continue;
    if (!best || f.area < best->area) best = &f;
  }
  if (!best) throw Error(Errc::NoEnclosingCycle, "click is not enclosed by any cycle", "click");

  const auto& cyc = best->cycle;
  if (std::set<int>(cyc.begin(), cyc.end()).size() != cyc.size())
    throw Error(Errc::DegeneratePolygon, "enclosing face revisits a keypoint (bridge edge)", "click");
  bool crease = false;
  for (std::size_t i = 0; i < cyc.size(); ++i)
    crease |= p.edges[*p.find_edge(cyc[i], cyc[(i + 1) % cyc.size()])].kind == EdgeKind::Crease;
  if (!crease) throw Error(Errc::NoCreaseInCycle, "enclosing cycle contains no crease edge", "click");

  std::vector<int> sorted = sort_ccw(cyc, pts);
  if (!same_cyclic_order(sorted, cyc))
    throw Error(Errc::NonStarShapedPanel, "centroid angle order does not reproduce the face boundary", "click");

  const std::set<int> ids(cyc.begin(), cyc.end());
  for (std::size_t i = 0; i < p.panels.size(); ++i)
    if (std::set<int>(p.panels[i].cycle.begin(), p.panels[i].cycle.end()) == ids)
      throw Error(Errc::PanelAlreadyDefined, "panel already defined", "panel " + std::to_string(i));
  return Panel{std::move(sorted)};
}

inline CreasePattern define_panel(const CreasePattern& p, const Vec2& click) {
  CreasePattern out = p;
  out.panels.push_back(detect_panel(p, click));
  return out;
}

// ---------------------------------------------------------------------------
// Collinear perturbation

inline constexpr double kPerturbRelative = 1e-9;

// Every maximal run of collinear vertices between two corner vertices is bent
// inward onto a parabola of height epsilon, so no three consecutive vertices
// stay collinear and every run vertex moves.
inline PointMap perturb_collinear(const PointMap& pts, std::span<const int> cycle, double epsilon) {
  PointMap out = pts;
  const std::size_t n = cycle.size();
  if (n < 4) return out;
  auto P = [&](std::size_t i) { return pts.at(cycle[i % n]); };
  std::vector<bool> collinear(n);
  bool any = false;
  for (std::size_t i = 0; i < n; ++i) {
    collinear[i] = geom::orient(P(i + n - 1), P(i + 1), P(i)) == 0;
    any |= collinear[i];
  }
  if (!any) return out;
  std::size_t start = 0;
  while (collinear[start]) ++start;  // a corner exists unless all collinear
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = (start + k) % n;
    if (collinear[i] || !collinear[(i + 1) % n]) continue;
    std::size_t j = (i + 1) % n;
    std::vector<std::size_t> run;
    while (collinear[j]) {
      run.push_back(j);
      j = (j + 1) % n;
    }
    const Vec2 a = P(i), b = P(j);
    const Vec2 dir = (b - a).normalized();
    const Vec2 inward(-dir.y(), dir.x());  // left of a->b for a CCW polygon
    const double len = (b - a).norm();
    for (std::size_t r : run) {
      const double t = (P(r) - a).dot(dir) / len;
      out[cycle[r]] = P(r) + inward * (4.0 * epsilon * t * (1.0 - t));
    }
  }
  return out;
}

inline PointMap perturb_collinear(const CreasePattern& p, std::span<const int> cycle) {
  return perturb_collinear(design_points(p), cycle, kPerturbRelative * p.bbox_diagonal());
}

// ---------------------------------------------------------------------------
// Triangulation

namespace detail {

inline std::vector<Tri> ear_clip(std::span<const int> cycle, const PointMap& pts) {
  std::vector<int> ring(cycle.begin(), cycle.end());
  std::vector<Tri> tris;
  auto inside_closed = [](const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& p) {
    return geom::orient_raw(a, b, p) >= 0 && geom::orient_raw(b, c, p) >= 0 && geom::orient_raw(c, a, p) >= 0;
  };
  while (ring.size() > 3) {
    bool clipped = false;
    for (std::size_t i = 0; i < ring.size() && !clipped; ++i) {
      const std::size_t m = ring.size();
      const int ia = ring[(i + m - 1) % m], ib = ring[i], ic = ring[(i + 1) % m];
      const Vec2 &a = pts.at(ia), &b = pts.at(ib), &c = pts.at(ic);
      if (geom::orient_raw(a, b, c) <= 0) continue;
      bool blocked = false;
      for (int other : ring) {
        if (other == ia || other == ib || other == ic) continue;
        if (inside_closed(a, b, c, pts.at(other))) {
          blocked = true;
          break;
        }
      }
      if (blocked) continue;
      tris.push_back({ia, ib, ic});
      ring.erase(ring.begin() + static_cast<long>(i));
      clipped = true;
    }
    if (!clipped) throw Error(Errc::TriangulationFailed, "no ear found; polygon is not simple");
  }
  if (geom::orient_raw(pts.at(ring[0]), pts.at(ring[1]), pts.at(ring[2])) <= 0)
    throw Error(Errc::TriangulationFailed, "final triangle is degenerate");
  tris.push_back({ring[0], ring[1], ring[2]});
  return tris;
}

// Lawson flips on unconstrained edges until every one is locally Delaunay.
inline void delaunay_flip(std::vector<Tri>& tris, const PointMap& pts, const std::set<EdgeKey>& constrained) {
  double scale = 0.0;
  for (const auto& t : tris)
    for (int id : t) scale = std::max(scale, pts.at(id).cwiseAbs().maxCoeff());
  for (const auto& t : tris)
    for (int id : t) scale = std::max(scale, (pts.at(id) - pts.at(t[0])).norm());
  const double tol = 1e-13 * std::pow(std::max(scale, 1e-300), 4);

  const std::size_t max_passes = 4 * tris.size() * tris.size() + 16;
  for (std::size_t pass = 0; pass < max_passes; ++pass) {
    std::map<EdgeKey, std::vector<std::pair<std::size_t, int>>> owners;  // (triangle, opposite vertex slot)
    for (std::size_t t = 0; t < tris.size(); ++t)
      for (int s = 0; s < 3; ++s) owners[edge_key(tris[t][(s + 1) % 3], tris[t][(s + 2) % 3])].push_back({t, s});
    bool flipped = false;
    for (const auto& [key, own] : owners) {
      if (own.size() != 2 || constrained.count(key)) continue;
      const auto [t0, s0] = own[0];
      const auto [t1, s1] = own[1];
      const int a = tris[t0][(s0 + 1) % 3], b = tris[t0][(s0 + 2) % 3], c = tris[t0][s0];
      const int d = tris[t1][s1];
      if (geom::incircle(pts.at(a), pts.at(b), pts.at(c), pts.at(d)) <= tol) continue;
      if (!geom::segments_properly_cross(pts.at(a), pts.at(b), pts.at(c), pts.at(d))) continue;
      // (a, b, c) is CCW and d is on the other side of a-b.
      tris[t0] = {c, a, d};
      tris[t1] = {d, b, c};
      flipped = true;
      break;
    }
    if (!flipped) return;
  }
}

}  // namespace detail

inline std::vector<Tri> triangulate_panel(std::span<const int> cycle, const PointMap& pts) {
  std::vector<Vec2> poly;
  for (int id : cycle) poly.push_back(pts.at(id));
  if (!geom::polygon_is_simple(poly)) throw Error(Errc::TriangulationFailed, "panel polygon is not simple");
  if (geom::signed_area(poly) <= 0.0) throw Error(Errc::TriangulationFailed, "panel polygon is not counterclockwise");
  for (std::size_t i = 0; i < poly.size(); ++i)
    if (geom::orient_raw(poly[(i + poly.size() - 1) % poly.size()], poly[i], poly[(i + 1) % poly.size()]) == 0.0)
      throw Error(Errc::TriangulationFailed, "three consecutive panel vertices are collinear");

  std::vector<Tri> tris = detail::ear_clip(cycle, pts);
  std::set<EdgeKey> constrained;
  for (std::size_t i = 0; i < cycle.size(); ++i) constrained.insert(edge_key(cycle[i], cycle[(i + 1) % cycle.size()]));
  detail::delaunay_flip(tris, pts, constrained);
  return tris;
}

inline TriMesh mesh_pattern(const CreasePattern& p) {
  if (p.panels.empty()) throw Error(Errc::NoPanels, "pattern has no panels", "pattern");
  TriMesh mesh;
  for (const auto& e : p.edges) mesh.constrained_edges.insert(edge_key(e.a, e.b));
  const PointMap base = design_points(p);
  const double eps = kPerturbRelative * p.bbox_diagonal();
  for (std::size_t i = 0; i < p.panels.size(); ++i) {
    const auto& cyc = p.panels[i].cycle;
    try {
      for (int id : cyc)
        if (!p.find(id)) throw Error(Errc::UnknownKeypoint, "panel references keypoint " + std::to_string(id));
      const PointMap moved = perturb_collinear(base, cyc, eps);
      for (const Tri& t : triangulate_panel(cyc, moved)) mesh.triangles.push_back({static_cast<int>(i), t});
    } catch (const Error& ex) {
      throw Error(ex.code(), "panel " + std::to_string(i) + ": " + ex.message(), "panel " + std::to_string(i));
    }
  }
  return mesh;
}

}  // namespace origami
