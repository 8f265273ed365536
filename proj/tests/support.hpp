#pragma once

// Test-only builders and independent oracles. Nothing here calls into the
// code path it is used to check.

#include "origami/design_graph.hpp"
#include "origami/design_io.hpp"

#include <cmath>
#include <map>
#include <optional>
#include <tuple>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace origami::testing {

inline std::string data_path(const std::string& rel) { return std::string(ORIGAMI_DATA_DIR) + "/" + rel; }

inline CreasePattern fixture(const std::string& name) { return load_design(data_path("fixtures/" + name + ".json")); }

inline const std::vector<std::string>& fixture_names() {
  static const std::vector<std::string> names{"fig2_tripod", "accordion",  "corrugation", "box_loop",
                                              "block_contract", "gripper", "walker",      "balancer",
                                              "catapult"};
  return names;
}

inline constexpr DofMask kFree{true, true, true};

// Unit square 0(0,0) 1(1,0) 2(1,1) 3(0,1) with boundary sides and an optional
// crease diagonal 0-2.
inline CreasePattern unit_square(bool diagonal = true, EdgeKind sides = EdgeKind::Boundary) {
  CreasePattern p;
  p.name = "square";
  add_keypoint(p, {0, 0, 0}, kFree);
  add_keypoint(p, {1, 0, 0}, kFree);
  add_keypoint(p, {1, 1, 0}, kFree);
  add_keypoint(p, {0, 1, 0}, kFree);
  add_edge(p, 0, 1, sides);
  add_edge(p, 1, 2, sides);
  add_edge(p, 2, 3, sides);
  add_edge(p, 3, 0, sides);
  if (diagonal) add_edge(p, 0, 2, EdgeKind::Crease);
  return p;
}

// Oracle: proper-or-touching segment intersection via parametric solve,
// excluding a shared endpoint.
inline bool oracle_segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const Vec2 r = b - a, s = d - c;
  const double den = r.x() * s.y() - r.y() * s.x();
  const auto shared = [](const Vec2& u, const Vec2& v) { return (u - v).norm() < 1e-15; };
  if (std::abs(den) < 1e-18) {
    // parallel: overlap only if collinear with positive-length overlap
    const Vec2 ac = c - a;
    if (std::abs(r.x() * ac.y() - r.y() * ac.x()) > 1e-15) return false;
    const double rr = r.dot(r);
    double t0 = (c - a).dot(r) / rr, t1 = (d - a).dot(r) / rr;
    if (t0 > t1) std::swap(t0, t1);
    const double lo = std::max(0.0, t0), hi = std::min(1.0, t1);
    return hi - lo > 1e-12 || (hi >= lo && !(shared(a, c) || shared(a, d) || shared(b, c) || shared(b, d)));
  }
  const Vec2 ac = c - a;
  const double t = (ac.x() * s.y() - ac.y() * s.x()) / den;
  const double u = (ac.x() * r.y() - ac.y() * r.x()) / den;
  if (t < -1e-12 || t > 1 + 1e-12 || u < -1e-12 || u > 1 + 1e-12) return false;
  const Vec2 hit = a + t * r;
  const bool at_shared = (shared(a, c) || shared(a, d)) ? (hit - a).norm() < 1e-9 : (shared(b, c) || shared(b, d)) ? (hit - b).norm() < 1e-9 : false;
  return !at_shared;
}

// Oracle: enumerate the faces of a planar straight-line graph by walking the
// boundary of every region with a "most clockwise turn" rule expressed through
// explicit turning angles, then keep the bounded ones (positive area).
struct OracleFace {
  std::vector<int> cycle;
  double area;
};

inline std::vector<OracleFace> oracle_faces(const CreasePattern& p) {
  std::map<int, std::set<int>> nb;
  for (const auto& e : p.edges) {
    nb[e.a].insert(e.b);
    nb[e.b].insert(e.a);
  }
  // strip dangling trees: repeatedly drop vertices of degree < 2
  for (;;) {
    auto leaf = std::find_if(nb.begin(), nb.end(), [](const auto& kv) { return kv.second.size() < 2; });
    if (leaf == nb.end()) break;
    for (int w : leaf->second) nb[w].erase(leaf->first);
    nb.erase(leaf);
  }
  auto pos = [&](int id) { return p.at(id).xy(); };
  std::set<std::pair<int, int>> seen;
  std::vector<OracleFace> out;
  for (const auto& [u0, ns] : nb)
    for (int v0 : ns) {
      if (seen.count({u0, v0})) continue;
      std::vector<int> cyc;
      int u = u0, v = v0;
      for (int guard = 0; guard < 10000; ++guard) {
        seen.insert({u, v});
        cyc.push_back(u);
        // choose the neighbour w of v (w != u unless v is a leaf) that makes
        // the smallest counterclockwise angle from direction v->u
        const Vec2 back = pos(u) - pos(v);
        const double base = std::atan2(back.y(), back.x());
        int best = -1;
        double best_turn = 1e9;
        for (int w : nb[v]) {
          const Vec2 d = pos(w) - pos(v);
          double turn = base - std::atan2(d.y(), d.x());
          while (turn <= 0) turn += 2 * M_PI;
          while (turn > 2 * M_PI) turn -= 2 * M_PI;
          if (w == u) turn = 2 * M_PI;
          if (turn < best_turn) {
            best_turn = turn;
            best = w;
          }
        }
        u = v;
        v = best;
        if (u == u0 && v == v0) break;
      }
      double a = 0;
      for (std::size_t i = 0; i < cyc.size(); ++i) {
        const Vec2 p0 = pos(cyc[i]), p1 = pos(cyc[(i + 1) % cyc.size()]);
        a += p0.x() * p1.y() - p0.y() * p1.x();
      }
      out.push_back({cyc, a / 2});
    }
  return out;
}

// Oracle: winding-number containment.
inline bool oracle_contains(const std::vector<Vec2>& poly, const Vec2& q);

// Expected outcome of a panel click, computed from oracle_faces, winding
// containment and an independent angle sort.
struct OracleDetect {
  std::optional<Errc> error;
  std::vector<int> cycle;
};

inline std::vector<int> oracle_angle_sort(std::vector<int> ids, const std::map<int, Vec2>& pos) {
  double cx = 0, cy = 0;
  for (int id : ids) {
    cx += pos.at(id).x();
    cy += pos.at(id).y();
  }
  cx /= ids.size();
  cy /= ids.size();
  std::vector<std::tuple<double, int>> keyed;
  for (int id : ids) keyed.emplace_back(std::atan2(pos.at(id).y() - cy, pos.at(id).x() - cx), id);
  std::sort(keyed.begin(), keyed.end());
  std::vector<int> out;
  for (const auto& [a, id] : keyed) out.push_back(id);
  return out;
}

inline bool oracle_same_cycle(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t r = 0; r < b.size(); ++r) {
    bool ok = true;
    for (std::size_t i = 0; i < a.size() && ok; ++i) ok = a[i] == b[(i + r) % b.size()];
    if (ok) return true;
  }
  return false;
}

inline OracleDetect oracle_detect(const CreasePattern& p, const Vec2& click) {
  std::map<int, Vec2> pos;
  for (const auto& k : p.keypoints) pos[k.id] = k.xy();
  const OracleFace* best = nullptr;
  const auto faces = oracle_faces(p);
  for (const auto& f : faces) {
    if (f.area <= 0) continue;
    std::vector<Vec2> poly;
    for (int id : f.cycle) poly.push_back(pos.at(id));
    if (!oracle_contains(poly, click)) continue;
    if (!best || f.area < best->area) best = &f;
  }
  if (!best) return {Errc::NoEnclosingCycle, {}};
  const auto& cyc = best->cycle;
  if (std::set<int>(cyc.begin(), cyc.end()).size() != cyc.size()) return {Errc::DegeneratePolygon, {}};
  bool crease = false;
  for (std::size_t i = 0; i < cyc.size(); ++i)
    for (const auto& e : p.edges)
      if (edge_key(e.a, e.b) == edge_key(cyc[i], cyc[(i + 1) % cyc.size()])) crease |= e.kind == EdgeKind::Crease;
  if (!crease) return {Errc::NoCreaseInCycle, {}};
  const auto sorted = oracle_angle_sort(cyc, pos);
  if (!oracle_same_cycle(sorted, cyc)) return {Errc::NonStarShapedPanel, {}};
  for (const auto& pn : p.panels)
    if (std::set<int>(pn.cycle.begin(), pn.cycle.end()) == std::set<int>(cyc.begin(), cyc.end()))
      return {Errc::PanelAlreadyDefined, {}};
  return {std::nullopt, cyc};
}

// Random planar graph: random points, random candidate segments kept when they
// do not meet an existing one, random kinds.
inline CreasePattern random_planar_pattern(std::mt19937_64& rng, int points, int attempts, double crease_share = 0.5) {
  std::uniform_real_distribution<double> u(0, 1);
  CreasePattern p;
  p.name = "random";
  for (int i = 0; i < points; ++i) add_keypoint(p, {std::round(u(rng) * 1000) / 1000, std::round(u(rng) * 1000) / 1000, 0}, {true, true, true});
  for (int i = 0; i < attempts; ++i) {
    const int a = static_cast<int>(rng() % points), b = static_cast<int>(rng() % points);
    bool ok = a != b;
    for (const auto& e : p.edges) {
      if (!ok) break;
      if (edge_key(e.a, e.b) == edge_key(a, b)) ok = false;
      else ok = !oracle_segments_intersect(p.at(a).xy(), p.at(b).xy(), p.at(e.a).xy(), p.at(e.b).xy());
    }
    // keep vertices off other segments' interiors
    for (const auto& k : p.keypoints) {
      if (!ok) break;
      if (k.id == a || k.id == b) continue;
      const Vec2 d = p.at(b).xy() - p.at(a).xy(), w = k.xy() - p.at(a).xy();
      const double t = w.dot(d) / d.dot(d);
      if (t > 0 && t < 1 && (w - t * d).norm() < 1e-6) ok = false;
    }
    if (ok) p.edges.push_back({a, b, u(rng) < crease_share ? EdgeKind::Crease : EdgeKind::Boundary});
  }
  return p;
}
inline bool oracle_contains(const std::vector<Vec2>& poly, const Vec2& q) {
  double wind = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 a = poly[i] - q, b = poly[(i + 1) % poly.size()] - q;
    wind += std::atan2(a.x() * b.y() - a.y() * b.x(), a.dot(b));
  }
  return std::abs(wind) > M_PI;
}

inline double poly_area(const std::vector<Vec2>& poly) {
  double a = 0;
  for (std::size_t i = 0; i < poly.size(); ++i)
    a += poly[i].x() * poly[(i + 1) % poly.size()].y() - poly[i].y() * poly[(i + 1) % poly.size()].x();
  return a / 2;
}

// Random simple polygons: star-shaped (sorted angles, random radii) or
// general (random points untangled by 2-opt).
inline std::vector<Vec2> random_star_polygon(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> ang(0, 2 * M_PI), rad(0.2, 1.0);
  std::vector<double> a(n);
  // resample until every angular gap is below pi so the origin is in the kernel
  for (bool ok = false; !ok;) {
    for (auto& x : a) x = ang(rng);
    std::sort(a.begin(), a.end());
    ok = a.front() + 2 * M_PI - a.back() < M_PI;
    for (int i = 1; i < n; ++i) ok = ok && a[i] - a[i - 1] < M_PI;
  }
  std::vector<Vec2> poly;
  for (double t : a) {
    const double r = rad(rng);
    poly.emplace_back(r * std::cos(t), r * std::sin(t));
  }
  return poly;
}

inline std::vector<Vec2> random_two_opt_polygon(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<Vec2> pts(n);
  for (auto& p : pts) p = Vec2(u(rng), u(rng));
  auto cross = [](const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
    auto o = [](const Vec2& p, const Vec2& q, const Vec2& r) {
      return (q.x() - p.x()) * (r.y() - p.y()) - (q.y() - p.y()) * (r.x() - p.x());
    };
    return (o(a, b, c) > 0) != (o(a, b, d) > 0) && (o(c, d, a) > 0) != (o(c, d, b) > 0);
  };
  for (bool changed = true; changed;) {
    changed = false;
    for (int i = 0; i < n && !changed; ++i)
      for (int j = i + 2; j < n && !changed; ++j) {
        if (i == 0 && j == n - 1) continue;
        if (cross(pts[i], pts[i + 1], pts[j], pts[(j + 1) % n])) {
          std::reverse(pts.begin() + i + 1, pts.begin() + j + 1);
          changed = true;
        }
      }
  }
  if (poly_area(pts) < 0) std::reverse(pts.begin(), pts.end());
  return pts;
}

}  // namespace origami::testing
