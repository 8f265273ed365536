#pragma once

// Crease-pattern graph: keypoints, crease/boundary edges and panels.
//
// Keypoint ids are append-only. Merging two keypoints retires the victim as a
// tombstone (it keeps its design position and records the survivor it was
// merged into) so that edges and panels drawn in the design plane keep their
// planar geometry while resolving to the survivor for simulation and export.

#include "origami/error.hpp"
#include "origami/geometry.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace origami {

enum class Axis { X = 0, Y = 1, Z = 2 };

inline constexpr char axis_name(Axis a) { return "xyz"[static_cast<int>(a)]; }

inline Vec3 axis_unit(Axis a) {
  Vec3 u = Vec3::Zero();
  u[static_cast<int>(a)] = 1.0;
  return u;
}

inline std::optional<Axis> parse_axis(std::string_view s) {
  if (s == "x") return Axis::X;
  if (s == "y") return Axis::Y;
  if (s == "z") return Axis::Z;
  return std::nullopt;
}

using DofMask = std::array<bool, 3>;

struct KeyPoint {
  int id = 0;
  Vec3 position = Vec3::Zero();
  DofMask dof{true, true, true};
  std::optional<Axis> actuation;
  std::optional<int> merged_into;  // tombstone marker

  bool live() const { return !merged_into.has_value(); }
  Vec2 xy() const { return position.head<2>(); }
};

enum class EdgeKind { Crease, Boundary };

inline constexpr std::string_view kind_name(EdgeKind k) { return k == EdgeKind::Crease ? "crease" : "boundary"; }

struct Edge {
  int a = 0;
  int b = 0;
  EdgeKind kind = EdgeKind::Crease;
};

struct Panel {
  std::vector<int> cycle;  // counterclockwise in the design plane
};

inline bool operator==(const KeyPoint& l, const KeyPoint& r) {
  return l.id == r.id && l.position == r.position && l.dof == r.dof && l.actuation == r.actuation &&
         l.merged_into == r.merged_into;
}
inline bool operator==(const Edge& l, const Edge& r) { return l.a == r.a && l.b == r.b && l.kind == r.kind; }
inline bool operator==(const Panel& l, const Panel& r) { return l.cycle == r.cycle; }

using EdgeKey = std::pair<int, int>;

inline EdgeKey edge_key(int a, int b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

struct CreasePattern {
  std::string name;
  std::vector<KeyPoint> keypoints;  // ascending id order, tombstones included
  std::vector<Edge> edges;
  std::vector<Panel> panels;

  const KeyPoint* find(int id) const {
    auto it = std::lower_bound(keypoints.begin(), keypoints.end(), id,
                               [](const KeyPoint& k, int v) { return k.id < v; });
    return (it != keypoints.end() && it->id == id) ? &*it : nullptr;
  }
  KeyPoint* find(int id) {
    return const_cast<KeyPoint*>(static_cast<const CreasePattern*>(this)->find(id));
  }

  const KeyPoint& at(int id) const {
    const KeyPoint* k = find(id);
    if (!k) throw Error(Errc::UnknownKeypoint, "no keypoint with id " + std::to_string(id), "keypoint " + std::to_string(id));
    return *k;
  }

  // Follows merge tombstones to the live keypoint an id now stands for.
  int canonical(int id) const {
    const KeyPoint* k = find(id);
    for (int guard = 0; k && k->merged_into && guard < 1 << 20; ++guard) k = find(*k->merged_into);
    if (!k) throw Error(Errc::UnknownKeypoint, "no keypoint with id " + std::to_string(id), "keypoint " + std::to_string(id));
    return k->id;
  }

  std::size_t live_keypoint_count() const {
    return static_cast<std::size_t>(std::count_if(keypoints.begin(), keypoints.end(), [](const KeyPoint& k) { return k.live(); }));
  }

  std::vector<int> live_ids() const {
    std::vector<int> ids;
    for (const auto& k : keypoints)
      if (k.live()) ids.push_back(k.id);
    return ids;
  }

  int next_id() const { return keypoints.empty() ? 0 : keypoints.back().id + 1; }

  // Edge endpoints after resolving merges.
  EdgeKey resolved(const Edge& e) const { return edge_key(canonical(e.a), canonical(e.b)); }

  std::optional<std::size_t> find_edge(int a, int b) const {
    const EdgeKey key = edge_key(a, b);
    for (std::size_t i = 0; i < edges.size(); ++i)
      if (edge_key(edges[i].a, edges[i].b) == key) return i;
    return std::nullopt;
  }

  // Bounding-box diagonal of design positions (tombstones included).
  double bbox_diagonal() const {
    if (keypoints.empty()) return 0.0;
    Vec3 lo = keypoints.front().position, hi = lo;
    for (const auto& k : keypoints) {
      lo = lo.cwiseMin(k.position);
      hi = hi.cwiseMax(k.position);
    }
    return (hi - lo).norm();
  }
};

inline bool operator==(const CreasePattern& l, const CreasePattern& r) {
  return l.name == r.name && l.keypoints == r.keypoints && l.edges == r.edges && l.panels == r.panels;
}

// ---------------------------------------------------------------------------
// Mutations

inline int add_keypoint(CreasePattern& p, const Vec3& position, DofMask dof, std::optional<Axis> actuation = std::nullopt) {
  if (position.z() != 0.0)
    throw Error(Errc::InvalidArgument, "design keypoints must lie in the z = 0 plane");
  if (actuation && !dof[static_cast<int>(*actuation)])
    throw Error(Errc::InconsistentActuation,
                std::string("actuation axis ") + axis_name(*actuation) + " is locked by the DOF mask");
  KeyPoint k;
  k.id = p.next_id();
  k.position = position;
  k.dof = dof;
  k.actuation = actuation;
  p.keypoints.push_back(k);
  return k.id;
}

inline Edge add_edge(CreasePattern& p, int a, int b, EdgeKind kind) {
  const KeyPoint* ka = p.find(a);
  const KeyPoint* kb = p.find(b);
  if (!ka || !ka->live()) throw Error(Errc::UnknownKeypoint, "unknown keypoint " + std::to_string(a), "keypoint " + std::to_string(a));
  if (!kb || !kb->live()) throw Error(Errc::UnknownKeypoint, "unknown keypoint " + std::to_string(b), "keypoint " + std::to_string(b));
  if (a == b) throw Error(Errc::SelfEdge, "edge endpoints must differ", "keypoint " + std::to_string(a));
  const EdgeKey key = edge_key(a, b);
  for (std::size_t i = 0; i < p.edges.size(); ++i)
    if (p.resolved(p.edges[i]) == key)
      throw Error(Errc::DuplicateEdge, "edge {" + std::to_string(key.first) + "," + std::to_string(key.second) + "} already exists",
                  "edge " + std::to_string(i));
  for (std::size_t i = 0; i < p.edges.size(); ++i) {
    const Edge& e = p.edges[i];
    if (geom::segments_conflict(ka->xy(), kb->xy(), p.at(e.a).xy(), p.at(e.b).xy()))
      throw Error(Errc::EdgeCrossing, "new edge crosses edge " + std::to_string(i), "edge " + std::to_string(i));
  }
  Edge e{a, b, kind};
  p.edges.push_back(e);
  return e;
}

// Identifies victim with survivor. Edges and panels keep their design-plane
// ids; every consumer resolves them through canonical().
inline CreasePattern merge_keypoints(const CreasePattern& pattern, int survivor, int victim) {
  const KeyPoint* ks = pattern.find(survivor);
  const KeyPoint* kv = pattern.find(victim);
  if (!ks || !ks->live()) throw Error(Errc::UnknownKeypoint, "unknown keypoint " + std::to_string(survivor), "keypoint " + std::to_string(survivor));
  if (!kv || !kv->live()) throw Error(Errc::UnknownKeypoint, "unknown keypoint " + std::to_string(victim), "keypoint " + std::to_string(victim));
  if (survivor == victim) throw Error(Errc::MergeCreatesSelfEdge, "cannot merge a keypoint with itself", "keypoint " + std::to_string(victim));

  CreasePattern out = pattern;
  out.find(victim)->merged_into = survivor;
  std::map<EdgeKey, std::size_t> seen;
  for (std::size_t i = 0; i < out.edges.size(); ++i) {
    const EdgeKey k = out.resolved(out.edges[i]);
    if (k.first == k.second)
      throw Error(Errc::MergeCreatesSelfEdge, "merge collapses edge " + std::to_string(i), "edge " + std::to_string(i));
    auto [it, inserted] = seen.emplace(k, i);
    if (!inserted)
      throw Error(Errc::MergeCreatesDuplicateEdge,
                  "merge makes edges " + std::to_string(it->second) + " and " + std::to_string(i) + " coincide",
                  "edge " + std::to_string(i));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Validation

struct Violation {
  Errc code;
  std::string message;
  std::vector<std::string> entities;
  bool warning = false;
};

inline std::vector<Violation> validate(const CreasePattern& p) {
  std::vector<Violation> out;
  auto kp_name = [](int id) { return "keypoint " + std::to_string(id); };
  auto edge_name = [](std::size_t i) { return "edge " + std::to_string(i); };

  for (std::size_t i = 1; i < p.keypoints.size(); ++i)
    if (p.keypoints[i].id <= p.keypoints[i - 1].id)
      out.push_back({Errc::DuplicateKeypointId, "keypoint ids must be unique and ascending", {kp_name(p.keypoints[i].id)}});

  for (const auto& k : p.keypoints) {
    if (k.actuation && !k.dof[static_cast<int>(*k.actuation)])
      out.push_back({Errc::InconsistentActuation, "actuation axis locked by DOF mask", {kp_name(k.id)}});
    if (k.merged_into && !p.find(*k.merged_into))
      out.push_back({Errc::UnknownKeypoint, "merged into a missing keypoint", {kp_name(k.id)}});
  }

  std::vector<bool> edge_ok(p.edges.size(), true);
  std::map<EdgeKey, std::size_t> seen;
  for (std::size_t i = 0; i < p.edges.size(); ++i) {
    const Edge& e = p.edges[i];
    if (!p.find(e.a) || !p.find(e.b)) {
      out.push_back({Errc::UnknownKeypoint, "edge references a missing keypoint", {edge_name(i)}});
      edge_ok[i] = false;
      continue;
    }
    const EdgeKey k = p.resolved(e);
    if (k.first == k.second) {
      out.push_back({Errc::SelfEdge, "edge endpoints coincide", {edge_name(i)}});
      edge_ok[i] = false;
      continue;
    }
    auto [it, inserted] = seen.emplace(k, i);
    if (!inserted) out.push_back({Errc::DuplicateEdge, "duplicate edge", {edge_name(it->second), edge_name(i)}});
  }

  for (std::size_t i = 0; i < p.edges.size(); ++i) {
    if (!edge_ok[i]) continue;
    for (std::size_t j = i + 1; j < p.edges.size(); ++j) {
      if (!edge_ok[j]) continue;
      const Edge& a = p.edges[i];
      const Edge& b = p.edges[j];
      if (edge_key(a.a, a.b) == edge_key(b.a, b.b)) continue;  // reported as duplicate
      if (geom::segments_conflict(p.at(a.a).xy(), p.at(a.b).xy(), p.at(b.a).xy(), p.at(b.b).xy()))
        out.push_back({Errc::EdgeCrossing, "edges intersect away from a shared endpoint", {edge_name(i), edge_name(j)}});
    }
  }

  for (std::size_t pi = 0; pi < p.panels.size(); ++pi) {
    const auto& cyc = p.panels[pi].cycle;
    const std::string pname = "panel " + std::to_string(pi);
    if (cyc.size() < 3) {
      out.push_back({Errc::InvalidPanel, "panel cycle needs at least 3 keypoints", {pname}});
      continue;
    }
    bool has_crease = false;
    bool complete = true;
    for (std::size_t i = 0; i < cyc.size(); ++i) {
      const int a = cyc[i], b = cyc[(i + 1) % cyc.size()];
      auto ei = p.find_edge(a, b);
      if (!ei) {
        out.push_back({Errc::InvalidPanel, "panel side {" + std::to_string(a) + "," + std::to_string(b) + "} is not an edge", {pname}});
        complete = false;
        continue;
      }
      has_crease |= p.edges[*ei].kind == EdgeKind::Crease;
    }
    if (complete && !has_crease) out.push_back({Errc::NoCreaseInCycle, "panel has no crease edge", {pname}});
    if (complete) {
      std::vector<Vec2> poly;
      for (int id : cyc)
        if (const KeyPoint* k = p.find(id)) poly.push_back(k->xy());
      if (poly.size() == cyc.size() && geom::signed_area(poly) <= 0.0)
        out.push_back({Errc::InvalidPanel, "panel cycle is not counterclockwise", {pname}});
    }
  }

  // Isolated keypoints are allowed but flagged.
  std::set<int> incident;
  for (const auto& e : p.edges) {
    incident.insert(e.a);
    incident.insert(e.b);
  }
  for (const auto& k : p.keypoints)
    if (k.live() && !incident.count(k.id)) {
      bool absorbed = false;
      for (const auto& other : p.keypoints)
        if (other.merged_into == k.id && incident.count(other.id)) absorbed = true;
      if (!absorbed) out.push_back({Errc::IsolatedKeypoint, "keypoint is not incident to any edge", {kp_name(k.id)}, true});
    }
  return out;
}

inline bool has_errors(const std::vector<Violation>& v) {
  return std::any_of(v.begin(), v.end(), [](const Violation& x) { return !x.warning; });
}

}  // namespace origami
