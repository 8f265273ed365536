#pragma once

// Design file (JSON, version 1):
//   {"version":1,"name":str,
//    "keypoints":[{"id":int,"pos":[x,y,z],"dof":[b,b,b],"actuation":{"axis":"x|y|z"}|null}],
//    "edges":[{"a":int,"b":int,"kind":"crease|boundary"}],
//    "panels":[[int,...],...]}
// Merged keypoints additionally carry "merged_into":int.

#include "origami/design_graph.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <string>

namespace origami {

using json = nlohmann::json;

inline constexpr int kDesignVersion = 1;

inline json to_json(const CreasePattern& p) {
  json j;
  j["version"] = kDesignVersion;
  j["name"] = p.name;
  json kps = json::array();
  for (const auto& k : p.keypoints) {
    json e;
    e["id"] = k.id;
    e["pos"] = {k.position.x(), k.position.y(), k.position.z()};
    e["dof"] = {k.dof[0], k.dof[1], k.dof[2]};
    if (k.actuation)
      e["actuation"] = {{"axis", std::string(1, axis_name(*k.actuation))}};
    else
      e["actuation"] = nullptr;
    if (k.merged_into) e["merged_into"] = *k.merged_into;
    kps.push_back(std::move(e));
  }
  j["keypoints"] = std::move(kps);
  json edges = json::array();
  for (const auto& e : p.edges) edges.push_back({{"a", e.a}, {"b", e.b}, {"kind", std::string(kind_name(e.kind))}});
  j["edges"] = std::move(edges);
  json panels = json::array();
  for (const auto& pn : p.panels) panels.push_back(pn.cycle);
  j["panels"] = std::move(panels);
  return j;
}

namespace detail {
[[noreturn]] inline void bad_design(const std::string& what) { throw Error(Errc::BadDocument, what, "design"); }
}  // namespace detail

inline CreasePattern pattern_from_json(const json& j) {
  try {
    if (!j.is_object()) detail::bad_design("design must be a JSON object");
    if (j.value("version", 0) != kDesignVersion) detail::bad_design("unsupported design version");
    CreasePattern p;
    p.name = j.value("name", std::string{});
    for (const auto& e : j.at("keypoints")) {
      KeyPoint k;
      k.id = e.at("id").get<int>();
      const auto& pos = e.at("pos");
      if (!pos.is_array() || pos.size() != 3) detail::bad_design("keypoint pos must have 3 components");
      k.position = Vec3(pos[0].get<double>(), pos[1].get<double>(), pos[2].get<double>());
      const auto& dof = e.at("dof");
      if (!dof.is_array() || dof.size() != 3) detail::bad_design("keypoint dof must have 3 booleans");
      k.dof = {dof[0].get<bool>(), dof[1].get<bool>(), dof[2].get<bool>()};
      if (e.contains("actuation") && !e["actuation"].is_null()) {
        auto axis = parse_axis(e["actuation"].at("axis").get<std::string>());
        if (!axis) detail::bad_design("actuation axis must be x, y or z");
        k.actuation = axis;
      }
      if (e.contains("merged_into") && !e["merged_into"].is_null()) k.merged_into = e["merged_into"].get<int>();
      p.keypoints.push_back(k);
    }
    std::stable_sort(p.keypoints.begin(), p.keypoints.end(), [](const KeyPoint& a, const KeyPoint& b) { return a.id < b.id; });
    for (const auto& e : j.at("edges")) {
      Edge ed;
      ed.a = e.at("a").get<int>();
      ed.b = e.at("b").get<int>();
      const std::string kind = e.at("kind").get<std::string>();
      if (kind == "crease")
        ed.kind = EdgeKind::Crease;
      else if (kind == "boundary")
        ed.kind = EdgeKind::Boundary;
      else
        detail::bad_design("edge kind must be crease or boundary");
      p.edges.push_back(ed);
    }
    if (j.contains("panels"))
      for (const auto& c : j.at("panels")) p.panels.push_back(Panel{c.get<std::vector<int>>()});
    return p;
  } catch (const json::exception& ex) {
    detail::bad_design(ex.what());
  }
}

inline std::string serialize(const CreasePattern& p) { return to_json(p).dump(2) + "\n"; }

inline CreasePattern parse_design(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& ex) {
    detail::bad_design(ex.what());
  }
  return pattern_from_json(j);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::NotFound, "cannot open " + path, path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::NotFound, "cannot write " + path, path);
  out << text;
}

inline CreasePattern load_design(const std::string& path) { return parse_design(read_text_file(path)); }

}  // namespace origami
