#pragma once

// MJCF (MuJoCo XML) export and a structural parse-back audit.
//
// Each live keypoint becomes a body with one slide joint per free axis, each
// panel a 2-D flex over its keypoint bodies, each actuated keypoint a position
// actuator on its slide joint. See docs/mjcf_schema.md for the attribute set.

#include "origami/design_graph.hpp"
#include "origami/panel_mesh.hpp"
#include "origami/sim_core.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace origami {

struct MjcfStats {
  std::size_t body_count = 0;  // keypoint bodies (the payload body is not counted)
  std::size_t flex_count = 0;
  std::size_t actuator_count = 0;
};

struct MjcfDocument {
  std::string xml_text;
  MjcfStats stats;
};

namespace mjcf {

// 9 significant digits, shortest form, no negative zero.
inline std::string num(double v) {
  if (v == 0.0) v = 0.0;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  std::string s = buf;
  return s == "-0" ? "0" : s;
}

inline std::string vec(const Vec3& v) { return num(v.x()) + " " + num(v.y()) + " " + num(v.z()); }

inline std::string body_name(int id) { return "kp" + std::to_string(id); }
inline std::string joint_name(int id, Axis a) { return body_name(id) + "_" + axis_name(a); }
inline std::string actuator_name(int id, Axis a) { return "act_" + joint_name(id, a); }

// Vertex bodies of a panel in cycle order, merged keypoints resolved.
inline std::vector<int> panel_vertices(const CreasePattern& p, const Panel& panel) {
  std::vector<int> out;
  for (int id : panel.cycle) {
    const int c = p.canonical(id);
    if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
  }
  return out;
}

inline void check_meshed(const CreasePattern& p, const TriMesh& mesh) {
  std::vector<int> count(p.panels.size(), 0);
  for (const auto& t : mesh.triangles)
    if (t.panel >= 0 && static_cast<std::size_t>(t.panel) < count.size()) ++count[t.panel];
  for (std::size_t i = 0; i < count.size(); ++i)
    if (count[i] == 0) throw Error(Errc::UnmeshedPanel, "panel has no triangles in the mesh", "panel " + std::to_string(i));
}

}  // namespace mjcf

struct MjcfOptions {
  // Servo settings per actuated keypoint; keypoints not named here get the
  // default servo.
  std::vector<ActuationEvent> events;
  // Starting pose per live keypoint in id order, when the caller posed the
  // sheet (empty: the simulator's own starting pose).
  std::vector<Vec3> start;
};

inline MjcfDocument export_mjcf(const CreasePattern& pattern, const TriMesh& mesh, const SceneConfig& scene, const Material& material,
                                const MjcfOptions& options = {}) {
  for (const auto& v : validate(pattern))
    if (!v.warning) throw Error(v.code, v.message, v.entities.empty() ? std::string() : v.entities.front());
  mjcf::check_meshed(pattern, mesh);
  // Body positions and masses come from the simulator so closed loops are
  // emitted in their folded-shut starting pose.
  Simulation sim = assemble(pattern, mesh, material, scene);
  if (!options.start.empty()) {
    if (options.start.size() != sim.size())
      throw Error(Errc::InvalidArgument, "start pose needs one position per live keypoint", "start");
    sim.start = options.start;
  }
  auto servo_for = [&](int id) {
    for (const auto& ev : options.events)
      if (std::find(ev.keypoints.begin(), ev.keypoints.end(), id) != ev.keypoints.end()) return ev;
    return ActuationEvent{};
  };

  using mjcf::num;
  using mjcf::vec;
  MjcfDocument doc;
  std::ostringstream x;
  x << "<mujoco model=\"" << (pattern.name.empty() ? "origami" : pattern.name) << "\">\n";
  x << "  <!-- panel_bend_stiffness " << num(material.panel_bend_stiffness)
    << " N*m/rad on panel-interior triangle edges: no flex attribute -->\n";
  x << "  <!-- damping " << num(material.damping) << " 1/s is mass-proportional in the native simulator -->\n";
  x << "  <option timestep=\"" << num(scene.dt) << "\" gravity=\"" << vec(scene.gravity) << "\"/>\n";
  x << "  <worldbody>\n";
  if (scene.ground.enabled)
    x << "    <geom name=\"ground\" type=\"plane\" size=\"0 0 1\" friction=\"" << num(scene.ground.friction) << "\"/>\n";
  for (std::size_t n = 0; n < sim.size(); ++n) {
    const int id = sim.node_ids[n];
    x << "    <body name=\"" << mjcf::body_name(id) << "\" pos=\"" << vec(sim.start[n]) << "\">\n";
    x << "      <inertial pos=\"0 0 0\" mass=\"" << num(sim.mass[n]) << "\" diaginertia=\"1e-09 1e-09 1e-09\"/>\n";
    for (int a = 0; a < 3; ++a) {
      if (!sim.dof[n][a]) continue;
      x << "      <joint name=\"" << mjcf::joint_name(id, Axis(a)) << "\" type=\"slide\" axis=\"" << vec(axis_unit(Axis(a))) << "\"";
      if (sim.actuation[n] == Axis(a)) {
        const ActuationEvent ev = servo_for(id);
        if (ev.limit_travel)
          x << " limited=\"true\" range=\"" << num(std::min(0.0, ev.target_displacement)) << " "
            << num(std::max(0.0, ev.target_displacement)) << "\"";
      }
      x << "/>\n";
    }
    x << "    </body>\n";
    ++doc.stats.body_count;
  }
  if (scene.payload) {
    const auto& ball = *scene.payload;
    x << "    <body name=\"payload\" pos=\"" << vec(ball.initial_position) << "\">\n";
    x << "      <freejoint name=\"payload_free\"/>\n";
    x << "      <geom name=\"payload\" type=\"sphere\" size=\"" << num(ball.radius) << "\" mass=\"" << num(ball.mass) << "\"/>\n";
    x << "    </body>\n";
  }
  x << "  </worldbody>\n";

  x << "  <deformable>\n";
  for (std::size_t i = 0; i < pattern.panels.size(); ++i) {
    const auto verts = mjcf::panel_vertices(pattern, pattern.panels[i]);
    std::map<int, int> local;
    for (std::size_t k = 0; k < verts.size(); ++k) local[verts[k]] = static_cast<int>(k);
    x << "    <flex name=\"panel" << i << "\" dim=\"2\" radius=\"" << num(0.5 * material.thickness) << "\" body=\"";
    for (std::size_t k = 0; k < verts.size(); ++k) x << (k ? " " : "") << mjcf::body_name(verts[k]);
    x << "\" element=\"";
    bool first = true;
    for (const auto& t : mesh.triangles) {
      if (t.panel != static_cast<int>(i)) continue;
      for (int id : t.ids) {
        x << (first ? "" : " ") << local.at(pattern.canonical(id));
        first = false;
      }
    }
    x << "\">\n";
    x << "      <elasticity young=\"" << num(material.youngs_modulus) << "\" poisson=\"" << num(material.poisson_ratio)
      << "\" thickness=\"" << num(material.thickness) << "\" damping=\"" << num(material.damping) << "\"/>\n";
    x << "    </flex>\n";
    ++doc.stats.flex_count;
  }
  x << "  </deformable>\n";

  x << "  <actuator>\n";
  for (std::size_t n = 0; n < sim.size(); ++n) {
    if (!sim.actuation[n]) continue;
    const int id = sim.node_ids[n];
    const Axis a = *sim.actuation[n];
    const double m = sim.mass[n];
    const ActuationEvent servo = servo_for(id);
    x << "    <position name=\"" << mjcf::actuator_name(id, a) << "\" joint=\"" << mjcf::joint_name(id, a) << "\" kp=\""
      << num(m * servo.gain * servo.gain) << "\" kv=\"" << num(2.0 * m * servo.gain) << "\"";
    if (servo.max_force > 0)
      x << " forcelimited=\"true\" forcerange=\"" << num(-servo.max_force) << " " << num(servo.max_force) << "\"";
    x << "/>\n";
    ++doc.stats.actuator_count;
  }
  x << "  </actuator>\n";
  x << "</mujoco>\n";
  doc.xml_text = x.str();
  return doc;
}

namespace mjcf {

using boost::property_tree::ptree;

inline std::string attr(const ptree& node, const std::string& name) {
  return node.get<std::string>("<xmlattr>." + name, "");
}

inline std::vector<std::string> words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

// Collects every <body> element below a node (nested bodies included).
inline void collect_bodies(const ptree& node, std::vector<const ptree*>& out) {
  for (const auto& [tag, child] : node) {
    if (tag == "body") out.push_back(&child);
    if (tag != "<xmlattr>") collect_bodies(child, out);
  }
}

}  // namespace mjcf

// Structural audit of an exported document against the pattern and mesh it
// should describe. Problems are returned, never thrown.
inline std::vector<Violation> check_mjcf(const std::string& xml_text, const CreasePattern& pattern, const TriMesh& mesh) {
  using mjcf::attr;
  using mjcf::ptree;
  std::vector<Violation> out;
  auto report = [&](Errc code, std::string message, std::string entity) {
    out.push_back({code, std::move(message), {std::move(entity)}, false});
  };

  ptree doc;
  try {
    std::istringstream in(xml_text);
    boost::property_tree::read_xml(in, doc, boost::property_tree::xml_parser::trim_whitespace);
  } catch (const std::exception& e) {
    report(Errc::BadDocument, std::string("XML does not parse: ") + e.what(), "document");
    return out;
  }
  const auto root = doc.get_child_optional("mujoco");
  if (!root) {
    report(Errc::BadDocument, "no <mujoco> root element", "document");
    return out;
  }

  // Body census: one body per live keypoint, none for merged-away ids.
  std::vector<const ptree*> bodies;
  if (auto wb = root->get_child_optional("worldbody")) mjcf::collect_bodies(*wb, bodies);
  std::map<std::string, const ptree*> by_name;
  std::set<std::string> joints;
  for (const ptree* b : bodies) {
    const std::string name = attr(*b, "name");
    if (by_name.count(name)) report(Errc::DuplicatedSharedKeypoint, "body " + name + " appears more than once", "body " + name);
    by_name[name] = b;
    for (const auto& [tag, child] : *b)
      if (tag == "joint") joints.insert(attr(child, "name"));
  }
  for (const auto& k : pattern.keypoints) {
    const std::string name = mjcf::body_name(k.id);
    if (k.live() && !by_name.count(name)) report(Errc::DanglingReference, "no body for keypoint " + std::to_string(k.id), "body " + name);
    if (!k.live() && by_name.count(name))
      report(Errc::DuplicatedSharedKeypoint, "merged keypoint " + std::to_string(k.id) + " has its own body", "body " + name);
  }

  // Flexes: one per panel, vertices and elements matching the mesh.
  std::vector<const ptree*> flexes;
  if (auto def = root->get_child_optional("deformable"))
    for (const auto& [tag, child] : *def)
      if (tag == "flex") flexes.push_back(&child);
  if (flexes.size() != pattern.panels.size())
    report(Errc::CountMismatch,
           std::to_string(flexes.size()) + " flex elements for " + std::to_string(pattern.panels.size()) + " panels", "deformable");
  for (std::size_t i = 0; i < flexes.size(); ++i) {
    const ptree& f = *flexes[i];
    const std::string entity = "flex " + (attr(f, "name").empty() ? std::to_string(i) : attr(f, "name"));
    const auto names = mjcf::words(attr(f, "body"));
    std::set<std::string> seen;
    for (const auto& n : names) {
      if (!by_name.count(n)) report(Errc::DanglingReference, "flex vertex names missing body " + n, entity);
      if (!seen.insert(n).second) report(Errc::DuplicatedSharedKeypoint, "body " + n + " listed twice", entity);
    }
    std::vector<long> element;
    for (const auto& w : mjcf::words(attr(f, "element"))) {
      try {
        element.push_back(std::stol(w));
      } catch (const std::exception&) {
        element.push_back(-1);
      }
    }
    for (long e : element)
      if (e < 0 || e >= static_cast<long>(names.size())) {
        report(Errc::DanglingReference, "element index " + std::to_string(e) + " has no vertex", entity);
        break;
      }
    if (i >= pattern.panels.size()) continue;
    const auto verts = mjcf::panel_vertices(pattern, pattern.panels[i]);
    std::set<std::string> expected;
    for (int id : verts) expected.insert(mjcf::body_name(id));
    if (names.size() != verts.size() || std::set<std::string>(names.begin(), names.end()) != expected)
      report(Errc::CountMismatch, "vertex bodies do not match the panel's keypoints", entity);
    const std::size_t tris = mesh.panel_triangles(static_cast<int>(i)).size();
    if (element.size() != 3 * tris)
      report(Errc::CountMismatch, std::to_string(element.size() / 3) + " elements for " + std::to_string(tris) + " triangles", entity);
  }

  // Actuators: every actuated keypoint drives its own slide joint.
  std::map<std::string, std::string> actuators;  // name -> joint
  if (auto act = root->get_child_optional("actuator"))
    for (const auto& [tag, child] : *act)
      if (tag == "position") actuators[attr(child, "name")] = attr(child, "joint");
  for (const auto& k : pattern.keypoints) {
    if (!k.live() || !k.actuation) continue;
    const std::string name = mjcf::actuator_name(k.id, *k.actuation), joint = mjcf::joint_name(k.id, *k.actuation);
    auto it = actuators.find(name);
    if (it == actuators.end() || it->second != joint)
      report(Errc::MissingActuator, "no position actuator on joint " + joint, "keypoint " + std::to_string(k.id));
    else if (!joints.count(joint))
      report(Errc::DanglingReference, "actuator drives missing joint " + joint, "actuator " + name);
  }
  return out;
}

}  // namespace origami
