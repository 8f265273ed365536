#pragma once

// Scene and result files.
//
// Scene file (JSON, version 1). Every field is optional; missing ones keep
// the library defaults.
//   {"version":1, "dt":s, "max_time":s, "gravity":[x,y,z],
//    "ground":{"enabled":b,"stiffness":N/m,"damping":Ns/m,"friction":mu},
//    "payload":{"mass":kg,"radius":m,"pos":[x,y,z]} | null,
//    "material":{"youngs_modulus","poisson_ratio","thickness","density","panel_bend_stiffness","damping"},
//    "events":[{"keypoints":[id..],"axis":"x|y|z","target":m,"trigger_step":n,"wait_for_payload":b,
//               "contact_steps":n,"hold":b,"max_speed":m/s,"gain":1/s,"max_force":N,"limit_travel":b}],
//    "frame_stride":n}
// Without "events", every actuated keypoint is driven 0.02 m along its axis
// from step 0.

#include "origami/cmaes.hpp"
#include "origami/design_io.hpp"
#include "origami/sim_core.hpp"

#include <map>
#include <string>
#include <vector>

namespace origami {

struct SceneFile {
  SceneConfig scene;
  Material material;
  std::vector<ActuationEvent> events;
  bool has_events = false;
  int frame_stride = 20;
};

namespace scene_io {

inline Vec3 vec3(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw Error(Errc::BadDocument, std::string(what) + " must be [x, y, z]", what);
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace scene_io

inline SceneFile scene_from_json(const json& j) {
  using scene_io::read;
  if (!j.is_object()) throw Error(Errc::BadDocument, "scene must be a JSON object", "scene");
  SceneFile f;
  try {
    if (j.contains("version") && j.at("version").get<int>() != 1)
      throw Error(Errc::BadDocument, "unsupported scene version", "scene");
    auto& s = f.scene;
    read(j, "dt", s.dt);
    read(j, "max_time", s.max_time);
    if (j.contains("gravity")) s.gravity = scene_io::vec3(j.at("gravity"), "gravity");
    if (j.contains("ground")) {
      const auto& g = j.at("ground");
      read(g, "enabled", s.ground.enabled);
      read(g, "stiffness", s.ground.stiffness);
      read(g, "damping", s.ground.damping);
      read(g, "friction", s.ground.friction);
    }
    if (j.contains("payload") && !j.at("payload").is_null()) {
      const auto& p = j.at("payload");
      RigidSphere ball;
      read(p, "mass", ball.mass);
      read(p, "radius", ball.radius);
      if (p.contains("pos")) ball.initial_position = scene_io::vec3(p.at("pos"), "payload.pos");
      s.payload = ball;
    }
    if (j.contains("material")) {
      const auto& m = j.at("material");
      read(m, "youngs_modulus", f.material.youngs_modulus);
      read(m, "poisson_ratio", f.material.poisson_ratio);
      read(m, "thickness", f.material.thickness);
      read(m, "density", f.material.density);
      read(m, "panel_bend_stiffness", f.material.panel_bend_stiffness);
      read(m, "damping", f.material.damping);
    }
    if (j.contains("events")) {
      f.has_events = true;
      for (const auto& e : j.at("events")) {
        ActuationEvent ev;
        read(e, "keypoints", ev.keypoints);
        if (e.contains("axis")) {
          const auto a = parse_axis(e.at("axis").get<std::string>());
          if (!a) throw Error(Errc::BadDocument, "axis must be x, y or z", "event");
          ev.axis = *a;
        }
        read(e, "target", ev.target_displacement);
        read(e, "trigger_step", ev.trigger_step);
        read(e, "wait_for_payload", ev.wait_for_payload);
        read(e, "contact_steps", ev.contact_steps);
        read(e, "hold", ev.hold);
        read(e, "max_speed", ev.max_speed);
        read(e, "gain", ev.gain);
        read(e, "max_force", ev.max_force);
        read(e, "limit_travel", ev.limit_travel);
        f.events.push_back(ev);
      }
    }
    read(j, "frame_stride", f.frame_stride);
  } catch (const json::exception& e) {
    throw Error(Errc::BadDocument, e.what(), "scene");
  }
  f.scene.check();
  f.material.check();
  return f;
}

inline SceneFile parse_scene(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::BadDocument, e.what(), "scene");
  }
  return scene_from_json(j);
}

// One event per actuation axis, covering every keypoint actuated on it.
inline std::vector<ActuationEvent> default_events(const CreasePattern& p) {
  std::map<Axis, ActuationEvent> by_axis;
  for (const auto& k : p.keypoints) {
    if (!k.live() || !k.actuation) continue;
    auto& ev = by_axis[*k.actuation];
    ev.axis = *k.actuation;
    ev.target_displacement = 0.02;
    ev.keypoints.push_back(k.id);
  }
  std::vector<ActuationEvent> out;
  for (auto& [axis, ev] : by_axis) out.push_back(std::move(ev));
  return out;
}

inline std::vector<ActuationEvent> events_for(const SceneFile& f, const CreasePattern& p) {
  return f.has_events ? f.events : default_events(p);
}

inline json frame_to_json(const Frame& fr, bool sphere) {
  json kp = json::array();
  for (const auto& x : fr.kp) kp.push_back({x.x(), x.y(), x.z()});
  json j{{"t", fr.t}, {"kp", std::move(kp)}};
  if (sphere)
    j["sphere"] = {{"pos", {fr.sphere_pos.x(), fr.sphere_pos.y(), fr.sphere_pos.z()}},
                   {"vel", {fr.sphere_vel.x(), fr.sphere_vel.y(), fr.sphere_vel.z()}}};
  return j;
}

inline json opt_result_to_json(const OptResult& r) {
  json recs = json::array();
  for (const auto& g : r.records)
    recs.push_back({{"generation", g.generation},
                    {"best_params", g.best_params},
                    {"best_fitness", g.best_fitness},
                    {"mean", g.mean},
                    {"sigma", g.sigma},
                    {"best_so_far", g.best_so_far}});
  return {{"version", 1},
          {"best_params", r.best_params},
          {"best_fitness", r.best_fitness},
          {"evaluations", r.evaluations},
          {"records", std::move(recs)}};
}

}  // namespace origami
