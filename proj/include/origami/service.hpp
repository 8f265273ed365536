#pragma once

// Local JSON service behind the editor: a design store with per-design
// locking and an asynchronous job runner for simulations, sweeps and
// optimizations. All state lives under one data directory:
//   <data>/designs/<id>.json
//   <data>/jobs/<job id>/{job.json, frames.jsonl, heatmap.csv, bins.csv, result.json}
// so a restarted service still serves earlier designs and finished jobs.

#include "origami/catapult.hpp"
#include "origami/design_io.hpp"
#include "origami/mjcf_export.hpp"
#include "origami/scene_io.hpp"

#include <httplib.h>

#include <atomic>
#include <charconv>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <regex>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

namespace origami {

inline constexpr int kApiVersion = 1;

inline int http_status(Errc code) {
  switch (code) {
    case Errc::NotFound: return 404;
    case Errc::BadDocument: return 400;
    default: return 422;
  }
}

inline json error_json(std::string_view code, const std::string& message, const std::string& entity) {
  return {{"version", kApiVersion}, {"code", code}, {"message", message}, {"entity", entity}};
}

// ---------------------------------------------------------------------------
// Designs

class DesignStore {
 public:
  explicit DesignStore(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

  static void check_id(const std::string& id) {
    static const std::regex ok("[A-Za-z0-9_-]{1,64}");
    if (!std::regex_match(id, ok)) throw Error(Errc::InvalidArgument, "design ids use letters, digits, '-' and '_'", id);
  }

  void put(const std::string& id, const CreasePattern& p) {
    check_id(id);
    auto e = entry(id, true);
    std::unique_lock lock(e->mutex);
    write_text_file(path(id), serialize(p));
    e->pattern = p;
    e->loaded = true;
  }

  CreasePattern snapshot(const std::string& id) {
    auto e = entry(id, false);
    std::shared_lock lock(e->mutex);
    return e->pattern;
  }

  // Applies fn to the current design under the design's write lock. The new
  // design is stored only if fn returns normally.
  template <class Fn>
  CreasePattern mutate(const std::string& id, Fn&& fn) {
    auto e = entry(id, false);
    std::unique_lock lock(e->mutex);
    CreasePattern next = fn(e->pattern);
    write_text_file(path(id), serialize(next));
    e->pattern = std::move(next);
    return e->pattern;
  }

  std::string next_id() {
    std::lock_guard lock(mutex_);
    for (;; ++counter_) {
      const std::string id = "d" + std::to_string(counter_);
      if (!entries_.count(id) && !std::filesystem::exists(path(id))) return id;
    }
  }

 private:
  struct Entry {
    std::shared_mutex mutex;
    CreasePattern pattern;
    bool loaded = false;
  };

  std::filesystem::path path(const std::string& id) const { return dir_ / (id + ".json"); }

  std::shared_ptr<Entry> entry(const std::string& id, bool create) {
    check_id(id);
    std::lock_guard lock(mutex_);
    auto it = entries_.find(id);
    if (it != entries_.end()) return it->second;
    auto e = std::make_shared<Entry>();
    if (std::filesystem::exists(path(id))) {
      e->pattern = load_design(path(id).string());
      e->loaded = true;
    } else if (!create) {
      throw Error(Errc::NotFound, "no design " + id, id);
    }
    entries_[id] = e;
    return e;
  }

  std::filesystem::path dir_;
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Entry>> entries_;
  int counter_ = 1;
};

// ---------------------------------------------------------------------------
// Jobs

enum class JobStatus { Queued, Running, Done, Failed };

inline std::string_view status_name(JobStatus s) {
  switch (s) {
    case JobStatus::Queued: return "queued";
    case JobStatus::Running: return "running";
    case JobStatus::Done: return "done";
    case JobStatus::Failed: return "failed";
  }
  return "failed";
}

struct Job {
  std::string id, kind;
  std::filesystem::path dir;
  std::atomic<double> progress{0.0};

  JobStatus status() const {
    std::lock_guard lock(mutex);
    return status_;
  }

  // Status only moves forward; done and failed are terminal.
  bool advance(JobStatus next) {
    std::lock_guard lock(mutex);
    if (static_cast<int>(next) <= static_cast<int>(status_) || status_ == JobStatus::Done || status_ == JobStatus::Failed) return false;
    status_ = next;
    return true;
  }

  json record() const {
    std::lock_guard lock(mutex);
    json j{{"version", kApiVersion}, {"id", id}, {"kind", kind}, {"status", status_name(status_)}, {"progress", progress.load()},
           {"result", dir.string()}};
    if (!summary.is_null()) j["summary"] = summary;
    if (!error.is_null()) j["error"] = error;
    return j;
  }

  mutable std::mutex mutex;
  JobStatus status_ = JobStatus::Queued;
  json summary, error;
  std::vector<std::string> frames;  // one JSON object per frame, for playback
};

// Fixed-size worker pool; jobs run in submission order.
class WorkerPool {
 public:
  explicit WorkerPool(unsigned n) {
    for (unsigned i = 0; i < std::max(1u, n); ++i)
      threads_.emplace_back([this](std::stop_token st) {
        for (;;) {
          std::function<void()> task;
          {
            std::unique_lock lock(mutex_);
            cv_.wait(lock, st, [&] { return !queue_.empty(); });
            if (st.stop_requested()) return;
            task = std::move(queue_.front());
            queue_.pop_front();
          }
          task();
        }
      });
  }

  ~WorkerPool() {
    for (auto& t : threads_) t.request_stop();
    threads_.clear();
  }

  void submit(std::function<void()> task) {
    {
      std::lock_guard lock(mutex_);
      queue_.push_back(std::move(task));
    }
    cv_.notify_one();
  }

 private:
  std::mutex mutex_;
  std::condition_variable_any cv_;
  std::deque<std::function<void()>> queue_;
  std::vector<std::jthread> threads_;
};

struct ServiceConfig {
  std::filesystem::path data_dir = "origami-data";
  unsigned workers = 2;
  std::size_t max_page = 500;  // frames per page
};

class Service {
 public:
  explicit Service(ServiceConfig cfg)
      : cfg_(std::move(cfg)), designs_(cfg_.data_dir / "designs"), jobs_dir_(cfg_.data_dir / "jobs") {
    std::filesystem::create_directories(jobs_dir_);
    for (const auto& d : std::filesystem::directory_iterator(jobs_dir_)) {
      const std::string name = d.path().filename().string();
      if (name.rfind("job-", 0) == 0) job_counter_ = std::max(job_counter_, std::atoi(name.c_str() + 4));
    }
    pool_ = std::make_unique<WorkerPool>(cfg_.workers);
  }

  ~Service() { pool_.reset(); }

  DesignStore& designs() { return designs_; }

  void mount(httplib::Server& srv) {
    srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      try {
        std::rethrow_exception(ep);
      } catch (const Error& e) {
        res.status = http_status(e.code());
        res.set_content(error_json(to_string(e.code()), e.message(), e.entity()).dump(), "application/json");
      } catch (const json::exception& e) {
        res.status = 400;
        res.set_content(error_json("BadDocument", e.what(), "request").dump(), "application/json");
      } catch (const std::exception& e) {
        res.status = 500;
        res.set_content(error_json("Internal", e.what(), "").dump(), "application/json");
      }
    });

    // unrouted paths and methods still answer with the error shape
    srv.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
      if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
      const std::string code = res.status == 404 ? "NotFound" : "BadRequest";
      res.set_content(error_json(code, "no route for " + req.method + " " + req.path, req.path).dump(), "application/json");
      return httplib::Server::HandlerResponse::Handled;
    });

    srv.Post("/designs", [this](const auto& req, auto& res) {
      const json body = parse_body(req);
      const std::string id = body.contains("id") ? body.at("id").get<std::string>() : designs_.next_id();
      if (!body.contains("design")) throw Error(Errc::BadDocument, "missing \"design\"", "request");
      const CreasePattern p = pattern_from_json(body.at("design"));
      designs_.put(id, p);
      reply(res, design_reply(id, p));
    });
    srv.Get(R"(/designs/([^/]+))", [this](const auto& req, auto& res) {
      const std::string id = req.matches[1];
      reply(res, design_reply(id, designs_.snapshot(id)));
    });
    srv.Post(R"(/designs/([^/]+)/keypoints)", [this](const auto& req, auto& res) {
      const std::string id = req.matches[1];
      const json body = parse_body(req);
      int kp = -1;
      const auto p = designs_.mutate(id, [&](CreasePattern cur) {
        const auto& pos = body.at("pos");
        const Vec3 x(pos.at(0).get<double>(), pos.at(1).get<double>(), pos.size() > 2 ? pos.at(2).get<double>() : 0.0);
        DofMask dof{true, true, true};
        if (body.contains("dof"))
          for (int a = 0; a < 3; ++a) dof[a] = body.at("dof").at(a).get<bool>();
        std::optional<Axis> act;
        if (body.contains("actuation") && !body.at("actuation").is_null()) {
          act = parse_axis(body.at("actuation").get<std::string>());
          if (!act) throw Error(Errc::InvalidArgument, "actuation must be x, y or z", "actuation");
        }
        kp = add_keypoint(cur, x, dof, act);
        return cur;
      });
      json out = design_reply(id, p);
      out["keypoint"] = kp;
      reply(res, out);
    });
    srv.Post(R"(/designs/([^/]+)/edges)", [this](const auto& req, auto& res) {
      const std::string id = req.matches[1];
      const json body = parse_body(req);
      const auto p = designs_.mutate(id, [&](CreasePattern cur) {
        const std::string kind = body.value("kind", "crease");
        if (kind != "crease" && kind != "boundary") throw Error(Errc::InvalidArgument, "kind must be crease or boundary", "kind");
        add_edge(cur, body.at("a").get<int>(), body.at("b").get<int>(), kind == "crease" ? EdgeKind::Crease : EdgeKind::Boundary);
        return cur;
      });
      reply(res, design_reply(id, p));
    });
    srv.Post(R"(/designs/([^/]+)/merge)", [this](const auto& req, auto& res) {
      const std::string id = req.matches[1];
      const json body = parse_body(req);
      const auto p = designs_.mutate(id, [&](const CreasePattern& cur) {
        return merge_keypoints(cur, body.at("survivor").get<int>(), body.at("victim").get<int>());
      });
      reply(res, design_reply(id, p));
    });
    srv.Post(R"(/designs/([^/]+)/panel-detect)", [this](const auto& req, auto& res) {
      const std::string id = req.matches[1];
      const json body = parse_body(req);
      const auto& c = body.at("click");
      const Vec2 click(c.at(0).get<double>(), c.at(1).get<double>());
      Panel panel;
      if (body.value("define", false)) {
        designs_.mutate(id, [&](const CreasePattern& cur) {
          CreasePattern next = define_panel(cur, click);
          panel = next.panels.back();
          return next;
        });
      } else {
        panel = detect_panel(designs_.snapshot(id), click);
      }
      reply(res, {{"version", kApiVersion}, {"panel", {{"cycle", panel.cycle}}}});
    });
    srv.Get(R"(/designs/([^/]+)/mesh)", [this](const auto& req, auto& res) {
      const CreasePattern p = designs_.snapshot(req.matches[1]);
      const TriMesh mesh = mesh_pattern(p);
      json tris = json::array();
      for (const auto& t : mesh.triangles) tris.push_back({{"ids", t.ids}, {"panel", t.panel}});
      json pos = json::object();
      for (const auto& k : p.keypoints) pos[std::to_string(k.id)] = {k.position.x(), k.position.y(), k.position.z()};
      reply(res, {{"version", kApiVersion}, {"triangles", std::move(tris)}, {"positions", std::move(pos)}});
    });
    srv.Post(R"(/designs/([^/]+)/export)", [this](const auto& req, auto& res) {
      const CreasePattern p = designs_.snapshot(req.matches[1]);
      const SceneFile sf = req.body.empty() ? SceneFile{} : scene_from_json(parse_body(req).value("scene", json::object()));
      MjcfOptions opt;
      opt.events = events_for(sf, p);
      res.set_content(export_mjcf(p, mesh_pattern(p), sf.scene, sf.material, opt).xml_text, "application/xml");
    });

    srv.Post(R"(/jobs/(simulate|sweep|optimize))", [this](const auto& req, auto& res) {
      const std::string kind = req.matches[1];
      const json body = req.body.empty() ? json::object() : parse_body(req);
      reply(res, submit(kind, body)->record(), 202);
    });
    srv.Get(R"(/jobs/([^/]+))", [this](const auto& req, auto& res) { reply(res, job_record(req.matches[1])); });
    srv.Get(R"(/jobs/([^/]+)/frames)", [this](const auto& req, auto& res) {
      auto param = [&](const char* name, std::size_t fallback) {
        if (!req.has_param(name)) return fallback;
        const std::string v = req.get_param_value(name);
        std::size_t out = 0;
        const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc() || end != v.data() + v.size()) throw Error(Errc::BadDocument, std::string(name) + " must be a non-negative integer", name);
        return out;
      };
      const std::size_t from = param("from", 0), count = param("count", cfg_.max_page);
      reply(res, frames_page(req.matches[1], from, std::min(count, cfg_.max_page)));
    });
  }

  // Validates the request and queues the job.
  std::shared_ptr<Job> submit(const std::string& kind, const json& body) {
    std::function<void(Job&)> work;
    if (kind == "simulate") {
      const std::string design = body.at("design").get<std::string>();
      const CreasePattern p = designs_.snapshot(design);
      const SceneFile sf = scene_from_json(body.value("scene", json::object()));
      work = [p, sf](Job& job) { run_simulate(job, p, sf); };
    } else if (kind == "sweep") {
      SweepConfig cfg;
      cfg.threads = 1;
      auto range = [&](const char* key, Range& r) {
        if (body.contains(key)) r = {body.at(key).at(0).get<double>(), body.at(key).at(1).get<double>()};
      };
      range("theta", cfg.theta);
      range("l", cfg.arm);
      if (body.contains("grid")) {
        cfg.theta_steps = body.at("grid").at(0).get<int>();
        cfg.arm_steps = body.at("grid").at(1).get<int>();
      }
      if (cfg.theta_steps <= 0 || cfg.arm_steps <= 0) throw Error(Errc::InvalidArgument, "grid dimensions must be positive", "grid");
      int bt = cfg.theta_steps, bl = cfg.arm_steps;
      if (body.contains("bins")) {
        bt = body.at("bins").at(0).get<int>();
        bl = body.at("bins").at(1).get<int>();
      }
      if (bt <= 0 || bl <= 0) throw Error(Errc::InvalidArgument, "bin counts must be positive", "bins");
      work = [cfg, bt, bl](Job& job) { run_sweep(job, cfg, bt, bl); };
    } else {
      const CmaConfig cfg = catapult_cma_config(body.value("seed", std::uint64_t{1}), body.value("generations", 200), body.value("sigma", 0.025),
                                                body.value("population", 0));
      cfg.check();
      work = [cfg](Job& job) { run_optimize(job, cfg); };
    }

    auto job = std::make_shared<Job>();
    {
      std::lock_guard lock(mutex_);
      job->id = "job-" + std::to_string(++job_counter_);
      jobs_[job->id] = job;
    }
    job->kind = kind;
    job->dir = jobs_dir_ / job->id;
    std::filesystem::create_directories(job->dir);
    persist(*job);
    pool_->submit([this, job, work] {
      job->advance(JobStatus::Running);
      persist(*job);
      try {
        work(*job);
        job->progress = 1.0;
        job->advance(JobStatus::Done);
      } catch (const Error& e) {
        std::lock_guard lock(job->mutex);
        job->error = error_json(to_string(e.code()), e.message(), e.entity());
      } catch (const std::exception& e) {
        std::lock_guard lock(job->mutex);
        job->error = error_json("Internal", e.what(), job->id);
      }
      job->advance(JobStatus::Failed);  // no-op once done
      persist(*job);
    });
    return job;
  }

  json job_record(const std::string& id) {
    if (auto job = find_job(id)) return job->record();
    const auto path = job_file(id, "job.json");
    if (!std::filesystem::exists(path)) throw Error(Errc::NotFound, "no job " + id, id);
    return json::parse(read_text_file(path.string()));
  }

  json frames_page(const std::string& id, std::size_t from, std::size_t count) {
    std::vector<std::string> lines;
    if (auto job = find_job(id)) {
      std::lock_guard lock(job->mutex);
      lines = job->frames;
    } else {
      const auto path = job_file(id, "frames.jsonl");
      if (!std::filesystem::exists(job_file(id, "job.json"))) throw Error(Errc::NotFound, "no job " + id, id);
      if (std::filesystem::exists(path)) {
        std::istringstream in(read_text_file(path.string()));
        for (std::string line; std::getline(in, line);) lines.push_back(line);
      }
    }
    json frames = json::array();
    for (std::size_t i = from; i < lines.size() && i < from + count; ++i) frames.push_back(json::parse(lines[i]));
    const std::size_t next = std::min(lines.size(), from + frames.size());
    return {{"version", kApiVersion}, {"from", from}, {"next", next}, {"total", lines.size()}, {"frames", std::move(frames)}};
  }

 private:
  static json parse_body(const httplib::Request& req) {
    try {
      return json::parse(req.body);
    } catch (const json::exception& e) {
      throw Error(Errc::BadDocument, e.what(), "request");
    }
  }

  static void reply(httplib::Response& res, const json& j, int status = 200) {
    res.status = status;
    res.set_content(j.dump(), "application/json");
  }

  static json design_reply(const std::string& id, const CreasePattern& p) {
    json v = json::array();
    for (const auto& x : validate(p))
      v.push_back({{"code", to_string(x.code)}, {"message", x.message}, {"entities", x.entities}, {"warning", x.warning}});
    return {{"version", kApiVersion}, {"id", id}, {"design", to_json(p)}, {"violations", std::move(v)}};
  }

  std::filesystem::path job_file(const std::string& id, const char* name) const {
    static const std::regex ok("job-[0-9]+");
    if (!std::regex_match(id, ok)) throw Error(Errc::NotFound, "no job " + id, id);
    return jobs_dir_ / id / name;
  }

  std::shared_ptr<Job> find_job(const std::string& id) {
    std::lock_guard lock(mutex_);
    auto it = jobs_.find(id);
    return it == jobs_.end() ? nullptr : it->second;
  }

  static void persist(const Job& job) { write_text_file((job.dir / "job.json").string(), job.record().dump(2) + "\n"); }

  static void run_simulate(Job& job, const CreasePattern& p, const SceneFile& sf) {
    const TriMesh mesh = mesh_pattern(p);
    const Simulation sim = assemble(p, mesh, sf.material, sf.scene);
    RolloutOptions ro;
    ro.frame_stride = sf.frame_stride;
    const Trajectory tr = run_rollout(sim, events_for(sf, p), ro);
    std::vector<std::string> lines;
    std::string all;
    for (const auto& fr : tr.frames) {
      lines.push_back(frame_to_json(fr, tr.has_sphere).dump());
      all += lines.back() + "\n";
    }
    write_text_file((job.dir / "frames.jsonl").string(), all);
    json summary{{"steps", tr.steps}, {"frames", tr.frames.size()}, {"keypoints", tr.keypoint_ids}};
    if (tr.has_sphere) {
      summary["sphere_at_rest"] = tr.sphere_at_rest;
      if (tr.sphere_at_rest) summary["distance"] = throw_distance(tr, Axis::Y);
    }
    std::lock_guard lock(job.mutex);
    job.frames = std::move(lines);
    job.summary = std::move(summary);
  }

  static void run_sweep(Job& job, const SweepConfig& cfg, int theta_bins, int l_bins) {
    const double total = double(cfg.theta_steps) * cfg.arm_steps;
    std::atomic<int> done{0};
    const auto rows = sweep(cfg, [&](const CatapultParams& p) {
      const Score s = score(p);
      job.progress = ++done / total;
      return s;
    });
    std::ostringstream heat, bins;
    write_sweep_csv(heat, rows);
    write_bins_csv(bins, bin_rows(rows, cfg.theta, cfg.arm, theta_bins, l_bins));
    write_text_file((job.dir / "heatmap.csv").string(), heat.str());
    write_text_file((job.dir / "bins.csv").string(), bins.str());
    const auto best = std::max_element(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.distance < b.distance; });
    std::lock_guard lock(job.mutex);
    job.summary = {{"rows", rows.size()}, {"best", {{"theta_deg", best->theta_deg}, {"l_m", best->arm_length}, {"distance_m", best->distance}}}};
  }

  static void run_optimize(Job& job, const CmaConfig& cfg) {
    OptimizeOptions opt;
    opt.on_generation = [&](const GenerationRecord& r) { job.progress = double(r.generation) / std::max(1, cfg.max_generations); };
    const OptResult r = optimize_catapult(cfg, {}, {}, catapult_scene({}), opt);
    const json j = opt_result_to_json(r);
    write_text_file((job.dir / "result.json").string(), j.dump(2) + "\n");
    std::lock_guard lock(job.mutex);
    job.summary = {{"best_params", r.best_params}, {"best_fitness", r.best_fitness}, {"evaluations", r.evaluations}};
  }

 private:
  ServiceConfig cfg_;
  DesignStore designs_;
  std::filesystem::path jobs_dir_;
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Job>> jobs_;
  int job_counter_ = 0;
  std::unique_ptr<WorkerPool> pool_;
};

}  // namespace origami
