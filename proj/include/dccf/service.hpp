//  Copyright 2026 The dccf Authors
//
//  Licensed under the Apache License, Version 2.0 (the "License");
//  you may not use this file except in compliance with the License.
//  You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
//  Unless required by applicable law or agreed to in writing, software
//  distributed under the License is distributed on an "AS IS" BASIS,
//  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//  See the License for the specific language governing permissions and
//  limitations under the License.

#pragma once

#include <httplib.h>

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>

#include <json.hpp>

#include "dccf/assembly.hpp"
#include "dccf/interact.hpp"
#include "dccf/io.hpp"
#include "dccf/optimizer.hpp"

namespace dccf {

/// Longest side of the working preview image; fits also run at this size.
inline constexpr int kPreviewMaxSide = 512;

/// Error surfaced to HTTP clients as {code, message}.
struct HttpError : std::runtime_error {
  int status;
  std::string code;
  HttpError(int s, std::string c, const std::string& message)
      : std::runtime_error(message), status(s), code(std::move(c)) {}
};

struct Session {
  std::string id;
  RgbImage composite;
  std::optional<RgbImage> gt;
  Mask mask;
  // Working preview resolution copies.
  RgbImage preview_composite;
  std::optional<RgbImage> preview_gt;
  Mask preview_mask;

  std::optional<FilterStack> stack;
  std::optional<FitReport> report;
  nlohmann::json fit_params;
  nlohmann::json adjustment;  // last accepted /adjust body, or null
  std::atomic<bool> fitting{false};
  mutable std::shared_mutex mutex;
};

namespace detail {

inline RgbImage to_preview(const RgbImage& img) {
  return downsample_area(img, downsample_factor(img.width, img.height, kPreviewMaxSide));
}

inline Mask to_preview(const Mask& m) {
  return downsample_area(m, downsample_factor(m.width, m.height, kPreviewMaxSide));
}

inline std::string new_session_id() {
  static std::mutex mu;
  static std::mt19937_64 rng(std::random_device{}());
  std::lock_guard lock(mu);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string id(16, '0');
  std::uint64_t v = rng();
  for (char& c : id) {
    c = kHex[v & 0xF];
    v >>= 4;
  }
  return id;
}

inline double number_in(const nlohmann::json& obj, const char* key, double lo, double hi, const char* what) {
  if (!obj.contains(key)) throw HttpError(400, "bad_request", std::string(what) + "." + key + " is required");
  const auto& v = obj.at(key);
  if (!v.is_number()) throw HttpError(400, "bad_request", std::string(what) + "." + key + " must be a number");
  const double x = v.get<double>();
  if (!(x >= lo && x <= hi)) {
    throw HttpError(400, "out_of_range", std::string(what) + "." + key + " must be in [" + std::to_string(lo) + ", " +
                                             std::to_string(hi) + "]");
  }
  return x;
}

}  // namespace detail

/// Parses and range-checks an /adjust body against a stack with `knots` knots.
inline Adjustment parse_adjustment(const nlohmann::json& body, int knots) {
  if (!body.is_object()) throw HttpError(400, "bad_request", "adjustment body must be a JSON object");
  Adjustment adj;
  if (body.contains("hue") && !body.at("hue").is_null()) {
    const auto& h = body.at("hue");
    adj.hue = Adjustment::Hue{detail::number_in(h, "theta", 0.0, 360.0, "hue"),
                              detail::number_in(h, "alpha", 0.0, 1.0, "hue")};
  }
  if (body.contains("sat") && !body.at("sat").is_null()) {
    const auto& s = body.at("sat");
    adj.sat = Adjustment::Sat{detail::number_in(s, "sigma", -1.0, 1.0, "sat"),
                              detail::number_in(s, "alpha", 0.0, 1.0, "sat")};
  }
  if (body.contains("val") && !body.at("val").is_null()) {
    const auto& v = body.at("val");
    Adjustment::Val val;
    val.alpha = detail::number_in(v, "alpha", 0.0, 1.0, "val");
    try {
      val.curve = curve_from_json(v);
    } catch (const std::exception& e) {
      throw HttpError(400, "bad_request", std::string("val: ") + e.what());
    }
    if (static_cast<int>(val.curve.phis.size()) != knots) {
      throw HttpError(400, "bad_request", "val.phis must have " + std::to_string(knots) + " entries");
    }
    adj.val = std::move(val);
  }
  return adj;
}

/// Parses a /fit body into a FitConfig; absent fields keep their defaults.
inline FitConfig parse_fit_config(const nlohmann::json& body) {
  FitConfig cfg;
  if (body.is_null()) return cfg;
  if (!body.is_object()) throw HttpError(400, "bad_request", "fit body must be a JSON object");
  try {
    if (body.contains("grid")) {
      const auto& g = body.at("grid");
      if (g.is_array() && g.size() == 2) {
        cfg.grid_w = g[0].get<int>();
        cfg.grid_h = g[1].get<int>();
      } else {
        cfg.grid_w = cfg.grid_h = g.get<int>();
      }
    }
    if (body.contains("mode")) cfg.mode = parse_loss_mode(body.at("mode").get<std::string>());
    if (body.contains("iters")) cfg.max_iters = body.at("iters").get<int>();
    if (body.contains("seed")) cfg.seed = body.at("seed").get<std::uint64_t>();
    if (body.contains("step")) cfg.step = body.at("step").get<double>();
    if (body.contains("order")) cfg.order = parse_order(body.at("order").get<std::string>());
    cfg.validate();
  } catch (const nlohmann::json::exception& e) {
    throw HttpError(400, "bad_request", std::string("invalid fit parameters: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw HttpError(400, "bad_request", e.what());
  }
  return cfg;
}

/// Session store backed by a directory: one subdirectory per session holding
/// the uploaded images, stack.dccf once fitted, and params.json.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
    for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
      if (!entry.is_directory()) continue;
      try {
        auto s = restore(entry.path());
        sessions_.emplace(s->id, std::move(s));
      } catch (const std::exception&) {
        // Unreadable session directories are skipped.
      }
    }
  }

  std::shared_ptr<Session> create(const Bytes& composite, const Bytes& mask, const std::optional<Bytes>& gt) {
    auto s = std::make_shared<Session>();
    try {
      s->composite = decode_image(composite);
      s->mask = decode_mask(mask);
      if (gt) s->gt = decode_image(*gt);
    } catch (const FormatError& e) {
      throw HttpError(400, "bad_image", e.what());
    }
    if (!same_size(s->composite, s->mask)) throw HttpError(400, "dimension_mismatch", "mask size differs from composite");
    if (s->gt && !same_size(s->composite, *s->gt)) {
      throw HttpError(400, "dimension_mismatch", "ground truth size differs from composite");
    }
    init_previews(*s);

    std::lock_guard lock(mu_);
    do {
      s->id = detail::new_session_id();
    } while (sessions_.contains(s->id));
    const auto path = dir_ / s->id;
    std::filesystem::create_directories(path);
    write_file_atomic(path / "composite.img", composite);
    write_file_atomic(path / "mask.img", mask);
    if (gt) write_file_atomic(path / "gt.img", *gt);
    persist_params(*s);
    sessions_.emplace(s->id, s);
    return s;
  }

  std::shared_ptr<Session> get(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw HttpError(404, "not_found", "unknown session " + id);
    return it->second;
  }

  void persist_stack(const Session& s) const { save_stack(*s.stack, dir_ / s.id / "stack.dccf"); }

  void persist_params(const Session& s) const {
    nlohmann::json j = {{"id", s.id}, {"fit", s.fit_params}, {"adjustment", s.adjustment}};
    j["report"] = s.report ? report_to_json(*s.report) : nlohmann::json(nullptr);
    write_file_atomic(dir_ / s.id / "params.json", j.dump(2));
  }

  const std::filesystem::path& dir() const { return dir_; }

 private:
  static void init_previews(Session& s) {
    s.preview_composite = detail::to_preview(s.composite);
    s.preview_mask = detail::to_preview(s.mask);
    // Area averaging softens the mask edge; the preview fit uses a hard mask.
    for (double& v : s.preview_mask.data) v = v >= 0.5 ? 1.0 : 0.0;
    if (s.gt) s.preview_gt = detail::to_preview(*s.gt);
  }

  static std::shared_ptr<Session> restore(const std::filesystem::path& path) {
    auto s = std::make_shared<Session>();
    s->id = path.filename().string();
    s->composite = decode_image(read_file(path / "composite.img"));
    s->mask = decode_mask(read_file(path / "mask.img"));
    if (std::filesystem::exists(path / "gt.img")) s->gt = decode_image(read_file(path / "gt.img"));
    if (std::filesystem::exists(path / "stack.dccf")) s->stack = load_stack(path / "stack.dccf");
    if (std::filesystem::exists(path / "params.json")) {
      const auto j = nlohmann::json::parse(read_file(path / "params.json"));
      s->fit_params = j.value("fit", nlohmann::json(nullptr));
      s->adjustment = j.value("adjustment", nlohmann::json(nullptr));
      if (j.contains("report") && !j.at("report").is_null()) s->report = report_from_json(j.at("report"));
    }
    init_previews(*s);
    return s;
  }

  std::filesystem::path dir_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

/// HTTP front end over a SessionStore.
///
///   POST /sessions                 multipart composite, mask, [gt]  → 201 {id}
///   GET  /sessions/{id}            session status
///   POST /sessions/{id}/fit        {grid, mode, iters, seed}        → FitReport
///   GET  /sessions/{id}/preview    ?stage=1..4                      → PNG
///   POST /sessions/{id}/adjust     {hue, sat, val}                  → PNG
///   GET  /sessions/{id}/export                                      → PNG
class Service {
 public:
  explicit Service(std::filesystem::path session_dir) : store_(std::move(session_dir)) { routes(); }

  httplib::Server& server() { return server_; }
  SessionStore& store() { return store_; }

  bool listen(const std::string& host, int port) { return server_.listen(host, port); }
  int bind_to_any_port(const std::string& host) { return server_.bind_to_any_port(host); }
  bool listen_after_bind() { return server_.listen_after_bind(); }
  void stop() { server_.stop(); }

  /// Stage `stage` of the pipeline at preview resolution, optionally with a user
  /// adjustment. Sessions without a fitted stack render through the identity.
  static RgbImage render_preview(const Session& s, int stage, const Adjustment* adj = nullptr) {
    const FilterStack base = s.stack ? *s.stack : identity_stack(1, 1);
    const FilterStack stack = adj ? apply_adjustment(base, *adj) : base;
    return trace_stage(run_pipeline(s.preview_composite, stack), stage);
  }

  /// Full-resolution stage-4 output with the last accepted adjustment.
  static RgbImage render_export(const Session& s) {
    FilterStack stack = *s.stack;
    if (!s.adjustment.is_null()) stack = apply_adjustment(stack, parse_adjustment(s.adjustment, stack.val.knots()));
    return run_pipeline(s.composite, stack).i4;
  }

 private:
  static void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
    res.status = status;
    res.set_content(nlohmann::json{{"code", code}, {"message", message}}.dump(), "application/json");
  }

  template <class F>
  static httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const HttpError& e) {
        send_error(res, e.status, e.code, e.what());
      } catch (const NumericalError& e) {
        send_error(res, 500, "numerical_failure", e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, "internal", e.what());
      }
    };
  }

  static nlohmann::json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return nullptr;
    try {
      return nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::parse_error& e) {
      throw HttpError(400, "bad_json", e.what());
    }
  }

  static void require_fitted(const Session& s) {
    if (!s.stack) throw HttpError(409, "not_fitted", "session " + s.id + " has no fitted stack");
  }

  nlohmann::json status_json(const Session& s) const {
    nlohmann::json j = {{"id", s.id},
                        {"width", s.composite.width},
                        {"height", s.composite.height},
                        {"preview_width", s.preview_composite.width},
                        {"preview_height", s.preview_composite.height},
                        {"has_gt", s.gt.has_value()},
                        {"fitted", s.stack.has_value()},
                        {"fitting", s.fitting.load()},
                        {"fit", s.fit_params},
                        {"adjustment", s.adjustment}};
    j["report"] = s.report ? report_to_json(*s.report) : nlohmann::json(nullptr);
    return j;
  }

  void routes() {
    server_.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                 {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                 {"Access-Control-Allow-Headers", "Content-Type"}});
    server_.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server_.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
      if (!req.is_multipart_form_data()) throw HttpError(400, "bad_request", "expected multipart/form-data");
      if (!req.has_file("composite")) throw HttpError(400, "missing_field", "composite is required");
      if (!req.has_file("mask")) throw HttpError(400, "missing_field", "mask is required");
      std::optional<Bytes> gt;
      if (req.has_file("gt")) gt = req.get_file_value("gt").content;
      auto s = store_.create(req.get_file_value("composite").content, req.get_file_value("mask").content, gt);
      res.status = 201;
      res.set_content(nlohmann::json{{"id", s->id}}.dump(), "application/json");
    }));

    server_.Get(R"(/sessions/([0-9a-z]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto s = store_.get(req.matches[1]);
      std::shared_lock lock(s->mutex, std::try_to_lock);
      // A running fit holds the session; report it without waiting.
      if (!lock.owns_lock()) {
        res.set_content(nlohmann::json{{"id", s->id}, {"fitting", true}}.dump(), "application/json");
        return;
      }
      res.set_content(status_json(*s).dump(), "application/json");
    }));

    server_.Post(R"(/sessions/([0-9a-z]+)/fit)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto s = store_.get(req.matches[1]);
      const nlohmann::json body = parse_body(req);
      const FitConfig cfg = parse_fit_config(body);
      bool expected = false;
      if (!s->fitting.compare_exchange_strong(expected, true)) {
        throw HttpError(409, "fit_running", "a fit is already running for session " + s->id);
      }
      struct Reset {
        std::atomic<bool>& flag;
        ~Reset() { flag = false; }
      } reset{s->fitting};
      std::unique_lock lock(s->mutex);
      if (!s->gt) throw HttpError(422, "no_ground_truth", "session " + s->id + " has no ground truth image");
      FitResult r = fit(s->preview_composite, *s->preview_gt, s->preview_mask, cfg);
      s->stack = std::move(r.stack);
      s->report = r.report;
      s->fit_params = body.is_null() ? nlohmann::json::object() : body;
      s->adjustment = nullptr;
      store_.persist_stack(*s);
      store_.persist_params(*s);
      res.set_content(report_to_json(*s->report).dump(), "application/json");
    }));

    server_.Get(R"(/sessions/([0-9a-z]+)/preview)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto s = store_.get(req.matches[1]);
      int stage = 4;
      if (req.has_param("stage")) {
        const std::string v = req.get_param_value("stage");
        if (v.size() != 1 || v[0] < '1' || v[0] > '4') throw HttpError(400, "out_of_range", "stage must be 1, 2, 3 or 4");
        stage = v[0] - '0';
      }
      std::shared_lock lock(s->mutex);
      res.set_content(encode_png(render_preview(*s, stage)), "image/png");
    }));

    server_.Post(R"(/sessions/([0-9a-z]+)/adjust)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto s = store_.get(req.matches[1]);
      const nlohmann::json body = parse_body(req);
      std::unique_lock lock(s->mutex);
      require_fitted(*s);
      const Adjustment adj = parse_adjustment(body.is_null() ? nlohmann::json::object() : body, s->stack->val.knots());
      const Bytes png = encode_png(render_preview(*s, 4, &adj));
      s->adjustment = body.is_null() ? nlohmann::json::object() : body;
      store_.persist_params(*s);
      res.set_content(png, "image/png");
    }));

    server_.Get(R"(/sessions/([0-9a-z]+)/export)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto s = store_.get(req.matches[1]);
      std::shared_lock lock(s->mutex);
      require_fitted(*s);
      res.set_content(encode_png(render_export(*s)), "image/png");
    }));
  }

  SessionStore store_;
  httplib::Server server_;
};

}  // namespace dccf
