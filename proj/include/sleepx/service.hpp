/*
 * Copyright 2026 The sleepx Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// HTTP front end over the explanation library. Every numeric result comes
// from the same library call the CLI makes; the service parses requests,
// maps errors to statuses and stamps the model hash on each response.
//
// Endpoints (JSON bodies, field names as in the dataio schema):
//   POST /predict                 body: one sequence document
//   POST /explain/shap            {instance, method?, granularity?, n_samples?,
//                                  seed?, target_class?, background_size?}
//   POST /explain/counterfactual  {instance, target_class?, mutable_features?,
//                                  config?}
//   GET  /model/meta
//   GET  /health

#ifndef SLEEPX_SERVICE_HPP_
#define SLEEPX_SERVICE_HPP_

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sleepx/checkpoint.hpp"
#include "sleepx/dataio.hpp"
#include "sleepx/error.hpp"
#include "sleepx/explain.hpp"
#include "sleepx/json_io.hpp"
#include "sleepx/schema.hpp"

// After Eigen: httplib pulls in <resolv.h>, whose `_res` macro collides with
// Eigen parameter names.
#include <httplib.h>

namespace sleepx {

// A request the service rejects with a specific status.
class ApiError : public Error {
 public:
  ApiError(int status, const std::string& what, std::vector<std::string> details = {})
      : Error(what), status_(status), details_(std::move(details)) {}
  int status() const { return status_; }
  const std::vector<std::string>& details() const { return details_; }

 private:
  int status_;
  std::vector<std::string> details_;
};

// Everything a request reads. Immutable once built; a hot swap replaces the
// whole session and in-flight requests keep the one they started with.
struct ApiSession {
  ModelCheckpoint checkpoint;
  std::string model_hash;
  std::vector<PatientSequence> background;  // raw SHAP background pool
};

// A single all-missing record: preprocessing imputes every feature with the
// training medians and modes.
inline PatientSequence baseline_sequence(const Schema& schema = Schema::sleep_health()) {
  PatientSequence seq;
  seq.subject_id = "baseline";
  seq.timesteps.push_back(empty_feature_vector(schema, 0));
  return seq;
}

// Without a background pool the SHAP reference is the training baseline.
inline std::shared_ptr<const ApiSession> make_session(ModelCheckpoint ckpt,
                                                      std::vector<PatientSequence> background = {}) {
  auto s = std::make_shared<ApiSession>();
  s->model_hash = checkpoint_hash(ckpt);
  s->checkpoint = std::move(ckpt);
  s->background = background.empty() ? std::vector<PatientSequence>{baseline_sequence()}
                                     : std::move(background);
  return s;
}

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::chrono::milliseconds request_timeout{30000};
  std::size_t background_size = 50;
  std::size_t max_body_bytes = 1 << 20;
  std::string static_dir;  // served at / when set
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

namespace api {

using nlohmann::json;

inline void reject_unknown_fields(const json& body, const std::set<std::string>& allowed,
                                  const std::string& where) {
  if (!body.is_object()) throw ApiError(400, where + " must be a JSON object");
  std::vector<std::string> unknown;
  for (const auto& [key, value] : body.items()) {
    if (!allowed.count(key)) unknown.push_back("unknown field '" + key + "'");
  }
  if (!unknown.empty()) throw ApiError(400, "unexpected fields in " + where, unknown);
}

inline std::uint64_t unsigned_field(const json& body, const std::string& key, std::uint64_t fallback) {
  const auto it = body.find(key);
  if (it == body.end() || it->is_null()) return fallback;
  if (!it->is_number_unsigned()) throw ApiError(400, "'" + key + "' must be a non-negative integer");
  return it->get<std::uint64_t>();
}

inline double number_field(const json& body, const std::string& key, double fallback) {
  const auto it = body.find(key);
  if (it == body.end() || it->is_null()) return fallback;
  if (!it->is_number()) throw ApiError(400, "'" + key + "' must be a number");
  return it->get<double>();
}

inline std::string string_field(const json& body, const std::string& key, std::string fallback) {
  const auto it = body.find(key);
  if (it == body.end() || it->is_null()) return fallback;
  if (!it->is_string()) throw ApiError(400, "'" + key + "' must be a string");
  return it->get<std::string>();
}

// Class index or name; "disorder" only where `allow_disorder`.
inline std::size_t target_field(const json& body, std::size_t fallback, bool allow_disorder) {
  const auto it = body.find("target_class");
  if (it == body.end() || it->is_null()) return fallback;
  std::size_t target = 0;
  if (it->is_number_unsigned()) {
    target = it->get<std::size_t>();
  } else if (it->is_string()) {
    target = parse_target(it->get<std::string>());
  } else {
    throw ApiError(400, "'target_class' must be a class index or name");
  }
  const std::size_t limit = allow_disorder ? kAnyDisorder : kNumClasses - 1;
  if (target > limit) throw ApiError(400, "'target_class' " + std::to_string(target) + " is out of range");
  return target;
}

// Schema problems are 400; values outside a feature domain are 422.
inline PatientSequence instance_from_json(const json& j) {
  PatientSequence seq = sequence_from_json(j);
  const auto problems = domain_violations(seq);
  if (!problems.empty()) throw ApiError(422, "values outside their feature domains", problems);
  return seq;
}

inline json instance_field(const json& body) {
  const auto it = body.find("instance");
  if (it == body.end()) throw ApiError(400, "missing field 'instance'");
  return *it;
}

inline json predict(const ApiSession& s, const json& body) {
  return predict_to_json(s.checkpoint, instance_from_json(body));
}

inline json shap(const ApiSession& s, const json& body, const ServiceConfig& cfg) {
  reject_unknown_fields(body,
                        {"instance", "method", "granularity", "n_samples", "seed", "target_class",
                         "background_size"},
                        "shap request");
  const PatientSequence inst = instance_from_json(instance_field(body));
  const std::string method = string_field(body, "method", "kernel");
  const std::string granularity = string_field(body, "granularity", "feature");
  if (method != "exact" && method != "kernel") {
    throw ApiError(400, "invalid method '" + method + "' (exact|kernel)");
  }
  if (granularity != "feature" && granularity != "timestep") {
    throw ApiError(400, "invalid granularity '" + granularity + "' (feature|timestep)");
  }
  ShapOptions opt;
  opt.target_class = target_field(body, kAnyDisorder, true);
  opt.n_samples = unsigned_field(body, "n_samples", opt.n_samples);
  opt.seed = unsigned_field(body, "seed", opt.seed);
  opt.background_size = unsigned_field(body, "background_size", cfg.background_size);
  const std::size_t features = feature_blocks(s.checkpoint.encoder()).size();
  if (granularity == "feature") {
    return shap_to_json(method == "exact" ? shap_exact(s.checkpoint, inst, s.background, opt)
                                          : shap_kernel(s.checkpoint, inst, s.background, opt));
  }
  if (method == "exact") detail::require_exact_budget(inst.length() * features);
  return shap_to_json(shap_timestep_summary(s.checkpoint, inst, s.background, opt));
}

// Counterfactual search settings from a request; unspecified fields keep
// the library defaults.
inline CounterfactualConfig counterfactual_config(const json& body) {
  CounterfactualConfig c;
  if (const auto it = body.find("mutable_features"); it != body.end() && !it->is_null()) {
    if (!it->is_array()) throw ApiError(400, "'mutable_features' must be an array of names");
    std::vector<std::string> names;
    for (const auto& n : *it) {
      if (!n.is_string()) throw ApiError(400, "'mutable_features' must be an array of names");
      names.push_back(n.get<std::string>());
    }
    c.mutable_features = std::move(names);
  }
  const auto it = body.find("config");
  if (it == body.end() || it->is_null()) return c;
  const json& j = *it;
  reject_unknown_fields(j,
                        {"lambda_initial", "lambda_growth", "lambda_interval", "lambda_cap",
                         "max_iters", "step_size", "max_move", "scope", "feature_weights",
                         "grid_fallback_limit", "timeout_ms"},
                        "counterfactual config");
  c.lambda_initial = number_field(j, "lambda_initial", c.lambda_initial);
  c.lambda_growth = number_field(j, "lambda_growth", c.lambda_growth);
  c.lambda_interval = unsigned_field(j, "lambda_interval", c.lambda_interval);
  c.lambda_cap = number_field(j, "lambda_cap", c.lambda_cap);
  c.max_iters = unsigned_field(j, "max_iters", c.max_iters);
  c.step_size = number_field(j, "step_size", c.step_size);
  c.max_move = number_field(j, "max_move", c.max_move);
  c.scope = parse_scope(string_field(j, "scope", scope_name(c.scope)));
  c.grid_fallback_limit = unsigned_field(j, "grid_fallback_limit", c.grid_fallback_limit);
  if (const auto w = j.find("feature_weights"); w != j.end() && !w->is_null()) {
    if (!w->is_object()) throw ApiError(400, "'feature_weights' must map names to numbers");
    for (const auto& [name, value] : w->items()) {
      if (!value.is_number()) throw ApiError(400, "weight for '" + name + "' must be a number");
      c.feature_weights[name] = value.get<double>();
    }
  }
  return c;
}

inline json counterfactual(const ApiSession& s, const json& body, const ServiceConfig& cfg) {
  reject_unknown_fields(body, {"instance", "target_class", "mutable_features", "config"},
                        "counterfactual request");
  const PatientSequence inst = instance_from_json(instance_field(body));
  const std::size_t target = target_field(body, 0, false);
  CounterfactualConfig c = counterfactual_config(body);
  auto timeout = cfg.request_timeout;
  if (const auto j = body.find("config"); j != body.end() && j->is_object()) {
    const auto ms = std::chrono::milliseconds(unsigned_field(*j, "timeout_ms", timeout.count()));
    timeout = std::min(timeout, ms);
  }
  if (c.mutable_features && c.mutable_features->empty()) {
    throw ApiError(400, "'mutable_features' is empty");
  }
  if (predict_sequence(s.checkpoint, inst).predicted == target) {
    throw ApiError(409, "instance is already predicted as " + class_names()[target]);
  }
  c.deadline = std::chrono::steady_clock::now() + timeout;
  return counterfactual_to_json(counterfactual_search(s.checkpoint, inst, target, c));
}

inline json model_meta(const ApiSession& s, const ServiceConfig& cfg) {
  const Schema& schema = Schema::sleep_health();
  const auto& ckpt = s.checkpoint;
  json features = json::array();
  json mutable_features = json::array();
  for (std::size_t f = 0; f < schema.size(); ++f) {
    const FeatureSpec& spec = schema[f];
    json entry = {{"name", spec.name},
                  {"kind", spec.categorical() ? "categorical"
                           : spec.kind == FeatureKind::kOrdinal ? "ordinal"
                                                                 : "continuous"},
                  {"immutable", spec.immutable},
                  {"model_input", spec.model_input},
                  {"subject_level", spec.subject_level},
                  {"unit", spec.unit}};
    if (spec.categorical()) {
      entry["categories"] = ckpt.stats.features[f].vocabulary;
    } else {
      entry["min"] = spec.min;
      entry["max"] = spec.max;
      entry["integer"] = spec.integer;
    }
    features.push_back(std::move(entry));
    if (spec.model_input && !spec.immutable) mutable_features.push_back(spec.name);
  }
  const Hyperparameters& h = ckpt.model.hyper;
  return {{"kind", "model_meta"},
          {"arch", arch_name(ckpt.arch())},
          {"class_names", class_names()},
          {"features", std::move(features)},
          {"immutable_features", schema.immutable_features()},
          {"mutable_features", std::move(mutable_features)},
          {"hyperparameters",
           {{"input_size", h.input_size},
            {"hidden_size", h.hidden_size},
            {"n_classes", h.n_classes},
            {"tcn_channels", h.tcn_channels},
            {"tcn_kernel", h.tcn_kernel},
            {"tcn_levels", h.tcn_levels}}},
          {"seed", ckpt.seed},
          {"exact_player_limit", kMaxExactPlayers},
          {"has_attention", ckpt.arch() != Arch::kTcn},
          {"background_pool_size", s.background.size()},
          {"request_timeout_ms", cfg.request_timeout.count()}};
}

inline json error_body(int status, const std::string& message,
                       const std::vector<std::string>& details = {}) {
  return {{"error", {{"status", status}, {"message", message}, {"details", details}}}};
}

}  // namespace api

class Service {
 public:
  Service(std::shared_ptr<const ApiSession> session, ServiceConfig cfg = {})
      : session_(std::move(session)), cfg_(std::move(cfg)) {
    if (!session_) throw ContractError("service: session must not be null");
    server_.set_payload_max_length(cfg_.max_body_bytes);
    if (!cfg_.static_dir.empty() && !server_.set_mount_point("/", cfg_.static_dir)) {
      throw ContractError("service: static directory '" + cfg_.static_dir + "' does not exist");
    }
    auto route = [this](const httplib::Request& req, httplib::Response& res) {
      const ApiResponse r = handle(req.method, req.path, req.body);
      res.status = r.status;
      res.set_content(r.body.dump(), "application/json");
    };
    server_.Get(".*", route);
    server_.Post(".*", route);
  }

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;
  ~Service() { stop(); }

  std::shared_ptr<const ApiSession> session() const {
    std::lock_guard<std::mutex> lock(mu_);
    return session_;
  }

  void swap_session(std::shared_ptr<const ApiSession> next) {
    if (!next) throw ContractError("service: session must not be null");
    std::lock_guard<std::mutex> lock(mu_);
    session_ = std::move(next);
  }

  std::uint64_t requests_served() const { return requests_.load(); }
  const ServiceConfig& config() const { return cfg_; }

  // Transport-independent dispatch; the HTTP routes call this.
  ApiResponse handle(const std::string& method, const std::string& path, const std::string& body) {
    const std::shared_ptr<const ApiSession> s = session();
    ++requests_;
    ApiResponse r;
    try {
      r.body = route(*s, method, path, body);
    } catch (const ApiError& e) {
      r = {e.status(), api::error_body(e.status(), e.what(), e.details())};
    } catch (const ComplexityError& e) {
      r = {413, api::error_body(413, e.what())};
    } catch (const nlohmann::json::exception& e) {
      r = {400, api::error_body(400, std::string("malformed JSON: ") + e.what())};
    } catch (const SchemaError& e) {
      r = {400, api::error_body(400, e.what())};
    } catch (const IntegrityError& e) {
      r = {400, api::error_body(400, e.what())};
    } catch (const ContractError& e) {
      r = {400, api::error_body(400, e.what())};
    } catch (const IndexError& e) {
      r = {400, api::error_body(400, e.what())};
    } catch (const DegeneracyError& e) {
      r = {422, api::error_body(422, e.what())};
    } catch (const std::exception& e) {
      r = {500, api::error_body(500, e.what())};
    }
    r.body["model_hash"] = s->model_hash;
    return r;
  }

  // Binds the listening socket and returns the bound port.
  int bind() {
    const int port = cfg_.port == 0 ? server_.bind_to_any_port(cfg_.host)
                                    : (server_.bind_to_port(cfg_.host, cfg_.port) ? cfg_.port : -1);
    if (port < 0) throw Error("service: cannot bind " + cfg_.host + ":" + std::to_string(cfg_.port));
    return port;
  }

  // Blocks until stop(). Call bind() first.
  bool listen() { return server_.listen_after_bind(); }
  void wait_until_ready() const { server_.wait_until_ready(); }
  void stop() {
    if (server_.is_running()) server_.stop();
  }

 private:
  nlohmann::json route(const ApiSession& s, const std::string& method, const std::string& path,
                       const std::string& body) {
    auto parse = [&] { return nlohmann::json::parse(body); };
    if (path == "/health") {
      if (method != "GET") throw ApiError(405, "use GET for " + path);
      return {{"status", "ok"}};
    }
    if (path == "/model/meta") {
      if (method != "GET") throw ApiError(405, "use GET for " + path);
      return api::model_meta(s, cfg_);
    }
    if (path == "/predict" || path == "/explain/shap" || path == "/explain/counterfactual") {
      if (method != "POST") throw ApiError(405, "use POST for " + path);
      if (path == "/predict") return api::predict(s, parse());
      if (path == "/explain/shap") return api::shap(s, parse(), cfg_);
      return api::counterfactual(s, parse(), cfg_);
    }
    throw ApiError(404, "no endpoint " + path);
  }

  mutable std::mutex mu_;
  std::shared_ptr<const ApiSession> session_;
  ServiceConfig cfg_;
  std::atomic<std::uint64_t> requests_{0};
  httplib::Server server_;
};

}  // namespace sleepx

#endif  // SLEEPX_SERVICE_HPP_
