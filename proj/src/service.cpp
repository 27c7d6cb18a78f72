// Copyright 2026 The cfshap Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cfshap/service.hpp"

#include <ctime>
#include <random>

#include "cfshap/error.hpp"
#include "cfshap/fingerprint.hpp"
#include "httplib.h"
#include "json.hpp"

namespace cfshap {

using nlohmann::json;

namespace {

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kVersionMismatch:
      return 400;
    case ErrorCode::kNotFound:
      return 404;
    case ErrorCode::kNotContrastive:
      return 409;
    case ErrorCode::kUnavailable:
      return 503;
    case ErrorCode::kNoCounterfactual:
    case ErrorCode::kDataError:
      return 500;
  }
  return 500;
}

ExplanationService::Response error_response(int status, std::string_view code, const std::string& message,
                                            const std::string& detail = {}) {
  json body{{"code", code}, {"message", message}};
  if (!detail.empty()) body["detail"] = detail;
  return {status, body.dump(), std::nullopt};
}

ExplanationService::Response error_response(const Error& e) {
  return error_response(http_status(e.code()), error_code_name(e.code()), e.what(), e.detail());
}

json parse_body(const std::string& body) {
  if (body.empty()) return json::object();
  try {
    json j = json::parse(body);
    if (!j.is_object()) throw Error(ErrorCode::kInvalidArgument, "request body must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kInvalidArgument, "malformed JSON body", e.what());
  }
}

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json vector_json(std::span<const double> v) { return json(std::vector<double>(v.begin(), v.end())); }

json attributions_json(const std::vector<Attribution>& items) {
  json out = json::array();
  for (const auto& a : items) out.push_back({{"feature", a.feature}, {"index", a.index}, {"phi", a.phi}});
  return out;
}

}  // namespace

ExplanationService::ExplanationService(ServiceConfig config) : config_(std::move(config)) {
  for (const auto& m : list_manifests(config_.data_dir)) {
    datasets_.emplace(m.name, load_registered(config_.data_dir, m.name));
  }
  std::random_device rd;
  id_salt_ = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

void ExplanationService::register_dataset(Dataset raw) {
  raw.validate();
  std::lock_guard lock(mutex_);
  const std::string name = raw.name;
  datasets_.insert_or_assign(name, std::move(raw));
  // Cache keys carry the dataset name, not its contents.
  pipelines_.clear();
}

ExplanationService::Response ExplanationService::list_datasets() const {
  std::lock_guard lock(mutex_);
  json out = json::array();
  for (const auto& [name, ds] : datasets_) {
    std::size_t train = 0;
    std::size_t test = 0;
    try {
      const auto sp = split(ds, config_.pipeline.split_ratio, config_.pipeline.seed, config_.pipeline.stratified);
      train = sp.train_indices.size();
      test = sp.test_indices.size();
    } catch (const Error&) {
      // Datasets that cannot be split still get listed.
    }
    out.push_back({{"name", name},
                   {"d", ds.num_features()},
                   {"C", ds.num_classes()},
                   {"class_names", ds.class_names},
                   {"feature_names", ds.feature_names()},
                   {"sizes", {{"rows", ds.num_rows()}, {"train", train}, {"test", test}}}});
  }
  return {200, out.dump(), std::nullopt};
}

std::pair<std::string, ExplanationService::PipelineFuture> ExplanationService::pipeline_for(const std::string& dataset, ModelFamily family,
                                                                    std::uint64_t seed) {
  std::lock_guard lock(mutex_);
  auto ds = datasets_.find(dataset);
  if (ds == datasets_.end()) throw Error(ErrorCode::kNotFound, "unknown dataset", dataset);
  PipelineConfig cfg = config_.pipeline;
  cfg.seed = seed;
  const std::string key = cfg.fingerprint(dataset, family);
  if (auto it = pipelines_.find(key); it != pipelines_.end()) return {key, it->second};
  Dataset raw = ds->second;
  PipelineFuture fut = std::async(std::launch::async, [raw = std::move(raw), family, cfg] {
                         return Pipeline::build(raw, family, cfg);
                       }).share();
  pipelines_.emplace(key, fut);
  return {key, fut};
}

void ExplanationService::draw_point(Session& session) {
  const auto& test = session.pipeline->split().test_indices;
  session.point_index = test[uniform_index(session.rng, test.size())];
  session.predicted = session.pipeline->model().predict(session.pipeline->standardized().points.row(session.point_index));
}

std::string ExplanationService::new_session_id() {
  Fingerprint fp;
  fp.add(id_salt_).add(++session_counter_);
  return fp.hex().substr(0, 32);
}

std::string ExplanationService::session_json(const Session& s) const {
  const Pipeline& p = *s.pipeline;
  const auto std_point = p.standardized().points.row(s.point_index);
  json out{{"id", s.id},
           {"dataset", s.dataset},
           {"model", family_name(p.family())},
           {"model_fingerprint", p.model().fingerprint()},
           {"point_index", s.point_index},
           {"point", vector_json(p.raw().points.row(s.point_index))},
           {"feature_names", p.raw().feature_names()},
           {"class_names", p.raw().class_names},
           {"predicted", s.predicted},
           {"predicted_name", p.raw().class_names[static_cast<std::size_t>(s.predicted)]},
           {"probabilities", p.model().predict_proba(std_point)},
           {"created_at", s.created_at}};
  return out.dump();
}

ExplanationService::Response ExplanationService::create_session(const std::string& body) {
  try {
    evict_expired();
    const json req = parse_body(body);
    if (!req.contains("dataset") || !req["dataset"].is_string()) {
      throw Error(ErrorCode::kInvalidArgument, "missing field", "dataset");
    }
    if (!req.contains("model") || !req["model"].is_string()) {
      throw Error(ErrorCode::kInvalidArgument, "missing field", "model");
    }
    const std::string dataset = req["dataset"];
    const ModelFamily family = parse_family(req["model"].get<std::string>());
    std::optional<std::uint64_t> seed;
    if (req.contains("seed") && !req["seed"].is_null()) {
      if (!req["seed"].is_number_unsigned()) throw Error(ErrorCode::kInvalidArgument, "seed must be a non-negative integer");
      seed = req["seed"].get<std::uint64_t>();
    }

    auto [key, fut] = pipeline_for(dataset, family, seed.value_or(config_.pipeline.seed));
    if (fut.wait_for(config_.training_wait) != std::future_status::ready) {
      auto r = error_response(503, "training", "model is still training; retry shortly");
      r.retry_after = 1;
      return r;
    }
    std::shared_ptr<const Pipeline> pipeline;
    try {
      pipeline = fut.get();
    } catch (...) {
      // A failed build is not cached, so a later request retries it.
      std::lock_guard lock(mutex_);
      pipelines_.erase(key);
      throw;
    }

    Session s;
    s.dataset = dataset;
    s.pipeline = std::move(pipeline);
    s.created_at = utc_now();
    s.last_access = Clock::now();
    std::lock_guard lock(mutex_);
    s.id = new_session_id();
    s.rng.seed(seed ? mix_seed(*seed, 0x5e55) : mix_seed(config_.server_seed, session_counter_));
    draw_point(s);
    const std::string out = session_json(s);
    sessions_.emplace(s.id, std::move(s));
    return {200, out, std::nullopt};
  } catch (const Error& e) {
    return error_response(e);
  }
}

ExplanationService::Response ExplanationService::explain(const std::string& session_id, const std::string& body) {
  try {
    evict_expired();
    const json req = parse_body(body);
    if (!req.contains("desired") || !req["desired"].is_number_integer()) {
      throw Error(ErrorCode::kInvalidArgument, "missing or non-integer field", "desired");
    }
    const auto desired = req["desired"].get<long long>();

    std::shared_ptr<const Pipeline> pipeline;
    std::size_t point_index = 0;
    ClassId predicted = 0;
    {
      std::lock_guard lock(mutex_);
      auto it = sessions_.find(session_id);
      if (it == sessions_.end()) throw Error(ErrorCode::kNotFound, "unknown or expired session", session_id);
      it->second.last_access = Clock::now();
      pipeline = it->second.pipeline;
      point_index = it->second.point_index;
      predicted = it->second.predicted;
    }
    const Pipeline& p = *pipeline;
    if (desired < 0 || static_cast<std::size_t>(desired) >= p.model().class_count()) {
      throw Error(ErrorCode::kInvalidArgument, "desired class out of range", std::to_string(desired));
    }
    if (desired == predicted) {
      throw Error(ErrorCode::kNotContrastive, "not contrastive: desired class equals the prediction",
                  std::to_string(desired));
    }

    const FeatureVector point = p.standardized().points.row_vector(point_index);
    const auto answer = p.explain(point, static_cast<ClassId>(desired));
    const auto& ex = answer.explanation;
    const auto& scaler = p.scaler();

    json phi = json::array();
    for (std::size_t c = 0; c < ex.shapley.class_count(); ++c) phi.push_back(vector_json(ex.shapley.phi.row(c)));
    const bool sampled = ex.shapley.method.kind == ShapleyMethod::Kind::kSampled;
    json out{{"dataset", p.raw().name},
             {"model", family_name(p.family())},
             {"model_fingerprint", p.model().fingerprint()},
             {"point", vector_json(scaler.invert(point))},
             {"predicted", predicted},
             {"desired", desired},
             {"why_p", attributions_json(ex.why_p)},
             {"not_q", attributions_json(ex.not_q)},
             {"nl_why_p", ex.nl_why_p},
             {"nl_not_q", ex.nl_not_q},
             {"shapley",
              {{"feature_names", p.raw().feature_names()},
               {"phi", phi},
               {"base_values", ex.shapley.base_values},
               {"output", ex.shapley.output},
               {"method",
                {{"kind", sampled ? "sampled" : "exact"},
                 {"n_permutations", ex.shapley.method.n_permutations},
                 {"seed", ex.shapley.method.seed},
                 {"max_residual", ex.shapley.method.max_residual}}}}}};

    json cfs = json::array();
    json mask = json::array();
    for (bool b : adverse_features(ex.shapley, static_cast<ClassId>(desired))) mask.push_back(b);
    out["mutate_mask"] = mask;
    if (answer.counterfactuals) {
      const auto& cf = *answer.counterfactuals;
      for (const auto& pt : cf.points) cfs.push_back(vector_json(scaler.invert(pt)));
      out["counterfactuals"] = cfs;
      out["neighbor_budget_used"] = cf.neighbor_budget_used;
      out["is_fallback"] = cf.is_fallback;
      out["fallback_point"] = cf.fallback_point ? vector_json(scaler.invert(*cf.fallback_point)) : json(nullptr);
      out["status"] = cf.is_fallback ? "fallback" : "counterfactuals";
    } else {
      out["counterfactuals"] = cfs;
      out["neighbor_budget_used"] = 0;
      out["is_fallback"] = true;
      out["fallback_point"] = nullptr;
      out["status"] = "empty";
    }
    return {200, out.dump(), std::nullopt};
  } catch (const Error& e) {
    return error_response(e);
  }
}

ExplanationService::Response ExplanationService::resample(const std::string& session_id) {
  try {
    evict_expired();
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) throw Error(ErrorCode::kNotFound, "unknown or expired session", session_id);
    it->second.last_access = Clock::now();
    draw_point(it->second);
    return {200, session_json(it->second), std::nullopt};
  } catch (const Error& e) {
    return error_response(e);
  }
}

std::size_t ExplanationService::session_count() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

std::size_t ExplanationService::evict_expired() {
  std::lock_guard lock(mutex_);
  const auto now = Clock::now();
  return std::erase_if(sessions_, [&](const auto& kv) { return now - kv.second.last_access > config_.session_ttl; });
}

void ExplanationService::mount(httplib::Server& server) {
  auto reply = [](httplib::Response& res, const Response& r) {
    res.status = r.status;
    if (r.retry_after) res.set_header("Retry-After", std::to_string(*r.retry_after));
    res.set_content(r.body, "application/json");
  };
  server.Get("/datasets", [this, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, list_datasets());
  });
  server.Post("/sessions", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, create_session(req.body));
  });
  server.Post(R"(/sessions/([^/]+)/explain)", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, explain(req.matches[1], req.body));
  });
  server.Get(R"(/sessions/([^/]+)/resample)", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, resample(req.matches[1]));
  });
  if (config_.static_dir && std::filesystem::is_directory(*config_.static_dir)) {
    server.set_mount_point("/", config_.static_dir->string());
  }
}

}  // namespace cfshap
