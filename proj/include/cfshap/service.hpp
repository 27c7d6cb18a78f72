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

#ifndef CFSHAP_SERVICE_HPP_
#define CFSHAP_SERVICE_HPP_

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "cfshap/dataset.hpp"
#include "cfshap/pipeline.hpp"
#include "cfshap/random.hpp"

namespace httplib {
class Server;
}

namespace cfshap {

struct ServiceConfig {
  std::filesystem::path data_dir = default_data_dir();
  PipelineConfig pipeline;
  std::uint64_t server_seed = kDefaultSeed;
  std::chrono::seconds session_ttl{30 * 60};
  // How long POST /sessions waits for a model that is still training before
  // answering 503 with Retry-After.
  std::chrono::milliseconds training_wait{30'000};
  std::optional<std::filesystem::path> static_dir;
};

// JSON-over-HTTP facade over Pipeline. The handlers are transport-agnostic
// so they can be driven directly in tests; mount() wires them to a server.
class ExplanationService {
 public:
  struct Response {
    int status = 200;
    std::string body;
    std::optional<int> retry_after;
  };

  explicit ExplanationService(ServiceConfig config);

  // Adds (or replaces) an in-memory dataset next to the vendored ones.
  void register_dataset(Dataset raw);

  Response list_datasets() const;
  Response create_session(const std::string& body);
  Response explain(const std::string& session_id, const std::string& body);
  Response resample(const std::string& session_id);

  void mount(httplib::Server& server);

  std::size_t session_count() const;
  // Drops sessions idle for longer than the TTL; returns how many.
  std::size_t evict_expired();

 private:
  using Clock = std::chrono::steady_clock;
  using PipelineFuture = std::shared_future<std::shared_ptr<const Pipeline>>;

  struct Session {
    std::string id;
    std::string dataset;
    std::shared_ptr<const Pipeline> pipeline;
    Rng rng;
    std::size_t point_index = 0;
    ClassId predicted = 0;
    std::string created_at;
    Clock::time_point last_access;
  };

  // Cache key and (possibly still running) build of the pipeline.
  std::pair<std::string, PipelineFuture> pipeline_for(const std::string& dataset, ModelFamily family, std::uint64_t seed);
  void draw_point(Session& session);
  std::string session_json(const Session& session) const;
  std::string new_session_id();

  ServiceConfig config_;
  mutable std::mutex mutex_;
  std::map<std::string, Dataset> datasets_;
  std::map<std::string, PipelineFuture> pipelines_;
  std::map<std::string, Session> sessions_;
  std::uint64_t session_counter_ = 0;
  std::uint64_t id_salt_ = 0;
};

}  // namespace cfshap

#endif  // CFSHAP_SERVICE_HPP_
