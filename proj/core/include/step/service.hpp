#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "step/alpha.hpp"
#include "step/clustering.hpp"
#include "step/dataset.hpp"
#include "step/experiment.hpp"
#include "step/model.hpp"
#include "step/path.hpp"

namespace step {

// Read-only state shared by every session.
struct Engine {
  FeatureSchema schema;
  RecourseDataset dataset;
  ModelHandle model;
  Clustering clustering;
  AlphaFunction alpha;
  PathConfig path_config;
};

// Trains (or loads) the model and clusters the training split of trial 0.
std::shared_ptr<const Engine> make_engine(const ExperimentConfig& config);

struct ServiceResponse {
  int status = 200;
  nlohmann::json body;
};

enum class SessionStatus { kSeeking, kSucceeded };

struct HistoryEntry {
  Vector point;
  // -1 for the initial point, -2 for a manual step, else the cluster id.
  int choice = -1;
  std::int64_t timestamp_ms = 0;
  double confidence = 0.0;
};

struct Session {
  std::string id;
  Vector current;
  std::vector<HistoryEntry> history;
  SessionStatus status = SessionStatus::kSeeking;
};

inline constexpr int kInitialChoice = -1;
inline constexpr int kManualChoice = -2;

// The interactive loop as JSON request handlers. Sessions live in memory;
// requests on one session are serialized, different sessions proceed
// concurrently.
class RecourseService {
 public:
  explicit RecourseService(std::shared_ptr<const Engine> engine);

  ServiceResponse meta() const;
  ServiceResponse create_session(const nlohmann::json& body);
  ServiceResponse get_directions(const std::string& id);
  ServiceResponse apply_user_step(const std::string& id, const nlohmann::json& body);
  ServiceResponse get_session(const std::string& id) const;

  // Routes a raw request; unknown routes give 404, bad JSON 400.
  ServiceResponse handle(std::string_view method, std::string_view path, std::string_view body);

  // Copy of a session's state, for replay checks.
  std::optional<Session> session(const std::string& id) const;
  std::size_t session_count() const;

  nlohmann::json snapshot() const;
  void restore(const nlohmann::json& doc);
  void save_snapshot(const std::filesystem::path& path) const;
  void load_snapshot(const std::filesystem::path& path);

  const Engine& engine() const { return *engine_; }

 private:
  struct Slot {
    std::mutex mutex;
    Session session;
  };

  std::shared_ptr<Slot> find(const std::string& id) const;
  nlohmann::json describe_point(const Vector& point) const;
  nlohmann::json decode_deltas(const Vector& from, const Vector& to) const;
  PathConfig session_path_config(const std::string& id) const;

  std::shared_ptr<const Engine> engine_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Slot>> sessions_;
  std::uint64_t next_id_ = 0;
  std::uint64_t id_salt_ = 0;
};

// Thin cpp-httplib wrapper exposing RecourseService over HTTP.
class HttpServer {
 public:
  explicit HttpServer(RecourseService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds to `port` (0 picks a free one) and returns the bound port, or -1.
  int bind(const std::string& host, int port);
  // Blocks until stop() is called.
  bool listen_after_bind();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace step
