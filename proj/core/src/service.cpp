#include "step/service.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <httplib.h>

#include "step/direction.hpp"
#include "step/random.hpp"

namespace step {

namespace {

using nlohmann::json;

ServiceResponse error(int status, const std::string& message) {
  return {status, json{{"error", message}}};
}

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::string status_name(SessionStatus s) {
  return s == SessionStatus::kSeeking ? "seeking" : "succeeded";
}

json raw_to_json(const RawValue& v) {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  return std::get<std::string>(v);
}

json vector_to_json(const Vector& v) { return std::vector<double>(v.begin(), v.end()); }

Vector vector_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json choice_to_json(int choice) {
  if (choice == kInitialChoice) return nullptr;
  if (choice == kManualChoice) return "manual";
  return choice;
}

int choice_from_json(const json& j) {
  if (j.is_null()) return kInitialChoice;
  if (j.is_string()) return kManualChoice;
  return j.get<int>();
}

// Parses a raw feature map into a schema-ordered row. Schema violations map
// to 400, undeclared categories to 422.
RawRow parse_raw_record(const FeatureSchema& schema, const json& record) {
  if (!record.is_object()) throw SchemaError("record must be a JSON object");
  for (const auto& [key, value] : record.items()) {
    if (!schema.index_of(key)) throw SchemaError("unknown feature '" + key + "'");
  }
  RawRow row;
  for (const auto& f : schema.features()) {
    if (!record.contains(f.name)) throw SchemaError("missing feature '" + f.name + "'");
    const auto& v = record.at(f.name);
    if (f.kind == FeatureKind::kContinuous) {
      if (!v.is_number()) throw SchemaError("feature '" + f.name + "' must be a number");
      row.emplace_back(v.get<double>());
    } else {
      if (!v.is_string()) throw SchemaError("feature '" + f.name + "' must be a string");
      const auto s = v.get<std::string>();
      if (std::find(f.levels.begin(), f.levels.end(), s) == f.levels.end()) {
        throw UnknownCategoryError("feature '" + f.name + "': unknown value '" + s + "'");
      }
      row.emplace_back(s);
    }
  }
  return row;
}

std::size_t level_of(const FeatureSpec& f, const std::string& s) {
  return static_cast<std::size_t>(std::find(f.levels.begin(), f.levels.end(), s) -
                                  f.levels.begin());
}

}  // namespace

std::shared_ptr<const Engine> make_engine(const ExperimentConfig& config) {
  config.validate();
  if (config.method != Method::kStep) {
    throw ConfigError("the interactive service runs the step method only");
  }
  const RawTable table = read_table(config.csv, load_schema(config.schema));
  TrialSetup setup = prepare_trial(config, table, 0);
  auto engine = std::make_shared<Engine>();
  engine->schema = setup.schema;
  engine->dataset = std::move(setup.dataset);
  engine->model = setup.model;
  engine->clustering = std::move(setup.clustering);
  engine->alpha = config.alpha;
  engine->path_config = path_config(config, setup.seed);
  return engine;
}

RecourseService::RecourseService(std::shared_ptr<const Engine> engine)
    : engine_(std::move(engine)) {
  if (!engine_ || !engine_->model) throw std::invalid_argument("RecourseService: null engine");
  id_salt_ = mix_seed(std::random_device{}());
}

std::shared_ptr<RecourseService::Slot> RecourseService::find(const std::string& id) const {
  std::shared_lock lock(sessions_mutex_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

PathConfig RecourseService::session_path_config(const std::string& id) const {
  PathConfig pc = engine_->path_config;
  pc.stream_seed = derive_seed(pc.stream_seed, {std::hash<std::string>{}(id)});
  return pc;
}

json RecourseService::describe_point(const Vector& point) const {
  const RawRow raw = engine_->schema.decode(point);
  json out = json::object();
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out[engine_->schema.feature(i).name] = raw_to_json(raw[i]);
  }
  return out;
}

json RecourseService::decode_deltas(const Vector& from, const Vector& to) const {
  const auto& schema = engine_->schema;
  const RawRow a = schema.decode(from);
  const RawRow b = schema.decode(to);
  json out = json::object();
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto& f = schema.feature(i);
    double delta = 0.0;
    switch (f.kind) {
      case FeatureKind::kContinuous:
        delta = std::get<double>(b[i]) - std::get<double>(a[i]);
        break;
      case FeatureKind::kOrdinal:
        delta = static_cast<double>(level_of(f, std::get<std::string>(b[i]))) -
                static_cast<double>(level_of(f, std::get<std::string>(a[i])));
        break;
      case FeatureKind::kCategorical:
        delta = std::get<std::string>(a[i]) == std::get<std::string>(b[i]) ? 0.0 : 1.0;
        break;
    }
    out[f.name] = {{"delta", delta},
                   {"from", raw_to_json(a[i])},
                   {"to", raw_to_json(b[i])},
                   {"mutability", std::string(to_string(f.mutability))}};
  }
  return out;
}

ServiceResponse RecourseService::meta() const {
  const auto& pc = engine_->path_config;
  return {200, json{{"schema", schema_to_json(engine_->schema)},
                    {"k", engine_->clustering.k},
                    {"threshold", pc.threshold},
                    {"step_size", pc.step_size},
                    {"max_iterations", pc.max_iterations}}};
}

ServiceResponse RecourseService::create_session(const json& body) {
  const json& record = body.is_object() && body.contains("features") ? body.at("features") : body;
  Vector point;
  try {
    point = engine_->schema.encode(parse_raw_record(engine_->schema, record));
  } catch (const UnknownCategoryError& e) {
    return error(422, e.what());
  } catch (const SchemaError& e) {
    return error(400, e.what());
  }
  const double confidence = engine_->model->confidence(point);
  const double threshold = engine_->path_config.threshold;

  auto slot = std::make_shared<Slot>();
  Session& s = slot->session;
  s.current = point;
  s.history.push_back({point, kInitialChoice, now_ms(), confidence});
  s.status = confidence >= threshold ? SessionStatus::kSucceeded : SessionStatus::kSeeking;
  {
    std::unique_lock lock(sessions_mutex_);
    std::ostringstream id;
    id << std::hex << derive_seed(id_salt_, {next_id_++});
    s.id = id.str();
    sessions_.emplace(s.id, slot);
  }
  return {201, json{{"id", s.id},
                    {"label", confidence >= threshold ? 1 : -1},
                    {"confidence", confidence},
                    {"status", status_name(s.status)}}};
}

ServiceResponse RecourseService::get_directions(const std::string& id) {
  auto slot = find(id);
  if (!slot) return error(404, "unknown session '" + id + "'");
  std::lock_guard lock(slot->mutex);
  Session& s = slot->session;
  if (s.status == SessionStatus::kSucceeded) return error(409, "session already succeeded");

  const PathConfig pc = session_path_config(id);
  const int iteration = static_cast<int>(s.history.size()) - 1;
  json directions = json::array();
  for (int c = 0; c < engine_->clustering.k; ++c) {
    const Direction d = cluster_direction(s.current, engine_->dataset, engine_->clustering, c,
                                          engine_->alpha, pc, iteration);
    json entry = {{"cluster", c}, {"vector", vector_to_json(d.vector)},
                  {"privatized", d.privatized}};
    if (!(d.vector.norm() > 0.0)) {
      entry["empty"] = true;
      entry["deltas"] = decode_deltas(s.current, s.current);
      entry["next_confidence"] = nullptr;
    } else {
      const Vector next = apply_step(s.current, d.vector, engine_->schema, pc.step_size);
      entry["empty"] = false;
      entry["deltas"] = decode_deltas(s.current, next);
      entry["next_confidence"] = engine_->model->confidence(next);
    }
    directions.push_back(std::move(entry));
  }
  return {200, json{{"id", id}, {"directions", std::move(directions)}}};
}

ServiceResponse RecourseService::apply_user_step(const std::string& id, const json& body) {
  auto slot = find(id);
  if (!slot) return error(404, "unknown session '" + id + "'");
  std::lock_guard lock(slot->mutex);
  Session& s = slot->session;
  if (s.status == SessionStatus::kSucceeded) return error(409, "session already succeeded");
  if (!body.is_object()) return error(400, "step body must be a JSON object");

  const auto& schema = engine_->schema;
  const PathConfig pc = session_path_config(id);
  Vector next;
  int choice = kManualChoice;
  if (body.contains("cluster_id")) {
    if (!body.at("cluster_id").is_number_integer()) return error(400, "cluster_id must be an integer");
    choice = body.at("cluster_id").get<int>();
    if (choice < 0 || choice >= engine_->clustering.k) {
      return error(400, "cluster_id " + std::to_string(choice) + " out of range");
    }
    const int iteration = static_cast<int>(s.history.size()) - 1;
    const Direction d = cluster_direction(s.current, engine_->dataset, engine_->clustering,
                                          choice, engine_->alpha, pc, iteration);
    if (!(d.vector.norm() > 0.0)) {
      return error(400, "cluster " + std::to_string(choice) + " offers no direction");
    }
    next = apply_step(s.current, d.vector, schema, pc.step_size);
  } else if (body.contains("manual_deltas")) {
    const auto& deltas = body.at("manual_deltas");
    if (!deltas.is_object()) return error(400, "manual_deltas must be an object");
    RawRow raw = schema.decode(s.current);
    for (const auto& [name, value] : deltas.items()) {
      const auto index = schema.index_of(name);
      if (!index) return error(400, "unknown feature '" + name + "'");
      const auto& f = schema.feature(*index);
      RawValue updated = raw[*index];
      if (f.kind == FeatureKind::kContinuous) {
        if (!value.is_number()) return error(400, "delta for '" + name + "' must be a number");
        updated = std::get<double>(raw[*index]) + value.get<double>();
      } else if (f.kind == FeatureKind::kOrdinal) {
        const std::size_t from = level_of(f, std::get<std::string>(raw[*index]));
        long to = 0;
        if (value.is_number_integer()) {
          to = static_cast<long>(from) + value.get<long>();
        } else if (value.is_string()) {
          const auto target = value.get<std::string>();
          if (std::find(f.levels.begin(), f.levels.end(), target) == f.levels.end()) {
            return error(422, "feature '" + name + "': unknown level '" + target + "'");
          }
          to = static_cast<long>(level_of(f, target));
        } else {
          return error(400, "delta for '" + name + "' must be an integer or a level");
        }
        if (to < 0 || to >= static_cast<long>(f.levels.size())) {
          return error(400, "feature '" + name + "': level out of range");
        }
        updated = f.levels[static_cast<std::size_t>(to)];
      } else {
        if (!value.is_string()) return error(400, "value for '" + name + "' must be a category");
        const auto target = value.get<std::string>();
        if (std::find(f.levels.begin(), f.levels.end(), target) == f.levels.end()) {
          return error(422, "feature '" + name + "': unknown category '" + target + "'");
        }
        updated = target;
      }
      const bool changed = updated != raw[*index];
      if (changed && f.mutability == Mutability::kImmutable) {
        return error(400, "feature '" + name + "' is immutable");
      }
      if (changed && f.mutability == Mutability::kIncreaseOnly) {
        const bool decreased =
            f.kind == FeatureKind::kContinuous
                ? std::get<double>(updated) < std::get<double>(raw[*index])
                : level_of(f, std::get<std::string>(updated)) <
                      level_of(f, std::get<std::string>(raw[*index]));
        if (decreased) return error(400, "feature '" + name + "' can only increase");
      }
      raw[*index] = updated;
    }
    Vector proposed = schema.encode(raw);
    // Untouched continuous features keep their exact encoded value.
    for (std::size_t i = 0; i < schema.size(); ++i) {
      if (!deltas.contains(schema.feature(i).name)) {
        const auto at = static_cast<Eigen::Index>(schema.offset(i));
        const auto w = static_cast<Eigen::Index>(schema.feature(i).width());
        proposed.segment(at, w) = s.current.segment(at, w);
      }
    }
    next = project_constraints(s.current, proposed, schema);
  } else {
    return error(400, "step body needs 'cluster_id' or 'manual_deltas'");
  }

  const double confidence = engine_->model->confidence(next);
  s.current = next;
  s.history.push_back({next, choice, now_ms(), confidence});
  if (confidence >= pc.threshold) s.status = SessionStatus::kSucceeded;
  return {200, json{{"id", id},
                    {"point", describe_point(next)},
                    {"vector", vector_to_json(next)},
                    {"label", confidence >= pc.threshold ? 1 : -1},
                    {"confidence", confidence},
                    {"status", status_name(s.status)},
                    {"history_length", s.history.size()}}};
}

ServiceResponse RecourseService::get_session(const std::string& id) const {
  auto slot = find(id);
  if (!slot) return error(404, "unknown session '" + id + "'");
  std::lock_guard lock(slot->mutex);
  const Session& s = slot->session;
  json history = json::array();
  for (const auto& h : s.history) {
    history.push_back({{"point", describe_point(h.point)},
                       {"vector", vector_to_json(h.point)},
                       {"choice", choice_to_json(h.choice)},
                       {"timestamp_ms", h.timestamp_ms},
                       {"confidence", h.confidence}});
  }
  const double confidence = s.history.back().confidence;
  return {200, json{{"id", s.id},
                    {"status", status_name(s.status)},
                    {"point", describe_point(s.current)},
                    {"label", confidence >= engine_->path_config.threshold ? 1 : -1},
                    {"confidence", confidence},
                    {"history", std::move(history)}}};
}

ServiceResponse RecourseService::handle(std::string_view method, std::string_view path,
                                        std::string_view body) {
  auto parse_body = [&](json& out) {
    if (body.empty()) {
      out = json::object();
      return true;
    }
    out = json::parse(body, nullptr, false);
    return !out.is_discarded();
  };
  constexpr std::string_view prefix = "/api/session";
  if (method == "GET" && path == "/api/meta") return meta();
  if (path == prefix || path == "/api/session/") {
    if (method != "POST") return error(405, "method not allowed");
    json doc;
    if (!parse_body(doc)) return error(400, "request body is not valid JSON");
    return create_session(doc);
  }
  if (path.substr(0, prefix.size() + 1) == "/api/session/") {
    std::string_view rest = path.substr(prefix.size() + 1);
    const auto slash = rest.find('/');
    const std::string id(rest.substr(0, slash));
    const std::string_view tail = slash == std::string_view::npos ? "" : rest.substr(slash);
    if (tail.empty()) {
      if (method != "GET") return error(405, "method not allowed");
      return get_session(id);
    }
    if (tail == "/directions") {
      if (method != "GET") return error(405, "method not allowed");
      return get_directions(id);
    }
    if (tail == "/step") {
      if (method != "POST") return error(405, "method not allowed");
      json doc;
      if (!parse_body(doc)) return error(400, "request body is not valid JSON");
      return apply_user_step(id, doc);
    }
  }
  return error(404, "no route for " + std::string(method) + " " + std::string(path));
}

std::optional<Session> RecourseService::session(const std::string& id) const {
  auto slot = find(id);
  if (!slot) return std::nullopt;
  std::lock_guard lock(slot->mutex);
  return slot->session;
}

std::size_t RecourseService::session_count() const {
  std::shared_lock lock(sessions_mutex_);
  return sessions_.size();
}

json RecourseService::snapshot() const {
  std::shared_lock lock(sessions_mutex_);
  json sessions = json::array();
  for (const auto& [id, slot] : sessions_) {
    std::lock_guard slot_lock(slot->mutex);
    const Session& s = slot->session;
    json history = json::array();
    for (const auto& h : s.history) {
      history.push_back({{"vector", vector_to_json(h.point)},
                         {"choice", choice_to_json(h.choice)},
                         {"timestamp_ms", h.timestamp_ms},
                         {"confidence", h.confidence}});
    }
    sessions.push_back({{"id", s.id},
                        {"status", status_name(s.status)},
                        {"current", vector_to_json(s.current)},
                        {"history", std::move(history)}});
  }
  return {{"sessions", std::move(sessions)}, {"next_id", next_id_}};
}

void RecourseService::restore(const json& doc) {
  std::unique_lock lock(sessions_mutex_);
  try {
    for (const auto& entry : doc.at("sessions")) {
      auto slot = std::make_shared<Slot>();
      Session& s = slot->session;
      s.id = entry.at("id").get<std::string>();
      s.current = vector_from_json(entry.at("current"));
      s.status = entry.at("status").get<std::string>() == "succeeded" ? SessionStatus::kSucceeded
                                                                       : SessionStatus::kSeeking;
      for (const auto& h : entry.at("history")) {
        s.history.push_back({vector_from_json(h.at("vector")), choice_from_json(h.at("choice")),
                             h.at("timestamp_ms").get<std::int64_t>(),
                             h.at("confidence").get<double>()});
      }
      if (static_cast<std::size_t>(s.current.size()) != engine_->schema.encoded_dim() ||
          s.history.empty()) {
        throw ConfigError("snapshot session '" + s.id + "' does not match the schema");
      }
      sessions_[s.id] = std::move(slot);
    }
    next_id_ = std::max(next_id_, doc.value("next_id", std::uint64_t{0}));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed session snapshot: ") + e.what());
  }
}

void RecourseService::save_snapshot(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write snapshot: " + path.string());
  out << snapshot().dump() << '\n';
}

void RecourseService::load_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open snapshot: " + path.string());
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw ConfigError("snapshot is not valid JSON: " + path.string());
  restore(doc);
}

struct HttpServer::Impl {
  explicit Impl(RecourseService& s) : service(s) {
    auto route = [this](const httplib::Request& req, httplib::Response& res) {
      const ServiceResponse r = service.handle(req.method, req.path, req.body);
      res.status = r.status;
      res.set_header("Access-Control-Allow-Origin", "*");
      res.set_content(r.body.dump(), "application/json");
    };
    server.Get(R"(/api/.*)", route);
    server.Post(R"(/api/.*)", route);
    server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Origin", "*");
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.status = 204;
    });
  }

  RecourseService& service;
  httplib::Server server;
};

HttpServer::HttpServer(RecourseService& service) : impl_(std::make_unique<Impl>(service)) {}
HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen_after_bind() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace step
