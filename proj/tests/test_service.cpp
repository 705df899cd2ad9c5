#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "step/direction.hpp"
#include "step/service.hpp"
#include "support.hpp"

#include <httplib.h>

namespace step {
namespace {

using nlohmann::json;

class StepModel final : public Model {
 public:
  double confidence(const Vector& p) const override { return p[0] >= 1.0 ? 1.0 : 0.0; }
};

// 1D task: positives at 3.0 (cluster 0) and 1.5 (cluster 1), cluster 2 empty.
std::shared_ptr<const Engine> line_engine() {
  auto e = std::make_shared<Engine>();
  e->schema = testing::continuous_schema(1);
  e->model = std::make_shared<StepModel>();
  Matrix pts(3, 1);
  pts << 3.0, 1.5, -4.0;
  e->dataset = make_dataset(e->schema, pts, {"0", "1", "2"}, *e->model, 0.7);
  Clustering& c = e->clustering;
  c.k = 3;
  c.assignment = {0, 1, -1};
  c.members = {{0}, {1}, {}};
  c.centroids = Matrix::Zero(3, 1);
  c.centroids(0, 0) = 3.0;
  c.centroids(1, 0) = 1.5;
  e->alpha = AlphaFunction::volcano(2.0, 0.5);
  return e;
}

ExperimentConfig loans_config() {
  ExperimentConfig c;
  c.csv = std::filesystem::path(STEP_DATA_DIR) / "loans.csv";
  c.schema = std::filesystem::path(STEP_DATA_DIR) / "loans_schema.json";
  c.seed = 11;
  return c;
}

const json kLowApplicant = {{"features",
                             {{"income", 20.0},
                              {"age", 25.0},
                              {"education", "high_school"},
                              {"housing", "rent"},
                              {"region", "north"}}}};

class LoansService : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { engine_ = make_engine(loans_config()); }
  static void TearDownTestSuite() { engine_.reset(); }

  std::string create(RecourseService& s, const json& body = kLowApplicant) {
    const auto r = s.create_session(body);
    EXPECT_EQ(r.status, 201) << r.body.dump();
    return r.body.at("id").get<std::string>();
  }

  static std::shared_ptr<const Engine> engine_;
};

std::shared_ptr<const Engine> LoansService::engine_;

TEST(LineService, ClusterStepMatchesPathGeneration) {
  const auto engine = line_engine();
  RecourseService service(engine);
  const auto created = service.create_session(json{{"x1", -0.5}});
  ASSERT_EQ(created.status, 201);
  EXPECT_EQ(created.body.at("label"), -1);
  EXPECT_EQ(created.body.at("status"), "seeking");
  const std::string id = created.body.at("id");

  const auto paths = generate_paths((Vector(1) << -0.5).finished(), engine->dataset, engine->clustering,
                                    *engine->model, engine->alpha, engine->path_config);
  const auto step = service.apply_user_step(id, json{{"cluster_id", 1}});
  ASSERT_EQ(step.status, 200) << step.body.dump();
  EXPECT_EQ(step.body.at("vector")[0].get<double>(), paths[1].points[1][0]);
  EXPECT_EQ(step.body.at("vector")[0].get<double>(), 0.5);
  EXPECT_EQ(step.body.at("history_length"), 2);
  EXPECT_EQ(step.body.at("status"), "seeking");

  const auto last = service.apply_user_step(id, json{{"cluster_id", 1}});
  EXPECT_EQ(last.body.at("vector")[0].get<double>(), 1.5);
  EXPECT_EQ(last.body.at("status"), "succeeded");
  EXPECT_EQ(last.body.at("label"), 1);

  EXPECT_EQ(service.get_directions(id).status, 409);
  EXPECT_EQ(service.apply_user_step(id, json{{"cluster_id", 0}}).status, 409);
  EXPECT_EQ(service.session(id)->history.size(), 3u);
}

TEST(LineService, EmptyClusterFlagged) {
  RecourseService service(line_engine());
  const std::string id = service.create_session(json{{"x1", -0.5}}).body.at("id");
  const auto dirs = service.get_directions(id);
  ASSERT_EQ(dirs.status, 200);
  const auto& list = dirs.body.at("directions");
  ASSERT_EQ(list.size(), 3u);
  EXPECT_FALSE(list[0].at("empty").get<bool>());
  EXPECT_TRUE(list[2].at("empty").get<bool>());
  EXPECT_EQ(list[2].at("vector")[0].get<double>(), 0.0);
  EXPECT_EQ(service.apply_user_step(id, json{{"cluster_id", 2}}).status, 400);
  EXPECT_EQ(service.apply_user_step(id, json{{"cluster_id", 7}}).status, 400);
}

TEST(LineService, AlreadyPositiveSessionSucceeded) {
  RecourseService service(line_engine());
  const auto r = service.create_session(json{{"x1", 2.0}});
  EXPECT_EQ(r.status, 201);
  EXPECT_EQ(r.body.at("status"), "succeeded");
  EXPECT_EQ(r.body.at("label"), 1);
}

TEST(LineService, UnknownSession) {
  RecourseService service(line_engine());
  EXPECT_EQ(service.get_directions("nope").status, 404);
  EXPECT_EQ(service.get_session("nope").status, 404);
  EXPECT_EQ(service.apply_user_step("nope", json{{"cluster_id", 0}}).status, 404);
}

TEST_F(LoansService, MetaDescribesEngine) {
  RecourseService s(engine_);
  const auto m = s.meta();
  EXPECT_EQ(m.status, 200);
  EXPECT_EQ(m.body.at("k"), 3);
  EXPECT_EQ(m.body.at("threshold"), 0.7);
  EXPECT_EQ(m.body.at("step_size"), 1.0);
  EXPECT_EQ(m.body.at("schema").at("features").size(), 5u);
}

TEST_F(LoansService, CreateValidatesRecord) {
  RecourseService s(engine_);
  const auto ok = s.create_session(kLowApplicant);
  EXPECT_EQ(ok.status, 201);
  EXPECT_EQ(ok.body.at("label"), -1);
  EXPECT_LT(ok.body.at("confidence").get<double>(), 0.7);

  json missing = kLowApplicant;
  missing["features"].erase("age");
  EXPECT_EQ(s.create_session(missing).status, 400);
  json wrong_type = kLowApplicant;
  wrong_type["features"]["income"] = "lots";
  EXPECT_EQ(s.create_session(wrong_type).status, 400);
  json extra = kLowApplicant;
  extra["features"]["shoe_size"] = 9;
  EXPECT_EQ(s.create_session(extra).status, 400);
  json unknown = kLowApplicant;
  unknown["features"]["housing"] = "castle";
  EXPECT_EQ(s.create_session(unknown).status, 422);
  EXPECT_EQ(s.session_count(), 1u);
}

TEST_F(LoansService, DirectionsDecodeRawDeltas) {
  RecourseService s(engine_);
  const std::string id = create(s);
  const auto r = s.get_directions(id);
  ASSERT_EQ(r.status, 200);
  const auto& list = r.body.at("directions");
  ASSERT_EQ(list.size(), 3u);
  for (const auto& d : list) {
    const auto& deltas = d.at("deltas");
    EXPECT_EQ(deltas.at("region").at("delta"), 0.0);
    EXPECT_EQ(deltas.at("region").at("from"), deltas.at("region").at("to"));
    EXPECT_EQ(deltas.at("region").at("mutability"), "immutable");
    EXPECT_GE(deltas.at("age").at("delta").get<double>(), 0.0);
    EXPECT_TRUE(d.at("next_confidence").is_number());
  }
}

TEST_F(LoansService, ManualDeltasRespectMutability) {
  RecourseService s(engine_);
  const std::string id = create(s);
  const auto immutable = s.apply_user_step(id, json{{"manual_deltas", {{"region", "south"}}}});
  EXPECT_EQ(immutable.status, 400);
  EXPECT_NE(immutable.body.at("error").get<std::string>().find("region"), std::string::npos);
  EXPECT_EQ(s.apply_user_step(id, json{{"manual_deltas", {{"age", -5}}}}).status, 400);
  EXPECT_EQ(s.apply_user_step(id, json{{"manual_deltas", {{"housing", "castle"}}}}).status, 422);
  EXPECT_EQ(s.apply_user_step(id, json{{"manual_deltas", {{"education", "kindergarten"}}}}).status, 422);
  EXPECT_EQ(s.session(id)->history.size(), 1u);

  const auto ok = s.apply_user_step(id, json{{"manual_deltas", {{"income", 10}, {"education", 1}}}});
  ASSERT_EQ(ok.status, 200) << ok.body.dump();
  EXPECT_EQ(ok.body.at("history_length"), 2);
  EXPECT_NEAR(ok.body.at("point").at("income").get<double>(), 30.0, 1e-9);
  EXPECT_EQ(ok.body.at("point").at("education"), "bachelor");
  EXPECT_EQ(ok.body.at("point").at("region"), "north");
  EXPECT_EQ(s.session(id)->history.back().choice, kManualChoice);
}

TEST_F(LoansService, ReplayReproducesHistory) {
  RecourseService s(engine_);
  const std::string id = create(s);
  std::size_t length = 1;
  for (int i = 0; i < 30; ++i) {
    const auto r = s.apply_user_step(id, json{{"cluster_id", i % 3}});
    if (r.status == 409) break;
    if (r.status == 400) continue;  // cluster with no direction here
    ASSERT_EQ(r.status, 200) << r.body.dump();
    ++length;
    EXPECT_EQ(r.body.at("history_length"), length);
  }
  const Session session = *s.session(id);
  ASSERT_EQ(session.history.size(), length);
  EXPECT_EQ(session.status, SessionStatus::kSucceeded);

  const Engine& e = *engine_;
  Vector current = session.history[0].point;
  for (std::size_t i = 1; i < session.history.size(); ++i) {
    const int choice = session.history[i].choice;
    ASSERT_GE(choice, 0);
    const Direction d = cluster_direction(current, e.dataset, e.clustering, choice, e.alpha,
                                          e.path_config, static_cast<int>(i) - 1);
    current = apply_step(current, d.vector, e.schema, e.path_config.step_size);
    EXPECT_EQ(current, session.history[i].point);
    EXPECT_EQ(e.model->confidence(current), session.history[i].confidence);
  }
}

TEST_F(LoansService, SnapshotRoundTrip) {
  RecourseService s(engine_);
  const std::string id = create(s);
  s.apply_user_step(id, json{{"cluster_id", 0}});
  testing::TempDir dir;
  s.save_snapshot(dir.path() / "snap.json");
  RecourseService restored(engine_);
  restored.load_snapshot(dir.path() / "snap.json");
  EXPECT_EQ(restored.get_session(id).body, s.get_session(id).body);
  const std::string other = create(restored);
  EXPECT_NE(other, id);
}

TEST_F(LoansService, SameSessionRequestsAreSerialized) {
  RecourseService s(engine_);
  const std::string id = create(s);
  std::atomic<int> accepted{0};
  std::vector<std::jthread> pool;
  for (int t = 0; t < 8; ++t) {
    pool.emplace_back([&] {
      for (int i = 0; i < 5; ++i) {
        if (s.apply_user_step(id, json{{"cluster_id", 0}}).status == 200) ++accepted;
      }
    });
  }
  pool.clear();
  EXPECT_EQ(s.session(id)->history.size(), static_cast<std::size_t>(accepted.load()) + 1);
}

TEST_F(LoansService, ConcurrentSessions) {
  RecourseService s(engine_);
  std::vector<std::jthread> pool;
  std::atomic<int> created{0};
  for (int t = 0; t < 8; ++t) {
    pool.emplace_back([&] {
      const auto r = s.create_session(kLowApplicant);
      if (r.status != 201) return;
      ++created;
      const std::string id = r.body.at("id");
      for (int i = 0; i < 3; ++i) s.apply_user_step(id, json{{"cluster_id", i}});
    });
  }
  pool.clear();
  EXPECT_EQ(created.load(), 8);
  EXPECT_EQ(s.session_count(), 8u);
}

TEST_F(LoansService, RouterMapsPaths) {
  RecourseService s(engine_);
  EXPECT_EQ(s.handle("GET", "/api/meta", "").status, 200);
  const auto c = s.handle("POST", "/api/session", kLowApplicant.dump());
  ASSERT_EQ(c.status, 201);
  const std::string id = c.body.at("id");
  EXPECT_EQ(s.handle("GET", "/api/session/" + id + "/directions", "").status, 200);
  EXPECT_EQ(s.handle("POST", "/api/session/" + id + "/step", R"({"cluster_id":0})").status, 200);
  EXPECT_EQ(s.handle("GET", "/api/session/" + id, "").status, 200);
  EXPECT_EQ(s.handle("POST", "/api/session", "{not json").status, 400);
  EXPECT_EQ(s.handle("GET", "/api/nothing", "").status, 404);
  EXPECT_EQ(s.handle("POST", "/api/session/" + id + "/step", "{}").status, 400);
}

TEST_F(LoansService, HttpEndToEnd) {
  RecourseService s(engine_);
  HttpServer server(s);
  const int port = server.bind("127.0.0.1", 0);
  ASSERT_GT(port, 0);
  std::thread loop([&] { server.listen_after_bind(); });

  httplib::Client client("127.0.0.1", port);
  auto meta = client.Get("/api/meta");
  ASSERT_TRUE(meta);
  EXPECT_EQ(meta->status, 200);
  EXPECT_EQ(json::parse(meta->body).at("k"), 3);

  auto created = client.Post("/api/session", kLowApplicant.dump(), "application/json");
  ASSERT_TRUE(created);
  EXPECT_EQ(created->status, 201);
  const std::string id = json::parse(created->body).at("id");

  auto immutable = client.Post("/api/session/" + id + "/step", R"({"manual_deltas":{"region":"south"}})",
                               "application/json");
  ASSERT_TRUE(immutable);
  EXPECT_EQ(immutable->status, 400);
  EXPECT_NE(json::parse(immutable->body).at("error").get<std::string>().find("region"), std::string::npos);

  int status = 200;
  int steps = 0;
  while (status == 200 && steps < 60) {
    auto dirs = client.Get("/api/session/" + id + "/directions");
    ASSERT_TRUE(dirs);
    if (dirs->status == 409) break;
    const auto list = json::parse(dirs->body).at("directions");
    int pick = -1;
    for (const auto& d : list) {
      if (!d.at("empty").get<bool>()) {
        pick = d.at("cluster");
        break;
      }
    }
    ASSERT_GE(pick, 0);
    auto step = client.Post("/api/session/" + id + "/step", json{{"cluster_id", pick}}.dump(), "application/json");
    ASSERT_TRUE(step);
    status = step->status;
    ++steps;
  }
  auto final_state = client.Get("/api/session/" + id);
  ASSERT_TRUE(final_state);
  const auto doc = json::parse(final_state->body);
  EXPECT_EQ(doc.at("status"), "succeeded");
  EXPECT_EQ(doc.at("history").size(), static_cast<std::size_t>(steps) + 1);
  EXPECT_EQ(doc.at("history").back().at("confidence"), doc.at("confidence"));

  auto late = client.Post("/api/session/" + id + "/step", R"({"cluster_id":0})", "application/json");
  ASSERT_TRUE(late);
  EXPECT_EQ(late->status, 409);
  auto missing = client.Get("/api/session/unknown");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  EXPECT_TRUE(json::parse(missing->body).contains("error"));

  server.stop();
  loop.join();
}

}  // namespace
}  // namespace step
