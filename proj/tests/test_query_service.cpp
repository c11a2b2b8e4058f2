#include <gtest/gtest.h>
#include <httplib.h>

#include <chrono>
#include <filesystem>
#include <fstream>

#include "delayprop/errors.hpp"
#include "delayprop/query.hpp"
#include "delayprop/service.hpp"
#include "delayprop/synth.hpp"

using namespace delayprop;

namespace {

const std::string& model_bytes() {
  static const std::string bytes = to_json(default_scenario().network).dump(1);
  return bytes;
}

struct Fixture : ::testing::Test {
  Service service;
  std::string id;

  void SetUp() override {
    const auto r = service.handle({"POST", "/models", model_bytes(), {}});
    ASSERT_EQ(r.status, 201) << r.body;
    id = json::parse(r.body).at("id").get<std::string>();
  }

  HttpResponse call(const std::string& method, const std::string& path, const json& body = nullptr) {
    return service.handle({method, "/models/" + id + path, body.is_null() ? "" : body.dump(), {}});
  }
};

const json kWhatIf = {{"evidence", {{"gate_in_dest", {"[15,30)"}}}}};

}  // namespace

TEST(Sha256, KnownDigest) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(QueryJson, ParsesAndValidates) {
  const auto net = default_scenario().network;
  const auto q = parse_query(net, {{"evidence", {{"gdp", {"true"}}}}, {"query", {"taxi_out"}}});
  EXPECT_EQ(q.nodes.size(), 1u);
  EXPECT_EQ(q.evidence.admissible.size(), 1u);
  EXPECT_EQ(parse_query(net, json::object()).nodes.size(), net.size());
  EXPECT_THROW(parse_query(net, {{"evidence", {{"nope", {"x"}}}}}), EvidenceError);
  EXPECT_THROW(parse_query(net, {{"evidence", {{"gdp", {"maybe"}}}}}), EvidenceError);
  EXPECT_THROW(parse_query(net, {{"query", "taxi_out"}}), EvidenceError);
  EXPECT_THROW(parse_query(net, json::array()), EvidenceError);
}

TEST_F(Fixture, ModelListingAndIdempotentUpload) {
  EXPECT_EQ(id, sha256_hex(model_bytes()).substr(0, 16));
  const auto again = service.handle({"POST", "/models", model_bytes(), {}});
  EXPECT_EQ(again.status, 200);
  EXPECT_EQ(json::parse(again.body).at("id"), id);
  const auto list = json::parse(service.handle({"GET", "/models", "", {}}).body);
  EXPECT_EQ(list.at("models").size(), 1u);
  EXPECT_EQ(service.handle({"PUT", "/models", "", {}}).status, 405);
  EXPECT_EQ(service.handle({"POST", "/models", "{not json", {}}).status, 422);
}

TEST_F(Fixture, GraphListsNodesParentsAndBins) {
  const auto r = call("GET", "/graph");
  ASSERT_EQ(r.status, 200);
  const auto g = json::parse(r.body);
  ASSERT_EQ(g.at("nodes").size(), 12u);
  bool found = false;
  for (const auto& n : g.at("nodes")) {
    if (n.at("name") != "taxi_out") continue;
    found = true;
    EXPECT_EQ(n.at("kind"), "binned");
    EXPECT_FALSE(n.at("bins").empty());
    EXPECT_EQ(n.at("states").size(), n.at("midpoints").size());
    EXPECT_FALSE(n.at("parents").empty());
  }
  EXPECT_TRUE(found);
}

TEST_F(Fixture, QueryEqualsDirectInference) {
  const auto& net = service.registry().get(id)->network();
  for (const json& body : {json::object(), kWhatIf}) {
    const auto r = call("POST", "/query", body);
    ASSERT_EQ(r.status, 200) << r.body;
    EXPECT_EQ(r.body, canonical_dump(answer_query(net, body)));
    EXPECT_EQ(call("POST", "/query", body).body, r.body);
  }
  const auto prior = json::parse(call("POST", "/query", json::object()).body);
  const auto& airline = prior.at("posteriors").at("airline");
  const auto row = net.table(net.require("airline")).row_probabilities(0);
  for (std::size_t s = 0; s < row.size(); ++s) EXPECT_NEAR(airline[s].get<double>(), row[s], 1e-9);
}

TEST_F(Fixture, QueryErrors) {
  EXPECT_EQ(service.handle({"POST", "/models/ffffffffffffffff/query", "{}", {}}).status, 404);
  EXPECT_EQ(call("POST", "/query", {{"evidence", {{"nope", {"x"}}}}}).status, 422);
  EXPECT_EQ(call("POST", "/query", {{"evidence", {{"taxi_out", {"[1,2)"}}}}}).status, 422);
  EXPECT_EQ(service.handle({"POST", "/models/" + id + "/query", "{bad", {}}).status, 400);
  // The scenario's gate_out row for an early gate_in_prev cannot reach the top bins.
  const json impossible = {{"evidence",
                            {{"gate_in_prev", {"(-inf,-60)"}}, {"turn_around", {"(-inf,-60)"}}, {"gate_out", {"[120,inf)"}}}}};
  EXPECT_EQ(call("POST", "/query", impossible).status, 409);
}

TEST_F(Fixture, ScenarioCrudAndCompare) {
  const json bodies[] = {{{"name", "prior"}, {"evidence", json::object()}},
                         {{"name", "late"}, {"evidence", {{"gate_in_dest", {"[15,30)"}}}}},
                         {{"name", "gdp"}, {"evidence", {{"gdp", {"true"}}, {"weather_dest", {"IMC"}}}}}};
  std::vector<std::string> ids;
  for (const auto& b : bodies) {
    const auto r = call("POST", "/scenarios", b);
    ASSERT_EQ(r.status, 201) << r.body;
    ids.push_back(json::parse(r.body).at("id"));
  }
  EXPECT_EQ(ids, (std::vector<std::string>{"s1", "s2", "s3"}));
  const auto list = json::parse(call("GET", "/scenarios").body).at("scenarios");
  ASSERT_EQ(list.size(), 3u);
  EXPECT_EQ(list[1].at("name"), "late");
  EXPECT_EQ(call("GET", "/scenarios/s2").status, 200);
  EXPECT_EQ(call("POST", "/scenarios", {{"evidence", {{"nope", {"x"}}}}}).status, 422);

  const auto cmp = call("POST", "/scenarios/compare", {{"scenarios", ids}});
  ASSERT_EQ(cmp.status, 200) << cmp.body;
  const auto c = json::parse(cmp.body);
  const auto& net = service.registry().get(id)->network();
  for (const auto& [node, vecs] : c.at("posteriors").items()) {
    ASSERT_EQ(vecs.size(), 3u) << node;
    for (std::size_t k = 0; k < 3; ++k) {
      const auto direct = answer_query(net, {{"evidence", bodies[k].at("evidence")}});
      EXPECT_EQ(canonical_dump(vecs[k]), canonical_dump(direct.at("posteriors").at(node)));
    }
  }
  EXPECT_EQ(c.at("posteriors").size(), net.size());

  std::vector<std::string> six(6, "s1");
  EXPECT_EQ(call("POST", "/scenarios/compare", {{"scenarios", six}}).status, 422);
  EXPECT_EQ(call("POST", "/scenarios/compare", {{"scenarios", json::array()}}).status, 422);

  EXPECT_EQ(call("DELETE", "/scenarios/s2").status, 200);
  EXPECT_EQ(call("DELETE", "/scenarios/s2").status, 404);
  EXPECT_EQ(call("GET", "/scenarios/s2").status, 404);
  EXPECT_EQ(call("POST", "/scenarios/compare", {{"scenarios", ids}}).status, 404);
  EXPECT_EQ(json::parse(call("GET", "/scenarios").body).at("scenarios").size(), 2u);
}

TEST(Service, MultipartUploadAndModelDirectory) {
  const auto dir = std::filesystem::temp_directory_path() / ("delayprop_models_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  auto doc = json::parse(model_bytes());
  const json tables = {{"tables", doc.at("tables")}};
  doc.erase("tables");
  std::string id;
  {
    Service s(dir);
    const auto r = s.handle({"POST", "/models", "", {{"config", doc.dump()}, {"tables", tables.dump()}}});
    ASSERT_EQ(r.status, 201) << r.body;
    id = json::parse(r.body).at("id");
    EXPECT_TRUE(std::filesystem::exists(dir / (id + ".json")));
    EXPECT_EQ(s.handle({"POST", "/models", "", {{"tables", "{}"}}}).status, 422);
  }
  Service reloaded(dir);
  ASSERT_NE(reloaded.registry().get(id), nullptr);
  EXPECT_EQ(reloaded.registry().get(id)->network().tables(), default_scenario().network.tables());
  std::filesystem::remove_all(dir);
}

TEST(Service, HttpServerMatchesDirectAnswerWithinLatencyBudget) {
  Service service;
  BackgroundServer server(service, "127.0.0.1");
  httplib::Client client("127.0.0.1", server.port());
  auto up = client.Post("/models", model_bytes(), "application/json");
  ASSERT_TRUE(up);
  ASSERT_EQ(up->status, 201);
  const std::string id = json::parse(up->body).at("id");
  const auto& net = service.registry().get(id)->network();

  double worst_ms = 0;
  for (int i = 0; i < 5; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    auto res = client.Post("/models/" + id + "/query", kWhatIf.dump(), "application/json");
    const auto t1 = std::chrono::steady_clock::now();
    ASSERT_TRUE(res);
    ASSERT_EQ(res->status, 200);
    EXPECT_EQ(res->body, canonical_dump(answer_query(net, kWhatIf)));
    worst_ms = std::max(worst_ms, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  EXPECT_LT(worst_ms, 200.0);

  httplib::MultipartFormDataItems items{{"config", model_bytes(), "model.json", "application/json"}};
  auto mp = client.Post("/models", items);
  ASSERT_TRUE(mp);
  EXPECT_EQ(mp->status, 200);  // same document already loaded

  auto missing = client.Get("/models/0000000000000000/graph");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  auto del = client.Delete("/models/" + id + "/scenarios/s9");
  ASSERT_TRUE(del);
  EXPECT_EQ(del->status, 404);
  server.stop();
}
