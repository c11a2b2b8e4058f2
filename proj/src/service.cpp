#include "delayprop/service.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

#include "delayprop/errors.hpp"
#include "delayprop/query.hpp"

namespace delayprop {

namespace {

constexpr std::size_t kMaxCompare = 5;

HttpResponse reply(int status, const json& body) { return {status, canonical_dump(body)}; }
HttpResponse error(int status, const std::string& message) {
  return reply(status, {{"error", message}});
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> out;
  std::string part;
  std::istringstream in(path.substr(0, path.find('?')));
  while (std::getline(in, part, '/')) {
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json scenario_json(const Scenario& s) {
  return {{"id", s.id}, {"name", s.name}, {"evidence", s.evidence}};
}

json model_summary(const SessionModel& m) {
  return {{"id", m.id()},
          {"config_hash", m.config_hash()},
          {"created", m.created()},
          {"nodes", m.network().size()}};
}

json graph_json(const SessionModel& m) {
  const Network& net = m.network();
  json nodes = json::array();
  for (std::size_t i = 0; i < net.size(); ++i) {
    const auto& v = net.variable(i);
    json parents = json::array();
    for (auto p : net.parents(i)) parents.push_back(net.name(p));
    json node = {{"name", v.name}, {"parents", parents}, {"states", v.states}};
    if (v.is_binned()) {
      node["kind"] = "binned";
      node["bins"] = to_json(*v.bins);
      node["midpoints"] = v.bins->midpoints();
    } else {
      node["kind"] = "categorical";
    }
    nodes.push_back(std::move(node));
  }
  return {{"id", m.id()}, {"nodes", nodes}};
}

json parse_body(const std::string& body) {
  if (body.empty()) return json::object();
  return json::parse(body);
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

SessionModel::SessionModel(std::string id, std::shared_ptr<const Network> network,
                           std::string config_hash, std::string created)
    : id_(std::move(id)),
      network_(std::move(network)),
      hash_(std::move(config_hash)),
      created_(std::move(created)) {}

Scenario SessionModel::add_scenario(std::string name, const json& evidence) {
  auto labels = parse_evidence(*network_, evidence);
  std::lock_guard lock(mutex_);
  Scenario s{"s" + std::to_string(next_scenario_++), std::move(name), std::move(labels)};
  if (s.name.empty()) s.name = s.id;
  scenarios_[s.id] = s;
  return s;
}

std::optional<Scenario> SessionModel::scenario(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = scenarios_.find(id);
  if (it == scenarios_.end()) return std::nullopt;
  return it->second;
}

std::vector<Scenario> SessionModel::scenarios() const {
  std::lock_guard lock(mutex_);
  std::vector<Scenario> out;
  for (const auto& [id, s] : scenarios_) out.push_back(s);
  std::sort(out.begin(), out.end(), [](const Scenario& a, const Scenario& b) {
    return std::stoull(a.id.substr(1)) < std::stoull(b.id.substr(1));
  });
  return out;
}

bool SessionModel::remove_scenario(const std::string& id) {
  std::lock_guard lock(mutex_);
  return scenarios_.erase(id) > 0;
}

ModelRegistry::Added ModelRegistry::add(const std::string& bytes) {
  const auto hash = sha256_hex(bytes);
  const auto id = hash.substr(0, 16);
  {
    std::shared_lock lock(mutex_);
    if (auto it = models_.find(id); it != models_.end()) return {it->second, false};
  }
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("model document is not JSON: ") + e.what());
  }
  auto network = std::make_shared<const Network>(network_from_json(doc));
  auto model = std::make_shared<SessionModel>(id, std::move(network), hash, utc_now());
  std::unique_lock lock(mutex_);
  auto [it, inserted] = models_.emplace(id, model);
  return {it->second, inserted};
}

std::shared_ptr<SessionModel> ModelRegistry::get(const std::string& id) const {
  std::shared_lock lock(mutex_);
  auto it = models_.find(id);
  return it == models_.end() ? nullptr : it->second;
}

std::vector<std::shared_ptr<SessionModel>> ModelRegistry::list() const {
  std::shared_lock lock(mutex_);
  std::vector<std::shared_ptr<SessionModel>> out;
  for (const auto& [id, m] : models_) out.push_back(m);
  return out;
}

Service::Service(std::filesystem::path model_dir) : model_dir_(std::move(model_dir)) {
  if (model_dir_.empty() || !std::filesystem::is_directory(model_dir_)) return;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(model_dir_)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    registry_.add(ss.str());
  }
}

HttpResponse Service::post_model(const HttpRequest& req) {
  std::string bytes = req.body;
  if (!req.parts.empty()) {
    auto cfg = req.parts.find("config");
    if (cfg == req.parts.end()) return error(422, "multipart upload needs a 'config' part");
    json doc = parse_body(cfg->second);
    if (auto tables = req.parts.find("tables"); tables != req.parts.end()) {
      json t = parse_body(tables->second);
      doc["tables"] = t.is_object() && t.contains("tables") ? t.at("tables") : t;
    }
    bytes = doc.dump(1);
  }
  auto added = registry_.add(bytes);
  if (added.created && !model_dir_.empty()) {
    std::filesystem::create_directories(model_dir_);
    std::ofstream out(model_dir_ / (added.model->id() + ".json"), std::ios::binary);
    out << bytes;
  }
  return reply(added.created ? 201 : 200, model_summary(*added.model));
}

HttpResponse Service::compare(SessionModel& model, const json& body) {
  if (!body.contains("scenarios") || !body.at("scenarios").is_array()) {
    return error(422, "compare needs a 'scenarios' array of ids");
  }
  const auto& ids = body.at("scenarios");
  if (ids.empty() || ids.size() > kMaxCompare) {
    return error(422, "compare takes 1 to " + std::to_string(kMaxCompare) + " scenarios");
  }
  json query = body.value("query", json());
  json listed = json::array();
  json results = json::array();
  json posteriors = json::object();
  json expected = json::object();
  json logprob = json::array();
  for (const auto& jid : ids) {
    if (!jid.is_string()) return error(422, "scenario ids must be strings");
    auto s = model.scenario(jid.get<std::string>());
    if (!s) return error(404, "unknown scenario '" + jid.get<std::string>() + "'");
    json answer = answer_query(model.network(), {{"evidence", s->evidence}, {"query", query}});
    for (const auto& [node, p] : answer.at("posteriors").items()) posteriors[node].push_back(p);
    for (const auto& [node, e] : answer.at("expected").items()) expected[node].push_back(e);
    logprob.push_back(answer.at("evidence_logprob"));
    listed.push_back(scenario_json(*s));
    results.push_back(std::move(answer));
  }
  return reply(200, {{"scenarios", listed},
                     {"results", results},
                     {"posteriors", posteriors},
                     {"expected", expected},
                     {"evidence_logprob", logprob}});
}

HttpResponse Service::handle(const HttpRequest& req) {
  const auto seg = split_path(req.path);
  const auto& m = req.method;
  try {
    if (seg.empty() || seg[0] != "models") return error(404, "no route for " + req.path);
    if (seg.size() == 1) {
      if (m == "GET") {
        json list = json::array();
        for (const auto& model : registry_.list()) list.push_back(model_summary(*model));
        return reply(200, {{"models", list}});
      }
      if (m == "POST") return post_model(req);
      return error(405, "method not allowed");
    }
    auto model = registry_.get(seg[1]);
    if (!model) return error(404, "unknown model '" + seg[1] + "'");
    if (seg.size() == 2 && m == "GET") return reply(200, model_summary(*model));
    if (seg.size() == 3 && seg[2] == "graph" && m == "GET") return reply(200, graph_json(*model));
    if (seg.size() == 3 && seg[2] == "query" && m == "POST") {
      return reply(200, answer_query(model->network(), parse_body(req.body)));
    }
    if (seg.size() >= 3 && seg[2] == "scenarios") {
      if (seg.size() == 3 && m == "GET") {
        json list = json::array();
        for (const auto& s : model->scenarios()) list.push_back(scenario_json(s));
        return reply(200, {{"scenarios", list}});
      }
      if (seg.size() == 3 && m == "POST") {
        const json body = parse_body(req.body);
        if (!body.is_object()) return error(422, "scenario body must be an object");
        const auto name = body.value("name", std::string());
        return reply(201, scenario_json(model->add_scenario(name, body.value("evidence", json::object()))));
      }
      if (seg.size() == 4 && seg[3] == "compare" && m == "POST") {
        return compare(*model, parse_body(req.body));
      }
      if (seg.size() == 4 && m == "GET") {
        auto s = model->scenario(seg[3]);
        if (!s) return error(404, "unknown scenario '" + seg[3] + "'");
        return reply(200, scenario_json(*s));
      }
      if (seg.size() == 4 && m == "DELETE") {
        if (!model->remove_scenario(seg[3])) return error(404, "unknown scenario '" + seg[3] + "'");
        return reply(200, {{"deleted", seg[3]}});
      }
    }
    return error(404, "no route for " + m + " " + req.path);
  } catch (const json::exception& e) {
    return error(400, std::string("malformed JSON: ") + e.what());
  } catch (const EvidenceError& e) {
    return error(422, e.what());
  } catch (const InconsistentEvidence& e) {
    return error(409, e.what());
  } catch (const ConfigError& e) {
    return error(422, e.what());
  } catch (const DataError& e) {
    return error(422, e.what());
  }
}

std::pair<std::string, int> service_address() {
  std::string addr = "127.0.0.1:8080";
  if (const char* env = std::getenv("DELAYPROP_ADDR"); env && *env) addr = env;
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos) return {addr, 8080};
  return {addr.substr(0, colon), std::stoi(addr.substr(colon + 1))};
}

}  // namespace delayprop
