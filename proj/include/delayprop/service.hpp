#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "delayprop/model_io.hpp"
#include "delayprop/network.hpp"

namespace delayprop {

// Lower-case hex SHA-256 of the bytes.
std::string sha256_hex(const std::string& bytes);

struct Scenario {
  std::string id;
  std::string name;
  std::map<std::string, std::vector<std::string>> evidence;
};

// A loaded, immutable network plus its mutable scenario store.
class SessionModel {
 public:
  SessionModel(std::string id, std::shared_ptr<const Network> network, std::string config_hash,
               std::string created);

  const std::string& id() const { return id_; }
  const Network& network() const { return *network_; }
  const std::string& config_hash() const { return hash_; }
  const std::string& created() const { return created_; }

  // Evidence is validated against the network (EvidenceError otherwise).
  Scenario add_scenario(std::string name, const json& evidence);
  std::optional<Scenario> scenario(const std::string& id) const;
  std::vector<Scenario> scenarios() const;
  bool remove_scenario(const std::string& id);

 private:
  std::string id_;
  std::shared_ptr<const Network> network_;
  std::string hash_;
  std::string created_;
  mutable std::mutex mutex_;
  std::map<std::string, Scenario> scenarios_;
  std::uint64_t next_scenario_ = 1;
};

class ModelRegistry {
 public:
  struct Added {
    std::shared_ptr<SessionModel> model;
    bool created = false;  // false when identical bytes were already loaded
  };

  // Parses a network document (spec plus optional tables). The id is the
  // first 16 hex digits of the SHA-256 of the bytes. Throws ConfigError or
  // DataError on invalid documents.
  Added add(const std::string& document_bytes);
  std::shared_ptr<SessionModel> get(const std::string& id) const;
  std::vector<std::shared_ptr<SessionModel>> list() const;

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<SessionModel>> models_;
};

struct HttpRequest {
  std::string method;
  std::string path;
  std::string body;
  // Multipart form fields (POST /models accepts "config" and "tables").
  std::map<std::string, std::string> parts;
};

struct HttpResponse {
  int status = 200;
  std::string body;
};

// Transport-independent request router for the HTTP API. JSON bodies are
// written canonically so equal answers are byte-identical.
class Service {
 public:
  // Loads every *.json model in model_dir (when given); uploaded models are
  // saved there as <id>.json.
  explicit Service(std::filesystem::path model_dir = {});

  HttpResponse handle(const HttpRequest& request);
  ModelRegistry& registry() { return registry_; }

 private:
  HttpResponse post_model(const HttpRequest& request);
  HttpResponse compare(SessionModel& model, const json& body);

  std::filesystem::path model_dir_;
  ModelRegistry registry_;
};

// Blocking HTTP server on host:port.
void serve(Service& service, const std::string& host, int port);

// HTTP server on a background thread; port 0 binds a free port.
class BackgroundServer {
 public:
  BackgroundServer(Service& service, const std::string& host, int port = 0);
  ~BackgroundServer();
  BackgroundServer(const BackgroundServer&) = delete;
  BackgroundServer& operator=(const BackgroundServer&) = delete;

  int port() const { return port_; }
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

// "host:port" from $DELAYPROP_ADDR, defaulting to 127.0.0.1:8080.
std::pair<std::string, int> service_address();

}  // namespace delayprop
