#include "delayprop/query.hpp"

#include <numeric>

#include "delayprop/errors.hpp"

namespace delayprop {

std::map<std::string, std::vector<std::string>> parse_evidence(const Network& network,
                                                               const json& evidence) {
  std::map<std::string, std::vector<std::string>> labels;
  if (evidence.is_null()) return labels;
  if (!evidence.is_object()) throw EvidenceError("evidence must be an object of node -> [states]");
  for (const auto& [name, states] : evidence.items()) {
    if (!states.is_array()) throw EvidenceError("evidence for '" + name + "' must be an array of states");
    std::vector<std::string> list;
    for (const auto& s : states) {
      if (!s.is_string()) throw EvidenceError("evidence states for '" + name + "' must be labels");
      list.push_back(s.get<std::string>());
    }
    labels[name] = std::move(list);
  }
  EvidenceSet::from_labels(network, labels);
  return labels;
}

Query parse_query(const Network& network, const json& body) {
  if (!body.is_object()) throw EvidenceError("query body must be a JSON object");
  Query q;
  q.evidence = EvidenceSet::from_labels(network, parse_evidence(network, body.value("evidence", json())));
  if (body.contains("query") && !body.at("query").is_null()) {
    const auto& list = body.at("query");
    if (!list.is_array()) throw EvidenceError("query must be an array of node names");
    for (const auto& n : list) {
      if (!n.is_string()) throw EvidenceError("query entries must be node names");
      q.nodes.push_back(network.require(n.get<std::string>()));
    }
  }
  if (q.nodes.empty()) {
    q.nodes.resize(network.size());
    std::iota(q.nodes.begin(), q.nodes.end(), std::size_t{0});
  }
  return q;
}

json to_json(const PosteriorSet& p) {
  json posteriors = json::object();
  for (const auto& [name, v] : p.posteriors) posteriors[name] = v;
  json expected = json::object();
  for (const auto& [name, e] : p.expected) expected[name] = e;
  return {{"posteriors", posteriors}, {"expected", expected}, {"evidence_logprob", p.evidence_logprob}};
}

json answer_query(const Network& network, const json& body) {
  const auto q = parse_query(network, body);
  return to_json(posterior(network, q.evidence, q.nodes));
}

}  // namespace delayprop
