#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "delayprop/inference.hpp"
#include "delayprop/model_io.hpp"

namespace delayprop {

struct Query {
  EvidenceSet evidence;
  std::vector<std::size_t> nodes;  // all nodes when the request lists none
};

// Parses {evidence: {node: [state labels]}, query: [nodes]}. Both keys are
// optional. Throws EvidenceError on unknown nodes/states or a malformed body.
Query parse_query(const Network& network, const json& body);

// Evidence labels as a validated map (shared by queries and saved scenarios).
std::map<std::string, std::vector<std::string>> parse_evidence(const Network& network,
                                                               const json& evidence);

// {posteriors: {node: [p]}, expected: {node: minutes}, evidence_logprob}
json to_json(const PosteriorSet& posterior);

// parse_query + posterior + to_json. Throws InconsistentEvidence for
// zero-probability evidence.
json answer_query(const Network& network, const json& body);

}  // namespace delayprop
