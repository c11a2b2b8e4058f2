#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "delayprop/network.hpp"

namespace delayprop {

using json = nlohmann::json;

json to_json(const BinScheme& scheme);
BinScheme bin_scheme_from_json(const json& j);

json to_json(const PiecewiseRegression& model);
PiecewiseRegression regression_from_json(const json& j);

// {nodes:[{name, bins|states, parents, prior:{type, regression}}],
//  case_weight, prior_strength, max_rows}
json to_json(const NetworkSpec& spec);
NetworkSpec spec_from_json(const json& j);

// Spec document plus tables:[{node, rows:[[pseudo-counts]]}].
json to_json(const Network& network);
// Builds the network from the spec part; a "tables" array, when present,
// replaces the prior tables. Throws ConfigError on schema violations.
Network network_from_json(const json& j);

// Sorted keys, no whitespace, floats at 12 significant digits; non-finite
// numbers become null.
std::string canonical_dump(const json& j);

json load_json_file(const std::filesystem::path& path);
void save_json_file(const std::filesystem::path& path, const json& j);

}  // namespace delayprop
