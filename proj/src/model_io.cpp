#include "delayprop/model_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "delayprop/errors.hpp"

namespace delayprop {

namespace {

const char* kind_name(RegressionTerm::Kind k) {
  switch (k) {
    case RegressionTerm::Kind::linear: return "linear";
    case RegressionTerm::Kind::hinge: return "hinge";
    case RegressionTerm::Kind::categorical: return "categorical";
  }
  return "linear";
}

RegressionTerm::Kind kind_from(const std::string& s) {
  if (s == "linear") return RegressionTerm::Kind::linear;
  if (s == "hinge") return RegressionTerm::Kind::hinge;
  if (s == "categorical") return RegressionTerm::Kind::categorical;
  throw ConfigError("unknown regression term kind '" + s + "'");
}

template <class F>
auto schema_guard(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid ") + what + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid ") + what + ": " + e.what());
  }
}

void dump_canonical(const json& j, std::string& out) {
  switch (j.type()) {
    case json::value_t::object: {
      out.push_back('{');
      bool first = true;
      for (const auto& [k, v] : j.items()) {
        if (!first) out.push_back(',');
        first = false;
        out += json(k).dump();
        out.push_back(':');
        dump_canonical(v, out);
      }
      out.push_back('}');
      break;
    }
    case json::value_t::array: {
      out.push_back('[');
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out.push_back(',');
        dump_canonical(j[i], out);
      }
      out.push_back(']');
      break;
    }
    case json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) {
        out += "null";
        break;
      }
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.12g", v == 0.0 ? 0.0 : v);
      out += buf;
      break;
    }
    default:
      out += j.dump();
  }
}

}  // namespace

json to_json(const BinScheme& s) {
  return {{"edges", s.edges()},
          {"lower_open", s.lower_open()},
          {"upper_open", s.upper_open()},
          {"tail_halfwidth", s.tail_halfwidth()}};
}

BinScheme bin_scheme_from_json(const json& j) {
  return schema_guard("bin scheme", [&] {
    return BinScheme(j.at("edges").get<std::vector<double>>(), j.value("lower_open", true),
                     j.value("upper_open", true), j.value("tail_halfwidth", 0.0));
  });
}

json to_json(const PiecewiseRegression& m) {
  json predictors = json::array();
  json breakpoints = json::array();
  json terms = json::array();
  for (const auto& t : m.terms) {
    predictors.push_back(t.predictor);
    breakpoints.push_back(t.breakpoint ? json(*t.breakpoint) : json(nullptr));
    json term = {{"kind", kind_name(t.kind)}};
    if (t.kind == RegressionTerm::Kind::categorical) {
      term["levels"] = t.levels;
    } else {
      term["slopes"] = t.slopes;
    }
    terms.push_back(std::move(term));
  }
  return {{"response", m.response},
          {"predictors", predictors},
          {"breakpoints", breakpoints},
          {"coefficients", {{"intercept", m.intercept}, {"terms", terms}}},
          {"sigma", m.sigma},
          {"cv_score", m.cv_score}};
}

PiecewiseRegression regression_from_json(const json& j) {
  return schema_guard("regression", [&] {
    PiecewiseRegression m;
    m.response = j.value("response", std::string());
    m.sigma = j.at("sigma").get<double>();
    m.cv_score = j.value("cv_score", 0.0);
    const auto& coef = j.at("coefficients");
    m.intercept = coef.at("intercept").get<double>();
    const auto predictors = j.value("predictors", std::vector<std::string>{});
    const auto& terms = coef.value("terms", json::array());
    if (terms.size() != predictors.size()) {
      throw ConfigError("regression has " + std::to_string(predictors.size()) +
                        " predictors but " + std::to_string(terms.size()) + " terms");
    }
    const auto& bps = j.value("breakpoints", json::array());
    for (std::size_t i = 0; i < terms.size(); ++i) {
      RegressionTerm t;
      t.predictor = predictors[i];
      t.kind = kind_from(terms[i].at("kind").get<std::string>());
      if (t.kind == RegressionTerm::Kind::categorical) {
        t.levels = terms[i].at("levels").get<std::map<std::string, double>>();
      } else {
        t.slopes = terms[i].at("slopes").get<std::vector<double>>();
        const std::size_t want = t.kind == RegressionTerm::Kind::hinge ? 2 : 1;
        if (t.slopes.size() != want) throw ConfigError("wrong slope count for " + t.predictor);
      }
      if (t.kind == RegressionTerm::Kind::hinge) {
        if (i >= bps.size() || bps[i].is_null()) {
          throw ConfigError("hinge term for " + t.predictor + " needs a breakpoint");
        }
        t.breakpoint = bps[i].get<double>();
      }
      m.terms.push_back(std::move(t));
    }
    return m;
  });
}

json to_json(const NetworkSpec& spec) {
  json nodes = json::array();
  for (const auto& n : spec.nodes) {
    json node = {{"name", n.variable.name}, {"parents", n.parents}};
    if (n.variable.is_binned()) {
      node["bins"] = to_json(*n.variable.bins);
    } else {
      node["states"] = n.variable.states;
    }
    if (n.prior.kind == PriorSource::Kind::regression && n.prior.regression) {
      node["prior"] = {{"type", "regression"}, {"regression", to_json(*n.prior.regression)}};
    } else {
      node["prior"] = {{"type", "uniform"}};
    }
    nodes.push_back(std::move(node));
  }
  return {{"nodes", nodes},
          {"case_weight", spec.case_weight},
          {"prior_strength", spec.prior_strength},
          {"max_rows", spec.max_rows}};
}

NetworkSpec spec_from_json(const json& j) {
  return schema_guard("network config", [&] {
    NetworkSpec spec;
    spec.case_weight = j.value("case_weight", spec.case_weight);
    spec.prior_strength = j.value("prior_strength", spec.prior_strength);
    spec.max_rows = j.value("max_rows", spec.max_rows);
    for (const auto& jn : j.at("nodes")) {
      NodeSpec n;
      const auto name = jn.at("name").get<std::string>();
      if (jn.contains("bins")) {
        n.variable = Variable::binned(name, bin_scheme_from_json(jn.at("bins")));
      } else if (jn.contains("states")) {
        n.variable = Variable::categorical(name, jn.at("states").get<std::vector<std::string>>());
      } else {
        throw ConfigError("node '" + name + "' needs bins or states");
      }
      n.parents = jn.value("parents", std::vector<std::string>{});
      if (jn.contains("prior")) {
        const auto& prior = jn.at("prior");
        const auto type = prior.value("type", std::string("uniform"));
        if (type == "regression") {
          auto model = regression_from_json(prior.at("regression"));
          if (model.response.empty()) model.response = name;
          n.prior = PriorSource::from(std::move(model));
        } else if (type != "uniform") {
          throw ConfigError("unknown prior type '" + type + "'");
        }
      }
      spec.nodes.push_back(std::move(n));
    }
    return spec;
  });
}

json to_json(const Network& network) {
  json j = to_json(network.spec());
  json tables = json::array();
  for (std::size_t i = 0; i < network.size(); ++i) {
    const auto& t = network.table(i);
    json rows = json::array();
    for (std::size_t r = 0; r < t.rows(); ++r) {
      const auto c = t.row_counts(r);
      rows.push_back(std::vector<double>(c.begin(), c.end()));
    }
    tables.push_back({{"node", t.node()}, {"rows", std::move(rows)}});
  }
  j["tables"] = std::move(tables);
  return j;
}

Network network_from_json(const json& j) {
  Network net = build_network(spec_from_json(j));
  if (!j.contains("tables")) return net;
  return schema_guard("tables", [&] {
    const auto& jt = j.at("tables");
    if (jt.size() != net.size()) throw ConfigError("tables must list every node once");
    std::vector<ConditionalTable> tables;
    for (std::size_t i = 0; i < net.size(); ++i) {
      const auto& entry = jt[i];
      const auto node = entry.at("node").get<std::string>();
      if (node != net.name(i)) {
        throw ConfigError("table " + std::to_string(i) + " is for '" + node + "', expected '" +
                          net.name(i) + "'");
      }
      const auto& proto = net.table(i);
      const auto& rows = entry.at("rows");
      if (rows.size() != proto.rows()) {
        throw ConfigError("table for '" + node + "' has " + std::to_string(rows.size()) +
                          " rows, expected " + std::to_string(proto.rows()));
      }
      std::vector<double> counts;
      counts.reserve(proto.rows() * proto.states());
      for (const auto& row : rows) {
        if (row.size() != proto.states()) {
          throw ConfigError("table for '" + node + "' has a row of the wrong width");
        }
        for (const auto& c : row) counts.push_back(c.get<double>());
      }
      tables.emplace_back(node, proto.parent_cardinalities(), proto.states(), std::move(counts));
    }
    return net.with_tables(std::move(tables));
  });
}

std::string canonical_dump(const json& j) {
  std::string out;
  dump_canonical(j, out);
  return out;
}

json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void save_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(1) << '\n';
}

}  // namespace delayprop
