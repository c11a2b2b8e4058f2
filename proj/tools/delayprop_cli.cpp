// delayprop command-line front end.
//
// Exit status: 0 success, 1 usage error, 2 data/config error.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "delayprop/cases.hpp"
#include "delayprop/csv.hpp"
#include "delayprop/errors.hpp"
#include "delayprop/evaluation.hpp"
#include "delayprop/flight_data.hpp"
#include "delayprop/model_io.hpp"
#include "delayprop/query.hpp"
#include "delayprop/regression.hpp"
#include "delayprop/service.hpp"
#include "delayprop/synth.hpp"

namespace fs = std::filesystem;
using namespace delayprop;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json load_logged(const fs::path& path) {
  const auto bytes = read_file(path);
  std::cerr << "delayprop: config hash " << sha256_hex(bytes) << " (" << path.string() << ")\n";
  try {
    return json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

CaseTable load_cases(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_cases(in);
}

std::vector<double> parse_weights(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const double w = std::stod(item, &used);
      if (used != item.size() || !(w > 0)) throw std::invalid_argument(item);
      out.push_back(w);
    } catch (const std::exception&) {
      throw CLI::ValidationError("--weights", "not a positive number: '" + item + "'");
    }
  }
  if (out.empty()) throw CLI::ValidationError("--weights", "no weights given");
  return out;
}

// Explicit cutoff, else the timestamp at the given fraction of sorted cases.
EpochSeconds resolve_cutoff(std::vector<EpochSeconds> ts, std::optional<EpochSeconds> cutoff,
                            double train_fraction) {
  if (cutoff) return *cutoff;
  if (ts.empty()) return 0;
  std::sort(ts.begin(), ts.end());
  const auto k = static_cast<std::size_t>(train_fraction * static_cast<double>(ts.size()));
  return k >= ts.size() ? ts.back() + 1 : ts[k];
}

CaseTable rows_before(const CaseTable& table, EpochSeconds cutoff) {
  CaseTable out;
  out.columns = table.columns;
  for (std::size_t r = 0; r < table.size(); ++r) {
    if (table.timestamps[r] < cutoff) {
      out.timestamps.push_back(table.timestamps[r]);
      out.rows.push_back(table.rows[r]);
    }
  }
  return out;
}

struct Options {
  // simulate
  std::string scenario;
  std::size_t n = 0;
  std::uint64_t seed = 1;
  std::string out;
  std::string truth;
  // ingest
  std::string records;
  std::string origin;
  std::string dest;
  double gdp_threshold = 0.0;
  // fit / train / eval / sweep
  std::string config;
  std::string cases;
  std::string model;
  std::size_t folds = 5;
  double min_improvement = 0.01;
  double sigma_floor = 0.5;
  std::optional<double> weight;
  std::optional<EpochSeconds> cutoff;
  double train_fraction = 1.0;
  std::string weights;
  std::optional<double> prior_strength;
  std::string out_dir;
  bool plot = false;
  std::size_t generated = 0;
  bool ll_floor = false;
  // query
  std::string query_file;
  std::vector<std::string> evidence;
  std::vector<std::string> nodes;
  // serve
  std::string addr;
  std::string model_dir;
  std::vector<std::string> preload;
};

int cmd_simulate(const Options& o) {
  const fs::path path = o.scenario.empty() ? scenario_dir() / "default_scenario.json" : fs::path(o.scenario);
  const auto gt = ground_truth_from_json(load_logged(path));
  const auto data = generate(gt, o.n, o.seed);
  auto out = open_out(o.out);
  write_records(out, data.records);
  if (!o.truth.empty()) {
    auto t = open_out(o.truth);
    std::vector<std::string> header{"case"};
    for (std::size_t i = 0; i < gt.network.size(); ++i) header.push_back(gt.network.name(i));
    csv::write_row(t, header);
    for (std::size_t c = 0; c < data.truth.size(); ++c) {
      std::vector<std::string> row{std::to_string(c)};
      for (std::size_t i = 0; i < gt.network.size(); ++i) {
        row.push_back(gt.network.variable(i).states[static_cast<std::size_t>(data.truth[c][i])]);
      }
      csv::write_row(t, row);
    }
  }
  std::cerr << "delayprop: wrote " << data.records.size() << " records for " << o.n << " cases\n";
  return 0;
}

int cmd_ingest(const Options& o) {
  std::ifstream in(o.records);
  if (!in) throw DataError("cannot open " + o.records);
  const auto parsed = parse_records(in);
  for (const auto& e : parsed.errors) {
    std::cerr << o.records << ":" << e.line << ": " << e.message << "\n";
  }
  IngestOptions opts{o.origin, o.dest, GdpOptions{o.gdp_threshold}};
  const auto table = ingest_records(parsed.records, opts);
  auto out = open_out(o.out);
  write_cases(out, table);
  std::cerr << "delayprop: " << parsed.records.size() << " records, " << parsed.errors.size()
            << " skipped, " << table.size() << " cases\n";
  return 0;
}

int cmd_fit(const Options& o) {
  json doc = load_logged(o.config);
  auto spec = spec_from_json(doc);
  auto table = load_cases(o.cases);
  if (o.cutoff) table = rows_before(table, *o.cutoff);
  FitOptions fo;
  fo.folds = o.folds;
  fo.min_improvement = o.min_improvement;
  fo.sigma_floor = o.sigma_floor;
  for (auto& node : spec.nodes) {
    if (!node.variable.is_binned()) continue;
    auto model = fit_piecewise(table, node.variable.name, node.parents, fo);
    std::cerr << "delayprop: " << node.variable.name << " <- {";
    for (std::size_t i = 0; i < model.terms.size(); ++i) {
      std::cerr << (i ? ", " : "") << model.terms[i].predictor;
    }
    std::cerr << "} sigma " << model.sigma << " cv " << model.cv_score << "\n";
    node.prior = PriorSource::from(std::move(model));
  }
  build_network(spec);
  auto out = open_out(o.out);
  out << to_json(spec).dump(1) << "\n";
  return 0;
}

int cmd_train(const Options& o) {
  const auto prior = build_network(spec_from_json(load_logged(o.config)));
  const auto table = load_cases(o.cases);
  const auto enc = encode_cases(prior, table);
  std::vector<Assignment> cases;
  for (std::size_t i = 0; i < enc.cases.size(); ++i) {
    if (!o.cutoff || enc.timestamps[i] < *o.cutoff) cases.push_back(enc.cases[i]);
  }
  const double w = o.weight.value_or(prior.spec().case_weight);
  const auto trained = train(prior, cases, w);
  auto out = open_out(o.out);
  out << to_json(trained).dump(1) << "\n";
  std::cerr << "delayprop: trained on " << cases.size() << " cases (" << enc.dropped
            << " dropped) at weight " << w << "\n";
  return 0;
}

json sweep_json(const SweepResult& s) {
  json nodes = json::object();
  for (const auto& n : s.nodes) {
    json jn = {{"train_mse", s.train_mse.at(n)},
               {"test_mse", s.test_mse.at(n)},
               {"regression_only", {{"train", s.regression_only_train.at(n)},
                                    {"test", s.regression_only_test.at(n)}}},
               {"counts_only", {{"train", s.counts_only_train.at(n)}, {"test", s.counts_only_test.at(n)}}}};
    std::map<double, double> tr;
    std::map<double, double> te;
    for (std::size_t i = 0; i < s.weights.size(); ++i) {
      tr[s.weights[i]] = s.train_mse.at(n)[i];
      te[s.weights[i]] = s.test_mse.at(n)[i];
    }
    for (auto [key, src] : {std::pair{"train_scaled", &tr}, std::pair{"test_scaled", &te}}) {
      try {
        json v = json::array();
        for (const auto& [w, x] : scaled_mse(*src)) v.push_back(x);
        jn[key] = v;
      } catch (const std::invalid_argument&) {
        jn[key] = nullptr;
      }
    }
    nodes[n] = jn;
  }
  return {{"weights", s.weights}, {"counts_only_weight", s.counts_only_weight}, {"nodes", nodes}};
}

void write_sweep_outputs(const SweepResult& s, const fs::path& csv_path, const fs::path& plot_dir) {
  auto csv_out = open_out(csv_path);
  write_sweep_csv(csv_out, s);
  if (!plot_dir.empty()) {
    auto a = open_out(plot_dir / "sweep_train.svg");
    write_sweep_svg(a, s, false);
    auto b = open_out(plot_dir / "sweep_test.svg");
    write_sweep_svg(b, s, true);
  }
}

int cmd_eval(const Options& o) {
  const auto model = network_from_json(load_logged(o.model));
  const auto enc = encode_cases(model, load_cases(o.cases));
  const auto cutoff = resolve_cutoff(enc.timestamps, o.cutoff, o.train_fraction);
  auto split = split_by_date(enc.cases, enc.timestamps, cutoff);
  for (const auto& w : split.warnings) std::cerr << "delayprop: warning: " << w << "\n";
  const fs::path dir = o.out_dir;

  json report = {{"cutoff", cutoff},
                 {"cases", {{"train", split.train.size()}, {"test", split.test.size()}, {"dropped", enc.dropped}}}};
  json nodes = json::object();
  std::vector<NodeEvaluation> test_eval;
  for (auto [label, part] : {std::pair{"train", &split.train}, std::pair{"test", &split.test}}) {
    if (part->empty()) continue;
    auto evals = evaluate_predictions(model, *part);
    const auto blanket = blanket_sq_error(model, *part);
    for (const auto& e : evals) {
      nodes[e.node][label] = {{"approx_mse", e.approx_mse},
                              {"accuracy", e.confusion.accuracy()},
                              {"mean", e.mean},
                              {"std", e.std},
                              {"cases", e.cases},
                              {"skipped", e.skipped},
                              {"blanket_mse", blanket.at(e.node).mse}};
    }
    if (std::string(label) == "test") test_eval = std::move(evals);
  }
  report["nodes"] = nodes;
  if (!test_eval.empty()) {
    auto c = open_out(dir / "confusion.csv");
    write_confusion_csv(c, model, test_eval);
  }
  if (!split.test.empty()) {
    const std::size_t n_gen = o.generated ? o.generated : split.test.size();
    const auto ll = ll_comparison(model, split.test, n_gen, o.seed, o.ll_floor ? 1e-9 : 0.0);
    report["loglik"] = {{"ks", ll.ks},
                        {"holdout", ll.holdout.size()},
                        {"generated", ll.generated.size()},
                        {"holdout_neg_inf", ll.holdout_neg_inf},
                        {"generated_neg_inf", ll.generated_neg_inf}};
    if (o.plot) {
      auto h = open_out(dir / "ll_hist.svg");
      write_ll_histogram_svg(h, ll);
    }
  }
  if (!o.weights.empty()) {
    if (split.train.empty() || split.test.empty()) {
      throw DataError("a weight sweep needs both training and test cases");
    }
    auto spec = model.spec();
    if (o.prior_strength) spec.prior_strength = *o.prior_strength;
    const auto weights = parse_weights(o.weights);
    const auto sweep = weight_sweep(spec, split.train, split.test, weights);
    write_sweep_outputs(sweep, dir / "sweep.csv", o.plot ? dir : fs::path());
    report["sweep"] = sweep_json(sweep);
  }
  auto out = open_out(dir / "report.json");
  out << canonical_dump(report) << "\n";
  return 0;
}

int cmd_sweep(const Options& o) {
  auto spec = spec_from_json(load_logged(o.config));
  if (o.prior_strength) spec.prior_strength = *o.prior_strength;
  const auto prior = build_network(spec);
  const auto enc = encode_cases(prior, load_cases(o.cases));
  const auto cutoff = resolve_cutoff(enc.timestamps, o.cutoff, o.train_fraction);
  auto split = split_by_date(enc.cases, enc.timestamps, cutoff);
  for (const auto& w : split.warnings) std::cerr << "delayprop: warning: " << w << "\n";
  if (split.train.empty() || split.test.empty()) {
    throw DataError("a weight sweep needs both training and test cases");
  }
  const auto sweep = weight_sweep(spec, split.train, split.test, parse_weights(o.weights));
  write_sweep_outputs(sweep, o.out, o.plot ? fs::path(o.out).parent_path() : fs::path());
  return 0;
}

int cmd_query(const Options& o) {
  const auto model = network_from_json(load_logged(o.model));
  json body = json::object();
  if (!o.query_file.empty()) {
    try {
      body = json::parse(read_file(o.query_file));
    } catch (const json::parse_error& e) {
      throw DataError(o.query_file + ": " + e.what());
    }
  }
  for (const auto& item : o.evidence) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw CLI::ValidationError("--evidence", "expected node=state[|state...]");
    json states = json::array();
    std::stringstream ss(item.substr(eq + 1));
    std::string s;
    while (std::getline(ss, s, '|')) states.push_back(s);
    body["evidence"][item.substr(0, eq)] = states;
  }
  if (!o.nodes.empty()) body["query"] = o.nodes;
  const auto text = canonical_dump(answer_query(model, body));
  if (o.out.empty()) {
    std::cout << text << "\n";
  } else {
    auto out = open_out(o.out);
    out << text << "\n";
  }
  return 0;
}

int cmd_serve(const Options& o) {
  std::string dir = o.model_dir;
  if (dir.empty()) {
    if (const char* env = std::getenv("DELAYPROP_MODEL_DIR"); env) dir = env;
  }
  Service service(dir);
  for (const auto& f : o.preload) {
    const auto bytes = read_file(f);
    std::cerr << "delayprop: config hash " << sha256_hex(bytes) << " (" << f << ")\n";
    const auto added = service.registry().add(bytes);
    std::cerr << "delayprop: model " << added.model->id() << " from " << f << "\n";
  }
  auto [host, port] = service_address();
  if (!o.addr.empty()) {
    const auto colon = o.addr.rfind(':');
    host = o.addr.substr(0, colon);
    port = std::stoi(o.addr.substr(colon + 1));
  }
  std::cerr << "delayprop: serving " << service.registry().list().size() << " model(s) on " << host << ":"
            << port << "\n";
  serve(service, host, port);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phase-linked Bayesian network toolkit for flight delay propagation"};
  app.require_subcommand(1);
  Options o;

  auto* sim = app.add_subcommand("simulate", "Generate flight-leg records from a ground-truth scenario");
  sim->add_option("--scenario", o.scenario, "Scenario JSON (default: shipped default scenario)")
      ->check(CLI::ExistingFile);
  sim->add_option("--n", o.n, "Number of cases")->required();
  sim->add_option("--seed", o.seed, "Random seed");
  sim->add_option("--out", o.out, "Records CSV")->required();
  sim->add_option("--truth", o.truth, "Optional CSV of true node states per case");

  auto* ing = app.add_subcommand("ingest", "Derive case variables from flight-leg records");
  ing->add_option("--records", o.records, "Records CSV")->required()->check(CLI::ExistingFile);
  ing->add_option("--out", o.out, "Case CSV")->required();
  ing->add_option("--origin", o.origin, "Keep legs departing this airport");
  ing->add_option("--dest", o.dest, "Keep legs arriving at this airport");
  ing->add_option("--gdp-threshold", o.gdp_threshold, "gdp_gate when gdp_time is below this (minutes)");

  auto* fit = app.add_subcommand("fit", "Fit piecewise regression priors for binned nodes");
  fit->add_option("--config", o.config, "Network config JSON")->required()->check(CLI::ExistingFile);
  fit->add_option("--cases", o.cases, "Case CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--out", o.out, "Config with fitted priors")->required();
  fit->add_option("--folds", o.folds, "Cross-validation folds")->check(CLI::Range(2, 1000));
  fit->add_option("--min-improvement", o.min_improvement, "Relative CV gain to keep a predictor");
  fit->add_option("--sigma-floor", o.sigma_floor, "Minimum residual sigma (minutes)");
  fit->add_option("--cutoff", o.cutoff, "Fit on cases scheduled before this epoch second");

  auto* tr = app.add_subcommand("train", "Dirichlet-multinomial update of the prior tables");
  tr->add_option("--config", o.config, "Network config JSON")->required()->check(CLI::ExistingFile);
  tr->add_option("--cases", o.cases, "Case CSV")->required()->check(CLI::ExistingFile);
  tr->add_option("--out", o.out, "Trained model JSON")->required();
  tr->add_option("--weight", o.weight, "Case weight (default: config case_weight)");
  tr->add_option("--cutoff", o.cutoff, "Train on cases scheduled before this epoch second");

  auto* ev = app.add_subcommand("eval", "Evaluate a trained model on a date split");
  ev->add_option("--model", o.model, "Trained model JSON")->required()->check(CLI::ExistingFile);
  ev->add_option("--cases", o.cases, "Case CSV")->required()->check(CLI::ExistingFile);
  ev->add_option("--out-dir", o.out_dir, "Directory for report.json and CSV/SVG outputs")->required();
  ev->add_option("--cutoff", o.cutoff, "Train/test boundary (epoch seconds)");
  ev->add_option("--train-fraction", o.train_fraction, "Without --cutoff: share of cases before the split")
      ->check(CLI::Range(0.0, 1.0));
  ev->add_option("--weights", o.weights, "Comma-separated case weights for a sweep");
  ev->add_option("--prior-strength", o.prior_strength, "Prior pseudo-count total per row for the sweep");
  ev->add_flag("--plot", o.plot, "Write SVG charts");
  ev->add_option("--seed", o.seed, "Seed for generated cases");
  ev->add_option("--generated", o.generated, "Generated cases for the likelihood comparison");
  ev->add_flag("--ll-floor", o.ll_floor, "Floor zero probabilities at 1e-9 in log-likelihoods");

  auto* sw = app.add_subcommand("sweep", "Case-weight sweep from a prior config");
  sw->add_option("--config", o.config, "Network config JSON")->required()->check(CLI::ExistingFile);
  sw->add_option("--cases", o.cases, "Case CSV")->required()->check(CLI::ExistingFile);
  sw->add_option("--out", o.out, "Sweep CSV")->required();
  sw->add_option("--weights", o.weights, "Comma-separated case weights")->default_val("1,3,10,30,100,300");
  sw->add_option("--cutoff", o.cutoff, "Train/test boundary (epoch seconds)");
  sw->add_option("--train-fraction", o.train_fraction, "Without --cutoff: share of cases before the split")
      ->check(CLI::Range(0.0, 1.0));
  sw->add_option("--prior-strength", o.prior_strength, "Prior pseudo-count total per row");
  sw->add_flag("--plot", o.plot, "Write SVG charts next to the CSV");

  auto* q = app.add_subcommand("query", "Posterior query against a trained model");
  q->add_option("--model", o.model, "Trained model JSON")->required()->check(CLI::ExistingFile);
  q->add_option("--query", o.query_file, "Query JSON {evidence, query}")->check(CLI::ExistingFile);
  q->add_option("--evidence", o.evidence, "node=state[|state...] (repeatable)");
  q->add_option("--nodes", o.nodes, "Query nodes (default: all)");
  q->add_option("--out", o.out, "Write the answer here instead of stdout");

  auto* sv = app.add_subcommand("serve", "HTTP what-if service");
  sv->add_option("--addr", o.addr, "host:port (default: $DELAYPROP_ADDR or 127.0.0.1:8080)");
  sv->add_option("--model-dir", o.model_dir, "Model directory (default: $DELAYPROP_MODEL_DIR)");
  sv->add_option("--model", o.preload, "Model JSON files to load")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  if (ev->parsed() && !o.cutoff && o.train_fraction == 1.0 && !o.weights.empty()) o.train_fraction = 0.7;
  if (sw->parsed() && !o.cutoff && o.train_fraction == 1.0) o.train_fraction = 0.7;

  try {
    if (sim->parsed()) return cmd_simulate(o);
    if (ing->parsed()) return cmd_ingest(o);
    if (fit->parsed()) return cmd_fit(o);
    if (tr->parsed()) return cmd_train(o);
    if (ev->parsed()) return cmd_eval(o);
    if (sw->parsed()) return cmd_sweep(o);
    if (q->parsed()) return cmd_query(o);
    if (sv->parsed()) return cmd_serve(o);
  } catch (const CLI::ParseError& e) {
    std::cerr << "delayprop: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "delayprop: error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
