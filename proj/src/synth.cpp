#include "delayprop/synth.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <optional>

#include "delayprop/errors.hpp"
#include "delayprop/inference.hpp"

#ifndef DELAYPROP_SCENARIO_DIR
#define DELAYPROP_SCENARIO_DIR "scenarios"
#endif

namespace delayprop {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Inclusive range of whole seconds; infinite ends mark open tails.
struct SecRange {
  double lo;
  double hi;
  bool empty() const { return lo > hi; }
};

double exp_draw(Rng& rng, double mean_sec) { return -mean_sec * std::log(1.0 - rng.uniform()); }

double sample_seconds(const SecRange& r, double tail_mean_sec, Rng& rng) {
  if (r.empty()) throw ConfigError("empty emission range");
  if (std::isfinite(r.lo) && std::isfinite(r.hi)) {
    const double width = r.hi - r.lo + 1.0;
    return r.lo + std::min(std::floor(rng.uniform() * width), width - 1.0);
  }
  if (std::isfinite(r.lo)) return r.lo + std::floor(exp_draw(rng, tail_mean_sec));
  if (std::isfinite(r.hi)) return r.hi - std::floor(exp_draw(rng, tail_mean_sec));
  throw ConfigError("emission range unbounded on both sides");
}

// Draw from r, rejecting values below floor_sec (truncated tails).
double sample_with_floor(const SecRange& r, double tail_mean_sec, double floor_sec, Rng& rng) {
  SecRange bounded{std::max(r.lo, floor_sec), r.hi};
  if (bounded.empty()) throw ConfigError("emission floor leaves an empty bin");
  if (std::isfinite(bounded.lo) && std::isfinite(bounded.hi)) {
    return sample_seconds(bounded, tail_mean_sec, rng);
  }
  for (;;) {
    const double v = sample_seconds(r, tail_mean_sec, rng);
    if (v >= floor_sec) return v;
  }
}

struct NodeEmitter {
  std::optional<std::size_t> index;
  SecRange range(const Network& net, int state, double floor_min) const {
    const auto& scheme = *net.variable(*index).bins;
    const auto k = static_cast<std::size_t>(state);
    const double lo = scheme.lower(k);
    const double hi = scheme.upper(k);
    SecRange r{std::isfinite(lo) ? std::ceil(lo * 60.0) : -kInf,
               std::isfinite(hi) ? std::ceil(hi * 60.0) - 1.0 : kInf};
    if (std::isfinite(floor_min)) r.lo = std::max(r.lo, std::ceil(floor_min * 60.0));
    return r;
  }
};

EpochSeconds secs(double minutes) { return static_cast<EpochSeconds>(std::llround(minutes * 60.0)); }

}  // namespace

GroundTruth ground_truth_from_json(const json& j) {
  GroundTruth gt{network_from_json(j), {}};
  if (!j.contains("tables")) throw ConfigError("scenario needs ground-truth tables");
  if (j.contains("emission")) {
    const auto& e = j.at("emission");
    auto& s = gt.emission;
    try {
      s.base_time = e.value("base_time", s.base_time);
      s.spacing_sec = e.value("spacing_sec", s.spacing_sec);
      s.origin = e.value("origin", s.origin);
      s.destination = e.value("destination", s.destination);
      s.previous_origin = e.value("previous_origin", s.previous_origin);
      s.unimpeded_taxi_out_min = e.value("unimpeded_taxi_out_min", s.unimpeded_taxi_out_min);
      s.unimpeded_taxi_in_min = e.value("unimpeded_taxi_in_min", s.unimpeded_taxi_in_min);
      s.plan_enroute_min = e.value("plan_enroute_min", s.plan_enroute_min);
      s.previous_block_min = e.value("previous_block_min", s.previous_block_min);
      s.nom_to_min = e.value("nom_to_min", s.nom_to_min);
      s.scheduled_turn_min = e.value("scheduled_turn_min", s.scheduled_turn_min);
      s.gdp_time_lo_min = e.value("gdp_time_lo_min", s.gdp_time_lo_min);
      s.gdp_time_hi_min = e.value("gdp_time_hi_min", s.gdp_time_hi_min);
      s.tail_mean = e.value("tail_mean", s.tail_mean);
      s.floor = e.value("floor", s.floor);
      s.defaults = e.value("defaults", s.defaults);
    } catch (const json::exception& ex) {
      throw ConfigError(std::string("invalid emission section: ") + ex.what());
    }
  }
  for (const auto* derived : {"gdp_time", "gdp_gate"}) {
    if (gt.network.index_of(derived)) {
      throw ConfigError(std::string("scenario node '") + derived +
                        "' is derived from record times and cannot be emitted");
    }
  }
  return gt;
}

json to_json(const GroundTruth& gt) {
  json j = to_json(gt.network);
  const auto& s = gt.emission;
  j["emission"] = {{"base_time", s.base_time},
                   {"spacing_sec", s.spacing_sec},
                   {"origin", s.origin},
                   {"destination", s.destination},
                   {"previous_origin", s.previous_origin},
                   {"unimpeded_taxi_out_min", s.unimpeded_taxi_out_min},
                   {"unimpeded_taxi_in_min", s.unimpeded_taxi_in_min},
                   {"plan_enroute_min", s.plan_enroute_min},
                   {"previous_block_min", s.previous_block_min},
                   {"nom_to_min", s.nom_to_min},
                   {"scheduled_turn_min", s.scheduled_turn_min},
                   {"gdp_time_lo_min", s.gdp_time_lo_min},
                   {"gdp_time_hi_min", s.gdp_time_hi_min},
                   {"tail_mean", s.tail_mean},
                   {"floor", s.floor},
                   {"defaults", s.defaults}};
  return j;
}

std::filesystem::path scenario_dir() {
  if (const char* env = std::getenv("DELAYPROP_SCENARIO_DIR"); env && *env) return env;
  return DELAYPROP_SCENARIO_DIR;
}

GroundTruth default_scenario() {
  return ground_truth_from_json(load_json_file(scenario_dir() / "default_scenario.json"));
}

SyntheticData generate(const GroundTruth& gt, std::size_t n, std::uint64_t seed) {
  const Network& net = gt.network;
  const EmissionSpec& em = gt.emission;
  SyntheticData out;
  out.truth = forward_sample(net, n, seed);
  Rng rng(seed * 6364136223846793005ULL + 1442695040888963407ULL);

  auto node = [&](const char* name) { return NodeEmitter{net.index_of(name)}; };
  const auto gip = node("gate_in_prev");
  const auto ta = node("turn_around");
  const auto go = node("gate_out");
  const auto to = node("taxi_out");
  const auto ab = node("airborne");
  const auto ti = node("taxi_in");
  const auto gid = node("gate_in_dest");
  const auto gdp = net.index_of("gdp");

  auto floor_of = [&](const NodeEmitter& e, double fallback) {
    auto it = em.floor.find(net.name(*e.index));
    return it != em.floor.end() ? it->second : fallback;
  };
  auto tail_sec = [&](const NodeEmitter& e) {
    auto it = em.tail_mean.find(net.name(*e.index));
    const double m = it != em.tail_mean.end() ? it->second : net.variable(*e.index).bins->tail_halfwidth();
    return m * 60.0;
  };
  for (const auto* e : {&gip, &ta, &go, &to, &ab, &ti, &gid}) {
    if (e->index && !net.variable(*e->index).is_binned()) {
      throw ConfigError("delay node '" + net.name(*e->index) + "' must be binned");
    }
  }
  const double no_floor = -kInf;
  const double ta_floor = -em.scheduled_turn_min;

  auto label = [&](const Assignment& a, const char* name) -> std::string {
    if (auto i = net.index_of(name)) return net.variable(*i).states[static_cast<std::size_t>(a[*i])];
    auto d = em.defaults.find(name);
    return d != em.defaults.end() ? d->second : std::string("NA");
  };

  for (std::size_t c = 0; c < n; ++c) {
    const Assignment& a = out.truth[c];
    std::vector<double> emitted(net.size(), std::numeric_limits<double>::quiet_NaN());
    auto emit = [&](const NodeEmitter& e, double floor_min) -> double {
      if (!e.index) return 0.0;
      const auto r = e.range(net, a[*e.index], no_floor);
      const double v = sample_with_floor(r, tail_sec(e), std::ceil(floor_min * 60.0), rng);
      emitted[*e.index] = v / 60.0;
      return v;
    };

    double gip_s = 0.0;
    double ta_s = 0.0;
    double go_s = 0.0;
    if (gip.index && ta.index && go.index) {
      const auto A = gip.range(net, a[*gip.index], floor_of(gip, no_floor));
      const auto B = ta.range(net, a[*ta.index], floor_of(ta, ta_floor));
      const auto C = go.range(net, a[*go.index], floor_of(go, no_floor));
      const SecRange Cf{std::max(C.lo, A.lo + B.lo), std::min(C.hi, A.hi + B.hi)};
      if (Cf.empty()) {
        throw ConfigError("gate_out bin " + net.variable(*go.index).states[static_cast<std::size_t>(a[*go.index])] +
                          " cannot equal gate_in_prev + turn_around for the sampled bins");
      }
      go_s = sample_seconds(Cf, tail_sec(go), rng);
      const SecRange Ar{std::max(A.lo, go_s - B.hi), std::min(A.hi, go_s - B.lo)};
      gip_s = sample_seconds(Ar, tail_sec(gip), rng);
      ta_s = go_s - gip_s;
      emitted[*gip.index] = gip_s / 60.0;
      emitted[*ta.index] = ta_s / 60.0;
      emitted[*go.index] = go_s / 60.0;
    } else {
      gip_s = emit(gip, floor_of(gip, no_floor));
      if (go.index) {
        go_s = emit(go, floor_of(go, no_floor));
        ta_s = go_s - gip_s;
        if (ta.index) emitted[*ta.index] = ta_s / 60.0;
      } else {
        ta_s = emit(ta, floor_of(ta, ta_floor));
        go_s = gip_s + ta_s;
      }
    }
    const double to_s = to.index ? emit(to, floor_of(to, -em.unimpeded_taxi_out_min)) : 0.0;
    const double ab_s = ab.index ? emit(ab, floor_of(ab, 1.0 - em.plan_enroute_min)) : 0.0;
    const double ti_s = ti.index ? emit(ti, floor_of(ti, -em.unimpeded_taxi_in_min)) : 0.0;
    const double gid_s = gid.index ? emit(gid, floor_of(gid, no_floor)) : 0.0;

    const EpochSeconds T = em.base_time + static_cast<EpochSeconds>(c) * em.spacing_sec;
    char tail[32];
    std::snprintf(tail, sizeof(tail), "N%06zu", c);

    FlightLegRecord prev;
    prev.tail_id = tail;
    prev.airline = label(a, "airline");
    prev.origin = em.previous_origin;
    prev.destination = em.origin;
    prev.sch_gate_in = T;
    prev.act_gate_in = T + static_cast<EpochSeconds>(gip_s);
    prev.act_wheels_on = *prev.act_gate_in - secs(em.unimpeded_taxi_in_min);
    prev.act_wheels_off = *prev.act_wheels_on - secs(em.plan_enroute_min);
    prev.act_gate_out = *prev.act_wheels_off - secs(em.unimpeded_taxi_out_min);
    prev.sch_gate_out = T - secs(em.previous_block_min);
    prev.unimpeded_taxi_out_min = em.unimpeded_taxi_out_min;
    prev.unimpeded_taxi_in_min = em.unimpeded_taxi_in_min;
    prev.plan_enroute_min = em.plan_enroute_min;
    prev.nom_to_min = em.nom_to_min;
    prev.weather_dest = label(a, "weather_dest");
    prev.enroute_storm = label(a, "enroute_storm");
    prev.runway_config = label(a, "runway_config");

    FlightLegRecord leg = prev;
    leg.origin = em.origin;
    leg.destination = em.destination;
    leg.sch_gate_out = T + secs(em.scheduled_turn_min);
    leg.act_gate_out = *leg.sch_gate_out + static_cast<EpochSeconds>(go_s);
    leg.act_wheels_off = *leg.act_gate_out + secs(em.unimpeded_taxi_out_min) + static_cast<EpochSeconds>(to_s);
    leg.act_wheels_on = *leg.act_wheels_off + secs(em.plan_enroute_min) + static_cast<EpochSeconds>(ab_s);
    leg.act_gate_in = *leg.act_wheels_on + secs(em.unimpeded_taxi_in_min) + static_cast<EpochSeconds>(ti_s);
    leg.sch_gate_in = *leg.act_gate_in - static_cast<EpochSeconds>(gid_s);
    if (gdp && net.variable(*gdp).states[static_cast<std::size_t>(a[*gdp])] == "true") {
      const SecRange hold{std::ceil(em.gdp_time_lo_min * 60.0), std::floor(em.gdp_time_hi_min * 60.0)};
      const double hold_s = sample_seconds(hold, 60.0, rng);
      leg.edct_off_sec = *leg.act_gate_out + secs(em.nom_to_min) + static_cast<EpochSeconds>(hold_s);
    } else {
      leg.edct_off_sec = -1;
    }

    out.records.push_back(std::move(prev));
    out.records.push_back(std::move(leg));
    out.timestamps.push_back(*out.records.back().sch_gate_out);
    out.emitted.push_back(std::move(emitted));
  }
  return out;
}

}  // namespace delayprop
