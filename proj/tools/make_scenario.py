#!/usr/bin/env python3
"""Write scenarios/default_scenario.json.

Ground-truth CPTs are discretized normal regressions over parent midpoints
(gate_out additionally restricted to bins reachable as gate_in_prev +
turn_around). Node priors are the same regressions with biased intercepts,
shrunk slopes and inflated sigmas.
"""
import itertools
import json
import math
import pathlib

from scipy.stats import norm

DELAY = {"edges": [-60, -45, -30, -15, 0, 15, 30, 45, 60, 75, 90, 105, 120]}
TAXI_OUT = {"edges": [0, 15, 30, 45, 60]}
AIRBORNE = {"edges": [-15, 0, 15, 30, 45]}
TAXI_IN = {"edges": [0, 15, 30, 45]}
SCHEDULED_TURN = 90.0

CATEGORICAL = {
    "airline": (["AA", "UA", "DL"], [0.35, 0.25, 0.40]),
    "weather_dest": (["VMC", "MVMC", "IMC"], [0.65, 0.22, 0.13]),
    "enroute_storm": (["none", "light", "severe"], [0.70, 0.20, 0.10]),
    "runway_config": (["west", "east"], [0.60, 0.40]),
}

# name -> (bins, parents, true regression as (intercept, terms, sigma))
DELAYS = [
    ("gate_in_prev", DELAY, ["airline"],
     (6.0, [("airline", "categorical", {"UA": 5.0, "DL": -4.0})], 18.0)),
    ("turn_around", DELAY, ["gate_in_prev", "gdp"],
     (2.0, [("gate_in_prev", "hinge", (0.0, -0.5), 15.0),
            ("gdp", "categorical", {"true": 14.0})], 10.0)),
    ("gate_out", DELAY, ["gate_in_prev", "turn_around"],
     (0.0, [("gate_in_prev", "linear", 1.0), ("turn_around", "linear", 1.0)], 8.0)),
    ("taxi_out", TAXI_OUT, ["gate_out", "runway_config"],
     (3.0, [("gate_out", "linear", 0.12), ("runway_config", "categorical", {"east": 8.0})], 8.0)),
    ("airborne", AIRBORNE, ["taxi_out", "enroute_storm", "weather_dest"],
     (-2.0, [("taxi_out", "linear", -0.1),
             ("enroute_storm", "categorical", {"light": 9.0, "severe": 26.0}),
             ("weather_dest", "categorical", {"MVMC": 4.0, "IMC": 11.0})], 7.0)),
    ("taxi_in", TAXI_IN, ["airborne", "weather_dest"],
     (3.0, [("airborne", "linear", 0.08), ("weather_dest", "categorical", {"IMC": 6.0})], 5.0)),
    ("gate_in_dest", DELAY, ["gate_out", "taxi_out", "airborne", "taxi_in"],
     (-12.0, [("gate_out", "linear", 1.0), ("taxi_out", "linear", 1.0),
              ("airborne", "linear", 1.0), ("taxi_in", "linear", 1.0)], 6.0)),
]

GDP_GIVEN_WEATHER = {"VMC": 0.05, "MVMC": 0.20, "IMC": 0.50}

PERTURB_INTERCEPT = 3.0
PERTURB_SLOPE = 0.85
PERTURB_SIGMA = 1.3
# Per-row prior pseudo-count total used for the case-weight sweep. With a
# strength of 1 a single case outweighs the prior at every w >= 1.
SWEEP_PRIOR_STRENGTH = 100.0


def bins_json(b):
    return {"edges": b["edges"], "lower_open": True, "upper_open": True, "tail_halfwidth": 0.0}


def tail_halfwidth(edges):
    widths = [edges[i + 1] - edges[i] for i in range(len(edges) - 1)]
    return max(set(widths), key=lambda w: (widths.count(w), -w)) / 2.0


def midpoints(edges):
    hw = tail_halfwidth(edges)
    inner = [(edges[i] + edges[i + 1]) / 2.0 for i in range(len(edges) - 1)]
    return [edges[0] - hw] + inner + [edges[-1] + hw]


def labels(edges):
    def f(x):
        return str(int(x)) if float(x).is_integer() else repr(x)
    out = [f"(-inf,{f(edges[0])})"]
    out += [f"[{f(edges[i])},{f(edges[i + 1])})" for i in range(len(edges) - 1)]
    out.append(f"[{f(edges[-1])},inf)")
    return out


def bounds(edges):
    lo = [-math.inf] + list(edges)
    hi = list(edges) + [math.inf]
    return list(zip(lo, hi))


def regression_json(response, model, perturbed):
    intercept, terms, sigma = model
    predictors, breakpoints, out_terms = [], [], []
    for t in terms:
        name, kind = t[0], t[1]
        predictors.append(name)
        s = PERTURB_SLOPE if perturbed else 1.0
        if kind == "categorical":
            breakpoints.append(None)
            out_terms.append({"kind": "categorical", "levels": {k: v * s for k, v in t[2].items()}})
        elif kind == "hinge":
            breakpoints.append(t[3])
            out_terms.append({"kind": "hinge", "slopes": [x * s for x in t[2]]})
        else:
            breakpoints.append(None)
            out_terms.append({"kind": "linear", "slopes": [t[2] * s]})
    return {
        "response": response,
        "predictors": predictors,
        "breakpoints": breakpoints,
        "coefficients": {"intercept": intercept + (PERTURB_INTERCEPT if perturbed else 0.0),
                         "terms": out_terms},
        "sigma": sigma * (PERTURB_SIGMA if perturbed else 1.0),
        "cv_score": 0.0,
    }


def mean_of(model, values):
    intercept, terms, _ = model
    mu = intercept
    for t in terms:
        x = values[t[0]]
        if t[1] == "categorical":
            mu += t[2].get(x, 0.0)
        elif t[1] == "hinge":
            b1, b2 = t[2]
            mu += b1 * x + (b2 - b1) * max(x - t[3], 0.0)
        else:
            mu += t[2] * x
    return mu


def normal_row(mu, sigma, edges):
    row = []
    for lo, hi in bounds(edges):
        row.append(norm.cdf((hi - mu) / sigma) - norm.cdf((lo - mu) / sigma))
    return row


def seconds_range(lo, hi, floor=-math.inf):
    a = math.ceil(lo * 60) if math.isfinite(lo) else -math.inf
    b = math.ceil(hi * 60) - 1 if math.isfinite(hi) else math.inf
    if math.isfinite(floor):
        a = max(a, math.ceil(floor * 60))
    return a, b


def main():
    nodes, tables = [], []
    states = {}
    mids = {}
    for name, (st, probs) in CATEGORICAL.items():
        states[name] = st
        nodes.append({"name": name, "states": st, "parents": [], "prior": {"type": "uniform"}})
        tables.append({"node": name, "rows": [probs]})
    states["gdp"] = ["false", "true"]
    nodes.append({"name": "gdp", "states": states["gdp"], "parents": ["weather_dest"],
                  "prior": {"type": "uniform"}})
    tables.append({"node": "gdp", "rows": [[1 - GDP_GIVEN_WEATHER[w], GDP_GIVEN_WEATHER[w]]
                                           for w in states["weather_dest"]]})
    edges_of = {}
    for name, b, parents, model in DELAYS:
        edges = b["edges"]
        edges_of[name] = edges
        states[name] = labels(edges)
        mids[name] = midpoints(edges)
        nodes.append({"name": name, "bins": bins_json(b), "parents": parents,
                      "prior": {"type": "regression",
                                "regression": regression_json(name, model, perturbed=True)}})
        rows = []
        for combo in itertools.product(*[range(len(states[p])) for p in parents]):
            values = {}
            for p, k in zip(parents, combo):
                values[p] = mids[p][k] if p in mids else states[p][k]
            row = normal_row(mean_of(model, values), model[2], edges)
            if name == "gate_out":
                a = seconds_range(*bounds(edges_of["gate_in_prev"])[combo[0]])
                bb = seconds_range(*bounds(edges_of["turn_around"])[combo[1]], -SCHEDULED_TURN)
                reach = (a[0] + bb[0], a[1] + bb[1])
                for k, (lo, hi) in enumerate(bounds(edges)):
                    c = seconds_range(lo, hi)
                    if max(c[0], reach[0]) > min(c[1], reach[1]):
                        row[k] = 0.0
            total = sum(row)
            rows.append([x / total for x in row])
        tables.append({"node": name, "rows": rows})

    doc = {
        "nodes": nodes,
        "case_weight": 30.0,
        "prior_strength": 1.0,
        "max_rows": 1 << 20,
        "tables": tables,
        "sweep": {
            "prior_strength": SWEEP_PRIOR_STRENGTH,
            "weights": [1, 3, 10, 30, 100, 300],
            "train_cases": 2000,
            "test_cases": 1000,
            "seed": 7,
        },
        "emission": {
            "base_time": 1088640000,
            "spacing_sec": 1800,
            "origin": "ORD",
            "destination": "ATL",
            "previous_origin": "DEN",
            "unimpeded_taxi_out_min": 20.0,
            "unimpeded_taxi_in_min": 8.0,
            "plan_enroute_min": 89.0,
            "previous_block_min": 150.0,
            "nom_to_min": 20.0,
            "scheduled_turn_min": SCHEDULED_TURN,
            "gdp_time_lo_min": 1.0,
            "gdp_time_hi_min": 30.0,
            "tail_mean": {},
            "floor": {},
            "defaults": {},
        },
    }
    out = pathlib.Path(__file__).resolve().parent.parent / "scenarios" / "default_scenario.json"
    out.write_text(json.dumps(doc, indent=1) + "\n")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
