import json
import math

import pytest

import delayprop as dp


@pytest.fixture(scope="module")
def truth():
    return dp.default_scenario()


def test_bin_scheme():
    s = dp.BinScheme.uniform(-60, 120, 15)
    assert len(s) == 14
    assert s.bin_index(17.0) == s.bin_index(15.0)
    assert s.labels()[0] == "(-inf,-60)"
    assert s.midpoint(s.bin_index(20.0)) == pytest.approx(22.5)


def test_gdp_examples():
    assert dp.derive_gdp(1000, 20.0, -1) == (False, 0.0, False)
    gdp, gdp_time, _ = dp.derive_gdp(0, 20.0, 1200 + 600)
    assert gdp and gdp_time == pytest.approx(10.0)


def test_posterior_matches_query_json(truth):
    ev = {"gate_in_dest": ["[15,30)"]}
    p = truth.posterior(ev)
    answer = json.loads(truth.query_json(json.dumps({"evidence": ev})))
    for node, probs in p["posteriors"].items():
        assert sum(probs) == pytest.approx(1.0, abs=1e-9)
        assert probs == pytest.approx(answer["posteriors"][node], abs=1e-11)
    assert math.isfinite(p["evidence_logprob"])


def test_errors(truth):
    with pytest.raises(KeyError):
        truth.posterior({"nope": ["x"]})
    with pytest.raises(dp.InconsistentEvidence):
        truth.posterior({"gate_in_prev": ["(-inf,-60)"], "turn_around": ["(-inf,-60)"],
                         "gate_out": ["[120,inf)"]})


def test_simulate_ingest_train_roundtrip(truth):
    records, labels = dp.simulate(300, 5)
    again, _ = dp.simulate(300, 5)
    assert records == again
    assert len(labels) == 300 and len(labels[0]) == len(truth.nodes)
    cases, skipped = dp.ingest(records, "ORD", "ATL")
    assert skipped == 0
    assert cases.count("\n") == 301
    trained = truth.train(cases, 30.0)
    assert trained.nodes == truth.nodes
    for row in trained.probabilities("taxi_out"):
        assert sum(row) == pytest.approx(1.0)
    sample = trained.sample(3, 1)
    assert all(math.isfinite(trained.log_likelihood(s)) or trained.log_likelihood(s) == -math.inf
               for s in sample)
    model = dp.Network.from_json(trained.to_json())
    assert model.probabilities("gate_out") == trained.probabilities("gate_out")


def test_evaluation_helpers():
    s = dp.BinScheme([0, 15, 30, 45], False, False)
    assert dp.approx_mse([1], [0], s) == pytest.approx(225.0)
    assert dp.scaled_mse({1: 100, 30: 150, 300: 200}) == {1: 0.0, 30: 0.5, 300: 1.0}
    assert dp.ks_statistic([1, 2, 3], [1, 2, 3]) == 0.0
    assert dp.expected_value([0.5, 0.5, 0.0], s) == pytest.approx(15.0)
    assert dp.map_state([0.5, 0.5]) == 0
    assert dp.canonical_json('{"b":1,"a":0.1}') == '{"a":0.1,"b":1}'
