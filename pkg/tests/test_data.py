import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bayestomo.data import (
    DataFormatError,
    Dataset,
    EdgeOrderError,
    LengthMismatchError,
    QuadratureHistogram,
    SampleSet,
    SchemaError,
    bin_samples,
    dumps_histogram,
    load_dataset,
    load_histogram,
    load_samples,
    loads_dataset,
    loads_histogram,
    save_dataset,
    save_histogram,
    simulate_dataset,
    simulate_samples,
    span_edges,
    write_samples,
)
from bayestomo.state import StateParams, bin_probabilities, homodyne_pdf

TRUTH = StateParams(0.316, 6.889, 0.171)
VACUUM = StateParams(1.0, 1.0, 0.0)


def test_boundary_sample_goes_to_upper_bin():
    hist = bin_samples(SampleSet(0.0, [-1.0, 0.0, 1.0]), edges=[0.0])
    np.testing.assert_array_equal(hist.counts, [1, 2])


def test_empty_interior_bins_allowed():
    hist = bin_samples(SampleSet(0.0, [-5.0, 5.0]), edges=[-1.0, 0.0, 1.0])
    np.testing.assert_array_equal(hist.counts, [1, 0, 0, 1])


def test_too_few_bins_rejected():
    with pytest.raises(ValueError):
        bin_samples(SampleSet(0.0, [0.1, 0.2]), num_bins=1)


def test_span_rule_layout():
    ss = SampleSet(0.0, np.random.default_rng(0).normal(size=1000))
    edges = span_edges(ss, 70)
    assert edges.size == 69
    sd = np.std(ss.samples, ddof=1)
    assert edges[0] == pytest.approx(-5 * sd)
    assert edges[-1] == pytest.approx(5 * sd)
    np.testing.assert_allclose(np.diff(edges), np.diff(edges)[0])
    np.testing.assert_array_equal(span_edges(ss, 2), [0.0])


@given(st.lists(st.floats(-10, 10), min_size=1, max_size=200), st.randoms(use_true_random=False))
@settings(max_examples=50, deadline=None)
def test_binning_partitions_and_ignores_order(values, rnd):
    edges = [-2.0, -0.5, 0.0, 0.5, 2.0]
    shuffled = list(values)
    rnd.shuffle(shuffled)
    a = bin_samples(SampleSet(0.3, values), edges=edges)
    b = bin_samples(SampleSet(0.3, shuffled), edges=edges)
    assert a == b
    assert a.total == len(values)


def test_binning_is_deterministic():
    ss = simulate_samples(TRUTH, 0.0, 5000, 11)
    assert bin_samples(ss) == bin_samples(ss)


def test_simulation_determinism_and_seed_dependence():
    a = simulate_samples(TRUTH, 0.0, 1000, 5)
    b = simulate_samples(TRUTH, 0.0, 1000, 5)
    c = simulate_samples(TRUTH, 0.0, 1000, 6)
    assert a.samples.tobytes() == b.samples.tobytes()
    assert not np.array_equal(a.samples, c.samples)
    d1 = simulate_dataset(TRUTH, n=2000, seed=3)
    d2 = simulate_dataset(TRUTH, n=2000, seed=3)
    assert all(h1 == h2 for h1, h2 in zip(d1, d2))


def test_stream_layout_is_u_then_x():
    rng = np.random.default_rng(99)
    z = rng.standard_normal((4, 2))
    u = math.sqrt(TRUTH.v_phi) * z[:, 0]
    var = TRUTH.v_x * np.cos(u + 0.4) ** 2 + TRUTH.v_p * np.sin(u + 0.4) ** 2
    ss = simulate_samples(TRUTH, 0.4, 4, 99)
    np.testing.assert_array_equal(ss.samples, np.sqrt(var) * z[:, 1])


def test_vacuum_sample_variance():
    ss = simulate_samples(VACUUM, 0.0, 10**6, 1)
    assert 0.995 <= np.var(ss.samples) <= 1.005


def test_table1_sample_variance_matches_moment_identity():
    expected = (TRUTH.v_x + TRUTH.v_p) / 2 + (TRUTH.v_x - TRUTH.v_p) / 2 * math.exp(-2 * TRUTH.v_phi)
    x = np.linspace(-40, 40, 40001)
    assert np.trapezoid(x**2 * homodyne_pdf(TRUTH, 0.0, x), x) == pytest.approx(expected, rel=1e-9)
    ss = simulate_samples(TRUTH, 0.0, 10**6, 2)
    assert np.var(ss.samples) == pytest.approx(expected, rel=0.01)


def test_middle_bin_within_five_sigma():
    n = 10**5
    hist = bin_samples(simulate_samples(VACUUM, 0.0, n, 4), 70)
    p = bin_probabilities(VACUUM, 0.0, hist.interior_edges)
    mid = 35
    assert abs(hist.counts[mid] - n * p[mid]) < 5 * math.sqrt(n * p[mid] * (1 - p[mid]))


def test_all_bins_concentrate_around_model_probabilities():
    n = 10**6
    hist = bin_samples(simulate_samples(TRUTH, 0.0, n, 8), 70)
    p = bin_probabilities(TRUTH, 0.0, hist.interior_edges)
    freq = hist.counts / n
    assert np.all(np.abs(freq - p) < 5 * np.sqrt(p * (1 - p) / n) + 1e-15)


def test_histogram_round_trip(tmp_path):
    hist = QuadratureHistogram(0.1 + 0.2, [-0.3333333333333333, 1e-17], [3, 0, 9])
    path = tmp_path / "h.json"
    save_histogram(path, hist)
    back = load_histogram(path)
    assert back == hist
    assert back.interior_edges.tobytes() == hist.interior_edges.tobytes()


def test_dataset_round_trip(tmp_path):
    data = simulate_dataset(TRUTH, n=3000, seed=1, num_bins=12)
    path = tmp_path / "d.json"
    save_dataset(path, data)
    back = load_dataset(path)
    assert len(back) == len(data)
    assert all(a == b for a, b in zip(back, data))


def test_samples_round_trip(tmp_path):
    sets = [simulate_samples(TRUTH, 0.0, 50, 1), simulate_samples(TRUTH, math.pi / 2, 30, 2)]
    path = tmp_path / "s.csv"
    write_samples(path, sets, ["seed=1"])
    back = load_samples(path)
    assert [s.theta for s in back] == [0.0, math.pi / 2]
    for a, b in zip(sets, back):
        assert a.samples.tobytes() == b.samples.tobytes()


def test_decreasing_edges_name_index():
    text = json.dumps({"theta": 0.0, "interior_edges": [0.0, 1.0, 0.5], "counts": [1, 2, 3, 4]})
    with pytest.raises(EdgeOrderError, match="index 2") as info:
        loads_histogram(text)
    assert info.value.index == 2


def test_schema_and_length_errors_are_distinct():
    with pytest.raises(SchemaError):
        loads_histogram(json.dumps({"interior_edges": [0.0], "counts": [1, 2]}))
    with pytest.raises(LengthMismatchError):
        loads_histogram(json.dumps({"theta": 0.0, "interior_edges": [0.0], "counts": [1, 2, 3]}))
    with pytest.raises(SchemaError):
        loads_histogram(json.dumps({"theta": 0.0, "interior_edges": [0.0], "counts": [1, -2]}))
    with pytest.raises(DataFormatError):
        loads_histogram("{not json")
    with pytest.raises(SchemaError):
        loads_dataset(json.dumps({"theta": 0.0}))
    assert not issubclass(LengthMismatchError, EdgeOrderError)
    assert not issubclass(SchemaError, LengthMismatchError)


def test_histogram_json_keys():
    obj = json.loads(dumps_histogram(QuadratureHistogram(0.5, [0.0], [1, 1])))
    assert set(obj) == {"theta", "interior_edges", "counts"}


def test_duplicate_phases_rejected():
    h = QuadratureHistogram(0.0, [0.0], [1, 1])
    g = QuadratureHistogram(math.pi, [0.0], [2, 2])
    with pytest.raises(ValueError, match="same phase"):
        Dataset((h, g))


def test_malformed_samples_file(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("theta_radians,value\n0.0,abc\n", encoding="utf-8")
    with pytest.raises(DataFormatError, match="row 2"):
        load_samples(path)
    path.write_text("angle,value\n0.0,1.0\n", encoding="utf-8")
    with pytest.raises(SchemaError):
        load_samples(path)
