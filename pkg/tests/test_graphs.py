import itertools
import math
from collections import Counter

import numpy as np
import pytest

from graph_coupler.attributes import AttributeSequence
from graph_coupler.graphs import (
    KernelConfig,
    Phi,
    TruncationSchedule,
    edge_probability_ir,
    edge_probability_row,
    phi_from_config,
    read_attributes_csv,
    repair_attribute_sequence,
    sample_cm,
    sample_dcm,
    sample_ir,
    sample_ird,
    write_attributes_csv,
)


def _signature(g):
    return (tuple(sorted(g.edges.items())), tuple(sorted(g.self_loops.items())))


def _matchings(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for i in range(len(rest)):
        for m in _matchings(rest[:i] + rest[i + 1:]):
            yield [(first, rest[i])] + m


def test_cm_preserves_degrees():
    rng = np.random.default_rng(0)
    d = rng.poisson(3, 400)
    d[-1] += d.sum() % 2
    g = sample_cm(AttributeSequence("cm-degree", d), 5)
    assert np.array_equal(g.degrees(), d)
    assert g.edge_count == d.sum() // 2


def test_cm_law_matches_matching_enumeration():
    d = [2, 1, 3]
    owners = [v for v, k in enumerate(d) for _ in range(k)]
    exact = Counter()
    for m in _matchings(list(range(len(owners)))):
        edges, loops = Counter(), Counter()
        for a, b in m:
            x, y = sorted((owners[a], owners[b]))
            if x == y:
                loops[x] += 1
            else:
                edges[(x, y)] += 1
        exact[(tuple(sorted(edges.items())), tuple(sorted(loops.items())))] += 1
    total = sum(exact.values())
    attrs = AttributeSequence("cm-degree", d)
    reps = 20000
    seen = Counter(_signature(sample_cm(attrs, s)) for s in range(reps))
    assert set(seen) <= set(exact)
    for sig, c in exact.items():
        p = c / total
        assert abs(seen[sig] / reps - p) <= 4 * math.sqrt(p * (1 - p) / reps)


def test_cm_odd_total_rejected():
    with pytest.raises(ValueError):
        sample_cm(AttributeSequence("cm-degree", [1, 2]), 0)


def test_dcm_preserves_degrees_and_law():
    attrs = AttributeSequence("dcm-degrees", [[1, 1], [1, 1]])
    reps = 20000
    seen = Counter(_signature(sample_dcm(attrs, s)) for s in range(reps))
    # two matchings: both self-loops, or the 2-cycle
    assert len(seen) == 2
    for c in seen.values():
        assert abs(c / reps - 0.5) <= 4 * math.sqrt(0.25 / reps)
    g = sample_dcm(AttributeSequence("dcm-degrees", [[2, 0], [0, 1], [1, 2]]), 1)
    assert g.degrees().tolist() == [[2, 0], [0, 1], [1, 2]]


def test_edge_probability_formulas():
    attrs = AttributeSequence("ir-weight", [1.0, 2.0, 4.0, 40.0])
    n, theta = 4, 2.0
    r = lambda i, j: attrs.primary[i] * attrs.primary[j] / (theta * n)  # noqa: E731
    cl = edge_probability_row(attrs, KernelConfig(theta), 1)
    assert cl[1] == 0.0
    assert cl[0] == pytest.approx(r(1, 0)) and cl[3] == 1.0
    nr = edge_probability_row(attrs, KernelConfig(theta, Phi("norros-reittu")), 1)
    assert nr[2] == pytest.approx(1 - math.exp(-r(1, 2)))
    grg = edge_probability_row(attrs, KernelConfig(theta, Phi("generalized-random-graph")), 1)
    assert grg[2] == pytest.approx(r(1, 2) / (1 + r(1, 2)))
    const = edge_probability_row(attrs, KernelConfig(theta, Phi("constant", -0.5)), 1)
    assert const[0] == pytest.approx(0.5 * r(1, 0))
    assert edge_probability_ir(1, 2, attrs, KernelConfig(theta, Phi("norros-reittu"))) == pytest.approx(nr[2])
    assert edge_probability_ir(2, 2, attrs, KernelConfig(theta)) == 0.0


def test_directed_edge_probability_rows():
    attrs = AttributeSequence("ird-weights", [[1.0, 2.0], [3.0, 0.5], [2.0, 2.0]])
    k = KernelConfig(4.0)
    out = edge_probability_row(attrs, k, 0, "out")
    inn = edge_probability_row(attrs, k, 1, "in")
    # p(0 -> 1) = W_out(0) W_in(1) / (theta n) = 2 * 3 / 12
    assert out[1] == pytest.approx(0.5)
    assert out[2] == pytest.approx(2.0 * 2.0 / 12.0)
    assert inn[0] == out[1]
    assert edge_probability_ir(0, 1, attrs, k) == out[1]


def test_sample_ir_edge_frequencies():
    attrs = AttributeSequence("ir-weight", [1.0, 2.0, 3.0])
    k = KernelConfig(2.0)
    p = {(i, j): edge_probability_ir(i, j, attrs, k) for i, j in itertools.combinations(range(3), 2)}
    reps = 6000
    counts = Counter()
    for s in range(reps):
        g = sample_ir(attrs, k, s)
        assert not g.self_loops and all(m == 1 for m in g.edges.values())
        counts.update(g.edges)
    for e, pe in p.items():
        assert abs(counts[e] / reps - pe) <= 4 * math.sqrt(pe * (1 - pe) / reps)


def test_sample_ird_edge_frequencies():
    attrs = AttributeSequence("ird-weights", [[1.0, 2.0], [3.0, 0.5], [2.0, 2.0]])
    k = KernelConfig(2.0)
    reps = 6000
    counts = Counter()
    for s in range(reps):
        counts.update(sample_ird(attrs, k, s).edges)
    for i, j in itertools.permutations(range(3), 2):
        pe = edge_probability_ir(i, j, attrs, k)
        assert abs(counts[(i, j)] / reps - pe) <= 4 * math.sqrt(pe * (1 - pe) / reps) + 1e-12


def test_repair():
    s = repair_attribute_sequence(AttributeSequence("cm-degree", [1, 2, 2]))
    assert s.primary.tolist() == [1, 2, 3]
    d = repair_attribute_sequence(AttributeSequence("dcm-degrees", [[3, 0], [0, 1]]), seed=1)
    assert d.primary[:, 0].sum() == d.primary[:, 1].sum() == 3
    assert d.primary[:, 0].tolist() == [3, 0]
    w = AttributeSequence("ir-weight", [0.3])
    assert repair_attribute_sequence(w) is w


def test_csv_roundtrip(tmp_path):
    a = AttributeSequence("ird-weights", [[0.1, 2.5], [1e-9, 3.0]], aux=[[1.0, -2.0], [0.25, 7.0]])
    path = tmp_path / "a.csv"
    write_attributes_csv(a, path)
    assert path.read_text().splitlines()[0] == "vertex_id,w_in,w_out,b_1,b_2"
    assert read_attributes_csv(path) == a
    c = AttributeSequence("cm-degree", [3, 1, 0])
    write_attributes_csv(c, path)
    assert read_attributes_csv(path) == c


def test_csv_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("id,d\n0,1\n")
    with pytest.raises(ValueError):
        read_attributes_csv(path)


def test_kernel_pieces_validate():
    with pytest.raises(ValueError):
        TruncationSchedule(0.6)
    with pytest.raises(ValueError):
        Phi("constant", -1.0)
    with pytest.raises(ValueError):
        KernelConfig(0.0)
    assert phi_from_config({"name": "constant", "value": 0.2}) == Phi("constant", 0.2)
    assert TruncationSchedule(0.25).b(10000) == pytest.approx(10.0)
