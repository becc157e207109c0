import math
from collections import Counter

import numpy as np
import pytest
from scipy import stats

from graph_coupler.attributes import AttributeSequence
from graph_coupler.exploration import canonical_code
from graph_coupler.graphs import KernelConfig
from graph_coupler.laws import AuxGenerator, DiscreteLaw, constant_law, exponential_law, poisson_law
from graph_coupler.stats import EmpiricalMeasure, w1_exact_discrete
from graph_coupler.trees import (
    IntermediateLaw,
    LimitLaw,
    couple_attribute,
    couple_attribute_biased,
    couple_trees,
    independent_copies,
    sample_intermediate_tree,
    sample_limit_tree,
)


def test_intermediate_cm_zero_degrees_root_only():
    law = IntermediateLaw(AttributeSequence("cm-degree", [0, 0, 0]))
    for s in range(20):
        assert sample_intermediate_tree(law, 3, s).size == 1


def test_intermediate_cm_nonroot_uniform_over_two_vertices():
    law = IntermediateLaw(AttributeSequence("cm-degree", [1, 1]))
    reps = 20000
    rng = np.random.default_rng(0)
    hits = Counter(sample_intermediate_tree(law, 1, rng).sources[(1,)] for _ in range(reps))
    assert abs(hits[0] / reps - 0.5) <= 4 * math.sqrt(0.25 / reps)


def test_intermediate_ir_single_vertex_root_is_poisson_one():
    law = IntermediateLaw(AttributeSequence("ir-weight", [1.0]), KernelConfig(1.0))
    reps = 20000
    rng = np.random.default_rng(1)
    counts = np.array([sample_intermediate_tree(law, 1, rng).root.degrees[0] for _ in range(reps)])
    assert abs(counts.mean() - 1.0) <= 3 / math.sqrt(reps)


def test_intermediate_empty_rejected():
    with pytest.raises(ValueError):
        IntermediateLaw(AttributeSequence("cm-degree", []))
    with pytest.raises(ValueError):
        IntermediateLaw(AttributeSequence("ir-weight", [1.0]))
    with pytest.raises(ValueError):
        sample_intermediate_tree(IntermediateLaw(AttributeSequence("cm-degree", [1, 1])), -1, 0)


def test_intermediate_dcm_marks():
    attrs = AttributeSequence("dcm-degrees", [[2, 1], [0, 1], [1, 1]])
    law = IntermediateLaw(attrs)
    tree = sample_intermediate_tree(law, 2, 3, root=0)
    tree.validate()
    assert tree.root.degrees == (2, 1)
    for lab, v in tree.sources.items():
        assert tree.marks[lab].degrees == tuple(attrs.primary[v].tolist())


def test_limit_point_mass_zero_root_only():
    law = LimitLaw("cm", (constant_law(0.0),))
    for s in range(20):
        assert sample_limit_tree(law, 3, s).size == 1


def test_limit_cm_size_biased_children():
    law = LimitLaw("cm", (DiscreteLaw([1, 2], [0.5, 0.5]),))
    rng = np.random.default_rng(2)
    degs = law.nonroot_marginals[0].ppf(rng.random(10 ** 6))
    assert abs(np.mean(degs == 2) - 2 / 3) <= 4 * math.sqrt(2 / 9 / 10 ** 6)
    children = Counter()
    for _ in range(5000):
        t = sample_limit_tree(law, 1, rng)
        for lab in t.generation(1):
            children[t.marks[lab].degrees[0]] += 1
    total = sum(children.values())
    assert abs(children[2] / total - 2 / 3) <= 4 * math.sqrt(2 / 9 / total)


def test_limit_ir_unit_weights_generation_mean():
    law = LimitLaw("ir", (constant_law(1.0),), theta=1.0)
    rng = np.random.default_rng(3)
    sizes = np.array([len(sample_limit_tree(law, 2, rng).generation(2)) for _ in range(20000)])
    # Poisson(1) offspring everywhere: E[Z_2] = 1, Var[Z_2] = 2
    assert abs(sizes.mean() - 1.0) <= 4 * math.sqrt(2.0 / sizes.size)


def test_limit_law_validation():
    with pytest.raises(ValueError):
        LimitLaw("cm", (exponential_law(1.0),))
    with pytest.raises(ValueError):
        LimitLaw("dcm", (poisson_law(1.0), poisson_law(2.0)))
    with pytest.raises(ValueError):
        LimitLaw("ir", (exponential_law(1.0), exponential_law(1.0)))
    ird = LimitLaw("ird", (exponential_law(1.0), exponential_law(0.5)))
    assert ird.theta == pytest.approx(3.0)
    assert ird.c_in == pytest.approx(2.0 / 3.0)
    assert ird.c_out == pytest.approx(1.0 / 3.0)
    assert LimitLaw("ir", (exponential_law(1.0),)).ratio == pytest.approx(1.0)


def test_couple_attribute_identical_laws_distance_zero():
    attrs = AttributeSequence("cm-degree", [1, 2, 2, 3])
    limit = LimitLaw("cm", (DiscreteLaw([1, 2, 3], [0.25, 0.5, 0.25]),))
    cpl = couple_attribute(attrs, limit)
    assert cpl.expected_distance() == 0.0
    _, inter, lim, _ = cpl.sample(np.random.default_rng(0), 5000)
    assert np.array_equal(inter, lim)


def test_couple_attribute_sorted_pairing():
    attrs = AttributeSequence("ir-weight", [1.0, 3.0])
    cpl = couple_attribute(attrs, LimitLaw("ir", (constant_law(2.0),)))
    assert cpl.expected_distance() == pytest.approx(1.0)
    _, inter, lim, _ = cpl.sample(np.random.default_rng(1), 1000)
    assert np.allclose(np.abs(inter - lim), 1.0)


def test_couple_attribute_matches_exact_transport():
    rng = np.random.default_rng(4)
    for _ in range(40):
        a = rng.exponential(1.0, rng.integers(1, 30))
        b_vals = rng.exponential(1.0, rng.integers(1, 30))
        b_probs = rng.random(b_vals.size) + 0.1
        limit = LimitLaw("ir", (DiscreteLaw(b_vals, b_probs),))
        cpl = couple_attribute(AttributeSequence("ir-weight", a), limit)
        exact = w1_exact_discrete(EmpiricalMeasure.of(a), EmpiricalMeasure.of(b_vals, b_probs))
        assert cpl.expected_distance() == pytest.approx(exact, abs=1e-9)


def test_couple_attribute_biased_matches_exact_transport():
    rng = np.random.default_rng(5)
    for _ in range(20):
        d = rng.integers(1, 6, rng.integers(2, 20))
        vals = np.arange(1, 6)
        probs = rng.random(5) + 0.1
        base = DiscreteLaw(vals, probs)
        limit = LimitLaw("cm", (base,))
        cpl = couple_attribute_biased(AttributeSequence("cm-degree", d), limit, d.astype(float))
        biased = base.biased()
        exact = w1_exact_discrete(EmpiricalMeasure.of(d.astype(float), d.astype(float)),
                                  EmpiricalMeasure.of(biased.values, biased.probs))
        assert cpl.expected_distance() == pytest.approx(exact, abs=1e-9)


def test_couple_attribute_limit_marginal_is_exact():
    rng = np.random.default_rng(6)
    attrs = AttributeSequence("ird-weights", rng.exponential(1.0, (50, 2)), aux=rng.normal(size=(50, 1)))
    limit = LimitLaw("ird", (exponential_law(1.0), exponential_law(1.0)), AuxGenerator("gaussian", 1))
    _, _, prim, aux = couple_attribute(attrs, limit).sample(rng, 200000)
    assert stats.kstest(prim[:, 1], "expon").pvalue > 1e-3
    assert stats.kstest(aux[:, 0], "norm").pvalue > 1e-3


def test_couple_trees_identical_laws_never_diverge():
    attrs = AttributeSequence("cm-degree", [1, 2, 2, 3])
    inter = IntermediateLaw(attrs)
    limit = LimitLaw("cm", (DiscreteLaw([1, 2, 3], [0.25, 0.5, 0.25]),))
    for s in range(200):
        out = couple_trees(inter, limit, 3, 0.5, s)
        assert out.kappa is None
        assert canonical_code(out.intermediate) == canonical_code(out.limit)


def test_couple_trees_single_nodes():
    inter = IntermediateLaw(AttributeSequence("cm-degree", [0, 0]))
    same = LimitLaw("cm", (constant_law(0.0),))
    assert couple_trees(inter, same, 2, 0.5, 0).kappa is None
    inter_w = IntermediateLaw(AttributeSequence("ir-weight", [1e-9, 1e-9]), KernelConfig(1.0))
    far = LimitLaw("ir", (constant_law(1e-9 + 0.3),), theta=1.0)
    out = couple_trees(inter_w, far, 0, 0.2, 0)
    assert out.intermediate.size == out.limit.size == 1
    assert out.kappa == (0 if out.distances[()] > 0.2 else None)


def test_couple_trees_kappa_beyond_k_means_same_shape():
    rng = np.random.default_rng(7)
    attrs = AttributeSequence("ir-weight", exponential_law(1.0).sample(rng, 2000))
    inter = IntermediateLaw(attrs, KernelConfig(attrs.empirical_theta()))
    limit = LimitLaw("ir", (exponential_law(1.0),))
    for s in range(200):
        out = couple_trees(inter, limit, 2, 0.9, s)
        if out.kappa is None:
            assert out.shapes_equal
            assert all(d <= 0.9 for d in out.distances.values())
        else:
            assert 0 <= out.kappa <= 2


def test_couple_trees_rejects_mixed_models():
    inter = IntermediateLaw(AttributeSequence("cm-degree", [1, 1]))
    with pytest.raises(ValueError):
        couple_trees(inter, LimitLaw("ir", (constant_law(1.0),)), 1, 0.5, 0)


def test_independent_copies_basic_cases():
    attrs = AttributeSequence("cm-degree", [2, 2, 1, 1, 3, 1])
    inter = IntermediateLaw(attrs)
    copies, report = independent_copies(inter, [0], 2, 0)
    assert len(copies) == 1 and report.total == 0
    zero = IntermediateLaw(AttributeSequence("cm-degree", [0, 0, 0]))
    copies, report = independent_copies(zero, [0, 1], 2, 0)
    assert [c.size for c in copies] == [1, 1] and report.total == 0
    with pytest.raises(ValueError):
        independent_copies(inter, [1, 1], 2, 0)


def test_independent_copies_splice_at_repeats():
    attrs = AttributeSequence("cm-degree", [3, 3, 3])
    inter = IntermediateLaw(attrs)
    spliced = 0
    for s in range(50):
        first = sample_intermediate_tree(inter, 1, s, root=0)
        second = sample_intermediate_tree(inter, 1, s + 1000, root=1)
        copies, report = independent_copies(inter, [0, 1], 1, s, trees=[first, second])
        assert copies[0] is first
        copies[1].validate()
        seen = set(first.sources.values())
        # the root of the second tree repeats a vertex whenever the first tree touched vertex 1
        if 1 in seen:
            assert report.splices[1] >= 1
        spliced += report.total
    assert spliced > 0
