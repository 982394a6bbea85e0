from fractions import Fraction

import numpy as np
import pytest

from padic_cokernels import limits, montecarlo
from padic_cokernels.montecarlo import (
    ConfigError,
    EmpiricalJoint,
    ExperimentConfig,
    InvariantViolation,
    ShiftSpec,
    block_rng,
    empirical_tv,
    enum_fp_exact,
    run_joint,
    run_linearization,
    run_shift,
    sample_gl,
    sample_matrix,
    tv_distance,
)
from padic_cokernels.rings import RingParams
from padic_cokernels.smith import CokernelClass, LocalMatrix, smith_normal_form

E = CokernelClass(())
Z1 = CokernelClass((1,))


def within(freq, target, N, sigmas=3.0):
    return abs(freq - target) <= sigmas * (target * (1 - target) / N) ** 0.5


def joint_config(**kw):
    base = dict(experiment="joint", p=2, k=6, n=6, samples=5000, seed=99, polynomials=("t",))
    base.update(kw)
    return ExperimentConfig(**base)


def test_sample_matrix_golden():
    A = sample_matrix(2, RingParams(2, 2), block_rng(1, 0))
    assert A.to_lists() == [[2, 3], [0, 3]]
    B = sample_gl(2, RingParams(2, 2), block_rng(1, 0))
    assert B.to_lists() == [[1, 1], [2, 3]]
    C = sample_matrix(2, RingParams(2, 2, (1, 1, 1)), np.random.default_rng(5))
    assert C.to_lists() == [[(2, 3), (0, 3)], [(1, 2), (2, 1)]]


def test_sample_gl_is_invertible():
    rng = np.random.default_rng(0)
    params = RingParams(2, 4)
    for _ in range(50):
        A = sample_gl(5, params, rng)
        assert CokernelClass.from_valuations(smith_normal_form(A), 4).is_trivial


def test_gl_acceptance_rate():
    # the rejection test in sample_gl accepts exactly the matrices invertible mod p
    rng = np.random.default_rng(1)
    N = 100_000
    mats = rng.integers(0, 2, size=(N, 6, 6))
    rate = float((montecarlo._fp_ranks(mats, 2) == 6).mean())
    assert within(rate, float(limits.alpha(2, 6)), N)


def test_entries_uniform_chi_square():
    rng = block_rng(5, 0)
    m = 27
    draws = montecarlo._draw_residues(rng, (40_000,), 3, 3)
    counts = np.bincount(draws, minlength=m)
    expected = len(draws) / m
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    df = m - 1
    assert chi2 < df + 5 * (2 * df) ** 0.5


def test_big_modulus_residues():
    draws = montecarlo._draw_residues(np.random.default_rng(2), (500,), 2, 40)
    assert draws.dtype == object and all(0 <= x < 2**40 for x in draws)
    assert len(set(draws)) > 490


def test_trivial_frequency_is_exact_invertibility_probability():
    N = 100_000
    emp = run_joint(joint_config(k=8, samples=N, seed=3))
    assert within(emp.frequency((E,)), float(limits.alpha(2, 6)), N)


def test_counts_partition_total():
    emp = run_joint(joint_config(k=2, samples=3000))
    assert sum(emp.counts.values()) + emp.undetermined_count == emp.total == 3000
    assert emp.undetermined_count > 0
    for key in emp.counts:
        assert all(max(c.parts, default=0) <= 1 and not c.is_saturated for c in key)


def test_trust_margin_routes_boundary_classes():
    emp = run_joint(joint_config(k=4, samples=3000, trust_margin=2))
    assert all(max(key[0].parts, default=0) <= 2 for key in emp.counts)
    assert any(max(key[0].parts, default=0) == 3 for key in emp.undetermined)


def test_determinism_across_workers():
    cfg = joint_config(samples=3 * montecarlo.BLOCK_SIZE + 17, polynomials=("t", "t-1"), p=3, k=4)
    one = run_joint(cfg, workers=1)
    many = run_joint(cfg, workers=3)
    assert one == many
    assert one != run_joint(joint_config(samples=cfg.samples, polynomials=("t", "t-1"), p=3, k=4, seed=100))


def test_degree_two_matches_reference_route():
    cfg = joint_config(p=2, k=5, n=5, samples=300, polynomials=("t^2+t+1",))
    emp = run_joint(cfg)
    # redo every sample with the pure-Python route
    from padic_cokernels.smith import char_matrix, cokernel_class

    ext = RingParams(2, 5, (1, 1, 1))
    tally = {}
    rng = block_rng(cfg.seed, 0)
    mats = montecarlo._sample_block(rng, 300, 5, 2, 5, False)
    for A in mats:
        cls = cokernel_class(char_matrix(LocalMatrix(RingParams(2, 5), A), ext))
        tally[(cls,)] = tally.get((cls,), 0) + 1
    merged = dict(emp.counts)
    merged.update(emp.undetermined)
    assert merged == tally


def test_config_errors():
    with pytest.raises(ConfigError, match="same reduction"):
        joint_config(polynomials=("t", "t+2"))
    with pytest.raises(ConfigError, match="polynomials"):
        joint_config(polynomials=("t^2+",))
    with pytest.raises(ConfigError, match="reducible"):
        joint_config(polynomials=("t^2+1",))
    with pytest.raises(ConfigError, match="odd prime"):
        ExperimentConfig("linearize", 2, 4, 4, 10, linearization_v=1)
    with pytest.raises(ConfigError, match="linearization.v"):
        ExperimentConfig("linearize", 3, 4, 4, 10, linearization_v=4)
    with pytest.raises(ConfigError, match="shift"):
        ExperimentConfig("shift", 2, 4, 4, 10)
    with pytest.raises(ConfigError, match="shift.matrix"):
        run_shift(ExperimentConfig("shift", 2, 4, 3, 10, shift=ShiftSpec("explicit", matrix=[[1, 0], [0, 1]])))
    with pytest.raises(ConfigError, match="ring"):
        joint_config(p=4)


def test_config_dict_roundtrip():
    cfg = ExperimentConfig("shift", 2, 8, (10, 20), 500, seed=4, shift=ShiftSpec("bounded", 1), gl_condition=True)
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ConfigError, match="sampling.samples"):
        ExperimentConfig.from_dict({"experiment": "joint", "ring": {"p": 2, "k": 3}, "sampling": {"n": 3},
                                    "polynomials": ["t"]})
    with pytest.raises(ConfigError, match="unknown section"):
        ExperimentConfig.from_dict(dict(cfg.to_dict(), extra=1))


def test_sweep_requires_single_size():
    cfg = joint_config(n=(3, 4))
    with pytest.raises(ConfigError):
        run_joint(cfg)
    assert [c.n for c in cfg.sweep()] == [3, 4]


def test_zero_shift_coordinates_coincide():
    N = 4000
    cfg = ExperimentConfig("shift", 2, 6, 6, N, seed=8, shift=ShiftSpec("explicit", matrix=[[0] * 6] * 6))
    emp = run_shift(cfg)
    for key in list(emp.counts) + list(emp.undetermined):
        assert key[0] == key[1]
    single = run_joint(joint_config(k=6, n=6, samples=N, seed=8))
    assert emp.frequency((E, E)) == single.frequency((E,))


def test_shift_marginal_equals_single_polynomial_run():
    N = 6000
    cfg = ExperimentConfig("shift", 3, 4, 8, N, seed=21, shift=ShiftSpec("corank"))
    emp = run_shift(cfg)
    single = run_joint(ExperimentConfig("joint", 3, 4, 8, N, seed=21, polynomials=("t",)))
    marg = emp.marginal(0)
    assert {cls: c for cls, c in marg.items()} == {key[0]: c for key, c in {**single.counts, **single.undetermined}.items()}


def test_shift_families():
    assert ShiftSpec("corank").build(4, 2, 3).tolist() == [[2, 0, 0, 0], [0, 2, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]
    assert ShiftSpec("bounded", 1).build(3, 2, 3).tolist() == [[1, 0, 0], [0, 0, 0], [0, 0, 0]]
    with pytest.raises(ConfigError):
        ShiftSpec("bounded")
    with pytest.raises(ConfigError):
        ShiftSpec("weird")


def test_shift_metadata_and_theory():
    cfg = ExperimentConfig("shift", 2, 6, 6, 200, shift=ShiftSpec("bounded", 2))
    emp = run_shift(cfg)
    assert emp.metadata["shift_p_rank"] == 4
    assert montecarlo.theoretical_shift(cfg, (E, E)).value == pytest.approx(limits.bounded_shift_limit(2, 2).value)
    assert montecarlo.theoretical_shift(cfg, (Z1, E)) is None


def test_linearization_small():
    cfg = ExperimentConfig("linearize", 3, 4, 6, 3000, seed=2, linearization_v=1)
    res = run_linearization(cfg)
    assert 0 <= res.tv <= 1
    for side in (res.gl_side, res.m_side):
        for key in list(side.counts) + list(side.undetermined):
            assert key[0].p_rank == key[1].p_rank
    assert res.gl_side.labels == ("A-I", "A-(p^1+1)I")


def test_p_rank_check_fires():
    a = np.array([[0, 1], [0, 0]])
    b = np.array([[0, 0], [0, 0]])
    with pytest.raises(InvariantViolation):
        montecarlo._check_equal_p_rank(a, b, "x")


def test_enum_fp_exact_examples():
    assert enum_fp_exact(1, 2, [[0]]) == Fraction(1, 2)
    assert enum_fp_exact(2, 2, [[1, 0], [0, 0]]) == Fraction(2, 16)
    assert enum_fp_exact(2, 2, [[0, 0], [0, 0]]) == Fraction(6, 16)
    assert enum_fp_exact(2, 3, np.zeros((2, 2))) == limits.alpha(3, 2)
    with pytest.raises(limits.TooLarge):
        enum_fp_exact(6, 2, np.zeros((6, 6)))


def test_enum_bound_from_proof():
    # |P_n - alpha_n alpha_k| <= 1 - c_{n,k}
    for n, k in [(2, 1), (3, 1), (3, 2), (4, 1)]:
        shift = np.diag([1] * k + [0] * (n - k))
        exact = enum_fp_exact(n, 2, shift)
        gap = abs(exact - limits.alpha(2, n) * limits.alpha(2, k))
        assert gap <= 1 - limits.full_rank_prob(n, k, 2)


def _emp(counts, total, undetermined=None):
    return EmpiricalJoint(("P1",), counts, undetermined or {}, total)


def test_tv_distance_edge_cases():
    emp = _emp({(E,): 3, (Z1,): 1}, 4)
    assert tv_distance(emp, {(E,): 0.75, (Z1,): 0.25}) == pytest.approx(0.0)
    assert tv_distance(emp, {(CokernelClass((2,)),): 1.0}) == pytest.approx(1.0)
    # unlisted theoretical mass and undetermined samples share the "other" bucket
    emp2 = _emp({(E,): 2}, 4, {(CokernelClass((), 1),): 2})
    assert tv_distance(emp2, {(E,): 0.5}) == pytest.approx(0.0)
    assert empirical_tv(emp, emp) == 0.0
    assert empirical_tv(emp, emp2) == pytest.approx(0.5 * (0.25 + 0.25 + 0.5))


def test_tv_distance_golden():
    cfg = ExperimentConfig("joint", 3, 4, 10, 4096, seed=1, polynomials=("t",))
    emp = run_joint(cfg)
    theo = {(CokernelClass(lam),): limits.cohen_lenstra_mass(limits.ModuleType(3, lam)).value
            for lam in [(), (1,), (2,), (1, 1)]}
    assert tv_distance(emp, theo) == pytest.approx(GOLDEN_TV, abs=1e-12)


GOLDEN_TV = 0.0076695856424193005  # pinned at first run


@pytest.mark.parametrize("polys", [("t",), ("t^2+t+1",), ("t", "t-1")])
def test_big_modulus_path_matches_reference(polys):
    from padic_cokernels.smith import PolynomialSpec, char_matrix, cokernel_class

    cfg = joint_config(k=33, n=4, samples=40, polynomials=polys, seed=12)
    emp = run_joint(cfg)
    mats = montecarlo._sample_block(block_rng(cfg.seed, 0), 40, 4, 2, 33, False)
    assert mats.dtype == object
    tally = {}
    base = RingParams(2, 33)
    for A in mats:
        key = tuple(
            cokernel_class(char_matrix(LocalMatrix(base, A), PolynomialSpec.parse(P).ring_params(2, 33)))
            for P in polys
        )
        tally[key] = tally.get(key, 0) + 1
    assert {**emp.counts, **emp.undetermined} == tally
