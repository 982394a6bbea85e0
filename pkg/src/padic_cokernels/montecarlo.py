"""Seeded Monte Carlo over Haar-random matrices at finite p-adic precision.

Samples are generated in fixed-size blocks.  Block ``b`` draws from its own
stream seeded by ``SeedSequence(seed, spawn_key=(stream, b))``, so the result
depends only on (config, seed) and never on how blocks are spread over
workers.  Per-block counters are merged by addition.
"""

from __future__ import annotations

import math
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from . import _kernels, limits
from .rings import RingParams
from .smith import CokernelClass, LocalMatrix, PolynomialSpec, smith_normal_form

BLOCK_SIZE = 2048
DEFAULT_SEED = 20240229


class ConfigError(ValueError):
    pass


class InvariantViolation(AssertionError):
    pass


@dataclass(frozen=True)
class ShiftSpec:
    """Shift family for cok(A) vs cok(A + B).

    ``corank``:   B = diag(p I_r, I_(n-r)), r defaults to floor(n/2).
    ``bounded``:  B = diag(I_r, 0); r is the size of the identity block.
    ``explicit``: B given entrywise in ``matrix``.
    """

    family: str
    r: Optional[int] = None
    matrix: Optional[tuple[tuple[int, ...], ...]] = None

    def __post_init__(self):
        if self.family not in ("corank", "bounded", "explicit"):
            raise ConfigError(f"shift.family: unknown family {self.family!r}")
        if self.family == "explicit":
            if not self.matrix:
                raise ConfigError("shift.matrix: required for the explicit family")
            object.__setattr__(self, "matrix", tuple(tuple(int(x) for x in row) for row in self.matrix))
        elif self.family == "bounded" and self.r is None:
            raise ConfigError("shift.r: required for the bounded family")
        if self.r is not None and self.r < 0:
            raise ConfigError(f"shift.r: must be >= 0, got {self.r}")

    def build(self, n: int, p: int, k: int) -> np.ndarray:
        m = p**k
        if self.family == "explicit":
            B = np.array(self.matrix, dtype=object)
            if B.shape != (n, n):
                raise ConfigError(f"shift.matrix: shape {B.shape} does not match n={n}")
            return B % m
        r = n // 2 if self.r is None else self.r
        if r > n:
            raise ConfigError(f"shift.r: {r} exceeds n={n}")
        diag = [p if self.family == "corank" else 1] * r + [1 if self.family == "corank" else 0] * (n - r)
        return np.diag(np.array(diag, dtype=object)) % m

    def to_dict(self) -> dict:
        out = {"family": self.family}
        if self.r is not None:
            out["r"] = self.r
        if self.matrix is not None:
            out["matrix"] = [list(row) for row in self.matrix]
        return out


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    p: int
    k: int
    n: Union[int, tuple[int, ...]]
    samples: int
    seed: int = DEFAULT_SEED
    polynomials: tuple[str, ...] = ()
    shift: Optional[ShiftSpec] = None
    gl_condition: bool = False
    linearization_v: Optional[int] = None
    trust_margin: int = 1

    def __post_init__(self):
        if self.experiment not in ("joint", "shift", "linearize"):
            raise ConfigError(f"experiment: unknown experiment {self.experiment!r}")
        try:
            RingParams(self.p, self.k)
        except ValueError as exc:
            raise ConfigError(f"ring: {exc}") from None
        if isinstance(self.n, (list, tuple)):
            object.__setattr__(self, "n", tuple(int(x) for x in self.n))
            ns = self.n
        else:
            ns = (self.n,)
        if not ns or any(x < 1 for x in ns):
            raise ConfigError(f"sampling.n: sizes must be >= 1, got {self.n}")
        if self.samples < 1:
            raise ConfigError(f"sampling.samples: must be >= 1, got {self.samples}")
        if not 1 <= self.trust_margin <= self.k:
            raise ConfigError(f"analysis.trust_margin: must be in [1, k], got {self.trust_margin}")
        object.__setattr__(self, "polynomials", tuple(str(x) for x in self.polynomials))
        if self.experiment == "joint":
            self._check_polynomials()
        elif self.experiment == "shift" and self.shift is None:
            raise ConfigError("shift: required for the shift experiment")
        elif self.experiment == "linearize":
            if self.p == 2:
                raise ConfigError("ring.p: the linearization probe needs an odd prime")
            v = self.linearization_v
            if v is None or v < 1 or v >= self.k:
                raise ConfigError(f"linearization.v: need 1 <= v < k, got {v}")

    def _check_polynomials(self):
        if not self.polynomials:
            raise ConfigError("polynomials: the joint experiment needs at least one polynomial")
        seen = {}
        for i, text in enumerate(self.polynomials):
            try:
                poly = PolynomialSpec.parse(text)
                poly.ring_params(self.p, self.k)
            except ValueError as exc:
                raise ConfigError(f"polynomials[{i}]: {exc}") from None
            red = poly.reduction(self.p)
            if red in seen:
                raise ConfigError(
                    f"polynomials[{i}]: {text!r} has the same reduction mod {self.p} as {seen[red]!r}"
                )
            seen[red] = text

    @property
    def sizes(self) -> tuple[int, ...]:
        return self.n if isinstance(self.n, tuple) else (self.n,)

    def sweep(self):
        for n in self.sizes:
            yield replace(self, n=n)

    def polynomial_specs(self) -> list[PolynomialSpec]:
        return [PolynomialSpec.parse(x) for x in self.polynomials]

    def to_dict(self) -> dict:
        out = {
            "experiment": self.experiment,
            "ring": {"p": self.p, "k": self.k},
            "sampling": {
                "n": list(self.n) if isinstance(self.n, tuple) else self.n,
                "samples": self.samples,
                "seed": self.seed,
                "gl_condition": self.gl_condition,
            },
            "analysis": {"trust_margin": self.trust_margin},
        }
        if self.polynomials:
            out["polynomials"] = list(self.polynomials)
        if self.shift is not None:
            out["shift"] = self.shift.to_dict()
        if self.linearization_v is not None:
            out["linearization"] = {"v": self.linearization_v}
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config: top level must be a mapping")
        known = {"experiment", "ring", "sampling", "polynomials", "shift", "linearization", "analysis"}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"config: unknown section(s) {sorted(extra)}")

        def section(name):
            sec = data.get(name) or {}
            if not isinstance(sec, dict):
                raise ConfigError(f"{name}: must be a mapping")
            return sec

        def need(sec, secname, key, typ):
            if key not in sec:
                raise ConfigError(f"{secname}.{key}: missing")
            return _typed(sec[key], f"{secname}.{key}", typ)

        ring, sampling = section("ring"), section("sampling")
        shift = None
        if "shift" in data:
            s = section("shift")
            shift = ShiftSpec(
                family=need(s, "shift", "family", str),
                r=_typed(s["r"], "shift.r", int) if s.get("r") is not None else None,
                matrix=s.get("matrix"),
            )
        lin = section("linearization")
        n = sampling.get("n")
        if isinstance(n, list):
            n = tuple(_typed(x, "sampling.n", int) for x in n)
        else:
            n = need(sampling, "sampling", "n", int)
        polys = data.get("polynomials") or []
        if not isinstance(polys, list):
            raise ConfigError("polynomials: must be a list of strings")
        return cls(
            experiment=_typed(data.get("experiment"), "experiment", str),
            p=need(ring, "ring", "p", int),
            k=need(ring, "ring", "k", int),
            n=n,
            samples=need(sampling, "sampling", "samples", int),
            seed=_typed(sampling.get("seed", DEFAULT_SEED), "sampling.seed", int),
            polynomials=tuple(str(x) for x in polys),
            shift=shift,
            gl_condition=_typed(sampling.get("gl_condition", False), "sampling.gl_condition", bool),
            linearization_v=_typed(lin["v"], "linearization.v", int) if "v" in lin else None,
            trust_margin=_typed(section("analysis").get("trust_margin", 1), "analysis.trust_margin", int),
        )


def _typed(value, where: str, typ):
    if typ is int and isinstance(value, bool) or not isinstance(value, typ):
        raise ConfigError(f"{where}: expected {typ.__name__}, got {value!r}")
    return value


# --- empirical distributions ---------------------------------------------------

ClassTuple = tuple  # tuple[CokernelClass, ...]


@dataclass
class EmpiricalJoint:
    """Counts of cokernel-class tuples over ``total`` samples.

    ``counts`` holds tuples whose classes are all trusted; ``undetermined``
    holds the rest (some coordinate has a summand of exponent beyond the
    trusted precision), so sum(counts) + undetermined_count == total.
    """

    labels: tuple[str, ...]
    counts: dict
    undetermined: dict
    total: int
    metadata: dict = field(default_factory=dict)

    @property
    def undetermined_count(self) -> int:
        return sum(self.undetermined.values())

    @property
    def undetermined_mass(self) -> float:
        return self.undetermined_count / self.total

    def frequency(self, key: ClassTuple) -> float:
        return self.counts.get(tuple(key), 0) / self.total

    def stderr(self, key: ClassTuple) -> float:
        f = self.frequency(key)
        return math.sqrt(f * (1 - f) / self.total)

    def marginal(self, i: int) -> Counter:
        out = Counter()
        for table in (self.counts, self.undetermined):
            for key, c in table.items():
                out[key[i]] += c
        return out

    def key_string(self, key: ClassTuple) -> str:
        return "|".join(f"{label}:{cls.key()}" for label, cls in zip(self.labels, key))

    def sorted_keys(self) -> list:
        return sorted(self.counts, key=lambda key: (-self.counts[key], self.key_string(key)))

    def __eq__(self, other):
        if not isinstance(other, EmpiricalJoint):
            return NotImplemented
        return (self.labels, self.counts, self.undetermined, self.total) == (
            other.labels,
            other.counts,
            other.undetermined,
            other.total,
        )


def tv_distance(emp: EmpiricalJoint, theo: dict) -> float:
    """Total variation between emp and a partial law ``theo`` (key -> probability).

    Mass not listed in ``theo`` forms an "other" bucket; undetermined samples
    and unlisted empirical keys go there too.
    """
    theo = {tuple(k): float(v) for k, v in theo.items()}
    listed = 0.0
    dist = 0.0
    for key, t in theo.items():
        f = emp.frequency(key)
        listed += f
        dist += abs(f - t)
    emp_other = 1.0 - listed
    theo_other = max(0.0, 1.0 - sum(theo.values()))
    dist += abs(emp_other - theo_other)
    return 0.5 * dist


def empirical_tv(a: EmpiricalJoint, b: EmpiricalJoint) -> float:
    """Total variation between two empirical joints; undetermined mass is one bucket."""
    keys = set(a.counts) | set(b.counts)
    dist = sum(abs(a.frequency(key) - b.frequency(key)) for key in keys)
    dist += abs(a.undetermined_mass - b.undetermined_mass)
    return 0.5 * dist


# --- sampling -------------------------------------------------------------------


def block_rng(seed: int, block: int, stream: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream, block)))


def _fast(params_or_modulus) -> bool:
    m = params_or_modulus if isinstance(params_or_modulus, int) else params_or_modulus.modulus
    return m <= _kernels.FAST_MODULUS_LIMIT


def _draw_residues(rng: np.random.Generator, shape, p: int, k: int) -> np.ndarray:
    m = p**k
    if _fast(m):
        return rng.integers(0, m, size=shape, dtype=np.int64)
    digits = rng.integers(0, p, size=tuple(shape) + (k,), dtype=np.int64).astype(object)
    return (digits * np.array([p**i for i in range(k)], dtype=object)).sum(axis=-1)


def _fp_ranks(mats: np.ndarray, p: int) -> np.ndarray:
    return _kernels.fp_rank_batch((mats % p).astype(np.int64), p)


def sample_matrix(n: int, params: RingParams, rng: np.random.Generator) -> LocalMatrix:
    """Haar-random n x n matrix over R/p^k R (i.i.d. uniform entries)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    shape = (n, n) if params.is_base else (n, n, params.d)
    return LocalMatrix(params, _draw_residues(rng, shape, params.p, params.k))


def sample_gl(n: int, params: RingParams, rng: np.random.Generator) -> LocalMatrix:
    """Haar-random element of GL_n(Z_p) at precision k, by rejection on the mod-p reduction."""
    if not params.is_base:
        raise ValueError("sample_gl is implemented for the base ring only")
    while True:
        A = _draw_residues(rng, (n, n), params.p, params.k)
        if _fp_ranks(A[None], params.p)[0] == n:
            return LocalMatrix(params, A)


def _sample_block(rng, count: int, n: int, p: int, k: int, gl: bool) -> np.ndarray:
    if not gl:
        return _draw_residues(rng, (count, n, n), p, k)
    accepted = []
    have = 0
    while have < count:
        cand = _draw_residues(rng, (count, n, n), p, k)
        good = cand[_fp_ranks(cand, p) == n]
        accepted.append(good)
        have += len(good)
    return np.concatenate(accepted)[:count]


# --- per-block computation --------------------------------------------------------


def _snf_rows(mats: np.ndarray, params: RingParams, shift=None) -> np.ndarray:
    """SNF valuations of (A + shift) for each A, over the base ring."""
    p, k, m = params.p, params.k, params.modulus
    if _fast(m):
        if shift is None:
            return _kernels.snf_base_batch(mats, p, k, m)
        return _kernels.shifted_snf_base_batch(mats, np.asarray(shift, dtype=np.int64), p, k, m)
    out = []
    for A in mats:
        X = A if shift is None else A + shift
        out.append(smith_normal_form(LocalMatrix(params, X)))
    return np.array(out, dtype=np.int64)


def _charmat_rows(mats: np.ndarray, poly: tuple, params: RingParams) -> np.ndarray:
    """SNF valuations over R = Z_p[t]/(poly) of A - tI for each A."""
    p, k, m = params.p, params.k, params.modulus
    n = mats.shape[1]
    if len(poly) == 2:
        # R = Z_p with t -> -poly[0]; A - tI = A + poly[0] I
        return _snf_rows(mats, params, np.eye(n, dtype=np.int64) * (poly[0] % m))
    if _fast(m):
        return _kernels.charmat_snf_batch(mats, np.array(poly, dtype=np.int64), p, k, m)
    from .smith import char_matrix

    ext = RingParams(p, k, poly)
    return np.array([smith_normal_form(char_matrix(LocalMatrix(params, A), ext)) for A in mats], dtype=np.int64)


def _count_rows(coords: Sequence[np.ndarray]) -> Counter:
    rows = np.concatenate(coords, axis=1)
    uniq, counts = np.unique(rows, axis=0, return_counts=True)
    widths = [c.shape[1] for c in coords]
    out = Counter()
    for row, c in zip(uniq, counts):
        key, pos = [], 0
        for w in widths:
            key.append(tuple(int(x) for x in row[pos : pos + w]))
            pos += w
        out[tuple(key)] += int(c)
    return out


def _check_equal_p_rank(a: np.ndarray, b: np.ndarray, what: str):
    ra = (a > 0).sum(axis=1)
    rb = (b > 0).sum(axis=1)
    if not np.array_equal(ra, rb):
        bad = int(np.flatnonzero(ra != rb)[0])
        raise InvariantViolation(f"{what}: p-ranks differ ({ra[bad]} vs {rb[bad]}) at sample {bad} of block")


@dataclass(frozen=True)
class _Task:
    kind: str
    p: int
    k: int
    n: int
    samples: int
    seed: int
    gl: bool = False
    polys: tuple = ()
    shift: Optional[tuple] = None
    v: int = 0
    stream: int = 0


def _block_counts(task: _Task, block: int) -> Counter:
    count = min(BLOCK_SIZE, task.samples - block * BLOCK_SIZE)
    rng = block_rng(task.seed, block, task.stream)
    params = RingParams(task.p, task.k)
    m = params.modulus
    n = task.n
    eye = np.eye(n, dtype=np.int64)
    if task.kind == "joint":
        mats = _sample_block(rng, count, n, task.p, task.k, task.gl)
        coords = [_charmat_rows(mats, poly, params) for poly in task.polys]
    elif task.kind == "shift":
        mats = _sample_block(rng, count, n, task.p, task.k, task.gl)
        shift = np.array(task.shift, dtype=object)
        shift = shift.astype(np.int64) if _fast(m) else shift
        coords = [_snf_rows(mats, params), _snf_rows(mats, params, shift)]
    elif task.kind == "linearize-gl":
        mats = _sample_block(rng, count, n, task.p, task.k, True)
        coords = [
            _snf_rows(mats, params, (-eye) % m),
            _snf_rows(mats, params, (-(task.p**task.v + 1) * eye) % m),
        ]
        _check_equal_p_rank(coords[0], coords[1], "cok(A-I) vs cok(A-(p^v+1)I)")
    elif task.kind == "linearize-m":
        mats = _sample_block(rng, count, n, task.p, task.k, False)
        coords = [_snf_rows(mats, params), _snf_rows(mats, params, (-(task.p**task.v) * eye) % m)]
        _check_equal_p_rank(coords[0], coords[1], "cok(M) vs cok(M-p^v I)")
    else:
        raise ValueError(f"unknown task kind {task.kind!r}")
    return _count_rows(coords)


def _blocks_counts(task: _Task, blocks: Sequence[int]) -> Counter:
    out = Counter()
    for b in blocks:
        out.update(_block_counts(task, b))
    return out


def _run_task(task: _Task, workers: int) -> Counter:
    n_blocks = -(-task.samples // BLOCK_SIZE)
    blocks = list(range(n_blocks))
    if workers <= 1 or n_blocks == 1:
        return _blocks_counts(task, blocks)
    workers = min(workers, n_blocks)
    # static contiguous partition of the block range
    bounds = [round(i * n_blocks / workers) for i in range(workers + 1)]
    chunks = [blocks[bounds[i] : bounds[i + 1]] for i in range(workers)]
    total = Counter()
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for part in pool.map(_blocks_counts, [task] * workers, chunks):
            total.update(part)
    return total


def _classify(raw: Counter, k: int, degrees: Sequence[int], trust_margin: int):
    limit = k - trust_margin
    counts, undetermined = {}, {}
    for key, c in raw.items():
        classes = tuple(CokernelClass.from_valuations(vals, k, d) for vals, d in zip(key, degrees))
        trusted = all(not cls.is_saturated and all(x <= limit for x in cls.parts) for cls in classes)
        table = counts if trusted else undetermined
        table[classes] = table.get(classes, 0) + c
    return counts, undetermined


def _single_n(config: ExperimentConfig) -> int:
    if isinstance(config.n, tuple):
        if len(config.n) != 1:
            raise ConfigError("sampling.n: a sweep must be run one size at a time (use config.sweep())")
        return config.n[0]
    return config.n


def _finish(config, labels, degrees, raw, started, extra=None) -> EmpiricalJoint:
    counts, undetermined = _classify(raw, config.k, degrees, config.trust_margin)
    meta = {"config": config.to_dict(), "seed": config.seed, "wall_time": time.perf_counter() - started}
    meta.update(extra or {})
    return EmpiricalJoint(tuple(labels), counts, undetermined, config.samples, meta)


def run_joint(config: ExperimentConfig, workers: int = 1) -> EmpiricalJoint:
    """Joint law of the R_j-classes of cok(A - tI), one coordinate per polynomial."""
    if config.experiment != "joint":
        raise ConfigError(f"experiment: expected 'joint', got {config.experiment!r}")
    started = time.perf_counter()
    n = _single_n(config)
    polys = config.polynomial_specs()
    task = _Task("joint", config.p, config.k, n, config.samples, config.seed, config.gl_condition,
                 polys=tuple(P.coeffs for P in polys))
    raw = _run_task(task, workers)
    labels = [f"P{i + 1}" for i in range(len(polys))]
    return _finish(config, labels, [P.degree for P in polys], raw, started)


def run_shift(config: ExperimentConfig, workers: int = 1) -> EmpiricalJoint:
    """Joint law of (cok A, cok(A + B_n))."""
    if config.experiment != "shift":
        raise ConfigError(f"experiment: expected 'shift', got {config.experiment!r}")
    started = time.perf_counter()
    n = _single_n(config)
    B = config.shift.build(n, config.p, config.k)
    task = _Task("shift", config.p, config.k, n, config.samples, config.seed, config.gl_condition,
                 shift=tuple(tuple(int(x) for x in row) for row in B))
    raw = _run_task(task, workers)
    b_rank = n - int(_kernels.fp_rank_inplace((B % config.p).astype(np.int64), config.p))
    return _finish(config, ["A", "A+B"], [1, 1], raw, started, {"shift_p_rank": b_rank})


@dataclass
class LinearizationResult:
    gl_side: EmpiricalJoint
    m_side: EmpiricalJoint
    tv: float


def run_linearization(config: ExperimentConfig, workers: int = 1) -> LinearizationResult:
    """(cok(A-I), cok(A-(p^v+1)I)) for Haar A in GL_n vs (cok M, cok(M - p^v I)) for Haar M."""
    if config.experiment != "linearize":
        raise ConfigError(f"experiment: expected 'linearize', got {config.experiment!r}")
    started = time.perf_counter()
    n = _single_n(config)
    v = config.linearization_v
    common = dict(p=config.p, k=config.k, n=n, samples=config.samples, seed=config.seed, v=v)
    raw_gl = _run_task(_Task("linearize-gl", stream=1, **common), workers)
    raw_m = _run_task(_Task("linearize-m", stream=2, **common), workers)
    gl_side = _finish(config, ["A-I", f"A-(p^{v}+1)I"], [1, 1], raw_gl, started, {"side": "GL"})
    m_side = _finish(config, ["M", f"M-p^{v}I"], [1, 1], raw_m, started, {"side": "M"})
    return LinearizationResult(gl_side, m_side, empirical_tv(gl_side, m_side))


def enum_fp_exact(n: int, p: int, shift, cap: int = 2**26) -> Fraction:
    """Exact Prob(A and A + shift both invertible) for uniform A in M_n(F_p), by enumeration."""
    total = p ** (n * n)
    if total > cap:
        raise limits.TooLarge(f"{p}^{n * n} matrices exceed the enumeration cap {cap}")
    S = np.array(shift, dtype=np.int64).reshape(n, n) % p
    return Fraction(int(_kernels.enum_pair_invertible(n, p, S)), total)


# --- theoretical values for records ---------------------------------------------


def theoretical_joint(config: ExperimentConfig, key: ClassTuple, tol: float = 1e-12):
    polys = config.polynomial_specs()
    mods = [limits.ModuleType(config.p**P.degree, cls.parts) for P, cls in zip(polys, key)]
    return limits.joint_limit(mods, tol)


def theoretical_shift(config: ExperimentConfig, key: ClassTuple, tol: float = 1e-12):
    """Limit law for a shift key, or None where no closed form applies.

    The corank family is covered by the product law; for the bounded and
    explicit families only the (trivial, trivial) event has a known limit.
    """
    if config.shift.family == "corank":
        return limits.joint_limit([limits.ModuleType(config.p, cls.parts) for cls in key], tol)
    if all(cls.is_trivial for cls in key):
        n = _single_n(config)
        B = config.shift.build(n, config.p, config.k)
        rank = int(_kernels.fp_rank_inplace((B % config.p).astype(np.int64), config.p))
        return limits.bounded_shift_limit(config.p, rank, tol)
    return None
