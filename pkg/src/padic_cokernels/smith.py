"""Matrices over Z/p^k and R/p^k R, Smith normal form and cokernel classes."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from . import _kernels, rings
from .rings import RingParams


class DegreeMismatch(ValueError):
    pass


class PolynomialSyntaxError(ValueError):
    pass


def _dtype_for(params: RingParams):
    return np.int64 if params.modulus <= _kernels.FAST_MODULUS_LIMIT else object


@dataclass(frozen=True, eq=False)
class LocalMatrix:
    """Dense matrix over R/p^k R.

    ``entries`` has shape (rows, cols) for the base ring (d = 1) and
    (rows, cols, d) for an extension.  It is int64 when p^k <= 2^31 and an
    object array of Python ints otherwise.
    """

    params: RingParams
    entries: np.ndarray

    def __post_init__(self):
        dtype = _dtype_for(self.params)
        ent = np.array(self.entries, dtype=object) % self.params.modulus
        ent = ent.astype(dtype)
        if self.params.is_base:
            if ent.ndim != 2:
                raise ValueError(f"base-ring matrix needs a 2-D array, got shape {ent.shape}")
        elif ent.ndim != 3 or ent.shape[2] != self.params.d:
            raise ValueError(f"extension matrix needs shape (rows, cols, {self.params.d})")
        ent.flags.writeable = False
        object.__setattr__(self, "entries", ent)

    @classmethod
    def from_rows(cls, rows, params: RingParams) -> "LocalMatrix":
        return cls(params, np.array(rows, dtype=object))

    @classmethod
    def identity(cls, n: int, params: RingParams) -> "LocalMatrix":
        return cls.diag([1] * n, params)

    @classmethod
    def zeros(cls, rows: int, cols: int, params: RingParams) -> "LocalMatrix":
        shape = (rows, cols) if params.is_base else (rows, cols, params.d)
        return cls(params, np.zeros(shape, dtype=np.int64))

    @classmethod
    def diag(cls, values, params: RingParams) -> "LocalMatrix":
        n = len(values)
        if params.is_base:
            ent = np.zeros((n, n), dtype=object)
            for i, x in enumerate(values):
                ent[i, i] = x
        else:
            ent = np.zeros((n, n, params.d), dtype=object)
            for i, x in enumerate(values):
                ent[i, i] = x if isinstance(x, tuple) else (x,) + (0,) * (params.d - 1)
        return cls(params, ent)

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    def __getitem__(self, ij) -> rings.Scalar:
        i, j = ij
        if self.params.is_base:
            return int(self.entries[i, j])
        return tuple(int(c) for c in self.entries[i, j])

    def to_lists(self) -> list[list]:
        return [[self[i, j] for j in range(self.cols)] for i in range(self.rows)]

    def __eq__(self, other):
        if not isinstance(other, LocalMatrix):
            return NotImplemented
        return self.params == other.params and np.array_equal(self.entries, other.entries)

    def __add__(self, other: "LocalMatrix") -> "LocalMatrix":
        _check_same_ring(self, other)
        return LocalMatrix(self.params, self.entries.astype(object) + other.entries.astype(object))

    def __sub__(self, other: "LocalMatrix") -> "LocalMatrix":
        _check_same_ring(self, other)
        return LocalMatrix(self.params, self.entries.astype(object) - other.entries.astype(object))

    def scale(self, c: int) -> "LocalMatrix":
        return LocalMatrix(self.params, self.entries.astype(object) * c)

    def __matmul__(self, other: "LocalMatrix") -> "LocalMatrix":
        _check_same_ring(self, other)
        if self.cols != other.rows:
            raise ValueError(f"cannot multiply {self.shape} by {other.shape}")
        if self.params.is_base:
            return LocalMatrix(self.params, self.entries.astype(object) @ other.entries.astype(object))
        a, b = self.to_lists(), other.to_lists()
        zero = self.params.zero()
        out = []
        for i in range(self.rows):
            row = []
            for j in range(other.cols):
                acc = zero
                for t in range(self.cols):
                    acc = rings.add(acc, rings.mul(a[i][t], b[t][j], self.params), self.params)
                row.append(acc)
            out.append(row)
        return LocalMatrix.from_rows(out, self.params)

    def reduce_precision(self, k: int) -> "LocalMatrix":
        return LocalMatrix(self.params.with_precision(k), self.entries.astype(object))

    def __repr__(self):
        return f"LocalMatrix(p={self.params.p}, k={self.params.k}, d={self.params.d}, {self.to_lists()})"


def _check_same_ring(a: LocalMatrix, b: LocalMatrix):
    if a.params != b.params:
        raise DegreeMismatch(f"matrices over different rings: {a.params} vs {b.params}")


@dataclass(frozen=True, order=True)
class CokernelClass:
    """Isomorphism class of cok(M) at precision k.

    Represents (+)_i R/p^parts[i] plus ``saturated_count`` summands whose
    exponent is at least k and therefore undetermined.  ``residue_degree``
    records [R/pR : F_p] and is ignored when comparing classes.
    """

    parts: tuple[int, ...] = ()
    saturated_count: int = 0
    residue_degree: int = field(default=1, compare=False)

    def __post_init__(self):
        parts = tuple(sorted((int(x) for x in self.parts), reverse=True))
        if any(x < 1 for x in parts):
            raise ValueError(f"parts must be positive: {parts}")
        object.__setattr__(self, "parts", parts)

    @classmethod
    def from_valuations(cls, valuations, k: int, residue_degree: int = 1) -> "CokernelClass":
        parts = [v for v in valuations if 0 < v < k]
        saturated = sum(1 for v in valuations if v >= k)
        return cls(tuple(parts), saturated, residue_degree)

    @property
    def p_rank(self) -> int:
        return len(self.parts) + self.saturated_count

    @property
    def is_trivial(self) -> bool:
        return not self.parts and not self.saturated_count

    @property
    def is_saturated(self) -> bool:
        return self.saturated_count > 0

    def key(self) -> str:
        """Canonical string such as ``[3,1]``; saturated summands print as ``*``."""
        items = [str(x) for x in self.parts] + ["*"] * self.saturated_count
        return "[" + ",".join(items) + "]"

    def __str__(self):
        return self.key()


# --- polynomials -----------------------------------------------------------

_TERM = re.compile(r"\s*([+-])?\s*(\d+)?\s*(\*?\s*t\s*(?:\^\s*(\d+))?)?\s*")


@dataclass(frozen=True)
class PolynomialSpec:
    """Monic integer polynomial, coefficients lowest degree first."""

    coeffs: tuple[int, ...]

    def __post_init__(self):
        coeffs = tuple(int(c) for c in self.coeffs)
        while len(coeffs) > 1 and coeffs[-1] == 0:
            coeffs = coeffs[:-1]
        if len(coeffs) < 2 or coeffs[-1] != 1:
            raise ValueError(f"polynomial {coeffs} is not monic of degree >= 1")
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def parse(cls, text: str) -> "PolynomialSpec":
        """Parse strings like ``"t^2+t+1"``, ``"t-1"``, ``"t^3 - 2*t + 5"``."""
        src = text.strip()
        if not src:
            raise PolynomialSyntaxError("empty polynomial")
        coeffs: dict[int, int] = {}
        pos = 0
        first = True
        while pos < len(src):
            m = _TERM.match(src, pos)
            sign, num, tpart, exp = m.groups()
            if m.end() == pos or (num is None and tpart is None):
                raise PolynomialSyntaxError(f"cannot parse polynomial {text!r} at column {pos + 1}")
            if sign is None and not first:
                raise PolynomialSyntaxError(f"missing operator in {text!r} at column {pos + 1}")
            c = int(num) if num is not None else 1
            if sign == "-":
                c = -c
            deg = 0 if tpart is None else (int(exp) if exp is not None else 1)
            coeffs[deg] = coeffs.get(deg, 0) + c
            pos = m.end()
            first = False
        degree = max(coeffs)
        try:
            return cls(tuple(coeffs.get(i, 0) for i in range(degree + 1)))
        except ValueError as exc:
            raise PolynomialSyntaxError(f"{text!r}: {exc}") from None

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def ring_params(self, p: int, k: int) -> RingParams:
        return RingParams(p, k, self.coeffs)

    def reduction(self, p: int) -> tuple[int, ...]:
        return tuple(c % p for c in self.coeffs)

    def __mul__(self, other: "PolynomialSpec") -> "PolynomialSpec":
        out = [0] * (self.degree + other.degree + 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return PolynomialSpec(tuple(out))

    def __str__(self):
        terms = []
        for deg in range(self.degree, -1, -1):
            c = self.coeffs[deg]
            if c == 0:
                continue
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            if deg == 0:
                body = str(mag)
            else:
                body = ("" if mag == 1 else str(mag)) + ("t" if deg == 1 else f"t^{deg}")
            terms.append((sign, body))
        out = ("-" if terms[0][0] == "-" else "") + terms[0][1]
        for sign, body in terms[1:]:
            out += sign + body
        return out


# --- Smith normal form -----------------------------------------------------


def _divide_by_p_power(x, pv: int):
    if isinstance(x, tuple):
        return tuple(c // pv for c in x)
    return x // pv


def _reference_snf(M: LocalMatrix, transforms: bool):
    """Pure-Python SNF with optional U, V such that U M V is diagonal."""
    params = M.params
    p, k = params.p, params.k
    a = M.to_lists()
    n, c = M.rows, M.cols
    zero, one = params.zero(), params.one()
    if transforms:
        U = [[one if i == j else zero for j in range(n)] for i in range(n)]
        V = [[one if i == j else zero for j in range(c)] for i in range(c)]
    vals = []
    for s in range(min(n, c)):
        best, bi, bj = k, -1, -1
        for i in range(s, n):
            for j in range(s, c):
                v = rings.valuation(a[i][j], params)
                if v < best:
                    best, bi, bj = v, i, j
        if best == k:
            vals.extend([k] * (min(n, c) - s))
            break
        a[s], a[bi] = a[bi], a[s]
        for row in a:
            row[s], row[bj] = row[bj], row[s]
        if transforms:
            U[s], U[bi] = U[bi], U[s]
            for row in V:
                row[s], row[bj] = row[bj], row[s]
        pv = p**best
        uinv = rings.invert_unit(_divide_by_p_power(a[s][s], pv), params)
        a[s] = [rings.mul(x, uinv, params) for x in a[s]]
        if transforms:
            U[s] = [rings.mul(x, uinv, params) for x in U[s]]
        for i in range(s + 1, n):
            f = _divide_by_p_power(a[i][s], pv)
            if f != zero:
                a[i] = [rings.sub(x, rings.mul(f, y, params), params) for x, y in zip(a[i], a[s])]
                if transforms:
                    U[i] = [rings.sub(x, rings.mul(f, y, params), params) for x, y in zip(U[i], U[s])]
        if transforms:
            # column clearing only touches row s once the pivot column is clear
            for j in range(s + 1, c):
                g = _divide_by_p_power(a[s][j], pv)
                if g != zero:
                    a[s][j] = zero
                    for row in V:
                        row[j] = rings.sub(row[j], rings.mul(g, row[s], params), params)
        vals.append(best)
    vals.sort()
    if transforms:
        return vals, LocalMatrix.from_rows(U, params), LocalMatrix.from_rows(V, params)
    return vals


def smith_normal_form(M: LocalMatrix, transforms: bool = False):
    """Sorted SNF diagonal valuations of M (k means saturated).

    Pivots on an entry of minimal valuation, ties broken by smallest row then
    smallest column.  With ``transforms=True`` also returns invertible U, V
    with U @ M @ V diagonal (pure-Python path).
    """
    if M.rows == 0 or M.cols == 0:
        return ([], LocalMatrix.identity(M.rows, M.params), LocalMatrix.identity(M.cols, M.params)) if transforms else []
    params = M.params
    if transforms or M.entries.dtype == object:
        return _reference_snf(M, transforms)
    out = np.empty(min(M.rows, M.cols), dtype=np.int64)
    work = np.array(M.entries, dtype=np.int64)
    if params.is_base:
        _kernels.snf_base_inplace(work, params.p, params.k, params.modulus, out)
    else:
        poly = np.array(params.minpoly, dtype=np.int64)
        _kernels.snf_ext_inplace(work, poly, params.p, params.k, params.modulus, out)
    return [int(v) for v in out]


def cokernel_class(M: LocalMatrix) -> CokernelClass:
    # extra rows contribute free summands, i.e. saturated ones
    vals = smith_normal_form(M) + [M.params.k] * max(M.rows - M.cols, 0)
    return CokernelClass.from_valuations(vals, M.params.k, M.params.d)


def poly_eval_matrix(A: LocalMatrix, P: PolynomialSpec) -> LocalMatrix:
    """Horner evaluation of P(A) over the base ring."""
    if A.rows != A.cols:
        raise ValueError("poly_eval_matrix needs a square matrix")
    if not A.params.is_base:
        raise DegreeMismatch("poly_eval_matrix expects a base-ring matrix")
    params = A.params
    n = A.rows
    m = params.modulus
    a = A.entries.astype(object)
    eye = np.eye(n, dtype=np.int64).astype(object)
    acc = eye * P.coeffs[-1]
    for c in reversed(P.coeffs[:-1]):
        acc = (acc @ a + eye * c) % m
    return LocalMatrix(params, acc)


def char_matrix(A: LocalMatrix, params_ext: RingParams) -> LocalMatrix:
    """A - tI as a matrix over R = Z_p[t]/(params_ext.minpoly)."""
    if A.params.p != params_ext.p or A.params.k != params_ext.k:
        raise DegreeMismatch(
            f"base ring (p={A.params.p}, k={A.params.k}) does not match "
            f"extension (p={params_ext.p}, k={params_ext.k})"
        )
    if A.rows != A.cols:
        raise ValueError("char_matrix needs a square matrix")
    n, d = A.rows, params_ext.d
    if params_ext.is_base:
        # R = Z_p and t acts as the root -minpoly[0]
        ent = A.entries.astype(object) - params_ext.t()[0] * np.eye(n, dtype=np.int64).astype(object)
        return LocalMatrix(params_ext, ent)
    ent = np.zeros((n, n, d), dtype=object)
    ent[:, :, 0] = A.entries.astype(object)
    t = params_ext.t()
    for i in range(n):
        for s in range(d):
            ent[i, i, s] -= t[s]
    return LocalMatrix(params_ext, ent)


def p_rank(M: LocalMatrix) -> int:
    """r_p(cok M) = n - rank over F_p of M mod p."""
    if not M.params.is_base:
        return sum(1 for v in smith_normal_form(M) if v > 0) + max(M.rows - M.cols, 0)
    work = (M.entries.astype(object) % M.params.p).astype(np.int64)
    return M.rows - int(_kernels.fp_rank_inplace(work, M.params.p))
