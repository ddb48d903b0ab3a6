"""Finite-dimensional vectors, operators, balls and the Neumann-series machinery.

Everything is max-norm based: the operator norm is the max entry absolute
value in the ultrametric case and the max row sum in the real case, both in
closed form.  Rational twins of the matrix routines (suffix ``rat_``) run in
exact Fraction arithmetic and back the certificate computations.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Sequence

from .errors import DimensionMismatch, NotAContraction, SchemaError, SingularMatrix
from .field import (
    FieldDescriptor,
    PadicScalar,
    abs_upper_bound,
    embed_rational,
    field_abs,
    rational_abs,
)


@dataclass(frozen=True)
class Vector:
    components: tuple

    def __post_init__(self):
        if not self.components:
            raise DimensionMismatch("empty vector")

    @property
    def descriptor(self) -> FieldDescriptor:
        return self.components[0].descriptor

    @property
    def dim(self) -> int:
        return len(self.components)

    @classmethod
    def from_rationals(cls, values: Sequence, descriptor: FieldDescriptor) -> "Vector":
        return cls(tuple(embed_rational(Fraction(v), 1, descriptor) for v in values))

    def to_rationals(self) -> tuple[Fraction, ...]:
        return tuple(c.to_rational() for c in self.components)

    def __add__(self, other: "Vector") -> "Vector":
        return Vector(tuple(a + b for a, b in zip(self.components, other.components)))

    def __sub__(self, other: "Vector") -> "Vector":
        return Vector(tuple(a - b for a, b in zip(self.components, other.components)))

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.components)


@dataclass(frozen=True)
class Operator:
    """n x m matrix of scalars acting by left multiplication."""

    entries: tuple

    def __post_init__(self):
        if not self.entries or not self.entries[0]:
            raise DimensionMismatch("empty operator")
        width = len(self.entries[0])
        if any(len(r) != width for r in self.entries):
            raise DimensionMismatch("ragged operator")

    @property
    def descriptor(self) -> FieldDescriptor:
        return self.entries[0][0].descriptor

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.entries), len(self.entries[0])

    @classmethod
    def from_rationals(cls, rows: Sequence[Sequence], descriptor: FieldDescriptor) -> "Operator":
        return cls(
            tuple(
                tuple(embed_rational(Fraction(v), 1, descriptor) for v in row) for row in rows
            )
        )

    @classmethod
    def identity(cls, n: int, descriptor: FieldDescriptor) -> "Operator":
        one, zero = descriptor.one(), descriptor.zero()
        return cls(tuple(tuple(one if i == j else zero for j in range(n)) for i in range(n)))

    def apply(self, v: Vector) -> Vector:
        n, m = self.shape
        if v.dim != m:
            raise DimensionMismatch(f"operator is {n}x{m}, vector has dim {v.dim}")
        out = []
        for row in self.entries:
            acc = self.descriptor.zero()
            for a, x in zip(row, v.components):
                acc = acc + a * x
            out.append(acc)
        return Vector(tuple(out))

    def compose(self, other: "Operator") -> "Operator":
        n, k = self.shape
        k2, m = other.shape
        if k != k2:
            raise DimensionMismatch("shape mismatch in composition")
        rows = []
        for i in range(n):
            row = []
            for j in range(m):
                acc = self.descriptor.zero()
                for t in range(k):
                    acc = acc + self.entries[i][t] * other.entries[t][j]
                row.append(acc)
            rows.append(tuple(row))
        return Operator(tuple(rows))

    def __add__(self, other: "Operator") -> "Operator":
        return Operator(
            tuple(tuple(a + b for a, b in zip(r, s)) for r, s in zip(self.entries, other.entries))
        )

    def __sub__(self, other: "Operator") -> "Operator":
        return Operator(
            tuple(tuple(a - b for a, b in zip(r, s)) for r, s in zip(self.entries, other.entries))
        )

    def __neg__(self) -> "Operator":
        return Operator(tuple(tuple(-a for a in r) for r in self.entries))

    def to_rationals(self) -> tuple[tuple[Fraction, ...], ...]:
        return tuple(tuple(a.to_rational() for a in r) for r in self.entries)


def vec_norm(v: Vector):
    """Max norm over component absolute values (ultrametric when padic)."""
    norms = [field_abs(c) for c in v.components]
    zero = Fraction(0) if v.descriptor.ultrametric else 0.0
    return max(norms, default=zero)


def operator_norm(A: Operator):
    """Exact operator norm for the max norm.

    Ultrametric: the largest entry absolute value.  Real: the largest row sum
    of entry absolute values.
    """
    if A.descriptor.ultrametric:
        return max(field_abs(a) for row in A.entries for a in row)
    return max(sum(field_abs(a) for a in row) for row in A.entries)


def _operator_norm_upper(A: Operator):
    if A.descriptor.ultrametric:
        return max(abs_upper_bound(a) for row in A.entries for a in row)
    return max(sum(abs_upper_bound(a) for a in row) for row in A.entries)


def invert_exact(A: Operator) -> Operator:
    """Gauss-Jordan inverse, pivoting on the entry of maximal absolute value."""
    n, m = A.shape
    if n != m:
        raise DimensionMismatch("only square operators invert")
    desc = A.descriptor
    work = [list(row) for row in A.entries]
    inv = [list(row) for row in Operator.identity(n, desc).entries]
    for col in range(n):
        pivot_row = max(range(col, n), key=lambda r: field_abs(work[r][col]))
        if work[pivot_row][col].is_zero():
            raise SingularMatrix(f"no nonzero pivot in column {col} at tracked precision")
        work[col], work[pivot_row] = work[pivot_row], work[col]
        inv[col], inv[pivot_row] = inv[pivot_row], inv[col]
        piv = work[col][col]
        work[col] = [a / piv for a in work[col]]
        inv[col] = [a / piv for a in inv[col]]
        for r in range(n):
            if r == col:
                continue
            factor = work[r][col]
            if factor.is_zero():
                continue
            work[r] = [a - factor * b for a, b in zip(work[r], work[col])]
            inv[r] = [a - factor * b for a, b in zip(inv[r], inv[col])]
    return Operator(tuple(tuple(row) for row in inv))


@dataclass(frozen=True)
class NeumannResult:
    """Unpacks as (inverse, bound); also carries the truncation tail bound."""

    inverse: "Operator"
    bound: object
    tail_bound: object

    def __iter__(self):
        return iter((self.inverse, self.bound))


def neumann_invert(alpha: Operator, max_terms: int = 200) -> NeumannResult:
    """(id - alpha)^-1 as a truncated Neumann series, with its norm bound.

    Requires ||alpha|| < 1.  The padic branch sums until the next term no
    longer changes any tracked digit (exact from then on); the real branch
    stops below 1e-15 term norm or at `max_terms` and reports the geometric
    tail ||alpha||^K / (1 - ||alpha||) left out.  The bound is the a priori
    1/(1 - ||alpha||) on the norm of the inverse.
    """
    n, m = alpha.shape
    if n != m:
        raise DimensionMismatch("only square operators")
    desc = alpha.descriptor
    norm = _operator_norm_upper(alpha)
    if norm >= 1:
        raise NotAContraction(f"||alpha|| = {norm} >= 1")
    bound = 1 / (1 - norm) if desc.kind == "real" else Fraction(1) / (1 - Fraction(norm))
    total = Operator.identity(n, desc)
    term = total
    summed = 1
    padic_cap = max_terms if desc.kind == "real" else 8 * (desc.precision + n + 4)
    for _ in range(padic_cap):
        term = term.compose(alpha)
        if desc.kind == "real":
            if operator_norm(term) < 1e-15:
                break
            total = total + term
            summed += 1
        else:
            nxt = total + term
            if all(
                _same_repr(a, b)
                for ra, rb in zip(nxt.entries, total.entries)
                for a, b in zip(ra, rb)
            ):
                break
            total = nxt
            summed += 1
    if desc.kind == "real":
        tail = float(norm) ** summed / (1 - float(norm)) if norm > 0 else 0.0
    else:
        # exact once the terms fall below tracked precision
        tail = Fraction(0)
    return NeumannResult(inverse=total, bound=bound, tail_bound=tail)


def _same_repr(a: PadicScalar, b: PadicScalar) -> bool:
    return a.val == b.val and a.unit == b.unit and a.prec == b.prec


def classify_isometry(alpha: Operator, samples: int = 32, seed: int = 0) -> str:
    """Place a square padic operator among {"in_omega", "isometry", "neither"}.

    "in_omega" means ||id - alpha|| < 1 (every such operator preserves the
    ultrametric max norm).  General isometries of the max norm are exactly
    the integral matrices with unit determinant; a deterministic sampled
    norm-preservation check cross-validates the criterion.
    """
    desc = alpha.descriptor
    if not desc.ultrametric:
        raise SchemaError("classification only applies to the ultrametric branch")
    n, m = alpha.shape
    if n != m:
        raise DimensionMismatch("only square operators")
    delta = Operator.identity(n, desc) - alpha
    if _operator_norm_upper(delta) < 1:
        return "in_omega"
    if _operator_norm_upper(alpha) > 1:
        return "neither"
    det = _det_tracked(alpha)
    if det.is_zero() or field_abs(det) != 1:
        return "neither"
    rng = random.Random(seed)
    points = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    for _ in range(samples):
        points.append([rng.randint(-50, 50) for _ in range(n)])
    for pt in points:
        if all(x == 0 for x in pt):
            continue
        v = Vector.from_rationals(pt, desc)
        if vec_norm(alpha.apply(v)) != vec_norm(v):
            return "neither"
    return "isometry"


def _det_tracked(A: Operator):
    n, _ = A.shape
    work = [list(row) for row in A.entries]
    det = A.descriptor.one()
    for col in range(n):
        pivot_row = max(range(col, n), key=lambda r: field_abs(work[r][col]))
        if work[pivot_row][col].is_zero():
            return A.descriptor.zero()
        if pivot_row != col:
            work[col], work[pivot_row] = work[pivot_row], work[col]
            det = -det
        piv = work[col][col]
        det = det * piv
        for r in range(col + 1, n):
            factor = work[r][col] / piv
            work[r] = [a - factor * b for a, b in zip(work[r], work[col])]
    return det


# ---------------------------------------------------------------------------
# Exact rational twins (certificate arithmetic)


def rat_vec_norm(v: Sequence, descriptor: FieldDescriptor) -> Fraction:
    return max((rational_abs(x, descriptor) for x in v), default=Fraction(0))


def rat_operator_norm(rows: Sequence[Sequence], descriptor: FieldDescriptor) -> Fraction:
    if descriptor.ultrametric:
        return max(rational_abs(a, descriptor) for row in rows for a in row)
    return max(sum(rational_abs(a, descriptor) for a in row) for row in rows)


def rat_mat_vec(rows: Sequence[Sequence], v: Sequence) -> tuple[Fraction, ...]:
    return tuple(sum((Fraction(a) * Fraction(x) for a, x in zip(row, v)), Fraction(0)) for row in rows)


def rat_mat_mul(a: Sequence[Sequence], b: Sequence[Sequence]) -> tuple[tuple[Fraction, ...], ...]:
    n, k, m = len(a), len(b), len(b[0])
    return tuple(
        tuple(sum((Fraction(a[i][t]) * Fraction(b[t][j]) for t in range(k)), Fraction(0)) for j in range(m))
        for i in range(n)
    )


def rat_mat_invert(rows: Sequence[Sequence]) -> tuple[tuple[Fraction, ...], ...]:
    """Exact inverse over the rationals."""
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise DimensionMismatch("only square matrices invert")
    work = [[Fraction(x) for x in row] for row in rows]
    inv = [[Fraction(1 if i == j else 0) for j in range(n)] for i in range(n)]
    for col in range(n):
        pivot_row = next((r for r in range(col, n) if work[r][col] != 0), None)
        if pivot_row is None:
            raise SingularMatrix(f"column {col} has no nonzero pivot")
        work[col], work[pivot_row] = work[pivot_row], work[col]
        inv[col], inv[pivot_row] = inv[pivot_row], inv[col]
        piv = work[col][col]
        work[col] = [x / piv for x in work[col]]
        inv[col] = [x / piv for x in inv[col]]
        for r in range(n):
            if r == col or work[r][col] == 0:
                continue
            f = work[r][col]
            work[r] = [x - f * y for x, y in zip(work[r], work[col])]
            inv[r] = [x - f * y for x, y in zip(inv[r], inv[col])]
    return tuple(tuple(row) for row in inv)


# ---------------------------------------------------------------------------
# Balls


@dataclass(frozen=True)
class Ball:
    """center + radius in the value group; padic radii are powers of p.

    The center is kept as exact rationals (the embedded Vector is derived),
    so membership and all coefficient bounds over the ball stay exact.
    """

    descriptor: FieldDescriptor
    center_exact: tuple
    radius: Fraction
    closed: bool = True
    _center_cache: dict = dc_field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(
            self, "center_exact", tuple(Fraction(c) for c in self.center_exact)
        )
        object.__setattr__(self, "radius", Fraction(self.radius))
        if not self.descriptor.valid_radius(self.radius):
            raise SchemaError(
                f"radius {self.radius} not attainable in this value group"
            )

    @property
    def center(self) -> Vector:
        key = "v"
        if key not in self._center_cache:
            self._center_cache[key] = Vector.from_rationals(self.center_exact, self.descriptor)
        return self._center_cache[key]

    @property
    def dim(self) -> int:
        return len(self.center_exact)

    def contains_rational(self, point: Sequence) -> bool:
        d = max(
            rational_abs(Fraction(x) - c, self.descriptor)
            for x, c in zip(point, self.center_exact)
        )
        return d <= self.radius if self.closed else d < self.radius

    def contains_tracked(self, v: Vector) -> bool:
        """Membership at tracked precision (never reports a false escape)."""
        center = self.center
        ultra = self.descriptor.ultrametric
        slack = 0 if ultra else self.descriptor.tolerance * max(1.0, float(self.radius))
        for a, c in zip(v.components, center.components):
            diff = a - c
            if diff.is_zero():
                continue
            d = field_abs(diff)
            if self.closed:
                if d > self.radius + slack:
                    return False
            elif d >= self.radius + slack:
                return False
        return True

    def contains_ball(self, other: "Ball") -> bool:
        dist = max(
            rational_abs(a - b, self.descriptor)
            for a, b in zip(self.center_exact, other.center_exact)
        )
        if self.descriptor.ultrametric:
            return other.radius <= self.radius and dist <= self.radius
        return dist + other.radius <= self.radius

    def coordinate_sups(self) -> tuple[Fraction, ...]:
        """Per-coordinate sup of |x_i| over the ball (exact)."""
        out = []
        for c in self.center_exact:
            ac = rational_abs(c, self.descriptor)
            if self.descriptor.ultrametric:
                out.append(max(ac, self.radius))
            else:
                out.append(ac + self.radius)
        return tuple(out)
