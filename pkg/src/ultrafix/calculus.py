"""Polynomial maps and their difference-quotient calculus.

Maps are polynomials with exact rational coefficients, so the directional
difference quotient (f(x+ty) - f(x))/t has an exact polynomial closed form in
(x, y, t) and every quotient identity is decidable.  Lipschitz and strictness
moduli over max-norm balls come from coordinate telescoping of monomials:
exact and tight on the ultrametric side, conservative but sound on the real
side.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Callable, Sequence

from .errors import DimensionMismatch, DomainViolation, SchemaError
from .field import FieldDescriptor, Scalar, embed_rational, rational_abs
from .linalg import Ball, Operator, Vector

Monomial = tuple[tuple[int, ...], Fraction]


def _normalize_output(monomials) -> tuple[Monomial, ...]:
    acc: dict[tuple[int, ...], Fraction] = {}
    for exps, coef in monomials:
        exps = tuple(int(e) for e in exps)
        coef = Fraction(coef)
        if coef == 0:
            continue
        acc[exps] = acc.get(exps, Fraction(0)) + coef
    return tuple(sorted((e, c) for e, c in acc.items() if c != 0))


@dataclass(frozen=True)
class MapSpec:
    """A polynomial map K^m -> K^n with exact rational coefficients.

    Instances are immutable values; the private cache only memoizes derived
    data (partials, the symbolic quotient, embedded coefficients), so sharing
    across threads is safe.
    """

    domain_dim: int
    outputs: tuple[tuple[Monomial, ...], ...]
    domain: Ball | None = None
    _cache: dict = dc_field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(
            self, "outputs", tuple(_normalize_output(out) for out in self.outputs)
        )
        for out in self.outputs:
            for exps, _ in out:
                if len(exps) != self.domain_dim or any(e < 0 for e in exps):
                    raise SchemaError("exponent vector does not match domain dimension")
        if self.domain is not None and self.domain.dim != self.domain_dim:
            raise DimensionMismatch("domain ball dimension mismatch")

    @property
    def codomain_dim(self) -> int:
        return len(self.outputs)

    @classmethod
    def from_coefficients(cls, domain_dim, outputs, domain=None) -> "MapSpec":
        """outputs: per coordinate, an iterable of (coef, exponent-vector)."""
        return cls(
            domain_dim,
            tuple(tuple((tuple(e), Fraction(c)) for c, e in out) for out in outputs),
            domain,
        )

    @classmethod
    def identity(cls, dim: int) -> "MapSpec":
        return cls(
            dim,
            tuple(
                ((tuple(1 if i == j else 0 for i in range(dim)), Fraction(1)),)
                for j in range(dim)
            ),
        )

    def without_domain(self) -> "MapSpec":
        if self.domain is None:
            return self
        got = self._cache.get("bare")
        if got is None:
            got = MapSpec(self.domain_dim, self.outputs)
            self._cache["bare"] = got
        return got


def _check_point_in_domain(f: MapSpec, point) -> None:
    if f.domain is None:
        return
    comps = _as_components(point)
    if comps and isinstance(comps[0], Scalar):
        if not f.domain.contains_tracked(Vector(comps)):
            raise DomainViolation("point escapes the map's domain ball")
    elif not f.domain.contains_rational(comps):
        raise DomainViolation("point outside the map's domain ball")


def _as_components(point) -> tuple:
    if isinstance(point, Vector):
        return point.components
    return tuple(point)


def eval_map(f: MapSpec, point):
    """Exact polynomial evaluation; rational in, rational out (same for scalars)."""
    comps = _as_components(point)
    if len(comps) != f.domain_dim:
        raise DimensionMismatch(f"expected {f.domain_dim} coordinates, got {len(comps)}")
    _check_point_in_domain(f, point)
    if comps and isinstance(comps[0], Scalar):
        desc = comps[0].descriptor
        values = _eval_field(f, comps, desc)
        return Vector(values) if isinstance(point, Vector) else values
    return _eval_exact(f, tuple(Fraction(c) for c in comps))


def _power_table(comps, mul, one):
    tables = [dict() for _ in comps]

    def power(i: int, e: int):
        if e == 0:
            return one
        tab = tables[i]
        got = tab.get(e)
        if got is None:
            got = comps[i]
            for _ in range(e - 1):
                got = mul(got, comps[i])
            tab[e] = got
        return got

    return power


def _eval_exact(f: MapSpec, comps: tuple[Fraction, ...]) -> tuple[Fraction, ...]:
    power = _power_table(comps, lambda a, b: a * b, Fraction(1))
    out = []
    for monomials in f.outputs:
        acc = Fraction(0)
        for exps, coef in monomials:
            term = coef
            for i, e in enumerate(exps):
                if e:
                    term *= power(i, e)
            acc += term
        out.append(acc)
    return tuple(out)


def _field_coefficients(f: MapSpec, desc: FieldDescriptor):
    cache = f._cache.setdefault("coef", {})
    got = cache.get(desc)
    if got is None:
        got = tuple(
            tuple((exps, embed_rational(coef, 1, desc)) for exps, coef in monomials)
            for monomials in f.outputs
        )
        cache[desc] = got
    return got

def _eval_field(f: MapSpec, comps, desc: FieldDescriptor) -> tuple:
    power = _power_table(comps, lambda a, b: a * b, desc.one())
    out = []
    for monomials in _field_coefficients(f, desc):
        acc = desc.zero()
        for exps, coef in monomials:
            term = coef
            for i, e in enumerate(exps):
                if e:
                    term = term * power(i, e)
            acc = acc + term
        out.append(acc)
    return tuple(out)


# ---------------------------------------------------------------------------
# Exact polynomial algebra


def _poly_mul(a: dict, b: dict) -> dict:
    out: dict[tuple[int, ...], Fraction] = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            key = tuple(x + y for x, y in zip(ea, eb))
            out[key] = out.get(key, Fraction(0)) + ca * cb
    return {e: c for e, c in out.items() if c != 0}


def _poly_pow(a: dict, n: int, dim: int) -> dict:
    out = {tuple([0] * dim): Fraction(1)}
    for _ in range(n):
        out = _poly_mul(out, a)
    return out


def compose(g: MapSpec, f: MapSpec) -> MapSpec:
    """Exact polynomial composition g after f."""
    if g.domain_dim != f.codomain_dim:
        raise DimensionMismatch(
            f"composition needs codomain {g.domain_dim}, map produces {f.codomain_dim}"
        )
    dim = f.domain_dim
    f_dicts = [dict(out) for out in f.outputs]
    outputs = []
    for monomials in g.outputs:
        acc: dict[tuple[int, ...], Fraction] = {}
        for exps, coef in monomials:
            term = {tuple([0] * dim): coef}
            for j, e in enumerate(exps):
                if e:
                    term = _poly_mul(term, _poly_pow(f_dicts[j], e, dim))
            for key, c in term.items():
                acc[key] = acc.get(key, Fraction(0)) + c
        outputs.append(tuple(acc.items()))
    return MapSpec(dim, tuple(outputs), f.domain)


def partial_map(f: MapSpec, j: int) -> MapSpec:
    """Exact partial derivative with respect to variable j."""
    outputs = []
    for monomials in f.outputs:
        acc = []
        for exps, coef in monomials:
            if exps[j] == 0:
                continue
            new = list(exps)
            new[j] -= 1
            acc.append((tuple(new), coef * exps[j]))
        outputs.append(tuple(acc))
    return MapSpec(f.domain_dim, tuple(outputs))


def _partials(f: MapSpec) -> tuple[MapSpec, ...]:
    got = f._cache.get("partials")
    if got is None:
        got = tuple(partial_map(f, j) for j in range(f.domain_dim))
        f._cache["partials"] = got
    return got


def jacobian(f: MapSpec, x) -> Operator:
    """The derivative at x as an operator (column j = d f(x, e_j))."""
    comps = _as_components(x)
    _check_point_in_domain(f, x)
    if not (comps and isinstance(comps[0], Scalar)):
        raise SchemaError("jacobian over the field needs scalar coordinates; "
                          "use jacobian_exact for rational points")
    desc = comps[0].descriptor
    cols = [_eval_field(p, comps, desc) for p in _partials(f)]
    rows = tuple(
        tuple(cols[j][i] for j in range(f.domain_dim)) for i in range(f.codomain_dim)
    )
    return Operator(rows)


def jacobian_exact(f: MapSpec, x: Sequence) -> tuple[tuple[Fraction, ...], ...]:
    """The derivative at a rational point, as exact rational rows."""
    xs = tuple(Fraction(v) for v in x)
    cols = [_eval_exact(p, xs) for p in _partials(f)]
    return tuple(
        tuple(cols[j][i] for j in range(f.domain_dim)) for i in range(f.codomain_dim)
    )


def substitute_prefix(f: MapSpec, values: Sequence) -> MapSpec:
    """Fix the first len(values) variables to exact rationals."""
    k = len(values)
    vals = [Fraction(v) for v in values]
    outputs = []
    for monomials in f.outputs:
        acc = []
        for exps, coef in monomials:
            c = coef
            for i in range(k):
                if exps[i]:
                    c *= vals[i] ** exps[i]
            if c != 0:
                acc.append((exps[k:], c))
        outputs.append(tuple(acc))
    return MapSpec(f.domain_dim - k, tuple(outputs))


def linear_residual(f: MapSpec, rows: Sequence[Sequence]) -> MapSpec:
    """f minus the linear map given by rational rows (the affine part cancels
    exactly in all difference-based bounds)."""
    n, m = len(rows), len(rows[0])
    if n != f.codomain_dim or m != f.domain_dim:
        raise DimensionMismatch("linear part shape mismatch")
    outputs = []
    for i, monomials in enumerate(f.outputs):
        extra = []
        for j in range(m):
            exps = tuple(1 if v == j else 0 for v in range(m))
            extra.append((exps, -Fraction(rows[i][j])))
        outputs.append(tuple(monomials) + tuple(extra))
    return MapSpec(f.domain_dim, tuple(outputs), f.domain)


# ---------------------------------------------------------------------------
# Symbolic difference quotients


def quotient_map(f: MapSpec) -> MapSpec:
    """The extended difference quotient as a polynomial map in (x, y, t).

    For each monomial c*x^a the quotient ((x+ty)^a - x^a)/t expands exactly by
    the multinomial theorem, so the result is again a MapSpec, over 2m+1
    variables ordered (x_1..x_m, y_1..y_m, t).
    """
    got = f._cache.get("quotient")
    if got is not None:
        return got
    m = f.domain_dim
    outputs = []
    for monomials in f.outputs:
        acc: dict[tuple[int, ...], Fraction] = {}
        for exps, coef in monomials:
            for kvec, binom in _sub_multi_indices(exps):
                order = sum(kvec)
                if order == 0:
                    continue
                key = (
                    tuple(a - k for a, k in zip(exps, kvec))
                    + tuple(kvec)
                    + (order - 1,)
                )
                acc[key] = acc.get(key, Fraction(0)) + coef * binom
        outputs.append(tuple(acc.items()))
    got = MapSpec(2 * m + 1, tuple(outputs))
    f._cache["quotient"] = got
    return got


def _sub_multi_indices(exps):
    """All k <= exps componentwise with the product of binomial coefficients."""
    out = [((), 1)]
    for a in exps:
        nxt = []
        for prefix, b in out:
            for k in range(a + 1):
                nxt.append((prefix + (k,), b * math.comb(a, k)))
        out = nxt
    return out


@dataclass(frozen=True)
class QuotientPoint:
    """A point (x, y, t) of the extended quotient domain U^[1].

    x and y may be Vectors of scalars or tuples of rationals; for the second
    quotient they are themselves QuotientPoints.
    """

    x: object
    y: object
    t: object


def _flatten(q) -> tuple:
    if isinstance(q, QuotientPoint):
        return _flatten(q.x) + _flatten(q.y) + _flatten(q.t)
    if isinstance(q, Vector):
        return q.components
    if isinstance(q, (tuple, list)):
        return tuple(q)
    return (q,)


def _is_zero_value(t) -> bool:
    if isinstance(t, Scalar):
        return t.is_zero()
    return Fraction(t) == 0


def _vec_add_scaled(x, y, t):
    return tuple(a + t * b for a, b in zip(x, y))


def _quotient_value(f: MapSpec, x, y, t, mutation: Callable | None = None):
    """f^[1](x, y, t): difference quotient for t != 0, df(x, y) at t = 0."""
    x = _as_components(x)
    y = _as_components(y)
    _check_point_in_domain(f, x)
    if _is_zero_value(t):
        return _jacobian_apply(f, x, y)
    shifted = _vec_add_scaled(x, y, t)
    _check_point_in_domain(f, shifted)
    fx = eval_map(f.without_domain(), x)
    fs = eval_map(f.without_domain(), shifted)
    q = tuple((a - b) / t for a, b in zip(fs, fx))
    if mutation is not None:
        q = mutation(q)
    return q


def _jacobian_apply(f: MapSpec, x, y):
    cols = []
    if x and isinstance(x[0], Scalar):
        desc = x[0].descriptor
        cols = [_eval_field(p, x, desc) for p in _partials(f)]
        acc = [desc.zero()] * f.codomain_dim
    else:
        x = tuple(Fraction(c) for c in x)
        cols = [_eval_exact(p, x) for p in _partials(f)]
        acc = [Fraction(0)] * f.codomain_dim
    for j, yj in enumerate(y):
        for i in range(f.codomain_dim):
            acc[i] = acc[i] + cols[j][i] * yj
    return tuple(acc)


def diff_quotient(f: MapSpec, q: QuotientPoint):
    """Evaluate the extended difference quotient at (x, y, t)."""
    value = _quotient_value(f, q.x, q.y, q.t)
    if isinstance(q.x, Vector):
        return Vector(value)
    return value


def second_quotient(f: MapSpec, outer: QuotientPoint):
    """f^[2] = (f^[1])^[1], evaluated literally.

    The outer point consists of two inner quotient points and an outer scalar;
    at outer scalar zero this is the directional derivative of the symbolic
    quotient map.
    """
    a = _flatten(outer.x)
    b = _flatten(outer.y)
    t = outer.t
    m = f.domain_dim
    if len(a) != 2 * m + 1 or len(b) != 2 * m + 1:
        raise DimensionMismatch("second quotient needs inner points of U^[1]")
    _check_inner_membership(f, a)
    if _is_zero_value(t):
        qm = quotient_map(f)
        return _jacobian_apply(qm, a, b)
    shifted = _vec_add_scaled(a, b, t)
    _check_inner_membership(f, shifted)
    qa = _quotient_value(f, a[:m], a[m : 2 * m], a[2 * m])
    qs = _quotient_value(f, shifted[:m], shifted[m : 2 * m], shifted[2 * m])
    return tuple((u - v) / t for u, v in zip(qs, qa))


def _check_inner_membership(f: MapSpec, a) -> None:
    if f.domain is None:
        return
    m = f.domain_dim
    x, y, t = a[:m], a[m : 2 * m], a[2 * m]
    _check_point_in_domain(f, x)
    if not _is_zero_value(t):
        _check_point_in_domain(f, _vec_add_scaled(x, y, t))


# ---------------------------------------------------------------------------
# Lipschitz and strictness moduli


def telescoped_lipschitz(
    f: MapSpec, sups: Sequence[Fraction], var_indices: Sequence[int], descriptor
) -> Fraction:
    """Upper bound on the Lipschitz constant in the chosen variables, with the
    remaining variables ranging over the same coordinate sups.

    Telescoping coordinate-by-coordinate bounds each one-variable difference
    z^k - y^k by k*s^(k-1) (real) or s^(k-1) (ultrametric) times |z - y|.
    """
    chosen = set(var_indices)
    zero = Fraction(0)
    row_bounds = []
    for monomials in f.outputs:
        per_var: dict[int, Fraction] = {j: zero for j in chosen}
        for exps, coef in monomials:
            c = rational_abs(coef, descriptor)
            for j in chosen:
                if exps[j] == 0:
                    continue
                term = c
                for i, e in enumerate(exps):
                    if i == j:
                        if e - 1:
                            term *= sups[i] ** (e - 1)
                        if not descriptor.ultrametric:
                            term *= e
                    elif e:
                        term *= sups[i] ** e
                if descriptor.ultrametric:
                    per_var[j] = max(per_var[j], term)
                else:
                    per_var[j] += term
        if descriptor.ultrametric:
            row_bounds.append(max(per_var.values(), default=zero))
        else:
            row_bounds.append(sum(per_var.values(), zero))
    return max(row_bounds, default=zero)


def _require_ball_in_domain(f: MapSpec, ball: Ball) -> None:
    if ball.dim != f.domain_dim:
        raise DimensionMismatch("ball dimension mismatch")
    if f.domain is not None and not f.domain.contains_ball(ball):
        raise DomainViolation("ball is not inside the map's domain")


def lipschitz_bound(f: MapSpec, ball: Ball) -> Fraction:
    """Upper bound for Lip(f) on the ball, exact in the value group."""
    _require_ball_in_domain(f, ball)
    return telescoped_lipschitz(
        f, ball.coordinate_sups(), range(f.domain_dim), ball.descriptor
    )


def strictness_modulus(f: MapSpec, A: Sequence[Sequence] | Operator, ball: Ball) -> Fraction:
    """Upper bound on sup ||f(z)-f(y)-A(z-y)|| / ||z-y|| over distinct pairs
    in the ball: the Lipschitz bound of the residual f - A."""
    rows = A.to_rationals() if isinstance(A, Operator) else tuple(
        tuple(Fraction(v) for v in r) for r in A
    )
    return lipschitz_bound(linear_residual(f, rows), ball)


# ---------------------------------------------------------------------------
# Identity suite


@dataclass
class IdentityResult:
    name: str
    samples: int
    failures: int
    counterexample: dict | None = None

    @property
    def passed(self) -> bool:
        return self.failures == 0


@dataclass
class IdentityReport:
    results: list[IdentityResult]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def first_failure(self) -> IdentityResult | None:
        for r in self.results:
            if not r.passed:
                return r
        return None


def _values_equal(a, b) -> bool:
    for u, v in zip(a, b):
        if isinstance(u, Scalar):
            if not (u - v).is_zero():
                return False
        elif Fraction(u) != Fraction(v):
            return False
    return True


def _companion_map(n: int) -> MapSpec:
    """Fixed quadratic companion used to exercise the chain rule."""
    outputs = []
    for i in range(n):
        monos = []
        sq = tuple(2 if j == i else 0 for j in range(n))
        monos.append((Fraction(1), sq))
        for j in range(n):
            monos.append((Fraction(1), tuple(1 if v == j else 0 for v in range(n))))
        outputs.append([(c, e) for c, e in monos])
    return MapSpec.from_coefficients(n, outputs)


def quotient_offset_mutation(values):
    """Deliberate off-by-one corruption of the t != 0 quotient branch."""
    one = (
        values[0].descriptor.one() if isinstance(values[0], Scalar) else Fraction(1)
    )
    return tuple(v + one for v in values)


_MUTATIONS = {"quotient-offset": quotient_offset_mutation}


def check_identities(
    f: MapSpec,
    sample_count: int,
    seed: int,
    descriptor: FieldDescriptor | None = None,
    mutation: str | None = None,
) -> IdentityReport:
    """Check the structural quotient identities at seeded rational points.

    With descriptor=None the checks run in exact rational arithmetic;
    otherwise inputs are embedded into the given field and compared at
    tracked precision.  A named mutation corrupts the quotient evaluation to
    demonstrate that the suite actually detects broken implementations.
    """
    if mutation is not None and mutation not in _MUTATIONS:
        raise SchemaError(f"unknown mutation {mutation!r}")
    mut = _MUTATIONS.get(mutation)
    rng = random.Random(seed)
    f = f.without_domain()
    m = f.domain_dim
    g = _companion_map(f.codomain_dim)

    def rat(nonzero=False):
        while True:
            q = Fraction(rng.randint(-9, 9), rng.randint(1, 9))
            if not nonzero or q != 0:
                return q

    def vec():
        return tuple(rat() for _ in range(m))

    def lift(values):
        if descriptor is None:
            return tuple(Fraction(v) for v in values)
        return tuple(embed_rational(v, 1, descriptor) for v in values)

    def lift1(v):
        return lift((v,))[0]

    results = [
        IdentityResult("chain_rule", 0, 0),
        IdentityResult("direction_difference", 0, 0),
        IdentityResult("quotient_scaling", 0, 0),
        IdentityResult("second_quotient_scaling", 0, 0),
    ]

    def record(res: IdentityResult, ok: bool, witness: dict):
        res.samples += 1
        if not ok:
            res.failures += 1
            if res.counterexample is None:
                res.counterexample = witness

    gf = compose(g, f)
    for k in range(sample_count):
        x, y = vec(), vec()
        t = rat() if k % 4 else Fraction(0)

        # chain rule: (g o f)^[1](x,y,t) = g^[1](f(x), f^[1](x,y,t), t)
        lx, ly, lt = lift(x), lift(y), lift1(t)
        lhs = _quotient_value(gf, lx, ly, lt, mut)
        inner = _quotient_value(f, lx, ly, lt, mut)
        rhs = _quotient_value(g, eval_map(f, lx), inner, lt, mut)
        record(
            results[0],
            _values_equal(lhs, rhs),
            {"x": x, "y": y, "t": t, "lhs": lhs, "rhs": rhs},
        )

        # direction difference: f^[1](x,y1,t) - f^[1](x,y2,t) = f^[1](x+t*y2, y1-y2, t)
        y2 = vec()
        ly2 = lift(y2)
        qa = _quotient_value(f, lx, ly, lt, mut)
        qb = _quotient_value(f, lx, ly2, lt, mut)
        shifted = _vec_add_scaled(lx, ly2, lt)
        qd = _quotient_value(
            f, shifted, tuple(a - b for a, b in zip(ly, ly2)), lt, mut
        )
        record(
            results[1],
            _values_equal(tuple(a - b for a, b in zip(qa, qb)), qd),
            {"x": x, "y1": y, "y2": y2, "t": t},
        )

        # scaling: t * f^[1](x, y, t*s) = f^[1](x, t*y, s), t != 0
        tnz, s = rat(nonzero=True), rat()
        ltn, ls = lift1(tnz), lift1(s)
        lhs3 = _quotient_value(f, lx, ly, ltn * ls, mut)
        lhs3 = tuple(ltn * v for v in lhs3)
        rhs3 = _quotient_value(f, lx, tuple(ltn * v for v in ly), ls, mut)
        record(results[2], _values_equal(lhs3, rhs3), {"x": x, "y": y, "t": tnz, "s": s})

        # second quotient scaling:
        # t^3 f^[2]((x,y,ts),(x1,y1,ts1),ts2) = f^[2]((x,t^2 y,s/t),(t x1,t^3 y1,s1),s2)
        x1, y1 = vec(), vec()
        s1, s2 = rat(), rat(nonzero=True)
        lx1, ly1 = lift(x1), lift(y1)
        ls1, ls2 = lift1(s1), lift1(s2)
        lhs4 = _second_quotient_raw(
            f, lx + ly + (ltn * ls,), lx1 + ly1 + (ltn * ls1,), ltn * ls2, mut
        )
        lhs4 = tuple(ltn * ltn * ltn * v for v in lhs4)
        rhs4 = _second_quotient_raw(
            f,
            lx + tuple(ltn * ltn * v for v in ly) + (ls / ltn,),
            tuple(ltn * v for v in lx1)
            + tuple(ltn * ltn * ltn * v for v in ly1)
            + (ls1,),
            ls2,
            mut,
        )
        record(
            results[3],
            _values_equal(lhs4, rhs4),
            {"x": x, "y": y, "x1": x1, "y1": y1, "t": tnz, "s": s, "s1": s1, "s2": s2},
        )
    return IdentityReport(results)


def _second_quotient_raw(f: MapSpec, a: tuple, b: tuple, t, mutation=None):
    m = f.domain_dim
    if _is_zero_value(t):
        return _jacobian_apply(quotient_map(f), a, b)
    shifted = _vec_add_scaled(a, b, t)
    qa = _quotient_value(f, a[:m], a[m : 2 * m], a[2 * m], mutation)
    qs = _quotient_value(f, shifted[:m], shifted[m : 2 * m], shifted[2 * m], mutation)
    return tuple((u - v) / t for u, v in zip(qs, qa))
