"""Certified local inversion.

A certificate pins the anchor operator A, its exact inverse, the strictness
bound sigma of f against A on a ball, and the derived constants

    a = 1/||A^-1|| - sigma      b = ||A|| + sigma
    alpha = 1 - sigma*||A^-1||  beta = 1 + sigma*||A^-1||

all as exact rationals.  sigma < 1/||A^-1|| makes the local equation
f(v) = c solvable by iterating v -> v - A^-1 (f(v) - c), a contraction with
constant sigma*||A^-1||; the ultrametric branch upgrades the two-sided
sandwich to an exact ball image f(y) + A.B_s(0).
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .calculus import MapSpec, eval_map, jacobian_exact, strictness_modulus
from .contraction import ContractionProblem, iterate_fixed_point
from .errors import (
    DimensionMismatch,
    DomainViolation,
    NotCertifiable,
    SingularA,
    SingularMatrix,
    TargetOutsideGuarantee,
)
from .field import FieldDescriptor, rational_abs
from .linalg import (
    Ball,
    Operator,
    Vector,
    rat_mat_invert,
    rat_mat_vec,
    rat_operator_norm,
    rat_vec_norm,
)
from .sampling import sample_pair_in_ball


@dataclass(frozen=True)
class InversionCertificate:
    """Machine-checkable constants proving local solvability of f on a ball."""

    A: tuple
    A_inv: tuple
    norm_A: Fraction
    norm_A_inv: Fraction
    sigma: Fraction
    a: Fraction
    b: Fraction
    alpha: Fraction
    beta: Fraction
    ball: Ball
    ultrametric: bool

    def __post_init__(self):
        assert self.sigma < 1 / self.norm_A_inv
        assert self.a == 1 / self.norm_A_inv - self.sigma and self.a > 0
        assert self.b == self.norm_A + self.sigma
        assert self.alpha == 1 - self.sigma * self.norm_A_inv
        assert 0 < self.alpha <= 1
        assert self.beta == 1 + self.sigma * self.norm_A_inv
        assert 1 <= self.beta < 2

    @property
    def descriptor(self) -> FieldDescriptor:
        return self.ball.descriptor

    @property
    def theta(self) -> Fraction:
        """Contraction constant of the inversion iteration."""
        return self.sigma * self.norm_A_inv

    @property
    def A_operator(self) -> Operator:
        return Operator.from_rationals(self.A, self.descriptor)

    @property
    def A_inv_operator(self) -> Operator:
        return Operator.from_rationals(self.A_inv, self.descriptor)


def certify(
    f: MapSpec, ball: Ball, A: Sequence[Sequence] | Operator | None = None
) -> InversionCertificate:
    """Build an inversion certificate for f against A on the ball.

    A defaults to the derivative at the ball center.  Fails with
    NotCertifiable when the strictness bound does not clear 1/||A^-1||.
    """
    if f.domain_dim != f.codomain_dim:
        raise DimensionMismatch("local inversion needs a self-dimension map")
    if A is None:
        rows = jacobian_exact(f, ball.center_exact)
    elif isinstance(A, Operator):
        rows = A.to_rationals()
    else:
        rows = tuple(tuple(Fraction(v) for v in r) for r in A)
    try:
        inv_rows = rat_mat_invert(rows)
    except SingularMatrix as exc:
        raise SingularA(str(exc)) from exc
    desc = ball.descriptor
    norm_a = rat_operator_norm(rows, desc)
    norm_a_inv = rat_operator_norm(inv_rows, desc)
    sigma = strictness_modulus(f, rows, ball)
    threshold = 1 / norm_a_inv
    if sigma >= threshold:
        raise NotCertifiable(sigma, threshold)
    return InversionCertificate(
        A=rows,
        A_inv=inv_rows,
        norm_A=norm_a,
        norm_A_inv=norm_a_inv,
        sigma=sigma,
        a=threshold - sigma,
        b=norm_a + sigma,
        alpha=1 - sigma * norm_a_inv,
        beta=1 + sigma * norm_a_inv,
        ball=ball,
        ultrametric=desc.ultrametric,
    )


def _solve_ball(cert: InversionCertificate, base, radius) -> Ball:
    ball = cert.ball
    if base is None and radius is None:
        return ball
    base = ball.center_exact if base is None else tuple(Fraction(v) for v in base)
    radius = ball.radius if radius is None else Fraction(radius)
    if not ball.contains_rational(base):
        raise DomainViolation("base point outside the certified ball")
    desc = cert.descriptor
    if desc.ultrametric:
        if radius > ball.radius:
            raise DomainViolation("sub-ball radius exceeds the certified radius")
    else:
        dist = max(
            rational_abs(a - b, desc) for a, b in zip(base, ball.center_exact)
        )
        if dist + radius > ball.radius:
            raise DomainViolation("sub-ball leaves the certified ball")
    return Ball(desc, base, radius, closed=True)


def inversion_step_map(cert: InversionCertificate, f: MapSpec, c: Sequence) -> MapSpec:
    """The contraction v -> v - A^-1 (f(v) - c) as an exact polynomial map."""
    n = f.domain_dim
    cs = tuple(Fraction(v) for v in c)
    shift = rat_mat_vec(cert.A_inv, cs)
    outputs = []
    for i in range(n):
        monos: dict[tuple[int, ...], Fraction] = {}
        e_i = tuple(1 if j == i else 0 for j in range(n))
        monos[e_i] = Fraction(1)
        for j in range(n):
            coef = cert.A_inv[i][j]
            if coef == 0:
                continue
            for exps, c_f in f.outputs[j]:
                monos[exps] = monos.get(exps, Fraction(0)) - coef * c_f
        zero = tuple([0] * n)
        monos[zero] = monos.get(zero, Fraction(0)) + shift[i]
        outputs.append(tuple(monos.items()))
    return MapSpec(n, tuple(outputs))


def local_invert(
    cert: InversionCertificate,
    f: MapSpec,
    c: Sequence,
    base: Sequence | None = None,
    radius=None,
    target_precision=None,
) -> Vector:
    """The unique v near the base point with f(v) = c, at tracked precision.

    The target must lie in the certified image around the base: within
    A.B_s(0) of f(base) ultrametrically, within A.B_{alpha*s}(0) on the real
    side.  base/radius default to the certificate's ball.
    """
    sub = _solve_ball(cert, base, radius)
    cs = tuple(Fraction(v) for v in c)
    f_base = eval_map(f.without_domain(), sub.center_exact)
    margin = rat_vec_norm(
        rat_mat_vec(cert.A_inv, tuple(t - v for t, v in zip(cs, f_base))),
        cert.descriptor,
    )
    allowed = sub.radius if cert.ultrametric else cert.alpha * sub.radius
    if margin > allowed:
        raise TargetOutsideGuarantee(
            f"pulled-back target distance {margin} exceeds the certified {allowed}"
        )
    g = inversion_step_map(cert, f, cs)
    problem = ContractionProblem(g, sub, cert.theta, sub.center_exact)
    report = iterate_fixed_point(problem, target_precision)
    return report.fixed_point


@dataclass(frozen=True)
class ImageDescription:
    """What the image of a sub-ball looks like.

    Ultrametric: the image is exactly center + A.B_s(0).  Real: sandwiched
    between the inner and outer balls (and their A-skewed refinements).
    """

    descriptor: FieldDescriptor
    center: tuple
    A: tuple
    A_inv: tuple
    radius: Fraction
    exact: bool
    inner_radius: Fraction | None = None
    outer_radius: Fraction | None = None
    skew_inner: Fraction | None = None
    skew_outer: Fraction | None = None

    def pullback_distance(self, w: Sequence) -> Fraction:
        return rat_vec_norm(
            rat_mat_vec(
                self.A_inv, tuple(Fraction(x) - c for x, c in zip(w, self.center))
            ),
            self.descriptor,
        )

    def contains(self, w: Sequence) -> bool:
        """Exact membership (ultrametric only)."""
        if not self.exact:
            raise DomainViolation("real images are only sandwiched, not exact")
        return self.pullback_distance(w) <= self.radius

    def certainly_contains(self, w: Sequence) -> bool:
        """Membership provable from the certificate alone."""
        if self.exact:
            return self.contains(w)
        return self.pullback_distance(w) <= self.skew_inner

    def cannot_contain(self, w: Sequence) -> bool:
        if self.exact:
            return not self.contains(w)
        return self.pullback_distance(w) > self.skew_outer


def ball_image(cert: InversionCertificate, f: MapSpec, y: Sequence, s) -> ImageDescription:
    """Describe f(B_s(y)) for a sub-ball of the certified ball."""
    sub = _solve_ball(cert, y, s)
    fy = eval_map(f.without_domain(), sub.center_exact)
    if cert.ultrametric:
        return ImageDescription(
            descriptor=cert.descriptor,
            center=fy,
            A=cert.A,
            A_inv=cert.A_inv,
            radius=sub.radius,
            exact=True,
        )
    return ImageDescription(
        descriptor=cert.descriptor,
        center=fy,
        A=cert.A,
        A_inv=cert.A_inv,
        radius=sub.radius,
        exact=False,
        inner_radius=cert.a * sub.radius,
        outer_radius=cert.b * sub.radius,
        skew_inner=cert.alpha * sub.radius,
        skew_outer=cert.beta * sub.radius,
    )


@dataclass
class DistortionReport:
    pairs: int
    sandwich_failures: int
    isometry_failures: int
    first_failure: dict | None = None

    @property
    def passed(self) -> bool:
        return self.sandwich_failures == 0 and self.isometry_failures == 0


def verify_distortion(
    cert: InversionCertificate, f: MapSpec, samples: int, seed: int
) -> DistortionReport:
    """Sample pairs in the certified ball and check, in exact arithmetic,
    a||z-y|| <= ||f(z)-f(y)|| <= b||z-y||, plus exact norm preservation of
    A^-1 f on the ultrametric side."""
    rng = random.Random(seed)
    desc = cert.descriptor
    report = DistortionReport(pairs=samples, sandwich_failures=0, isometry_failures=0)
    f_free = f.without_domain()
    for _ in range(samples):
        y, z = sample_pair_in_ball(rng, cert.ball)
        fy = eval_map(f_free, y)
        fz = eval_map(f_free, z)
        dist = rat_vec_norm(tuple(a - b for a, b in zip(z, y)), desc)
        fdist = rat_vec_norm(tuple(a - b for a, b in zip(fz, fy)), desc)
        if not cert.a * dist <= fdist <= cert.b * dist:
            report.sandwich_failures += 1
            if report.first_failure is None:
                report.first_failure = {
                    "kind": "sandwich",
                    "y": [str(v) for v in y],
                    "z": [str(v) for v in z],
                    "distance": str(dist),
                    "image_distance": str(fdist),
                }
        if desc.ultrametric:
            pulled = rat_vec_norm(
                rat_mat_vec(cert.A_inv, tuple(a - b for a, b in zip(fz, fy))), desc
            )
            if pulled != dist:
                report.isometry_failures += 1
                if report.first_failure is None:
                    report.first_failure = {
                        "kind": "isometry",
                        "y": [str(v) for v in y],
                        "z": [str(v) for v in z],
                        "distance": str(dist),
                        "pulled_distance": str(pulled),
                    }
    return report
