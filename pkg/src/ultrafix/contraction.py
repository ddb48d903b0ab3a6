"""Banach fixed-point iteration with a priori/a posteriori certificates.

The stopping rule is driven by the a priori bound theta^n/(1-theta) * d0, so
the returned precision claim holds even without observing convergence.  On
the ultrametric side admissibility is sharpened from d0 <= (1-theta)r to
d0 <= r: the iteration displacements form a max-telescoping sequence, so the
orbit never leaves the closed ball.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .calculus import (
    MapSpec,
    _eval_field,
    _partials,
    eval_map,
    lipschitz_bound,
    telescoped_lipschitz,
)
from .errors import (
    DimensionMismatch,
    DomainEscape,
    NotAContraction,
    NotAdmissible,
    NotAFixedPoint,
)
from .field import FieldDescriptor, rational_abs, rational_valuation, truncate_precision
from .linalg import Ball, Operator, Vector, neumann_invert, operator_norm, vec_norm


@dataclass(frozen=True)
class ContractionProblem:
    """A candidate self-map of a ball with contraction constant theta."""

    f: MapSpec
    domain: Ball
    theta: Fraction
    x0: tuple

    def __post_init__(self):
        object.__setattr__(self, "theta", Fraction(self.theta))
        object.__setattr__(self, "x0", tuple(Fraction(v) for v in self.x0))
        if self.f.domain_dim != self.f.codomain_dim:
            raise DimensionMismatch("fixed points need a self-map candidate")
        if self.domain.dim != self.f.domain_dim:
            raise DimensionMismatch("ball dimension mismatch")
        if not 0 <= self.theta < 1:
            raise NotAContraction(f"theta = {self.theta} is not in [0, 1)")
        if not self.domain.contains_rational(self.x0):
            raise NotAdmissible("x0 is outside the domain ball")

    @property
    def descriptor(self) -> FieldDescriptor:
        return self.domain.descriptor

    def initial_displacement(self) -> Fraction:
        """d(f(x0), x0), exactly."""
        fx0 = eval_map(self.f, self.x0)
        return max(rational_abs(a - b, self.descriptor) for a, b in zip(fx0, self.x0))


@dataclass
class FixedPointReport:
    fixed_point: Vector
    iterations: int
    trace: list[Vector]
    apriori_bounds: list[Fraction]
    achieved_distance: object
    theta: Fraction
    initial_distance: Fraction
    step_distances: list


def admissible(problem: ContractionProblem) -> bool:
    """Is the orbit guaranteed to stay inside the domain ball?"""
    d0 = problem.initial_displacement()
    r = problem.domain.radius
    if problem.descriptor.ultrametric:
        return d0 <= r if problem.domain.closed else d0 < r
    slack = (1 - problem.theta) * r
    return d0 <= slack if problem.domain.closed else d0 < slack


def _padic_guaranteed_power(bound: Fraction, p: int) -> Fraction:
    """Largest p-power that any absolute value <= bound can still attain."""
    if bound <= 0:
        return Fraction(0)
    power = Fraction(1)
    while power > bound:
        power /= p
    while power * p <= bound:
        power *= p
    return power


def default_target_precision(descriptor: FieldDescriptor) -> Fraction:
    if descriptor.ultrametric:
        return Fraction(1, descriptor.prime**descriptor.precision)
    return Fraction(descriptor.tolerance)


def iterate_fixed_point(
    problem: ContractionProblem, target_precision=None
) -> FixedPointReport:
    """Iterate x -> f(x) until the a priori bound clears target_precision.

    Padic targets are value-group elements (default p^-N); real targets are
    absolute tolerances (default the field tolerance).
    """
    if not admissible(problem):
        raise NotAdmissible(
            f"d(f(x0), x0) = {problem.initial_displacement()} exceeds the "
            f"admissible displacement for radius {problem.domain.radius}"
        )
    desc = problem.descriptor
    theta, d0 = problem.theta, problem.initial_displacement()
    target = Fraction(
        target_precision
        if target_precision is not None
        else default_target_precision(desc)
    )

    def certified(n: int) -> Fraction:
        bound = theta**n * d0 / (1 - theta)
        if desc.ultrametric:
            return _padic_guaranteed_power(bound, desc.prime)
        return bound

    steps = 0
    if d0 > 0:
        while certified(steps) > target:
            steps += 1
            if steps > 100_000:
                raise NotAContraction(
                    f"a priori bound cannot reach {target} in reasonable time"
                )

    x = Vector.from_rationals(problem.x0, desc)
    trace = [x]
    bounds: list[Fraction] = []
    distances = []
    for k in range(steps):
        nxt = eval_map(problem.f, x)
        if not problem.domain.contains_tracked(nxt):
            raise DomainEscape(f"iterate {k + 1} left the domain ball")
        step = vec_norm(nxt - x)
        bound = theta**k * d0
        if desc.ultrametric:
            violated = step > bound
        else:
            violated = step > float(bound) + 1e-12
        if violated:
            raise DomainEscape(
                f"step {k} of size {step} exceeds its a priori bound {bound}: "
                "the supplied contraction constant is wrong"
            )
        distances.append(step)
        bounds.append(bound)
        trace.append(nxt)
        prev, x = x, nxt
        if desc.ultrametric and (nxt - prev).is_zero():
            # tracked digits can no longer change; further steps are no-ops
            break
    achieved = distances[-1] if distances else (Fraction(0) if desc.ultrametric else 0.0)
    if desc.ultrametric and d0 > 0:
        guarantee = certified(len(trace) - 1)
        if guarantee > 0:
            exponent = -rational_valuation(guarantee, desc.prime)
            x = Vector(tuple(truncate_precision(c, exponent) for c in x.components))
    residual = vec_norm(eval_map(problem.f, x) - x)
    if desc.ultrametric:
        fixed_ok = residual <= target
    else:
        fixed_ok = residual <= (1 + float(theta)) * float(target) + desc.tolerance
    if not fixed_ok:
        raise DomainEscape(
            f"residual {residual} above target {target}: contraction claim failed"
        )
    return FixedPointReport(
        fixed_point=x,
        iterations=len(trace) - 1,
        trace=trace,
        apriori_bounds=bounds,
        achieved_distance=achieved,
        theta=theta,
        initial_distance=d0,
        step_distances=distances,
    )


def lipschitz_theta(f: MapSpec, ball: Ball) -> Fraction:
    """Contraction constant from the coefficient-telescoped Lipschitz bound."""
    theta = lipschitz_bound(f, ball)
    if theta >= 1:
        raise NotAContraction(f"Lipschitz bound {theta} is not below 1")
    return theta


def uniform_family_check(f: MapSpec, p_ball: Ball, u_ball: Ball) -> Fraction:
    """A single bound on the state-direction Lipschitz constant, uniform over
    the parameter ball.  Values below 1 certify a uniform family of
    contractions; a returned value >= 1 reports failure."""
    if p_ball.descriptor != u_ball.descriptor:
        raise DimensionMismatch("parameter and state balls live in different fields")
    mp, mu = p_ball.dim, u_ball.dim
    if f.domain_dim != mp + mu:
        raise DimensionMismatch("map does not split as parameter x state")
    sups = p_ball.coordinate_sups() + u_ball.coordinate_sups()
    return telescoped_lipschitz(f, sups, range(mp, mp + mu), p_ball.descriptor)


def partial_jacobians(f: MapSpec, p, x_p: Vector) -> tuple[Operator, Operator]:
    """(d_p f, d_x f) at (p, x_p), evaluated in the field."""
    desc = x_p.descriptor
    p_comps = (
        p.components
        if isinstance(p, Vector)
        else Vector.from_rationals(tuple(p), desc).components
    )
    mp, mu = len(p_comps), x_p.dim
    if f.domain_dim != mp + mu:
        raise DimensionMismatch("map does not split as parameter x state")
    point = p_comps + x_p.components
    cols = [_eval_field(pd, point, desc) for pd in _partials(f)]
    n = f.codomain_dim
    beta1 = Operator(tuple(tuple(cols[j][i] for j in range(mp)) for i in range(n)))
    beta2 = Operator(tuple(tuple(cols[mp + j][i] for j in range(mu)) for i in range(n)))
    return beta1, beta2


def fixed_point_derivative(f: MapSpec, p, x_p: Vector) -> Operator:
    """Derivative of the fixed point with respect to the parameter:
    (id - d_x f)^{-1} composed with d_p f at (p, x_p)."""
    desc = x_p.descriptor
    p_comps = (
        p.components
        if isinstance(p, Vector)
        else Vector.from_rationals(tuple(p), desc).components
    )
    beta1, beta2 = partial_jacobians(f, p, x_p)
    value = eval_map(f, Vector(p_comps + x_p.components))
    residual = value - x_p
    if not residual.is_zero():
        raise NotAFixedPoint(f"residual norm {vec_norm(residual)} at tracked precision")
    if operator_norm(beta2) >= 1:
        raise NotAContraction(f"state Jacobian has norm {operator_norm(beta2)} >= 1")
    inv, _ = neumann_invert(beta2)
    return inv.compose(beta1)
