"""Certified implicit functions: solve f(p, x) = z0 over a parameter window.

A window consists of a parameter ball, a state ball, a target set and one
certificate whose strictness bound is uniform over the whole window, so every
query solves by the same contraction v -> v - A^-1 (f(p, v) - z0).  Radii are
found by geometric shrinking (factor 1/p padic, 1/2 real); each accepted
radius is sound by construction.  The ultrametric variant upgrades the target
set to the exact common image f(p0, x0) + A.B_r(0), identical for every
parameter in the window.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .calculus import (
    MapSpec,
    eval_map,
    jacobian_exact,
    linear_residual,
    substitute_prefix,
    telescoped_lipschitz,
)
from .contraction import ContractionProblem, iterate_fixed_point, partial_jacobians
from .errors import (
    DimensionMismatch,
    NotAFixedPoint,
    OutsideWindow,
    SchemaError,
    SingularA,
    SingularMatrix,
    WindowNotFound,
)
from .field import FieldDescriptor
from .inverse import ImageDescription, InversionCertificate, inversion_step_map
from .linalg import (
    Ball,
    Operator,
    Vector,
    invert_exact,
    rat_mat_invert,
    rat_operator_norm,
    vec_norm,
)


@dataclass(frozen=True)
class ParamWindow:
    """A certified product window for the implicit equation f(p, x) = z0."""

    p_ball: Ball
    state_ball: Ball
    target_ball: object  # Ball around z0, or an exact ImageDescription
    cert: InversionCertificate
    delta: Fraction
    z0: tuple

    @property
    def descriptor(self) -> FieldDescriptor:
        return self.state_ball.descriptor

    def target_contains(self, z: Sequence) -> bool:
        if isinstance(self.target_ball, ImageDescription):
            return self.target_ball.contains(z)
        return self.target_ball.contains_rational(z)


@dataclass
class ImplicitSolution:
    lambda_value: Vector
    derivative: Operator
    residual: object


def _as_rationals(point, what: str) -> tuple[Fraction, ...]:
    if isinstance(point, Vector):
        return point.to_rationals()
    try:
        return tuple(Fraction(v) for v in point)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{what} must be rational coordinates") from exc


def _uniform_sigma(f: MapSpec, A_rows, p_ball: Ball, state_ball: Ball) -> Fraction:
    """State-direction strictness bound, uniform over the parameter ball."""
    mp, n = p_ball.dim, state_ball.dim
    padded = tuple(tuple([Fraction(0)] * mp) + tuple(row) for row in A_rows)
    residual = linear_residual(f, padded)
    sups = p_ball.coordinate_sups() + state_ball.coordinate_sups()
    return telescoped_lipschitz(residual, sups, range(mp, mp + n), p_ball.descriptor)


def _drift_bound(f: MapSpec, A_inv, p_ball: Ball, x0: Sequence) -> Fraction:
    """Bound on ||A^-1 f(p, x0) - A^-1 f(p0, x0)|| over the parameter ball."""
    mp = p_ball.dim
    n = len(x0)
    # A^-1 f with the state frozen at x0, as a map of the parameter alone
    frozen_outputs = []
    for i in range(n):
        monos: dict[tuple[int, ...], Fraction] = {}
        for j in range(n):
            coef = A_inv[i][j]
            if coef == 0:
                continue
            for exps, c in f.outputs[j]:
                state_part = Fraction(1)
                for k in range(n):
                    if exps[mp + k]:
                        state_part *= Fraction(x0[k]) ** exps[mp + k]
                if state_part == 0:
                    continue
                key = exps[:mp]
                monos[key] = monos.get(key, Fraction(0)) + coef * c * state_part
        frozen_outputs.append(tuple(monos.items()))
    frozen = MapSpec(mp, tuple(frozen_outputs))
    lip = telescoped_lipschitz(
        frozen, p_ball.coordinate_sups(), range(mp), p_ball.descriptor
    )
    return lip * p_ball.radius


def _shrink(radius: Fraction, descriptor: FieldDescriptor) -> Fraction:
    return radius / descriptor.prime if descriptor.ultrametric else radius / 2


def _strict_power_below(value: Fraction, p: int) -> Fraction:
    power = Fraction(1)
    while power >= value:
        power /= p
    while power * p < value:
        power *= p
    return power


def build_window(
    f: MapSpec,
    p0,
    x0,
    descriptor: FieldDescriptor | None = None,
    alpha_target: Fraction = Fraction(1, 2),
    beta_target: Fraction = Fraction(3, 2),
    initial_radius: Fraction = Fraction(1),
    max_shrink: int = 60,
    exact_image: bool = False,
) -> ParamWindow:
    """Find parameter and state radii certifying the implicit equation.

    The state Jacobian at (p0, x0) anchors the certificate; radii shrink
    geometrically until (i) the uniform strictness bound clears the
    alpha/beta-target threshold and (ii) the parameter drift of the pulled
    back equation stays within the solvable margin.
    """
    if not 0 < alpha_target < 1 < beta_target:
        raise SchemaError(f"need 0 < alpha < 1 < beta, got {alpha_target}, {beta_target}")
    if descriptor is None:
        if isinstance(p0, Vector):
            descriptor = p0.descriptor
        elif f.domain is not None:
            descriptor = f.domain.descriptor
        else:
            raise SchemaError("no field descriptor available for the window")
    p0 = _as_rationals(p0, "p0")
    x0 = _as_rationals(x0, "x0")
    mp, n = len(p0), len(x0)
    if f.domain_dim != mp + n:
        raise DimensionMismatch("map does not split as parameter x state")
    if f.codomain_dim != n:
        raise DimensionMismatch("implicit equations need codomain = state dimension")
    f = f.without_domain()
    jac = jacobian_exact(f, p0 + x0)
    A_rows = tuple(tuple(row[mp:]) for row in jac)
    try:
        A_inv = rat_mat_invert(A_rows)
    except SingularMatrix as exc:
        raise SingularA(str(exc)) from exc

    desc = descriptor
    norm_a = rat_operator_norm(A_rows, desc)
    norm_a_inv = rat_operator_norm(A_inv, desc)
    tau = min(beta_target - 1, 1 - alpha_target) / norm_a_inv

    radius = Fraction(initial_radius)
    if desc.ultrametric and not desc.valid_radius(radius):
        raise SchemaError(f"initial radius {radius} is not a power of {desc.prime}")
    sigma = None
    for _ in range(max_shrink):
        p_ball = Ball(desc, p0, radius)
        state_ball = Ball(desc, x0, radius)
        sigma = _uniform_sigma(f, A_rows, p_ball, state_ball)
        if sigma <= tau:
            break
        radius = _shrink(radius, desc)
    else:
        raise WindowNotFound(
            f"strictness bound stayed above {tau} after {max_shrink} shrinks"
        )

    r = radius
    state_ball = Ball(desc, x0, r)
    rho = radius
    accepted = None
    for _ in range(max_shrink):
        p_ball = Ball(desc, p0, rho)
        sigma_now = _uniform_sigma(f, A_rows, p_ball, state_ball)
        alpha_now = 1 - sigma_now * norm_a_inv
        cap = r if desc.ultrametric else alpha_now * r / 2
        if _drift_bound(f, A_inv, p_ball, x0) <= cap:
            accepted = (sigma_now, alpha_now)
            break
        rho = _shrink(rho, desc)
    else:
        raise WindowNotFound(
            f"parameter drift would not fit the window after {max_shrink} shrinks"
        )
    sigma, alpha = accepted

    cert = InversionCertificate(
        A=A_rows,
        A_inv=A_inv,
        norm_A=norm_a,
        norm_A_inv=norm_a_inv,
        sigma=sigma,
        a=1 / norm_a_inv - sigma,
        b=norm_a + sigma,
        alpha=alpha,
        beta=1 + sigma * norm_a_inv,
        ball=state_ball,
        ultrametric=desc.ultrametric,
    )
    z0 = eval_map(f, p0 + x0)
    delta = alpha * r / (2 * norm_a_inv)
    if exact_image:
        if not desc.ultrametric:
            raise SchemaError("exact images exist only over ultrametric fields")
        target = ImageDescription(
            descriptor=desc, center=z0, A=A_rows, A_inv=A_inv, radius=r, exact=True
        )
    elif desc.ultrametric:
        # the strict delta-ball in a discrete value group is a closed ball
        target = Ball(desc, z0, _strict_power_below(delta, desc.prime), closed=True)
    else:
        target = Ball(desc, z0, delta, closed=False)
    return ParamWindow(
        p_ball=Ball(desc, p0, rho),
        state_ball=state_ball,
        target_ball=target,
        cert=cert,
        delta=delta,
        z0=z0,
    )


def ultrametric_window(
    f: MapSpec,
    p0,
    x0,
    descriptor: FieldDescriptor | None = None,
    initial_radius: Fraction = Fraction(1),
    max_shrink: int = 60,
) -> ParamWindow:
    """A window whose target set is the exact common image of every f(p, .)."""
    return build_window(
        f, p0, x0, descriptor=descriptor, initial_radius=initial_radius,
        max_shrink=max_shrink, exact_image=True,
    )


def solve_implicit(
    window: ParamWindow,
    f: MapSpec,
    p,
    z0=None,
    target_precision=None,
) -> ImplicitSolution:
    """lambda(p) with its derivative: the unique state in the window's state
    ball with f(p, lambda(p)) = z0."""
    p = _as_rationals(p, "p")
    z0 = window.z0 if z0 is None else _as_rationals(z0, "z0")
    if not window.p_ball.contains_rational(p):
        raise OutsideWindow("parameter outside the certified window")
    if not window.target_contains(z0):
        raise OutsideWindow("target outside the certified target set")
    f = f.without_domain()
    f_p = substitute_prefix(f, p)
    cert = window.cert
    g = inversion_step_map(cert, f_p, z0)
    problem = ContractionProblem(
        g, window.state_ball, cert.theta, window.state_ball.center_exact
    )
    report = iterate_fixed_point(problem, target_precision)
    lam = report.fixed_point

    desc = window.descriptor
    beta1, beta2 = partial_jacobians(f, p, lam)
    try:
        state_inv = invert_exact(beta2)
    except SingularMatrix as exc:
        raise SingularA(f"state Jacobian singular at the solution: {exc}") from exc
    derivative = -state_inv.compose(beta1)

    value = eval_map(
        f, Vector(Vector.from_rationals(p, desc).components + lam.components)
    )
    residual_vec = value - Vector.from_rationals(z0, desc)
    residual = vec_norm(residual_vec)
    if desc.ultrametric:
        # the solution is truncated to its certified digits, so any residual
        # visible at tracked precision is a genuine failure
        ok = residual_vec.is_zero()
    else:
        target = float(
            target_precision if target_precision is not None else desc.tolerance
        )
        ok = residual <= (1 + float(cert.theta)) * target + desc.tolerance
    if not ok:
        raise NotAFixedPoint(f"implicit residual {residual} too large")
    return ImplicitSolution(lambda_value=lam, derivative=derivative, residual=residual)
