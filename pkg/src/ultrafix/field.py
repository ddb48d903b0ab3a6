"""Valued-field scalar arithmetic: exact p-adic (fixed precision) and real doubles.

A p-adic scalar stores its valuation, its unit digits and the absolute
precision up to which the value is known.  Addition of near-cancelling values
raises the valuation and shrinks the known digit range instead of fabricating
zeros, so downstream certificates never overstate precision.  The real backend
is plain IEEE doubles with a global comparison tolerance; exactness on the
real side lives in the rational helpers (`rational_abs`) used by the
verification oracles, not in the scalar type.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import DivisionByZero, PrecisionExhausted, SchemaError

_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    for q in _SMALL_PRIMES:
        if n == q:
            return True
        if n % q == 0:
            return False
    d = 41
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def int_valuation(n: int, p: int) -> int:
    """Exponent of p in a nonzero integer."""
    if n == 0:
        raise ValueError("valuation of zero is undefined")
    v = 0
    n = abs(n)
    while n % p == 0:
        n //= p
        v += 1
    return v


def rational_valuation(q, p: int) -> int:
    q = Fraction(q)
    if q == 0:
        raise ValueError("valuation of zero is undefined")
    return int_valuation(q.numerator, p) - int_valuation(q.denominator, p)


@dataclass(frozen=True)
class FieldDescriptor:
    """Which valued field scalars live in.

    kind "padic": Q_p with `precision` significant base-p digits tracked.
    kind "real": IEEE doubles, compared up to `tolerance` (relative).
    """

    kind: str
    prime: int | None = None
    precision: int | None = None
    tolerance: float = 1e-9

    def __post_init__(self):
        if self.kind == "padic":
            if self.prime is None or not _is_prime(self.prime):
                raise SchemaError(f"prime required and must be prime, got {self.prime}")
            if self.precision is None or self.precision < 1:
                raise SchemaError("precision must be a positive integer")
        elif self.kind == "real":
            if self.prime is not None or self.precision is not None:
                raise SchemaError("real field takes no prime/precision")
        else:
            raise SchemaError(f"unknown field kind {self.kind!r}")

    @classmethod
    def padic(cls, prime: int, precision: int) -> "FieldDescriptor":
        return cls("padic", prime, precision)

    @classmethod
    def real(cls, tolerance: float = 1e-9) -> "FieldDescriptor":
        return cls("real", tolerance=tolerance)

    @property
    def ultrametric(self) -> bool:
        return self.kind == "padic"

    def zero(self) -> "Scalar":
        if self.kind == "padic":
            return PadicScalar(self, None, 0, None)
        return RealScalar(self, 0.0)

    def one(self) -> "Scalar":
        return self.from_rational(1)

    def from_rational(self, num, den: int = 1) -> "Scalar":
        return embed_rational(num, den, self)

    def valid_radius(self, r: Fraction) -> bool:
        """Radii are restricted to the attainable values of the absolute value."""
        if self.kind == "real":
            return r > 0
        if r <= 0:
            return False
        k = rational_valuation(r, self.prime)
        return Fraction(self.prime) ** k == Fraction(r)


class Scalar:
    """A valued-field element; immutable, backend-specific subclasses below."""

    __slots__ = ()


class PadicScalar(Scalar):
    """unit * p^val, known modulo p^prec.

    Nonzero: ``val`` is the exact valuation, ``unit`` the integer formed by
    the known digits (unit % p != 0, 0 < unit < p**(prec-val)).
    Zero at tracked precision: ``val is None``; ``prec is None`` for the exact
    zero, an integer m for a value only known to be O(p^m).
    """

    __slots__ = ("descriptor", "val", "unit", "prec")

    def __init__(self, descriptor, val, unit, prec):
        self.descriptor = descriptor
        self.val = val
        self.unit = unit
        self.prec = prec
        if val is not None:
            digits = prec - val
            if digits < 1 or digits > descriptor.precision:
                raise ValueError(f"digit count {digits} out of range")
            if unit % descriptor.prime == 0 or not 0 < unit < descriptor.prime**digits:
                raise ValueError("unit digits out of range")

    def is_zero(self) -> bool:
        """Zero at tracked precision (exactly zero, or no known digits left)."""
        return self.val is None

    def is_exact_zero(self) -> bool:
        return self.val is None and self.prec is None

    def digit_list(self) -> list[int]:
        if self.val is None:
            return []
        p = self.descriptor.prime
        out, u = [], self.unit
        for _ in range(self.prec - self.val):
            u, d = divmod(u, p)
            out.append(d)
        return out

    def to_rational(self) -> Fraction:
        """The representative built from the known digits (zero if none)."""
        if self.val is None:
            return Fraction(0)
        return Fraction(self.unit) * Fraction(self.descriptor.prime) ** self.val

    def __repr__(self):
        if self.is_exact_zero():
            return f"Padic(0, p={self.descriptor.prime})"
        if self.val is None:
            return f"Padic(O({self.descriptor.prime}^{self.prec}))"
        return (
            f"Padic({self.unit}*{self.descriptor.prime}^{self.val}"
            f"+O({self.descriptor.prime}^{self.prec}))"
        )

    def __add__(self, other):
        return field_arith(self, other, "add")

    def __sub__(self, other):
        return field_arith(self, other, "sub")

    def __mul__(self, other):
        return field_arith(self, other, "mul")

    def __truediv__(self, other):
        return field_arith(self, other, "div")

    def __neg__(self):
        if self.val is None:
            return self
        p = self.descriptor.prime
        k = self.prec - self.val
        return PadicScalar(self.descriptor, self.val, (-self.unit) % p**k, self.prec)

    def __eq__(self, other):
        if not isinstance(other, PadicScalar):
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None


class RealScalar(Scalar):
    __slots__ = ("descriptor", "value")

    def __init__(self, descriptor, value: float):
        self.descriptor = descriptor
        self.value = float(value)

    def is_zero(self) -> bool:
        """Zero up to the field's comparison tolerance."""
        return abs(self.value) <= self.descriptor.tolerance

    def is_exact_zero(self) -> bool:
        return self.value == 0.0

    def to_rational(self) -> Fraction:
        return Fraction(self.value)

    def __repr__(self):
        return f"Real({self.value!r})"

    def __add__(self, other):
        return field_arith(self, other, "add")

    def __sub__(self, other):
        return field_arith(self, other, "sub")

    def __mul__(self, other):
        return field_arith(self, other, "mul")

    def __truediv__(self, other):
        return field_arith(self, other, "div")

    def __neg__(self):
        return RealScalar(self.descriptor, -self.value)

    def __eq__(self, other):
        if not isinstance(other, RealScalar):
            return NotImplemented
        tol = self.descriptor.tolerance
        return abs(self.value - other.value) <= tol * max(1.0, abs(self.value), abs(other.value))

    __hash__ = None


def _padic_make(desc, val, residue, prec):
    """Normalize an integer residue known modulo p^prec at base valuation val."""
    p = desc.prime
    span = prec - val
    residue %= p**span
    if residue == 0:
        return PadicScalar(desc, None, 0, prec)
    shift = int_valuation(residue, p)
    v = val + shift
    unit = residue // p**shift
    # cap the digit window at the descriptor's significance
    newprec = min(prec, v + desc.precision)
    unit %= p ** (newprec - v)
    if unit == 0:
        return PadicScalar(desc, None, 0, newprec)
    return PadicScalar(desc, v, unit, newprec)


def _padic_add(a: PadicScalar, b: PadicScalar) -> PadicScalar:
    desc = a.descriptor
    if a.is_exact_zero():
        return b
    if b.is_exact_zero():
        return a
    m = min(a.prec, b.prec)
    vals = [s.val for s in (a, b) if s.val is not None]
    base = min(vals + [m]) if vals else m
    p = desc.prime
    r = 0
    for s in (a, b):
        if s.val is not None:
            r += s.unit * p ** (s.val - base)
    return _padic_make(desc, base, r, m)


def _padic_mul(a: PadicScalar, b: PadicScalar) -> PadicScalar:
    desc = a.descriptor
    if a.is_exact_zero() or b.is_exact_zero():
        return desc.zero()
    if a.val is None or b.val is None:
        # O(p^m) times a value of known (or bounded) size stays a bounded zero
        ea = a.prec if a.val is None else a.val
        eb = b.prec if b.val is None else b.val
        return PadicScalar(desc, None, 0, ea + eb)
    k = min(a.prec - a.val, b.prec - b.val)
    p = desc.prime
    unit = (a.unit * b.unit) % p**k
    return PadicScalar(desc, a.val + b.val, unit, a.val + b.val + k)


def _padic_div(a: PadicScalar, b: PadicScalar) -> PadicScalar:
    desc = a.descriptor
    if b.is_exact_zero():
        raise DivisionByZero("division by zero")
    if b.val is None:
        raise PrecisionExhausted(
            f"divisor is O({desc.prime}^{b.prec}): no known digits to divide by"
        )
    if a.is_exact_zero():
        return a
    if a.val is None:
        return PadicScalar(desc, None, 0, a.prec - b.val)
    k = min(a.prec - a.val, b.prec - b.val)
    p = desc.prime
    unit = (a.unit * pow(b.unit, -1, p**k)) % p**k
    return PadicScalar(desc, a.val - b.val, unit, a.val - b.val + k)


def field_arith(a: Scalar, b: Scalar, op: str) -> Scalar:
    """Field operation on two scalars of the same descriptor."""
    if a.descriptor != b.descriptor:
        raise SchemaError("operands from different fields")
    if isinstance(a, PadicScalar):
        if op == "add":
            return _padic_add(a, b)
        if op == "sub":
            return _padic_add(a, -b)
        if op == "mul":
            return _padic_mul(a, b)
        if op == "div":
            return _padic_div(a, b)
    else:
        x, y = a.value, b.value
        if op == "add":
            return RealScalar(a.descriptor, x + y)
        if op == "sub":
            return RealScalar(a.descriptor, x - y)
        if op == "mul":
            return RealScalar(a.descriptor, x * y)
        if op == "div":
            if y == 0.0:
                raise DivisionByZero("division by zero")
            return RealScalar(a.descriptor, x / y)
    raise SchemaError(f"unknown op {op!r}")


def field_abs(a: Scalar):
    """Absolute value at tracked precision.

    Padic scalars give the exact Fraction p^-v; anything that is zero at
    tracked precision reports 0 (use `abs_upper_bound` for a sound upper
    bound on such values).  Real scalars give a float.
    """
    if isinstance(a, PadicScalar):
        if a.val is None:
            return Fraction(0)
        return Fraction(a.descriptor.prime) ** (-a.val)
    return abs(a.value)


def abs_upper_bound(a: Scalar):
    """Sound upper bound for |a| even when digits have been exhausted."""
    if isinstance(a, PadicScalar):
        if a.is_exact_zero():
            return Fraction(0)
        if a.val is None:
            return Fraction(a.descriptor.prime) ** (-a.prec)
        return Fraction(a.descriptor.prime) ** (-a.val)
    return abs(a.value)


def embed_rational(num, den, descriptor: FieldDescriptor) -> Scalar:
    """Exact embedding of num/den to full precision."""
    if isinstance(num, Fraction):
        frac = num / den
        num, den = frac.numerator, frac.denominator
    if den == 0:
        raise DivisionByZero("zero denominator")
    if descriptor.kind == "real":
        return RealScalar(descriptor, num / den)
    if num == 0:
        return descriptor.zero()
    p, n = descriptor.prime, descriptor.precision
    vn = int_valuation(num, p)
    vd = int_valuation(den, p)
    val = vn - vd
    unum = num // p**vn
    uden = den // p**vd
    unit = (unum * pow(uden, -1, p**n)) % p**n
    return PadicScalar(descriptor, val, unit, val + n)


def truncate_precision(a: Scalar, abs_exponent: int) -> Scalar:
    """Forget padic digits at and above p^abs_exponent (no-op for reals).

    Used to shrink an iterate to the precision actually certified by an a
    priori bound, so reported values never claim digits beyond the proof.
    """
    if not isinstance(a, PadicScalar):
        return a
    desc = a.descriptor
    if a.val is None:
        if a.prec is None:
            return PadicScalar(desc, None, 0, abs_exponent)
        return PadicScalar(desc, None, 0, min(a.prec, abs_exponent))
    if a.prec <= abs_exponent:
        return a
    if a.val >= abs_exponent:
        return PadicScalar(desc, None, 0, abs_exponent)
    unit = a.unit % desc.prime ** (abs_exponent - a.val)
    if unit == 0:
        return PadicScalar(desc, None, 0, abs_exponent)
    return _padic_make(desc, a.val, unit, abs_exponent)


def rational_abs(q, descriptor: FieldDescriptor) -> Fraction:
    """|q| of an exact rational, as an exact Fraction for either backend.

    This is the workhorse of every verification oracle: sampling checks stay
    in exact arithmetic on both the ultrametric and the archimedean side.
    """
    q = Fraction(q)
    if descriptor.kind == "real":
        return abs(q)
    if q == 0:
        return Fraction(0)
    return Fraction(descriptor.prime) ** (-rational_valuation(q, descriptor.prime))
