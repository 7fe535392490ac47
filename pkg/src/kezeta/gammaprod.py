"""Exact engine for finite products of Gamma factors with affine arguments.

A GammaProduct is  c * prod_k Gamma(L_k(params))^{e_k}  where each L_k is an
affine form with exact rational coefficients and e_k is a nonzero integer.
Every closed-form partition function in this package is carried by one of
these objects, so pole/zero bookkeeping lives here and nowhere else.

Numerics: log_gamma is the principal branch, computed by the Stirling series
with Bernoulli-number tail after shifting the argument into |z| >= 20 by the
recurrence  log Gamma(z) = log Gamma(z+1) - Log z.  Both sides of the
recurrence are analytic on the plane cut along (-inf, 0] and agree on the
positive reals, so iterating it preserves the principal branch; this handles
Re z < 1/2 without a separate reflection step (the reflection identity is
still exercised as a test property).

Exact classification: a factor is singular at a parameter point when its
affine argument is a nonpositive integer.  With rational parameters this is
decided in exact arithmetic.  Removable points (net order zero) are resolved
by pairing residues via  Gamma(z) ~ (-1)^n / (n! (z+n))  near z = -n, which
keeps the value finite without ever evaluating close to a pole.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping, Union

from .errors import PoleError, ValidationError

__all__ = [
    "AffineArg",
    "GammaFactor",
    "GammaProduct",
    "MeroValue",
    "log_gamma",
    "eval_gamma_product",
    "restrict_to_line",
    "zeros_and_poles_in_strip",
    "gp_to_json",
    "gp_from_json",
]

RationalLike = Union[int, str, Fraction]

# Bernoulli numbers B_2..B_16 as exact rationals; the Stirling tail
# sum_{m} B_{2m} / (2m(2m-1) z^{2m-1}) truncated after B_16 has error
# below 1e-21 for |z| >= 20.
_BERNOULLI = [
    Fraction(1, 6),
    Fraction(-1, 30),
    Fraction(1, 42),
    Fraction(-1, 30),
    Fraction(5, 66),
    Fraction(-691, 2730),
    Fraction(7, 6),
    Fraction(-3617, 510),
]
_STIRLING_COEF = [
    float(b / (2 * m * (2 * m - 1))) for m, b in enumerate(_BERNOULLI, start=1)
]
_STIRLING_RADIUS = 20.0
_HALF_LOG_TWO_PI = 0.5 * math.log(2.0 * math.pi)
_NEAR_SINGULAR_TOL = 1e-9


def _is_nonpositive_integer(z: complex) -> bool:
    return z.imag == 0.0 and z.real <= 0.0 and float(z.real).is_integer()


def log_gamma(z: complex) -> complex:
    """Principal-branch log Gamma, relative accuracy ~1e-14 for |z| <= 50.

    Raises PoleError at the exact nonpositive integers.
    """
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValidationError(f"log_gamma argument must be finite, got {z}")
    if _is_nonpositive_integer(z):
        raise PoleError(f"log Gamma has a pole at z = {z.real:g}")

    # Shift right until the Stirling series applies.  Each Log is principal
    # and analytic off the cut, so the branch survives the recurrence.
    shift = 0.0 + 0.0j
    while abs(z) < _STIRLING_RADIUS or z.real < 0.5:
        shift += cmath.log(z)
        z = z + 1.0

    w = 1.0 / (z * z)
    tail = 0.0 + 0.0j
    for c in reversed(_STIRLING_COEF):
        tail = (tail + c) * w
    tail = tail * z  # sum c_m / z^{2m-1}
    return (z - 0.5) * cmath.log(z) - z + _HALF_LOG_TWO_PI + tail - shift


def _as_fraction(x: RationalLike) -> Fraction:
    if isinstance(x, bool):
        raise ValidationError("bool is not a rational coefficient")
    if isinstance(x, (int, str)):
        return Fraction(x)
    if isinstance(x, Fraction):
        return x
    if isinstance(x, Rational):
        return Fraction(x.numerator, x.denominator)
    raise ValidationError(
        f"coefficients must be exact rationals (int, Fraction or 'p/q'), got {x!r}"
    )


@dataclass(frozen=True)
class AffineArg:
    """Affine form  sum_i c_i * param_i + constant  with exact rational data."""

    coeffs: tuple[tuple[str, Fraction], ...]
    constant: Fraction

    @classmethod
    def make(
        cls, coeffs: Mapping[str, RationalLike] | None = None, constant: RationalLike = 0
    ) -> "AffineArg":
        items = []
        for name, c in sorted((coeffs or {}).items()):
            c = _as_fraction(c)
            if c != 0:
                items.append((str(name), c))
        return cls(tuple(items), _as_fraction(constant))

    @property
    def params(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.coeffs)

    def is_constant(self) -> bool:
        return not self.coeffs

    def gradient(self) -> dict[str, Fraction]:
        return dict(self.coeffs)

    def evaluate(self, params: Mapping[str, complex]):
        """Value at a parameter point; exact Fraction when every input is rational."""
        exact = all(
            isinstance(params[name], (int, Fraction)) and not isinstance(params[name], bool)
            for name, _ in self.coeffs
        )
        if exact:
            total = self.constant
            for name, c in self.coeffs:
                total += c * Fraction(params[name])
            return total
        total_c = complex(self.constant)
        for name, c in self.coeffs:
            total_c += float(c) * complex(params[name])
        return total_c

    def compose(self, line: Mapping[str, tuple[Fraction, Fraction]]) -> "AffineArg":
        """Substitute param_i = slope_i * t + intercept_i."""
        slope = Fraction(0)
        const = self.constant
        for name, c in self.coeffs:
            s, b = line[name]
            slope += c * _as_fraction(s)
            const += c * _as_fraction(b)
        return AffineArg.make({"t": slope}, const)

    def __str__(self) -> str:
        parts = [f"{c}*{name}" for name, c in self.coeffs]
        if self.constant != 0 or not parts:
            parts.append(str(self.constant))
        return " + ".join(parts)


@dataclass(frozen=True)
class GammaFactor:
    arg: AffineArg
    exponent: int

    def __post_init__(self):
        if not isinstance(self.exponent, int) or self.exponent == 0:
            raise ValidationError("GammaFactor exponent must be a nonzero integer")


@dataclass(frozen=True)
class GammaProduct:
    """c * prod Gamma(arg_k)^{e_k}, with c stored as log_prefactor = Log c."""

    log_prefactor: complex = 0.0 + 0.0j
    factors: tuple[GammaFactor, ...] = ()
    prefactor_sign_note: str = ""

    def __post_init__(self):
        lp = complex(self.log_prefactor)
        if not (math.isfinite(lp.real) and math.isfinite(lp.imag)):
            raise ValidationError("prefactor must be nonzero and finite (log form)")
        merged: dict[AffineArg, int] = {}
        for f in self.factors:
            merged[f.arg] = merged.get(f.arg, 0) + f.exponent
        canon = tuple(
            GammaFactor(arg, e)
            for arg, e in sorted(merged.items(), key=lambda kv: (kv[0].coeffs, kv[0].constant))
            if e != 0
        )
        object.__setattr__(self, "log_prefactor", lp)
        object.__setattr__(self, "factors", canon)

    @property
    def params(self) -> tuple[str, ...]:
        names = set()
        for f in self.factors:
            names.update(f.arg.params)
        return tuple(sorted(names))

    def times(self, other: "GammaProduct") -> "GammaProduct":
        return GammaProduct(
            self.log_prefactor + other.log_prefactor,
            self.factors + other.factors,
            self.prefactor_sign_note or other.prefactor_sign_note,
        )


@dataclass(frozen=True)
class MeroValue:
    """Outcome of evaluating a GammaProduct at a point.

    kind 'regular': log_value = log-modulus + i*phase of the (finite, nonzero)
    value; .value exponentiates it (may overflow to inf for huge products --
    use .log_modulus/.phase then).
    kind 'pole'/'zero': order >= 1.  For single-parameter products a zero also
    carries limit_of_scaled = lim f(t)/(t-t0)^order.
    """

    kind: str
    order: int = 0
    log_value: complex | None = None
    limit_of_scaled: complex | None = None
    warnings: tuple[str, ...] = ()

    @classmethod
    def regular_from_log(cls, logv: complex, warnings=()) -> "MeroValue":
        return cls("regular", 0, complex(logv), None, tuple(warnings))

    @classmethod
    def pole(cls, order: int, warnings=()) -> "MeroValue":
        return cls("pole", int(order), None, None, tuple(warnings))

    @classmethod
    def zero(cls, order: int, limit_of_scaled=None, warnings=()) -> "MeroValue":
        return cls("zero", int(order), None, limit_of_scaled, tuple(warnings))

    @property
    def is_regular(self) -> bool:
        return self.kind == "regular"

    @property
    def log_modulus(self) -> float:
        if self.kind == "zero":
            return -math.inf
        if self.kind != "regular":
            raise ValidationError(f"no log-modulus for a {self.kind}")
        return self.log_value.real

    @property
    def phase(self) -> float:
        if self.kind != "regular":
            raise ValidationError(f"no phase for a {self.kind}")
        # wrap into (-pi, pi]
        p = math.remainder(self.log_value.imag, 2.0 * math.pi)
        return p if p != -math.pi else math.pi

    @property
    def value(self) -> complex:
        if self.kind == "zero":
            return 0.0 + 0.0j
        if self.kind == "pole":
            raise PoleError(f"pole of order {self.order}")
        try:
            return cmath.exp(self.log_value)
        except OverflowError:
            return complex(math.inf, math.inf)


def _primitive_direction(grad: dict[str, Fraction]) -> tuple[tuple[tuple[str, Fraction], ...], Fraction]:
    """Scale a nonzero rational gradient to a canonical primitive form.

    Returns (canonical direction, lambda) with  grad = lambda * direction  and
    the direction's first (lexicographically) nonzero entry equal to +1.
    """
    items = sorted((k, v) for k, v in grad.items() if v != 0)
    lead = items[0][1]
    direction = tuple((k, v / lead) for k, v in items)
    return direction, lead


def eval_gamma_product(gp: GammaProduct, params: Mapping[str, complex]) -> MeroValue:
    """Classify and evaluate gp at a parameter point.

    Net order m sums factor exponents over the factors whose argument lands on
    a nonpositive integer: m>0 pole, m<0 zero, m=0 removable (residue pairing).
    Rational parameter values are classified exactly; floats hit a singularity
    only on exact integer arguments, and a 1e-9 proximity otherwise just adds
    a near-singular warning to the regular value.
    """
    missing = [p for p in gp.params if p not in params]
    if missing:
        raise ValidationError(f"missing parameter values for {missing}")

    warnings: list[str] = []
    regular: list[tuple[complex, int]] = []          # (argument value, exponent)
    singular: list[tuple[dict, int, int]] = []       # (gradient, n, exponent) at arg = -n

    for f in gp.factors:
        val = f.arg.evaluate(params)
        if isinstance(val, Fraction):
            hit = val <= 0 and val.denominator == 1
            numeric = complex(val)
        else:
            hit = _is_nonpositive_integer(val)
            numeric = complex(val)
            if not hit:
                nearest = round(val.real)
                if nearest <= 0 and abs(val - nearest) <= _NEAR_SINGULAR_TOL:
                    warnings.append(
                        f"argument {f.arg} = {val} within {_NEAR_SINGULAR_TOL:g} of pole at {nearest}"
                    )
        if hit:
            grad = f.arg.gradient()
            if not grad:
                raise ValidationError(
                    f"factor Gamma({f.arg})^{f.exponent} is identically singular (constant argument)"
                )
            singular.append((grad, int(-val.real if not isinstance(val, Fraction) else -val), f.exponent))
        else:
            regular.append((numeric, f.exponent))

    net = sum(e for _, _, e in singular)
    if net > 0:
        return MeroValue.pole(net, warnings)

    # log of the product over the nonsingular factors
    log_reg = complex(gp.log_prefactor)
    for argval, e in regular:
        log_reg += e * log_gamma(argval)

    if net < 0:
        limit = None
        if len(gp.params) == 1:
            # lim f(t)/(t-t0)^{|net|}: each singular factor contributes
            # Gamma(s*(t-t0) - n)^e ~ [(-1)^n/(n! * s)]^e * (t-t0)^{-e}
            log_c, sign = 0.0, 1.0
            ok = True
            for grad, n, e in singular:
                s = list(grad.values())[0]
                coef = Fraction((-1) ** n, math.factorial(n)) / s
                if coef == 0:
                    ok = False
                    break
                log_c += e * math.log(abs(coef))
                sign *= (1.0 if coef > 0 else -1.0) ** e
            if ok:
                try:
                    limit = cmath.exp(log_reg + log_c) * sign
                except OverflowError:
                    limit = None
        return MeroValue.zero(-net, limit, warnings)

    if singular:
        # removable: group by direction; each class must cancel on its own,
        # otherwise the limit depends on the approach direction.
        classes: dict[tuple, list[tuple[Fraction, int, int]]] = {}
        for grad, n, e in singular:
            direction, lam = _primitive_direction(grad)
            classes.setdefault(direction, []).append((lam, n, e))
        for direction, members in classes.items():
            if sum(e for _, _, e in members) != 0:
                raise ValidationError(
                    "removable point has direction-dependent limit "
                    f"(unbalanced cancellation along {dict(direction)})"
                )
            # prod over class of [(-1)^n / (n! lambda)]^e  -- exact rational
            c = Fraction(1)
            for lam, n, e in members:
                c *= (Fraction((-1) ** n, math.factorial(n)) / lam) ** e
            if c == 0:
                raise ValidationError("degenerate cancellation class")
            log_reg += math.log(abs(c)) + (cmath.pi * 1j if c < 0 else 0.0)

    return MeroValue.regular_from_log(log_reg, warnings)


def restrict_to_line(
    gp: GammaProduct, line: Mapping[str, tuple[RationalLike, RationalLike]]
) -> GammaProduct:
    """Substitute param_i = slope_i * t + intercept_i (exact rationals)."""
    missing = [p for p in gp.params if p not in line]
    if missing:
        raise ValidationError(f"line does not cover parameters {missing}")
    norm = {k: (_as_fraction(s), _as_fraction(b)) for k, (s, b) in line.items()}
    return GammaProduct(
        gp.log_prefactor,
        tuple(GammaFactor(f.arg.compose(norm), f.exponent) for f in gp.factors),
        gp.prefactor_sign_note,
    )


def zeros_and_poles_in_strip(
    gp: GammaProduct, re_min: float, re_max: float
) -> list[tuple[Fraction, int]]:
    """All t with re_min <= Re t <= re_max where the product has a pole or zero.

    Returns (location, net_order) pairs, net_order > 0 for poles, < 0 for
    zeros, sorted right-to-left; removable points (net order 0) are omitted.
    Locations are exact rationals since every factor argument is affine with
    rational data.
    """
    names = gp.params
    if len(names) != 1:
        raise ValidationError(f"strip enumeration needs a single-parameter product, got {names}")
    lo, hi = Fraction(re_min), Fraction(re_max)
    if lo > hi:
        raise ValidationError("re_min must not exceed re_max")

    orders: dict[Fraction, int] = {}
    for f in gp.factors:
        grad = f.arg.gradient()
        if not grad:
            cval = f.arg.constant
            if cval <= 0 and cval.denominator == 1:
                raise ValidationError(
                    f"factor Gamma({cval})^{f.exponent} is identically singular on the strip"
                )
            continue
        s = grad[names[0]]
        c = f.arg.constant
        # arg = s t + c = -m  =>  t = (-m - c)/s; m ranges over integers >= 0
        # with t inside [lo, hi].
        m_bounds = sorted((-c - s * lo, -c - s * hi))
        m_first = math.ceil(m_bounds[0])
        m_last = math.floor(m_bounds[1])
        for m in range(max(0, m_first), m_last + 1):
            t_m = (-m - c) / s
            orders[t_m] = orders.get(t_m, 0) + f.exponent

    return sorted(((t, o) for t, o in orders.items() if o != 0), key=lambda kv: -kv[0])


# ---------------------------------------------------------------------------
# JSON round trip: rationals as decimal-free "p/q" strings.

def gp_to_json(gp: GammaProduct) -> str:
    doc = {
        "prefactor_log": [gp.log_prefactor.real, gp.log_prefactor.imag],
        "factors": [
            {
                "coeffs": {name: str(c) for name, c in f.arg.coeffs},
                "constant": str(f.arg.constant),
                "exponent": f.exponent,
            }
            for f in gp.factors
        ],
    }
    if gp.prefactor_sign_note:
        doc["prefactor_sign_note"] = gp.prefactor_sign_note
    return json.dumps(doc, indent=2)


def gp_from_json(text: str) -> GammaProduct:
    doc = json.loads(text)
    try:
        re_, im = doc["prefactor_log"]
        factors = tuple(
            GammaFactor(
                AffineArg.make(f.get("coeffs", {}), f.get("constant", 0)),
                int(f["exponent"]),
            )
            for f in doc["factors"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed GammaProduct document: {exc}") from exc
    return GammaProduct(complex(re_, im), factors, doc.get("prefactor_sign_note", ""))
