"""Explicit partition functions as Gamma products, and tube-domain analyses.

Families implemented here (each returns a symbolic GammaProduct):

  * selberg_gamma_product(N): the three-point-weight normalization constant at
    canonical inverse temperature, via the complex Selberg / Dotsenko-Fateev
    evaluation.  With d' = (2 - w1 - w2 - w3)/(N-1) and l(x) = G(x)/G(1-x),

        Z_N = N! (pi / l(-d'/2))^N prod_{j=1}^N l(-(j/2)d')
              / [ l(w1+(j/2)d') l(w2+(j/2)d') l(w3+(j/2)d') ],

    where G is the Gamma function; every l is expanded into its two Gamma
    factors so pole/zero bookkeeping happens in one place (gammaprod).
  * pn_minimal_Z(n): minimal-degree ensemble on n-dimensional projective
    space, Z(beta) = c_n prod_{j=1}^n G(beta(n+1)+j) / G(beta(n+1)+n+1)^n,
    with c_n = G(n+1)^n / prod_j G(j) pinned by Z(0) = 1.
  * p1_three_point_Z(): N = 3 on the line, Z = pi^3 G(2b+2)^-3 G(3b+2) G(b+1)^3.
  * circular_Z(N): circular ensemble, (2pi)^N G(1+b/(N-1))^-N G(1+bN/(N-1)).
  * gaussian_det_Z(n): moments of |det|^2 of an (n+1)x(n+1) standard complex
    Gaussian matrix, Z(s) = c prod_{j=1}^{n+1} G(s+j), c = pi^(n+1)^2/prod G(j).

Tube analysis: zeros of any Gamma product lie on affine hyperplane families
{arg = -m} coming from negative-exponent factors, so zero-freeness over an
open convex tube reduces to exact linear feasibility checks (Fourier-Motzkin
over Fractions), with net-order cancellation against positive-exponent
factors that land on the same hyperplane.

A caution that shapes two public helpers: the Gamma-product formula is the
meromorphic continuation of the defining integral.  At weight points where
the integral diverges the formula is usually still finite, so "is Z finite"
questions about the *integral* are answered by locating which side of the
pole walls the point sits on (selberg_integral_finite), never by evaluating
the continuation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .errors import ValidationError
from .gammaprod import (
    AffineArg,
    GammaFactor,
    GammaProduct,
    eval_gamma_product,
)

__all__ = [
    "selberg_gamma_product",
    "pn_minimal_Z",
    "p1_three_point_Z",
    "circular_Z",
    "gaussian_det_Z",
    "bernstein_product",
    "TubeConstraint",
    "TubeDomain",
    "ZeroFreeReport",
    "zero_free_in_tube",
    "selberg_tube",
    "selberg_integral_finite",
]


def _l_pair(arg: AffineArg, exponent: int) -> tuple[GammaFactor, GammaFactor]:
    """l(x) = Gamma(x)/Gamma(1-x), contributed with the given exponent."""
    one_minus = AffineArg.make(
        {name: -c for name, c in arg.coeffs}, Fraction(1) - arg.constant
    )
    return GammaFactor(arg, exponent), GammaFactor(one_minus, -exponent)


def selberg_gamma_product(N: int) -> GammaProduct:
    if not isinstance(N, int) or N < 2:
        raise ValidationError("selberg_gamma_product needs integer N >= 2")
    ws = ("w1", "w2", "w3")
    denom = 2 * (N - 1)

    def half_j_dprime(j: int) -> AffineArg:
        # (j/2) d' = (j/2)(2 - w1 - w2 - w3)/(N-1)
        return AffineArg.make({w: Fraction(-j, denom) for w in ws}, Fraction(2 * j, denom))

    factors: list[GammaFactor] = []
    # prefactor (pi / l(-d'/2))^N
    a, b = _l_pair(half_j_dprime(-1), -N)  # -(1/2)d' is half_j_dprime at j = -1
    factors += [a, b]
    # repulsion factors l(-(j/2)d'), j = 1..N
    for j in range(1, N + 1):
        a, b = _l_pair(half_j_dprime(-j), 1)
        factors += [a, b]
    # weight factors 1/l(w_i + (j/2)d'), j = 0..N-1.  The j = N-1 wall
    # w_i + d/2 = 1 is where the integral's marked-point pileup diverges, and
    # the j = N repulsion factor's first pole N d' = 2 is the free-collision
    # wall; shifting the weight range up by one puts both walls in the wrong
    # place and disagrees with quadrature, so the range here is load-bearing.
    for j in range(0, N):
        shift = half_j_dprime(j)
        for w in ws:
            coeffs = {name: c for name, c in shift.coeffs}
            coeffs[w] = coeffs.get(w, Fraction(0)) + 1
            a, b = _l_pair(AffineArg.make(coeffs, shift.constant), -1)
            factors += [a, b]
    log_pref = math.lgamma(N + 1) + N * math.log(math.pi)
    return GammaProduct(log_pref, tuple(factors))


def pn_minimal_Z(n: int) -> GammaProduct:
    if not isinstance(n, int) or n < 1:
        raise ValidationError("pn_minimal_Z needs integer n >= 1")
    log_c = n * math.lgamma(n + 1) - sum(math.lgamma(j) for j in range(1, n + 1))
    factors = [
        GammaFactor(AffineArg.make({"beta": n + 1}, j), 1) for j in range(1, n + 1)
    ]
    factors.append(GammaFactor(AffineArg.make({"beta": n + 1}, n + 1), -n))
    return GammaProduct(log_c, tuple(factors))


def p1_three_point_Z() -> GammaProduct:
    return GammaProduct(
        3 * math.log(math.pi),
        (
            GammaFactor(AffineArg.make({"beta": 2}, 2), -3),
            GammaFactor(AffineArg.make({"beta": 3}, 2), 1),
            GammaFactor(AffineArg.make({"beta": 1}, 1), 3),
        ),
    )


def circular_Z(N: int) -> GammaProduct:
    if not isinstance(N, int) or N < 2:
        raise ValidationError("circular_Z needs integer N >= 2")
    return GammaProduct(
        N * math.log(2 * math.pi),
        (
            GammaFactor(AffineArg.make({"beta": Fraction(1, N - 1)}, 1), -N),
            GammaFactor(AffineArg.make({"beta": Fraction(N, N - 1)}, 1), 1),
        ),
    )


def gaussian_det_Z(n: int) -> GammaProduct:
    if not isinstance(n, int) or n < 0:
        raise ValidationError("gaussian_det_Z needs integer n >= 0")
    k = n + 1
    log_c = k * k * math.log(math.pi) - sum(math.lgamma(j) for j in range(1, k + 1))
    return GammaProduct(
        log_c,
        tuple(GammaFactor(AffineArg.make({"s": 1}, j), 1) for j in range(1, k + 1)),
    )


def bernstein_product(n: int, s) -> Fraction | float:
    """b(s) = prod_{j=1}^{n+1} (s + j), the polynomial in Z(s+1) = b(s) Z(s)."""
    out = s * 0 + 1  # keeps Fractions exact, floats float
    for j in range(1, n + 2):
        out = out * (s + j)
    return out


# ---------------------------------------------------------------------------
# Tube domains and exact linear feasibility (Fourier-Motzkin over Fractions).

@dataclass(frozen=True)
class TubeConstraint:
    """Strict affine constraint on real parts: sum coeffs*Re(param) REL bound."""

    coeffs: tuple[tuple[str, Fraction], ...]
    rel: str  # "<" or ">"
    bound: Fraction

    @classmethod
    def make(cls, coeffs: Mapping[str, object], rel: str, bound) -> "TubeConstraint":
        if rel not in ("<", ">"):
            raise ValidationError("constraint relation must be '<' or '>'")
        arg = AffineArg.make(coeffs, 0)
        if not arg.coeffs:
            raise ValidationError("constraint needs at least one nonzero coefficient")
        return cls(arg.coeffs, rel, Fraction(bound))


@dataclass(frozen=True)
class TubeDomain:
    constraints: tuple[TubeConstraint, ...]

    @property
    def params(self) -> tuple[str, ...]:
        names = set()
        for c in self.constraints:
            names.update(name for name, _ in c.coeffs)
        return tuple(sorted(names))

    @classmethod
    def from_bounds(cls, bounds: Mapping[str, tuple]) -> "TubeDomain":
        cons = []
        for name, (lo, hi) in bounds.items():
            if lo is not None:
                cons.append(TubeConstraint.make({name: 1}, ">", lo))
            if hi is not None:
                cons.append(TubeConstraint.make({name: 1}, "<", hi))
        return cls(tuple(cons))

    def contains(self, point: Mapping[str, object]) -> bool:
        for c in self.constraints:
            val = sum(Fraction(point[name]) * co for name, co in c.coeffs)
            if c.rel == "<" and not val < c.bound:
                return False
            if c.rel == ">" and not val > c.bound:
                return False
        return True

    def rows(self, params: Sequence[str]) -> list[tuple[tuple[Fraction, ...], Fraction]]:
        """Normalized strict rows a.x < b over the given parameter order."""
        index = {p: i for i, p in enumerate(params)}
        out = []
        for c in self.constraints:
            vec = [Fraction(0)] * len(params)
            for name, co in c.coeffs:
                if name not in index:
                    raise ValidationError(f"constraint mentions unknown parameter {name}")
                vec[index[name]] = co
            if c.rel == "<":
                out.append((tuple(vec), c.bound))
            else:
                out.append((tuple(-v for v in vec), -c.bound))
        return out


def selberg_tube(kind: str = "canonical") -> TubeDomain:
    """Weight tubes for the three-point family.

    canonical: 0 < Re w_i < 1 -- the hypotheses the zero-free argument
        actually uses (its d = 0 step needs Re w_i > 0).
    display:   Re w_i < 1 with only the sum positive.  This larger tube is
        NOT zero-free: it meets denominator-pole hyperplanes with one weight
        negative, e.g. w = (-1/5, 9/10, 9/10) at N = 2.
    widened:   canonical but with Re w1 < 2, which lets the numerator zero
        family at sum = 2 + 2(N-1)/N through; used as a witness control.
    """
    if kind == "canonical":
        return TubeDomain.from_bounds({w: (0, 1) for w in ("w1", "w2", "w3")})
    if kind == "display":
        cons = [TubeConstraint.make({w: 1}, "<", 1) for w in ("w1", "w2", "w3")]
        cons.append(TubeConstraint.make({"w1": 1, "w2": 1, "w3": 1}, ">", 0))
        return TubeDomain(tuple(cons))
    if kind == "widened":
        return TubeDomain.from_bounds(
            {"w1": (0, 2), "w2": (0, 1), "w3": (0, 1)}
        )
    raise ValidationError(f"unknown selberg tube kind {kind!r}")


Row = tuple[tuple[Fraction, ...], Fraction]


def _fm_split(rows: list[Row], idx: int):
    lowers, uppers, keep = [], [], []
    for a, b in rows:
        c = a[idx]
        if c == 0:
            keep.append((a, b))
            continue
        scaled = (tuple(x / c for x in a), b / c)
        (uppers if c > 0 else lowers).append(scaled)
    return lowers, uppers, keep


def _fm_eliminate(rows: list[Row], idx: int) -> list[Row]:
    lowers, uppers, keep = _fm_split(rows, idx)
    for la, lb in lowers:
        for ua, ub in uppers:
            a = tuple(u - l if i != idx else Fraction(0) for i, (u, l) in enumerate(zip(ua, la)))
            keep.append((a, ub - lb))
    return keep


def _fm_contradiction(rows: list[Row]) -> bool:
    return any(all(x == 0 for x in a) and b <= 0 for a, b in rows)


def _substitute(rows: list[Row], j: int, ell: tuple[Fraction, ...], value: Fraction) -> list[Row]:
    """Impose the equality ell.x = value by solving for x_j and substituting."""
    lj = ell[j]
    out = []
    for a, b in rows:
        cj = a[j]
        if cj == 0:
            out.append((a, b))
            continue
        # x_j = (value - sum_{i != j} ell_i x_i)/l_j
        new_a = tuple(
            a[i] - cj * ell[i] / lj if i != j else Fraction(0) for i in range(len(a))
        )
        out.append((new_a, b - cj * value / lj))
    return out


def _functional_range(rows: list[Row], ell: tuple[Fraction, ...]):
    """Exact open range (lo, hi) of ell.x over the open polytope; None side
    means unbounded; returns 'empty' if the polytope is empty."""
    n = len(ell)
    # introduce t as variable n, then substitute the equality t = ell.x away
    wide = [(a + (Fraction(0),), b) for a, b in rows]
    ext = tuple(ell) + (Fraction(-1),)
    j = next(i for i in range(n) if ell[i] != 0)
    cur = _substitute(wide, j, ext, Fraction(0))
    for idx in range(n):
        if idx == j:
            continue
        cur = _fm_eliminate(cur, idx)
    if _fm_contradiction(cur):
        return "empty"
    lo, hi = None, None
    for a, b in cur:
        c = a[n]
        if c == 0:
            continue
        bound = b / c
        if c > 0:
            hi = bound if hi is None else min(hi, bound)
        else:
            lo = bound if lo is None else max(lo, bound)
    if lo is not None and hi is not None and lo >= hi:
        return "empty"
    return lo, hi


def _fm_point(rows: list[Row], n: int, skip=(), pick=Fraction(1, 2)):
    """Interior rational point of the open polytope, or None.  Variables in
    `skip` are ignored (treated as already substituted away)."""
    order = [i for i in range(n) if i not in skip]
    levels = []
    cur = rows
    for idx in order:
        lowers, uppers, keep = _fm_split(cur, idx)
        levels.append((idx, lowers, uppers))
        cur = keep + [
            (
                tuple(u - l if i != idx else Fraction(0) for i, (u, l) in enumerate(zip(ua, la))),
                ub - lb,
            )
            for la, lb in lowers
            for ua, ub in uppers
        ]
    if _fm_contradiction(cur):
        return None
    x: list[Optional[Fraction]] = [None] * n
    for idx, lowers, uppers in reversed(levels):
        lo, hi = None, None
        for a, b in lowers:
            v = b - sum(a[i] * x[i] for i in range(n) if i != idx and a[i] != 0)
            lo = v if lo is None else max(lo, v)
        for a, b in uppers:
            v = b - sum(a[i] * x[i] for i in range(n) if i != idx and a[i] != 0)
            hi = v if hi is None else min(hi, v)
        if lo is None and hi is None:
            x[idx] = Fraction(0)
        elif lo is None:
            x[idx] = hi - 1
        elif hi is None:
            x[idx] = lo + 1
        else:
            if lo >= hi:
                return None
            x[idx] = lo + (hi - lo) * pick
    return x


@dataclass(frozen=True)
class ZeroFreeReport:
    zero_free: bool
    witness: Optional[dict] = None
    hyperplane: Optional[str] = None
    families_checked: int = 0

    def to_json(self) -> dict:
        out = {"zero_free": self.zero_free, "families_checked": self.families_checked}
        if not self.zero_free:
            out["hyperplane"] = self.hyperplane
            out["witness"] = {k: str(v) for k, v in self.witness.items()}
        return out


def zero_free_in_tube(gp: GammaProduct, dom: TubeDomain) -> ZeroFreeReport:
    """Decide whether the product has a zero in the open tube.

    Zeros can only come from poles of negative-exponent Gamma factors, i.e.
    from affine hyperplanes {arg + m = 0}, m = 0, 1, 2, ...  For each family
    the feasible m are found exactly (the functional's range over the tube is
    an open rational interval); contributions of all factors landing on the
    same geometric hyperplane are netted, so cancellations like the one at
    d' = 0 in the three-point family are handled.  A surviving hyperplane
    yields a rational witness point, validated by evaluation.
    """
    params = list(gp.params)
    if not params:
        return ZeroFreeReport(zero_free=True)
    extra = set(dom.params) - set(params)
    if extra:
        raise ValidationError(f"tube constrains unknown parameters {sorted(extra)}")
    n = len(params)
    rows = dom.rows(params)
    if _fm_point(rows, n) is None:
        raise ValidationError("tube domain is empty")

    range_cache: dict[tuple, object] = {}
    net: dict[tuple, int] = {}
    rep: dict[tuple, tuple] = {}
    index = {p: i for i, p in enumerate(params)}
    for f in gp.factors:
        grad = f.arg.gradient()
        if not grad:
            c = f.arg.constant
            if c <= 0 and c.denominator == 1:
                raise ValidationError(
                    f"factor Gamma({c})^{f.exponent} has a zero family with all-zero slope"
                )
            continue
        vec = tuple(grad.get(p, Fraction(0)) for p in params)
        if vec not in range_cache:
            range_cache[vec] = _functional_range(rows, vec)
        rng = range_cache[vec]
        if rng == "empty":
            raise ValidationError("tube domain is empty")
        lo, hi = rng
        if lo is None:
            raise ValidationError(
                f"tube is unbounded along the singular family of Gamma({f.arg})"
            )
        c = f.arg.constant
        m_first = 0 if hi is None else max(0, math.floor(-c - hi) + 1)
        m_last = math.ceil(-c - lo) - 1
        for m in range(m_first, m_last + 1):
            value = -c - m  # hyperplane {vec . x = value} meets the tube
            lead = next(v for v in vec if v != 0)
            key = (tuple(v / lead for v in vec), value / lead)
            net[key] = net.get(key, 0) + f.exponent
            rep.setdefault(key, (vec, value))

    zero_keys = sorted(k for k, e in net.items() if e < 0)
    if not zero_keys:
        return ZeroFreeReport(zero_free=True, families_checked=len(net))

    vec, value = rep[zero_keys[0]]
    j = next(i for i in range(n) if vec[i] != 0)
    desc = " + ".join(f"{vec[i]}*{params[i]}" for i in range(n) if vec[i] != 0)
    constrained = _substitute(rows, j, vec, value)
    for pick in (Fraction(1, 2), Fraction(1, 3), Fraction(2, 3), Fraction(2, 5), Fraction(3, 5)):
        x = _fm_point(constrained, n, skip={j}, pick=pick)
        if x is None:
            continue
        x[j] = (value - sum(vec[i] * x[i] for i in range(n) if i != j)) / vec[j]
        point = {params[i]: x[i] for i in range(n)}
        try:
            kind = eval_gamma_product(gp, point).kind
        except ValidationError:
            continue  # landed on a crossing with another singular family
        if kind == "zero":
            return ZeroFreeReport(
                zero_free=False,
                witness=point,
                hyperplane=f"{desc} = {value}",
                families_checked=len(net),
            )
    raise ValidationError(
        f"found zero hyperplane {desc} = {value} but could not validate a witness"
    )


# ---------------------------------------------------------------------------
# Integral finiteness for the three-point family.

def selberg_integral_finite(w: Sequence, N: int) -> bool:
    """Whether the defining N-point integral converges at real weights w.

    The Gamma-product formula continues past the divergence walls, so this is
    decided geometrically: the convergence cell is the connected component of
    the complement of the formula's pole hyperplanes that contains a deeply
    stable reference point, and components of hyperplane-arrangement
    complements are convex, so membership is a per-wall side check.  Valid
    for 0 < w_i < 1 with positive degree (the range the integral is set in).
    """
    ws = [Fraction(x) if not isinstance(x, float) else Fraction(x).limit_denominator(10**9) for x in w]
    if len(ws) != 3:
        raise ValidationError("selberg_integral_finite needs three weights")
    if any(not (0 < x < 1) for x in ws):
        raise ValidationError("weights must lie strictly between 0 and 1")
    if sum(ws) >= 2:
        raise ValidationError("degree must be positive (sum of weights < 2)")

    gp = selberg_gamma_product(N)
    params = list(gp.params)
    n = len(params)
    # physical box: 0 < w_i < 1, sum < 2
    box = TubeDomain(
        tuple(
            [TubeConstraint.make({p: 1}, ">", 0) for p in params]
            + [TubeConstraint.make({p: 1}, "<", 1) for p in params]
            + [TubeConstraint.make({p: 1 for p in params}, "<", 2)]
        )
    )
    rows = box.rows(params)
    a_ref = (Fraction(2, N + 2) + Fraction(2, 3)) / 2  # symmetric, deep in the cell
    ref = [a_ref] * n
    pt = [Fraction(x) for x in ws]

    range_cache: dict[tuple, object] = {}
    net: dict[tuple, int] = {}
    rep: dict[tuple, tuple] = {}
    for f in gp.factors:
        grad = f.arg.gradient()
        if not grad:
            continue
        vec = tuple(grad.get(p, Fraction(0)) for p in params)
        if vec not in range_cache:
            range_cache[vec] = _functional_range(rows, vec)
        lo, hi = range_cache[vec]
        c = f.arg.constant
        m_first = 0 if hi is None else max(0, math.floor(-c - hi) + 1)
        m_last = math.ceil(-c - lo) - 1
        for m in range(m_first, m_last + 1):
            value = -c - m
            lead = next(v for v in vec if v != 0)
            key = (tuple(v / lead for v in vec), value / lead)
            net[key] = net.get(key, 0) + f.exponent
            rep.setdefault(key, (vec, value))

    for key, e in net.items():
        if e <= 0:
            continue  # zeros and removable hyperplanes are not divergence walls
        vec, value = rep[key]
        side_ref = sum(v * r for v, r in zip(vec, ref)) - value
        side_pt = sum(v * x for v, x in zip(vec, pt)) - value
        if side_pt == 0 or (side_ref > 0) != (side_pt > 0):
            return False
    return True
