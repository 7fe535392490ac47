"""Closed-form partition functions: pins, oracle comparisons, tube analyses."""

import math
from fractions import Fraction

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from kezeta.closedforms import (
    TubeConstraint,
    TubeDomain,
    bernstein_product,
    circular_Z,
    gaussian_det_Z,
    p1_three_point_Z,
    pn_minimal_Z,
    selberg_gamma_product,
    selberg_integral_finite,
    selberg_tube,
    zero_free_in_tube,
)
from kezeta.errors import ValidationError
from kezeta.gammaprod import (
    AffineArg,
    GammaFactor,
    GammaProduct,
    eval_gamma_product,
    gp_from_json,
    gp_to_json,
    zeros_and_poles_in_strip,
)
from kezeta.stability import gamma_threshold

mp = pytest.importorskip("mpmath")


def mp_selberg(w1, w2, w3, N):
    """Direct high-precision evaluation of the three-point formula.

    Weight factors run over shifts j = 0..N-1; the variant with 1..N puts the
    pole walls in the wrong place and disagrees with importance-sampling
    quadrature of the integral by orders of magnitude.
    """
    with mp.workdps(40):
        l = lambda x: mp.gamma(x) / mp.gamma(1 - x)
        dp = (mp.mpf(2) - (w1 + w2 + w3)) / (N - 1)
        val = mp.factorial(N) * (mp.pi / l(-dp / 2)) ** N
        for j in range(1, N + 1):
            val *= l(-j * dp / 2)
        for j in range(0, N):
            val /= l(w1 + j * dp / 2) * l(w2 + j * dp / 2) * l(w3 + j * dp / 2)
        return float(val)


HALF = Fraction(1, 2)


def test_selberg_pole_and_zero_pins():
    # weight-condition equality w1 = w2 + w3 sits exactly on the pileup wall
    # w1 + d/2 = 1, a continuation pole for every N
    border = {"w1": Fraction(3, 5), "w2": Fraction(3, 10), "w3": Fraction(3, 10)}
    for n in (2, 3, 4):
        assert eval_gamma_product(selberg_gamma_product(n), border).kind == "pole"
    # free-collision wall N d' = 2 (here sum w = 1 at N = 2)
    coll = {"w1": HALF, "w2": Fraction(1, 4), "w3": Fraction(1, 4)}
    assert eval_gamma_product(selberg_gamma_product(2), coll).kind == "pole"
    # at w = 0 (so d' = 1) the three j = 0 factors 1/l(0) vanish but the
    # three j = 2 factors 1/l(1) and the repulsion factor l(-1) all blow up:
    # net simple pole of the continuation
    gp3 = selberg_gamma_product(3)
    assert eval_gamma_product(gp3, {"w1": 0, "w2": 0, "w3": 0}).kind == "pole"


def test_selberg_frozen_values():
    cases = [
        ((HALF, HALF, HALF), 3, 5904.80443225),
        ((HALF, HALF, HALF), 4, 98289.0269769),
        ((Fraction(2, 5),) * 3, 4, 64434.952443),
        ((HALF, HALF, HALF), 2, 378.145440258),
    ]
    for (w1, w2, w3), n, frozen in cases:
        got = eval_gamma_product(
            selberg_gamma_product(n), {"w1": w1, "w2": w2, "w3": w3}
        )
        assert got.kind == "regular"
        oracle = mp_selberg(mp.mpf(str(w1)), mp.mpf(str(w2)), mp.mpf(str(w3)), n)
        assert got.value.real == pytest.approx(oracle, rel=1e-10)
        assert abs(got.value.imag) < 1e-9 * abs(got.value.real)
        assert got.value.real == pytest.approx(frozen, rel=1e-9)


def test_selberg_matches_mpmath_at_generic_stable_points():
    pts = [
        ((Fraction(1, 2), Fraction(2, 5), Fraction(11, 20)), 3),
        ((Fraction(3, 5), Fraction(3, 5), Fraction(1, 2)), 4),
        ((Fraction(7, 10), Fraction(3, 5), Fraction(3, 5)), 5),
    ]
    for (w1, w2, w3), n in pts:
        got = eval_gamma_product(
            selberg_gamma_product(n), {"w1": w1, "w2": w2, "w3": w3}
        )
        oracle = mp_selberg(mp.mpf(str(w1)), mp.mpf(str(w2)), mp.mpf(str(w3)), n)
        assert got.kind == "regular"
        assert got.value.real == pytest.approx(oracle, rel=1e-9)


def test_selberg_weight_symmetry():
    gp = selberg_gamma_product(3)
    a = eval_gamma_product(gp, {"w1": Fraction(1, 2), "w2": Fraction(2, 5), "w3": Fraction(3, 5)})
    b = eval_gamma_product(gp, {"w1": Fraction(3, 5), "w2": Fraction(1, 2), "w3": Fraction(2, 5)})
    assert a.value.real == pytest.approx(b.value.real, rel=1e-11)


def test_pn_minimal_normalization_and_n1_closed_form():
    gp = pn_minimal_Z(1)
    assert eval_gamma_product(gp, {"beta": 0}).value.real == pytest.approx(1.0, rel=1e-13)
    for beta in (0.3, 1.7, -0.2):
        got = eval_gamma_product(gp, {"beta": beta}).value.real
        assert got == pytest.approx(1.0 / (2 * beta + 1), rel=1e-12)


def test_pn_minimal_strip_enumeration():
    # first pole at -1/(n+1), nothing else to its right: net orders are exact
    for n in range(1, 7):
        gp = pn_minimal_Z(n)
        entries = zeros_and_poles_in_strip(gp, -Fraction(1, n + 1), 20)
        assert entries == [(-Fraction(1, n + 1), 1)]
    # n=1 has removable points at -1 and -3/2 (pole meets zero); they must
    # net out, leaving only the genuine first pole in a wide strip
    assert zeros_and_poles_in_strip(pn_minimal_Z(1), -2, 1) == [(-HALF, 1)]


def test_p1_three_point_pins():
    gp = p1_three_point_Z()
    assert eval_gamma_product(gp, {"beta": 0}).value.real == pytest.approx(math.pi**3, rel=1e-13)
    assert zeros_and_poles_in_strip(gp, -1, 5) == [(-Fraction(2, 3), 1), (Fraction(-1), 1)]
    v = eval_gamma_product(gp, {"beta": -1})
    assert v.kind == "pole" and v.order == 1


def test_circular_pins():
    gp3 = circular_Z(3)
    assert eval_gamma_product(gp3, {"beta": 0}).value.real == pytest.approx((2 * math.pi) ** 3, rel=1e-13)
    assert eval_gamma_product(gp3, {"beta": 1}).value.real == pytest.approx(48 * math.pi**2, rel=1e-12)
    # N=5, beta=2: Gamma(3/2)^-5 Gamma(7/2) turns (2pi)^5 into 1920 pi^3
    gp5 = circular_Z(5)
    assert eval_gamma_product(gp5, {"beta": 2}).value.real == pytest.approx(1920 * math.pi**3, rel=1e-12)
    for n in (3, 5):
        first = -Fraction(n - 1, n)
        assert zeros_and_poles_in_strip(circular_Z(n), first, 3) == [(first, 1)]


def test_gaussian_det_pins():
    gp = gaussian_det_Z(1)
    z0 = eval_gamma_product(gp, {"s": 0})
    z1 = eval_gamma_product(gp, {"s": 1})
    assert z0.value.real == pytest.approx(math.pi**4, rel=1e-13)
    assert math.exp(z1.log_modulus - z0.log_modulus) == pytest.approx(2.0, rel=1e-12)
    # functional relation Z(s+1) = b(s) Z(s) at s = 1/2
    zh = eval_gamma_product(gp, {"s": HALF})
    z3h = eval_gamma_product(gp, {"s": Fraction(3, 2)})
    assert math.exp(z3h.log_modulus - zh.log_modulus) == pytest.approx(15.0 / 4.0, rel=1e-12)
    assert bernstein_product(1, Fraction(1, 2)) == Fraction(15, 4)
    assert bernstein_product(1, 0.5) == pytest.approx(3.75)
    assert bernstein_product(2, 0) == 6  # Z(1)/Z(0) = (n+1)! for 3x3


def test_gaussian_json_round_trip():
    gp = selberg_gamma_product(3)
    assert gp_from_json(gp_to_json(gp)) == gp


# ---------------------------------------------------------------------------
# tube analyses

def test_zero_free_canonical_tube():
    dom = selberg_tube("canonical")
    for n in range(2, 9):
        report = zero_free_in_tube(selberg_gamma_product(n), dom)
        assert report.zero_free, f"unexpected zero for N={n}: {report.hyperplane}"


def test_widened_tube_yields_validated_witness():
    # Relaxing just Re w1 < 2 lets several zero families through: denominator
    # families of the *other* weights (w_i = sum of the rest - 2 becomes
    # feasible once w1 may exceed 1) and the numerator family on the
    # hyperplane sum w = 2 + 2(N-1)/N.  Any validated witness will do.
    dom = selberg_tube("widened")
    for n in (2, 3, 5):
        report = zero_free_in_tube(selberg_gamma_product(n), dom)
        assert not report.zero_free
        w = report.witness
        assert dom.contains(w)
        assert eval_gamma_product(selberg_gamma_product(n), w).kind == "zero"
    # pin the numerator family explicitly at N=3: sum w = 10/3
    pin = {"w1": Fraction(8, 5), "w2": Fraction(9, 10), "w3": Fraction(5, 6)}
    assert eval_gamma_product(selberg_gamma_product(3), pin).kind == "zero"


def test_display_tube_is_not_zero_free():
    # With only the sum constrained below, a weight may reach 0 or go
    # negative and the weight-factor family w_i + (j/2)d' = 0 enters.
    dom = selberg_tube("display")
    report = zero_free_in_tube(selberg_gamma_product(2), dom)
    assert not report.zero_free
    assert dom.contains(report.witness)
    assert min(report.witness.values()) <= 0
    probe = {"w1": Fraction(-1, 5), "w2": Fraction(9, 10), "w3": Fraction(9, 10)}
    assert eval_gamma_product(selberg_gamma_product(2), probe).kind == "zero"
    bare = {"w1": 0, "w2": Fraction(9, 10), "w3": Fraction(4, 5)}
    assert eval_gamma_product(selberg_gamma_product(2), bare).kind == "zero"


def test_reciprocal_gamma_half_plane():
    gp = GammaProduct(0.0, (GammaFactor(AffineArg.make({"x": 1}, 0), -1),))
    dom = TubeDomain.from_bounds({"x": (Fraction(1, 2), None)})
    assert zero_free_in_tube(gp, dom).zero_free
    shifted = TubeDomain.from_bounds({"x": (Fraction(-1, 2), None)})
    report = zero_free_in_tube(gp, shifted)
    assert not report.zero_free and report.witness == {"x": 0}


def test_tube_error_cases():
    gp = GammaProduct(0.0, (GammaFactor(AffineArg.make({"x": 1}, 0), -1),))
    with pytest.raises(ValidationError):  # unbounded along the family direction
        zero_free_in_tube(gp, TubeDomain.from_bounds({"x": (None, Fraction(1, 2))}))
    with pytest.raises(ValidationError):  # empty tube
        zero_free_in_tube(gp, TubeDomain.from_bounds({"x": (2, 1)}))
    bad = GammaProduct(
        0.0,
        (
            GammaFactor(AffineArg.make({}, -3), -1),
            GammaFactor(AffineArg.make({"x": 1}, 0), 1),
        ),
    )
    with pytest.raises(ValidationError):  # all-zero slope zero family
        zero_free_in_tube(bad, TubeDomain.from_bounds({"x": (0, 1)}))
    with pytest.raises(ValidationError):  # constraint on a parameter the gp lacks
        zero_free_in_tube(gp, TubeDomain.from_bounds({"x": (0, 1), "y": (0, 1)}))


def test_deformation_segment_zero_free():
    # restrict the N=4 product to a segment from light to heavy weights that
    # stays in the canonical tube, then thicken the parameter interval
    gp = selberg_gamma_product(4)
    line = {
        "w1": (Fraction(2, 5), Fraction(3, 10)),
        "w2": (Fraction(3, 10), Fraction(3, 10)),
        "w3": (Fraction(1, 5), Fraction(3, 10)),
    }
    from kezeta.gammaprod import restrict_to_line

    restricted = restrict_to_line(gp, line)
    dom = TubeDomain.from_bounds({"t": (Fraction(-1, 10), Fraction(11, 10))})
    assert zero_free_in_tube(restricted, dom).zero_free


# ---------------------------------------------------------------------------
# integral finiteness vs thresholds

def test_selberg_integral_finite_examples():
    assert selberg_integral_finite((HALF, HALF, HALF), 3) is True
    assert selberg_integral_finite((HALF, HALF, HALF), 2) is True
    assert selberg_integral_finite((Fraction(2, 5),) * 3, 3) is True
    # weight-condition equality: exactly on the marked-point pileup wall
    assert selberg_integral_finite((Fraction(3, 5), Fraction(3, 10), Fraction(3, 10)), 3) is False
    # exactly on the free-collision wall N d' = 2 (weight condition holds)
    assert selberg_integral_finite((Fraction(2, 5), Fraction(3, 10), Fraction(3, 10)), 2) is False
    # and slightly inside it
    assert selberg_integral_finite((Fraction(2, 5), Fraction(2, 5), Fraction(1, 4)), 2) is True
    assert selberg_integral_finite((Fraction(9, 10), Fraction(1, 10), Fraction(1, 10)), 5) is False
    with pytest.raises(ValidationError):
        selberg_integral_finite((Fraction(3, 2), HALF, HALF), 3)
    with pytest.raises(ValidationError):
        selberg_integral_finite((Fraction(9, 10), Fraction(9, 10), Fraction(9, 10)), 3)


rational_weight = st.fractions(min_value=Fraction(1, 20), max_value=Fraction(19, 20), max_denominator=40)


@settings(max_examples=60, deadline=None)
@given(rational_weight, rational_weight, rational_weight, st.integers(min_value=2, max_value=6))
def test_wall_reading_matches_convergence_conditions(w1, w2, w3, n):
    # the pole-wall cell must reproduce the power-counting conditions: the
    # strict weight condition (marked-point pileups) plus N d' < 2 (free
    # collisions); note gamma_threshold > 1 is strictly stronger than this
    assume(w1 + w2 + w3 < 2)
    finite = selberg_integral_finite((w1, w2, w3), n)
    ws = (w1, w2, w3)
    wc = all(2 * w < w1 + w2 + w3 for w in ws)
    collision_ok = n * (2 - (w1 + w2 + w3)) < 2 * (n - 1)
    assert finite == (wc and collision_ok)
