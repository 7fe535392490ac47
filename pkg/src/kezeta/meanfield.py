"""Axially symmetric field oracles on the round sphere.

Everything here lives on a uniform latitude grid t in [-1, 1] (t = height
coordinate; the round area measure sigma pushes forward to dt/2).  Densities
are carried with respect to dt, so "normalized" means trapezoid integral 1
and the uniform measure is the constant 1/2.

The reduced Laplacian on axial functions is

    L[phi](t) = d/dt [ (1 - t^2) dphi/dt ],

with Legendre polynomials as eigenfunctions, L[P_l] = -l(l+1) P_l.  A
potential phi deposits density

    mu = 1/2 + c * L[phi],      c = 1 / (2 * d_L),

where d_L is the anti-log-canonical degree of the curve (c = C_LAP = 1/4 for
the trivial curve, d_L = 2).  The constant is pinned by the Green-function
calibration: solving the Poisson equation for a narrow bump at t0 must
reproduce the axial average of the pair potential -2*d_L*log(chordal),
which has the closed form (verified against angular quadrature to 7e-14)

    K(t, s) = avg_angle[ -log ||x - y|| ] = -(1/2) log(1 - t*s + |t - s|).

The mean-field equation solved here is the axial Gibbs fixed point

    1/2 + c L[phi] = exp(beta*phi) * rho_ref / Z(phi),

discretized in flux (finite-volume) form so that the discrete L has exact
zero column sums against the trapezoid weights.  Newton's method on the
bordered system (phi, log Z) keeps the linear algebra tridiagonal.

Free energy of a density mu at inverse temperature beta:

    F[mu] = beta * E[mu] + Ent(mu | ref),
    E[mu] = d_L * Int K(t,s) mu(t) mu(s) dt ds  -  d_L*(1/2 - log 2),

the subtraction making E[uniform] = 0 (the double integral of K against
uniform^2 is (1/2 - log 2)/... well, it equals (1/2 - log 2)/2 * 2 = the
mean pair energy of the uniform ensemble).  Ent is relative entropy against
the weighted reference measure of the curve; +inf when mu is not a
nonnegative density.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConvergenceError,
    GridTooCoarseError,
    ValidationError,
)
from .stability import INFINITY, LogFanoCurve

# Laplacian-to-density constant for the trivial curve (d_L = 2); the general
# coupling is 1/(2 d_L).  Do not tune: the Green calibration test pins it.
C_LAP = 0.25

# uniform-ensemble mean of -log||x - y|| (both points uniform on the sphere)
UNIFORM_PAIR_ENERGY = 0.5 - math.log(2.0)

_FIELD_KINDS = ("Potential", "Density", "DensityIncrement")
_MIN_GRID_CELLS = 200
_DENSITY_TOL = 1e-10


@dataclass(frozen=True)
class AxialField:
    """Axial function sampled on a uniform grid over [-1, 1].

    kind is one of "Potential", "Density", "DensityIncrement".  Density
    fields must be nonnegative and integrate to 1 (trapezoid, 1e-10);
    increments must integrate to ~0 only in exact arithmetic, so no check.
    """

    grid: np.ndarray
    values: np.ndarray
    kind: str = "Potential"

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        if self.kind not in _FIELD_KINDS:
            raise ValidationError(
                f"unknown field kind {self.kind!r}; expected one of {_FIELD_KINDS}"
            )
        if grid.ndim != 1 or grid.size < 2:
            raise ValidationError("grid must be a 1-d array with at least 2 nodes")
        if values.shape != grid.shape:
            raise ValidationError("values and grid shapes differ")
        if abs(grid[0] + 1.0) > 1e-12 or abs(grid[-1] - 1.0) > 1e-12:
            raise ValidationError("grid must span [-1, 1]")
        h = np.diff(grid)
        if np.any(h <= 0) or abs(h.max() - h.min()) > 1e-12:
            raise ValidationError("grid must be uniform and increasing")
        if not np.all(np.isfinite(values)):
            raise ValidationError("field values must be finite")
        if self.kind == "Density":
            if np.any(values < -1e-12):
                raise ValidationError("Density values must be nonnegative")
            total = np.trapezoid(values, grid)
            if abs(total - 1.0) > _DENSITY_TOL:
                raise ValidationError(
                    f"Density must integrate to 1 (trapezoid); got {total!r}"
                )

    @property
    def m(self) -> int:
        """Number of grid cells (nodes minus one)."""
        return self.grid.size - 1

    @property
    def spacing(self) -> float:
        return float(self.grid[1] - self.grid[0])

    def integral(self) -> float:
        return float(np.trapezoid(self.values, self.grid))


def uniform_grid(m: int) -> np.ndarray:
    return np.linspace(-1.0, 1.0, m + 1)


def uniform_density(m: int = 800) -> AxialField:
    g = uniform_grid(m)
    return AxialField(g, np.full(g.size, 0.5), "Density")


def density_from_function(fn, m: int = 800) -> AxialField:
    """Normalize fn >= 0 on the grid into a Density field."""
    g = uniform_grid(m)
    vals = np.asarray(fn(g), dtype=float)
    if np.any(vals < 0):
        raise ValidationError("density function must be nonnegative")
    total = np.trapezoid(vals, g)
    if total <= 0:
        raise ValidationError("density function integrates to zero")
    return AxialField(g, vals / total, "Density")


def pair_kernel(t, s):
    """Axial average of -log||x - y||, x at latitude t, y at latitude s.

    Closed form -(1/2) log(1 - t s + |t - s|).  Logarithmic singularities
    only at the corners t = s = +-1.
    """
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    arg = 1.0 - t * s + np.abs(t - s)
    with np.errstate(divide="ignore"):
        return -0.5 * np.log(arg)


# ---------------------------------------------------------------------------
# Legendre spectral side
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HarmonicCoeffs:
    """Legendre coefficients a_l, f(t) = sum a_l P_l(t).

    Solutions of the Poisson problem are gauged so a_0 = 0 (sigma-mean zero,
    which on [-1,1] with dt is the same as mean zero).
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        object.__setattr__(self, "coeffs", c)
        if c.ndim != 1 or c.size == 0:
            raise ValidationError("coefficient array must be 1-d and nonempty")
        if not np.all(np.isfinite(c)):
            raise ValidationError("coefficients must be finite")

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def evaluate(self, t) -> np.ndarray:
        return np.polynomial.legendre.legval(np.asarray(t, dtype=float), self.coeffs)

    def tail_mass(self, k: int = 5) -> float:
        """Max |a_l| over the last k coefficients — truncation diagnostic."""
        k = min(k, self.coeffs.size)
        return float(np.max(np.abs(self.coeffs[-k:])))


def legendre_coeffs(field: AxialField, degree: int = 120) -> HarmonicCoeffs:
    """Project an axial field onto P_0..P_degree.

    Gauss-Legendre quadrature of the projection integrals; the field is
    resampled onto the quadrature nodes with a cubic spline (the grids we
    use are fine enough that the spline error is below the spectral tail).
    """
    from scipy.interpolate import CubicSpline

    nodes, wts = np.polynomial.legendre.leggauss(max(2 * degree + 2, 64))
    f = CubicSpline(field.grid, field.values)(nodes)
    coeffs = np.empty(degree + 1)
    # recurrence for P_l at the nodes, accumulate sum w f P_l * (2l+1)/2
    p_prev = np.ones_like(nodes)
    p_cur = nodes.copy()
    coeffs[0] = 0.5 * np.sum(wts * f)
    if degree >= 1:
        coeffs[1] = 1.5 * np.sum(wts * f * p_cur)
    for ell in range(2, degree + 1):
        p_next = ((2 * ell - 1) * nodes * p_cur - (ell - 1) * p_prev) / ell
        coeffs[ell] = (2 * ell + 1) / 2.0 * np.sum(wts * f * p_next)
        p_prev, p_cur = p_cur, p_next
    return HarmonicCoeffs(coeffs)


def solve_poisson(
    target: AxialField,
    degree: int = 120,
    coupling: float = C_LAP,
    return_coeffs: bool = False,
):
    """Solve 1/2 + coupling * L[phi] = target for phi, sigma-mean-zero gauge.

    Spectral: if target - 1/2 = sum_{l>=1} b_l P_l then
    phi = sum_{l>=1} -b_l / (coupling * l(l+1)) P_l and a_0 = 0.
    Warns when the Legendre tail of the target has not decayed below 1e-8
    (the answer is then truncation-limited; raise the degree).
    """
    if target.kind != "Density":
        raise ValidationError("solve_poisson expects a Density field")
    b = legendre_coeffs(target, degree)
    ell = np.arange(degree + 1, dtype=float)
    a = np.zeros(degree + 1)
    a[1:] = -b.coeffs[1:] / (coupling * ell[1:] * (ell[1:] + 1.0))
    if b.tail_mass() > 1e-8:
        warnings.warn(
            f"Legendre tail of the source is {b.tail_mass():.2e} at degree "
            f"{degree}: the Poisson solve is truncation-limited",
            stacklevel=2,
        )
    coeffs = HarmonicCoeffs(a)
    phi = AxialField(target.grid, coeffs.evaluate(target.grid), "Potential")
    if return_coeffs:
        return phi, coeffs
    return phi


def poisson_residual(
    coeffs: HarmonicCoeffs, target: AxialField, coupling: float = C_LAP
) -> float:
    """Sup-norm residual of 1/2 + coupling * L[phi] = target for a spectral phi.

    The Laplacian is applied exactly on the Legendre ansatz
    (L[P_l] = -l(l+1) P_l), so this measures only the truncation error of
    the source, not finite-difference error.
    """
    ell = np.arange(coeffs.coeffs.size, dtype=float)
    lap_coeffs = -ell * (ell + 1.0) * coeffs.coeffs
    lap_vals = np.polynomial.legendre.legval(target.grid, lap_coeffs)
    return float(np.max(np.abs(0.5 + coupling * lap_vals - target.values)))


# ---------------------------------------------------------------------------
# finite-volume reduced Laplacian (flux form)
# ---------------------------------------------------------------------------


def reduced_laplacian(phi: AxialField, coupling: float = C_LAP) -> AxialField:
    """coupling * d/dt[(1 - t^2) phi'] in conservative finite-volume form.

    Cell widths are h for interior nodes and h/2 for the two boundary
    nodes, so the weighted column sums (trapezoid weights) vanish exactly:
    the discrete operator conserves mass bit-for-bit.  Needs at least
    200 cells — below that the boundary cells poison the interior.
    """
    if phi.kind != "Potential":
        raise ValidationError("reduced_laplacian expects a Potential field")
    if phi.m < _MIN_GRID_CELLS:
        raise GridTooCoarseError(
            f"grid has {phi.m} cells; need at least {_MIN_GRID_CELLS}"
        )
    g, v, h = phi.grid, phi.values, phi.spacing
    mid = 0.5 * (g[:-1] + g[1:])
    a = 1.0 - mid * mid            # conductivity at cell interfaces
    flux = a * np.diff(v) / h      # (1-t^2) phi' at midpoints
    out = np.empty_like(v)
    out[1:-1] = (flux[1:] - flux[:-1]) / h
    out[0] = flux[0] / (0.5 * h)   # boundary cells have width h/2
    out[-1] = -flux[-1] / (0.5 * h)
    return AxialField(g, coupling * out, "DensityIncrement")


def _laplacian_bands(grid: np.ndarray, coupling: float):
    """Tridiagonal bands (lower, diag, upper) of the flux-form operator."""
    h = grid[1] - grid[0]
    mid = 0.5 * (grid[:-1] + grid[1:])
    a = coupling * (1.0 - mid * mid) / (h * h)
    n = grid.size
    lower = np.zeros(n)
    diag = np.zeros(n)
    upper = np.zeros(n)
    # interior rows
    diag[1:-1] = -(a[:-1] + a[1:])
    lower[1:-1] = a[:-1]
    upper[1:-1] = a[1:]
    # boundary rows (width h/2 cells)
    diag[0] = -2.0 * a[0]
    upper[0] = 2.0 * a[0]
    diag[-1] = -2.0 * a[-1]
    lower[-1] = 2.0 * a[-1]
    return lower, diag, upper


def _thomas(lower, diag, upper, rhs):
    """Tridiagonal solve; bands as from _laplacian_bands (lower[0], upper[-1] unused)."""
    n = diag.size
    c = np.empty(n)
    d = np.empty(n)
    piv = diag[0]
    if abs(piv) < 1e-300:
        raise np.linalg.LinAlgError("zero pivot in tridiagonal solve")
    c[0] = upper[0] / piv
    d[0] = rhs[0] / piv
    for k in range(1, n):
        piv = diag[k] - lower[k] * c[k - 1]
        if abs(piv) < 1e-300:
            raise np.linalg.LinAlgError("zero pivot in tridiagonal solve")
        c[k] = upper[k] / piv
        d[k] = (rhs[k] - lower[k] * d[k - 1]) / piv
    x = np.empty(n)
    x[-1] = d[-1]
    for k in range(n - 2, -1, -1):
        x[k] = d[k] - c[k] * x[k + 1]
    return x


# ---------------------------------------------------------------------------
# reference measures
# ---------------------------------------------------------------------------


def axial_pole_weights(curve: LogFanoCurve) -> tuple:
    """(w_south, w_north) for a curve whose marked points all sit at poles.

    The stereographic chart sends 0 to the south pole and infinity to the
    north pole; anything else is off-axis and rejected here.
    """
    w_south = 0.0
    w_north = 0.0
    for p, w in zip(curve.marked_points, curve.weights):
        if p is INFINITY:
            w_north += w
        elif p == 0:
            w_south += w
        else:
            raise ValidationError(
                f"marked point {p!r} is not on the symmetry axis; the axial "
                "oracles need all marked points at the poles"
            )
    return w_south, w_north


def _log_reference(curve: LogFanoCurve, grid: np.ndarray) -> np.ndarray:
    """log of the normalized reference density rho_ref wrt dt.

    rho_ref(t) is proportional to (2-2t)^{-w_n} (2+2t)^{-w_s} (chordal
    distances to the poles, squared, to the weight power).  A singular
    endpoint node carries the exact cell average of the value over its
    half-cell: avg of u^{-w} over u in (0, h] is h^{-w}/(1-w).  With the
    trapezoid weights (h/2 at the ends) this makes the discrete mass of the
    boundary cell exactly the continuum one, so trapezoid integrals of the
    reference — and of Gibbs densities built on it — are second-order
    accurate despite the singularity.  Normalization is the closed-form
    Beta integral.
    """
    w_s, w_n = axial_pole_weights(curve)
    if w_s >= 1.0 or w_n >= 1.0:
        raise ValidationError(
            f"pole weights ({w_s}, {w_n}) must be < 1 for an integrable reference"
        )
    h = grid[1] - grid[0]
    log_rho = np.zeros_like(grid)
    if w_n != 0.0:
        north = 2.0 - 2.0 * grid
        log_rho[:-1] -= w_n * np.log(north[:-1])
        log_rho[-1] -= w_n * math.log(h) + math.log1p(-w_n)
    if w_s != 0.0:
        south = 2.0 + 2.0 * grid
        log_rho[1:] -= w_s * np.log(south[1:])
        log_rho[0] -= w_s * math.log(h) + math.log1p(-w_s)
    # normalization: Int (2-2t)^{-wn} (2+2t)^{-ws} dt   (sub t = 2u - 1)
    #   = 2^{1-2wn-2ws} * Gamma(1-wn) Gamma(1-ws) / Gamma(2-wn-ws)
    log_norm = (
        (1.0 - 2.0 * w_n - 2.0 * w_s) * math.log(2.0)
        + math.lgamma(1.0 - w_n)
        + math.lgamma(1.0 - w_s)
        - math.lgamma(2.0 - w_n - w_s)
    )
    return log_rho - log_norm


# ---------------------------------------------------------------------------
# mean-field Newton solver
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MeanFieldSolution:
    potential: AxialField
    density: AxialField
    residual: float
    iterations: int
    beta: float
    log_partition: float = 0.0


def _trapezoid_weights(grid: np.ndarray) -> np.ndarray:
    h = grid[1] - grid[0]
    w = np.full(grid.size, h)
    w[0] = w[-1] = 0.5 * h
    return w


def solve_mean_field(
    curve: LogFanoCurve,
    beta: float,
    m: int = 800,
    reference: AxialField | None = None,
    max_newton: int = 50,
    tol: float = 1e-8,
) -> MeanFieldSolution:
    """Newton solve of the axial mean-field equation

        1/2 + (1/(2 d_L)) L[phi] = exp(beta phi) rho_ref / Z,

    gauge Int phi dt = 0.  Valid for beta > -1 + 1e-3 (uniqueness regime)
    and pole weights < 1.  `reference` overrides the curve's weighted
    reference density (used for smooth-source cross-checks against the
    Poisson solver).  Raises ConvergenceError if the sup-norm residual is
    still above tol after max_newton steps.
    """
    if beta <= -1.0 + 1e-3:
        raise ValidationError(
            f"beta = {beta} outside the mean-field uniqueness regime (> -0.999)"
        )
    if m < _MIN_GRID_CELLS:
        raise GridTooCoarseError(f"m = {m} cells; need at least {_MIN_GRID_CELLS}")
    grid = uniform_grid(m)
    if reference is not None:
        if reference.kind != "Density":
            raise ValidationError("reference must be a Density field")
        if reference.grid.size != grid.size or abs(reference.spacing - (grid[1] - grid[0])) > 1e-12:
            raise ValidationError("reference grid must match the solver grid (same m)")
        if np.any(reference.values <= 0.0):
            raise ValidationError("reference density must be strictly positive")
        log_ref = np.log(reference.values)
        axial_pole_weights(curve)  # still validates marked-point placement
    else:
        log_ref = _log_reference(curve, grid)
    coupling = 1.0 / (2.0 * curve.d_L)
    wq = _trapezoid_weights(grid)
    lower, diag, upper = _laplacian_bands(grid, coupling)

    def lap(phi):
        out = np.empty_like(phi)
        out[0] = diag[0] * phi[0] + upper[0] * phi[1]
        out[1:-1] = lower[1:-1] * phi[:-2] + diag[1:-1] * phi[1:-1] + upper[1:-1] * phi[2:]
        out[-1] = lower[-1] * phi[-2] + diag[-1] * phi[-1]
        return out

    phi = np.zeros(grid.size)
    loz = math.log(float(np.sum(wq * np.exp(log_ref))))  # log Z at phi = 0
    residual = np.inf
    for iteration in range(1, max_newton + 1):
        rho = np.exp(beta * phi + log_ref - loz)
        g_res = 0.5 + lap(phi) - rho
        gauge_res = float(np.sum(wq * phi))
        residual = float(np.max(np.abs(g_res)))
        if residual < tol and abs(gauge_res) < tol:
            break
        # bordered Newton system in (phi, log Z):
        #   [T  rho] [dphi] = [-G]        T = Lap - beta diag(rho)
        #   [wq   0] [dloz]   [-gauge]
        t_diag = diag - beta * rho
        try:
            a_vec = _thomas(lower, t_diag, upper, -g_res)
            b_vec = _thomas(lower, t_diag, upper, -rho)
        except np.linalg.LinAlgError:
            # nudge the diagonal and retry once; only relevant deep in beta<0
            t_diag = t_diag - 1e-9
            a_vec = _thomas(lower, t_diag, upper, -g_res)
            b_vec = _thomas(lower, t_diag, upper, -rho)
        denom = float(np.sum(wq * b_vec))
        if abs(denom) < 1e-300 or not np.isfinite(denom):
            raise ConvergenceError("bordered Newton system is singular")
        dloz = (-gauge_res - float(np.sum(wq * a_vec))) / denom
        dphi = a_vec + dloz * b_vec
        # damped update: halve until the residual does not blow up
        step = 1.0
        base = residual + abs(gauge_res)
        for _ in range(25):
            cand_phi = phi + step * dphi
            cand_loz = loz + step * dloz
            cand_rho = np.exp(beta * cand_phi + log_ref - cand_loz)
            cand_res = 0.5 + lap(cand_phi) - cand_rho
            cand = float(np.max(np.abs(cand_res))) + abs(float(np.sum(wq * cand_phi)))
            if np.isfinite(cand) and cand < base:
                break
            step *= 0.5
        phi = phi + step * dphi
        loz = loz + step * dloz
    else:
        raise ConvergenceError(
            f"mean-field Newton stalled at residual {residual:.3e} after "
            f"{max_newton} steps (beta = {beta})"
        )
    rho = np.exp(beta * phi + log_ref - loz)
    rho = rho / float(np.trapezoid(rho, grid))  # exact renormalization (< 1e-12 shift)
    return MeanFieldSolution(
        potential=AxialField(grid, phi, "Potential"),
        density=AxialField(grid, rho, "Density"),
        residual=residual,
        iterations=iteration,
        beta=beta,
        log_partition=loz,
    )


# ---------------------------------------------------------------------------
# energy / entropy / free energy of a density
# ---------------------------------------------------------------------------


def _kernel_matrix(grid: np.ndarray) -> np.ndarray:
    k = pair_kernel(grid[:, None], grid[None, :])
    # Corners t = s = +-1 are genuine log singularities: along the row t = 1
    # the kernel is exactly -(1/2) log(2 - 2s), so the corner node carries the
    # exact average of that log over its half-cell (u = 2-2s over (0, h]),
    # which is -(1/2)(log h - 1); likewise at t = s = -1.  With the h/2
    # trapezoid end weight the singular cell is then integrated exactly.
    h = grid[1] - grid[0]
    corner = -0.5 * (math.log(h) - 1.0)
    k[0, 0] = corner
    k[-1, -1] = corner
    return k


def interaction_energy(mu: AxialField, curve: LogFanoCurve) -> float:
    """d_L * Int K mu mu - d_L*(1/2 - log 2); zero for the uniform density.

    Tensor-trapezoid on the kernel matrix plus the closed-form correction
    for the |t-s| kink along the diagonal: on a cell [t_k, t_k + h]^2 the
    trapezoid overestimates Int |t-s| by h^3/6, and locally
    K = smooth - |t-s| / (2 (1 - t s)) + O((t-s)^2), so each diagonal cell
    gets + h^3 mu_k^2 / (12 (1 - u_k^2)), u_k the cell midpoint.
    """
    if mu.kind != "Density":
        raise ValidationError("interaction_energy expects a Density field")
    g = mu.grid
    wq = _trapezoid_weights(g)
    kmat = _kernel_matrix(g)
    wf = wq * mu.values
    double = float(wf @ kmat @ wf)
    # diagonal kink correction (skip the two corner cells where 1-u^2 ~ 0
    # and the log model breaks; their weight is O(h^2 log h))
    h = mu.spacing
    u = 0.5 * (g[:-1] + g[1:])
    fmid = 0.5 * (mu.values[:-1] + mu.values[1:])
    inner = slice(1, -1)
    corr = np.sum(h**3 * fmid[inner] ** 2 / (12.0 * (1.0 - u[inner] ** 2)))
    return curve.d_L * (double + float(corr) - UNIFORM_PAIR_ENERGY)


def relative_entropy(
    mu: AxialField, curve: LogFanoCurve, reference: AxialField | None = None
) -> float:
    """Ent(mu | reference), +inf if mu is negative anywhere.

    Default reference is the curve's weighted measure.  Computed as
    Int mu log(mu / rho_ref) dt with the same endpoint cell-averaged
    rho_ref as the solver, so the singular parts cancel exactly for
    densities with the reference's pole behavior.
    """
    if mu.kind != "Density":
        raise ValidationError("relative_entropy expects a Density field")
    vals = mu.values
    if np.any(vals < 0.0) or not np.all(np.isfinite(vals)):
        return math.inf
    if reference is not None:
        if reference.kind != "Density" or reference.grid.size != mu.grid.size:
            raise ValidationError("reference must be a Density on the same grid")
        if np.any(reference.values < 0.0):
            raise ValidationError("reference density must be nonnegative")
        with np.errstate(divide="ignore"):
            log_ref = np.log(reference.values)  # -inf where the reference dies
    else:
        log_ref = _log_reference(curve, mu.grid)
    with np.errstate(divide="ignore", invalid="ignore"):
        integrand = np.where(vals > 0.0, vals * (np.log(vals) - log_ref), 0.0)
    if not np.all(np.isfinite(integrand)):
        # mass where the reference vanishes: not absolutely continuous
        return math.inf
    return float(np.trapezoid(integrand, mu.grid))


def free_energy_functional(
    mu: AxialField,
    curve: LogFanoCurve,
    beta: float,
    reference: AxialField | None = None,
) -> float:
    """beta * E[mu] + Ent(mu | ref); the mean-field solution minimizes this.

    `reference` overrides the curve's weighted reference measure in the
    entropy term, matching the same override in solve_mean_field.
    """
    ent = relative_entropy(mu, curve, reference)
    if math.isinf(ent):
        return math.inf
    return beta * interaction_energy(mu, curve) + ent


# ---------------------------------------------------------------------------
# Calabi-Yau potential approximant (trivial curve)
# ---------------------------------------------------------------------------


def phi_n_approximant(
    target: AxialField,
    n_points: int,
    mode: str = "quadrature",
    samples: int = 20000,
    seed: int = 0,
) -> AxialField:
    """Potential whose Gibbs ensemble at large N concentrates on `target`.

    For the trivial curve the N-point construction yields, in the mean-field
    limit, phi(t) = -2 d_L Int K(t, s) f(s) ds + const (d_L = 2), gauged so
    Int phi f dt = 0.  The quadrature mode integrates the closed-form kernel
    directly and is exactly independent of n_points (kept in the signature
    because the estimator it idealizes is the N-point empirical average; the
    invariance is asserted by the harness).  The montecarlo mode replaces the
    integral with an empirical mean over latitude draws from f.
    """
    if target.kind != "Density":
        raise ValidationError("phi_n_approximant expects a Density target")
    if n_points < 2:
        raise ValidationError("need at least 2 points")
    g = target.grid
    d_l = 2.0  # trivial curve
    if mode == "quadrature":
        wq = _trapezoid_weights(g)
        kmat = _kernel_matrix(g)
        phi = -2.0 * d_l * (kmat @ (wq * target.values))
    elif mode == "montecarlo":
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        # inverse-CDF sampling of the latitude from the target density
        cdf = np.concatenate(
            [[0.0], np.cumsum(0.5 * (target.values[1:] + target.values[:-1])) * target.spacing]
        )
        cdf = cdf / cdf[-1]
        draws = np.interp(rng.random(samples), cdf, g)
        phi = np.zeros(g.size)
        chunk = 4000
        for start in range(0, samples, chunk):
            block = draws[start : start + chunk]
            phi += np.sum(pair_kernel(g[:, None], block[None, :]), axis=1)
        phi *= -2.0 * d_l / samples
    else:
        raise ValidationError(f"unknown mode {mode!r}; use 'quadrature' or 'montecarlo'")
    # gauge: mean zero against the target measure
    wq = _trapezoid_weights(g)
    phi = phi - float(np.sum(wq * target.values * phi))
    return AxialField(g, phi, "Potential")


def bin_probabilities(mu: AxialField, edges: np.ndarray) -> np.ndarray:
    """Integral of mu over [edges[i], edges[i+1]) — for histogram comparison."""
    if mu.kind != "Density":
        raise ValidationError("bin_probabilities expects a Density field")
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ValidationError("edges must be increasing, at least two of them")
    g, v = mu.grid, mu.values
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * np.diff(g))])
    at_edges = np.interp(np.clip(edges, g[0], g[-1]), g, cum)
    return np.diff(at_edges)


if __name__ == "__main__":
    curve = LogFanoCurve.standard(())
    sol = solve_mean_field(curve, beta=1.0)
    print("trivial curve, beta=1:",
          "max|phi| =", np.max(np.abs(sol.potential.values)),
          "residual =", sol.residual, "iters =", sol.iterations)

    weighted = LogFanoCurve((INFINITY,), (0.5,))
    sol_w = solve_mean_field(weighted, beta=1.0)
    mu = sol_w.density
    print("w=1/2 at north pole, beta=1: mu(-1) =", mu.values[0],
          "mu(1) =", mu.values[-1],
          "F =", free_energy_functional(mu, weighted, 1.0))
