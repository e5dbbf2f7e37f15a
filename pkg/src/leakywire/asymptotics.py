"""Weak-bending and wiggling asymptotics of the ground-state gap.

Weak bending.  For the scaled family with profile beta*theta the gap below
the essential-spectrum edge -alpha^2/4 opens like

    gap(beta) = ( II )^2 * beta^4 + o(beta^4),
    II = integral over the plane of A(s, s'),

with the positive kernel

    A(s, s') = (alpha^4 / 32 pi) * K0'(alpha |s - s'| / 2)
               * [ (1/(s - s')) (int phi)^2 - int phi^2 ],

where the bracket integrates the unscaled bending phi over (s', s).  The
bracket equals minus the interval length times the variance of the tangent
angle over the interval (geometry.bending_bracket), so it is symmetric,
nonpositive and O(|s - s'|) near the diagonal, and A >= 0 with exponential
decay e^{-alpha(|s| + |s'|)/2} away from the deformation.

For the single corner of unit angle the double integral reduces to
alpha/(4 pi) times the product of two elementary integrals,

    int_0^infty t^2 K1(t) dt = 2,     int_0^{pi/2} sin(2 psi) / (cos psi + sin psi)^4 dpsi = 1/3,

giving II = alpha/(6 pi) and gap coefficient alpha^2/(36 pi^2); the quadrature
route must reproduce that.

Wiggling.  With the deformation confined to s <= 0 and the straight tail on
s >= 0 rotated by a small angle phi about the origin, each eigenvalue moves
linearly,

    lambda_k(phi) = lambda_k - alpha * (D1(nu_k) f_k, f_k) * phi + o(phi),

where nu_k = sqrt(-lambda_k), f_k is the kernel eigenfunction, and D1 acts
only between the two sides of the pivot:

    D1(s, s') = -(alpha kappa / 2 pi) K0'(kappa rho(s, s')) s' ybar(s) / rho(s, s')

for s <= 0 < s', with the arguments swapped for s' <= 0 < s and zero when
both lie on the same side.  ybar is the height of the curve over the tail
axis (geometry.tail_frame_height).  For a cluster of near-degenerate levels
the quadratic form becomes an m x m matrix whose eigenvalues are the split
slopes.
"""

import heapq
import math
from dataclasses import dataclass

import numpy as np
import scipy.integrate
import scipy.linalg

from . import geometry
from .bs_core import pairwise_distances
from .spectrum import NumericalError
from .specfun import bessel_k1

__all__ = [
    "AsymptoticCoefficient",
    "ReducedIntegral",
    "a_coefficient",
    "a_kernel",
    "broken_line_reduced_integral",
    "predicted_eigenvalue",
    "predicted_gap",
    "wiggle_kernel",
    "wiggle_slope",
]


def a_kernel(curve, alpha, s, s2):
    """Weak-bending kernel A(s, s'); vectorized, symmetric, >= 0, 0 on the diagonal."""
    if alpha <= 0 or not math.isfinite(alpha):
        raise ValueError("alpha must be positive and finite")
    s = np.asarray(s, dtype=float)
    s2 = np.asarray(s2, dtype=float)
    d = np.abs(s - s2)
    bracket = geometry.bending_bracket(curve, s, s2)  # <= 0
    live = (d > 0.0) & (bracket < 0.0)
    z = np.where(live, 0.5 * alpha * d, 1.0)
    pref = alpha**4 / (32.0 * math.pi)
    out = np.where(live, pref * bessel_k1(z) * (-bracket), 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class AsymptoticCoefficient:
    """Double integral of the weak-bending kernel and derived quantities.

    gap_coefficient multiplies beta^4 in the predicted gap.  error_estimate
    combines the quadrature error indicator with the analytic tail bound for
    the truncated domain [lo - T, hi + T]^2.
    """

    alpha: float
    integral: float
    gap_coefficient: float
    error_estimate: float
    tail_cut: float
    panels: int


def _panel_value(f, box, gl_hi, gl_lo):
    """Tensor Gauss value on a box with an embedded lower-order estimate.

    x and y use different node counts so the singular-ish diagonal s = s'
    is never sampled exactly.
    """
    (x0, x1, y0, y1) = box
    (nx, wx), (ny, wy) = gl_hi
    (mx, vx), (my, vy) = gl_lo
    sx = 0.5 * (x1 - x0)
    sy = 0.5 * (y1 - y0)
    X = x0 + sx * (nx + 1.0)
    Y = y0 + sy * (ny + 1.0)
    F = f(X[:, None], Y[None, :])
    hi = sx * sy * float(wx @ F @ wy)
    Xl = x0 + sx * (mx + 1.0)
    Yl = y0 + sy * (my + 1.0)
    Fl = f(Xl[:, None], Yl[None, :])
    lo = sx * sy * float(vx @ Fl @ vy)
    return hi, abs(hi - lo)


def _axis_edges(lo, hi, T, alpha):
    """Initial panel edges: support breakpoints, unit-scale interior cuts,
    geometric ladders along the tails out to distance T."""
    ladder = T * np.geomspace(1.0, 1.0 / 64.0, 8)
    inner = [lo]
    if hi > lo:
        pieces = max(2, int(math.ceil((hi - lo) * alpha)))
        inner = list(np.linspace(lo, hi, pieces + 1))
    edges = np.concatenate([lo - ladder, inner, hi + ladder[::-1]])
    return np.unique(edges)


def a_coefficient(curve, alpha, rel_tol=1e-5, max_panels=20000):
    """Adaptive double integral of the weak-bending kernel.

    Panels aligned with the curve breakpoints; 16x15 / 8x7 embedded Gauss
    pairs drive refinement of the worst panel until the accumulated error
    indicator falls below rel_tol times the running integral.  Panels lying
    entirely in a same-side tail region are dropped (the kernel vanishes
    there).  The tail cut T comes from the decay bound C (r) e^{-alpha r/2},
    r = |s| + |s'|, with C estimated from kernel samples on a mid-distance
    ring; the bound at T is folded into error_estimate.
    """
    if isinstance(curve, geometry.ScaledCurve):
        raise ValueError("a_coefficient expects the unscaled CurveSpec")
    lo, hi = curve.support

    def f(S, S2):
        return a_kernel(curve, alpha, S, S2)

    # estimate the tail constant from samples at moderate ring distance
    r0 = 6.0 / alpha
    ss = np.linspace(lo - r0, hi + r0, 41)
    S, S2 = np.meshgrid(ss, ss, indexing="ij")
    vals = f(S, S2)
    r = np.abs(S - np.clip(S, lo, hi)) + np.abs(S2 - np.clip(S2, lo, hi))
    mask = r > 2.0 / alpha
    c_est = 0.0
    if mask.any():
        with np.errstate(over="ignore"):
            c_est = float(np.max(vals[mask] * np.exp(0.5 * alpha * r[mask])
                                 / np.maximum(r[mask], 1e-3)))
    rough = max(float(np.max(vals)), 1e-300)

    # tail cut: bound C (2 + alpha T) T e^{-alpha T/2} (per unit of transverse
    # integration, crude constants) below a slice of the error budget
    T = 12.0 / alpha
    if c_est > 0.0:
        budget = 0.01 * rel_tol * rough
        while T < 400.0 / alpha:
            bound = c_est * (2.0 + alpha * T) * T * math.exp(-0.5 * alpha * T)
            if bound <= budget:
                break
            T += 2.0 / alpha
    tail_bound = c_est * (2.0 + alpha * T) * T * math.exp(-0.5 * alpha * T) * (4.0 / alpha**2)

    gl_hi = (np.polynomial.legendre.leggauss(16), np.polynomial.legendre.leggauss(15))
    gl_lo = (np.polynomial.legendre.leggauss(8), np.polynomial.legendre.leggauss(7))

    edges = _axis_edges(lo, hi, T, alpha)
    heap = []
    total = 0.0
    err_total = 0.0
    count = 0

    def dead(x0, x1, y0, y1):
        # kernel vanishes when both arguments sit on one straight tail
        return (x0 >= hi and y0 >= hi) or (x1 <= lo and y1 <= lo)

    def push(box):
        nonlocal total, err_total, count
        if dead(*box):
            return
        val, err = _panel_value(f, box, gl_hi, gl_lo)
        total += val
        err_total += err
        count += 1
        heapq.heappush(heap, (-err, box, val, err))

    for i in range(len(edges) - 1):
        for j in range(len(edges) - 1):
            push((edges[i], edges[i + 1], edges[j], edges[j + 1]))

    while heap and err_total > rel_tol * max(abs(total), 1e-300):
        if count >= max_panels:
            raise NumericalError(
                f"panel budget {max_panels} exhausted at error {err_total:.2e} "
                f"(integral {total:.6e})")
        _, (x0, x1, y0, y1), val, err = heapq.heappop(heap)
        total -= val
        err_total -= err
        xm = 0.5 * (x0 + x1)
        ym = 0.5 * (y0 + y1)
        for box in ((x0, xm, y0, ym), (x0, xm, ym, y1),
                    (xm, x1, y0, ym), (xm, x1, ym, y1)):
            push(box)

    integral = float(total)
    err = float(err_total + tail_bound)
    return AsymptoticCoefficient(alpha=float(alpha), integral=integral,
                                 gap_coefficient=integral * integral,
                                 error_estimate=err, tail_cut=float(T), panels=count)


def predicted_gap(coefficient, beta):
    """Leading-order gap below the essential spectrum edge: (II)^2 beta^4."""
    return coefficient.gap_coefficient * float(beta) ** 4


def predicted_eigenvalue(coefficient, beta):
    """-alpha^2/4 - predicted gap."""
    return -0.25 * coefficient.alpha**2 - predicted_gap(coefficient, beta)


@dataclass(frozen=True)
class ReducedIntegral:
    """Factorized single-corner integral: product = radial * angular = 2/3."""

    radial: float
    angular: float
    product: float


def broken_line_reduced_integral():
    """Quadrature of the two elementary factors the single-corner coefficient
    reduces to; exact values 2 and 1/3."""
    radial, _ = scipy.integrate.quad(lambda t: t * t * bessel_k1(t), 0.0, 40.0,
                                     epsabs=1e-13, epsrel=1e-12, limit=200)
    angular, _ = scipy.integrate.quad(
        lambda p: math.sin(2.0 * p) / (math.cos(p) + math.sin(p)) ** 4,
        0.0, 0.5 * math.pi, epsabs=1e-13, epsrel=1e-12)
    return ReducedIntegral(radial=float(radial), angular=float(angular),
                           product=float(radial * angular))


def wiggle_kernel(curve, alpha, kappa, s, s2):
    """First-order wiggle kernel D1(s, s'); vectorized, symmetric.

    Nonzero only when the arguments straddle the pivot at 0; requires the
    curve in the wiggle frame (deformation confined to s <= 0).
    """
    if isinstance(curve, geometry.ScaledCurve):
        raise ValueError("wiggle_kernel expects the unscaled CurveSpec")
    if curve.support[1] > 0.0:
        raise ValueError("deformation must lie in s <= 0; use to_wiggle_frame")
    if alpha <= 0 or kappa <= 0:
        raise ValueError("alpha and kappa must be positive")
    s = np.asarray(s, dtype=float)
    s2 = np.asarray(s2, dtype=float)
    region1 = (s <= 0.0) & (s2 > 0.0)
    region2 = (s2 <= 0.0) & (s > 0.0)

    rho = geometry.distance(curve, s, s2)
    rho_safe = np.where(rho > 0.0, rho, 1.0)
    height = geometry.tail_frame_height(curve, np.where(region2, s2, s))
    outer = np.where(region2, s, s2)
    pref = alpha * kappa / (2.0 * math.pi)
    vals = pref * bessel_k1(kappa * rho_safe) * outer * height / rho_safe
    out = np.where(region1 | region2, vals, 0.0)
    return float(out) if out.ndim == 0 else out


def wiggle_slope(curve, alpha, cluster, grid):
    """First-order eigenvalue slopes d lambda / d phi for a cluster of levels.

    cluster is one SpectralResult or a list of near-degenerate ones computed
    on this same grid for the scaled curve at beta = 1.

    Differentiating alpha eta(kappa, phi) = 1 gives
        d lambda / d phi = -(f, dQ/dphi f) / ||psi||^2,
    where psi is the plane eigenfunction generated by the kernel eigenfunction
    f.  Its norm has a closed-form kernel, the squared-resolvent identity
        (f, dQ/dkappa f) = -2 kappa ||psi||^2,
    with ||psi||^2 = sum w_i w_j f_i f_j (rho_ij / 4 pi kappa) K1(kappa rho_ij)
    and diagonal limit 1 / (4 pi kappa^2).  For a cluster both quadratic forms
    become m x m matrices and the slopes solve the generalized symmetric
    eigenproblem, returned ascending; the central finite difference check in
    the acceptance suite pins the convention down.
    """
    results = [cluster] if not isinstance(cluster, (list, tuple)) else list(cluster)
    if not results:
        raise ValueError("cluster must contain at least one level")
    for r in results:
        if r.grid is not grid and (r.grid.n != grid.n or r.grid.L != grid.L):
            raise ValueError("cluster levels must be computed on the given grid")

    nu = float(np.mean([r.kappa for r in results]))
    nodes = grid.nodes
    S = nodes[:, None]
    S2 = nodes[None, :]
    region1 = (S <= 0.0) & (S2 > 0.0)
    region2 = (S2 <= 0.0) & (S > 0.0)
    active = region1 | region2

    rho = pairwise_distances(geometry.ScaledCurve(curve, 1.0), nodes)
    rho_safe = np.where(rho > 0.0, rho, 1.0)
    heights = geometry.tail_frame_height(curve, nodes)
    hmat = np.where(region2, heights[None, :], heights[:, None])
    omat = np.where(region2, S, S2) * 1.0
    pref = alpha * nu / (2.0 * math.pi)
    dmat = np.where(active, pref * bessel_k1(nu * rho_safe) * omat * hmat / rho_safe, 0.0)

    sw = np.sqrt(grid.weights)
    dmat *= sw[:, None]
    dmat *= sw[None, :]
    dmat = 0.5 * (dmat + dmat.T)

    # norm kernel of the generated plane eigenfunction (squared resolvent)
    bmat = rho / (4.0 * math.pi * nu) * bessel_k1(nu * rho_safe)
    np.fill_diagonal(bmat, 1.0 / (4.0 * math.pi * nu * nu))
    bmat *= sw[:, None]
    bmat *= sw[None, :]

    vecs = np.column_stack([r.eigenfunction * sw for r in results])
    form = vecs.T @ dmat @ vecs
    norm = vecs.T @ bmat @ vecs
    slopes = scipy.linalg.eigh(-0.5 * (form + form.T) / alpha,
                               0.5 * (norm + norm.T), eigvals_only=True)
    return np.asarray(slopes)
