"""Planar curve geometry for interactions supported on asymptotically
straight curves.

A curve is stored by its bending data rather than by a point table: finitely
many constant-curvature segments (signed curvature k on [a, b]) and finitely
many corner vertices (signed exterior angle at arc-length position s).
Outside the smallest interval containing all of them the curve is straight.
The unscaled tangent-angle profile

    theta_hat(s) = integral of curvature up to s + sum of vertex angles passed

is piecewise linear and left-continuous (a vertex at p turns the tangent for
s > p), normalized to vanish on the left tail.  The scaled family multiplies
the whole profile by beta and reconstructs points from

    gamma_beta(s) = ( int_0^s cos(beta*theta(u)) du,
                      int_0^s sin(beta*theta(u)) du ),    theta = theta_hat - theta_hat(0),

integrated in closed form piece by piece: straight segments and circular arcs
of radius 1/(beta*k).  beta = 0 reproduces the straight line exactly.

Admissibility of a curve means its chords do not collapse: there is c in
(0, 1] with |gamma(s) - gamma(s')| >= c |s - s'| for all pairs.  validate()
estimates that constant by dense pair sampling plus golden-section refinement
and checks it against a floor; the estimate is a numerical one, not a proof.
"""

import hashlib
import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "CurveFormatError",
    "CurvatureSegment",
    "CurveSpec",
    "ScaledCurve",
    "ValidationReport",
    "Vertex",
    "bending",
    "bending_bracket",
    "broken_line",
    "curve_digest",
    "curve_from_json",
    "curve_to_dict",
    "distance",
    "point",
    "shift",
    "tail_frame_height",
    "tangent_angle",
    "to_wiggle_frame",
    "total_bending",
    "validate",
    "with_wiggle",
]

# below this the arc radius exceeds ~1e14 and the segment is numerically straight
_STRAIGHT_EPS = 1e-14


class CurveFormatError(ValueError):
    """Raised when curve JSON does not match the documented schema."""


@dataclass(frozen=True)
class Vertex:
    """Corner at arc length s turning the tangent by the signed angle."""

    s: float
    angle: float

    def __post_init__(self):
        object.__setattr__(self, "s", float(self.s))
        object.__setattr__(self, "angle", float(self.angle))
        if not (math.isfinite(self.s) and math.isfinite(self.angle)):
            raise ValueError("vertex fields must be finite")
        if not 0.0 < abs(self.angle) < math.pi:
            raise ValueError(f"vertex angle must have 0 < |angle| < pi, got {self.angle}")


@dataclass(frozen=True)
class CurvatureSegment:
    """Constant signed curvature k on the arc-length interval [a, b]."""

    a: float
    b: float
    k: float

    def __post_init__(self):
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "k", float(self.k))
        if not all(map(math.isfinite, (self.a, self.b, self.k))):
            raise ValueError("segment fields must be finite")
        if not self.a < self.b:
            raise ValueError(f"segment needs a < b, got [{self.a}, {self.b}]")


class _Profile:
    """Piecewise data for theta_hat: breakpoints, slopes, cumulative integrals."""

    def __init__(self, segments, vertices):
        pos = set()
        for seg in segments:
            pos.add(seg.a)
            pos.add(seg.b)
        for v in vertices:
            pos.add(v.s)
        self.bp = np.array(sorted(pos), dtype=float)
        m = self.bp.size
        ang = np.zeros(m)
        for v in vertices:
            ang[np.searchsorted(self.bp, v.s)] += v.angle
        self.ang = ang

        # curvature on the piece starting at bp[j]; last piece is the right tail
        slope = np.zeros(max(m, 1))
        for seg in segments:
            j0 = np.searchsorted(self.bp, seg.a)
            j1 = np.searchsorted(self.bp, seg.b)
            slope[j0:j1] = seg.k
        self.slope = slope

        th_left = np.zeros(m)
        th_right = np.zeros(m)
        run = 0.0
        for j in range(m):
            th_left[j] = run
            run += ang[j]
            th_right[j] = run
            if j + 1 < m:
                run += slope[j] * (self.bp[j + 1] - self.bp[j])
        self.th_left = th_left
        self.th_right = th_right

        # cumulative integrals of theta_hat and theta_hat^2 from bp[0]
        cum1 = np.zeros(m)
        cum2 = np.zeros(m)
        for j in range(m - 1):
            L = self.bp[j + 1] - self.bp[j]
            r, k = th_right[j], slope[j]
            cum1[j + 1] = cum1[j] + r * L + 0.5 * k * L * L
            cum2[j + 1] = cum2[j] + r * r * L + r * k * L * L + k * k * L**3 / 3.0
        self.cum1 = cum1
        self.cum2 = cum2

    def theta(self, s):
        """theta_hat, vectorized; left-continuous, zero on the left tail."""
        s = np.asarray(s, dtype=float)
        if self.bp.size == 0:
            return np.zeros_like(s)
        j = np.searchsorted(self.bp, s, side="left") - 1
        inside = j >= 0
        jj = np.where(inside, j, 0)
        val = self.th_right[jj] + self.slope[jj] * (s - self.bp[jj])
        return np.where(inside, val, 0.0)

    def theta_right(self, x):
        """Right limit of theta_hat at a single position x."""
        base = float(self.theta(np.array(x)))
        if self.bp.size:
            hit = np.searchsorted(self.bp, x)
            if hit < self.bp.size and self.bp[hit] == x:
                base += self.ang[hit]
        return base

    def cumulatives(self, s):
        """(int theta_hat, int theta_hat^2) from bp[0] to s, vectorized."""
        s = np.asarray(s, dtype=float)
        if self.bp.size == 0:
            z = np.zeros_like(s)
            return z, z.copy()
        j = np.searchsorted(self.bp, s, side="left") - 1
        inside = j >= 0
        jj = np.where(inside, j, 0)
        L = np.where(inside, s - self.bp[jj], 0.0)
        r = self.th_right[jj]
        k = self.slope[jj]
        c1 = self.cum1[jj] + r * L + 0.5 * k * L * L
        c2 = self.cum2[jj] + r * r * L + r * k * L * L + k * k * L**3 / 3.0
        return np.where(inside, c1, 0.0), np.where(inside, c2, 0.0)


@dataclass(frozen=True)
class CurveSpec:
    """Bending data of an asymptotically straight curve (unscaled profile).

    segments: constant-curvature intervals, disjoint up to shared endpoints.
    vertices: corners with signed angles, strictly increasing positions.
    The support is [min, max] over all endpoints and vertex positions; a curve
    with no bending data is the straight line with support {0}.
    """

    segments: tuple = ()
    vertices: tuple = ()

    def __post_init__(self):
        segs = tuple(sorted((s if isinstance(s, CurvatureSegment) else CurvatureSegment(*s)
                             for s in self.segments), key=lambda t: t.a))
        verts = tuple(sorted((v if isinstance(v, Vertex) else Vertex(*v)
                              for v in self.vertices), key=lambda t: t.s))
        for s0, s1 in zip(segs, segs[1:]):
            if s0.b > s1.a:
                raise ValueError(f"segments overlap: [{s0.a}, {s0.b}] and [{s1.a}, {s1.b}]")
        for v0, v1 in zip(verts, verts[1:]):
            if v0.s == v1.s:
                raise ValueError(f"duplicate vertex position {v0.s}")
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "vertices", verts)

    @cached_property
    def _profile(self):
        return _Profile(self.segments, self.vertices)

    @property
    def support(self):
        bp = self._profile.bp
        if bp.size == 0:
            return (0.0, 0.0)
        return (float(bp[0]), float(bp[-1]))

    @cached_property
    def _theta_at_zero(self):
        return float(self._profile.theta(np.array(0.0)))


@dataclass(frozen=True)
class ScaledCurve:
    """Curve from the scaled family: tangent profile beta * theta(s).

    Any real beta with |beta| * (largest combined turn) < pi is accepted;
    beta = 0 is the straight line.
    """

    base: CurveSpec
    beta: float

    def __post_init__(self):
        object.__setattr__(self, "beta", float(self.beta))
        if not math.isfinite(self.beta):
            raise ValueError("beta must be finite")
        for v in self.base.vertices:
            if abs(self.beta * v.angle) >= math.pi:
                raise ValueError(
                    f"scaled vertex angle |{self.beta} * {v.angle}| >= pi is not a corner")

    @cached_property
    def _frame(self):
        prof = self.base._profile
        th0 = self.base._theta_at_zero
        ext = np.unique(np.concatenate([prof.bp, [0.0]]))
        m = ext.size
        i0 = int(np.searchsorted(ext, 0.0))

        # region r covers ext[r-1] < s <= ext[r]; r = 0 is the left tail,
        # r = m is the right tail.  Each region is an arc with constant
        # curvature beta*k starting at its anchor ext[max(r-1, 0)].
        psi = np.empty(m + 1)
        curv = np.zeros(m + 1)
        psi[0] = -self.beta * th0
        for r in range(1, m + 1):
            psi[r] = self.beta * (prof.theta_right(ext[r - 1]) - th0)
        # curvature per interior region from the base profile slopes
        if prof.bp.size:
            for r in range(1, m):
                mid = 0.5 * (ext[r - 1] + ext[r])
                j = np.searchsorted(prof.bp, mid, side="left") - 1
                curv[r] = self.beta * (prof.slope[j] if j >= 0 else 0.0)

        # positions at the extended breakpoints, marching away from s = 0
        X = np.zeros((m, 2))
        for r in range(i0, m - 1):
            X[r + 1] = X[r] + _arc_displacement(ext[r + 1] - ext[r], psi[r + 1], curv[r + 1])
        for r in range(i0, 0, -1):
            X[r - 1] = X[r] - _arc_displacement(ext[r] - ext[r - 1], psi[r], curv[r])

        anchor_idx = np.concatenate([[0], np.arange(m)])
        return ext, X, psi, curv, anchor_idx


def _arc_displacement(length, psi0, c):
    """Displacement along an arc of curvature c starting with tangent psi0."""
    if abs(c) < _STRAIGHT_EPS:
        return np.array([length * math.cos(psi0), length * math.sin(psi0)])
    a1 = psi0 + c * length
    return np.array([(math.sin(a1) - math.sin(psi0)) / c,
                     (math.cos(psi0) - math.cos(a1)) / c])


def _as_scaled(curve):
    if isinstance(curve, ScaledCurve):
        return curve
    return ScaledCurve(curve, 1.0)


# ---------------------------------------------------------------------------
# profile queries


def bending(curve, s, s2):
    """Integrated bending from arc length s to s2 (signed, antisymmetric).

    Counts vertex turns strictly between the endpoints plus the one sitting
    exactly at the lower endpoint, and integrates curvature over the interval.
    For a ScaledCurve the profile is multiplied by beta.
    """
    if isinstance(curve, ScaledCurve):
        return curve.beta * bending(curve.base, s, s2)
    prof = curve._profile
    return float(prof.theta(np.array(float(s2))) - prof.theta(np.array(float(s))))


def total_bending(curve):
    """Tangent turn between the two straight tails."""
    if isinstance(curve, ScaledCurve):
        return curve.beta * total_bending(curve.base)
    prof = curve._profile
    if prof.bp.size == 0:
        return 0.0
    return float(prof.th_right[-1])


def tangent_angle(curve, s):
    """Tangent angle relative to the tangent just left of arc length 0."""
    if isinstance(curve, ScaledCurve):
        return curve.beta * tangent_angle(curve.base, s)
    prof = curve._profile
    out = prof.theta(np.asarray(s, dtype=float)) - curve._theta_at_zero
    return float(out) if np.ndim(s) == 0 else out


def bending_bracket(curve, s, s2):
    """Interval bending bracket, vectorized:

        (1/|s - s2|) (int_{s2}^{s} phi du)^2 - int_{s2}^{s} phi^2 du,

    phi(u) the bending between u and either endpoint.  Equal to minus the
    interval length times the variance of the tangent angle over the interval,
    so the reference endpoint drops out; symmetric and always <= 0.  Returns
    0 on the diagonal.
    """
    if isinstance(curve, ScaledCurve):
        return curve.beta**2 * bending_bracket(curve.base, s, s2)
    prof = curve._profile
    s = np.asarray(s, dtype=float)
    s2 = np.asarray(s2, dtype=float)
    d = s - s2
    c1a, c2a = prof.cumulatives(s)
    c1b, c2b = prof.cumulatives(s2)
    safe = np.where(d == 0.0, 1.0, d)
    m1 = (c1a - c1b) / safe
    m2 = (c2a - c2b) / safe
    var = np.maximum(m2 - m1 * m1, 0.0)
    out = -np.abs(d) * var
    return np.where(d == 0.0, 0.0, out)


# ---------------------------------------------------------------------------
# point evaluation


def point(curve, s):
    """Point gamma(s) of the scaled curve; gamma(0) = origin, left tangent x-hat.

    Scalars give a (2,) array, arrays give shape (..., 2).  Closed form:
    straight pieces and circular arcs, no quadrature.
    """
    sc = _as_scaled(curve)
    ext, X, psi, curv, anchor_idx = sc._frame
    s_arr = np.asarray(s, dtype=float)
    scalar = s_arr.ndim == 0
    flat = np.atleast_1d(s_arr).ravel()

    r = np.searchsorted(ext, flat, side="left")
    aidx = anchor_idx[r]
    ax = ext[aidx]
    base = X[aidx]
    ang0 = psi[r]
    c = curv[r]
    dx = flat - ax

    out = np.empty((flat.size, 2))
    straight = np.abs(c) < _STRAIGHT_EPS
    if straight.any():
        st = straight
        out[st, 0] = base[st, 0] + dx[st] * np.cos(ang0[st])
        out[st, 1] = base[st, 1] + dx[st] * np.sin(ang0[st])
    bend_m = ~straight
    if bend_m.any():
        a1 = ang0[bend_m] + c[bend_m] * dx[bend_m]
        out[bend_m, 0] = base[bend_m, 0] + (np.sin(a1) - np.sin(ang0[bend_m])) / c[bend_m]
        out[bend_m, 1] = base[bend_m, 1] + (np.cos(ang0[bend_m]) - np.cos(a1)) / c[bend_m]

    if scalar:
        return out[0]
    return out.reshape(s_arr.shape + (2,))


def distance(curve, s, s2):
    """Chord length |gamma(s) - gamma(s2)| on the scaled curve; vectorized."""
    p = point(curve, s)
    q = point(curve, s2)
    d = p - q
    out = np.sqrt(np.sum(d * d, axis=-1))
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# admissibility estimate


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of the chord-constant estimate; ok means estimate > floor."""

    ok: bool
    chord_constant: float
    floor: float
    worst_pair: tuple
    tail_ratio: float
    n_samples: int
    messages: tuple = ()


def _chord_ratio(sc, s, s2):
    d = abs(s - s2)
    if d < 1e-9:
        return 1.0
    return distance(sc, s, s2) / d


def _golden(f, a, b, iters=40):
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = b - inv * (b - a)
    x2 = a + inv * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - inv * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + inv * (b - a)
            f2 = f(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)


def validate(curve, beta=1.0, floor=1e-3, n_inner=240, refine_rounds=3):
    """Estimate the chord constant inf |gamma(s)-gamma(s')| / |s-s'| at the
    given scaling and compare with the floor.

    Pairs are sampled densely over the support plus straight tails, with a
    geometric ladder far out to catch converging tails, then the worst pairs
    are polished by coordinate-wise golden-section search.  The asymptotic
    tail-tail ratio |cos(Phi/2)| (Phi the scaled total bending) is included
    as a candidate.  An estimate, not a certificate.
    """
    sc = _as_scaled(curve)
    if beta != 1.0:
        sc = ScaledCurve(sc.base, sc.beta * beta)
    lo, hi = sc.base.support
    span = max(hi - lo, 1.0)

    inner = np.linspace(lo - 2.0 * span, hi + 2.0 * span, n_inner)
    ladder = span * np.geomspace(4.0, 1000.0, 12)
    samples = np.unique(np.concatenate([inner, lo - ladder, hi + ladder]))

    pts = point(sc, samples)
    diff = pts[:, None, :] - pts[None, :, :]
    rho = np.sqrt(np.sum(diff * diff, axis=-1))
    ds = np.abs(samples[:, None] - samples[None, :])
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(ds > 1e-9, rho / np.where(ds > 1e-9, ds, 1.0), 1.0)

    flat = np.argsort(ratio, axis=None)
    best = math.inf
    best_pair = (samples[0], samples[-1])
    seen = 0
    for idx in flat:
        i, j = np.unravel_index(idx, ratio.shape)
        if i >= j:
            continue
        seen += 1
        if seen > 6:
            break
        si, sj = float(samples[i]), float(samples[j])
        gap_i = span / 4.0 if samples.size < 2 else max(abs(si) * 0.5, span / 4.0)
        for _ in range(refine_rounds):
            si, _ = _golden(lambda x: _chord_ratio(sc, x, sj), si - gap_i, si + gap_i)
            sj, _ = _golden(lambda x: _chord_ratio(sc, si, x), sj - gap_i, sj + gap_i)
        val = _chord_ratio(sc, si, sj)
        if val < best:
            best = val
            best_pair = (si, sj)

    phi = total_bending(sc)
    tail = abs(math.cos(0.5 * phi))
    msgs = []
    if tail < best:
        best = tail
        msgs.append("infimum approached along the two tails")
    ok = bool(best > floor)
    if not ok:
        msgs.append(f"chord constant estimate {best:.3e} at or below floor {floor:.1e}")
    return ValidationReport(ok=ok, chord_constant=float(best), floor=float(floor),
                            worst_pair=best_pair, tail_ratio=float(tail),
                            n_samples=int(samples.size), messages=tuple(msgs))


# ---------------------------------------------------------------------------
# construction helpers


def broken_line(angle=1.0):
    """Single corner at the origin; the scaled family turns by beta*angle."""
    return CurveSpec(vertices=(Vertex(0.0, angle),))


def shift(curve, ds):
    """Translate all bending data along the parameter by ds."""
    segs = tuple(CurvatureSegment(s.a + ds, s.b + ds, s.k) for s in curve.segments)
    verts = tuple(Vertex(v.s + ds, v.angle) for v in curve.vertices)
    return CurveSpec(segments=segs, vertices=verts)


def to_wiggle_frame(curve):
    """Shift so the deformation ends exactly at arc length 0.

    Afterwards the curve is straight on s >= 0 and the pivot of the wiggle
    construction sits where straightness begins.
    """
    _, hi = curve.support
    return shift(curve, -hi)


def with_wiggle(curve, phi):
    """Append a corner of angle phi at the pivot s = 0.

    Requires the deformation to lie in s <= 0 (see to_wiggle_frame); the
    straight tail s >= 0 rotates rigidly by phi about gamma(0).  phi = 0
    returns the curve unchanged.  If a vertex already sits at 0 the angles
    compose.
    """
    if phi == 0.0:
        return curve
    _, hi = curve.support
    if hi > 0.0:
        raise ValueError("wiggle pivot must lie on the straight right tail; "
                         "use to_wiggle_frame first")
    angle = float(phi)
    verts = list(curve.vertices)
    for i, v in enumerate(verts):
        if v.s == 0.0:
            angle += v.angle
            verts.pop(i)
            break
    verts.append(Vertex(0.0, angle))
    return CurveSpec(segments=curve.segments, vertices=tuple(verts))


def tail_frame_height(curve, s):
    """Height above the straight right tail, in the frame where that tail is
    the positive x-axis through the origin.  Vectorized; exactly 0 for s >= 0
    when the curve is in the wiggle frame."""
    sc = _as_scaled(curve)
    prof = sc.base._profile
    th0 = sc.base._theta_at_zero
    last = prof.bp[-1] if prof.bp.size else 0.0
    tail_angle = sc.beta * (prof.theta_right(last) - th0)
    pts = point(sc, s)
    y = -math.sin(tail_angle) * pts[..., 0] + math.cos(tail_angle) * pts[..., 1]
    return float(y) if np.ndim(s) == 0 else y


# ---------------------------------------------------------------------------
# JSON schema


def curve_from_json(source):
    """Parse the documented curve format:

        {"segments": [{"a": ..., "b": ..., "k": ...}, ...],
         "vertices": [{"s": ..., "angle": ...}, ...]}

    Accepts a JSON string/bytes or an already-parsed dict.  Both keys are
    required (empty lists allowed); unknown keys anywhere are rejected.
    """
    if isinstance(source, (str, bytes)):
        try:
            data = json.loads(source)
        except json.JSONDecodeError as exc:
            raise CurveFormatError(f"not valid JSON: {exc}") from exc
    elif isinstance(source, dict):
        data = source
    else:
        raise CurveFormatError(f"unsupported source type {type(source).__name__}")

    if not isinstance(data, dict):
        raise CurveFormatError("top level must be an object")
    extra = set(data) - {"segments", "vertices"}
    if extra:
        raise CurveFormatError(f"unknown top-level keys: {sorted(extra)}")
    missing = {"segments", "vertices"} - set(data)
    if missing:
        raise CurveFormatError(f"missing required keys: {sorted(missing)}")

    def number(obj, key, where):
        if key not in obj:
            raise CurveFormatError(f"{where} missing key '{key}'")
        val = obj[key]
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise CurveFormatError(f"{where}['{key}'] must be a number")
        if not math.isfinite(val):
            raise CurveFormatError(f"{where}['{key}'] must be finite")
        return float(val)

    segments = []
    if not isinstance(data["segments"], list):
        raise CurveFormatError("'segments' must be a list")
    for i, raw in enumerate(data["segments"]):
        where = f"segments[{i}]"
        if not isinstance(raw, dict):
            raise CurveFormatError(f"{where} must be an object")
        extra = set(raw) - {"a", "b", "k"}
        if extra:
            raise CurveFormatError(f"{where} has unknown keys: {sorted(extra)}")
        try:
            segments.append(CurvatureSegment(number(raw, "a", where),
                                             number(raw, "b", where),
                                             number(raw, "k", where)))
        except ValueError as exc:
            raise CurveFormatError(f"{where}: {exc}") from exc

    vertices = []
    if not isinstance(data["vertices"], list):
        raise CurveFormatError("'vertices' must be a list")
    for i, raw in enumerate(data["vertices"]):
        where = f"vertices[{i}]"
        if not isinstance(raw, dict):
            raise CurveFormatError(f"{where} must be an object")
        extra = set(raw) - {"s", "angle"}
        if extra:
            raise CurveFormatError(f"{where} has unknown keys: {sorted(extra)}")
        try:
            vertices.append(Vertex(number(raw, "s", where), number(raw, "angle", where)))
        except ValueError as exc:
            raise CurveFormatError(f"{where}: {exc}") from exc

    try:
        return CurveSpec(segments=tuple(segments), vertices=tuple(vertices))
    except ValueError as exc:
        raise CurveFormatError(str(exc)) from exc


def curve_to_dict(curve):
    """Canonical dict form, inverse of curve_from_json."""
    return {
        "segments": [{"a": s.a, "b": s.b, "k": s.k} for s in curve.segments],
        "vertices": [{"s": v.s, "angle": v.angle} for v in curve.vertices],
    }


def curve_digest(curve, beta=None):
    """Stable hex digest of the bending data (and beta when given)."""
    if isinstance(curve, ScaledCurve):
        beta = curve.beta if beta is None else beta
        curve = curve.base
    payload = curve_to_dict(curve)
    if beta is not None:
        payload["beta"] = float(beta)
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]
