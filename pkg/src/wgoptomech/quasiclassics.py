"""Quasiclassical analysis of the Hermitian potential ``V'(x)``.

Energies here are measured on the scale of the potential itself.  The grid
Hamiltonian carries an extra ``-Omega/2`` (so the bare oscillator ladder is
``n Omega``); use :func:`classical_energy` to move an eigenvalue onto this
scale before comparing it with turning points or action integrals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq, minimize_scalar

from .core import ModelParams, potential_hermitian, potential_hermitian_derivative
from .errors import BelowThreshold, ConfigError, NoClassicalRegion

GL_NODES = 96


def classical_energy(e_spectral, p: ModelParams):
    return np.real(e_spectral) + 0.5 * p.omega


def spectral_energy(e_classical, p: ModelParams):
    return e_classical - 0.5 * p.omega


def scan_step(eta: float) -> float:
    return 0.01 if eta <= 0 else min(0.01, math.pi / (50.0 * eta))


def _reach(energy: float, p: ModelParams) -> float:
    """Distance beyond which ``V' > energy`` on both sides."""
    amp = abs(p.coupling_phase)
    return math.sqrt(2.0 * max(energy + amp, 0.0) / p.omega) + 0.1


@lru_cache(maxsize=256)
def potential_minimum(p: ModelParams) -> float:
    """Global minimum of ``V'``."""
    amp = abs(p.coupling_phase)
    span = 2.0 * math.sqrt(amp / p.omega) + 0.5
    x = np.arange(-span, span + scan_step(p.eta), scan_step(p.eta) / 2)
    v = potential_hermitian(x, p)
    i = int(np.argmin(v))
    lo, hi = x[max(i - 1, 0)], x[min(i + 1, x.size - 1)]
    res = minimize_scalar(lambda t: potential_hermitian(t, p), bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-12})
    return float(min(res.fun, v[i]))


def _first_root(energy: float, p: ModelParams, side: int) -> float:
    step = scan_step(p.eta)
    reach = _reach(energy, p)
    x = side * np.arange(0.0, reach + step, step)
    f = potential_hermitian(x, p) - energy
    hits = np.flatnonzero(np.sign(f[:-1]) * np.sign(f[1:]) <= 0)
    hits = hits[f[hits + 1] != 0] if hits.size > 1 and f[0] == 0 else hits
    if hits.size == 0:
        raise NoClassicalRegion(f"no turning point for E={energy} on side {side}")
    i = hits[0] if f[0] != 0 else (hits[1] if hits.size > 1 else hits[0])
    a, b = abs(x[i]), abs(x[i + 1])
    if f[i] == 0 and i > 0:
        return a
    return brentq(lambda t: potential_hermitian(side * t, p) - energy, a, b, xtol=1e-13)


def turning_points(energy: float, p: ModelParams) -> tuple[float, float]:
    """Turning points nearest the origin on the negative and positive side."""
    if energy < potential_minimum(p):
        raise NoClassicalRegion(
            f"E={energy} lies below min V' = {potential_minimum(p):.6g}")
    return -_first_root(energy, p, -1), _first_root(energy, p, +1)


def turning_point(energy: float, p: ModelParams) -> float:
    """Smallest positive solution of ``V'(x) = energy``."""
    return turning_points(energy, p)[1]


def _half_action(energy: float, x_t: float, p: ModelParams, side: int) -> float:
    # x = x_t (1 - s^2) removes the square-root endpoint behaviour
    def integrand(s):
        x = side * x_t * (1.0 - s * s)
        return math.sqrt(max(0.0, 2.0 * (energy - potential_hermitian(x, p)) / p.omega)) * 2.0 * x_t * s

    val, _ = quad(integrand, 0.0, 1.0, epsabs=1e-10, epsrel=1e-10, limit=200)
    return val


def bs_phase(energy: float, p: ModelParams) -> float:
    """Bohr-Sommerfeld phase ``n(E) = S(E)/pi - 1/2``.

    The action is taken between the turning points closest to the origin.  If
    the origin itself is classically forbidden the action is zero and
    ``n = -1/2``.
    """
    x_minus, x_plus = turning_points(energy, p)
    if potential_hermitian(0.0, p) >= energy:
        return -0.5
    action = _half_action(energy, x_plus, p, +1) + _half_action(energy, -x_minus, p, -1)
    return action / math.pi - 0.5


def _first_crossing_vec(energies: np.ndarray, p: ModelParams, side: int) -> np.ndarray:
    """Vectorized smallest root on one side; NaN where the origin is forbidden."""
    step = scan_step(p.eta)
    reach = _reach(float(np.max(energies)), p)
    x = np.arange(0.0, reach + step, step)
    v = potential_hermitian(side * x, p)
    running = np.maximum.accumulate(v)
    idx = np.searchsorted(running, energies, side="left")
    idx = np.clip(idx, 1, x.size - 1)
    lo, hi = x[idx - 1], x[idx]
    for _ in range(48):
        mid = 0.5 * (lo + hi)
        above = potential_hermitian(side * mid, p) >= energies
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
    out = 0.5 * (lo + hi)
    out[energies <= v[0]] = np.nan
    return out


def phase_values(energies, p: ModelParams) -> np.ndarray:
    """Vectorized :func:`bs_phase` using a fixed Gauss-Legendre rule.

    Points below the potential minimum return NaN.
    """
    e = np.atleast_1d(np.asarray(energies, dtype=float))
    out = np.full(e.shape, np.nan)
    ok = e >= potential_minimum(p)
    out[ok] = -0.5
    live = ok & (e > potential_hermitian(0.0, p))
    if not np.any(live):
        return out
    el = e[live]
    s, w = np.polynomial.legendre.leggauss(GL_NODES)
    s, w = 0.5 * (s + 1.0), 0.5 * w
    total = np.zeros(el.size)
    for side in (+1, -1):
        xt = _first_crossing_vec(el, p, side)
        x = side * xt[:, None] * (1.0 - s[None, :] ** 2)
        kin = np.maximum(0.0, 2.0 * (el[:, None] - potential_hermitian(x, p)) / p.omega)
        total += (np.sqrt(kin) * 2.0 * xt[:, None] * s[None, :]) @ w
    out[live] = total / math.pi - 0.5
    return out


def record_maxima(p: ModelParams, e_max: float | None = None) -> list:
    """Local maxima of ``V'`` that exceed every value closer to the origin.

    These are the energies where the nearest turning point jumps outward, i.e.
    the branch cuts of the phase.  Returned as ``(x, V'(x), ordinal)`` tuples
    for both sides, where ``ordinal`` counts local maxima outward from the
    origin on that side (1 = innermost, the origin itself excluded).
    """
    out = []
    amp = abs(p.coupling_phase)
    reach = _reach(e_max if e_max is not None else amp + 0.5 * p.omega * (amp * p.eta / p.omega + 10) ** 2, p)
    step = scan_step(p.eta) / 2
    for side in (+1, -1):
        x = np.arange(0.0, reach, step)
        v = potential_hermitian(side * x, p)
        best = v[0]
        ordinal = 0
        for i in range(1, x.size - 1):
            if v[i] >= v[i - 1] and v[i] > v[i + 1]:
                ordinal += 1
                if v[i] > best:
                    res = minimize_scalar(lambda t: -potential_hermitian(side * t, p),
                                          bounds=(x[i - 1], x[i + 1]), method="bounded",
                                          options={"xatol": 1e-12})
                    out.append((side * float(res.x), float(-res.fun), ordinal))
            best = max(best, v[i])
    return out


@dataclass(frozen=True)
class Ridge:
    kind: str  # "wrap" (integer crossing) or "cut" (turning-point jump)
    eta: float
    energy: float
    line: int = -1


@dataclass
class PhaseMap:
    eta_axis: np.ndarray
    energy_axis: np.ndarray
    raw: np.ndarray  # shape (len(eta_axis), len(energy_axis)); NaN where masked
    ridges: list = field(default_factory=list)
    cut_endpoints: list = field(default_factory=list)

    @property
    def mask(self) -> np.ndarray:
        return np.isnan(self.raw)

    @property
    def values(self) -> np.ndarray:
        frac = np.mod(self.raw, 1.0)
        frac[frac >= 1.0] = 0.0
        return frac


def _distinct(values, tol=1e-9) -> list:
    """Sorted values with mirror-image duplicates merged."""
    out = []
    for v in sorted(values):
        if not out or abs(v - out[-1]) > tol * max(1.0, abs(v)):
            out.append(v)
    return out


def phase_map(eta_axis, energy_axis, p: ModelParams) -> PhaseMap:
    """Fractional phase over an (eta, E) lattice plus its discontinuity ridges.

    ``p.eta`` is ignored; each column uses the corresponding entry of
    ``eta_axis``.  Integer crossings of the continuous phase are reported as
    ``wrap`` ridges, turning-point jumps as ``cut`` ridges linked into lines.
    A cut line that starts inside the swept range marks an endpoint.
    """
    etas = np.asarray(eta_axis, dtype=float)
    es = np.asarray(energy_axis, dtype=float)
    if np.any(np.diff(etas) <= 0) or np.any(np.diff(es) <= 0):
        raise ConfigError("phase-map axes must be strictly increasing")
    raw = np.empty((etas.size, es.size))
    ridges, lines = [], {}
    e_top = float(es[-1])
    for j, eta in enumerate(etas):
        pj = p.with_(eta=float(eta))
        raw[j] = phase_values(es, pj)
        maxima = record_maxima(pj, e_top + 10 * p.omega)
        col_cuts = _distinct(v for _, v, _ in maxima)
        for xm, v, ordinal in maxima:
            lines.setdefault((1 if xm > 0 else -1, ordinal), []).append((j, v))
        n = raw[j]
        for i in range(es.size - 1):
            a, b = n[i], n[i + 1]
            if np.isnan(a) or np.isnan(b):
                continue
            if any(es[i] < c <= es[i + 1] for c in col_cuts):
                continue
            if math.floor(b) > math.floor(a):
                target = math.floor(b)
                t = (target - a) / (b - a)
                ridges.append(Ridge("wrap", float(eta), float(es[i] + t * (es[i + 1] - es[i]))))
    endpoints = []
    seen = set()
    for (side, ordinal), line in sorted(lines.items()):
        for j, e in line:
            key = (j, round(e, 9))
            if es[0] <= e <= es[-1] and key not in seen:
                seen.add(key)
                ridges.append(Ridge("cut", float(etas[j]), float(e), ordinal))
        j0, e0 = line[0]
        if j0 > 0 and es[0] <= e0 <= es[-1] and (j0, ordinal) not in {(q[0], q[2]) for q in endpoints}:
            endpoints.append((j0, float(e0), ordinal))
    endpoints = [(float(etas[j]), e, ordinal) for j, e, ordinal in endpoints]
    return PhaseMap(etas, es, raw, ridges, endpoints)


def integer_crossings(p: ModelParams, e_min: float, e_max: float,
                      step: float = 0.01) -> list:
    """Energies (potential scale) where the phase passes an integer.

    Continuous crossings are refined with :func:`bs_phase`; an integer jumped
    over at a branch cut is reported at the cut energy.  Returns
    ``(energy, n, kind)`` tuples sorted by energy.
    """
    es = np.arange(e_min, e_max + step, step)
    n = phase_values(es, p)
    cuts = [v for v in _distinct(v for _, v, _ in record_maxima(p, e_max + 10 * p.omega))
            if e_min <= v <= e_max]
    out = []
    for i in range(es.size - 1):
        a, b = n[i], n[i + 1]
        if np.isnan(a) or np.isnan(b) or math.floor(b) <= math.floor(a):
            continue
        cut = [c for c in cuts if es[i] < c <= es[i + 1]]
        if cut:
            for m in range(math.floor(a) + 1, math.floor(b) + 1):
                out.append((float(cut[0]), m, "cut"))
            continue
        m = math.floor(b)
        try:
            e = brentq(lambda t: bs_phase(t, p) - m, es[i], es[i + 1], xtol=1e-10)
        except ValueError:
            e = es[i] + (m - a) / (b - a) * step
        out.append((float(e), m, "wrap"))
    return sorted(out)


def _tan_residual(a: float) -> float:
    return math.sin(a) - a * math.cos(a)


def tan_roots(count: int) -> list:
    """First ``count`` solutions of ``tan A = A`` with ``cos A > 0``, starting at 0."""
    if count < 1:
        raise ConfigError(f"count must be >= 1, got {count}")
    roots = [0.0]
    for n in range(1, count):
        seed = 2 * math.pi * n + math.pi / 2
        a = seed - 1.0 / seed
        for _ in range(100):
            g = _tan_residual(a)
            step = g / (a * math.sin(a))
            a -= step
            if abs(step) < 1e-15 * a:
                break
        if abs(_tan_residual(a)) > 1e-12 * a:
            raise ArithmeticError(f"tan A = A root {n} did not converge")
        assert math.cos(a) > 0, "root on the wrong branch"
        roots.append(a)
    return roots


def approximate_root(n: int) -> float:
    if n == 0:
        return 0.0
    seed = 2 * math.pi * n + math.pi / 2
    return seed - 1.0 / seed


@dataclass(frozen=True)
class ThresholdRow:
    n: int
    A: float
    eta: float
    energy: float
    approx_eta: float
    approx_energy: float


@dataclass(frozen=True)
class ThresholdTable:
    rows: tuple

    def __iter__(self):
        return iter(self.rows)

    def __len__(self):
        return len(self.rows)

    def __getitem__(self, n):
        return self.rows[n]

    def crossed(self, eta: float) -> int:
        return sum(1 for r in self.rows if eta >= r.eta)


def thresholds(p: ModelParams, n_max: int = 5) -> ThresholdTable:
    """Couplings ``eta_n`` at which new side minima appear, with their energies.

    Rows ``n = 0..n_max``.  The approximate columns are the large-``n`` forms
    ``sqrt(2 pi Omega (n+1/4)/Gamma0)`` and ``pi Gamma0 (n+1/4)``.
    """
    if p.gamma0 <= 0:
        raise ConfigError("thresholds need gamma0 > 0")
    rows = []
    for n, a in enumerate(tan_roots(n_max + 1)):
        c = math.cos(a)
        rows.append(ThresholdRow(
            n, a,
            math.sqrt(p.omega / (p.gamma0 * c)),
            p.gamma0 * c * (1.0 + a * a / 2.0),
            math.sqrt(2 * math.pi * p.omega * (n + 0.25) / p.gamma0),
            math.pi * p.gamma0 * (n + 0.25),
        ))
    return ThresholdTable(tuple(rows))


def localized_energy(n: int, eta: float, p: ModelParams) -> float:
    """Inflection-point estimate of the energy of the ``n``-th localized pair."""
    eta_n = thresholds(p, n)[n].eta
    if eta < eta_n * (1.0 - 1e-12):
        raise BelowThreshold(f"eta={eta} is below threshold eta_{n}={eta_n:.6g}")
    arg = min(1.0, max(-1.0, p.omega / (p.gamma0 * eta * eta)))
    return p.omega / (2.0 * eta * eta) * ((2 * math.pi * n + math.acos(arg)) ** 2 + 2.0)


@dataclass(frozen=True)
class StationaryPoint:
    x: float
    kind: str  # "min", "max" or "inflection"
    value: float


def minima_structure(p: ModelParams, rel_tol: float = 1e-10) -> list:
    """Stationary points of ``V'`` on ``x >= 0`` for the cosine-form potential.

    Between consecutive zeros of ``V''`` the derivative ``V'_x`` is monotone,
    so each such segment holds at most one root; a root sitting on a zero of
    ``V''`` is a degenerate (inflection) point.
    """
    om, g, eta = p.omega, abs(p.coupling_phase), p.eta
    dv = lambda x: float(potential_hermitian_derivative(x, p, 1))
    d2 = lambda x: float(potential_hermitian_derivative(x, p, 2))
    scale = om + g * eta * eta
    x_cut = g * eta / om + (2 * math.pi / eta if eta > 0 else 1.0)

    def classify(x):
        c = d2(x)
        if abs(c) <= rel_tol * scale:
            return "inflection"
        return "min" if c > 0 else "max"

    points = [StationaryPoint(0.0, classify(0.0), float(potential_hermitian(0.0, p)))]
    if eta == 0 or g == 0:
        return points
    # zeros of V'': cos(eta x + alpha) = om/(g eta^2) with V' = x^2/2 + g cos(eta x + alpha)
    alpha = float(np.angle(p.coupling_phase))
    ratio = om / (g * eta * eta)
    breaks = [0.0, x_cut]
    if ratio <= 1.0:
        base = math.acos(ratio)
        kmax = int((eta * x_cut) / (2 * math.pi)) + 2
        for k in range(-1, kmax + 1):
            for sgn in (+1, -1):
                x = (sgn * base + 2 * math.pi * k - alpha) / eta
                if 1e-9 * x_cut < x < x_cut:
                    breaks.append(x)
    breaks = sorted(set(breaks))
    tol = rel_tol * scale * max(1.0, x_cut)
    for a, b in zip(breaks[:-1], breaks[1:]):
        fa, fb = dv(a), dv(b)
        if a > 0 and abs(fa) <= tol:
            continue  # counted as inflection from the previous segment
        if abs(fb) <= tol and b < x_cut:
            points.append(StationaryPoint(b, "inflection", float(potential_hermitian(b, p))))
            continue
        if a == 0.0:
            # V'_x vanishes at the origin; test the sign just inside the segment
            fa = dv(a + 1e-9 * (b - a)) if b > a else fa
            if abs(fa) == 0:
                continue
        if fa * fb < 0:
            x = brentq(dv, a if a > 0 else a + 1e-9 * (b - a), b, xtol=1e-14)
            points.append(StationaryPoint(x, classify(x), float(potential_hermitian(x, p))))
    return points


def count_minima_pairs(p: ModelParams) -> int:
    return sum(1 for s in minima_structure(p) if s.x > 0 and s.kind == "min")
