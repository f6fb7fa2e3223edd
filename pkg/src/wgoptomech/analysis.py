"""Eigenstate classification, PT-breaking detection and coupling sweeps."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import ModelParams, potential_hermitian
from .errors import (ConfigError, InsufficientTrack, UnpairedComplexEigenvalue,
                     WgOptomechError)
from .fd_solver import Grid, SpectrumResult, build_hamiltonian, solve_spectrum
from .quasiclassics import (ThresholdTable, classical_energy, localized_energy,
                            minima_structure, thresholds)


@dataclass(frozen=True)
class ClassifyOptions:
    """Knobs of the localization rule (energies in units of omega)."""

    pair_tol: float = 0.6
    pr_fraction: float = 0.7
    barrier_action: float = 1.0


@dataclass(frozen=True)
class ModeReport:
    index: int
    energy: complex
    centroid: float
    spread: float
    participation_ratio: float
    localized: bool = False
    pair_id: int | None = None
    pt_broken: bool = False
    well: int | None = None
    lobe_position: float | None = None
    folded_pr: float | None = None
    barrier_action: float | None = None


def _mode_moments(s: SpectrumResult):
    h = s.grid.spacing
    x = s.x
    rho = np.abs(s.eigenvectors) ** 2
    rho = rho / (h * rho.sum(axis=0))
    cent = h * (x @ rho)
    spread = np.sqrt(np.maximum(h * ((x**2) @ rho) - cent**2, 0.0))
    pr = 1.0 / (h * np.sum(rho**2, axis=0))
    return rho, cent, spread, pr


def _pair_adjacent(re: np.ndarray, tol: float) -> list:
    """Greedy pairing of neighbours in energy order, smallest gap first."""
    gaps = np.diff(re)
    used, pairs = set(), []
    for j in np.argsort(gaps, kind="stable"):
        if gaps[j] >= tol:
            break
        if j in used or j + 1 in used:
            continue
        used.update((int(j), int(j) + 1))
        pairs.append((int(j), int(j) + 1))
    return sorted(pairs)


def _fold(rho: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map a density on the symmetric grid onto ``x >= 0``."""
    mid = x.size // 2
    folded = rho[mid:].copy()
    folded[1:] += rho[:mid][::-1]
    return x[mid:], folded


def side_wells(p: ModelParams) -> list:
    """Positions of side minima of ``V'`` (x > 0) with their enclosing maxima."""
    pts = minima_structure(p)
    out = []
    for i, s in enumerate(pts):
        if s.kind != "min" or s.x <= 0:
            continue
        inner = max((q.x for q in pts[:i] if q.kind == "max"), default=0.0)
        outer = min((q.x for q in pts[i + 1:] if q.kind == "max"), default=math.inf)
        out.append((s.x, inner, outer))
    return out


def _outer_turning_point(energy: float, xp: np.ndarray, vp: np.ndarray) -> float:
    allowed = vp < energy
    return float(xp[allowed].max()) if np.any(allowed) else 0.0


def _central_action(energy: float, peak: float, xp, vp, h, omega) -> float:
    forbidden = (xp < peak) & (vp > energy)
    return float(h * np.sum(np.sqrt(2.0 * (vp[forbidden] - energy) / omega)))


def classify_modes(s: SpectrumResult, p: ModelParams | None = None,
                   options: ClassifyOptions | None = None) -> list:
    """Per-mode moments plus pairing and localization flags.

    Doublets are neighbouring levels closer than ``pair_tol`` in Re E.  A
    doublet is localized when the peak of its x -> -x averaged density sits in
    a side minimum of ``V'`` (within half a coupling period) and the state is
    confined there: its folded participation ratio is below ``pr_fraction``
    of the outer turning point, or the WKB action under the central barrier
    reaches ``barrier_action``.
    """
    p = p or s.params
    opt = options or ClassifyOptions()
    rho, cent, spread, pr = _mode_moments(s)
    re = s.eigenvalues.real
    reports = [ModeReport(j, complex(s.eigenvalues[j]), float(cent[j]), float(spread[j]),
                          float(pr[j])) for j in range(re.size)]
    if p.eta == 0 or p.gamma0 == 0:
        return reports
    wells = side_wells(p)
    h = s.grid.spacing
    half_period = math.pi / p.eta
    for a, b in _pair_adjacent(re, opt.pair_tol * p.omega):
        xp, rf = _fold(0.5 * (rho[:, a] + rho[:, b]), s.x)
        rf = rf / (h * rf.sum())
        peak = float(xp[np.argmax(rf)])
        e_cl = float(classical_energy(0.5 * (re[a] + re[b]), p))
        vp = potential_hermitian(xp, p)
        fpr = float(1.0 / (h * np.sum(rf**2)))
        x_out = _outer_turning_point(e_cl, xp, vp)
        action = _central_action(e_cl, peak, xp, vp, h, p.omega)
        well, lobe = None, None
        for w, (xm, inner, outer) in enumerate(wells):
            if abs(peak - xm) < half_period:
                well = w
                basin = (xp >= inner) & (xp <= min(outer, s.grid.x_max))
                lobe = float(np.sum(xp[basin] * rf[basin]) / np.sum(rf[basin]))
                break
        confined = fpr < opt.pr_fraction * x_out or action >= opt.barrier_action
        loc = well is not None and confined
        for me, other in ((a, b), (b, a)):
            reports[me] = ModeReport(
                me, reports[me].energy, reports[me].centroid, reports[me].spread,
                reports[me].participation_ratio, loc, other, False, well, lobe, fpr, action)
    return reports


def localized_pairs(reports: list) -> list:
    """``(a, b, well)`` for each localized doublet, ordered by energy."""
    return [(r.index, r.pair_id, r.well) for r in reports
            if r.localized and r.pair_id is not None and r.index < r.pair_id]


@dataclass(frozen=True)
class BrokenPair:
    a: int
    b: int
    shifted_a: complex
    shifted_b: complex
    centroid_a: float
    centroid_b: float
    mirror_deviation: float


@dataclass
class PTReport:
    tol_im: float
    broken: list
    unbroken: list
    max_unbroken_imag: float
    max_unbroken_asymmetry: float
    conjugation_defect: float

    @property
    def count(self) -> int:
        return len(self.broken)


def detect_pt_breaking(s: SpectrumResult, p: ModelParams | None = None,
                       tol_im: float | None = None, pair_tol: float = 1e-6) -> PTReport:
    """Find complex-conjugate pairs of the loss-shifted spectrum ``E + i Gamma0``.

    Each broken pair is stored with the pointwise mismatch between
    ``|psi_a(x)|`` and ``|psi_b(-x)|``.  ``conjugation_defect`` is the largest
    distance from a shifted eigenvalue to the conjugate of its best partner.
    """
    p = p or s.params
    if s.mode != "full":
        raise ConfigError("PT analysis needs a full-mode spectrum")
    if not p.is_mirror_symmetric:
        raise ConfigError("PT analysis needs a mirror-symmetric potential (phi = pi/2 mod pi)")
    tol_im = 1e-4 * p.gamma0 if tol_im is None else tol_im
    z = s.eigenvalues + 1j * p.gamma0
    mag = np.abs(s.eigenvectors)
    cent = _mode_moments(s)[1]
    broken, used = [], set()
    defect = 0.0
    for j, zj in enumerate(z):
        dist = np.abs(z - np.conj(zj))
        if abs(zj.imag) <= tol_im:
            defect = max(defect, abs(zj.imag))
            continue
        dist[j] = np.inf
        k = int(np.argmin(dist))
        defect = max(defect, float(dist[k]))
        if dist[k] >= pair_tol * p.omega:
            raise UnpairedComplexEigenvalue(
                f"shifted eigenvalue {zj:.6g} at index {j} has no conjugate partner "
                f"(closest {dist[k]:.2e})", j)
        if j in used:
            continue
        used.update((j, k))
        a, b = sorted((j, k))
        mirror = float(np.max(np.abs(mag[:, a] - mag[::-1, b])))
        broken.append(BrokenPair(a, b, complex(z[a]), complex(z[b]),
                                 float(cent[a]), float(cent[b]), mirror))
    unbroken = [j for j in range(z.size) if j not in used]
    asym = max((float(np.max(np.abs(mag[:, j] - mag[::-1, j]))) for j in unbroken), default=0.0)
    imag = max((abs(z[j].imag) for j in unbroken), default=0.0)
    return PTReport(tol_im, broken, unbroken, float(imag), asym, defect)


def mark_pt(reports: list, pt: PTReport) -> list:
    flagged = {j for bp in pt.broken for j in (bp.a, bp.b)}
    out = []
    for r in reports:
        if r.index in flagged:
            partner = next(bp.b if bp.a == r.index else bp.a for bp in pt.broken
                           if r.index in (bp.a, bp.b))
            r = ModeReport(r.index, r.energy, r.centroid, r.spread, r.participation_ratio,
                           r.localized, partner, True, r.well, r.lobe_position,
                           r.folded_pr, r.barrier_action)
        out.append(r)
    return out


@dataclass
class SweepPoint:
    eta: float
    eigenvalues: np.ndarray
    reports: list
    pt: PTReport | None = None


@dataclass
class SweepResult:
    params: ModelParams
    mode: str
    k: int
    points: list
    failures: list = field(default_factory=list)  # (eta, stage, message)
    thresholds: ThresholdTable | None = None
    first_appearance: dict = field(default_factory=dict)

    @property
    def etas(self) -> np.ndarray:
        return np.array([pt.eta for pt in self.points])

    @property
    def complete(self) -> bool:
        return not self.failures


def _appearances(points: list, table: ThresholdTable | None, p: ModelParams,
                 e_cap: float | None) -> dict:
    out = {}
    for pt in points:
        for a, b, well in localized_pairs(pt.reports):
            e = 0.5 * (pt.eigenvalues[a].real + pt.eigenvalues[b].real)
            if well is None or well in out or (e_cap is not None and e > e_cap):
                continue
            entry = {"eta": pt.eta, "energy": float(e),
                     "energy_classical": float(classical_energy(e, p))}
            if table is not None and well < len(table):
                entry["eta_threshold"] = table[well].eta
                entry["energy_threshold"] = table[well].energy
            out[well] = entry
    return out


def sweep_eta(eta_list, p: ModelParams, grid: Grid | None = None, mode: str = "hermitian",
              k: int = 45, options: ClassifyOptions | None = None,
              e_cap: float | None = None) -> SweepResult:
    """Solve and classify at each coupling; per-point failures are recorded, not raised.

    ``first_appearance`` maps each side-well index to the smallest swept eta
    at which a localized pair sits in that well (below ``e_cap`` if given).
    """
    etas = [float(e) for e in eta_list]
    if any(b <= a for a, b in zip(etas, etas[1:])):
        raise ConfigError("eta values must be strictly increasing")
    grid = grid or Grid()
    points, failures = [], []
    for eta in etas:
        pe = p.with_(eta=eta)
        stage = "build"
        try:
            H = build_hamiltonian(grid, pe, mode)
            stage = "solve"
            s = solve_spectrum(H, k)
            stage = "classify"
            reports = classify_modes(s, pe, options)
            pt = None
            if mode == "full" and pe.is_mirror_symmetric:
                stage = "pt"
                pt = detect_pt_breaking(s, pe)
                reports = mark_pt(reports, pt)
        except WgOptomechError as exc:
            failures.append((eta, stage, f"{type(exc).__name__}: {exc}"))
            continue
        points.append(SweepPoint(eta, s.eigenvalues, reports, pt))
    table = thresholds(p, 8) if p.gamma0 > 0 else None
    result = SweepResult(p, mode, k, points, failures, table)
    result.first_appearance = _appearances(points, table, p, e_cap)
    return result


@dataclass
class Track:
    well: int
    level: int
    etas: np.ndarray
    energies: np.ndarray  # classical scale (eigenvalue + omega/2)
    fit_a: float
    fit_b: float
    relative_residual: float
    reference: np.ndarray
    mean_abs_deviation: float


def _collect(sweep: SweepResult) -> dict:
    data = {}
    for pt in sweep.points:
        per_well = {}
        for a, b, well in localized_pairs(pt.reports):
            if well is None:
                continue
            per_well.setdefault(well, []).append(0.5 * (pt.eigenvalues[a].real + pt.eigenvalues[b].real))
        for well, energies in per_well.items():
            for level, e in enumerate(sorted(energies)):
                data.setdefault((well, level), []).append((pt.eta, e))
    return data


def _fit_track(well, level, pts, p) -> Track:
    etas = np.array([e for e, _ in pts])
    energies = classical_energy(np.array([v for _, v in pts]), p)
    design = np.column_stack([1.0 / etas**2, np.ones_like(etas)])
    (a, b), *_ = np.linalg.lstsq(design, energies, rcond=None)
    resid = energies - design @ np.array([a, b])
    rel = float(np.sqrt(np.mean(resid**2)) / abs(np.mean(energies)))
    ref = np.array([localized_energy(well, e, p) for e in etas])
    mad = float(np.mean(np.abs(energies - ref)))
    return Track(well, level, etas, energies, float(a), float(b), rel, ref, mad)


def localized_energy_track(sweep: SweepResult, well: int | None = None, level: int = 0,
                           eta_range: tuple | None = None, min_points: int = 5):
    """Energy of localized pairs against eta with an ``a/eta^2 + b`` fit.

    Tracks are keyed by (side-well index, pair index within the well).  With
    ``well`` given, returns that single track or raises
    :class:`InsufficientTrack`; otherwise returns every track with at least
    ``min_points`` samples.
    """
    p = sweep.params
    data = _collect(sweep)
    if eta_range is not None:
        lo, hi = eta_range
        data = {key: [(e, v) for e, v in pts if lo <= e <= hi] for key, pts in data.items()}
    if well is not None:
        pts = data.get((well, level), [])
        if len(pts) < min_points:
            raise InsufficientTrack(
                f"well {well} level {level} found at {len(pts)} sweep points (< {min_points})")
        return _fit_track(well, level, pts, p)
    return [_fit_track(w, lv, pts, p) for (w, lv), pts in sorted(data.items())
            if len(pts) >= min_points]
