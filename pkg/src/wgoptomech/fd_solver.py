"""Finite-difference Hamiltonian of the relative vibration and its spectrum.

The operator ``(omega/2)(-d^2/dx^2 - 1) - i gamma0 + V(x)`` is discretized with
the 3-point Laplacian on a symmetric uniform grid with Dirichlet walls, which
gives a complex-symmetric tridiagonal matrix.  Eigenvalues are reported with a
fourth-order deferred correction by default (see :func:`solve_spectrum`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .core import ModelParams, potential_full, potential_hermitian
from .errors import ConfigError, ConvergenceFailure, DomainTooSmall, GridTooCoarse

MODES = ("hermitian", "full")
CONTAINMENT_MARGIN = 5.0  # in units of omega
POINTS_PER_PERIOD = 20


def check_mode(mode: str) -> str:
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    return mode


@dataclass(frozen=True)
class Grid:
    """Uniform grid on ``[-x_max, x_max]``."""

    x_max: float = 15.0
    n_points: int = 3001

    def __post_init__(self):
        if not self.x_max > 0:
            raise ConfigError(f"x_max must be positive, got {self.x_max}")
        if int(self.n_points) != self.n_points or self.n_points < 3:
            raise ConfigError(f"n_points must be an integer >= 3, got {self.n_points}")
        object.__setattr__(self, "n_points", int(self.n_points))

    @property
    def x_min(self) -> float:
        return -self.x_max

    @property
    def spacing(self) -> float:
        return 2.0 * self.x_max / (self.n_points - 1)

    def points(self) -> np.ndarray:
        return np.linspace(-self.x_max, self.x_max, self.n_points)

    def refined(self, factor: int) -> "Grid":
        return Grid(self.x_max, (self.n_points - 1) * factor + 1)

    def enlarged(self, extra: float) -> "Grid":
        """Wider domain with the same spacing (``extra`` rounded to whole cells)."""
        cells = int(round(extra / self.spacing))
        return Grid(self.x_max + cells * self.spacing, self.n_points + 2 * cells)

    def max_resolved_spacing(self, eta: float) -> float:
        return 2.0 * math.pi / (max(eta, 1.0) * POINTS_PER_PERIOD)

    def contained_energy(self, omega: float) -> float:
        """Largest eigenvalue the harmonic wall is trusted to contain."""
        return omega * self.x_max**2 / 2.0 - CONTAINMENT_MARGIN * omega

    def check(self, p: ModelParams, e_max: float | None = None) -> None:
        h_lim = self.max_resolved_spacing(p.eta)
        if self.spacing > h_lim * (1 + 1e-12):
            raise GridTooCoarse(
                f"grid spacing {self.spacing:.4g} exceeds {h_lim:.4g} "
                f"(needs {POINTS_PER_PERIOD} points per coupling period at eta={p.eta})"
            )
        if e_max is not None and e_max > self.contained_energy(p.omega):
            raise DomainTooSmall(
                f"x_max={self.x_max} contains energies up to "
                f"{self.contained_energy(p.omega):.4g}, requested {e_max:.4g}"
            )


@dataclass(frozen=True)
class HamiltonianMatrix:
    """Complex-symmetric tridiagonal matrix with constant off-diagonal."""

    diagonal: np.ndarray
    offdiagonal: float
    grid: Grid
    params: ModelParams
    mode: str

    @property
    def dimension(self) -> int:
        return self.diagonal.size

    @property
    def is_hermitian(self) -> bool:
        return not np.iscomplexobj(self.diagonal) or not np.any(self.diagonal.imag)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.diagonal * v
        out[1:] += self.offdiagonal * v[:-1]
        out[:-1] += self.offdiagonal * v[1:]
        return out

    def to_dense(self) -> np.ndarray:
        n = self.dimension
        off = np.full(n - 1, self.offdiagonal)
        return np.diag(self.diagonal) + np.diag(off, 1) + np.diag(off, -1)


def build_hamiltonian(grid: Grid, p: ModelParams, mode: str = "full",
                      e_max: float | None = None) -> HamiltonianMatrix:
    """Assemble the discretized Hamiltonian.

    ``e_max`` is the top of the requested spectral window; when given, the
    soft-wall containment invariant is checked against it.
    """
    check_mode(mode)
    grid.check(p, e_max)
    x = grid.points()
    h = grid.spacing
    kinetic = p.omega / h**2 - p.omega / 2.0
    if mode == "full":
        diag = kinetic + potential_full(x, p) - 1j * p.gamma0
    else:
        diag = kinetic + potential_hermitian(x, p)
    return HamiltonianMatrix(np.asarray(diag), -p.omega / (2.0 * h**2), grid, p, mode)


@dataclass(frozen=True)
class SpectrumResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    grid: Grid
    params: ModelParams
    mode: str
    raw_eigenvalues: np.ndarray = field(repr=False)
    corrected: bool = True

    def __len__(self):
        return self.eigenvalues.size

    @property
    def x(self) -> np.ndarray:
        return self.grid.points()

    def density(self, index: int) -> np.ndarray:
        return np.abs(self.eigenvectors[:, index]) ** 2

    def centroids(self) -> np.ndarray:
        rho = np.abs(self.eigenvectors) ** 2
        return self.grid.spacing * (self.x @ rho)


def _laplacian(v: np.ndarray, h: float) -> np.ndarray:
    out = -2.0 * v
    out[1:] += v[:-1]
    out[:-1] += v[1:]
    return out / h**2


def fourth_order_shift(vectors: np.ndarray, h: float, omega: float) -> np.ndarray:
    """Leading truncation error of the 3-point kinetic term for each column.

    The exact kinetic operator differs from the discrete one by
    ``(omega h^2/24) d^4/dx^4 + O(h^4)``; the expectation value uses the
    bilinear (unconjugated) form so it is valid for complex-symmetric matrices.
    """
    out = np.empty(vectors.shape[1], dtype=complex)
    for j in range(vectors.shape[1]):
        v = vectors[:, j]
        lv = _laplacian(v, h)
        out[j] = (omega * h**2 / 24.0) * (lv @ lv) / (v @ v)
    return out


def _inverse_iteration(H: HamiltonianMatrix, lam: complex, v: np.ndarray,
                       max_iter: int = 8, tol: float = 1e-10):
    n = H.dimension
    ab = np.zeros((3, n), dtype=complex)
    ab[0, 1:] = H.offdiagonal
    ab[2, :-1] = H.offdiagonal
    scale = np.max(np.abs(H.diagonal)) + 2.0 * abs(H.offdiagonal)
    v = v / np.linalg.norm(v)
    for _ in range(max_iter):
        ab[1] = H.diagonal - lam
        try:
            y = sla.solve_banded((1, 1), ab, v, check_finite=False)
        except np.linalg.LinAlgError:
            # shift hit the eigenvalue to working precision
            return lam, v, 0.0
        v = y / np.linalg.norm(y)
        hv = H.matvec(v)
        lam = (v @ hv) / (v @ v)
        res = np.linalg.norm(hv - lam * v)
        if res <= tol * scale:
            return lam, v, res / scale
    return lam, v, res / scale


def _projected_full(H: HamiltonianMatrix, k: int, basis_size: int):
    """Lowest-Re eigenpairs of a complex-symmetric tridiagonal matrix.

    Projects onto the lowest ``basis_size`` eigenvectors of the real part,
    diagonalizes the small complex-symmetric problem densely, then polishes
    each pair by shifted inverse iteration on the full tridiagonal.
    """
    n = H.dimension
    m = min(n, basis_size)
    off = np.full(n - 1, H.offdiagonal)
    wr, q = sla.eigh_tridiagonal(H.diagonal.real, off, select="i",
                                 select_range=(0, m - 1), check_finite=False)
    small = np.diag(wr).astype(complex) + 1j * (q.T @ (H.diagonal.imag[:, None] * q))
    w, c = sla.eig(small, check_finite=False)
    order = np.argsort(w.real, kind="stable")[:k]
    vals = np.empty(order.size, dtype=complex)
    vecs = np.empty((n, order.size), dtype=complex)
    for out_j, j in enumerate(order):
        lam, v, res = _inverse_iteration(H, w[j], q @ c[:, j])
        drift = abs(lam - w[j])
        if res > 1e-9 or drift > 1e-6 * (1.0 + abs(w[j])):
            raise ConvergenceFailure(
                f"eigenpair {out_j} did not converge (residual {res:.2e}, drift {drift:.2e})",
                index=out_j,
            )
        vals[out_j] = lam
        vecs[:, out_j] = v
    return vals, vecs


def _order(vals: np.ndarray, vecs: np.ndarray, x: np.ndarray, h: float) -> np.ndarray:
    """Sort by Re, break near-ties by Im then by centroid."""
    cent = h * (x @ (np.abs(vecs) ** 2)) / (h * np.sum(np.abs(vecs) ** 2, axis=0))
    idx = list(np.argsort(vals.real, kind="stable"))
    groups, current = [], [idx[0]]
    for j in idx[1:]:
        ref = vals[current[-1]].real
        if abs(vals[j].real - ref) <= 1e-9 * max(1.0, abs(ref)):
            current.append(j)
        else:
            groups.append(current)
            current = [j]
    groups.append(current)
    out = []
    for g in groups:
        out.extend(sorted(g, key=lambda j: (round(vals[j].imag, 9), cent[j])))
    return np.array(out, dtype=int)


def _normalize(vecs: np.ndarray, h: float) -> np.ndarray:
    vecs = vecs / np.sqrt(h * np.sum(np.abs(vecs) ** 2, axis=0))
    peak = np.argmax(np.abs(vecs), axis=0)
    phase = vecs[peak, np.arange(vecs.shape[1])]
    return vecs * (np.abs(phase) / phase)


def solve_spectrum(H: HamiltonianMatrix, k: int, *, correction: bool = True,
                   method: str = "auto", basis_size: int | None = None,
                   check_domain: bool = True) -> SpectrumResult:
    """Return the ``k`` eigenpairs of smallest real part.

    ``correction`` adds the fourth-order shift of :func:`fourth_order_shift`
    to each eigenvalue (eigenvectors are unchanged), lifting the 3-point
    scheme from O(h^2) to O(h^4) eigenvalue accuracy.  ``method`` selects the
    full-mode eigensolver: ``"projected"`` (default) or ``"dense"`` (LAPACK
    on the full matrix, for small grids and cross-checks).  In full mode the
    result may hold ``k + 1`` states so a conjugate pair is never split.
    """
    n = H.dimension
    if not 1 <= k <= n:
        raise ConfigError(f"requested {k} eigenpairs from a {n}-point grid")
    h = H.grid.spacing
    x = H.grid.points()
    if H.mode == "hermitian":
        off = np.full(n - 1, H.offdiagonal)
        vals, vecs = sla.eigh_tridiagonal(H.diagonal.real, off, select="i",
                                          select_range=(0, k - 1), check_finite=False)
        vals = vals.astype(complex)
        vecs = vecs.astype(complex)
    else:
        k_ext = min(n, k + 2)
        if method == "dense" or n <= 400:
            w, v = sla.eig(H.to_dense(), check_finite=False)
            sel = np.argsort(w.real, kind="stable")[:k_ext]
            vals, vecs = w[sel], v[:, sel]
        elif method in ("auto", "projected"):
            m = basis_size or max(4 * k_ext, k_ext + 150)
            try:
                vals, vecs = _projected_full(H, k_ext, m)
            except ConvergenceFailure:
                if m >= n:
                    raise
                vals, vecs = _projected_full(H, k_ext, 2 * m)
        else:
            raise ConfigError(f"unknown method {method!r}")
    order = _order(vals, vecs, x, h)
    vals, vecs = vals[order], vecs[:, order]
    keep = k
    if H.mode == "full" and vals.size > k:
        tail = vals[k - 1].real
        if abs(vals[k].real - tail) <= 1e-9 * max(1.0, abs(tail)):
            keep = k + 1
    vals, vecs = vals[:keep], _normalize(vecs[:, :keep], h)
    raw = vals.copy()
    if correction:
        vals = vals + fourth_order_shift(vecs, h, H.params.omega)
    if H.mode == "hermitian":
        vals = vals.real.astype(complex)
        raw = raw.real.astype(complex)
    if check_domain:
        top = np.max(vals.real)
        if top > H.grid.contained_energy(H.params.omega):
            raise DomainTooSmall(
                f"eigenvalue {top:.4g} above the containment limit "
                f"{H.grid.contained_energy(H.params.omega):.4g} for x_max={H.grid.x_max}"
            )
    return SpectrumResult(vals, vecs, H.grid, H.params, H.mode, raw, correction)


def solve(p: ModelParams, k: int, grid: Grid | None = None, mode: str = "full",
          **kwargs) -> SpectrumResult:
    """Convenience wrapper: build on ``grid`` (default grid if omitted) and solve."""
    grid = grid or Grid()
    return solve_spectrum(build_hamiltonian(grid, p, mode), k, **kwargs)


@dataclass
class ConvergenceReport:
    params: ModelParams
    mode: str
    corrected: bool
    grids: dict
    energies: dict
    error_estimate: np.ndarray
    extrapolated: np.ndarray
    observed_order: np.ndarray
    domain_shift: np.ndarray
    converged: np.ndarray
    domain_flags: list
    tolerance: float

    @property
    def all_converged(self) -> bool:
        return bool(np.all(self.converged)) and not self.domain_flags

    def unconverged(self) -> list:
        return [int(j) for j in np.flatnonzero(~self.converged)]


def _match(ref: np.ndarray, other: np.ndarray) -> np.ndarray:
    out = np.empty_like(ref)
    pool = list(range(other.size))
    for j, z in enumerate(ref):
        best = min(pool, key=lambda i: abs(other[i] - z))
        out[j] = other[best]
        pool.remove(best)
    return out


def convergence_study(p: ModelParams, mode: str, k: int, grid: Grid | None = None, *,
                      correction: bool = True, tolerance: float = 1e-4,
                      extra_domain: float = 2.0) -> ConvergenceReport:
    """Re-solve on h, h/2, h/4 and on a wider domain; estimate per-level errors.

    The Richardson estimate for the base grid is ``|E(h) - E(h/2)| * 2^q/(2^q-1)``
    with ``q = 4`` for corrected eigenvalues and ``q = 2`` for the raw scheme.
    Levels above the containment limit are listed in ``domain_flags``.
    """
    grid = grid or Grid()
    check_mode(mode)
    grids = {
        "h": grid,
        "h/2": grid.refined(2),
        "h/4": grid.refined(4),
        "wide": grid.enlarged(extra_domain),
    }
    energies = {}
    for label, g in grids.items():
        res = solve_spectrum(build_hamiltonian(g, p, mode), k,
                             correction=correction, check_domain=False)
        energies[label] = res.eigenvalues[:k]
    base = energies["h"]
    e2 = _match(base, energies["h/2"])
    e4 = _match(base, energies["h/4"])
    wide = _match(base, energies["wide"])
    q = 4 if correction else 2
    gain = 2.0**q
    d1 = np.abs(base - e2)
    d2 = np.abs(e2 - e4)
    est = d1 * gain / (gain - 1.0)
    extrap = e4 + (e4 - e2) / (gain - 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        order = np.log2(d1 / d2)
    shift = np.abs(base - wide)
    limit = grid.contained_energy(p.omega)
    flags = [int(j) for j in np.flatnonzero(base.real > limit)]
    converged = (est < tolerance * p.omega) & (shift < tolerance * p.omega)
    converged[flags] = False
    return ConvergenceReport(p, mode, correction, grids, energies, est, extrap,
                             order, shift, converged, flags, tolerance)
