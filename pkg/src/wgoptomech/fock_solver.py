"""Truncated phonon-Fock representation of the relative-motion Hamiltonian.

Serves as an independent check on the real-space solver: the same operator is
built from ``Omega a^dag a`` and the displacement ``exp(i eta X)`` in a
harmonic-oscillator basis with ``n_max`` levels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .core import ModelParams
from .errors import ConfigError, DecouplingViolation
from .fd_solver import MODES, Grid, check_mode, solve


@dataclass(frozen=True)
class FockConfig:
    n_max: int = 200

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 2:
            raise ConfigError(f"n_max must be an integer >= 2, got {self.n_max}")
        object.__setattr__(self, "n_max", int(self.n_max))

    @property
    def reliable_count(self) -> int:
        """Levels trusted against truncation (lowest quarter of the basis)."""
        return max(1, self.n_max // 4)


def position_matrix(n_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal and off-diagonal of ``X = (a + a^dag)/sqrt(2)``."""
    return np.zeros(n_max), np.sqrt(np.arange(1, n_max) / 2.0)


def displacement_matrix(eta: float, cfg: FockConfig) -> np.ndarray:
    """``exp(i eta X)`` from the eigendecomposition of the truncated ``X``."""
    if eta < 0:
        raise ConfigError(f"eta must be non-negative, got {eta}")
    d, e = position_matrix(cfg.n_max)
    xs, u = sla.eigh_tridiagonal(d, e)
    return (u * np.exp(1j * eta * xs)) @ u.T


def build_fock_hamiltonian(p: ModelParams, cfg: FockConfig, mode: str = "full") -> np.ndarray:
    check_mode(mode)
    n = np.arange(cfg.n_max)
    coupling = p.coupling_phase * displacement_matrix(p.eta, cfg)
    h = np.diag(p.omega * n).astype(complex)
    if mode == "full":
        return h - 1j * p.gamma0 * np.eye(cfg.n_max) + coupling
    return h + 0.5 * (coupling + coupling.conj().T)


def _sort(vals: np.ndarray) -> np.ndarray:
    return vals[np.lexsort((vals.imag, vals.real))]


def fock_spectrum(p: ModelParams, cfg: FockConfig, mode: str = "full",
                  k: int | None = None) -> np.ndarray:
    """Eigenvalues sorted by (Re, Im).

    By default only the lowest ``n_max/4`` levels are returned, the rest being
    dominated by truncation error; pass ``k`` explicitly to override.
    """
    h = build_fock_hamiltonian(p, cfg, mode)
    if mode == "hermitian":
        vals = sla.eigvalsh(h).astype(complex)
    else:
        vals = _sort(sla.eigvals(h))
    return vals[: (k if k is not None else cfg.reliable_count)]


def nearest_deviation(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """For each entry of ``a``, the distance to its greedy nearest match in ``b``."""
    pool = list(range(b.size))
    out = np.empty(a.size)
    for j, z in enumerate(a):
        best = min(pool, key=lambda i: abs(b[i] - z))
        out[j] = abs(b[best] - z)
        pool.remove(best)
    return out


@dataclass
class OracleReport:
    params: ModelParams
    mode: str
    n_max: int
    k: int
    fd: np.ndarray
    fock: np.ndarray
    deviation: np.ndarray
    truncation_change: float
    tolerance: float
    diagnosis: str

    @property
    def passed(self) -> bool:
        return bool(np.max(self.deviation) < self.tolerance)

    @property
    def max_deviation(self) -> float:
        return float(np.max(self.deviation))


def oracle_equivalence(p: ModelParams, mode: str = "full", k: int = 15,
                       cfg: FockConfig | None = None, grid: Grid | None = None,
                       tolerance: float = 1e-3) -> OracleReport:
    """Compare the lowest ``k`` eigenvalues of the grid and Fock representations.

    The Fock run is repeated with 1.25 ``n_max`` so a failure can be attributed
    to basis truncation rather than to the grid solver.
    """
    cfg = cfg or FockConfig()
    m = min(k + 2, cfg.n_max)
    fk = fock_spectrum(p, cfg, mode, k=m)
    wider = fock_spectrum(p, FockConfig(int(cfg.n_max * 1.25) + 1), mode, k=m)
    fd = solve(p, k, grid, mode=mode).eigenvalues[:k]
    dev = nearest_deviation(fd, fk)
    trunc = float(np.max(nearest_deviation(fk[:k], wider)))
    tol = tolerance * p.omega
    notes = []
    if k > cfg.reliable_count:
        notes.append(f"requested {k} levels exceeds the truncation-safe count "
                     f"{cfg.reliable_count} for n_max={cfg.n_max}")
    if trunc > 0.1 * tol:
        notes.append(f"Fock truncation: enlarging n_max moves levels by {trunc:.3g}")
    if np.max(dev) >= tol and not notes:
        notes.append("grid solver disagreement not explained by truncation")
    return OracleReport(p, mode, cfg.n_max, k, fd, fk[:k], dev, trunc, tol,
                        "; ".join(notes) or "ok")


@dataclass
class DecouplingReport:
    params: ModelParams
    n_max: int
    checked: int
    max_deviation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_deviation < self.tolerance


def two_mode_hamiltonian(p: ModelParams, cfg: FockConfig, mode: str = "full",
                         inject_coupling: float = 0.0) -> np.ndarray:
    """Hamiltonian on the ``s (x) d`` product basis.

    ``inject_coupling`` adds ``c X_s (x) X_d``, which breaks the decoupling of
    the symmetric mode; it exists only as a negative control.
    """
    nm = cfg.n_max
    eye = np.eye(nm)
    hd = build_fock_hamiltonian(p, cfg, mode)
    ladder = np.diag(p.omega * np.arange(nm))
    h = np.kron(ladder, eye) + np.kron(eye, hd)
    if inject_coupling:
        d, e = position_matrix(nm)
        x = np.diag(e, 1) + np.diag(e, -1) + np.diag(d)
        h = h + inject_coupling * np.kron(x, x)
    return h


def smode_decoupling_check(p: ModelParams, cfg: FockConfig | None = None,
                           mode: str = "full", tolerance: float = 1e-6,
                           inject_coupling: float = 0.0) -> DecouplingReport:
    """Verify that the two-mode spectrum is ``{m Omega + E_d}``.

    Raises :class:`DecouplingViolation` when the lowest quarter of the
    two-mode spectrum deviates from the sum spectrum by more than ``tolerance``.
    """
    cfg = cfg or FockConfig(20)
    if cfg.n_max > 30:
        raise ConfigError(f"two-mode check needs n_max <= 30, got {cfg.n_max}")
    if mode not in MODES:
        check_mode(mode)
    two = _sort(sla.eigvals(two_mode_hamiltonian(p, cfg, mode, inject_coupling)))
    ed = sla.eigvals(build_fock_hamiltonian(p, cfg, mode))
    ref = (p.omega * np.arange(cfg.n_max)[:, None] + ed[None, :]).ravel()
    q = max(1, cfg.n_max**2 // 4)
    dev = float(np.max(nearest_deviation(two[:q], ref)))
    report = DecouplingReport(p, cfg.n_max, q, dev, tolerance * p.omega)
    if not report.passed:
        raise DecouplingViolation(
            f"two-mode spectrum deviates from the decoupled sum by {dev:.3g}", dev)
    return report
