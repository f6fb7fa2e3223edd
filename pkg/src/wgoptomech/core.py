"""Model parameters and the optomechanical potential of the relative coordinate.

Energies are measured in units of the vibration quantum ``omega`` and the
coordinate ``x`` is the dimensionless relative displacement.  For the
symmetric excitation (``branch=+1``) at quarter-wavelength spacing
(``phi=pi/2``) the potential reads

    V(x) = omega x^2/2 + gamma0 cos(eta x) + i gamma0 sin(eta x).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .errors import ConfigError

TWO_PI = 2.0 * math.pi


def parse_branch(value) -> int:
    """Accept ``+``/``-``, ``+1``/``-1`` or ``sym``/``anti`` and return the sign."""
    if isinstance(value, (int, np.integer)) and int(value) in (1, -1):
        return int(value)
    text = str(value).strip().lower()
    if text in ("+", "+1", "1", "plus", "sym", "symmetric"):
        return 1
    if text in ("-", "-1", "minus", "anti", "antisymmetric"):
        return -1
    raise ConfigError(f"unknown branch {value!r}; use '+' or '-'")


@dataclass(frozen=True)
class ModelParams:
    omega: float = 1.0
    gamma0: float = 4.0
    phi: float = math.pi / 2
    eta: float = 0.0
    branch: int = 1

    def __post_init__(self):
        object.__setattr__(self, "branch", parse_branch(self.branch))
        object.__setattr__(self, "phi", float(self.phi) % TWO_PI)
        if not self.omega > 0:
            raise ConfigError(f"omega must be positive, got {self.omega}")
        if not self.gamma0 >= 0:
            raise ConfigError(f"gamma0 must be non-negative, got {self.gamma0}")
        if not self.eta >= 0:
            raise ConfigError(f"eta must be non-negative, got {self.eta}")

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return asdict(self)

    @property
    def coupling_phase(self) -> complex:
        """Complex prefactor ``c`` of the coupling term ``c * exp(i eta x)``."""
        return -1j * self.gamma0 * self.branch * np.exp(1j * self.phi)

    @property
    def is_mirror_symmetric(self) -> bool:
        """True when Re V is even in x, i.e. the coupling prefactor is real."""
        c = self.coupling_phase
        return abs(c.imag) <= 1e-12 * max(1.0, self.gamma0)


def potential_full(x, p: ModelParams):
    """Complex potential ``V(x)``; accepts scalars or arrays."""
    x = np.asarray(x, dtype=float)
    v = 0.5 * p.omega * x**2 + p.coupling_phase * np.exp(1j * p.eta * x)
    return v[()] if v.ndim == 0 else v


def potential_hermitian(x, p: ModelParams):
    """Real part of :func:`potential_full` (anti-Hermitian part dropped)."""
    return np.real(potential_full(x, p))


def potential_hermitian_derivative(x, p: ModelParams, order: int = 1):
    """First or second x-derivative of the Hermitian potential."""
    x = np.asarray(x, dtype=float)
    c = p.coupling_phase
    k = 1j * p.eta
    if order == 1:
        out = p.omega * x + np.real(c * k * np.exp(k * x))
    elif order == 2:
        out = p.omega + np.real(c * k**2 * np.exp(k * x))
    else:
        raise ValueError("order must be 1 or 2")
    return out[()] if out.ndim == 0 else out
