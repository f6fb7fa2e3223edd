"""Desk-scale self-checks run by ``wgoptomech validate``."""

from __future__ import annotations

import math

import numpy as np

from .analysis import detect_pt_breaking
from .core import ModelParams
from .errors import DecouplingViolation, WgOptomechError
from .fd_solver import convergence_study, solve
from .fock_solver import FockConfig, oracle_equivalence, smode_decoupling_check
from .quasiclassics import bs_phase, localized_energy, tan_roots, thresholds

ORACLE_LATTICE = [(eta, g) for eta in (0.0, 0.5, 1.0, 2.0, 3.0) for g in (1.0, 4.0)]


def _ladder(cfg) -> dict:
    grid = cfg.grid()
    base = ModelParams(omega=cfg.omega, gamma0=0.0)
    n = np.arange(10) * cfg.omega
    cases = {
        "bare": (base, "hermitian", n),
        "shifted": (base.with_(gamma0=cfg.gamma0), "hermitian", n + cfg.gamma0),
        "shifted_full": (base.with_(gamma0=cfg.gamma0), "full",
                         n + cfg.gamma0 - 1j * cfg.gamma0),
    }
    worst = {}
    for name, (p, mode, ref) in cases.items():
        ev = solve(p, 10, grid, mode=mode).eigenvalues[:10]
        worst[name] = float(np.max(np.abs(ev - ref)))
    return {"passed": max(worst.values()) < 1e-6 * cfg.omega, "max_error": worst}


def _oracle(cfg) -> dict:
    fock = FockConfig(cfg.fock_n_max)
    cases, ok = [], True
    for mode in ("hermitian", "full"):
        for eta, g in ORACLE_LATTICE:
            p = ModelParams(cfg.omega, g * cfg.omega, cfg.phi, eta, cfg.branch)
            r = oracle_equivalence(p, mode, 15, fock, cfg.grid())
            ok &= r.passed
            cases.append({"mode": mode, "eta": eta, "gamma0": p.gamma0,
                          "max_deviation": r.max_deviation, "passed": r.passed,
                          "diagnosis": r.diagnosis})
    failed = [c for c in cases if not c["passed"]]
    detail = "; ".join(f"{c['mode']} eta={c['eta']} gamma0={c['gamma0']}: {c['diagnosis']}"
                       for c in failed)
    return {"passed": bool(ok), "cases": cases, "detail": detail}


def _decoupling(cfg) -> dict:
    p = ModelParams(cfg.omega, cfg.gamma0, cfg.phi, 1.0, cfg.branch)
    try:
        r = smode_decoupling_check(p, FockConfig(min(cfg.fock_n_max, 20)))
        return {"passed": True, "max_deviation": r.max_deviation}
    except DecouplingViolation as exc:
        return {"passed": False, "max_deviation": exc.max_deviation, "detail": str(exc)}


def _convergence(cfg) -> dict:
    p = ModelParams(cfg.omega, cfg.gamma0, cfg.phi, 2.0, cfg.branch)
    rep = convergence_study(p, "full", 30, cfg.grid())
    return {"passed": rep.all_converged, "unconverged": rep.unconverged(),
            "domain_flags": rep.domain_flags,
            "max_error_estimate": float(np.max(rep.error_estimate)),
            "max_domain_shift": float(np.max(rep.domain_shift))}


def _pt(cfg) -> dict:
    p = ModelParams(cfg.omega, cfg.gamma0, math.pi / 2, 2.0, cfg.branch)
    pt = detect_pt_breaking(solve(p, 30, cfg.grid(), mode="full"), p)
    mirror = max((b.mirror_deviation for b in pt.broken), default=0.0)
    return {"passed": pt.conjugation_defect < 1e-8 * cfg.omega and mirror < 1e-3
            and pt.count > 0,
            "broken_pairs": pt.count, "conjugation_defect": pt.conjugation_defect,
            "max_mirror_deviation": mirror}


def _identities(cfg) -> dict:
    p = ModelParams(cfg.omega, cfg.gamma0 if cfg.gamma0 > 0 else 4.0)
    table = thresholds(p, 5)
    e_bar = max(abs(localized_energy(r.n, r.eta, p) - r.energy) / r.energy for r in table)
    defining = max(abs(p.gamma0 * r.eta**2 * math.cos(r.A) - p.omega) / p.omega for r in table)
    roots = tan_roots(6)
    approx = max(abs(a - (2 * math.pi * n + math.pi / 2 - 1 / (2 * math.pi * n + math.pi / 2)))
                 for n, a in enumerate(roots) if n > 0)
    bare = ModelParams(cfg.omega, 0.0)
    bs = max(abs(bs_phase(e, bare) - (e / cfg.omega - 0.5))
             for e in np.linspace(cfg.omega, 40 * cfg.omega, 40))
    return {"passed": e_bar < 1e-9 and defining < 1e-12 and approx < 2e-3 and bs < 1e-6,
            "inflection_vs_threshold": e_bar, "defining_relation": defining,
            "root_approximation": approx, "bare_phase": bs}


CHECKS = {
    "ladder": _ladder,
    "oracle_equivalence": _oracle,
    "smode_decoupling": _decoupling,
    "convergence": _convergence,
    "pt_structure": _pt,
    "analytic_identities": _identities,
}


def run_checks(cfg) -> dict:
    results = {}
    for name, fn in CHECKS.items():
        try:
            results[name] = fn(cfg)
        except WgOptomechError as exc:
            results[name] = {"passed": False, "detail": f"{type(exc).__name__}: {exc}"}
        results[name]["passed"] = bool(results[name]["passed"])
    return results
