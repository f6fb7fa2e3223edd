"""Command-line front end: ``spectrum``, ``sweep``, ``phasemap``, ``thresholds``, ``validate``."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (classify_modes, detect_pt_breaking, localized_energy_track,
                       localized_pairs, mark_pt, sweep_eta)
from .core import ModelParams, parse_branch, potential_full
from .errors import ConfigError, WgOptomechError
from .fd_solver import MODES, Grid, build_hamiltonian, solve_spectrum
from .quasiclassics import phase_map, thresholds

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3
FORMATS = ("csv", "json", "svg")


@dataclass
class RunConfig:
    omega: float = 1.0
    gamma0: float = 4.0
    phi: float = math.pi / 2
    eta: float = 2.0
    branch: str = "+"
    x_max: float = 15.0
    n_points: int = 3001
    mode: str = "hermitian"
    k: int = 45
    eta_start: float = 0.0
    eta_stop: float = 6.0
    eta_step: float = 0.05
    eta_list: list | None = None
    e_min: float = -5.0
    e_max: float = 40.0
    n_eta: int = 300
    n_energy: int = 300
    vectors: list | None = None
    fock_n_max: int = 200
    out: str = "out"
    formats: list = field(default_factory=lambda: ["csv"])
    seed: int = 0  # reserved; the pipeline is deterministic

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)

    def params(self, eta: float | None = None) -> ModelParams:
        return ModelParams(self.omega, self.gamma0, self.phi,
                           self.eta if eta is None else eta, parse_branch(self.branch))

    def grid(self) -> Grid:
        return Grid(self.x_max, self.n_points)

    def sweep_etas(self) -> list:
        if self.eta_list is not None:
            return [float(e) for e in self.eta_list]
        if self.eta_step <= 0 or self.eta_stop < self.eta_start:
            raise ConfigError("sweep needs eta_step > 0 and eta_stop >= eta_start")
        n = int(math.floor((self.eta_stop - self.eta_start) / self.eta_step + 1e-9)) + 1
        return [round(self.eta_start + i * self.eta_step, 12) for i in range(n)]

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        bad = set(self.formats) - set(FORMATS)
        if bad:
            raise ConfigError(f"unknown formats: {sorted(bad)}")
        if self.k < 1 or self.n_eta < 2 or self.n_energy < 2:
            raise ConfigError("k >= 1, n_eta >= 2 and n_energy >= 2 required")
        if self.e_max <= self.e_min:
            raise ConfigError("e_max must exceed e_min")
        grid = self.grid()
        etas = [self.eta] + self.sweep_etas()
        for eta in (min(etas), max(etas)):
            grid.check(self.params(eta), self.e_max)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return "-1"
    if isinstance(v, str):
        return v
    return "%.17g" % float(v)


def write_csv(path: Path, header: list, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, complex):
        return [v.real, v.imag]
    raise TypeError(f"not serializable: {type(v)}")


class Svg:
    """Tiny static SVG writer: rectangles, polylines and circles in data coordinates."""

    def __init__(self, xlim, ylim, width=640, height=480, pad=40):
        self.xlim, self.ylim = xlim, ylim
        self.w, self.h, self.pad = width, height, pad
        self.items = []

    def _px(self, x, y):
        x0, x1 = self.xlim
        y0, y1 = self.ylim
        px = self.pad + (x - x0) / (x1 - x0) * (self.w - 2 * self.pad)
        py = self.h - self.pad - (y - y0) / (y1 - y0) * (self.h - 2 * self.pad)
        return px, py

    def rect(self, x, y, dx, dy, gray):
        (a, b), (c, d) = self._px(x, y + dy), self._px(x + dx, y)
        g = int(round(255 * min(max(gray, 0.0), 1.0)))
        self.items.append(f'<rect x="{a:.2f}" y="{b:.2f}" width="{c - a + 0.5:.2f}" '
                          f'height="{d - b + 0.5:.2f}" fill="rgb({g},{g},{g})"/>')

    def polyline(self, xs, ys, color="black", width=1.0):
        pts = " ".join("%.2f,%.2f" % self._px(x, y) for x, y in zip(xs, ys)
                       if np.isfinite(x) and np.isfinite(y))
        self.items.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                          f'stroke-width="{width}"/>')

    def dot(self, x, y, color="black", r=1.5):
        px, py = self._px(x, y)
        self.items.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="{r}" fill="{color}"/>')

    def save(self, path: Path, xlabel="", ylabel=""):
        frame = self._px(self.xlim[0], self.ylim[1]) + self._px(self.xlim[1], self.ylim[0])
        body = "\n".join(self.items)
        text = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.w}" height="{self.h}">\n'
                f'<rect x="{frame[0]:.2f}" y="{frame[1]:.2f}" width="{frame[2] - frame[0]:.2f}" '
                f'height="{frame[3] - frame[1]:.2f}" fill="none" stroke="black"/>\n{body}\n'
                f'<text x="{self.w / 2}" y="{self.h - 8}" text-anchor="middle">{xlabel}</text>\n'
                f'<text x="12" y="{self.h / 2}" transform="rotate(-90 12 {self.h / 2})" '
                f'text-anchor="middle">{ylabel}</text>\n</svg>\n')
        path.write_text(text, encoding="utf-8")


def _metadata(cfg: RunConfig, command: str) -> dict:
    return {"command": command, "config": cfg.as_dict(), "package": "wgoptomech",
            "version": __version__}


def cmd_spectrum(cfg: RunConfig, out: Path) -> int:
    p = cfg.params()
    s = solve_spectrum(build_hamiltonian(cfg.grid(), p, cfg.mode, cfg.e_max), cfg.k)
    reports = classify_modes(s, p)
    if cfg.mode == "full" and p.is_mirror_symmetric:
        reports = mark_pt(reports, detect_pt_breaking(s, p))
    write_csv(out / "eigenvalues.csv",
              ["index", "re_E_over_omega", "im_E_over_omega", "centroid", "pr",
               "localized", "pair_id", "pt_broken"],
              ([r.index, r.energy.real / p.omega, r.energy.imag / p.omega, r.centroid,
                r.participation_ratio, r.localized, r.pair_id, r.pt_broken] for r in reports))
    idx = cfg.vectors if cfg.vectors is not None else list(range(min(len(s), 10)))
    idx = [i for i in idx if 0 <= i < len(s)]
    x = s.x
    dens = np.abs(s.eigenvectors[:, idx]) ** 2
    write_csv(out / "eigenvectors.csv", ["x"] + [f"psi2_{i}" for i in idx],
              ([x[j]] + list(dens[j]) for j in range(x.size)))
    v = potential_full(x, p)
    write_csv(out / "potential.csv", ["x", "re_V", "im_V"],
              zip(x, v.real / p.omega, v.imag / p.omega))
    if "json" in cfg.formats:
        write_json(out / "spectrum.json", {
            "eigenvalues": [[r.energy.real, r.energy.imag] for r in reports],
            "modes": [dataclasses.asdict(r) for r in reports]})
    if "svg" in cfg.formats:
        top = float(np.max(s.eigenvalues.real)) + 2
        fig = Svg((x[0], x[-1]), (min(float(np.min(v.real)), s.eigenvalues[0].real) - 1, top))
        fig.polyline(x, v.real - 0.5 * p.omega, color="green")
        scale = 0.8 * p.omega / max(float(np.max(dens)), 1e-300) if dens.size else 0.0
        for col, i in enumerate(idx):
            color = "red" if reports[i].localized else "black"
            fig.polyline(x, s.eigenvalues[i].real + scale * dens[:, col], color=color, width=0.7)
        fig.save(out / "spectrum.svg", "x", "E / omega")
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, out: Path) -> int:
    p = cfg.params()
    sw = sweep_eta(cfg.sweep_etas(), p, cfg.grid(), cfg.mode, cfg.k, e_cap=cfg.e_max)
    rows = []
    for pt in sw.points:
        for r in pt.reports:
            rows.append([pt.eta, r.index, r.energy.real / p.omega, r.energy.imag / p.omega,
                         r.centroid, r.participation_ratio, r.localized, r.pair_id])
    write_csv(out / "sweep.csv", ["eta", "mode_index", "re_E", "im_E", "centroid", "pr",
                                  "localized", "pair_id"], rows)
    _write_thresholds(p, out, cfg)
    tracks = localized_energy_track(sw)
    write_csv(out / "tracks.csv", ["well", "level", "eta", "re_E", "E_classical", "E_bar"],
              ([t.well, t.level, e, ec - 0.5 * p.omega, ec, ref]
               for t in tracks for e, ec, ref in zip(t.etas, t.energies, t.reference)))
    if sw.failures:
        write_csv(out / "failures.csv", ["eta", "stage", "message"], sw.failures)
    if "json" in cfg.formats:
        write_json(out / "sweep.json", {
            "first_appearance": {str(k): v for k, v in sw.first_appearance.items()},
            "failures": sw.failures,
            "tracks": [{"well": t.well, "level": t.level, "a": t.fit_a, "b": t.fit_b,
                        "relative_residual": t.relative_residual,
                        "mean_abs_deviation": t.mean_abs_deviation} for t in tracks]})
    if "svg" in cfg.formats and sw.points:
        etas = sw.etas
        fig = Svg((etas[0], etas[-1]), (cfg.e_min, cfg.e_max))
        for pt in sw.points:
            for r in pt.reports:
                if cfg.e_min <= r.energy.real <= cfg.e_max:
                    fig.dot(pt.eta, r.energy.real, "red" if r.localized else "black", 1.0)
        for t in tracks:
            fig.polyline(t.etas, t.energies - 0.5 * p.omega, color="blue")
        fig.save(out / "sweep.svg", "eta", "E / omega")
    return EXIT_OK


def _write_thresholds(p: ModelParams, out: Path, cfg: RunConfig, n_max: int = 8) -> None:
    if p.gamma0 <= 0:
        write_csv(out / "thresholds.csv", ["n", "A_n", "eta_n", "E_n", "approx_eta_n",
                                           "approx_E_n"], [])
        return
    table = thresholds(p, n_max)
    write_csv(out / "thresholds.csv", ["n", "A_n", "eta_n", "E_n", "approx_eta_n", "approx_E_n"],
              ([r.n, r.A, r.eta, r.energy / p.omega, r.approx_eta, r.approx_energy / p.omega]
               for r in table))
    if "json" in cfg.formats:
        write_json(out / "thresholds.json", [dataclasses.asdict(r) for r in table])


def cmd_thresholds(cfg: RunConfig, out: Path) -> int:
    _write_thresholds(cfg.params(), out, cfg)
    return EXIT_OK


def cmd_phasemap(cfg: RunConfig, out: Path) -> int:
    p = cfg.params()
    etas = np.linspace(cfg.eta_start, cfg.eta_stop, cfg.n_eta)
    es = np.linspace(cfg.e_min, cfg.e_max, cfg.n_energy)
    pm = phase_map(etas, es, p)
    vals, mask = pm.values, pm.mask
    write_csv(out / "phasemap.csv", ["eta", "E", "frac_n", "masked"],
              ([etas[i], es[j], 0.0 if mask[i, j] else vals[i, j], mask[i, j]]
               for i in range(etas.size) for j in range(es.size)))
    ridge_rows = [[r.kind, r.eta, r.energy, r.line] for r in pm.ridges]
    ridge_rows += [["endpoint", e, en, line] for e, en, line in pm.cut_endpoints]
    write_csv(out / "ridges.csv", ["kind", "eta", "E", "line"], ridge_rows)
    if "json" in cfg.formats:
        write_json(out / "phasemap.json", {"cut_endpoints": pm.cut_endpoints,
                                           "ridge_count": len(pm.ridges)})
    if "svg" in cfg.formats:
        fig = Svg((etas[0], etas[-1]), (es[0], es[-1]))
        de, dE = etas[1] - etas[0], es[1] - es[0]
        for i in range(etas.size):
            for j in range(es.size):
                gray = 1.0 if mask[i, j] else 1.0 - vals[i, j]
                fig.rect(etas[i] - de / 2, es[j] - dE / 2, de, dE, gray)
        fig.save(out / "heatmap.svg", "eta", "E / omega")
    return EXIT_OK


def cmd_validate(cfg: RunConfig, out: Path) -> int:
    from .validation import run_checks

    results = run_checks(cfg)
    write_json(out / "validate.json", results)
    failed = [name for name, r in results.items() if not r["passed"]]
    for name in failed:
        print(f"FAIL {name}: {results[name].get('detail', '')}", file=sys.stderr)
    return EXIT_OK if not failed else EXIT_VALIDATION


COMMANDS = {
    "spectrum": cmd_spectrum,
    "sweep": cmd_sweep,
    "phasemap": cmd_phasemap,
    "thresholds": cmd_thresholds,
    "validate": cmd_validate,
}

OVERRIDES = {
    "eta": ("--eta", float), "gamma0": ("--gamma0", float), "phi": ("--phi", float),
    "branch": ("--branch", str), "mode": ("--mode", str), "x_max": ("--x-max", float),
    "n_points": ("--n-points", int), "out": ("--out", str),
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wgoptomech", description=__doc__)
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="JSON file with flat RunConfig keys")
    for key, (flag, typ) in OVERRIDES.items():
        ap.add_argument(flag, dest=key, type=typ, default=None)
    ap.add_argument("--format", dest="formats", default=None,
                    help="comma-separated subset of csv,json,svg")
    return ap


def load_config(args) -> RunConfig:
    data = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        if isinstance(data.get("config"), dict):
            data = dict(data["config"])  # a run-metadata.json echo
    for key in OVERRIDES:
        val = getattr(args, key)
        if val is not None:
            data[key] = val
    if args.formats is not None:
        data["formats"] = [f for f in args.formats.split(",") if f]
    try:
        cfg = RunConfig.from_dict(data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    cfg.validate()
    cfg.params()
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        code = COMMANDS[args.command](cfg, out)
    except WgOptomechError as exc:
        print(f"solver error in {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    write_json(out / "run-metadata.json", _metadata(cfg, args.command))
    return code


if __name__ == "__main__":
    sys.exit(main())
