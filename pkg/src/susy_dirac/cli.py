"""``susy-dirac`` command line: figure data, sweeps and verification.

Examples
--------
::

    susy-dirac spectral-map --eps1 -2 --eps2 2 --alpha 0.5
    susy-dirac model --model poschl-teller --kappa 2.9 --alpha 0.25 --format json
    susy-dirac sweep --model free-particle --alpha-sweep 0,0.99,100
    susy-dirac verify --only spectrum --scale quick
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import io as tio
from .models import FreeParticleModel, PoschlTellerModel, pt_composite_levels
from .numkit import Grid, trapezoid
from .spectrum import (
    NoCrossingError,
    SpectralMap,
    band_thresholds,
    bic_critical_alpha,
    crossing_alpha,
    extrema,
    real_energy_contour,
)
from .verify import MODULES, SCALES, run_checks

MODEL_NAMES = ("free-particle", "poschl-teller", "custom-seeds")
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(ValueError):
    """Invalid configuration; maps to exit code 2."""


@dataclass(frozen=True)
class RunConfig:
    """Validated command configuration.

    ``eps1``/``eps2`` are factorization energies for ``custom-seeds``; for
    ``free-particle`` the seeds sit at ``-eps1`` and ``+eps1``.
    """

    model: str = "free-particle"
    m: float = 0.5
    eps1: float | None = None
    eps2: float | None = None
    u0: float = 1.0
    kappa: float = 2.9
    alpha: float | None = None
    sweep: tuple[float, float, int] | None = None
    grid: tuple[float, float, int] | None = None
    fmt: str = "csv"
    out: str | None = None
    only: str | None = None
    scale: str = "full"
    fault: bool = False

    def __post_init__(self):
        if self.model not in MODEL_NAMES:
            raise UsageError(f"unknown model {self.model!r}")
        if self.fmt not in ("csv", "json"):
            raise UsageError(f"unknown format {self.fmt!r}")
        if self.model == "free-particle":
            e = self.eps1 if self.eps1 is not None else 0.2
            if not (self.m > 0 and 0 < e < self.m):
                raise UsageError("free-particle needs m > 0 and 0 < eps1 < m")
        if self.model == "poschl-teller" and not (self.u0 > 0 and self.kappa > 1):
            raise UsageError("poschl-teller needs u0 > 0 and kappa > 1")
        if self.model == "custom-seeds":
            e1, e2 = self.custom_eps
            if not e1 < e2:
                raise UsageError("custom-seeds needs eps1 < eps2")
        if self.alpha is not None and not 0 <= self.alpha < 1:
            raise UsageError("alpha must lie in [0, 1)")
        if self.sweep is not None:
            a, b, n = self.sweep
            if n < 2:
                raise UsageError("sweep needs at least 2 steps")
            if not (0 <= a < 1 and 0 <= b < 1 and a <= b):
                raise UsageError("sweep bounds must satisfy 0 <= A <= B < 1")
        if self.grid is not None:
            lo, hi, n = self.grid
            if not (lo < hi and n >= 2):
                raise UsageError("grid needs XMIN < XMAX and N >= 2")
        if self.only is not None and self.only not in MODULES:
            raise UsageError(f"--only must be one of {', '.join(MODULES)}")
        if self.scale not in SCALES:
            raise UsageError(f"--scale must be one of {', '.join(SCALES)}")

    @property
    def custom_eps(self) -> tuple[float, float]:
        return (self.eps1 if self.eps1 is not None else -2.0, self.eps2 if self.eps2 is not None else 2.0)

    def build_model(self):
        if self.model == "free-particle":
            return FreeParticleModel(self.m, self.eps1 if self.eps1 is not None else 0.2)
        if self.model == "poschl-teller":
            return PoschlTellerModel(self.u0, self.kappa)
        raise UsageError("this command needs a concrete model (free-particle or poschl-teller)")

    def spectral_map(self, alpha: float) -> SpectralMap:
        if self.model == "custom-seeds":
            return SpectralMap(*self.custom_eps, alpha)
        return self.build_model().spectral_map(alpha)

    def default_alpha(self) -> float:
        if self.alpha is not None:
            return self.alpha
        return 0.25 if self.model == "poschl-teller" else 0.5


def worker_count() -> int:
    """Thread cap from ``SUSY_DIRAC_THREADS`` (default 1)."""
    raw = os.environ.get("SUSY_DIRAC_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"SUSY_DIRAC_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise UsageError("SUSY_DIRAC_THREADS must be positive")
    return n


def _emit(cfg: RunConfig, tables: list[tio.Table], meta: dict) -> str:
    if cfg.fmt == "json":
        return tio.write_json(tables, meta)
    return tio.write_csv(tables)


# ---------------------------------------------------------------------------
# commands


def cmd_spectral_map(cfg: RunConfig) -> str:
    """Real-energy set of the spectral map: real axis, elliptic contour, extrema."""
    alpha = cfg.default_alpha()
    smap = cfg.spectral_map(alpha)
    lo, hi, n = cfg.grid or (-8.0, 8.0, 321)
    pts = tio.Table("spectral_map", ("lambda_re", "lambda_im", "branch", "energy"), kinds=("float", "float", "str", "float"))
    for lam in np.linspace(lo, hi, int(n)):
        if smap.eps1 < lam < smap.eps2:
            continue
        for sign, tag in ((1, "+"), (-1, "-")):
            pts.append(float(lam), 0.0, tag, float(smap.real_energy(lam, sign)))
    for p in real_energy_contour(smap, max(16, int(n))):
        pts.append(p.lam.real, p.lam.imag, f"{'+' if p.sign > 0 else '-'}{p.branch}", p.energy)
    ex = extrema(smap)
    markers = tio.Table("markers", ("marker", "lambda", "energy"), kinds=("str", "float", "float"))
    if alpha > 0:
        markers.append("max", ex.lambda_up, ex.E_up)
        markers.append("min", ex.lambda_down, ex.E_down)
    meta = {"command": "spectral-map", "eps1": smap.eps1, "eps2": smap.eps2, "alpha": alpha}
    return _emit(cfg, [pts, markers], meta)


def _normalized_density(value, decay: float):
    X = 40.0 / decay
    g = Grid(-X, X, 40001)
    dens = np.sum(np.abs(value(g.x)) ** 2, axis=-1)
    norm = float(trapezoid(dens, g.h))
    return lambda x: np.sum(np.abs(value(x)) ** 2, axis=-1) / norm


def _model_levels(cfg: RunConfig, model, alpha: float) -> list[tuple[str, float, int, float, str, bool]]:
    """``(label, lam, sign, energy, kind, embedded)`` of every finite-norm level."""
    if isinstance(model, PoschlTellerModel):
        return [(c.label, c.lam, c.sign, c.energy, c.kind, c.embedded) for c in pt_composite_levels(model, alpha)]
    smap = model.spectral_map(alpha)
    e_max, e_min = band_thresholds(smap, model.bands)
    out = []
    for lam in (smap.eps1, smap.eps2):
        out.append((f"missing({lam:g})", lam, 0, lam, "fixed", bool(lam >= e_min or lam <= e_max)))
    return out


def cmd_model(cfg: RunConfig) -> str:
    """Rotated composite potential entries, missing-state densities and the level table."""
    model = cfg.build_model()
    alpha = cfg.default_alpha()
    c = model.composite(alpha)
    if cfg.grid is not None:
        lo, hi, n = cfg.grid
    else:
        X = 10.0 / (model.kappa if isinstance(model, FreeParticleModel) else model.U0)
        lo, hi, n = -X, X, 401
    x = np.linspace(lo, hi, int(n))
    W = c.rotated_potential()(x)
    cols, data = ["x"], [x]
    for i in range(4):
        for j in range(i, 4):
            e = W[:, i, j]
            if np.abs(e.real).max() > 1e-12:
                cols.append(f"V{i + 1}{j + 1}")
                data.append(e.real)
            if np.abs(e.imag).max() > 1e-12:
                cols.append(f"V{i + 1}{j + 1}_im")
                data.append(e.imag)
    decay = model.kappa if isinstance(model, FreeParticleModel) else model.U0
    t = model.transform
    for idx, tag in ((0, "density_missing1"), (1, "density_missing2")):
        cols.append(tag)
        data.append(_normalized_density(lambda y, idx=idx: t.missing(y)[..., idx], decay)(x))
    pot = tio.Table("potential", cols, [tuple(float(d[k]) for d in data) for k in range(len(x))])
    lev = tio.Table(
        "levels",
        ("label", "lambda", "sign", "energy", "kind", "embedded"),
        kinds=("str", "float", "float", "float", "str", "float"),
    )
    for label, lam, sign, E, kind, emb in _model_levels(cfg, model, alpha):
        lev.append(label, lam, sign, E, kind, 1.0 if emb else 0.0)
    smap = model.spectral_map(alpha)
    e_max, e_min = band_thresholds(smap, model.bands)
    edges = tio.Table("band_edges", ("E_max", "E_min"), [(e_max, e_min)])
    meta = {"command": "model", "model": cfg.model, "alpha": alpha}
    return _emit(cfg, [pot, lev, edges], meta)


def _sweep_levels(model) -> list[tuple[str, float, int]]:
    """``(label, lam, sign)`` of the curves followed in a sweep; ``sign=0`` marks fixed levels."""
    if isinstance(model, PoschlTellerModel):
        return [(c.label, c.lam, c.sign) for c in pt_composite_levels(model, 0.0)]
    smap = model.spectral_map(0.0)
    return [(f"missing({lam:g})", lam, 0) for lam in (smap.eps1, smap.eps2)]


def _events(model, levels, a_lo: float, a_hi: float) -> list[tuple]:
    """BIC and crossing events with the coupling inside ``[a_lo, a_hi]``."""
    base = model.spectral_map(0.0)
    e1, e2 = base.eps1, base.eps2
    found: list[tuple] = []

    def energy(lam, sign, a):
        return float(base.with_alpha(a).real_energy(lam, sign if sign else 1))

    for label, lam, sign in levels:
        try:
            a = bic_critical_alpha(base, lam, model.bands, sign if sign else 1)
        except (NoCrossingError, ValueError):
            continue
        m = base.with_alpha(a)
        e_max, e_min = band_thresholds(m, model.bands)
        edge = e_min if lam >= e2 else e_max
        E = energy(lam, sign, a)
        found.append(("bic", a, label, "continuum", E, abs(E - edge), 1.0))
    for i, (la, lam_a, sa) in enumerate(levels):
        for lb, lam_b, sb in levels[i + 1 :]:
            (la_, xa, s_a), (lb_, xb, s_b) = sorted(((la, lam_a, sa), (lb, lam_b, sb)), key=lambda r: r[1])
            for kind in ("+-", "--", "++"):
                want = {"+-": (1, -1), "--": (-1, -1), "++": (1, 1)}[kind]
                # moving curves must carry the branch the crossing refers to
                if (s_a and s_a != want[0]) or (s_b and s_b != want[1]):
                    continue
                try:
                    a = crossing_alpha(xa, xb, kind, e1, e2)
                except NoCrossingError:
                    continue
                Ea, Eb = energy(xa, want[0], a), energy(xb, want[1], a)
                m = base.with_alpha(a)
                e_max, e_min = band_thresholds(m, model.bands)
                emb = Ea >= e_min or Ea <= e_max
                found.append((f"crossing{kind}", a, la_, lb_, Ea, abs(Ea - Eb), 1.0 if emb else 0.0))
    found = [f for f in found if a_lo <= f[1] <= a_hi]
    found.sort(key=lambda f: (f[1], f[0], f[2]))
    # merge coincident events of the same kind (symmetric pairs)
    merged: list[tuple] = []
    for f in found:
        if merged and merged[-1][0] == f[0] == "bic" and abs(merged[-1][1] - f[1]) <= 1e-12:
            p = merged[-1]
            merged[-1] = (p[0], p[1], f"{p[2]};{f[2]}", p[3], p[4], max(p[5], f[5]), p[6])
            continue
        # a fixed level meets a moving curve under two kind labels
        if any(abs(g[1] - f[1]) <= 1e-12 and {g[2], g[3]} == {f[2], f[3]} for g in merged):
            continue
        merged.append(f)
    return merged


def cmd_sweep(cfg: RunConfig) -> str:
    """Composite levels and band edges across a coupling sweep with event rows."""
    model = cfg.build_model()
    a_lo, a_hi, n = cfg.sweep or (0.0, 0.99, 100)
    alphas = np.linspace(a_lo, a_hi, int(n))
    levels = _sweep_levels(model)

    def row(a):
        return _model_levels(cfg, model, float(a)), band_thresholds(model.spectral_map(float(a)), model.bands)

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        results = list(pool.map(row, alphas))
    lev = tio.Table(
        "levels", ("alpha", "label", "energy", "embedded"), kinds=("float", "str", "float", "float")
    )
    edges = tio.Table("band_edges", ("alpha", "E_max", "E_min"))
    for a, (lv, (e_max, e_min)) in zip(alphas, results):
        for label, _lam, _sign, E, _kind, emb in lv:
            lev.append(float(a), label, E, 1.0 if emb else 0.0)
        edges.append(float(a), e_max, e_min)
    ev = tio.Table(
        "events",
        ("kind", "alpha", "level_a", "level_b", "energy", "residual", "in_continuum"),
        kinds=("str", "float", "str", "str", "float", "float", "float"),
    )
    for e in _events(model, levels, a_lo, a_hi):
        ev.append(*e)
    meta = {"command": "sweep", "model": cfg.model, "alpha_start": a_lo, "alpha_stop": a_hi, "steps": int(n)}
    return _emit(cfg, [lev, edges, ev], meta)


def cmd_verify(cfg: RunConfig) -> tuple[str, bool]:
    """Run the validation checks; returns the JSON report and the overall verdict."""
    report = run_checks(only=cfg.only, scale=cfg.scale, fault=cfg.fault)
    return tio.dump_report(report.to_dict()), report.passed


# ---------------------------------------------------------------------------
# argument parsing


def _triple(text: str, kind=float) -> tuple[float, float, int]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected A,B,N, got {text!r}")
    try:
        return float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad numbers in {text!r}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit with 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="susy-dirac", description="Supersymmetric composites of Dirac operators.")
    p.add_argument("command", choices=("spectral-map", "model", "sweep", "verify"))
    p.add_argument("--model", choices=MODEL_NAMES, default=None)
    p.add_argument("--m", type=float, default=0.5, help="free-particle mass")
    p.add_argument("--eps1", type=float, default=None, help="seed energy (free particle) or lower factorization energy")
    p.add_argument("--eps2", type=float, default=None, help="upper factorization energy (custom-seeds)")
    p.add_argument("--u0", type=float, default=1.0)
    p.add_argument("--kappa", type=float, default=2.9)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--alpha", type=float, default=None)
    g.add_argument("--alpha-sweep", type=_triple, default=None, metavar="A,B,N")
    p.add_argument("--grid", type=_triple, default=None, metavar="XMIN,XMAX,N")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None, help="output path (default: stdout)")
    p.add_argument("--only", default=None, help=f"verify subset: {', '.join(MODULES)}")
    p.add_argument("--scale", choices=SCALES, default="full", help="verify scale")
    p.add_argument("--inject-fault", action="store_true", help="flip a rotation sign (mutation test)")
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    model = ns.model or ("custom-seeds" if ns.command == "spectral-map" else "free-particle")
    return RunConfig(
        model=model,
        m=ns.m,
        eps1=ns.eps1,
        eps2=ns.eps2,
        u0=ns.u0,
        kappa=ns.kappa,
        alpha=ns.alpha,
        sweep=ns.alpha_sweep,
        grid=ns.grid,
        fmt=ns.format,
        out=ns.out,
        only=ns.only,
        scale=ns.scale,
        fault=ns.inject_fault,
    )


def _write(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def main(argv: list[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(ns)
        worker_count()
        if ns.command == "verify":
            text, ok = cmd_verify(cfg)
            _write(text, cfg.out)
            return EXIT_OK if ok else EXIT_FAIL
        if cfg.sweep is not None and ns.command != "sweep":
            raise UsageError("--alpha-sweep only applies to the sweep command")
        cmd = {"spectral-map": cmd_spectral_map, "model": cmd_model, "sweep": cmd_sweep}[ns.command]
        text = cmd(cfg)
    except UsageError as exc:
        sys.stderr.write(f"susy-dirac: error: {exc}\n")
        return EXIT_USAGE
    _write(text, cfg.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
