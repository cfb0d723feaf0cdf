"""
Experiment orchestration: configs, sources, reference fields, table and rate
sweeps, and CSV/JSON persistence.

Configuration is flat "section.key = value" text.  Rules that depend on the
wavenumber (mesh size, layer width, absorber strength, source width) are
stored as tokens and resolved per k, so one config describes a whole sweep.
Every run echoes its configuration into the output so a row can be re-run
alone.
"""

from __future__ import annotations

import gc
import json
import math
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .assembly import LoadSpec, SesquilinearSpec, assemble_load, assemble_local, assemble_matrix, embed
from .decomp import OverlapRule, PartitionOfUnity, SubdomainLayout, TransferOps, build_layout
from .grid import Grid, MeshRule, Rect, build_grid
from .linalg import factorize, write_coo, write_coo_vector
from .pml import CoefficientField, PmlProfile, global_field
from .schwarz import SchwarzContext, rate_after, run_iteration
from .special import point_source_field


class ConfigError(ValueError):
    pass


# -- wavenumber-dependent rules ---------------------------------------------


def _parse_float(s: str, key: str) -> float:
    try:
        return float(s)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {s!r}") from None


def _parse_kappa_rule(s: str, key: str):
    """'lambda' -> one wavelength; 'fixed:v' -> v; 'layers:m' -> m elements."""
    s = s.strip()
    if s == "lambda":
        return ("lambda", 0.0)
    for kind in ("fixed", "layers"):
        if s.startswith(kind + ":"):
            v = _parse_float(s[len(kind) + 1:], key)
            if v <= 0:
                raise ConfigError(f"{key}: value must be positive, got {s!r}")
            return (kind, v)
    raise ConfigError(f"{key}: expected lambda, fixed:<v> or layers:<m>, got {s!r}")


def _parse_strength_rule(s: str, key: str):
    s = s.strip()
    if s == "30k":
        return ("30k", 0.0)
    if s == "k2.5":
        return ("k2.5", 0.0)
    if s.startswith("fixed:"):
        v = _parse_float(s[6:], key)
        if v < 0:
            raise ConfigError(f"{key}: strength must be >= 0, got {s!r}")
        return ("fixed", v)
    raise ConfigError(f"{key}: expected 30k, k2.5 or fixed:<v>, got {s!r}")


def _parse_sigma_rule(s: str, key: str):
    s = s.strip()
    if s.startswith("lambda/"):
        d = _parse_float(s[7:], key)
        if d <= 0:
            raise ConfigError(f"{key}: divisor must be positive, got {s!r}")
        return ("lambda", d)
    if s.startswith("fixed:"):
        v = _parse_float(s[6:], key)
        if v <= 0:
            raise ConfigError(f"{key}: width must be positive, got {s!r}")
        return ("fixed", v)
    raise ConfigError(f"{key}: expected lambda/<d> or fixed:<v>, got {s!r}")


def resolve_kappa(rule, k: float, h: float) -> float:
    kind, v = rule
    if kind == "lambda":
        return 2.0 * math.pi / k
    if kind == "fixed":
        return v
    return v * h


def resolve_strength(rule, k: float) -> float:
    kind, v = rule
    if kind == "30k":
        return 30.0 * k
    if kind == "k2.5":
        return k**2.5
    return v


def resolve_sigma(rule, k: float) -> float:
    kind, v = rule
    return (2.0 * math.pi / k) / v if kind == "lambda" else v


# -- source terms ------------------------------------------------------------


@dataclass(frozen=True)
class SourceSpec:
    """Unit-mass source: an isotropic Gaussian or a one-element bump."""

    kind: str = "gaussian"
    sigma_rule: tuple = ("lambda", 8.0)
    center: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in ("gaussian", "element_bump"):
            raise ConfigError(f"unknown source kind {self.kind!r}")

    def center_for(self, omega_int: Rect) -> tuple:
        if self.center is not None:
            return self.center
        return (0.5 * (omega_int.x_lo + omega_int.x_hi),
                0.5 * (omega_int.y_lo + omega_int.y_hi))

    def load_for(self, grid: Grid, k: float) -> LoadSpec:
        cx, cy = self.center_for(grid.omega_int)
        oi = grid.omega_int
        if self.kind == "gaussian":
            sigma = resolve_sigma(self.sigma_rule, k)
            half = 3.0 * sigma  # the 6-sigma box carries all but ~1e-8 of the mass
            if not (oi.x_lo <= cx - half and cx + half <= oi.x_hi
                    and oi.y_lo <= cy - half and cy + half <= oi.y_hi):
                raise ConfigError(
                    f"source support box (center ({cx:g}, {cy:g}), half-width {half:g}) "
                    f"is not contained in the physical region"
                )
            amp = 1.0 / (2.0 * math.pi * sigma**2)
            s2 = 2.0 * sigma**2

            def f(x, y):
                return amp * np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / s2)

            return LoadSpec(f, support=oi)

        ex = np.searchsorted(grid.xs_el, cx, side="right") - 1
        ey = np.searchsorted(grid.ys_el, cy, side="right") - 1
        ex = min(max(ex, 0), grid.nx - 1)
        ey = min(max(ey, 0), grid.ny - 1)
        box = Rect(grid.xs_el[ex], grid.xs_el[ex + 1], grid.ys_el[ey], grid.ys_el[ey + 1])
        if not (oi.x_lo <= box.x_lo and box.x_hi <= oi.x_hi
                and oi.y_lo <= box.y_lo and box.y_hi <= oi.y_hi):
            raise ConfigError(f"bump element at ({cx:g}, {cy:g}) lies outside the physical region")
        amp = 1.0 / (box.width * box.height)

        def f(x, y):
            inside = ((x >= box.x_lo) & (x <= box.x_hi)
                      & (y >= box.y_lo) & (y <= box.y_hi))
            return np.where(inside, amp, 0.0)

        return LoadSpec(f, support=box)


# -- wavespeed profiles -------------------------------------------------------


def _lens(omega_int: Rect) -> Callable:
    cx = 0.5 * (omega_int.x_lo + omega_int.x_hi)
    cy = 0.5 * (omega_int.y_lo + omega_int.y_hi)
    w2 = 2.0 * (0.2 * min(omega_int.width, omega_int.height)) ** 2

    def c(x, y):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        dip = 0.3 * np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / w2)
        # identity outside the physical region, where stretching handles decay
        inside = ((x >= omega_int.x_lo) & (x <= omega_int.x_hi)
                  & (y >= omega_int.y_lo) & (y <= omega_int.y_hi))
        return np.where(inside, 1.0 - dip, 1.0)

    return c


# -- configuration ------------------------------------------------------------

_DEFAULTS = {
    "run.k": "20,30,40",
    "run.method": "RAS,RMS",
    "run.tol": "1e-6",
    "run.max_iters": "200",
    "run.seed": "0",
    "domain.l": "1.0",
    "domain.d": "1.0",
    "wavespeed.kind": "constant",
    "mesh.rule": "pollution",
    "mesh.value": "1.0",
    "mesh.p": "2",
    "pml.kind": "cubic",
    "pml.kappa": "lambda",
    "pml.strength": "30k",
    "pml.kappa_interior": "default",
    "layout.n": "1x2",
    "layout.overlap": "layers:2",
    "source.kind": "gaussian",
    "source.sigma": "lambda/8",
    "source.center": "default",
    "accuracy.sigma": "lambda/32",
    "accuracy.threshold": "0.05",
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved sweep description plus the verbatim lines that produced it."""

    ks: tuple
    methods: tuple
    tol: float
    max_iters: int
    seed: int
    l: float
    d: float
    wavespeed: str
    mesh_rule: str
    mesh_value: float
    p: int
    pml_kind: str
    kappa_rule: tuple
    strength_rule: tuple
    kappa_interior_rule: Optional[tuple]
    layouts: tuple
    overlaps: tuple
    overlap_tokens: tuple
    source: SourceSpec
    accuracy_sigma_rule: tuple
    accuracy_threshold: float
    raw_lines: tuple = ()

    @property
    def omega_int(self) -> Rect:
        return Rect(0.0, self.l, 0.0, self.d)

    def mesh(self) -> MeshRule:
        return MeshRule(self.mesh_rule, self.mesh_value)

    def profile_for(self, k: float, kappa: float) -> PmlProfile:
        a = resolve_strength(self.strength_rule, k)
        if self.pml_kind == "cubic":
            return PmlProfile.cubic(a, kappa)
        return PmlProfile.smooth_capped(a, kappa)

    def wavespeed_for(self, omega_int: Rect) -> Optional[Callable]:
        return None if self.wavespeed == "constant" else _lens(omega_int)


def _parse_layouts(s: str, key: str):
    out = []
    for tok in s.split(","):
        tok = tok.strip().lower()
        parts = tok.split("x")
        if len(parts) != 2:
            raise ConfigError(f"{key}: expected N1xN2 entries, got {tok!r}")
        try:
            n1, n2 = int(parts[0]), int(parts[1])
        except ValueError:
            raise ConfigError(f"{key}: expected N1xN2 entries, got {tok!r}") from None
        if n1 < 1 or n2 < 1:
            raise ConfigError(f"{key}: subdomain counts must be >= 1, got {tok!r}")
        out.append((n1, n2))
    if not out:
        raise ConfigError(f"{key}: empty layout list")
    return tuple(out)


def _parse_overlaps(s: str, key: str):
    rules, tokens = [], []
    for tok in s.split(","):
        tok = tok.strip()
        if tok.startswith("layers:"):
            rules.append(OverlapRule.layers(_parse_float(tok[7:], key)))
        elif tok.startswith("fixed:"):
            rules.append(OverlapRule.fixed(_parse_float(tok[6:], key)))
        else:
            raise ConfigError(f"{key}: expected layers:<m> or fixed:<v>, got {tok!r}")
        tokens.append(tok)
    if not rules:
        raise ConfigError(f"{key}: empty overlap list")
    return tuple(rules), tuple(tokens)


def parse_config(text: str) -> ExperimentConfig:
    """Parse flat key=value text; unknown keys are rejected by name."""
    values = dict(_DEFAULTS)
    raw_lines = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        raw_lines.append(stripped)
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key = value, got {stripped!r}")
        key, _, val = stripped.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _DEFAULTS:
            raise ConfigError(f"unknown config key: {key!r}")
        values[key] = val

    ks = tuple(_parse_float(t, "run.k") for t in values["run.k"].split(","))
    if not ks or any(k < 1.0 for k in ks):
        raise ConfigError(f"run.k: wavenumbers must be >= 1, got {values['run.k']!r}")

    methods = []
    for tok in values["run.method"].split(","):
        m = tok.strip().upper()
        if m not in ("RAS", "RMS"):
            raise ConfigError(f"run.method: expected RAS or RMS entries, got {tok!r}")
        if m not in methods:
            methods.append(m)

    tol = _parse_float(values["run.tol"], "run.tol")
    if not 0.0 < tol < 1.0:
        raise ConfigError(f"run.tol: must be in (0, 1), got {tol}")
    try:
        max_iters = int(values["run.max_iters"])
        seed = int(values["run.seed"])
        p = int(values["mesh.p"])
    except ValueError as exc:
        raise ConfigError(f"integer field: {exc}") from None
    if max_iters < 1:
        raise ConfigError(f"run.max_iters: must be >= 1, got {max_iters}")
    if p < 1:
        raise ConfigError(f"mesh.p: must be >= 1, got {p}")

    l = _parse_float(values["domain.l"], "domain.l")
    d = _parse_float(values["domain.d"], "domain.d")
    if l <= 0 or d <= 0:
        raise ConfigError(f"domain dimensions must be positive, got l={l}, d={d}")

    wavespeed = values["wavespeed.kind"].strip()
    if wavespeed not in ("constant", "lens"):
        raise ConfigError(f"wavespeed.kind: expected constant or lens, got {wavespeed!r}")

    mesh_rule = values["mesh.rule"].strip()
    if mesh_rule not in ("pollution", "h_target"):
        raise ConfigError(f"mesh.rule: expected pollution or h_target, got {mesh_rule!r}")
    mesh_value = _parse_float(values["mesh.value"], "mesh.value")
    if mesh_value <= 0:
        raise ConfigError(f"mesh.value: must be positive, got {mesh_value}")

    pml_kind = values["pml.kind"].strip()
    if pml_kind not in ("cubic", "smooth_capped"):
        raise ConfigError(f"pml.kind: expected cubic or smooth_capped, got {pml_kind!r}")
    kappa_rule = _parse_kappa_rule(values["pml.kappa"], "pml.kappa")
    strength_rule = _parse_strength_rule(values["pml.strength"], "pml.strength")
    ki = values["pml.kappa_interior"].strip()
    kappa_interior_rule = None if ki == "default" else _parse_kappa_rule(ki, "pml.kappa_interior")

    layouts = _parse_layouts(values["layout.n"], "layout.n")
    overlaps, overlap_tokens = _parse_overlaps(values["layout.overlap"], "layout.overlap")

    source_kind = values["source.kind"].strip()
    center_s = values["source.center"].strip()
    if center_s == "default":
        center = None
    else:
        parts = center_s.split(",")
        if len(parts) != 2:
            raise ConfigError(f"source.center: expected x,y, got {center_s!r}")
        center = (_parse_float(parts[0], "source.center"), _parse_float(parts[1], "source.center"))
    source = SourceSpec(
        kind=source_kind,
        sigma_rule=_parse_sigma_rule(values["source.sigma"], "source.sigma"),
        center=center,
    )

    acc_sigma = _parse_sigma_rule(values["accuracy.sigma"], "accuracy.sigma")
    acc_threshold = _parse_float(values["accuracy.threshold"], "accuracy.threshold")
    if not 0.0 < acc_threshold < 1.0:
        raise ConfigError(f"accuracy.threshold: must be in (0, 1), got {acc_threshold}")

    return ExperimentConfig(
        ks=ks, methods=tuple(methods), tol=tol, max_iters=max_iters, seed=seed,
        l=l, d=d, wavespeed=wavespeed,
        mesh_rule=mesh_rule, mesh_value=mesh_value, p=p,
        pml_kind=pml_kind, kappa_rule=kappa_rule, strength_rule=strength_rule,
        kappa_interior_rule=kappa_interior_rule,
        layouts=layouts, overlaps=overlaps, overlap_tokens=overlap_tokens,
        source=source,
        accuracy_sigma_rule=acc_sigma, accuracy_threshold=acc_threshold,
        raw_lines=tuple(raw_lines),
    )


def load_config(path: str) -> ExperimentConfig:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def default_config() -> ExperimentConfig:
    return parse_config("")


# -- result rows ---------------------------------------------------------------

RESULT_COLUMNS = (
    "method", "k", "N1", "N2", "delta_rule", "delta_value", "kappa", "a", "p",
    "h", "dofs", "iters", "final_rel_res", "rho", "status",
    "t_assembly", "t_factorize", "t_iterate",
)
# the trailing wall-time columns are informational only and excluded from
# reproducibility comparisons
N_TIMING_COLUMNS = 3


@dataclass
class ResultRow:
    method: str
    k: float
    n1: int
    n2: int
    delta_rule: str
    delta_value: Optional[float] = None
    kappa: Optional[float] = None
    a: Optional[float] = None
    p: Optional[int] = None
    h: Optional[float] = None
    dofs: Optional[int] = None
    iters: Optional[int] = None
    final_rel_res: Optional[float] = None
    rho: Optional[float] = None
    status: str = "ok"
    t_assembly: Optional[float] = None
    t_factorize: Optional[float] = None
    t_iterate: Optional[float] = None

    def as_csv_fields(self):
        def fmt(v):
            if v is None:
                return ""
            if isinstance(v, float):
                return repr(v)
            return str(v)

        status = self.status.replace(",", ";").replace("\n", " ")
        return [
            self.method, fmt(self.k), str(self.n1), str(self.n2),
            self.delta_rule, fmt(self.delta_value), fmt(self.kappa), fmt(self.a),
            fmt(self.p), fmt(self.h), fmt(self.dofs), fmt(self.iters),
            fmt(self.final_rel_res), fmt(self.rho), status,
            fmt(self.t_assembly), fmt(self.t_factorize), fmt(self.t_iterate),
        ]


def designated_iteration(method: str, n1: int, n2: int) -> int:
    """Iteration at which the reduction rate is read off."""
    if method == "RAS":
        return n1 + n2 - 1
    return 2 if (n1 == 1 or n2 == 1) else 4


def _atomic_write_text(path: str, payload: str) -> None:
    """Write via a temp file in the target directory, then rename over."""
    out_dir = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(out_dir, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=out_dir, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_rows_csv(path: str):
    """Read a results CSV back as (comment_lines, list of column dicts)."""
    comments, records, header = [], [], None
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                comments.append(line[1:].strip())
                continue
            if header is None:
                header = line.split(",")
                continue
            fields = line.split(",")
            if len(fields) != len(header):
                raise ValueError(f"{path}: row has {len(fields)} fields, header has {len(header)}")
            records.append(dict(zip(header, fields)))
    if header is None:
        raise ValueError(f"{path}: no header row")
    return comments, records


def write_rows_csv(path: str, rows, config: ExperimentConfig, extra_comments=()) -> None:
    """Atomic CSV write: config echo as comments, header, one line per row."""
    lines = []
    for raw in config.raw_lines:
        lines.append(f"# {raw}")
    for c in extra_comments:
        lines.append(f"# {c}")
    lines.append(",".join(RESULT_COLUMNS))
    for row in rows:
        lines.append(",".join(row.as_csv_fields()))
    _atomic_write_text(path, "\n".join(lines) + "\n")


# -- experiment runner ----------------------------------------------------------


@dataclass
class _KBundle:
    """Per-wavenumber shared state: grid, fields, global system, reference."""

    k: float
    grid: Grid
    cf: CoefficientField
    A: object
    b: np.ndarray
    u_star: np.ndarray
    kappa: float
    a: float
    t_assembly: float
    t_factorize: float


def _build_bundle(config: ExperimentConfig, k: float, max_dofs: Optional[int]) -> _KBundle:
    omega = config.omega_int
    rule = config.mesh()
    h_probe = rule.resolve(k)
    kappa_req = resolve_kappa(config.kappa_rule, k, h_probe)
    kwargs = {} if max_dofs is None else {"max_dofs": max_dofs}
    grid = build_grid(omega, kappa_req, k, rule, p=config.p, **kwargs)
    a = resolve_strength(config.strength_rule, k)
    profile = config.profile_for(k, max(grid.kappa_x, grid.kappa_y))
    cf = global_field(omega, profile, k, config.wavespeed_for(omega))

    t0 = time.perf_counter()
    A = assemble_matrix(SesquilinearSpec(grid, cf))
    b = assemble_load(grid, config.source.load_for(grid, k))
    t_assembly = time.perf_counter() - t0

    t0 = time.perf_counter()
    lu = factorize(A)
    u_star = lu.solve(b)
    t_factorize = time.perf_counter() - t0
    del lu
    gc.collect()
    return _KBundle(k=k, grid=grid, cf=cf, A=A, b=b, u_star=u_star,
                    kappa=max(grid.kappa_x, grid.kappa_y), a=a,
                    t_assembly=t_assembly, t_factorize=t_factorize)


def _kappa_interior(config: ExperimentConfig, bundle: _KBundle) -> Optional[float]:
    if config.kappa_interior_rule is None:
        return None  # layout then reuses the grid's own layer element counts
    return resolve_kappa(config.kappa_interior_rule, bundle.k, bundle.grid.h)


def _run_cell(config, bundle, n1, n2, ov_rule, ov_token, report_dir=None):
    """All method rows for one (k, layout, overlap) cell."""
    grid = bundle.grid
    base = dict(k=bundle.k, n1=n1, n2=n2, delta_rule=ov_token, kappa=bundle.kappa,
                a=bundle.a, p=grid.p, h=grid.h, dofs=grid.n_dofs)
    rows = []
    try:
        layout = build_layout(grid, n1, n2, ov_rule, kappa=_kappa_interior(config, bundle))
        pou = PartitionOfUnity(layout)
        transfer = TransferOps(grid, layout, pou)
        t0 = time.perf_counter()
        factors = []
        t_asm_local = 0.0
        for j in range(layout.n_subdomains):
            t1 = time.perf_counter()
            A_j, _ = assemble_local(grid, layout, j, bundle.cf)
            t_asm_local += time.perf_counter() - t1
            factors.append(factorize(A_j))
            del A_j
        t_fact_local = time.perf_counter() - t0 - t_asm_local

        if report_dir is not None:
            os.makedirs(report_dir, exist_ok=True)
            name = f"layout_k{bundle.k:g}_{n1}x{n2}_{ov_token.replace(':', '-')}.json"
            with open(os.path.join(report_dir, name), "w", encoding="utf-8") as fh:
                json.dump(layout.report(), fh, indent=2, sort_keys=True)

        ctx = SchwarzContext(A=bundle.A, f=bundle.b, local_factors=tuple(factors),
                             transfer=transfer, u_star=bundle.u_star,
                             tol=config.tol, max_iters=config.max_iters)
        for method in config.methods:
            des = designated_iteration(method, n1, n2)
            t0 = time.perf_counter()
            trace = run_iteration(ctx, method, min_iters=min(des, config.max_iters))
            t_iter = time.perf_counter() - t0
            rho = rate_after(trace, des) if des < len(trace.err_res) else None
            rows.append(ResultRow(
                method=method, delta_value=layout.delta,
                iters=trace.iterations_to_tol,
                final_rel_res=trace.final_rel_res(),
                rho=rho,
                status="ok" if trace.converged else "no_convergence",
                t_assembly=bundle.t_assembly + t_asm_local,
                t_factorize=bundle.t_factorize + t_fact_local,
                t_iterate=t_iter,
                **base,
            ))
        del ctx, factors, transfer, pou, layout
        gc.collect()
    except Exception as exc:  # per-cell failures land in the row, run continues
        for method in config.methods:
            rows.append(ResultRow(method=method, status=f"error: {exc}", **base))
    return rows


def run_table(
    config: ExperimentConfig,
    out_csv: Optional[str] = None,
    threads: int = 1,
    max_dofs: Optional[int] = None,
    report_dir: Optional[str] = None,
):
    """One row per (k, layout, overlap, method); optionally written as CSV.

    Cells sharing a wavenumber reuse the assembled global system and the
    reference solution; subdomain factorizations live only for their cell.
    """
    if report_dir is None and out_csv is not None:
        report_dir = os.path.join(os.path.dirname(os.path.abspath(out_csv)), "layouts")

    rows = []
    for k in config.ks:
        try:
            bundle = _build_bundle(config, k, max_dofs)
        except Exception as exc:
            for n1, n2 in config.layouts:
                for tok in config.overlap_tokens:
                    for method in config.methods:
                        rows.append(ResultRow(method=method, k=k, n1=n1, n2=n2,
                                              delta_rule=tok, status=f"error: {exc}"))
            continue

        cells = [(n1, n2, ov, tok)
                 for n1, n2 in config.layouts
                 for ov, tok in zip(config.overlaps, config.overlap_tokens)]
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                futures = [pool.submit(_run_cell, config, bundle, n1, n2, ov, tok, report_dir)
                           for n1, n2, ov, tok in cells]
                for fut in futures:
                    rows.extend(fut.result())
        else:
            for n1, n2, ov, tok in cells:
                rows.extend(_run_cell(config, bundle, n1, n2, ov, tok, report_dir))
        del bundle

    if out_csv is not None:
        write_rows_csv(out_csv, rows, config)
    return rows


# -- reference oracles -----------------------------------------------------------


def hankel_reference(k: float, x0, x) -> complex:
    """Outgoing free-space response at x to a unit point source at x0."""
    pts = np.asarray(x, dtype=np.float64).reshape(1, 2)
    return complex(point_source_field(k, x0, pts)[0])


@dataclass(frozen=True)
class AccuracyReport:
    k: float
    kappa: float
    a: float
    sigma: float
    h: float
    dofs: int
    n_annulus: int
    rel_err: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.rel_err <= self.threshold


def pml_accuracy_test(
    config: ExperimentConfig,
    k: Optional[float] = None,
    max_dofs: Optional[int] = None,
    strength_override: Optional[float] = None,
) -> AccuracyReport:
    """Compare the absorbing-layer solve against the free-space reference.

    Solves the global problem for a unit-mass Gaussian at the domain center
    (width from accuracy.sigma) and reports the relative l2 mismatch with
    k^2*(i/4)*H1_0(k r) over the annulus of dofs at least one wavelength from
    the source and half a wavelength from the physical boundary.
    strength_override replaces the absorber strength (0 disables absorption,
    for control runs).
    """
    if config.wavespeed != "constant":
        raise ConfigError("the free-space reference needs wavespeed.kind = constant")
    k = float(k if k is not None else min(config.ks))
    lam = 2.0 * math.pi / k
    omega = config.omega_int
    rule = config.mesh()
    kappa_req = resolve_kappa(config.kappa_rule, k, rule.resolve(k))
    kwargs = {} if max_dofs is None else {"max_dofs": max_dofs}
    grid = build_grid(omega, kappa_req, k, rule, p=config.p, **kwargs)

    a = resolve_strength(config.strength_rule, k) if strength_override is None else strength_override
    kappa_eff = max(grid.kappa_x, grid.kappa_y)
    profile = (PmlProfile.cubic(a, kappa_eff) if config.pml_kind == "cubic"
               else PmlProfile.smooth_capped(a, kappa_eff))
    cf = global_field(omega, profile, k)

    sigma = resolve_sigma(config.accuracy_sigma_rule, k)
    source = SourceSpec(kind="gaussian", sigma_rule=("fixed", sigma), center=config.source.center)
    x0 = source.center_for(omega)
    b = assemble_load(grid, source.load_for(grid, k))
    A = assemble_matrix(SesquilinearSpec(grid, cf))
    u = factorize(A).solve(b)
    u_full = embed(grid, u)

    coords = grid.dof_coords()
    r = np.hypot(coords[:, 0] - x0[0], coords[:, 1] - x0[1])
    in_annulus = (
        (r >= lam)
        & (coords[:, 0] >= omega.x_lo + 0.5 * lam) & (coords[:, 0] <= omega.x_hi - 0.5 * lam)
        & (coords[:, 1] >= omega.y_lo + 0.5 * lam) & (coords[:, 1] <= omega.y_hi - 0.5 * lam)
    )
    idx = np.flatnonzero(in_annulus)
    if idx.size == 0:
        raise ConfigError(
            f"annulus is empty: domain {omega.width:g} x {omega.height:g} "
            f"cannot hold one wavelength {lam:g} around the source"
        )
    u_ref = point_source_field(k, x0, coords[idx])
    rel = float(np.linalg.norm(u_full[idx] - u_ref) / np.linalg.norm(u_ref))
    return AccuracyReport(k=k, kappa=kappa_eff, a=a, sigma=sigma, h=grid.h,
                          dofs=grid.n_dofs, n_annulus=int(idx.size),
                          rel_err=rel, threshold=config.accuracy_threshold)


# -- rate sweep -------------------------------------------------------------------


def run_rate(
    config: ExperimentConfig,
    out_csv: Optional[str] = None,
    max_dofs: Optional[int] = None,
):
    """Reduction rate at the designated iteration per k, one column per method.

    Uses the first configured layout and overlap; returns a list of dicts
    {k, rho_RAS, rho_RMS} (keys only for configured methods).
    """
    n1, n2 = config.layouts[0]
    ov_rule, ov_token = config.overlaps[0], config.overlap_tokens[0]
    records = []
    for k in config.ks:
        bundle = _build_bundle(config, k, max_dofs)
        rows = _run_cell(config, bundle, n1, n2, ov_rule, ov_token)
        rec = {"k": k}
        for row in rows:
            rec[f"rho_{row.method}"] = row.rho if row.status in ("ok", "no_convergence") else None
            rec[f"status_{row.method}"] = row.status
        records.append(rec)
        del bundle

    if out_csv is not None:
        cols = ["k"] + [f"rho_{m}" for m in config.methods]
        lines = [f"# {raw}" for raw in config.raw_lines]
        lines.append(f"# layout {n1}x{n2}, overlap {ov_token}, "
                     f"designated iterations: "
                     + ", ".join(f"{m}={designated_iteration(m, n1, n2)}" for m in config.methods))
        lines.append(",".join(cols))
        for rec in records:
            vals = [repr(float(rec["k"]))]
            for m in config.methods:
                v = rec.get(f"rho_{m}")
                vals.append("" if v is None else repr(float(v)))
            lines.append(",".join(vals))
        _atomic_write_text(out_csv, "\n".join(lines) + "\n")
    return records


def export_matrix(config: ExperimentConfig, out_dir: str, k: Optional[float] = None,
                  max_dofs: Optional[int] = None) -> dict:
    """Dump the assembled global system of the first (or given) k as text."""
    k = float(k if k is not None else config.ks[0])
    bundle = _build_bundle(config, k, max_dofs)
    os.makedirs(out_dir, exist_ok=True)
    a_path = os.path.join(out_dir, f"matrix_k{k:g}.coo")
    b_path = os.path.join(out_dir, f"load_k{k:g}.coo")
    write_coo(a_path, bundle.A)
    write_coo_vector(b_path, bundle.b)
    info = {
        "k": k, "n": int(bundle.A.shape[0]), "nnz": int(bundle.A.nnz),
        "h": bundle.grid.h, "p": bundle.grid.p, "dofs_total": int(bundle.grid.n_dofs),
        "matrix": os.path.basename(a_path), "load": os.path.basename(b_path),
    }
    with open(os.path.join(out_dir, f"system_k{k:g}.json"), "w", encoding="utf-8") as fh:
        json.dump(info, fh, indent=2, sort_keys=True)
    return info
