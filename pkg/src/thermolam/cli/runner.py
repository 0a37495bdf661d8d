"""Batch run: sweep, band reports, CSV, manifest and plots."""

from __future__ import annotations

import json
import math
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path

from .. import __version__
from ..spectrum import RECIPROCITY_TOL, BandReport, SpectrumTable, band_report, sweep
from .config import RunConfig
from .svg import STYLE_VERSION, svg_bands_vs_delta, svg_k2i, svg_k2r
from .tables import AtomicWriter, bands_csv, check_writable, fmt_float, spectrum_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

#: ``|det T - 1|`` accepted per precision level.
DET_TOL = {"double": 1e-8, "dd": 1e-18, "qd": 1e-40}

#: ``|lambda_i lambda_j - 1|`` accepted per precision level.
RECIP_TOL = {"double": 1e-6, "dd": RECIPROCITY_TOL, "qd": 1e-24}


@dataclass
class RunResult:
    exit_code: int
    manifest: dict
    table: SpectrumTable | None = None
    reports: list[BandReport] = field(default_factory=list)
    written: list[Path] = field(default_factory=list)


def spectrum_filename(cfg: RunConfig, delta: float) -> str:
    return f"{cfg.outputs.spectrum_prefix}_delta_{fmt_float(delta)}.csv"


def _invariant_violations(table: SpectrumTable, level: str) -> list[dict]:
    out = []
    for d in table.diagnostics:
        bad = []
        if not d.det_residual <= DET_TOL[level]:
            bad.append(f"det residual {d.det_residual:.3e}")
        if not d.reciprocity_residual <= RECIP_TOL[level]:
            bad.append(f"reciprocity residual {d.reciprocity_residual:.3e}")
        if bad:
            out.append({"omega_star": d.omega_star, "delta": d.delta, "violations": bad})
    return out


def _finite(x: float) -> float | str:
    return x if math.isfinite(x) else str(x)


def run(cfg: RunConfig, *, out_dir: str | Path | None = None, plots: bool | None = None) -> RunResult:
    """Execute a validated configuration.

    All files are staged and published together at the end; when the
    output directory is unusable nothing is computed or written.  The
    manifest is written for every run that reaches the writer, including
    runs with failed points.
    """
    t_start = time.perf_counter()
    out = Path(out_dir if out_dir is not None else cfg.outputs.dir)
    manifest: dict = {
        "tool": "thermolam",
        "version": __version__,
        "python": platform.python_version(),
        "config_hash": cfg.config_hash(),
        "config": json.loads(cfg.canonical_json()),
        "precision": {"level": cfg.precision, "adaptive": cfg.adaptive_precision},
        "svg_style": STYLE_VERSION,
    }
    try:
        check_writable(out)
    except OSError as exc:
        manifest["error"] = f"output directory {out}: {exc.strerror or exc}"
        return RunResult(EXIT_IO, manifest)

    cell = cfg.build_cell()
    scfg = cfg.sweep_config()
    t0 = time.perf_counter()
    table = sweep(cell, scfg)
    t_sweep = time.perf_counter() - t0

    t0 = time.perf_counter()
    reports: list[BandReport] = []
    for fam in cfg.bands.families:
        for d in scfg.deltas:
            reports.append(band_report(
                table, fam, d, cell=cell if cfg.bands.refine else None,
                precision=scfg.precision, rtol=cfg.bands.rtol,
            ))
    t_bands = time.perf_counter() - t0

    violations = _invariant_violations(table, cfg.precision)
    manifest["points"] = {
        "requested": len(scfg.omega_star) * len(scfg.deltas),
        "evaluated": len(table.diagnostics),
        "failed": len(table.failures),
    }
    manifest["failures"] = [
        {"omega_star": f.omega_star, "delta": f.delta, "k1_star": f.k1_star, "error": f.error}
        for f in table.failures
    ]
    manifest["invariant_violations"] = violations
    manifest["max_residuals"] = {
        "det": _finite(max((d.det_residual for d in table.diagnostics), default=0.0)),
        "reciprocity": _finite(max((d.reciprocity_residual for d in table.diagnostics), default=0.0)),
        "palindromic": _finite(max((d.palindromic_residual for d in table.diagnostics), default=0.0)),
    }
    manifest["band_flags"] = sorted({f for r in reports for f in r.flags})

    writer = AtomicWriter(out)
    files = []
    try:
        for d in scfg.deltas:
            name = spectrum_filename(cfg, d)
            writer.add(name, spectrum_csv(table.select(delta=d)))
            files.append(name)
        writer.add(cfg.outputs.bands_file, bands_csv(reports))
        files.append(cfg.outputs.bands_file)
        if cfg.plots.enabled if plots is None else plots:
            writer.add("spectrum_k2r.svg", svg_k2r(table.points, k2i_window=cfg.plots.k2i_window))
            writer.add("spectrum_k2i.svg", svg_k2i(table.points))
            writer.add("bands_vs_delta.svg", svg_bands_vs_delta(reports))
            files += ["spectrum_k2r.svg", "spectrum_k2i.svg", "bands_vs_delta.svg"]
        code = EXIT_NUMERIC if (table.failures or violations) else EXIT_OK
        manifest["outputs"] = files
        manifest["exit_code"] = code
        manifest["timings_s"] = {
            "sweep": round(t_sweep, 3), "bands": round(t_bands, 3),
            "total": round(time.perf_counter() - t_start, 3),
        }
        writer.add(cfg.outputs.manifest_file, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        written = writer.commit()
    except OSError as exc:
        writer.abort()
        manifest["error"] = f"write failed: {exc.strerror or exc}"
        return RunResult(EXIT_IO, manifest, table, reports)
    return RunResult(code, manifest, table, reports, written)


__all__ = ["run", "RunResult", "EXIT_OK", "EXIT_CONFIG", "EXIT_NUMERIC", "EXIT_IO", "DET_TOL", "RECIP_TOL"]
