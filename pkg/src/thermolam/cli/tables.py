"""CSV serialisation of spectrum tables and band reports, and atomic writes."""

from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import mpmath

from ..spectrum import BandReport, SpectrumPoint, SpectrumTable

SPECTRUM_COLUMNS = (
    "omega_star", "delta", "k1_star", "branch", "lambda_re", "lambda_im",
    "k2r_star", "k2i_star", "family", "flags",
)
BAND_COLUMNS = (
    "family", "delta", "band_index", "kind", "omega_lo_star", "omega_hi_star",
    "width_star", "mean_star",
)


def fmt_float(x: float) -> str:
    """17 significant digits; round-trips every double."""
    return format(float(x), ".17g")


def fmt_mpf(x) -> str:
    """17 significant digits of an mpmath real, any exponent."""
    x = mpmath.mpf(x)
    if x == 0:
        return "0"
    return mpmath.libmp.to_str(x._mpf_, 17)


def parse_mpf(s: str) -> mpmath.mpf:
    with mpmath.workprec(53):
        return mpmath.mpf(s)


def spectrum_rows(points: Iterable[SpectrumPoint]) -> list[list[str]]:
    rows = []
    for p in points:
        rows.append([
            fmt_float(p.omega_star), fmt_float(p.delta), fmt_float(p.k1_star), str(p.branch),
            fmt_mpf(p.lam.real), fmt_mpf(p.lam.imag), fmt_float(p.k2r_star),
            fmt_float(p.k2i_star), p.family, ";".join(p.flags),
        ])
    return rows


def band_rows(reports: Iterable[BandReport]) -> list[list[str]]:
    rows = []
    for r in reports:
        for b in r.bands:
            rows.append([
                r.family, fmt_float(r.delta), str(b.index), b.kind, fmt_float(b.omega_lo),
                fmt_float(b.omega_hi), fmt_float(b.width), fmt_float(b.mean),
            ])
    return rows


def csv_text(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def spectrum_csv(points: Iterable[SpectrumPoint]) -> str:
    return csv_text(SPECTRUM_COLUMNS, spectrum_rows(points))


def bands_csv(reports: Iterable[BandReport]) -> str:
    return csv_text(BAND_COLUMNS, band_rows(reports))


def read_spectrum_csv(text: str) -> SpectrumTable:
    """Parse a spectrum CSV back into a table (eigenvectors are not stored)."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != SPECTRUM_COLUMNS:
        raise ValueError(f"unexpected spectrum columns {header}")
    pts = []
    for row in reader:
        w, d, k1, br, lr, li, kr, ki, fam, fl = row
        with mpmath.workprec(53):
            lam = mpmath.mpc(parse_mpf(lr), parse_mpf(li))
        pts.append(SpectrumPoint(
            omega_star=float(w), delta=float(d), k1_star=float(k1), branch=int(br), lam=lam,
            k2r_star=float(kr), k2i_star=float(ki), family=fam,
            flags=tuple(f for f in fl.split(";") if f), eigvec=None,
        ))
    k1s = pts[0].k1_star if pts else 0.0
    return SpectrumTable(points=pts, k1_star=k1s)


def check_writable(directory: Path) -> None:
    """Create ``directory`` and prove a file can be written there.

    Raises
    ------
    OSError
    """
    directory.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".probe-")
    os.close(fd)
    os.unlink(tmp)


class AtomicWriter:
    """Stage files next to their targets and publish them together.

    Nothing becomes visible under its final name until :meth:`commit`;
    on failure every staged file is removed.
    """

    def __init__(self, directory: Path):
        self.directory = Path(directory)
        self._staged: list[tuple[Path, Path]] = []

    def add(self, name: str, content: str | bytes) -> Path:
        target = self.directory / name
        data = content.encode("utf-8") if isinstance(content, str) else content
        fd, tmp = tempfile.mkstemp(dir=self.directory, prefix=f".{name}.")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
        except BaseException:
            os.unlink(tmp)
            raise
        self._staged.append((Path(tmp), target))
        return target

    def commit(self) -> list[Path]:
        done = []
        for tmp, target in self._staged:
            os.replace(tmp, target)
            done.append(target)
        self._staged = []
        return done

    def abort(self) -> None:
        for tmp, _ in self._staged:
            try:
                os.unlink(tmp)
            except OSError:
                pass
        self._staged = []


__all__ = [
    "SPECTRUM_COLUMNS",
    "BAND_COLUMNS",
    "spectrum_csv",
    "bands_csv",
    "read_spectrum_csv",
    "fmt_float",
    "fmt_mpf",
    "AtomicWriter",
    "check_writable",
]
