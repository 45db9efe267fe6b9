"""Parameter sweeps regenerating the mixing physics as machine-readable tables.

Sweeps evaluate side-component intensities on amplitude grids, asymmetric
(fixed-ratio) amplitude grids, and 2-D detuning-by-amplitude maps, with an
analytic engine (closed-form amplitudes), the time-domain oracle, or both
("dual", which also reports relative deviations).  Output is deterministic:
rows are sorted by grid index, order and side before emission, independent
of worker scheduling, and CSV/JSON serialization round-trips floats exactly.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

from .bloch import IntegrationSettings, steady_harmonics
from .core import AtomParams, BichromaticDrive, derive_mixing_angles
from .mixing import sideband_amplitude

CSV_MAGIC = "# sideband-mixer v1"
ENGINES = ("analytic", "oracle", "dual")


@dataclass(frozen=True)
class SweepSpec:
    """What to sweep and how.

    ``base_drive`` fixes everything the grid does not touch: half_splitting,
    central detuning, and the ratio of the two tone amplitudes.  Amplitude
    grids rescale the base amplitude pair so that max(Om-, Om+) equals the
    grid value; this keeps single-tone sweeps (one base amplitude zero)
    expressible.
    """

    param: str                      # "amplitude" or "detuning"
    grid: tuple[float, ...]         # swept values, rad/s
    atom: AtomParams
    base_drive: BichromaticDrive
    orders: tuple[int, ...] = (1, 2, 3, 4)
    engine: str = "analytic"
    grid2: tuple[float, ...] | None = None   # amplitude rows of a 2-D map
    oracle_stride: int = 4
    normalized: bool = True         # intensities divided by Gamma1^2
    workers: int = 1
    settings: IntegrationSettings | None = None
    output_path: str | None = None

    def __post_init__(self) -> None:
        if self.param not in ("amplitude", "detuning"):
            raise ValueError(f"unknown sweep parameter {self.param!r}")
        if self.engine not in ENGINES:
            raise ValueError(f"engine must be one of {ENGINES}")
        for name, grid in (("grid", self.grid), ("grid2", self.grid2)):
            if grid is None:
                continue
            if len(grid) == 0:
                raise ValueError(f"{name} must be non-empty")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise ValueError(f"{name} must be strictly increasing")
        if any(p < 0 for p in self.orders) or not self.orders:
            raise ValueError("orders must be a non-empty list of p >= 0")
        if self.oracle_stride < 1:
            raise ValueError("oracle_stride must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def drive_at(self, amplitude: float, detuning: float | None = None) -> BichromaticDrive:
        base = self.base_drive
        peak = max(base.omega_minus_amp, base.omega_plus_amp)
        if peak <= 0:
            raise ValueError("base_drive must have a nonzero amplitude ratio")
        return BichromaticDrive(
            omega_minus_amp=amplitude * base.omega_minus_amp / peak,
            omega_plus_amp=amplitude * base.omega_plus_amp / peak,
            central_detuning=base.central_detuning if detuning is None else detuning,
            half_splitting=base.half_splitting,
        )

    def to_dict(self) -> dict:
        return {
            "param": self.param,
            "grid": list(self.grid),
            "grid2": list(self.grid2) if self.grid2 is not None else None,
            "atom": {
                "gamma1": self.atom.gamma1,
                "gamma1_nr": self.atom.gamma1_nr,
                "gamma_phi": self.atom.gamma_phi,
            },
            "base_drive": {
                "omega_minus_amp": self.base_drive.omega_minus_amp,
                "omega_plus_amp": self.base_drive.omega_plus_amp,
                "central_detuning": self.base_drive.central_detuning,
                "half_splitting": self.base_drive.half_splitting,
            },
            "orders": list(self.orders),
            "engine": self.engine,
            "oracle_stride": self.oracle_stride,
            "normalized": self.normalized,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SweepSpec":
        return cls(
            param=doc["param"],
            grid=tuple(doc["grid"]),
            grid2=tuple(doc["grid2"]) if doc.get("grid2") is not None else None,
            atom=AtomParams(**doc["atom"]),
            base_drive=BichromaticDrive(**doc["base_drive"]),
            orders=tuple(doc["orders"]),
            engine=doc["engine"],
            oracle_stride=doc.get("oracle_stride", 4),
            normalized=doc.get("normalized", True),
        )


@dataclass(frozen=True)
class SweepRow:
    grid_value: float
    grid_value2: float | None
    p: int
    side: int                      # +1 or -1
    intensity: float
    oracle_intensity: float | None = None
    rel_dev: float | None = None


@dataclass(frozen=True)
class SweepTable:
    spec: SweepSpec
    rows: tuple[SweepRow, ...]
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def two_dimensional(self) -> bool:
        return self.spec.grid2 is not None

    def select(
        self, p: int | None = None, side: int | None = None,
        grid_value2: float | None = None,
    ) -> list[SweepRow]:
        out = []
        for row in self.rows:
            if p is not None and row.p != p:
                continue
            if side is not None and row.side != side:
                continue
            if grid_value2 is not None and row.grid_value2 != grid_value2:
                continue
            out.append(row)
        return out


@dataclass(frozen=True)
class Extremum:
    p: int
    side: int
    location: float
    value: float
    fixed: float | None = None     # the untouched grid axis of a 2-D map


@dataclass(frozen=True)
class ExtremaResult:
    extrema: tuple[Extremum, ...]
    boundary: tuple[Extremum, ...]  # grid-edge maxima, flagged, never refined


def _analytic_intensity(atom, drive, p, side, norm):
    angles = derive_mixing_angles(atom, drive)
    amp = sideband_amplitude(angles, drive, p, side)
    return abs(amp) ** 2 / norm


def _oracle_point(payload):
    atom, drive, p_max, settings, norm = payload
    spectrum = steady_harmonics(atom, drive, p_max, settings)
    return {n: abs(a) ** 2 / norm for n, a in spectrum}


def _pmap(fn, items: Sequence, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _run_sweep(spec: SweepSpec, points: list[tuple[float, float | None, BichromaticDrive]]):
    """Evaluate all (grid point, order, side) cells for the chosen engine."""
    analytic = spec.engine in ("analytic", "dual")
    oracle = spec.engine in ("oracle", "dual")
    norm = spec.atom.gamma1**2 if spec.normalized else 1.0
    p_max = max(spec.orders)

    oracle_results: dict[int, dict[int, float]] = {}
    if oracle:
        idx = list(range(0, len(points), spec.oracle_stride))
        payloads = [
            (spec.atom, points[i][2], p_max, spec.settings, norm) for i in idx
        ]
        for i, res in zip(idx, _pmap(_oracle_point, payloads, spec.workers)):
            oracle_results[i] = res

    rows = []
    for i, (g1, g2v, drive) in enumerate(points):
        osc = oracle_results.get(i)
        if spec.engine == "oracle" and osc is None:
            continue  # the oracle engine evaluates the strided subgrid only
        for p in spec.orders:
            for side in (-1, +1):
                ana = (
                    _analytic_intensity(spec.atom, drive, p, side, norm)
                    if analytic
                    else None
                )
                osc_int = osc[side * (2 * p + 1)] if osc is not None else None
                if spec.engine == "analytic":
                    intensity, oracle_int, rel = ana, None, None
                elif spec.engine == "oracle":
                    intensity, oracle_int, rel = osc_int, None, None
                else:
                    intensity, oracle_int = ana, osc_int
                    if osc_int is None:
                        rel = None
                    elif ana > 0:
                        rel = abs(osc_int - ana) / ana
                    else:
                        rel = None
                rows.append(
                    SweepRow(
                        grid_value=g1,
                        grid_value2=g2v,
                        p=p,
                        side=side,
                        intensity=intensity,
                        oracle_intensity=oracle_int,
                        rel_dev=rel,
                    )
                )
    rows.sort(
        key=lambda r: (
            r.grid_value2 if r.grid_value2 is not None else 0.0,
            r.grid_value,
            r.p,
            r.side,
        )
    )
    return tuple(rows)


def sweep_amplitude(spec: SweepSpec) -> SweepTable:
    """Side-component intensities versus drive amplitude.

    Each order's curve rises, peaks and decays; interior peak locations are
    recorded in ``meta["peaks"]`` when the grid is dense enough to refine
    them.
    """
    if spec.param != "amplitude":
        raise ValueError("sweep_amplitude needs a spec with param='amplitude'")
    if any(g <= 0 for g in spec.grid):
        raise ValueError("amplitude grid values must be > 0")
    points = [(g, None, spec.drive_at(g)) for g in spec.grid]
    table = SweepTable(spec=spec, rows=_run_sweep(spec, points))
    # strided oracle runs may leave fewer evaluated points than grid values
    if len({r.grid_value for r in table.rows}) >= 3:
        found = find_extrema(table, axis="grid_value")
        table.meta["peaks"] = [
            {"p": e.p, "side": e.side, "location": e.location, "value": e.value}
            for e in found.extrema
        ]
    return table


def sweep_asymmetric(spec: SweepSpec, offset_db: float) -> SweepTable:
    """Amplitude sweep with the lower tone ``offset_db`` dB above the upper.

    The offset is applied as an amplitude factor 10^(offset_db/20); the grid
    value is the larger (lower-tone) amplitude.  The per-order asymmetry
    ratios |side-|^2/|side+|^2 across the grid are reported in
    ``meta["asymmetry_ratios"]``.
    """
    factor = 10.0 ** (offset_db / 20.0)
    base = spec.base_drive
    spec = SweepSpec(
        param="amplitude",
        grid=spec.grid,
        atom=spec.atom,
        base_drive=BichromaticDrive(
            omega_minus_amp=factor,
            omega_plus_amp=1.0,
            central_detuning=base.central_detuning,
            half_splitting=base.half_splitting,
        ),
        orders=spec.orders,
        engine=spec.engine,
        oracle_stride=spec.oracle_stride,
        normalized=spec.normalized,
        workers=spec.workers,
        settings=spec.settings,
        output_path=spec.output_path,
    )
    table = sweep_amplitude(spec)
    ratios = []
    for p in spec.orders:
        minus = {r.grid_value: r.intensity for r in table.select(p=p, side=-1)}
        plus = {r.grid_value: r.intensity for r in table.select(p=p, side=+1)}
        present = sorted(minus)
        ratios.append(
            {
                "p": p,
                "grid": present,
                "ratio": [
                    minus[g] / plus[g] if plus[g] > 0 else math.inf for g in present
                ],
            }
        )
    table.meta["asymmetry_ratios"] = ratios
    table.meta["offset_db"] = offset_db
    return table


def sweep_detuning_map(spec: SweepSpec) -> SweepTable:
    """2-D intensity map over central detuning (grid) x amplitude (grid2).

    For every amplitude row the interior maxima over detuning are extracted
    into ``meta["detuning_maxima"]``; rows whose maximum sits on the grid
    boundary are reported under ``meta["boundary"]``.
    """
    if spec.param != "detuning":
        raise ValueError("sweep_detuning_map needs a spec with param='detuning'")
    if spec.grid2 is None:
        raise ValueError("sweep_detuning_map needs grid2 (amplitude rows)")
    if any(g <= 0 for g in spec.grid2):
        raise ValueError("amplitude rows must be > 0")
    points = [
        (d, g, spec.drive_at(g, detuning=d)) for g in spec.grid2 for d in spec.grid
    ]
    table = SweepTable(spec=spec, rows=_run_sweep(spec, points))
    if len({r.grid_value for r in table.rows}) >= 3:
        found = find_extrema(table, axis="grid_value")
        table.meta["detuning_maxima"] = [
            {
                "p": e.p, "side": e.side, "amplitude": e.fixed,
                "location": e.location, "value": e.value,
            }
            for e in found.extrema
        ]
        table.meta["boundary"] = [
            {
                "p": e.p, "side": e.side, "amplitude": e.fixed,
                "location": e.location, "value": e.value,
            }
            for e in found.boundary
        ]
    return table


def _parabolic_vertex(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Vertex of the parabola through three (x, y) points (non-uniform x)."""
    x0, x1, x2 = x
    y0, y1, y2 = y
    d01 = x1 - x0
    d12 = x1 - x2
    num = d01**2 * (y1 - y2) - d12**2 * (y1 - y0)
    den = d01 * (y1 - y2) - d12 * (y1 - y0)
    if den == 0:
        return x1, y1
    xv = x1 - 0.5 * num / den
    # evaluate the same parabola at the vertex (Lagrange form)
    yv = (
        y0 * (xv - x1) * (xv - x2) / ((x0 - x1) * (x0 - x2))
        + y1 * (xv - x0) * (xv - x2) / ((x1 - x0) * (x1 - x2))
        + y2 * (xv - x0) * (xv - x1) / ((x2 - x0) * (x2 - x1))
    )
    return float(xv), float(yv)


def find_extrema(table: SweepTable, axis: str = "grid_value") -> ExtremaResult:
    """Locate interior maxima of intensity along one grid axis.

    Grid maxima are refined by a parabola through the three surrounding
    points.  Maxima sitting on the grid edge are flagged under
    ``boundary`` and never refined or returned as extrema.
    """
    if axis != "grid_value":
        raise ValueError("only the primary grid axis can be scanned")

    groups: dict[tuple, list[SweepRow]] = {}
    for row in table.rows:
        groups.setdefault((row.p, row.side, row.grid_value2), []).append(row)

    extrema: list[Extremum] = []
    boundary: list[Extremum] = []
    for (p, side, fixed), rows in sorted(
        groups.items(), key=lambda kv: (kv[0][2] or 0.0, kv[0][0], kv[0][1])
    ):
        rows = sorted(rows, key=lambda r: r.grid_value)
        if len(rows) < 3:
            raise ValueError("grid too sparse: need >= 3 points around an extremum")
        xs = [r.grid_value for r in rows]
        ys = [r.intensity for r in rows]
        for i in range(len(rows)):
            if 0 < i < len(rows) - 1:
                if ys[i] > ys[i - 1] and ys[i] >= ys[i + 1]:
                    loc, val = _parabolic_vertex(xs[i - 1 : i + 2], ys[i - 1 : i + 2])
                    extrema.append(Extremum(p, side, loc, val, fixed))
            elif ys[i] == max(ys):
                neighbor = ys[1] if i == 0 else ys[-2]
                if ys[i] > neighbor:
                    boundary.append(Extremum(p, side, xs[i], ys[i], fixed))
    return ExtremaResult(extrema=tuple(extrema), boundary=tuple(boundary))


def _fmt(value: float | None) -> str:
    return "" if value is None else repr(value)


def _csv_columns(table: SweepTable) -> list[str]:
    cols = ["grid_value"]
    if table.two_dimensional:
        cols.append("grid_value2")
    cols += ["p", "side", "intensity"]
    if table.spec.engine == "dual":
        cols += ["oracle_intensity", "rel_dev"]
    return cols


def table_to_csv(table: SweepTable) -> str:
    buf = io.StringIO()
    buf.write(CSV_MAGIC + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    cols = _csv_columns(table)
    writer.writerow(cols)
    for row in table.rows:
        rec = [_fmt(row.grid_value)]
        if table.two_dimensional:
            rec.append(_fmt(row.grid_value2))
        rec += [str(row.p), "+" if row.side > 0 else "-", _fmt(row.intensity)]
        if table.spec.engine == "dual":
            rec += [_fmt(row.oracle_intensity), _fmt(row.rel_dev)]
        writer.writerow(rec)
    return buf.getvalue()


def read_table_csv(path: str | Path) -> list[SweepRow]:
    """Parse a sweep CSV back into rows (floats round-trip bit-exactly)."""
    path = Path(path)
    with path.open() as fh:
        magic = fh.readline().rstrip("\n")
        if magic != CSV_MAGIC:
            raise ValueError(f"{path}: not a sideband-mixer CSV (header {magic!r})")
        reader = csv.DictReader(fh)
        rows = []
        for rec in reader:
            rows.append(
                SweepRow(
                    grid_value=float(rec["grid_value"]),
                    grid_value2=(
                        float(rec["grid_value2"]) if "grid_value2" in rec else None
                    ),
                    p=int(rec["p"]),
                    side=+1 if rec["side"] == "+" else -1,
                    intensity=float(rec["intensity"]),
                    oracle_intensity=(
                        float(rec["oracle_intensity"])
                        if rec.get("oracle_intensity")
                        else None
                    ),
                    rel_dev=float(rec["rel_dev"]) if rec.get("rel_dev") else None,
                )
            )
    return rows


def table_from_doc(doc: dict) -> SweepTable:
    """Rebuild a SweepTable from its JSON document (inverse of table_to_json)."""
    spec = SweepSpec.from_dict(doc["spec"])
    rows = []
    for rec in doc["rows"]:
        rows.append(
            SweepRow(
                grid_value=rec["grid_value"],
                grid_value2=rec.get("grid_value2"),
                p=rec["p"],
                side=+1 if rec["side"] == "+" else -1,
                intensity=rec["intensity"],
                oracle_intensity=rec.get("oracle_intensity"),
                rel_dev=rec.get("rel_dev"),
            )
        )
    meta = {
        k: v for k, v in doc.get("meta", {}).items()
        if k not in ("version", "timestamp")
    }
    return SweepTable(spec=spec, rows=tuple(rows), meta=meta)


@dataclass(frozen=True)
class OracleCheckRow:
    grid_value: float
    p: int
    side: int
    analytic_mag: float            # |Omega_sc| from the closed form, rad/s
    oracle_mag: float              # |harmonic| from the time-domain oracle
    rel_dev: float


def oracle_check(
    atom: AtomParams,
    base_drive: BichromaticDrive,
    grid: Sequence[float],
    orders: Sequence[int],
    settings: IntegrationSettings | None = None,
    workers: int = 1,
) -> tuple[list[OracleCheckRow], float]:
    """Compare closed-form sideband magnitudes against the Bloch oracle.

    Every amplitude grid point costs one ODE integration; magnitudes (not
    intensities) are compared, matching how the two conventions can be
    compared at all (they differ by a global phase).  Returns the per-cell
    rows and the maximum relative deviation.
    """
    spec = SweepSpec(
        param="amplitude",
        grid=tuple(grid),
        atom=atom,
        base_drive=base_drive,
        orders=tuple(orders),
        engine="dual",
        oracle_stride=1,
        workers=workers,
        settings=settings,
    )
    p_max = max(spec.orders)
    points = [(g, None, spec.drive_at(g)) for g in spec.grid]
    payloads = [(atom, drive, p_max, settings, 1.0) for _, _, drive in points]
    oracle_ints = _pmap(_oracle_point, payloads, workers)

    rows: list[OracleCheckRow] = []
    for (g, _, drive), osc in zip(points, oracle_ints):
        angles = derive_mixing_angles(atom, drive)
        for p in spec.orders:
            for side in (-1, +1):
                ana = abs(sideband_amplitude(angles, drive, p, side))
                orc = math.sqrt(osc[side * (2 * p + 1)])
                rel = abs(orc - ana) / ana if ana > 0 else math.inf
                rows.append(OracleCheckRow(g, p, side, ana, orc, rel))
    return rows, max(r.rel_dev for r in rows)


def _deterministic_timestamp() -> str:
    # Byte-identical reruns are part of the output contract, so wall time
    # is not: honor SOURCE_DATE_EPOCH, fall back to the epoch itself.
    epoch = int(os.environ.get("SOURCE_DATE_EPOCH", "0"))
    return datetime.fromtimestamp(epoch, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def table_to_json(table: SweepTable) -> str:
    rows = []
    for row in table.rows:
        rec = {"grid_value": row.grid_value}
        if table.two_dimensional:
            rec["grid_value2"] = row.grid_value2
        rec.update(p=row.p, side="+" if row.side > 0 else "-", intensity=row.intensity)
        if table.spec.engine == "dual":
            rec.update(oracle_intensity=row.oracle_intensity, rel_dev=row.rel_dev)
        rows.append(rec)
    doc = {
        "spec": table.spec.to_dict(),
        "rows": rows,
        "meta": {
            "version": "1",
            "timestamp": _deterministic_timestamp(),
            **table.meta,
        },
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _plot_svg(table: SweepTable, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import numpy as np

    orders = sorted(set(r.p for r in table.rows))
    if table.two_dimensional:
        fig, axes = plt.subplots(
            1, len(orders), figsize=(4 * len(orders), 3.2), squeeze=False
        )
        xs = np.array(table.spec.grid)
        ys = np.array(table.spec.grid2)
        for ax, p in zip(axes[0], orders):
            lut = {
                (r.grid_value, r.grid_value2): r.intensity
                for r in table.rows
                if r.p == p and r.side == +1
            }
            z = np.array(
                [[lut.get((x, y), np.nan) for x in xs] for y in ys]
            )
            floor = max(z.max(), 1e-300) * 1e-8
            mesh = ax.pcolormesh(xs, ys, np.log10(np.maximum(z, floor)), shading="auto")
            fig.colorbar(mesh, ax=ax, label="log10 intensity")
            ax.set_title(f"p={p}, side +")
            ax.set_xlabel("detuning (rad/s)")
            ax.set_ylabel("amplitude (rad/s)")
    else:
        fig, ax = plt.subplots(figsize=(6, 4))
        for p in orders:
            for side, mark in ((-1, "--"), (+1, "-")):
                rows = table.select(p=p, side=side)
                ax.plot(
                    [r.grid_value for r in rows],
                    [r.intensity for r in rows],
                    mark,
                    label=f"p={p} {'+' if side > 0 else '-'}",
                )
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel(f"{table.spec.param} (rad/s)")
        ax.set_ylabel("intensity")
        ax.legend(fontsize="small", ncol=2)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def emit_outputs(
    table: SweepTable,
    formats: Iterable[str] = ("csv", "json"),
    base_path: str | Path | None = None,
) -> dict[str, Path]:
    """Write the table as CSV/JSON (and optionally SVG) next to ``base_path``.

    The SVG is a line plot for 1-D sweeps and a heatmap for 2-D maps.
    Returns the mapping format -> written path.
    """
    if base_path is None:
        if table.spec.output_path is None:
            raise ValueError("no output path: pass base_path or set spec.output_path")
        base_path = table.spec.output_path
    base = Path(base_path)
    base.parent.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}
    for fmt in formats:
        if fmt == "csv":
            path = base.with_suffix(".csv")
            path.write_text(table_to_csv(table))
        elif fmt == "json":
            path = base.with_suffix(".json")
            path.write_text(table_to_json(table))
        elif fmt == "svg":
            path = base.with_suffix(".svg")
            _plot_svg(table, path)
        else:
            raise ValueError(f"unknown output format {fmt!r}")
        written[fmt] = path
    return written
