"""Measurement-corpus ingestion and report tables.

A corpus is one manifest (CSV, one row per measurement) plus a trace file per
row. The manifest schema is documented in the package README; it was chosen
as the neutral interchange layout, and external deposits are mapped into it
by a small adapter step outside this library.

Two table families are produced. Peak-force-change tables give the mean
percent difference of peak impact force between a setup and a baseline
setup, per impact place and averaged per contact kind. Safe-velocity tables
give, per place and per force-limit window, the largest measured velocity
whose recorded forces stay within the window's limit, next to the analytic
limits with and without the compliant-cover term.

Reported safe velocities are always elements of the measured grid or
sentinels, never interpolated. All rendering is deterministic: fixed column
orders, fixed float formats, no timestamps.
"""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import trace_analysis
from .pfl_model import ContactScenario, display_round, permissible_velocity
from .trace_analysis import ForceTrace

FORMAT_VERSION = "pflkit-corpus/1"
MANIFEST_NAME = "manifest.csv"
MANIFEST_COLUMNS = (
    "robot",
    "place",
    "direction_x",
    "direction_y",
    "direction_z",
    "contact_kind",
    "velocity",
    "skin_setting",
    "safety_setting",
    "repetition",
    "trace_file",
)

QUASI_STATIC = "quasi_static"
TRANSIENT = "transient"
QUASI_STATIC_PLACES = (0, 1, 2)
TRANSIENT_PLACES = (3, 4)

# default measured velocity grids, m/s
QUASI_STATIC_GRID = (0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50)
TRANSIENT_GRID = (0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50, 0.60, 0.70)

_SKIN_SETTING = re.compile(r"^(none|passive|active\([^()]+\))$")

WINDOW_FIRST = "<0.5"
WINDOW_SECOND = ">0.5"


class CorpusError(ValueError):
    """Missing or structurally broken corpus."""


def _valid_skin_setting(value: str) -> bool:
    return bool(_SKIN_SETTING.match(value))


@dataclass(frozen=True)
class MeasurementRecord:
    """One collision measurement: metadata plus its force trace."""

    robot: str
    place: int
    direction: tuple[float, float, float]
    contact_kind: str
    velocity: float
    skin_setting: str
    safety_setting: str
    repetition: int
    trace: ForceTrace

    def __post_init__(self):
        if self.contact_kind not in (QUASI_STATIC, TRANSIENT):
            raise CorpusError(f"unknown contact kind {self.contact_kind!r}")
        expected = QUASI_STATIC_PLACES if self.contact_kind == QUASI_STATIC else TRANSIENT_PLACES
        if self.place not in expected:
            raise CorpusError(
                f"place {self.place} inconsistent with {self.contact_kind} contact"
            )
        norm = math.sqrt(sum(c * c for c in self.direction))
        if abs(norm - 1.0) > 1e-6:
            raise CorpusError("direction must be a unit vector")
        if not _valid_skin_setting(self.skin_setting):
            raise CorpusError(f"unknown skin setting {self.skin_setting!r}")
        if self.repetition < 0:
            raise CorpusError("repetition index must be nonnegative")


SetupKey = tuple  # (robot, skin_setting, safety_setting)


def setup_key(record: MeasurementRecord) -> SetupKey:
    return (record.robot, record.skin_setting, record.safety_setting)


def _grid_for(contact_kind: str, qs_grid, tr_grid):
    return qs_grid if contact_kind == QUASI_STATIC else tr_grid


def _on_grid(velocity: float, grid) -> bool:
    return any(abs(velocity - g) < 1e-6 for g in grid)


@dataclass
class IngestReport:
    """Validated records plus one issue line (file:line: reason) per bad row."""

    records: list[MeasurementRecord] = field(default_factory=list)
    issues: list[str] = field(default_factory=list)


def ingest(
    corpus_path,
    quasi_static_grid=QUASI_STATIC_GRID,
    transient_grid=TRANSIENT_GRID,
) -> IngestReport:
    """Read a corpus directory; malformed rows become issues, never silence.

    Raises CorpusError only when the manifest itself is missing or unreadable.
    """
    corpus = Path(corpus_path)
    manifest = corpus / MANIFEST_NAME
    if not manifest.is_file():
        raise CorpusError(f"missing manifest: {manifest}")
    report = IngestReport()
    with manifest.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return report
        missing = [c for c in MANIFEST_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise CorpusError(f"{manifest}: manifest lacks columns {missing}")
        for lineno, row in enumerate(reader, start=2):
            where = f"{manifest}:{lineno}"
            try:
                record = _parse_row(corpus, row)
            except (CorpusError, trace_analysis.TraceError, ValueError) as exc:
                report.issues.append(f"{where}: {exc}")
                continue
            grid = _grid_for(record.contact_kind, quasi_static_grid, transient_grid)
            if not _on_grid(record.velocity, grid):
                report.issues.append(
                    f"{where}: velocity {record.velocity} not on the declared grid"
                )
                continue
            report.records.append(record)
    return report


def _parse_row(corpus: Path, row: dict) -> MeasurementRecord:
    trace_file = corpus / row["trace_file"]
    if not trace_file.is_file():
        raise CorpusError(f"trace file not found: {row['trace_file']}")
    trace = trace_analysis.load_trace(trace_file)
    return MeasurementRecord(
        robot=row["robot"].strip(),
        place=int(row["place"]),
        direction=(
            float(row["direction_x"]),
            float(row["direction_y"]),
            float(row["direction_z"]),
        ),
        contact_kind=row["contact_kind"].strip(),
        velocity=float(row["velocity"]),
        skin_setting=row["skin_setting"].strip(),
        safety_setting=row["safety_setting"].strip(),
        repetition=int(row["repetition"]),
        trace=trace,
    )


def export(records: list[MeasurementRecord], corpus_path) -> None:
    """Write records as a corpus directory (manifest plus trace files)."""
    corpus = Path(corpus_path)
    corpus.mkdir(parents=True, exist_ok=True)
    (corpus / "traces").mkdir(exist_ok=True)
    with (corpus / MANIFEST_NAME).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_COLUMNS)
        for i, rec in enumerate(records):
            trace_name = f"traces/trace_{i:05d}.csv"
            trace_analysis.save_trace(rec.trace, corpus / trace_name)
            writer.writerow(
                [
                    rec.robot,
                    rec.place,
                    f"{rec.direction[0]:.6f}",
                    f"{rec.direction[1]:.6f}",
                    f"{rec.direction[2]:.6f}",
                    rec.contact_kind,
                    f"{rec.velocity:.6g}",
                    rec.skin_setting,
                    rec.safety_setting,
                    rec.repetition,
                    trace_name,
                ]
            )


@dataclass(frozen=True)
class SetupAggregate:
    """Per-velocity mean peak force and sample count for one setup and place."""

    key: SetupKey
    place: int
    contact_kind: str
    mean_peak_force: dict  # velocity -> mean of peak forces over repetitions
    counts: dict  # velocity -> repetition count


def build_aggregates(records: list[MeasurementRecord]) -> list[SetupAggregate]:
    """Group records by (setup, place) and average peak forces per velocity."""
    groups: dict[tuple, dict[float, list[float]]] = {}
    kinds: dict[tuple, str] = {}
    for rec in records:
        gk = (setup_key(rec), rec.place)
        groups.setdefault(gk, {}).setdefault(rec.velocity, []).append(
            trace_analysis.peak(rec.trace)[0]
        )
        kinds[gk] = rec.contact_kind
    out = []
    for gk in sorted(groups, key=lambda g: (g[0], g[1])):
        peaks = groups[gk]
        out.append(
            SetupAggregate(
                key=gk[0],
                place=gk[1],
                contact_kind=kinds[gk],
                mean_peak_force={v: float(np.mean(p)) for v, p in sorted(peaks.items())},
                counts={v: len(p) for v, p in sorted(peaks.items())},
            )
        )
    return out


@dataclass(frozen=True)
class ForceChangeRow:
    """Percent change of mean peak force against a baseline setup."""

    target: SetupKey
    baseline: SetupKey
    per_place: dict  # place -> percent (raw float)
    quasi_static_mean: float | None
    transient_mean: float | None


def mean_force_change(
    records: list[MeasurementRecord], baseline: SetupKey, target: SetupKey
) -> ForceChangeRow:
    """Velocity-matched mean percent change of peak force, target vs baseline.

    Per place, the change is averaged over the velocities both setups
    measured; the per-contact-kind means average the places. Raises
    CorpusError when no place has overlapping velocities.
    """
    by_place: dict[int, float] = {}
    aggregates = {(a.key, a.place): a for a in build_aggregates(records)}
    places = sorted({p for (k, p) in aggregates if k in (baseline, target)})
    for place in places:
        base = aggregates.get((baseline, place))
        tgt = aggregates.get((target, place))
        if base is None or tgt is None:
            continue
        shared = sorted(set(base.mean_peak_force) & set(tgt.mean_peak_force))
        if not shared:
            continue
        changes = [
            100.0
            * (tgt.mean_peak_force[v] - base.mean_peak_force[v])
            / base.mean_peak_force[v]
            for v in shared
        ]
        by_place[place] = float(np.mean(changes))
    if not by_place:
        raise CorpusError(
            f"no overlapping velocities between {baseline} and {target}"
        )
    qs = [by_place[p] for p in QUASI_STATIC_PLACES if p in by_place]
    tr = [by_place[p] for p in TRANSIENT_PLACES if p in by_place]
    return ForceChangeRow(
        target=target,
        baseline=baseline,
        per_place=by_place,
        quasi_static_mean=float(np.mean(qs)) if qs else None,
        transient_mean=float(np.mean(tr)) if tr else None,
    )


CELL_VALUE = "value"
CELL_BELOW_MIN = "below_min"
CELL_ABOVE_MAX = "above_max"
CELL_NO_CONSTRAINT = "none"


@dataclass(frozen=True)
class VelocityCell:
    """One safe-velocity cell: a grid value or a sentinel."""

    kind: str
    velocity: float | None = None

    def render(self) -> str:
        if self.kind == CELL_VALUE:
            return f"{self.velocity:g}"
        if self.kind == CELL_BELOW_MIN:
            return f"<{self.velocity:g}"
        if self.kind == CELL_ABOVE_MAX:
            return f">{self.velocity:g}"
        return "--"

    def order_key(self) -> float:
        """Orders cells by how binding the constraint is (lower = stricter)."""
        if self.kind == CELL_BELOW_MIN:
            return self.velocity - 1e-9
        if self.kind == CELL_VALUE:
            return self.velocity
        if self.kind == CELL_ABOVE_MAX:
            return 1e9
        return math.inf


def max_safe_velocity(
    records: list[MeasurementRecord],
    limit_first: float,
    limit_second: float,
    aggregation: str = "worst",
) -> tuple[VelocityCell, VelocityCell]:
    """Safe-velocity cells for one setup at one place, per limit window.

    A velocity is compliant when its repetitions stay within the window
    limit; `aggregation` picks the conservative worst repetition (default)
    or the mean. The reported cell is the largest measured velocity that is
    compliant with every smaller measured velocity compliant too, '<v_min'
    when the smallest already violates, '>v_max' when nothing violates, and
    '--' when the window saw no force at all.
    """
    if not records:
        raise CorpusError("no records for this setup and place")
    if aggregation not in ("worst", "mean"):
        raise CorpusError(f"unknown aggregation {aggregation!r}")
    by_velocity: dict[float, list[tuple[float, float]]] = {}
    for rec in records:
        by_velocity.setdefault(rec.velocity, []).append(
            trace_analysis.window_maxima(rec.trace)
        )
    cells = []
    for which, limit in ((0, limit_first), (1, limit_second)):
        velocities = sorted(by_velocity)
        observed = False
        last_ok: float | None = None
        violated_at: float | None = None
        for v in velocities:
            maxima = [m[which] for m in by_velocity[v]]
            level = max(maxima) if aggregation == "worst" else float(np.mean(maxima))
            if any(m > 0.0 for m in maxima):
                observed = True
            if level <= limit:
                last_ok = v
            else:
                violated_at = v
                break
        if not observed:
            cells.append(VelocityCell(CELL_NO_CONSTRAINT))
        elif violated_at is None:
            cells.append(VelocityCell(CELL_ABOVE_MAX, velocities[-1]))
        elif last_ok is None:
            cells.append(VelocityCell(CELL_BELOW_MIN, velocities[0]))
        else:
            cells.append(VelocityCell(CELL_VALUE, last_ok))
    return cells[0], cells[1]


@dataclass(frozen=True)
class SafeVelocityRow:
    place: int
    window: str  # WINDOW_FIRST or WINDOW_SECOND
    ts_reference: float | None
    mod_reference: float | None
    cells: dict  # SetupKey -> VelocityCell


@dataclass(frozen=True)
class SafeVelocityTable:
    robot: str
    setups: list  # SetupKey column order
    rows: list  # SafeVelocityRow, (place, window) order
    minima: dict  # (place, SetupKey) -> window of the binding cell


def build_safe_velocity_table(
    records: list[MeasurementRecord],
    limit_first: float,
    limit_second: float,
    reference: ContactScenario | None = None,
    aggregation: str = "worst",
) -> SafeVelocityTable:
    """Safe-velocity table for one robot's quasi-static measurements."""
    robots = {r.robot for r in records}
    if len(robots) != 1:
        raise CorpusError(f"expected records for one robot, got {sorted(robots)}")
    robot = robots.pop()
    qs_records = [r for r in records if r.contact_kind == QUASI_STATIC]
    if not qs_records:
        raise CorpusError(f"no quasi-static records for {robot}")
    setups = sorted({setup_key(r) for r in qs_records})
    places = sorted({r.place for r in qs_records})

    ts_ref = {}
    mod_ref = {}
    if reference is not None:
        for window, limit in ((WINDOW_FIRST, limit_first), (WINDOW_SECOND, limit_second)):
            ts_ref[window] = display_round(
                permissible_velocity(reference, limit, with_cover=False)
            )
            mod_ref[window] = display_round(
                permissible_velocity(reference, limit, with_cover=True)
            )

    rows = []
    minima: dict[tuple, str] = {}
    for place in places:
        window_cells: dict[str, dict] = {WINDOW_FIRST: {}, WINDOW_SECOND: {}}
        for key in setups:
            subset = [
                r for r in qs_records if setup_key(r) == key and r.place == place
            ]
            if not subset:
                continue
            first, second = max_safe_velocity(
                subset, limit_first, limit_second, aggregation
            )
            window_cells[WINDOW_FIRST][key] = first
            window_cells[WINDOW_SECOND][key] = second
            binding = (
                WINDOW_FIRST
                if first.order_key() <= second.order_key()
                else WINDOW_SECOND
            )
            minima[(place, key)] = binding
        for window in (WINDOW_FIRST, WINDOW_SECOND):
            rows.append(
                SafeVelocityRow(
                    place=place,
                    window=window,
                    ts_reference=ts_ref.get(window),
                    mod_reference=mod_ref.get(window),
                    cells=window_cells[window],
                )
            )
    return SafeVelocityTable(robot=robot, setups=setups, rows=rows, minima=minima)


def _setup_label(key: SetupKey) -> str:
    robot, skin, safety = key
    return f"{skin}|{safety}" if safety else skin


def render_force_change_text(rows: list[ForceChangeRow], title: str) -> str:
    """Fixed-width table of percent changes, integer display convention."""
    places = sorted({p for r in rows for p in r.per_place})
    headers = (
        ["setup"]
        + [f"P{p}" for p in places]
        + ["QS-mean", "TR-mean"]
    )
    lines = [title, ""]
    body = []
    for row in rows:
        cells = [_setup_label(row.target)]
        for p in places:
            value = row.per_place.get(p)
            cells.append("--" if value is None else f"{round(value):d}")
        for mean in (row.quasi_static_mean, row.transient_mean):
            cells.append("--" if mean is None else f"{round(mean):d}")
        body.append(cells)
    widths = [
        max(len(headers[i]), *(len(r[i]) for r in body)) if body else len(headers[i])
        for i in range(len(headers))
    ]
    lines.append("  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)))
    for cells in body:
        lines.append(
            "  ".join(
                cells[i].ljust(widths[i]) if i == 0 else cells[i].rjust(widths[i])
                for i in range(len(cells))
            )
        )
    return "\n".join(lines) + "\n"


def render_force_change_csv(rows: list[ForceChangeRow]) -> str:
    places = sorted({p for r in rows for p in r.per_place})
    out = ["robot,skin_setting,safety_setting,baseline_skin,baseline_safety,"
           + ",".join(f"place_{p}_pct" for p in places)
           + ",quasi_static_mean_pct,transient_mean_pct"]
    for row in rows:
        cells = [row.target[0], row.target[1], row.target[2], row.baseline[1], row.baseline[2]]
        for p in places:
            value = row.per_place.get(p)
            cells.append("" if value is None else f"{value:.4f}")
        for mean in (row.quasi_static_mean, row.transient_mean):
            cells.append("" if mean is None else f"{mean:.4f}")
        out.append(",".join(str(c) for c in cells))
    return "\n".join(out) + "\n"


def render_safe_velocity_text(table: SafeVelocityTable) -> str:
    """Fixed-width safe-velocity table; '*' marks the binding window cell."""
    headers = ["place", "T [s]", "TS", "mod-TS"] + [
        _setup_label(k) for k in table.setups
    ]
    body = []
    for row in table.rows:
        cells = [f"{row.place}", row.window]
        cells.append("" if row.ts_reference is None else f"{row.ts_reference:.2f}")
        cells.append("" if row.mod_reference is None else f"{row.mod_reference:.2f}")
        for key in table.setups:
            cell = row.cells.get(key)
            if cell is None:
                cells.append("")
                continue
            mark = "*" if table.minima.get((row.place, key)) == row.window else ""
            cells.append(cell.render() + mark)
        body.append(cells)
    widths = [
        max(len(headers[i]), *(len(r[i]) for r in body)) if body else len(headers[i])
        for i in range(len(headers))
    ]
    lines = [f"Maximum safe end-effector velocities [m/s], robot {table.robot}", ""]
    lines.append("  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)))
    for cells in body:
        lines.append("  ".join(cells[i].ljust(widths[i]) for i in range(len(cells))))
    lines.append("")
    lines.append("* binding window (row minimum) for that setup and place")
    return "\n".join(lines) + "\n"


def render_safe_velocity_csv(table: SafeVelocityTable) -> str:
    headers = ["robot", "place", "window", "ts_reference", "mod_reference"] + [
        _setup_label(k) for k in table.setups
    ]
    out = [",".join(headers)]
    for row in table.rows:
        cells = [table.robot, str(row.place), row.window]
        cells.append("" if row.ts_reference is None else f"{row.ts_reference:.2f}")
        cells.append("" if row.mod_reference is None else f"{row.mod_reference:.2f}")
        for key in table.setups:
            cell = row.cells.get(key)
            cells.append("" if cell is None else cell.render())
        out.append(",".join(cells))
    return "\n".join(out) + "\n"


def aggregates_json(aggregates: list[SetupAggregate]) -> str:
    """Machine-readable aggregate dump, stable ordering."""
    payload = {
        "format": "pflkit-aggregates/1",
        "setups": [
            {
                "robot": a.key[0],
                "skin_setting": a.key[1],
                "safety_setting": a.key[2],
                "place": a.place,
                "contact_kind": a.contact_kind,
                "velocities": [
                    {
                        "velocity": v,
                        "mean_peak_force_N": a.mean_peak_force[v],
                        "repetitions": a.counts[v],
                    }
                    for v in sorted(a.mean_peak_force)
                ],
            }
            for a in aggregates
        ],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def plot_data_csv(aggregates: list[SetupAggregate]) -> str:
    """Velocity/metric series for external plotting."""
    out = ["robot,place,skin_setting,safety_setting,velocity,mean_peak_force_N,repetitions"]
    for a in aggregates:
        for v in sorted(a.mean_peak_force):
            out.append(
                f"{a.key[0]},{a.place},{a.key[1]},{a.key[2]},"
                f"{v:g},{a.mean_peak_force[v]:.6f},{a.counts[v]}"
            )
    return "\n".join(out) + "\n"


def write_report(
    out_dir,
    records: list[MeasurementRecord],
    limit_first: float,
    limit_second: float,
    references: dict | None = None,
    baselines: dict | None = None,
    aggregation: str = "worst",
) -> list[Path]:
    """Emit the full report set; returns the written paths.

    `references` maps robot label to the ContactScenario backing the TS and
    modified reference columns; `baselines` maps robot label to the SetupKey
    used for the force-change comparison (default: that robot's no-skin
    setup, smallest safety label first).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    references = references or {}
    baselines = baselines or {}
    header = (
        f"# pflkit report, format {FORMAT_VERSION}\n"
        f"# limits: {limit_first:g} N (T{WINDOW_FIRST} s), "
        f"{limit_second:g} N (T{WINDOW_SECOND} s)\n"
    )
    written: list[Path] = []
    aggregates = build_aggregates(records)
    robots = sorted({r.robot for r in records})

    force_rows: list[ForceChangeRow] = []
    for robot in robots:
        robot_records = [r for r in records if r.robot == robot]
        baseline = baselines.get(robot) or _default_baseline(robot_records)
        if baseline is None:
            continue
        targets = sorted({setup_key(r) for r in robot_records} - {baseline})
        for target in targets:
            try:
                force_rows.append(mean_force_change(robot_records, baseline, target))
            except CorpusError:
                continue

    def _write(name: str, text: str) -> None:
        path = out / name
        path.write_text(header + text)
        written.append(path)

    if force_rows:
        _write(
            "peak_force_change.txt",
            render_force_change_text(
                force_rows, "Mean peak impact force change vs baseline (%)"
            ),
        )
        _write("peak_force_change.csv", render_force_change_csv(force_rows))
    for robot in robots:
        robot_records = [r for r in records if r.robot == robot]
        if not any(r.contact_kind == QUASI_STATIC for r in robot_records):
            continue
        table = build_safe_velocity_table(
            robot_records,
            limit_first,
            limit_second,
            reference=references.get(robot),
            aggregation=aggregation,
        )
        slug = re.sub(r"[^A-Za-z0-9]+", "_", robot).strip("_").lower()
        _write(f"safe_velocities_{slug}.txt", render_safe_velocity_text(table))
        _write(f"safe_velocities_{slug}.csv", render_safe_velocity_csv(table))
    _write("aggregates.json", aggregates_json(aggregates))
    _write("plot_data.csv", plot_data_csv(aggregates))
    return written


def _default_baseline(records: list[MeasurementRecord]) -> SetupKey | None:
    candidates = sorted(
        {setup_key(r) for r in records if r.skin_setting == "none"}
    )
    return candidates[0] if candidates else None
