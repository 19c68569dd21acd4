"""Lifetime metrics (FND/HND/AND), CSV/JSON emission and SVG line charts."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .errors import InvalidParameter

NOT_REACHED = "not reached"
CSV_COLUMNS = ["round", "seconds", "alive", "remaining_j", "consumed_j", "delivered", "ch_count", "region"]


@dataclass(frozen=True)
class RoundRecord:
    round: int
    alive: int
    remaining: float  # J left in the network after the round
    consumed: float  # J spent during the round
    delivered: int  # sensor readings that reached the sink this round
    active_region: str | None
    ch_count: int


@dataclass(frozen=True)
class LifetimeSummary:
    """FND/HND/AND as round indices; None means the event never happened."""

    n: int
    round_seconds: float
    fnd: int | None
    hnd: int | None
    and_: int | None
    total_throughput: int
    total_energy_consumed: float
    rounds_run: int

    def seconds(self, which: str) -> float | None:
        r = getattr(self, which)
        return None if r is None else r * self.round_seconds

    def to_json(self, **extra) -> dict:
        def fmt(which):
            s = self.seconds(which)
            return NOT_REACHED if s is None else s

        out = dict(extra)
        out.update(
            n=self.n,
            fnd=fmt("fnd"),
            hnd=fmt("hnd"),
            **{"and": fmt("and_")},
            fnd_round=self.fnd,
            hnd_round=self.hnd,
            and_round=self.and_,
            throughput=self.total_throughput,
            energy=self.total_energy_consumed,
            rounds_run=self.rounds_run,
            round_seconds=self.round_seconds,
        )
        return out


def half_dead_alive_level(n: int) -> int:
    # 50% of the nodes rounds the dead count up: ceil(n/2) deaths.
    return n - math.ceil(n / 2)


def summarize(series: Sequence[RoundRecord], n: int, round_seconds: float = 1.0) -> LifetimeSummary:
    fnd = hnd = and_ = None
    half = half_dead_alive_level(n)
    for rec in series:
        if fnd is None and rec.alive < n:
            fnd = rec.round
        if hnd is None and rec.alive <= half:
            hnd = rec.round
        if and_ is None and rec.alive == 0:
            and_ = rec.round
            break
    return LifetimeSummary(
        n=n,
        round_seconds=round_seconds,
        fnd=fnd,
        hnd=hnd,
        and_=and_,
        total_throughput=sum(rec.delivered for rec in series),
        total_energy_consumed=math.fsum(rec.consumed for rec in series),
        rounds_run=len(series),
    )


def _fmt_seconds(summary: LifetimeSummary, which: str) -> str:
    s = summary.seconds(which)
    return NOT_REACHED if s is None else repr(s)


def emit_csv(series: Sequence[RoundRecord], summary: LifetimeSummary, path) -> Path:
    """One row per round, then the summary as ``# key=value`` footer lines.

    Floats are written with ``repr`` so a reader recovers them exactly.
    """
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for rec in series:
                w.writerow([
                    rec.round,
                    repr(rec.round * summary.round_seconds),
                    rec.alive,
                    repr(rec.remaining),
                    repr(rec.consumed),
                    rec.delivered,
                    rec.ch_count,
                    rec.active_region or "",
                ])
            fh.write(f"# n={summary.n}\n")
            fh.write(f"# round_seconds={summary.round_seconds!r}\n")
            fh.write(f"# fnd={_fmt_seconds(summary, 'fnd')}\n")
            fh.write(f"# hnd={_fmt_seconds(summary, 'hnd')}\n")
            fh.write(f"# and={_fmt_seconds(summary, 'and_')}\n")
            fh.write(f"# throughput={summary.total_throughput}\n")
            fh.write(f"# energy_consumed={summary.total_energy_consumed!r}\n")
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc
    return path


def read_csv(path) -> tuple[list, dict]:
    """Parse a file written by :func:`emit_csv` into records and its footer."""
    rows, footer = [], {}
    with Path(path).open(encoding="utf-8") as fh:
        body = []
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                footer[key] = value
            else:
                body.append(line)
    reader = csv.DictReader(body)
    for row in reader:
        rows.append(
            RoundRecord(
                round=int(row["round"]),
                alive=int(row["alive"]),
                remaining=float(row["remaining_j"]),
                consumed=float(row["consumed_j"]),
                delivered=int(row["delivered"]),
                active_region=row["region"] or None,
                ch_count=int(row["ch_count"]),
            )
        )
    return rows, footer


def summary_from_csv(path) -> LifetimeSummary:
    series, footer = read_csv(path)
    return summarize(series, int(footer["n"]), float(footer["round_seconds"]))


def emit_summary_json(summary: LifetimeSummary, path, **extra) -> Path:
    path = Path(path)
    try:
        path.write_text(json.dumps(summary.to_json(**extra), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write summary to {path}: {exc}") from exc
    return path


def average_series(runs: Sequence[Sequence[RoundRecord]]) -> list:
    """Pointwise mean over runs; shorter runs are held at their final state."""
    runs = [list(r) for r in runs if r]
    if not runs:
        return []
    length = max(len(r) for r in runs)
    out = []
    for i in range(length):
        recs = [r[min(i, len(r) - 1)] for r in runs]
        # A run that already ended contributes no further consumption or traffic.
        live = [r[i] for r in runs if i < len(r)]
        m = len(runs)
        out.append(
            RoundRecord(
                round=i,
                alive=sum(r.alive for r in recs) / m,
                remaining=math.fsum(r.remaining for r in recs) / m,
                consumed=math.fsum(r.consumed for r in live) / m,
                delivered=sum(r.delivered for r in live) / m,
                active_region=None,
                ch_count=sum(r.ch_count for r in live) / m,
            )
        )
    return out


# --- SVG charts --------------------------------------------------------------

CHART_METRICS = {
    "alive": ("Number of nodes alive", "nodes alive"),
    "energy": ("Energy consumption of network", "cumulative energy consumed (J)"),
    "throughput": ("Throughput of network", "cumulative data units received at sink"),
}
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"]
MAX_POINTS = 1500


def metric_values(series: Sequence[RoundRecord], metric: str) -> list:
    if metric == "alive":
        return [float(r.alive) for r in series]
    acc, out = 0.0, []
    for r in series:
        acc += r.consumed if metric == "energy" else r.delivered
        out.append(acc)
    return out


def _nice_ticks(hi: float, count: int = 5) -> list:
    if hi <= 0:
        return [0.0]
    raw = hi / count
    mag = 10 ** math.floor(math.log10(raw))
    step = next(s * mag for s in (1, 2, 2.5, 5, 10) if s * mag >= raw)
    return [i * step for i in range(int(hi / step + 1e-9) + 1)]


def _tick_label(v: float) -> str:
    return f"{v:.0f}" if v == int(v) else f"{v:g}"


def emit_chart(
    series_set: Mapping[str, Sequence[RoundRecord]],
    metric: str,
    path,
    round_seconds: float = 1.0,
    title: str | None = None,
) -> Path:
    """Static SVG 1.1 line chart, one polyline per labelled series."""
    if not series_set:
        raise InvalidParameter("emit_chart needs at least one series")
    if metric not in CHART_METRICS:
        raise InvalidParameter(f"unknown chart metric {metric!r}")
    default_title, ylabel = CHART_METRICS[metric]
    width, height = 720, 440
    left, right, top, bottom = 70, 170, 40, 55
    pw, ph = width - left - right, height - top - bottom

    curves = {}
    for label, series in series_set.items():
        xs = [r.round * round_seconds for r in series]
        curves[label] = (xs, metric_values(series, metric))
    xmax = max((xs[-1] for xs, _ in curves.values() if xs), default=0.0) or 1.0
    ymax = max((max(ys) for _, ys in curves.values() if ys), default=0.0) or 1.0
    xticks, yticks = _nice_ticks(xmax), _nice_ticks(ymax)
    xmax, ymax = max(xmax, xticks[-1]), max(ymax, yticks[-1])

    def sx(x):
        return left + pw * x / xmax

    def sy(y):
        return top + ph * (1 - y / ymax)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{left + pw / 2:.2f}" y="24" text-anchor="middle" font-family="sans-serif" '
        f'font-size="15">{_escape(title or default_title)}</text>',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
    ]
    for t in xticks:
        x = sx(t)
        out.append(f'<line x1="{x:.2f}" y1="{top + ph}" x2="{x:.2f}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(
            f'<text x="{x:.2f}" y="{top + ph + 18}" text-anchor="middle" font-family="sans-serif" '
            f'font-size="11">{_tick_label(t)}</text>'
        )
    for t in yticks:
        y = sy(t)
        out.append(f'<line x1="{left - 5}" y1="{y:.2f}" x2="{left}" y2="{y:.2f}" stroke="black"/>')
        out.append(
            f'<text x="{left - 8}" y="{y + 4:.2f}" text-anchor="end" font-family="sans-serif" '
            f'font-size="11">{_tick_label(t)}</text>'
        )
    out.append(
        f'<text x="{left + pw / 2:.2f}" y="{height - 12}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="12">time (s)</text>'
    )
    out.append(
        f'<text x="16" y="{top + ph / 2:.2f}" text-anchor="middle" font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {top + ph / 2:.2f})">{_escape(ylabel)}</text>'
    )
    for i, (label, (xs, ys)) in enumerate(curves.items()):
        color = PALETTE[i % len(PALETTE)]
        idx = _decimate(len(xs))
        pts = " ".join(f"{sx(xs[j]):.2f},{sy(ys[j]):.2f}" for j in idx)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = top + 14 + 18 * i
        out.append(f'<line x1="{left + pw + 12}" y1="{ly}" x2="{left + pw + 34}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(
            f'<text x="{left + pw + 40}" y="{ly + 4}" font-family="sans-serif" font-size="11">{_escape(label)}</text>'
        )
    out.append("</svg>")
    path = Path(path)
    try:
        path.write_text("\n".join(out) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write chart to {path}: {exc}") from exc
    return path


def _decimate(n: int) -> list:
    if n <= MAX_POINTS:
        return list(range(n))
    step = math.ceil(n / MAX_POINTS)
    idx = list(range(0, n, step))
    if idx[-1] != n - 1:
        idx.append(n - 1)
    return idx


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
