"""
Table formatter for reports, sweeps and discrepancy tables
Writes CSV at 12 significant digits and renders plain console tables
"""

import csv
import io
import math
from typing import Iterable, List, Sequence

from polling.analysis import PerformanceReport
from polling.simulator import DiscrepancyTable, SimulationEstimate
from polling.sweep import SweepRow, SweepSummary

_RULE = 80


def fmt(value: float) -> str:
    """12 significant digits; NaN and infinities spelled out"""
    if isinstance(value, float) and math.isnan(value):
        return "nan"
    if isinstance(value, float) and math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.12g}"


def sweep_csv(rows: Iterable[SweepRow]) -> str:
    """Header row of SweepRow field names, one line per threshold"""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SweepRow.header())
    for row in rows:
        writer.writerow([fmt(v) for v in row.values()])
    return buf.getvalue()


def write_sweep_csv(rows: Iterable[SweepRow], path: str):
    with open(path, 'w', encoding='utf-8', newline="") as f:
        f.write(sweep_csv(rows))


def _table(headers: Sequence[str], rows: List[Sequence[str]]) -> str:
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h)
              for i, h in enumerate(headers)]
    line = "  ".join(h.ljust(w) for h, w in zip(headers, widths))
    out = [line, "  ".join("─" * w for w in widths)]
    out += ["  ".join(c.ljust(w) for c, w in zip(r, widths)) for r in rows]
    return "\n".join(out)


def format_report(rep: PerformanceReport) -> str:
    """Console rendering of a performance report"""
    d = rep.derived
    lines = [
        f"{'─'*_RULE}",
        f"PERFORMANCE REPORT ({rep.discipline}{', preemptive H' if rep.preemptive_H else ''})",
        f"{'─'*_RULE}",
        f"rho_H = {fmt(d.rho_H)}   rho_L = {fmt(d.rho_L)}   "
        f"rho_2 = {fmt(d.rho_2)}   rho = {fmt(d.rho)}",
        f"E(C) = {fmt(d.mean_cycle)}   E(I_1) = {fmt(d.mean_intervisit_1)}   "
        f"E(C_res) = {fmt(rep.residual_cycle)}",
        "",
    ]
    rows = [
        [key, fmt(c.mean_wait), fmt(c.std_wait), fmt(c.second_moment), fmt(c.mean_queue_length)]
        for key, c in rep.classes.items()
    ]
    lines.append(_table(["class", "E(W)", "sd(W)", "E(W^2)", "E(N)"], rows))
    if not math.isnan(rep.weighted_mean_wait_1):
        lines += ["", f"queue 1 weighted: E(W) = {fmt(rep.weighted_mean_wait_1)}   "
                      f"sd(W) = {fmt(rep.weighted_std_wait_1)}"]
    if rep.identities:
        lines += ["", "Identities:"]
        lines += [f"   {name} = {fmt(value)}" for name, value in rep.identities.items()]
    return "\n".join(lines)


def format_sweep(rows: Sequence[SweepRow], summary: SweepSummary, limit: int = 10) -> str:
    """First rows of a sweep plus its summary"""
    keys = ["t", "EW_H", "EW_L", "EW_1_weighted", "sd_W1_weighted"]
    shown = [[fmt(getattr(r, k)) for k in keys] for r in rows[:limit]]
    lines = [_table(keys, shown)]
    if len(rows) > limit:
        lines.append(f"... and {len(rows) - limit} more rows")
    lines += [
        "",
        f"argmin E(W_1) weighted:  t = {fmt(summary.argmin_mean_t)}  ({fmt(summary.argmin_mean)})",
        f"argmin sd(W_1) weighted: t = {fmt(summary.argmin_std_t)}  ({fmt(summary.argmin_std)})",
        "sd(W_1) local minima:    "
        + (", ".join(fmt(t) for t in summary.std_local_minima) or "none"),
    ]
    return "\n".join(lines)


def format_simulation(est: SimulationEstimate) -> str:
    rows = [
        [key, fmt(c.mean_wait.value), fmt(c.mean_wait.se), fmt(c.std_wait.value), str(c.served)]
        for key, c in est.classes.items()
    ]
    cyc = est.cycles
    lines = [
        _table(["class", "E(W)", "SE", "sd(W)", "served"], rows),
        "",
        f"E(C) = {fmt(cyc.cycle_start_mean.value)} +- {fmt(cyc.cycle_start_mean.se)}   "
        f"E(I_1) = {fmt(cyc.intervisit_mean.value)} +- {fmt(cyc.intervisit_mean.se)}",
        f"seed = {est.seed}   replications = {est.replications}",
    ]
    if est.flags:
        lines.append(f"flags: {', '.join(est.flags)}")
    return "\n".join(lines)


def format_discrepancies(table: DiscrepancyTable) -> str:
    rows = [
        [r.quantity, fmt(r.analysis), fmt(r.simulation), fmt(r.se), fmt(r.z), r.status]
        for r in table.rows
    ]
    verdict = "PASS" if table.passed else f"FAIL ({', '.join(table.failures())})"
    return "\n".join([
        _table(["quantity", "analysis", "simulation", "SE", "|z|", "status"], rows),
        "",
        f"|z| threshold {fmt(table.z_threshold)}: {verdict}",
    ])
