"""High-level fitting entry point: normalize, run the model grid, select
by BIC, relabel and summarize."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from . import io, postprocess, selection
from .linalg import RandomStream
from .sampler import RunSchedule, run_grid
from .types import Dataset, FitReport, PARAMETERIZATIONS, PriorConfig


def fit(data, *, q_values, models=PARAMETERIZATIONS, prior: PriorConfig | None = None,
        schedule: RunSchedule | None = None, seed: int = 0,
        parallel_models: int = 1, normalize: bool = True,
        log_dir=None, ladder=None, config: dict | None = None) -> FitReport:
    """Cluster the rows of ``data`` with the overfitted mixture grid.

    ``data`` may be a Dataset or a plain n x p array.  Every requested
    (parameterization, q) cell is fitted independently; the BIC winner is
    relabeled and summarized.  Results are deterministic given
    (seed, configuration), independent of ``parallel_models``.
    """
    if not isinstance(data, Dataset):
        data = Dataset.from_matrix(np.asarray(data, dtype=float))
    data.validate()
    if normalize and not data.normalized:
        data = io.normalize(data)
    prior = prior or PriorConfig()
    schedule = schedule or RunSchedule(m_cycles=700, burn_cycles=100)
    models = list(models)
    q_values = [int(q) for q in q_values]
    if not models or not q_values:
        raise ValueError("need at least one parameterization and one q")

    if log_dir is not None:
        log_dir = Path(log_dir)
        log_dir.mkdir(parents=True, exist_ok=True)
    stream = RandomStream(seed)
    fits = run_grid(models, q_values, prior, data, schedule, stream,
                    parallel_models=parallel_models, log_dir=log_dir,
                    ladder=ladder)
    summaries = [f.summary for f in fits]
    best = selection.select_model(summaries)
    chosen = next(f for f in fits if f.code == best.code and f.q == best.q)

    rel = postprocess.ecr_relabel(chosen.trace, best.k_map)
    class_labels, class_prob = postprocess.single_best_clustering(rel)
    summary = postprocess.summarize(rel, data)

    return FitReport(
        models=summaries,
        selected=best,
        alive_labels=rel.labels + 1,
        class_labels=class_labels + 1,
        class_prob=class_prob,
        weights_mean=summary.weights_mean,
        mu_mean=summary.mu_mean,
        cov_mean=summary.cov_mean,
        summary=summary,
        relabeled=rel,
        trace=chosen.trace,
        dataset=data,
        seed=seed,
        config=dict(config or {}),
    )


def print_table(report: FitReport) -> str:
    """Human-readable digest mirroring the per-model table: MAP number of
    alive clusters, selected q, BIC and swap rate per parameterization."""
    lines = []
    sel = report.selected
    lines.append(f"Selected model: {sel.code} with K = {sel.k_map} clusters "
                 f"and q = {sel.q} factors.")
    lines.append("")
    lines.append(f"{'model':>6} {'K_MAP':>6} {'K_MAP_prob':>11} {'q':>3} "
                 f"{'BIC_q':>10} {'chain_swap':>11}")
    per_code = selection.best_per_code(report.models)
    seen = []
    for s in report.models:
        if s.code in seen:
            continue
        seen.append(s.code)
        b = per_code.get(s.code)
        if b is None:
            lines.append(f"{s.code:>6} {'--':>6} {'--':>11} {'--':>3} "
                         f"{'failed':>10} {'--':>11}")
            continue
        swap = f"{100 * (b.swap_rate or 0.0):.2f}%"
        lines.append(f"{b.code:>6} {b.k_map:>6} {b.k_map_prob:>11.2f} {b.q:>3} "
                     f"{b.bic:>10.1f} {swap:>11}")
    lines.append("")
    labels, counts = np.unique(report.class_labels, return_counts=True)
    lines.append("Observations per cluster (selected model):")
    lines.append("  label: " + "  ".join(f"{int(l)}" for l in labels))
    lines.append("  count: " + "  ".join(f"{c}" for c in counts))
    return "\n".join(lines)
