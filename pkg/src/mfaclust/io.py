"""Data ingestion, z-standardization and run-directory report emission.

All numeric output uses 17 significant digits, so emitted values
round-trip exactly; rerunning with the same seed and configuration
produces byte-identical files.  Cluster labels in every file are the raw
1-based component indices of the overfitted mixture.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    DataError,
    FileNotFound,
    NonNumericCell,
    RaggedRows,
    ZeroVarianceColumn,
)
from .types import Dataset, FitReport, Parameterization, PosteriorTrace

FLOAT_FMT = "%.17g"


def _fmt(value) -> str:
    return FLOAT_FMT % float(value)


def ingest_csv(path) -> Dataset:
    """Numeric CSV to a raw Dataset; rows are observations.

    A non-numeric first row is taken as a header of variable names.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFound(f"no such file: {path}")
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        raw = [row for row in reader if row]
    if not raw:
        raise DataError(f"{path}: file is empty")
    header = None
    first = raw[0]
    try:
        [float(c) for c in first]
    except ValueError:
        header = tuple(c.strip() for c in first)
        raw = raw[1:]
    if not raw:
        raise DataError(f"{path}: no data rows")
    width = len(raw[0])
    offset = 2 if header is not None else 1
    for i, row in enumerate(raw):
        if len(row) != width:
            raise RaggedRows(f"{path}: line {i + offset} has {len(row)} cells, "
                             f"expected {width}")
        parsed = []
        for j, cell in enumerate(row):
            try:
                parsed.append(float(cell))
            except ValueError:
                raise NonNumericCell(
                    f"{path}: row {i + 1}, column {j + 1}: {cell!r}") from None
        rows.append(parsed)
    return Dataset.from_matrix(np.asarray(rows), var_names=header)


def normalize(data: Dataset) -> Dataset:
    """z-transform every column (sample variance with the n-1 divisor).

    The original column means and standard deviations are kept so
    summaries can be mapped back to the original scale.
    """
    sds = data.x.std(axis=0, ddof=1)
    bad = np.flatnonzero(sds <= 0)
    if bad.size:
        names = data.names()
        raise ZeroVarianceColumn(
            f"column {bad[0] + 1} ({names[bad[0]]}) has zero sample variance")
    means = data.x.mean(axis=0)
    return Dataset(x=(data.x - means) / sds, col_means=means, col_sds=sds,
                   normalized=True, var_names=data.var_names)


def to_original_scale(mu: np.ndarray, cov: np.ndarray, data: Dataset):
    """Map normalized-scale cluster means/covariances back through the
    stored z-transform; identity when the data was never normalized."""
    if not data.normalized:
        return mu.copy(), cov.copy()
    mu_orig = data.col_sds * mu + data.col_means
    scale = np.outer(data.col_sds, data.col_sds)
    return mu_orig, cov * scale


def write_matrix(path, matrix, header=None, row_labels=None):
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if header is not None:
            writer.writerow(header)
        for i, row in enumerate(matrix):
            cells = [_fmt(v) for v in row]
            if row_labels is not None:
                cells = [row_labels[i]] + cells
            writer.writerow(cells)


def read_labels(path) -> np.ndarray:
    """Label vector from a class.csv-style file (uses the 'label' column)
    or from a single-column file."""
    path = Path(path)
    if not path.exists():
        raise FileNotFound(f"no such file: {path}")
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise DataError(f"{path}: file is empty")
    start = 0
    col = 0
    lowered = [c.strip().lower() for c in rows[0]]
    if "label" in lowered:
        col = lowered.index("label")
        start = 1
    try:
        return np.array([int(float(r[col])) for r in rows[start:]])
    except (ValueError, IndexError) as exc:
        raise DataError(f"{path}: could not parse labels: {exc}") from None


def _names(report: FitReport):
    return list(report.dataset.names())


def _write_manifest(path, report: FitReport):
    lines = [f"version={__version__}"]
    if report.seed is not None:
        lines.append(f"seed={report.seed}")
    for key in sorted(report.config):
        lines.append(f"{key}={report.config[key]}")
    sel = report.selected
    lines += [f"selected_model={sel.code}", f"selected_q={sel.q}",
              f"selected_k={sel.k_map}", f"selected_bic={_fmt(sel.bic)}"]
    path.write_text("\n".join(lines) + "\n")


def _write_bic_table(path, report: FitReport):
    codes = []
    for s in report.models:
        if s.code not in codes:
            codes.append(s.code)
    q_values = sorted({s.q for s in report.models})
    cells = {(s.code, s.q): s for s in report.models}
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model"] + [f"bic_q{q}" for q in q_values]
                        + ["K_MAP", "K_MAP_prob", "q", "BIC_q", "chain_swap", "status"])
        for code in codes:
            row = [code]
            best = None
            for q in q_values:
                s = cells.get((code, q))
                if s is None or s.failed:
                    row.append("NA")
                    continue
                row.append(_fmt(s.bic))
                if best is None or s.bic < best.bic:
                    best = s
            if best is None:
                errors = [s.error for s in report.models
                          if s.code == code and s.failed]
                row += ["NA", "NA", "NA", "NA", "NA",
                        f"failed: {errors[0] if errors else 'unknown'}"]
            else:
                row += [str(best.k_map), _fmt(best.k_map_prob), str(best.q),
                        _fmt(best.bic),
                        _fmt(best.swap_rate if best.swap_rate is not None else 0.0),
                        "ok"]
            writer.writerow(row)


def _write_quantiles(path, report: FitReport, names):
    summ = report.summary
    labels = report.alive_labels
    levels = [f"q{100 * lv:g}" for lv in summ.quantile_levels]
    p = summ.mu_mean.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["parameter"] + levels)
        for a, lab in enumerate(labels):
            writer.writerow([f"weight_{lab}"]
                            + [_fmt(v) for v in summ.weights_quantiles[:, a]])
        for a, lab in enumerate(labels):
            for v in range(p):
                writer.writerow([f"mean_{lab}_{names[v]}"]
                                + [_fmt(x) for x in summ.mu_quantiles[:, a, v]])
        for a, lab in enumerate(labels):
            for r in range(p):
                for c in range(r, p):
                    writer.writerow(
                        [f"cov_{lab}_{names[r]}_{names[c]}"]
                        + [_fmt(x) for x in summ.cov_quantiles[:, a, r, c]])


def _write_correlations(out, report: FitReport, names):
    summ = report.summary
    for a, lab in enumerate(report.alive_labels):
        path = out / f"correlation_{lab}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["row", "col", "mean", "ci_contains_zero"])
            p = summ.corr_mean.shape[1]
            for r in range(p):
                for c in range(p):
                    writer.writerow([names[r], names[c],
                                     _fmt(summ.corr_mean[a, r, c]),
                                     str(bool(summ.corr_ci_contains_zero[a, r, c]))])


def _write_mcmc(out, report: FitReport, names):
    rel = report.relabeled
    labels = report.alive_labels
    mdir = out / "mcmc"
    mdir.mkdir()
    write_matrix(mdir / "w.csv", rel.w, header=[f"w_{lab}" for lab in labels])
    write_matrix(mdir / "z.csv", rel.z + 1,
                 header=[f"obs_{i + 1}" for i in range(rel.z.shape[1])])
    for a, lab in enumerate(labels):
        write_matrix(mdir / f"mu_{lab}.csv", rel.mu[:, a, :], header=names)
    q = rel.q
    lam_header = [f"loading_{names[r]}_{j + 1}"
                  for r in range(len(names)) for j in range(q)]
    if rel.model.lambda_shared:
        write_matrix(mdir / "lambda.csv",
                     rel.lam.reshape(rel.n_draws, -1), header=lam_header)
    else:
        for a, lab in enumerate(labels):
            write_matrix(mdir / f"lambda_{lab}.csv",
                         rel.lam[:, a].reshape(rel.n_draws, -1), header=lam_header)
    write_matrix(mdir / "sigma.csv", rel.sigma.reshape(rel.n_draws, -1))


def _write_raw_trace(out, trace: PosteriorTrace):
    rdir = out / "trace_raw"
    rdir.mkdir()
    t = trace.n_retained
    meta = [f"model={trace.model.code}", f"q={trace.q}", f"kmax={trace.kmax}",
            f"n={trace.z.shape[1]}", f"p={trace.mu.shape[2]}", f"draws={t}"]
    (rdir / "meta.txt").write_text("\n".join(meta) + "\n")
    np.savetxt(rdir / "z.csv", trace.z, fmt="%d", delimiter=",")
    write_matrix(rdir / "w.csv", trace.w)
    write_matrix(rdir / "mu.csv", trace.mu.reshape(t, -1))
    write_matrix(rdir / "lambda.csv", trace.lam.reshape(t, -1))
    write_matrix(rdir / "sigma.csv", trace.sigma.reshape(t, -1))
    write_matrix(rdir / "loglik.csv", trace.loglik.reshape(t, 1))


def load_raw_trace(run_dir) -> PosteriorTrace:
    """Rebuild the selected model's raw cold-chain trace from a run
    directory (the `relabel` path)."""
    rdir = Path(run_dir) / "trace_raw"
    if not rdir.exists():
        raise FileNotFound(f"no raw trace under {run_dir}")
    meta = dict(line.split("=", 1)
                for line in (rdir / "meta.txt").read_text().splitlines() if line)
    model = Parameterization.from_code(meta["model"])
    q, kmax = int(meta["q"]), int(meta["kmax"])
    n, p, t = int(meta["n"]), int(meta["p"]), int(meta["draws"])
    z = np.loadtxt(rdir / "z.csv", dtype=np.int64, delimiter=",", ndmin=2)
    w = np.loadtxt(rdir / "w.csv", delimiter=",", ndmin=2)
    mu = np.loadtxt(rdir / "mu.csv", delimiter=",", ndmin=2).reshape(t, kmax, p)
    lam = np.loadtxt(rdir / "lambda.csv", delimiter=",", ndmin=2).reshape(
        (t,) + model.lambda_shape(kmax, p, q))
    sigma = np.loadtxt(rdir / "sigma.csv", delimiter=",", ndmin=2).reshape(
        (t,) + model.sigma_shape(kmax, p))
    loglik = np.loadtxt(rdir / "loglik.csv", delimiter=",").reshape(t)
    alive = np.zeros((t, kmax), dtype=bool)
    for i in range(t):
        alive[i] = np.bincount(z[i], minlength=kmax) > 0
    return PosteriorTrace(model=model, q=q, kmax=kmax, z=z, w=w, mu=mu,
                          lam=lam, sigma=sigma, alive=alive, loglik=loglik)


def emit_report(report: FitReport, out_dir) -> None:
    """Write the full report tree: BIC table, selected model, clustering,
    posterior summaries on both scales, relabeled draws and the raw trace
    of the selected model."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = _names(report)
    labels = report.alive_labels

    _write_manifest(out / "manifest.txt", report)
    _write_bic_table(out / "bic.csv", report)

    sel = report.selected
    (out / "selected_model.txt").write_text(
        f"model={sel.code}\nq={sel.q}\nk={sel.k_map}\n"
        f"k_map_prob={_fmt(sel.k_map_prob)}\nbic={_fmt(sel.bic)}\n")

    with open(out / "class.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "label", "probability"])
        for i, (lab, pr) in enumerate(zip(report.class_labels, report.class_prob)):
            writer.writerow([str(i + 1), str(int(lab)), _fmt(pr)])

    with open(out / "weights.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "weight"])
        for lab, wv in zip(labels, report.weights_mean):
            writer.writerow([str(int(lab)), _fmt(wv)])

    write_matrix(out / "mu.csv", report.mu_mean.T,
                 header=["variable"] + [f"mean_{lab}" for lab in labels],
                 row_labels=names)
    mu_orig, cov_orig = to_original_scale(report.mu_mean, report.cov_mean,
                                          report.dataset)
    write_matrix(out / "mu_original.csv", mu_orig.T,
                 header=["variable"] + [f"mean_{lab}" for lab in labels],
                 row_labels=names)
    for a, lab in enumerate(labels):
        write_matrix(out / f"covariance_{lab}.csv", report.cov_mean[a],
                     header=["variable"] + names, row_labels=names)
        write_matrix(out / f"covariance_original_{lab}.csv", cov_orig[a],
                     header=["variable"] + names, row_labels=names)

    _write_quantiles(out / "quantiles.csv", report, names)
    _write_correlations(out, report, names)
    _write_mcmc(out, report, names)
    _write_raw_trace(out, report.trace)
