"""Experiment drivers: hard-margin optimisation curves, soft-margin learning curves,
and a hard-margin sample-size sweep.

Every (setting, repeat) cell draws its data and features from streams derived
from ``(base seed, experiment, cell indices, role)``; the loss is deliberately
left out of the key so that all losses see the same datasets. Cells may run in
worker processes but results are aggregated in cell order, and floats are
written with ``repr``, so the CSVs are byte-identical across runs and ``jobs``.
"""

import csv
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .codec import build_codebook
from .data import gen_hard_margin, gen_soft_margin, soft_margin_linear_risk
from .exceptions import DivergedError, InsufficientDataError
from .features import LinearRffModel, sample_feature_map
from .metrics import zero_one_risk
from .rates import exp_decay_fit, loglog_slope, ols
from .rng import ROLE_FEATURES, ROLE_TEST, ROLE_TRAIN, derive_seed, name_key
from .trainer import TRACE_COLUMNS, GdConfig, train

log = logging.getLogger(__name__)

REFERENCE_META_SLOPE = -0.35
PREDICTED_META_SLOPE = -0.5

HARD_TRACE_SCHEMA = "hard_margin_trace/v1"
HARD_RUNS_SCHEMA = "hard_margin_runs/v1"
SOFT_ERRORS_SCHEMA = "soft_margin_errors/v1"
SOFT_SLOPES_SCHEMA = "soft_margin_slopes/v1"
SOFT_META_SCHEMA = "soft_margin_meta/v1"
SWEEP_ERRORS_SCHEMA = "hard_margin_sweep_errors/v1"
SWEEP_FITS_SCHEMA = "hard_margin_sweep_fits/v1"


@dataclass
class ExperimentResult:
    """Paths of the files written plus the in-memory summaries the files were built from."""

    files: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    diverged: int = 0


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return "" if v is None else str(v)


def write_csv(path, schema, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(f"#schema={schema}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def read_csv(path):
    """Rows of a CSV written by :func:`write_csv` as dicts of strings (schema line skipped)."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def _map(fn, tasks, jobs):
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks))


def _gd_config(cfg):
    return GdConfig(step_size=cfg.step_size, max_epochs=cfg.max_epochs, lam=cfg.lam,
                    stop_grad_norm=cfg.stop_grad_norm, eval_every=cfg.eval_every,
                    step_scale=cfg.step_scale)


def _init_model(cfg, feature_seed, input_dim=2):
    if cfg.model == "linear":
        return LinearRffModel.zeros(None, cfg.num_classes, input_dim)
    fm = sample_feature_map(input_dim, cfg.num_features, cfg.bandwidth, feature_seed)
    return LinearRffModel.zeros(fm, cfg.num_classes)


def _out_dir(cfg, out):
    path = out or cfg.out
    os.makedirs(path, exist_ok=True)
    return path


# ---- hard margin optimisation curves ----

def _hard_cell(task):
    cfg, li, di, rep = task
    key = name_key("hard-margin")
    delta = cfg.deltas[di]
    train_set = gen_hard_margin(cfg.n_train, cfg.num_classes, delta, seed=derive_seed(cfg.seed, key, di, rep, ROLE_TRAIN))
    test_set = gen_hard_margin(cfg.n_test, cfg.num_classes, delta, seed=derive_seed(cfg.seed, key, di, rep, ROLE_TEST))
    init = _init_model(cfg, derive_seed(cfg.seed, key, di, rep, ROLE_FEATURES))
    try:
        _, trace = train(train_set, test_set, init, cfg.losses[li], _gd_config(cfg))
    except DivergedError as exc:
        return dict(diverged=True, epoch=exc.epoch)
    return dict(diverged=False, rows=trace.epochs, first_zero=trace.first_zero_error_epoch(),
                settle=trace.surrogate_settle_epoch())


def _logged_epochs(cfg):
    ep = list(range(0, cfg.max_epochs + 1, cfg.eval_every))
    if ep[-1] != cfg.max_epochs:
        ep.append(cfg.max_epochs)
    return ep


def _align(rows, epochs):
    """Trace values at ``epochs``; a run that stopped early keeps its last values."""
    by_epoch = {r[0]: r[1:] for r in rows}
    out, last = [], None
    for e in epochs:
        last = by_epoch.get(e, last)
        out.append(last)
    return np.array(out)


def run_hard_margin(cfg, out=None, svg=None, jobs=1):
    """Optimisation curves for every (loss, delta); writes the averaged trace and a per-run table."""
    out = _out_dir(cfg, out)
    tasks = [(cfg, li, di, rep) for li in range(len(cfg.losses))
             for di in range(len(cfg.deltas)) for rep in range(cfg.repeats)]
    results = _map(_hard_cell, tasks, jobs)
    epochs = _logged_epochs(cfg)

    res = ExperimentResult()
    trace_rows, run_rows, curves, runs = [], [], {}, {}
    for (_, li, di, rep), r in zip(tasks, results):
        loss, delta = cfg.losses[li], cfg.deltas[di]
        runs.setdefault((loss, delta), []).append(r)
        if r["diverged"]:
            res.diverged += 1
            log.warning("hard-margin run diverged: loss=%s delta=%s repeat=%d epoch=%d", loss, delta, rep, r["epoch"])
            run_rows.append([loss, delta, rep, True, None, None, None, None])
            continue
        final = r["rows"][-1]
        run_rows.append([loss, delta, rep, False, r["first_zero"], r["settle"], final[3], final[2]])

    for loss in cfg.losses:
        for delta in cfg.deltas:
            ok = [r for r in runs[(loss, delta)] if not r["diverged"]]
            if not ok:
                continue
            mean = np.mean([_align(r["rows"], epochs) for r in ok], axis=0)
            curves[(loss, delta)] = mean
            for e, vals in zip(epochs, mean):
                trace_rows.append([loss, delta, e, *vals, len(ok)])

    res.files["trace"] = os.path.join(out, "hard_margin_trace.csv")
    write_csv(res.files["trace"], HARD_TRACE_SCHEMA,
              ["loss", "delta", *TRACE_COLUMNS, "runs"], trace_rows)
    res.files["runs"] = os.path.join(out, "hard_margin_runs.csv")
    write_csv(res.files["runs"], HARD_RUNS_SCHEMA,
              ["loss", "delta", "repeat", "diverged", "first_zero_error_epoch", "surrogate_settle_epoch",
               "final_test_zero_one", "final_test_surrogate"], run_rows)
    res.summary = dict(epochs=epochs, curves=curves, runs=runs)
    if svg if svg is not None else cfg.svg:
        res.files["svg"] = os.path.join(out, "hard_margin.svg")
        _plot_hard(cfg, epochs, curves, res.files["svg"])
    return res


def _plot_hard(cfg, epochs, curves, path):
    from .svgplot import PALETTE, Figure

    fig = Figure(300 * len(cfg.deltas) + 80, 560)
    panels = fig.grid(2, len(cfg.deltas))
    x = np.array(epochs[1:], dtype=float)
    for di, delta in enumerate(cfg.deltas):
        top = panels[di]
        bottom = panels[len(cfg.deltas) + di]
        top.title = f"delta = {delta}"
        top.xlog = top.ylog = True
        top.ylabel = "test surrogate" if di == 0 else ""
        bottom.xlog = True
        bottom.xlabel = "epoch"
        bottom.ylabel = "test 0-1 error" if di == 0 else ""
        for li, loss in enumerate(cfg.losses):
            c = curves.get((loss, delta))
            if c is None:
                continue
            color = PALETTE[li % len(PALETTE)]
            top.line(x, c[1:, 1], label=loss, color=color)
            bottom.line(x, c[1:, 2], label=loss, color=color)
    fig.save(path)


# ---- soft margin learning curves ----

def _soft_cell(task):
    cfg, ai, ni, rep = task
    key = name_key("soft-margin")
    alpha, n = cfg.alphas[ai], cfg.ns[ni]
    train_set = gen_soft_margin(n, cfg.num_classes, alpha, seed=derive_seed(cfg.seed, key, ai, ni, rep, ROLE_TRAIN))
    init = _init_model(cfg, derive_seed(cfg.seed, key, ai, ni, rep, ROLE_FEATURES))
    try:
        model, _ = train(train_set, None, init, cfg.losses[0], _gd_config(cfg))
    except DivergedError as exc:
        return dict(diverged=True, epoch=exc.epoch)
    if cfg.risk == "exact":
        cb = build_codebook(cfg.num_classes)
        err = soft_margin_linear_risk(train_set.spec, model.weights @ cb.vertices.T)
    else:
        test_set = gen_soft_margin(cfg.n_test, cfg.num_classes, alpha,
                                   seed=derive_seed(cfg.seed, key, ai, ni, rep, ROLE_TEST))
        cb = build_codebook(cfg.num_classes)
        err = zero_one_risk(lambda X: cb.decode(model.predict(X)), test_set).value
    return dict(diverged=False, error=err)


def run_soft_margin(cfg, out=None, svg=None, jobs=1):
    """Mean test error per (alpha, n), a log-log slope per alpha and the slope-vs-alpha line."""
    out = _out_dir(cfg, out)
    tasks = [(cfg, ai, ni, rep) for ai in range(len(cfg.alphas))
             for ni in range(len(cfg.ns)) for rep in range(cfg.repeats)]
    results = _map(_soft_cell, tasks, jobs)
    res = ExperimentResult()
    errs = {}
    for (_, ai, ni, rep), r in zip(tasks, results):
        if r["diverged"]:
            res.diverged += 1
            log.warning("soft-margin run diverged: alpha=%s n=%d repeat=%d", cfg.alphas[ai], cfg.ns[ni], rep)
            continue
        errs.setdefault((ai, ni), []).append(r["error"])

    error_rows, slope_rows, fits, means = [], [], {}, {}
    for ai, alpha in enumerate(cfg.alphas):
        pairs = []
        for ni, n in enumerate(cfg.ns):
            e = np.array(errs.get((ai, ni), []))
            if e.size == 0:
                continue
            m = float(e.mean())
            se = float(e.std(ddof=1) / np.sqrt(e.size)) if e.size > 1 else 0.0
            error_rows.append([alpha, n, m, se, e.size])
            means[(alpha, n)] = m
            pairs.append((n, m))
        try:
            fit = loglog_slope(pairs, min_points=cfg.min_fit_points)
        except InsufficientDataError as exc:
            log.warning("alpha=%s: %s", alpha, exc)
            continue
        fits[alpha] = fit
        slope_rows.append([alpha, fit.slope, fit.intercept, fit.r_squared, fit.n_points, fit.excluded])

    meta = None
    if len(fits) >= 2:
        a = np.array(list(fits))
        meta = ols(a, [fits[k].slope for k in fits])
    res.files["errors"] = os.path.join(out, "soft_margin_errors.csv")
    write_csv(res.files["errors"], SOFT_ERRORS_SCHEMA, ["alpha", "n", "mean_error", "std_error", "runs"], error_rows)
    res.files["slopes"] = os.path.join(out, "soft_margin_slopes.csv")
    write_csv(res.files["slopes"], SOFT_SLOPES_SCHEMA,
              ["alpha", "slope", "intercept", "r_squared", "n_points", "excluded"], slope_rows)
    res.files["meta"] = os.path.join(out, "soft_margin_meta.csv")
    write_csv(res.files["meta"], SOFT_META_SCHEMA,
              ["meta_slope", "meta_intercept", "meta_r_squared", "reference_slope", "predicted_slope"],
              [[*(meta or (None, None, None)), REFERENCE_META_SLOPE, PREDICTED_META_SLOPE]])
    res.summary = dict(means=means, fits=fits, meta_slope=None if meta is None else meta[0],
                       meta=meta)
    if svg if svg is not None else cfg.svg:
        res.files["svg"] = os.path.join(out, "soft_margin.svg")
        _plot_soft(cfg, means, fits, meta, res.files["svg"])
    return res


def _plot_soft(cfg, means, fits, meta, path):
    from .svgplot import Figure

    fig = Figure(760, 420)
    main = fig.panel((70, 30, 400, 320), title="soft margin", xlabel="n", ylabel="test 0-1 error",
                     xlog=True, ylog=True)
    for alpha in cfg.alphas:
        pts = [(n, means[(alpha, n)]) for n in cfg.ns if (alpha, n) in means]
        if pts:
            main.line([p[0] for p in pts], [p[1] for p in pts], label=f"alpha={alpha}", marker=True)
    side = fig.panel((540, 60, 190, 160), title="fitted slope", xlabel="alpha")
    if fits:
        a = sorted(fits)
        side.line(a, [fits[k].slope for k in a], marker=True)
        if meta is not None:
            side.line(a, [meta[0] * k + meta[1] for k in a], dashed=True, color="#888888")
    fig.save(path)


# ---- hard margin sample-size sweep ----

def _sweep_cell(task):
    cfg, li, di, ni, rep = task
    key = name_key("hard-margin-sweep")
    delta, n = cfg.deltas[di], cfg.ns[ni]
    train_set = gen_hard_margin(n, cfg.num_classes, delta, seed=derive_seed(cfg.seed, key, di, ni, rep, ROLE_TRAIN))
    test_set = gen_hard_margin(cfg.n_test, cfg.num_classes, delta, seed=derive_seed(cfg.seed, key, di, ni, rep, ROLE_TEST))
    init = _init_model(cfg, derive_seed(cfg.seed, key, di, ni, rep, ROLE_FEATURES))
    try:
        model, _ = train(train_set, None, init, cfg.losses[li], _gd_config(cfg))
    except DivergedError as exc:
        return dict(diverged=True, epoch=exc.epoch)
    cb = build_codebook(cfg.num_classes)
    return dict(diverged=False, error=zero_one_risk(lambda X: cb.decode(model.predict(X)), test_set).value)


def run_hard_margin_sweep(cfg, out=None, svg=None, jobs=1):
    """Final test error against n for each (loss, delta), with an exponential-decay fit on the positive means."""
    out = _out_dir(cfg, out)
    tasks = [(cfg, li, di, ni, rep) for li in range(len(cfg.losses)) for di in range(len(cfg.deltas))
             for ni in range(len(cfg.ns)) for rep in range(cfg.repeats)]
    results = _map(_sweep_cell, tasks, jobs)
    res = ExperimentResult()
    errs = {}
    for (_, li, di, ni, rep), r in zip(tasks, results):
        if r["diverged"]:
            res.diverged += 1
            continue
        errs.setdefault((li, di, ni), []).append(r["error"])

    error_rows, fit_rows, fits, means = [], [], {}, {}
    for li, loss in enumerate(cfg.losses):
        for di, delta in enumerate(cfg.deltas):
            pairs = []
            for ni, n in enumerate(cfg.ns):
                e = errs.get((li, di, ni))
                if not e:
                    continue
                m = float(np.mean(e))
                means[(loss, delta, n)] = m
                error_rows.append([loss, delta, n, m, len(e)])
                pairs.append((n, m))
            try:
                fit = exp_decay_fit(pairs, min_points=cfg.min_fit_points)
            except InsufficientDataError as exc:
                log.warning("loss=%s delta=%s: %s", loss, delta, exc)
                fit_rows.append([loss, delta, None, None, None, 0, sum(e == 0 for _, e in pairs)])
                continue
            fits[(loss, delta)] = fit
            fit_rows.append([loss, delta, fit.slope, fit.intercept, fit.r_squared, fit.n_points, fit.excluded])
    res.files["errors"] = os.path.join(out, "hard_margin_sweep_errors.csv")
    write_csv(res.files["errors"], SWEEP_ERRORS_SCHEMA, ["loss", "delta", "n", "mean_error", "runs"], error_rows)
    res.files["fits"] = os.path.join(out, "hard_margin_sweep_fits.csv")
    write_csv(res.files["fits"], SWEEP_FITS_SCHEMA,
              ["loss", "delta", "slope", "intercept", "r_squared", "n_points", "excluded"], fit_rows)
    res.summary = dict(means=means, fits=fits)
    if svg if svg is not None else cfg.svg:
        from .svgplot import Figure

        fig = Figure(520, 400)
        p = fig.panel((70, 30, 420, 310), title="hard margin sweep", xlabel="n", ylabel="test 0-1 error", ylog=True)
        for loss in cfg.losses:
            for delta in cfg.deltas:
                pts = [(n, means[(loss, delta, n)]) for n in cfg.ns if (loss, delta, n) in means]
                p.line([q[0] for q in pts], [q[1] for q in pts], label=f"{loss} d={delta}", marker=True)
        res.files["svg"] = os.path.join(out, "hard_margin_sweep.svg")
        fig.save(res.files["svg"])
    return res


RUNNERS = {
    "hard-margin": run_hard_margin,
    "soft-margin": run_soft_margin,
    "hard-margin-sweep": run_hard_margin_sweep,
}
