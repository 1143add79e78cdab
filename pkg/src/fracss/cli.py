"""Command-line toolkit: data ingestion, level-break filtering, estimation,
theoretical bias tables, Monte Carlo studies and plot-data emission.

Every command is pure given its inputs, flags and seed: outputs carry no
wall-clock or environment dependence, so repeated runs produce identical
bytes.  Tables are CSV (comma separated, ``.`` decimal, LF endings, UTF-8)
with floats at 17 significant digits so that a write/read round trip is
exact; reports are JSON objects tagged with ``schema_version`` and an echo
of the inputs.
"""

import dataclasses
import json
import math
import sys
from dataclasses import dataclass

import click
import numpy as np

from .arma import NonInvertible, ThetaParams
from .bias import BoundaryD, bcm_correct, bias_table
from .estimate import (AllStartsFailed, FitResult, ModelSpec,
                       NonFiniteObjective, SingularHessian, estimate)
from .mc import DgpSpec, McConfig, run_mc, simulate_path
from .objective import DegenerateLevel, SingularGram, mod_term

SCHEMA_VERSION = 1
TRIM_DEFAULT = 0.15
TRANSFORMS = ("none", "log", "diff", "logdiff")
ESTIMATOR_CHOICES = ("css", "css-mu0", "mcss", "bcm")

_FIT_ERRORS = (AllStartsFailed, NonFiniteObjective, DegenerateLevel,
               SingularGram, NonInvertible, BoundaryD, ValueError)


@dataclass(frozen=True)
class DatasetFrame:
    """A named univariate series with its provenance.

    The transform tag records what was applied after ingestion so that
    downstream reports can echo it; values are guaranteed free of NaN and
    infinities.
    """

    name: str
    values: np.ndarray
    transform: str = "none"
    source: str = ""

    @property
    def T(self):
        return int(self.values.shape[0])


@dataclass(frozen=True)
class BreakFit:
    """Least-squares level-break fit.

    The mean function is mu + beta for t <= k and mu afterwards, with k
    chosen on the grid tau = k/T by minimal sum of squared residuals.
    ``filtered`` is the series minus the fitted step mean.
    """

    tau_hat: float
    k: int
    mu_hat: float
    beta_hat: float
    ssr: float
    filtered: np.ndarray


def read_series(path) -> DatasetFrame:
    """Read a one-column CSV into a DatasetFrame.

    An optional single header line names the series.  Any unparsable or
    non-finite value is rejected with its 1-based line number.
    """
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    lines = text.split("\n")
    while lines and lines[-1] == "":
        lines.pop()
    name = str(path).rsplit("/", 1)[-1]
    if name.endswith(".csv"):
        name = name[:-4]
    values = []
    for lineno, raw in enumerate(lines, start=1):
        entry = raw.rstrip("\r").strip()
        if entry == "":
            raise click.ClickException(f"{path}:{lineno}: empty line")
        fields = entry.split(",")
        if len(fields) != 1:
            raise click.ClickException(
                f"{path}:{lineno}: expected one column, found {len(fields)}")
        try:
            v = float(fields[0])
        except ValueError:
            if lineno == 1:
                name = fields[0].strip()
                continue
            raise click.ClickException(
                f"{path}:{lineno}: cannot parse {fields[0]!r} as a number")
        if not math.isfinite(v):
            raise click.ClickException(
                f"{path}:{lineno}: non-finite value {fields[0]!r}")
        values.append(v)
    if not values:
        raise click.ClickException(f"{path}: no data rows")
    return DatasetFrame(name=name, values=np.asarray(values, dtype=float),
                        transform="none", source=str(path))


def apply_transform(frame: DatasetFrame, transform: str) -> DatasetFrame:
    """Apply one of the supported transforms to a frame."""
    if transform not in TRANSFORMS:
        raise click.ClickException(f"unknown transform {transform!r}")
    x = frame.values
    if transform == "none":
        return frame
    if transform in ("log", "logdiff"):
        bad = np.nonzero(x <= 0.0)[0]
        if bad.size:
            raise click.ClickException(
                f"{frame.source}: log transform needs positive values "
                f"(first violation at data row {bad[0] + 1})")
        x = np.log(x)
    if transform in ("diff", "logdiff"):
        if x.shape[0] < 2:
            raise click.ClickException("differencing needs at least 2 values")
        x = np.diff(x)
    return dataclasses.replace(frame, values=x, transform=transform)


def break_filter(x, trim: float = TRIM_DEFAULT) -> BreakFit:
    """Estimate a one-time level shift by exhaustive least squares.

    For every break date k with k/T in [trim, 1 - trim] the series is
    regressed on {1, I(t <= k)}; the k with minimal SSR wins and ties go
    to the smallest k.  Both segment means are closed-form, so the scan
    uses cumulative sums.
    """
    x = np.asarray(x, dtype=float)
    T = x.shape[0]
    if T < 20:
        raise click.ClickException("break filter needs at least 20 observations")
    if not 0.0 < trim < 0.5:
        raise click.ClickException("trim must lie in (0, 0.5)")
    k_lo = max(int(math.ceil(trim * T)), 1)
    k_hi = min(int(math.floor((1.0 - trim) * T)), T - 1)
    ks = np.arange(k_lo, k_hi + 1)
    s = np.cumsum(x)
    s2 = np.cumsum(x * x)
    n1 = ks.astype(float)
    n2 = T - n1
    sum1 = s[ks - 1]
    sum2 = s[-1] - sum1
    sq1 = s2[ks - 1]
    ssr = (sq1 - sum1 ** 2 / n1) + (s2[-1] - sq1 - sum2 ** 2 / n2)
    i = int(np.argmin(ssr))
    k = int(ks[i])
    mu = float(sum2[i] / n2[i])
    beta = float(sum1[i] / n1[i] - mu)
    step = np.where(np.arange(1, T + 1) <= k, mu + beta, mu)
    return BreakFit(tau_hat=k / T, k=k, mu_hat=mu, beta_hat=beta,
                    ssr=float(ssr[i]), filtered=x - step)


def _fmt(v) -> str:
    return format(float(v), ".17g")


def _write_text(path, text: str):
    if path is None:
        click.echo(text, nl=False)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _csv_text(header, rows) -> str:
    out = [",".join(header)]
    for row in rows:
        out.append(",".join(row))
    return "\n".join(out) + "\n"


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _parse_box(_ctx, _param, value):
    try:
        lo, hi = value.split(":")
        lo, hi = float(lo), float(hi)
    except ValueError:
        raise click.BadParameter("expected LO:HI")
    if not lo < hi:
        raise click.BadParameter("need LO < HI")
    return (lo, hi)


def _parse_floats(value):
    value = value.strip()
    if value == "":
        return ()
    try:
        return tuple(float(v) for v in value.split(","))
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {value!r}")


def _parse_ints(value):
    return tuple(int(round(v)) for v in _parse_floats(value))


@click.group()
def main():
    """Estimation toolkit for fractionally integrated time series."""


def _fit_payload(fit: FitResult, degenerate: bool) -> dict:
    se = fit.se
    t = fit.t_stats
    return {
        "d": fit.theta.d,
        "ar": list(fit.theta.ar),
        "ma": list(fit.theta.ma),
        "mu": None if fit.mu is None else float(fit.mu),
        "sigma2": fit.sigma2,
        "objective": fit.objective,
        "se": None if se is None else [float(v) for v in se],
        "t_stats": None if t is None else [float(v) for v in t],
        "converged": bool(fit.converged),
        "at_boundary": bool(fit.at_boundary),
        "n_starts": int(fit.n_starts),
        "n_evals": int(fit.n_evals),
        "degenerate": bool(degenerate),
        "message": fit.message,
    }


def _param_names(p1: int, p2: int):
    return (["d"] + [f"ar{k}" for k in range(1, p1 + 1)]
            + [f"ma{k}" for k in range(1, p2 + 1)])


def _print_fit(fit: FitResult, names):
    se = fit.se
    t = fit.t_stats
    click.echo(f"{'param':<8}{'estimate':>14} {'std.err':>12} {'t(0)':>12}")
    vec = fit.theta.as_vector()
    for i, nm in enumerate(names):
        se_s = f"{se[i]:.4g}" if se is not None else "-"
        t_s = f"{t[i]:.4g}" if t is not None else "-"
        click.echo(f"{nm:<8}{vec[i]:>14.6f} {se_s:>12} {t_s:>12}")
    if fit.mu is not None:
        click.echo(f"{'mu':<8}{float(fit.mu):>14.6f}")
    click.echo(f"sigma2   {fit.sigma2:.6g}")
    click.echo(f"objective {fit.objective:.10g}  converged {fit.converged}  "
               f"n_starts {fit.n_starts}  n_evals {fit.n_evals}")


@main.command("estimate")
@click.argument("csv_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--p1", default=0, show_default=True, help="Autoregressive order.")
@click.option("--p2", default=0, show_default=True, help="Moving-average order.")
@click.option("--estimator", type=click.Choice(ESTIMATOR_CHOICES),
              default="mcss", show_default=True)
@click.option("--mu0", type=float, default=0.0, show_default=True,
              help="Known level, used by css-mu0 only.")
@click.option("--d-box", default="-5:5", show_default=True, callback=_parse_box,
              help="Memory-parameter search interval LO:HI.")
@click.option("--transform", type=click.Choice(TRANSFORMS), default="none",
              show_default=True)
@click.option("--break-filter", "do_break", is_flag=True,
              help="Remove an estimated level break before estimation.")
@click.option("--trim", default=TRIM_DEFAULT, show_default=True,
              help="Break-date trimming fraction.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the JSON report to this path.")
def cmd_estimate(csv_path, p1, p2, estimator, mu0, d_box, transform, do_break,
                 trim, out):
    """Estimate an ARFIMA(p1, d, p2) model from a one-column CSV."""
    frame = apply_transform(read_series(csv_path), transform)
    x = frame.values
    bf = None
    if do_break:
        bf = break_filter(x, trim)
        x = bf.filtered
        click.echo(f"break   tau_hat={bf.tau_hat:.4f} (k={bf.k})  "
                   f"mu_hat={bf.mu_hat:.4f}  beta_hat={bf.beta_hat:.4f}")
    spec = ModelSpec(p1=p1, p2=p2, d_box=d_box)
    kind = "mcss" if estimator == "bcm" else estimator
    known = mu0 if kind == "css-mu0" else None
    degenerate = False
    try:
        try:
            fit = estimate(x, spec, kind=kind, mu0=known, with_cov=True)
        except SingularHessian:
            # zero or flat residual surface: report the point without SEs
            fit = estimate(x, spec, kind=kind, mu0=known, with_cov=False)
            degenerate = True
        if estimator == "bcm":
            fit = bcm_correct(fit, x=x, method="exact")
    except _FIT_ERRORS as err:
        raise click.ClickException(f"{type(err).__name__}: {err}")
    # residual variance at rounding scale means the surface carries no signal
    eps = float(np.finfo(float).eps)
    if fit.sigma2 <= eps ** 2 * (1.0 + float(np.mean(x * x))):
        degenerate = True
    names = _param_names(p1, p2)
    click.echo(f"series  {frame.name} (T={x.shape[0]}, transform={frame.transform})")
    click.echo(f"model   ARFIMA({p1},d,{p2})  estimator {estimator}")
    _print_fit(fit, names)
    if degenerate:
        click.echo("warning: degenerate fit (zero residual variance or flat surface)")
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "estimate",
        "inputs": {
            "path": str(csv_path),
            "series_name": frame.name,
            "T": int(x.shape[0]),
            "p1": p1,
            "p2": p2,
            "estimator": estimator,
            "mu0": mu0 if kind == "css-mu0" else None,
            "d_box": [d_box[0], d_box[1]],
            "transform": frame.transform,
            "break_filter": bool(do_break),
            "trim": trim if do_break else None,
        },
        "break_fit": None if bf is None else {
            "tau_hat": bf.tau_hat,
            "k": bf.k,
            "mu_hat": bf.mu_hat,
            "beta_hat": bf.beta_hat,
            "ssr": bf.ssr,
        },
        "fit": _fit_payload(fit, degenerate),
    }
    text = _json_text(report)
    if out is None:
        click.echo(text, nl=False)
    else:
        _write_text(out, text)


@main.command("break-filter")
@click.argument("csv_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--trim", default=TRIM_DEFAULT, show_default=True,
              help="Break-date trimming fraction.")
@click.option("--transform", type=click.Choice(TRANSFORMS), default="none",
              show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the JSON report to this path.")
def cmd_break_filter(csv_path, trim, transform, out):
    """Locate a one-time level shift by least squares over break dates."""
    frame = apply_transform(read_series(csv_path), transform)
    bf = break_filter(frame.values, trim)
    click.echo(f"series  {frame.name} (T={frame.T}, transform={frame.transform})")
    click.echo(f"tau_hat {bf.tau_hat:.6f}  (break date k={bf.k})")
    click.echo(f"mu_hat  {bf.mu_hat:.6f}")
    click.echo(f"beta_hat {bf.beta_hat:.6f}")
    click.echo(f"ssr     {bf.ssr:.6f}")
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "break-filter",
        "inputs": {
            "path": str(csv_path),
            "series_name": frame.name,
            "T": frame.T,
            "trim": trim,
            "transform": frame.transform,
        },
        "tau_hat": bf.tau_hat,
        "k": bf.k,
        "mu_hat": bf.mu_hat,
        "beta_hat": bf.beta_hat,
        "ssr": bf.ssr,
        "filtered": [float(v) for v in bf.filtered],
    }
    text = _json_text(report)
    if out is None:
        click.echo(text, nl=False)
    else:
        _write_text(out, text)


@main.command("bias-table")
@click.option("--d0", "d0_list", default="-0.2,-0.1,0.0,0.1,0.2,0.3,0.4,0.5,"
              "0.6,0.7,0.8,0.9,1.0,1.1,1.2", show_default=True,
              help="Comma-separated memory parameters.")
@click.option("--T", "t_list", default="32,64,128,256", show_default=True,
              help="Comma-separated sample sizes.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the CSV here instead of stdout.")
def cmd_bias_table(d0_list, t_list, out):
    """Theoretical order-1/T bias table (x100) for the purely fractional model.

    Columns: CSS with unknown level, CSS with known level, and the modified
    estimator.  The excluded boundary d0=0.5 is rendered as empty cells.
    """
    d0s = _parse_floats(d0_list)
    Ts = _parse_ints(t_list)
    if not d0s or not Ts:
        raise click.ClickException("need at least one d0 and one T")
    tab = bias_table(d0_values=d0s, T_values=Ts)
    rows = []
    for i, d0 in enumerate(d0s):
        for j, T in enumerate(Ts):
            tot = tab.total[i, j]
            con = tab.constant[j]
            if np.isnan(tot):
                rows.append([_fmt(d0), str(T), "", "", ""])
            else:
                rows.append([_fmt(d0), str(T), _fmt(tot), _fmt(con), _fmt(con)])
    text = _csv_text(["d0", "T", "bias_css", "bias_css_mu0", "bias_mcss"], rows)
    _write_text(out, text)


def _load_mc_config(path, reps, seed):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as err:
            raise click.ClickException(f"{path}: invalid JSON ({err})")
    if not isinstance(cfg, dict):
        raise click.ClickException(f"{path}: config must be a JSON object")
    d0s = cfg.get("d0")
    if not d0s:
        raise click.ClickException("config needs a non-empty 'd0' list")
    phis = cfg.get("phi0")
    pure = phis is None
    if pure:
        phis = [None]
    elif not phis:
        raise click.ClickException("'phi0' must be a non-empty list when present")
    Ts = cfg.get("T")
    if not Ts:
        raise click.ClickException("config needs a non-empty 'T' list")
    if reps is None:
        reps = cfg.get("reps", 0)
    if seed is None:
        seed = cfg.get("base_seed", 0)
    if int(reps) < 1:
        raise click.ClickException("reps must be >= 1")
    estimators = tuple(cfg.get("estimators", ["css", "mcss", "bcm"]))
    for e in estimators:
        if e not in ESTIMATOR_CHOICES:
            raise click.ClickException(f"unknown estimator {e!r} in config")
    p1 = int(cfg.get("p1", 0 if pure else 1))
    p2 = int(cfg.get("p2", 0))
    d_box = cfg.get("d_box")
    if d_box is not None:
        d_box = (float(d_box[0]), float(d_box[1]))
    return {
        "d0": [float(v) for v in d0s],
        "phi0": phis,
        "T": [int(v) for v in Ts],
        "reps": int(reps),
        "base_seed": int(seed),
        "estimators": estimators,
        "p1": p1,
        "p2": p2,
        "d_box": d_box,
    }


@main.command("mc")
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--reps", type=int, default=None, help="Override replication count.")
@click.option("--seed", type=int, default=None, help="Override the base seed.")
@click.option("--jobs", type=int, default=1, show_default=True,
              help="Worker processes per cell.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Base path: writes OUT.csv and OUT.json.")
def cmd_mc(config_path, reps, seed, jobs, out):
    """Run the Monte Carlo grid described by a JSON config file.

    The config lists d0, optional phi0 (AR(1) DGP coefficient) and T grids
    plus reps, base_seed, estimators and optional d_box / p1 / p2 model
    overrides.  Output is one CSV row per (cell, estimator, parameter) and
    a JSON report; the CSS-vs-MCSS bias change column is
    100 (|bias_css| - |bias_mcss|) / |bias_mcss|.
    """
    cfg = _load_mc_config(config_path, reps, seed)
    names = _param_names(cfg["p1"], cfg["p2"])
    rows = []
    results = []
    cell_index = 0
    for d0 in cfg["d0"]:
        for phi0 in cfg["phi0"]:
            for T in cfg["T"]:
                ar = () if phi0 is None else (float(phi0),)
                dgp = DgpSpec(d0=d0, ar=ar, ma=())
                spec = None
                if cfg["d_box"] is not None or cfg["p1"] != len(ar) or cfg["p2"] != 0:
                    box = cfg["d_box"] or (d0 - 5.0, d0 + 5.0)
                    spec = ModelSpec(p1=cfg["p1"], p2=cfg["p2"], d_box=box)
                mc_cfg = McConfig(reps=cfg["reps"], T=T, base_seed=cfg["base_seed"],
                                  cell_index=cell_index,
                                  estimators=cfg["estimators"], spec=spec,
                                  n_jobs=jobs)
                res = run_mc(dgp, mc_cfg)
                delta = None
                if "css" in cfg["estimators"] and "mcss" in cfg["estimators"]:
                    b_css = np.abs(res.bias100["css"])
                    b_m = np.abs(res.bias100["mcss"])
                    with np.errstate(divide="ignore", invalid="ignore"):
                        delta = 100.0 * (b_css - b_m) / b_m
                for est in cfg["estimators"]:
                    for ip, nm in enumerate(names):
                        dv = ""
                        if delta is not None and est == "css":
                            dv = _fmt(delta[ip])
                        rows.append([
                            _fmt(d0),
                            "" if phi0 is None else _fmt(phi0),
                            str(T), est, nm,
                            _fmt(res.bias100[est][ip]),
                            _fmt(res.se100[est][ip]),
                            _fmt(res.mse100[est][ip]),
                            str(res.n_failed),
                            dv,
                        ])
                results.append({
                    "d0": d0,
                    "phi0": phi0,
                    "T": T,
                    "params": names,
                    "n_failed": int(res.n_failed),
                    "estimates": {
                        est: {
                            "bias100": [float(v) for v in res.bias100[est]],
                            "se100": [float(v) for v in res.se100[est]],
                            "mse100": [float(v) for v in res.mse100[est]],
                        } for est in cfg["estimators"]
                    },
                    "delta_pct_abs_bias": None if delta is None
                    else [float(v) for v in delta],
                })
                cell_index += 1
    header = ["d0", "phi0", "T", "estimator", "param", "bias100", "se100",
              "mse100", "n_failed", "delta_pct_abs_bias"]
    csv_text = _csv_text(header, rows)
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "mc",
        "inputs": {k: (list(v) if isinstance(v, tuple) else v)
                   for k, v in cfg.items()},
        "results": results,
    }
    json_text = _json_text(report)
    if out is None:
        click.echo(csv_text, nl=False)
        click.echo(json_text, nl=False)
    else:
        _write_text(f"{out}.csv", csv_text)
        _write_text(f"{out}.json", json_text)
        click.echo(f"wrote {out}.csv and {out}.json")


@main.command("modterm-curve")
@click.option("--T", "t_list", default="32,64,128,256", show_default=True,
              help="Comma-separated sample sizes.")
@click.option("--d-range", default="-1:2:0.05", show_default=True,
              help="Memory grid LO:HI:STEP.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the CSV here instead of stdout.")
def cmd_modterm_curve(t_list, d_range, out):
    """Sample the purely fractional modification term m(d) for plotting."""
    Ts = _parse_ints(t_list)
    try:
        lo, hi, step = (float(v) for v in d_range.split(":"))
    except ValueError:
        raise click.BadParameter("expected LO:HI:STEP for --d-range")
    if step <= 0 or hi < lo:
        raise click.BadParameter("need LO <= HI and STEP > 0")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    ds = lo + step * np.arange(n)
    rows = []
    for T in Ts:
        for d in ds:
            m = mod_term(ThetaParams(d=float(d)), T)
            rows.append([str(T), _fmt(d), _fmt(m)])
    _write_text(out, _csv_text(["T", "d", "m"], rows))


@main.command("simulate")
@click.option("--d0", type=float, required=True, help="True memory parameter.")
@click.option("--ar", default="", help="Comma-separated AR coefficients.")
@click.option("--ma", default="", help="Comma-separated MA coefficients.")
@click.option("--mu0", type=float, default=0.0, show_default=True)
@click.option("--sigma0", type=float, default=1.0, show_default=True)
@click.option("--T", "T", type=int, required=True, help="Sample size.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--reps", type=int, default=1, show_default=True,
              help="Number of independent paths.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the CSV here instead of stdout.")
def cmd_simulate(d0, ar, ma, mu0, sigma0, T, seed, reps, out):
    """Draw paths from the truncated fractional DGP as CSV (rep, t, x)."""
    if reps < 1:
        raise click.ClickException("reps must be >= 1")
    if T < 1:
        raise click.ClickException("T must be >= 1")
    dgp = DgpSpec(d0=d0, ar=_parse_floats(ar), ma=_parse_floats(ma),
                  mu0=mu0, sigma0=sigma0)
    rows = []
    for rep in range(reps):
        x = simulate_path(dgp, T, base_seed=seed, cell_index=0, rep=rep)
        for t in range(T):
            rows.append([str(rep), str(t + 1), _fmt(x[t])])
    _write_text(out, _csv_text(["rep", "t", "x"], rows))


if __name__ == "__main__":
    sys.exit(main())
