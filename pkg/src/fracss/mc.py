"""Data generation and replication loops for simulation studies.

Every replication draws its innovations from an independent counter-based
stream keyed by (cell, rep), so results are identical whether replications
run serially or across workers, and any single replication can be
regenerated in isolation.  Aggregation uses compensated summation in
replication order, making the reported moments independent of scheduling.
"""

import math
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox, SeedSequence
from scipy.signal import lfilter
from scipy.special import ndtri

from .arma import NonInvertible, ThetaParams
from .bias import BoundaryD, bcm_correct
from .estimate import (AllStartsFailed, ModelSpec, NonFiniteObjective,
                       SingularHessian, estimate)
from .fracdiff import fracdiff_fft
from .objective import DegenerateLevel, SingularGram

ESTIMATOR_NAMES = ("css", "css-mu0", "mcss", "bcm")
_FIT_ERRORS = (AllStartsFailed, NonFiniteObjective, DegenerateLevel,
               SingularGram, SingularHessian, NonInvertible, BoundaryD)
TINY_UNIFORM = 1e-300


@dataclass(frozen=True)
class DgpSpec:
    """Data generating process: memory, short-run dynamics, level, scale."""

    d0: float
    ar: tuple = ()
    ma: tuple = ()
    mu0: float = 0.0
    sigma0: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "ar", tuple(float(v) for v in np.atleast_1d(self.ar)))
        object.__setattr__(self, "ma", tuple(float(v) for v in np.atleast_1d(self.ma)))
        if self.sigma0 <= 0.0:
            raise ValueError("sigma0 must be positive")

    @property
    def theta0(self) -> ThetaParams:
        return ThetaParams(d=self.d0, ar=self.ar, ma=self.ma)


@dataclass(frozen=True)
class McConfig:
    """Replication plan for one design cell."""

    reps: int
    T: int
    base_seed: int = 0
    cell_index: int = 0
    estimators: tuple = ("css", "mcss", "bcm")
    spec: ModelSpec = None
    n_jobs: int = 1
    bcm_method: str = "exact"

    def __post_init__(self):
        for name in self.estimators:
            if name not in ESTIMATOR_NAMES:
                raise ValueError(f"unknown estimator {name!r}")


@dataclass(frozen=True)
class McResult:
    """Replication outcomes and their summary moments.

    estimates maps estimator name to an (n_ok, 1 + p) array in replication
    order; bias100 / mse100 / se100 hold 100 x (mean error), 100 x (mean
    squared error) and 100 x (Monte Carlo standard error of the mean), per
    parameter.  Failed replications are excluded and disclosed.
    """

    dgp: DgpSpec
    config: McConfig
    estimates: dict
    bias100: dict
    mse100: dict
    se100: dict
    n_failed: int
    failures: tuple


def simulate_path(dgp: DgpSpec, T: int, base_seed: int = 0, cell_index: int = 0,
                  rep: int = 0) -> np.ndarray:
    """One sample path of length T.

    The innovation stream is Philox keyed by SeedSequence(base_seed,
    spawn_key=(cell_index, rep)); innovations are Gaussian by inverse
    transform of uniforms.  The path is the level plus the truncated
    (-d0)-difference of the short-run process, so x_t is exactly the
    type-II process started at t = 1.
    """
    theta0 = dgp.theta0
    theta0.arma.validate()
    ss = SeedSequence(base_seed, spawn_key=(int(cell_index), int(rep)))
    gen = Generator(Philox(ss))
    u = gen.random(T)
    # inverse transform maps 0 to -inf; clamp to the smallest safe uniform
    u = np.clip(u, TINY_UNIFORM, 1.0)
    eps = ndtri(u) * dgp.sigma0
    arma = theta0.arma
    shock = lfilter(arma.ma_poly, arma.ar_poly, eps)
    return dgp.mu0 + fracdiff_fft(shock, -dgp.d0)


def _needs_mcss(estimators):
    return "mcss" in estimators or "bcm" in estimators


def _one_rep(dgp, config, spec, rep):
    x = simulate_path(dgp, config.T, config.base_seed, config.cell_index, rep)
    out = {}
    fails = []
    mcss_fit = None
    if _needs_mcss(config.estimators):
        try:
            mcss_fit = estimate(x, spec, kind="mcss")
        except _FIT_ERRORS as exc:
            fails.append((rep, "mcss", f"{type(exc).__name__}: {exc}"))
    for name in config.estimators:
        try:
            if name == "css":
                fit = estimate(x, spec, kind="css")
            elif name == "css-mu0":
                fit = estimate(x, spec, kind="css-mu0", mu0=dgp.mu0)
            elif name == "mcss":
                fit = mcss_fit
            else:
                fit = (bcm_correct(mcss_fit, x, method=config.bcm_method)
                       if mcss_fit is not None else None)
            if fit is not None:
                out[name] = np.asarray(fit.theta.as_vector())
        except _FIT_ERRORS as exc:
            fails.append((rep, name, f"{type(exc).__name__}: {exc}"))
    return rep, out, fails


def _column_stats(values, truth):
    """Compensated-summation moments of one estimator's draws."""
    n, k = values.shape
    bias = np.empty(k)
    mse = np.empty(k)
    se = np.empty(k)
    for j in range(k):
        col = values[:, j]
        mean = math.fsum(col) / n
        err = mean - truth[j]
        bias[j] = 100.0 * err
        mse[j] = 100.0 * math.fsum((v - truth[j]) ** 2 for v in col) / n
        var = math.fsum((v - mean) ** 2 for v in col) / max(n - 1, 1)
        se[j] = 100.0 * math.sqrt(var / n)
    return bias, mse, se


def run_mc(dgp: DgpSpec, config: McConfig) -> McResult:
    """Run the replication plan and summarize each requested estimator.

    With n_jobs = 1 the loop runs in-process; otherwise replications are
    farmed to worker processes and gathered back in replication order, so
    the summaries are bit-identical either way.
    """
    spec = config.spec
    if spec is None:
        spec = ModelSpec(p1=len(dgp.ar), p2=len(dgp.ma),
                         d_box=(dgp.d0 - 5.0, dgp.d0 + 5.0))
    if config.n_jobs == 1:
        rows = [_one_rep(dgp, config, spec, rep) for rep in range(config.reps)]
    else:
        from joblib import Parallel, delayed

        rows = Parallel(n_jobs=config.n_jobs)(
            delayed(_one_rep)(dgp, config, spec, rep) for rep in range(config.reps)
        )
    rows.sort(key=lambda row: row[0])

    truth = np.asarray(dgp.theta0.as_vector())
    estimates = {}
    bias100, mse100, se100 = {}, {}, {}
    failures = []
    failed_reps = set()
    for rep, out, fails in rows:
        for item in fails:
            failures.append(item)
            failed_reps.add(rep)
    for name in config.estimators:
        stack = [out[name] for rep, out, _ in rows if name in out]
        if stack:
            values = np.vstack(stack)
            estimates[name] = values
            bias100[name], mse100[name], se100[name] = _column_stats(values, truth)
        else:
            estimates[name] = np.empty((0, truth.size))
            bias100[name] = mse100[name] = se100[name] = np.full(truth.size, np.nan)
    return McResult(dgp=dgp, config=config, estimates=estimates, bias100=bias100,
                    mse100=mse100, se100=se100, n_failed=len(failed_reps),
                    failures=tuple(failures))
