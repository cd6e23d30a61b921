"""Monte Carlo experiment harness.

Replicate r of a run draws its generator from a seed sequence keyed by
(master seed, r), so results are bitwise identical under any worker count or
execution order. DECONVO_THREADS caps the thread pool; the default is serial.
Fixed-design runs precompute the estimator weight tables once and reuse them
across replicates, and reuse the noise-free response field so only the noise
is redrawn.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .asymptotics import NormalizerRequest, empirical_cumulants, normalizer_iid, normalizer_ma
from .errors import ConfigError, DeconvoError, NumericalError
from .estimators import (
    EstimateField,
    FdAdditivePlan,
    FdPlan,
    RdPlan,
    estimate_field,
    fd_additive_weight_field,
    fd_weight_field,
    predict_variance,
)
from .model import (
    Dataset,
    Design,
    EstimatorConfig,
    NoiseSpec,
    kernel_from_id,
    signal_preset,
)
from .synth import ForwardSignal, gen_noise

__all__ = [
    "Scenario",
    "McSummary",
    "MiseTable",
    "run_monte_carlo",
    "mise_scan",
    "normality_diagnostics",
    "misspecification_run",
    "worker_count",
]


def worker_count() -> int:
    raw = os.environ.get("DECONVO_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@dataclass(frozen=True)
class Scenario:
    """One simulation setting: what to generate and how to estimate it.

    signal/kernel are preset ids; the config's kernel is the one handed to
    the estimator (the assumed kernel) and defaults to the data-generating
    one. estimator is "fd", "fd-additive", "rd", or "rd-additive".
    """

    signal: str
    kernel: str
    design: Design
    noise: NoiseSpec
    config: EstimatorConfig
    points: tuple
    estimator: str = ""
    reps: int = 200
    seed: int = 0
    assumed_kernel: str = ""

    def __post_init__(self):
        if self.reps < 1:
            raise ConfigError("reps must be at least 1")
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        object.__setattr__(self, "points", pts)
        assumed = self.assumed_kernel or self.kernel
        object.__setattr__(self, "assumed_kernel", assumed)
        if self.config.kernel.id != assumed:
            raise ConfigError(
                f"config kernel {self.config.kernel.id} does not match the "
                f"assumed kernel {assumed}")
        kind = self.estimator or infer_estimator_kind(self)
        object.__setattr__(self, "estimator", kind)

    def signal_obj(self):
        return signal_preset(self.signal)

    def true_kernel_obj(self):
        return kernel_from_id(self.kernel, self.design.d)


def infer_estimator_kind(scenario: Scenario) -> str:
    if scenario.design.kind == "fixed":
        return "fd-additive" if scenario.config.partition is not None else "fd"
    return "rd-additive" if scenario.config.partition is not None else "rd"


@dataclass(frozen=True)
class McSummary:
    """Per-point Monte Carlo summary; mse = var + bias^2 by construction."""

    points: np.ndarray
    theta_true: np.ndarray
    mean: np.ndarray
    var: np.ndarray
    mse: np.ndarray
    reps: int
    runtime: float
    failures: int = 0
    samples: np.ndarray | None = None


def _replicate_rng(seed: int, rep: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, rep)))


class _FixedRunner:
    """Shared noise-free field + weight tables; per-replicate noise only."""

    def __init__(self, scenario: Scenario):
        sig = scenario.signal_obj()
        ker = scenario.true_kernel_obj()
        self.gfield = ForwardSignal(sig, ker).lattice_field(scenario.design)
        self.noise = scenario.noise
        if scenario.estimator == "fd":
            self.plan = FdPlan(scenario.design, scenario.config, scenario.points)
        else:
            self.plan = FdAdditivePlan(scenario.design, scenario.config,
                                       scenario.points)
        self.seed = scenario.seed

    def __call__(self, rep: int) -> np.ndarray:
        rng = _replicate_rng(self.seed, rep)
        eps = gen_noise(self.noise, self.gfield.shape, rng).values
        return self.plan.apply(self.gfield + eps)


class _RandomRunner:
    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.signal = scenario.signal_obj()
        self.kernel = scenario.true_kernel_obj()
        self.fs = ForwardSignal(self.signal, self.kernel)
        if scenario.noise.kind == "ma-lattice":
            raise ConfigError("lattice noise needs a fixed design")

    def __call__(self, rep: int) -> np.ndarray:
        sc = self.scenario
        rng = _replicate_rng(sc.seed, rep)
        x = sc.design.density.sample(rng, sc.design.n, sc.design.a_n)
        g = self.fs.eval(x)
        eps = gen_noise(sc.noise, (sc.design.n,), rng).values
        ds = Dataset(sc.design, g + eps, x, {})
        plan = RdPlan(ds, sc.config, sc.points,
                      additive=(sc.estimator == "rd-additive"))
        return plan.apply()


def _replicate_matrix(scenario: Scenario) -> tuple[np.ndarray, int, list[str]]:
    """(reps, P) estimates; failed replicates are nan rows."""
    if scenario.design.kind == "fixed":
        runner = _FixedRunner(scenario)
    else:
        runner = _RandomRunner(scenario)
    reps = scenario.reps
    npts = scenario.points.shape[0]
    out = np.full((reps, npts), np.nan)
    diagnostics: list[str] = []
    workers = worker_count()

    def run_one(r: int):
        try:
            out[r] = runner(r)
            return None
        except DeconvoError as exc:
            return f"replicate {r}: {exc}"

    if workers == 1:
        for r in range(reps):
            msg = run_one(r)
            if msg:
                diagnostics.append(msg)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for msg in pool.map(run_one, range(reps)):
                if msg:
                    diagnostics.append(msg)
    failures = len(diagnostics)
    if failures > 0.01 * reps:
        raise NumericalError(
            f"{failures}/{reps} replicates failed; first: {diagnostics[0]}")
    return out, failures, diagnostics


def run_monte_carlo(scenario: Scenario, keep_samples: bool = False) -> McSummary:
    """Replicated estimation at the scenario's points with summary stats."""
    start = time.perf_counter()
    samples, failures, _ = _replicate_matrix(scenario)
    ok = samples[~np.isnan(samples[:, 0])]
    theta = np.atleast_1d(scenario.signal_obj().eval(scenario.points))
    mean = ok.mean(axis=0)
    var = ok.var(axis=0)
    mse = np.mean((ok - theta[None, :]) ** 2, axis=0)
    runtime = time.perf_counter() - start
    return McSummary(scenario.points, theta, mean, var, mse, scenario.reps,
                     runtime, failures, ok if keep_samples else None)


@dataclass(frozen=True)
class MiseTable:
    h: np.ndarray
    mise: np.ndarray
    argmin: float
    reps: int
    runtime: float


def default_mise_grid(lo: float = -2.0, hi: float = 2.0, count: int = 41,
                      d: int = 2) -> np.ndarray:
    axis = np.linspace(lo, hi, count)
    grids = np.meshgrid(*([axis] * d), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


def mise_scan(scenario: Scenario, h_grid, grid=None) -> MiseTable:
    """MISE(h) over a bandwidth grid with common random numbers.

    MISE is the cell-area-weighted mean squared error over the integration
    grid, averaged over replicates; the same replicate seeds are used at
    every h so the comparison across bandwidths is paired.
    """
    h_grid = np.asarray(h_grid, dtype=float).ravel()
    if h_grid.size == 0 or np.any(np.diff(h_grid) <= 0):
        raise ConfigError("h_grid must be nonempty and ascending")
    start = time.perf_counter()
    pts = (np.atleast_2d(np.asarray(grid, dtype=float)) if grid is not None
           else default_mise_grid(d=scenario.design.d))
    d = scenario.design.d
    span = pts.max(axis=0) - pts.min(axis=0)
    counts = [np.unique(pts[:, i]).size for i in range(d)]
    cell = float(np.prod([span[i] / (counts[i] - 1) if counts[i] > 1 else 1.0
                          for i in range(d)]))
    theta = np.atleast_1d(scenario.signal_obj().eval(pts))
    mise = np.empty(h_grid.size)
    for levels, h in enumerate(h_grid):
        sc = replace(scenario, config=replace(scenario.config, h=float(h)),
                     points=pts)
        samples, _, _ = _replicate_matrix(sc)
        ok = samples[~np.isnan(samples[:, 0])]
        mise[levels] = cell * float(np.mean(np.sum((ok - theta[None, :]) ** 2,
                                                   axis=1)))
    arg = float(h_grid[int(np.argmin(mise))])
    return MiseTable(h_grid, mise, arg, scenario.reps,
                     time.perf_counter() - start)


def _default_normalizer(scenario: Scenario) -> float:
    cfg = scenario.config
    design = scenario.design
    noise = scenario.noise
    xstar = tuple(scenario.points[0])
    kind = scenario.estimator
    if kind == "fd":
        w = fd_weight_field(design, cfg, xstar)
        return predict_variance(w, noise)
    if kind == "fd-additive":
        if noise.kind == "ma-lattice":
            return normalizer_ma(NormalizerRequest("V_MA", design, cfg, noise,
                                                   xstar))
        return normalizer_iid(NormalizerRequest("U_n", design, cfg, noise,
                                                xstar))
    signal = scenario.signal_obj()
    vkind = "V1" if kind == "rd" else "V3"
    if noise.kind == "ma-seq":
        return normalizer_ma(NormalizerRequest(vkind + "_MA", design, cfg,
                                               noise, xstar, signal=signal))
    return normalizer_iid(NormalizerRequest(vkind, design, cfg, noise, xstar,
                                            signal=signal))


def normality_diagnostics(scenario: Scenario, reps: int | None = None,
                          normalizer: float | None = None) -> dict:
    """Standardized-estimator cumulants at the first evaluation point.

    Standardizes (theta_hat - MC mean) / sqrt(normalizer) and applies the
    thresholds |kappa_3| <= 0.2 and |kappa_4| <= 0.4; kappa_2 far from 1
    additionally flags a variance mismatch.
    """
    sc = scenario if reps is None else replace(scenario, reps=int(reps))
    sc = replace(sc, points=sc.points[:1])
    norm = _default_normalizer(sc) if normalizer is None else float(normalizer)
    if norm <= 0:
        raise ConfigError("normalizer must be positive")
    summary = run_monte_carlo(sc, keep_samples=True)
    std = (summary.samples[:, 0] - summary.mean[0]) / math.sqrt(norm)
    k1, k2, k3, k4 = empirical_cumulants(std, 4)
    verdict = "pass" if (abs(k3) <= 0.2 and abs(k4) <= 0.4) else "fail"
    return {
        "kappa": [k1, k2, k3, k4],
        "normalizer": norm,
        "reps": sc.reps,
        "verdict": verdict,
        "variance_flag": ("ok" if 0.8 <= k2 <= 1.2 else "variance mismatch"),
        "samples": std,
    }


def misspecification_run(scenario: Scenario) -> tuple[EstimateField, EstimateField]:
    """Fit one dataset under the true and the assumed kernel on one grid.

    Data are generated with the scenario's true kernel (any family). The
    second field always uses the assumed kernel. The first uses the true
    kernel when it is estimation-eligible (symmetric transform); otherwise it
    carries the true signal sampled on the grid as the reference surface.
    """
    sig = scenario.signal_obj()
    true_ker = scenario.true_kernel_obj()
    rng = _replicate_rng(scenario.seed, 0)
    design = scenario.design
    if design.kind == "fixed":
        from .synth import sample_fixed_design
        ds = sample_fixed_design(design, sig, true_ker, scenario.noise, rng)
    else:
        from .synth import sample_random_design
        ds = sample_random_design(design, sig, true_ker, scenario.noise, rng)
    pts = scenario.points
    fitted = estimate_field(ds, scenario.config, pts, scenario.estimator)
    if true_ker.symmetric_real:
        cfg_true = replace(scenario.config, kernel=true_ker)
        reference = estimate_field(ds, cfg_true, pts, scenario.estimator)
    else:
        vals = np.atleast_1d(sig.eval(pts))
        reference = EstimateField(pts, vals, None,
                                  {"estimator": "true-signal",
                                   "kernel": true_ker.id})
    return reference, fitted
