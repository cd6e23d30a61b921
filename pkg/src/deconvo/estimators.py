"""The four deconvolution estimators as linear functionals of the responses.

Every estimator has the form theta_hat(x*) = sum_k Y_k W_k(x*) with weights
that do not depend on Y. The fast paths build per-axis weight tables once and
contract them against the response lattice (fixed design) or the observation
list (random design); the naive paths evaluate each weight by tensor
quadrature and exist as a cross-check.

Fixed-design additive estimation centers the block statistics at the grand
mean: theta_hat = theta0_hat + sum_j sum_k (Z_k - theta0_hat) w_k. This keeps
block terms invariant under constant response shifts and makes the zero-noise
constant-response case exact. The uncentered block statistic is exposed
separately (fd_additive_block) because its finite-sample variance is the
quantity the frequency-domain normalizer tracks exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np
from scipy.signal import correlate as _nd_correlate

from .errors import ConfigError, OutputError
from .fourier import (
    axis_weight_integrals,
    fd_full_weight,
    fd_weight,
    max_density,
    rd_additive_weight,
    rd_weight,
)
from .model import (
    Dataset,
    EstimatorConfig,
    NoiseSpec,
    Partition,
    WeightMeasure,
)

__all__ = [
    "EstimateField",
    "estimate_fd",
    "estimate_fd_additive",
    "fd_additive_block",
    "estimate_rd",
    "estimate_rd_additive",
    "estimate_field",
    "fd_weight_field",
    "fd_additive_weight_field",
    "predict_variance",
    "save_field",
    "infer_estimator",
]


def _require_fixed(dataset: Dataset):
    if dataset.design.kind != "fixed":
        raise ConfigError("fixed-design estimator applied to a random design")


def _require_random(dataset: Dataset):
    if dataset.design.kind != "random":
        raise ConfigError("random-design estimator applied to a fixed design")
    if dataset.design.density is None:
        raise ConfigError("random design needs a density spec")


def _require_symmetric(config: EstimatorConfig):
    if not config.kernel.symmetric_real:
        raise ConfigError(
            f"kernel {config.kernel.id} has a complex transform; "
            "estimation needs a symmetric kernel")


def _partition_of(config: EstimatorConfig, d: int) -> Partition:
    if config.partition is not None:
        if config.partition.d != d:
            raise ConfigError("partition dimension does not match the design")
        return config.partition
    return Partition(d, tuple((i,) for i in range(d)))


def _axis_table(vals: np.ndarray, z: np.ndarray, config: EstimatorConfig,
                kernel, measure=None, normalized=False) -> np.ndarray:
    """J(vals[p] - z[s]) table of shape (P, S) for one axis.

    Grid point sets repeat axis coordinates heavily, so the quadrature runs
    on the unique values and is expanded back by the inverse index.
    """
    vals = np.asarray(vals, dtype=float)
    uniq, inv = np.unique(vals, return_inverse=True)
    deltas = uniq[:, None] - np.asarray(z, dtype=float)[None, :]
    table = axis_weight_integrals(deltas, config.h, kernel, config.smoothing,
                                  order=config.quad_order,
                                  imag_tol=config.imag_tolerance,
                                  measure=measure, normalized=normalized)
    return table[inv]


def _contract(tables: list[np.ndarray], lattice: np.ndarray) -> np.ndarray:
    """sum_k (prod_i T_i[p, k_i]) lattice[k], vectorized over points p."""
    out = np.tensordot(tables[0], lattice, axes=([1], [0]))
    for t in tables[1:]:
        out = np.einsum("ps,ps...->p...", t, out)
    return out


# ---------------------------------------------------------------------------
# fixed design


class FdPlan:
    """Reusable full-dimensional weight tables for a fixed design and points."""

    def __init__(self, design, config: EstimatorConfig, points: np.ndarray):
        _require_symmetric(config)
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != design.d:
            raise ConfigError(f"points must be {design.d}-dimensional")
        a_n = config.design_scale(design)
        z = design.lattice_axis()
        self.tables = [_axis_table(points[:, i], z, config, config.kernel)
                       for i in range(design.d)]
        self.pref = (design.n * a_n * 2.0 * math.pi * config.h) ** (-design.d)
        self.points = points

    def apply(self, ylat: np.ndarray) -> np.ndarray:
        return self.pref * _contract(self.tables, ylat)


class FdAdditivePlan:
    """Centered additive-assembly tables for a fixed design and points."""

    def __init__(self, design, config: EstimatorConfig, points: np.ndarray):
        _require_symmetric(config)
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != design.d:
            raise ConfigError(f"points must be {design.d}-dimensional")
        part = _partition_of(config, design.d)
        a_n = config.design_scale(design)
        z = design.lattice_axis()
        side = z.size
        self.part = part
        self.blocks = []
        for j, block in enumerate(part.blocks):
            marg = config.kernel.marginal(block)
            tables = [_axis_table(points[:, i], z, config, marg) for i in block]
            pref = (design.n * config.h * a_n * 2.0 * math.pi) ** (-len(block))
            wsum = pref * reduce(np.multiply, [t.sum(axis=1) for t in tables])
            self.blocks.append((block, tables, pref, wsum))
        self.side = side
        self.d = design.d
        self.points = points

    def apply(self, ylat: np.ndarray) -> np.ndarray:
        theta0 = float(ylat.mean())
        out = np.full(self.points.shape[0], theta0)
        for block, tables, pref, wsum in self.blocks:
            comp = tuple(i for i in range(self.d) if i not in block)
            zbar = ylat.mean(axis=comp) if comp else ylat
            out = out + pref * _contract(tables, zbar) - theta0 * wsum
        return out

    def block_raw(self, j: int, ylat: np.ndarray) -> np.ndarray:
        """Uncentered block statistic sum_k Zbar_k w_k at each point."""
        block, tables, pref, _ = self.blocks[j]
        comp = tuple(i for i in range(self.d) if i not in block)
        zbar = ylat.mean(axis=comp) if comp else ylat
        return pref * _contract(tables, zbar)


def estimate_fd(dataset: Dataset, config: EstimatorConfig, xstar) -> float:
    """Pointwise frequency-domain estimate on the full lattice."""
    _require_fixed(dataset)
    xstar = np.asarray(xstar, dtype=float).ravel()
    if config.fast_path:
        plan = FdPlan(dataset.design, config, xstar[None, :])
        return float(plan.apply(dataset.y_lattice())[0])
    _require_symmetric(config)
    design = dataset.design
    a_n = config.design_scale(design)
    z = design.lattice_points()
    total = 0.0
    for k in range(z.shape[0]):
        w = fd_full_weight(xstar, z[k], config.h, design.n, a_n,
                           config.kernel, config.smoothing,
                           order=config.quad_order,
                           imag_tol=config.imag_tolerance, fast_path=False)
        total += dataset.y[k] * w
    return float(total)


def estimate_fd_additive(dataset: Dataset, config: EstimatorConfig, xstar) -> float:
    """Additive estimate: grand mean plus centered block statistics."""
    _require_fixed(dataset)
    xstar = np.asarray(xstar, dtype=float).ravel()
    plan = FdAdditivePlan(dataset.design, config, xstar[None, :])
    if config.fast_path:
        return float(plan.apply(dataset.y_lattice())[0])
    design = dataset.design
    a_n = config.design_scale(design)
    part = plan.part
    ylat = dataset.y_lattice()
    theta0 = float(ylat.mean())
    z_axis = design.lattice_axis()
    total = theta0
    for j, block in enumerate(part.blocks):
        comp = tuple(i for i in range(design.d) if i not in block)
        zbar = ylat.mean(axis=comp) if comp else ylat
        marg = config.kernel.marginal(block)
        grids = np.meshgrid(*([z_axis] * len(block)), indexing="ij")
        zpts = np.stack([g.ravel() for g in grids], axis=-1)
        flat = zbar.ravel()
        for r in range(zpts.shape[0]):
            w = fd_weight(xstar[list(block)], zpts[r], config.h, design.n, a_n,
                          marg, config.smoothing, order=config.quad_order,
                          imag_tol=config.imag_tolerance, fast_path=False)
            total += (flat[r] - theta0) * w
    return float(total)


def fd_additive_block(dataset: Dataset, config: EstimatorConfig, j: int,
                      xstar_block) -> float:
    """Uncentered block statistic for block j at block coordinates x*_{I_j}.

    Its exact iid variance is sigma^2 (2n+1)^{-(d-d_j)} sum_k w_k^2, which the
    frequency-domain normalizer reproduces; the centered assembly in
    estimate_fd_additive shares its weights but not its variance.
    """
    _require_fixed(dataset)
    part = _partition_of(config, dataset.design.d)
    if not 0 <= j < part.m:
        raise ConfigError(f"block index {j} out of range for {part.m} blocks")
    xb = np.atleast_1d(np.asarray(xstar_block, dtype=float))
    full = np.zeros(dataset.design.d)
    full[list(part.blocks[j])] = xb
    cfg = config if config.partition is not None else _with_partition(config, part)
    plan = FdAdditivePlan(dataset.design, cfg, full[None, :])
    return float(plan.block_raw(j, dataset.y_lattice())[0])


def _with_partition(config: EstimatorConfig, part: Partition) -> EstimatorConfig:
    return EstimatorConfig(config.kernel, config.h, config.smoothing, part,
                           config.q_measure, config.quad_order,
                           config.fast_path, config.imag_tolerance, config.a_n)


def fd_weight_field(design, config: EstimatorConfig, xstar) -> np.ndarray:
    """Exact response weights of estimate_fd, shaped like the lattice."""
    plan = FdPlan(design, config, np.asarray(xstar, dtype=float)[None, :])
    vecs = [t[0] for t in plan.tables]
    return plan.pref * reduce(np.multiply.outer, vecs)


def fd_additive_weight_field(design, config: EstimatorConfig, xstar,
                             centered: bool = True) -> np.ndarray:
    """Exact response weights of the additive estimator, lattice-shaped.

    centered=True gives the weights of estimate_fd_additive (grand-mean term
    included); centered=False gives the weights of the plain sum of block
    statistics, the object the frequency-domain normalizer standardizes.
    """
    plan = FdAdditivePlan(design, config, np.asarray(xstar, dtype=float)[None, :])
    side = plan.side
    d = plan.d
    total = np.zeros((side,) * d)
    wsum_all = 0.0
    for block, tables, pref, wsum in plan.blocks:
        vecs = {i: tables[a][0] for a, i in enumerate(block)}
        axis_vecs = [vecs.get(i, np.ones(side)) for i in range(d)]
        wfield = pref * reduce(np.multiply.outer, axis_vecs)
        total = total + wfield / (side ** (d - len(block)))
        wsum_all += float(wsum[0])
    if centered:
        total = total + (1.0 - wsum_all) / side ** d
    return total


# ---------------------------------------------------------------------------
# random design


class RdPlan:
    """Per-dataset weight tables for the random-design estimators."""

    def __init__(self, dataset: Dataset, config: EstimatorConfig,
                 points: np.ndarray, additive: bool):
        _require_random(dataset)
        _require_symmetric(config)
        points = np.atleast_2d(np.asarray(points, dtype=float))
        design = dataset.design
        if points.shape[1] != design.d:
            raise ConfigError(f"points must be {design.d}-dimensional")
        a_n = config.design_scale(design)
        x = dataset.x
        mf = max_density(design.density, x, a_n)
        base = 1.0 / (design.n * mf * (2.0 * math.pi * config.h) ** design.d)
        self.points = points
        self.y = dataset.y
        if not additive:
            wmat = np.ones((points.shape[0], design.n))
            for i in range(design.d):
                wmat = wmat * _axis_table(points[:, i], x[:, i], config, config.kernel)
            self.wmat = wmat * base
            return
        part = _partition_of(config, design.d)
        measure = config.q_measure or WeightMeasure()
        cvec = {}
        for i in range(design.d):
            cvec[i] = axis_weight_integrals(
                x[:, i], config.h, config.kernel, config.smoothing,
                order=config.quad_order, imag_tol=config.imag_tolerance,
                measure=measure, normalized=True)
        wmat = np.zeros((points.shape[0], design.n))
        for j, block in enumerate(part.blocks):
            bw = np.ones((points.shape[0], design.n))
            for i in block:
                bw = bw * _axis_table(points[:, i], x[:, i], config, config.kernel)
            for i in range(design.d):
                if i not in block:
                    bw = bw * cvec[i][None, :]
            wmat = wmat + bw
        call = np.ones(design.n)
        for i in range(design.d):
            call = call * cvec[i]
        self.wmat = (wmat - (part.m - 1) * call[None, :]) * base


    def apply(self) -> np.ndarray:
        return self.wmat @ self.y


def estimate_rd(dataset: Dataset, config: EstimatorConfig, xstar) -> float:
    """Pointwise random-design estimate with density truncation."""
    _require_random(dataset)
    xstar = np.asarray(xstar, dtype=float).ravel()
    if config.fast_path:
        plan = RdPlan(dataset, config, xstar[None, :], additive=False)
        return float(plan.apply()[0])
    _require_symmetric(config)
    design = dataset.design
    a_n = config.design_scale(design)
    total = 0.0
    for k in range(design.n):
        w = rd_weight(xstar, dataset.x[k], config.h, design.n, a_n,
                      design.density, config.kernel, config.smoothing,
                      order=config.quad_order, imag_tol=config.imag_tolerance,
                      fast_path=False)
        total += dataset.y[k] * w
    return float(total)


def estimate_rd_additive(dataset: Dataset, config: EstimatorConfig, xstar) -> float:
    """Marginal-integration additive estimate: sum of components minus the
    shared constant functional, both under the probability-normalized weight
    measure."""
    _require_random(dataset)
    xstar = np.asarray(xstar, dtype=float).ravel()
    if config.fast_path:
        plan = RdPlan(dataset, config, xstar[None, :], additive=True)
        return float(plan.apply()[0])
    _require_symmetric(config)
    design = dataset.design
    part = _partition_of(config, design.d)
    measure = config.q_measure or WeightMeasure()
    a_n = config.design_scale(design)
    total = 0.0
    for j, block in enumerate(part.blocks):
        for k in range(design.n):
            w = rd_additive_weight(xstar[list(block)], dataset.x[k], part, j,
                                   config.h, design.n, a_n, design.density,
                                   config.kernel, config.smoothing,
                                   measure=measure, order=config.quad_order,
                                   imag_tol=config.imag_tolerance,
                                   fast_path=False, normalized=True)
            total += dataset.y[k] * w
    mf = max_density(design.density, dataset.x, a_n)
    base = 1.0 / (design.n * mf * (2.0 * math.pi * config.h) ** design.d)
    call = np.ones(design.n)
    for i in range(design.d):
        call = call * axis_weight_integrals(
            dataset.x[:, i], config.h, config.kernel, config.smoothing,
            order=config.quad_order, imag_tol=config.imag_tolerance,
            measure=measure, normalized=True)
    chat = float((base * call) @ dataset.y)
    return float(total - (part.m - 1) * chat)


# ---------------------------------------------------------------------------
# fields and variance prediction


@dataclass(frozen=True)
class EstimateField:
    """Estimates (and optional predicted variances) over a set of points."""

    points: np.ndarray
    estimates: np.ndarray
    variances: np.ndarray | None = None
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        est = np.asarray(self.estimates, dtype=float).ravel()
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "estimates", est)
        if pts.shape[0] != est.size:
            raise ConfigError("points and estimates must have equal length")
        if self.variances is not None:
            var = np.asarray(self.variances, dtype=float).ravel()
            if var.size != est.size:
                raise ConfigError("variance entries must match points")
            if np.any(var <= 0):
                raise ConfigError("predicted variances must be positive")
            object.__setattr__(self, "variances", var)


def infer_estimator(dataset: Dataset, config: EstimatorConfig) -> str:
    if dataset.design.kind == "fixed":
        return "fd-additive" if config.partition is not None else "fd"
    return "rd-additive" if config.partition is not None else "rd"


def _config_snapshot(dataset: Dataset, config: EstimatorConfig, kind: str) -> dict:
    design = dataset.design
    return {
        "estimator": kind,
        "h": config.h,
        "kernel": config.kernel.id,
        "smoothing": config.smoothing.id,
        "a_n": config.design_scale(design),
        "n": design.n,
        "design": design.kind,
        "partition": config.partition.id if config.partition else None,
        "quad_order": config.quad_order,
    }


def estimate_field(dataset: Dataset, config: EstimatorConfig, points,
                   estimator: str | None = None,
                   noise: NoiseSpec | None = None) -> EstimateField:
    """Apply one estimator at many points, sharing weight tables.

    estimator: one of "fd", "fd-additive", "rd", "rd-additive"; when omitted
    it is inferred from the design kind and whether a partition is configured.
    Passing a noise spec attaches exact predicted variances (fixed designs,
    and random designs conditionally on the drawn locations).
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    kind = estimator or infer_estimator(dataset, config)
    if kind not in ("fd", "fd-additive", "rd", "rd-additive"):
        raise ConfigError(f"unknown estimator kind {kind!r}")
    variances = None
    if kind in ("fd", "fd-additive"):
        _require_fixed(dataset)
        plan = (FdPlan(dataset.design, config, points) if kind == "fd"
                else FdAdditivePlan(dataset.design, config, points))
        est = plan.apply(dataset.y_lattice())
        if noise is not None:
            builder = fd_weight_field if kind == "fd" else fd_additive_weight_field
            variances = np.array([
                predict_variance(builder(dataset.design, config, p), noise)
                for p in points])
    else:
        plan = RdPlan(dataset, config, points, additive=(kind == "rd-additive"))
        est = plan.apply()
        if noise is not None:
            if noise.kind == "ma-lattice":
                raise ConfigError("lattice noise needs a fixed design")
            variances = np.array([predict_variance(w, noise)
                                  for w in plan.wmat])
    return EstimateField(points, est, variances,
                         _config_snapshot(dataset, config, kind))


def predict_variance(weights: np.ndarray, noise: NoiseSpec) -> float:
    """Exact Var(sum_k w_k eps_k) for the supported noise structures.

    iid: sigma^2 sum w^2. ma-seq: exact double sum along the raster order of
    the weight array. ma-lattice: exact double sum over lattice lags (weights
    must be lattice-shaped).
    """
    w = np.asarray(weights, dtype=float)
    if noise.kind == "iid":
        return float(noise.sigma2 * np.sum(w * w))
    if noise.kind == "ma-seq":
        c = noise.seq_coeffs()
        flat = w.ravel()
        total = np.dot(flat, flat) * np.dot(c, c)
        for lag in range(1, noise.q + 1):
            gamma = float(np.dot(c[:-lag], c[lag:]))
            total += 2.0 * gamma * float(np.dot(flat[:-lag], flat[lag:]))
        return float(noise.sigma2 * total)
    coeff = noise.lattice_coeffs()
    if w.ndim != coeff.ndim:
        raise ConfigError("lattice noise variance needs lattice-shaped weights")
    gamma = _nd_correlate(coeff, coeff, mode="full", method="direct")
    wlag = _nd_correlate(w, w, mode="full", method="direct")
    centers = [s - 1 for s in w.shape]
    q2 = 2 * noise.q
    sl = tuple(slice(c - q2, c + q2 + 1) for c in centers)
    return float(noise.sigma2 * np.sum(gamma * wlag[sl]))


def save_field(fld: EstimateField, path: str) -> None:
    """CSV export (x_1..x_d, estimate[, predicted_var]) plus JSON metadata."""
    import csv as _csv
    d = fld.points.shape[1]
    try:
        with open(path, "w", newline="") as fh:
            writer = _csv.writer(fh)
            header = [f"x_{i + 1}" for i in range(d)] + ["estimate"]
            if fld.variances is not None:
                header.append("predicted_var")
            writer.writerow(header)
            for r in range(fld.estimates.size):
                row = [repr(float(v)) for v in fld.points[r]]
                row.append(repr(float(fld.estimates[r])))
                if fld.variances is not None:
                    row.append(repr(float(fld.variances[r])))
                writer.writerow(row)
        base = path[:-4] if str(path).endswith(".csv") else str(path)
        with open(base + ".meta.json", "w") as fh:
            json.dump(fld.config, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OutputError(f"cannot write field to {path}: {exc}") from exc
