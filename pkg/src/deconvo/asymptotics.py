"""Normalizing sequences, empirical cumulants, and rate diagnostics.

The fixed-design normalizers (U-forms) are exact finite-sample variances of
the raw block statistics and are computed from separable per-axis weight
sums, independently of the materialized weight fields in the estimators
module (the two paths agree to machine precision and are cross-checked).

The random-design normalizers (V-forms) are spatial integrals of a squared
inverse-transform factor against (sigma^2 + g^2) f / max{f, floor}^2. The
outer integral runs over a box extending a configurable multiple of h beyond
the design cube, with a tail check: the contribution of the outermost margin
must stay below 1% of the total or an accuracy error is raised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np
from scipy.signal import correlate as _nd_correlate
from scipy.stats import kstat

from .errors import AccuracyError, ConfigError
from .fourier import axis_weight_integrals, gauss_legendre
from .model import (
    AdditiveSignal,
    Design,
    EstimatorConfig,
    NoiseSpec,
    Partition,
    WeightMeasure,
)
from .synth import ForwardSignal

__all__ = [
    "NormalizerRequest",
    "normalizer_iid",
    "normalizer_ma",
    "empirical_cumulants",
    "rate_diagnostics",
]

_FD_KINDS = ("U_nj", "U_n", "V_MA")
_RD_KINDS = ("V1", "V2", "V3", "V1_MA", "V3_MA")


@dataclass(frozen=True)
class NormalizerRequest:
    """Bindings for one normalizer evaluation.

    kind: one of V1, V2, V3, U_nj, U_n (iid) or V1_MA, V3_MA, V_MA (moving
    average). V2 and U_nj additionally need the block index. signal=None
    means g identically zero in the V-form integrand.
    """

    kind: str
    design: Design
    config: EstimatorConfig
    noise: NoiseSpec
    xstar: tuple = ()
    signal: AdditiveSignal | None = None
    block: int | None = None
    box_pad: float = 10.0
    tail_pad: float = 16.0
    panel_order: int = 12

    def __post_init__(self):
        if self.kind not in _FD_KINDS + _RD_KINDS:
            raise ConfigError(f"unknown normalizer kind {self.kind!r}")
        if self.kind in ("V2", "U_nj") and self.block is None:
            raise ConfigError(f"{self.kind} needs a block index")
        if self.kind in _RD_KINDS and self.design.density is None:
            raise ConfigError(f"{self.kind} needs a design density")
        if self.kind in _FD_KINDS and self.design.kind != "fixed":
            raise ConfigError(f"{self.kind} needs a fixed lattice design")


def _partition_of(config: EstimatorConfig, d: int) -> Partition:
    if config.partition is not None:
        return config.partition
    return Partition(d, tuple((i,) for i in range(d)))


# ---------------------------------------------------------------------------
# fixed-design U forms (separable, exact)


def _block_axis_sums(req: NormalizerRequest):
    """Per-block (sum of squared weights over the block lattice, weight sum)."""
    design, config = req.design, req.config
    part = _partition_of(config, design.d)
    a_n = config.design_scale(design)
    z = design.lattice_axis()
    out = []
    for block in part.blocks:
        marg = config.kernel.marginal(block)
        pref = (design.n * config.h * a_n * 2.0 * math.pi) ** (-len(block))
        sq, sm = 1.0, 1.0
        for i in block:
            jvec = axis_weight_integrals(req.xstar[i] - z, config.h, marg,
                                         config.smoothing,
                                         order=config.quad_order,
                                         imag_tol=config.imag_tolerance)
            sq *= float(np.sum(jvec * jvec))
            sm *= float(np.sum(jvec))
        out.append((pref * pref * sq, pref * sm, len(block)))
    return out, part, z.size


def _u_component(req: NormalizerRequest, sigma2: float) -> float:
    sums, part, side = _block_axis_sums(req)
    j = req.block
    if not 0 <= j < part.m:
        raise ConfigError(f"block index {j} out of range")
    sq, _, d_j = sums[j]
    return sigma2 * side ** (-(part.d - d_j)) * sq


def _u_total(req: NormalizerRequest, sigma2: float) -> float:
    sums, part, side = _block_axis_sums(req)
    d = part.d
    diag = sum(side ** (-(d - d_j)) * sq for sq, _, d_j in sums)
    cross = 0.0
    for a in range(part.m):
        for b in range(part.m):
            if a != b:
                cross += sums[a][1] * sums[b][1]
    return sigma2 * (diag + side ** (-d) * cross)


# ---------------------------------------------------------------------------
# random-design V forms (spatial integral)


def _panel_axis(lo: float, hi: float, width: float, order: int,
                interior: tuple[float, ...] = ()):
    """Composite Gauss-Legendre nodes/weights on [lo, hi] with mandatory
    edges at the interior points and panels no wider than width."""
    edges = sorted({lo, hi, *[p for p in interior if lo < p < hi]})
    rule = gauss_legendre(order)
    nodes, weights = [], []
    for e0, e1 in zip(edges[:-1], edges[1:]):
        k = max(1, int(math.ceil((e1 - e0) / width)))
        sub = np.linspace(e0, e1, k + 1)
        for s0, s1 in zip(sub[:-1], sub[1:]):
            mid, half = 0.5 * (s0 + s1), 0.5 * (s1 - s0)
            nodes.append(mid + half * rule.nodes)
            weights.append(half * rule.weights)
    return np.concatenate(nodes), np.concatenate(weights)


def _v_axis_factors(req: NormalizerRequest, ynodes: np.ndarray, axis: int,
                    with_j: bool, with_c: bool):
    """Per-axis inverse-transform factors S(x*-y)/h and T(y)/h on the nodes."""
    config = req.config
    h = config.h
    out = {}
    if with_j:
        jv = axis_weight_integrals(req.xstar[axis] - ynodes, h, config.kernel,
                                   config.smoothing, order=config.quad_order,
                                   imag_tol=config.imag_tolerance)
        out["J"] = jv / h
    if with_c:
        measure = config.q_measure or WeightMeasure()
        cv = axis_weight_integrals(ynodes, h, config.kernel, config.smoothing,
                                   order=config.quad_order,
                                   imag_tol=config.imag_tolerance,
                                   measure=measure, normalized=True)
        out["C"] = cv / h
    return out


def _v_integral(req: NormalizerRequest, pad: float, sigma2: float) -> float:
    design, config = req.design, req.config
    d = design.d
    density = design.density
    a_n = config.design_scale(design)
    h = config.h
    half = 1.0 / a_n + pad * h
    kinks = []
    for ax in range(d):
        pts = [-1.0 / a_n, 1.0 / a_n]
        if req.signal is not None:
            for j, block in enumerate(req.signal.partition.blocks):
                if ax in block:
                    comp_kinks = getattr(req.signal.components[j], "kinks", None)
                    if comp_kinks:
                        pts.extend(comp_kinks[block.index(ax)])
        kinks.append(tuple(pts))
    axes_nodes, axes_weights = [], []
    for ax in range(d):
        nd, wt = _panel_axis(-half, half, h, req.panel_order, kinks[ax])
        axes_nodes.append(nd)
        axes_weights.append(wt)

    part = _partition_of(config, d)
    kind = req.kind
    need_c = kind in ("V2", "V3")
    factors = [_v_axis_factors(req, axes_nodes[ax], ax,
                               with_j=True, with_c=need_c)
               for ax in range(d)]

    if kind == "V1":
        combined = reduce(np.multiply.outer, [f["J"] for f in factors])
    elif kind == "V2":
        block = part.blocks[req.block]
        vecs = [factors[ax]["J"] if ax in block else factors[ax]["C"]
                for ax in range(d)]
        combined = reduce(np.multiply.outer, vecs)
    else:
        combined = np.zeros(tuple(n.size for n in axes_nodes))
        for block in part.blocks:
            vecs = [factors[ax]["J"] if ax in block else factors[ax]["C"]
                    for ax in range(d)]
            combined = combined + reduce(np.multiply.outer, vecs)
        allc = reduce(np.multiply.outer, [f["C"] for f in factors])
        combined = combined - (part.m - 1) * allc

    gfield = (ForwardSignal(req.signal, config.kernel).field_on_axes(axes_nodes)
              if req.signal is not None else 0.0)
    ffield = reduce(np.multiply.outer,
                    [density.pdf_axis(axes_nodes[ax], a_n) for ax in range(d)])
    floor = density.floor(a_n)
    denom = np.maximum(ffield, floor)
    integrand = combined * combined * (sigma2 + np.square(gfield)) * ffield / (denom * denom)
    wprod = reduce(np.multiply.outer, axes_weights)
    total = float(np.sum(integrand * wprod))
    return total / (design.n * (2.0 * math.pi) ** (2 * d))


def _v_form(req: NormalizerRequest, sigma2: float) -> float:
    outer = _v_integral(req, req.tail_pad, sigma2)
    inner = _v_integral(req, req.box_pad, sigma2)
    tail = abs(outer - inner)
    if tail > 0.01 * abs(outer):
        raise AccuracyError(
            f"spatial truncation tail {tail:.3e} exceeds 1% of {outer:.3e}; "
            "enlarge box_pad")
    return outer


def normalizer_iid(req: NormalizerRequest) -> float:
    """Variance proxy for independent noise; kind selects the display."""
    sigma2 = req.noise.sigma2
    if req.kind == "U_nj":
        return _u_component(req, sigma2)
    if req.kind == "U_n":
        return _u_total(req, sigma2)
    if req.kind in ("V1", "V2", "V3"):
        return _v_form(req, sigma2)
    raise ConfigError(f"normalizer_iid cannot evaluate kind {req.kind!r}; "
                      "use normalizer_ma")


def normalizer_ma(req: NormalizerRequest) -> float:
    """Moving-average counterpart; reduces bitwise to iid at q=0.

    V1_MA/V3_MA replace sigma^2 by sigma^2 * sum_{k,l} beta_k beta_l; V_MA
    multiplies the exact fixed-design weight sum by the lattice coefficient
    double sum over all lags up to 2q.
    """
    noise = req.noise
    if req.kind in ("V1_MA", "V3_MA"):
        if noise.kind == "ma-seq":
            coeff = noise.seq_coeffs()
        elif noise.kind == "iid":
            coeff = np.array([1.0])
        else:
            raise ConfigError("V1_MA/V3_MA use sequence-form coefficients")
        mult = float(np.sum(coeff)) ** 2
        base = NormalizerRequest("V1" if req.kind == "V1_MA" else "V3",
                                 req.design, req.config, req.noise, req.xstar,
                                 req.signal, req.block, req.box_pad,
                                 req.tail_pad, req.panel_order)
        return _v_form(base, noise.sigma2 * mult)
    if req.kind != "V_MA":
        raise ConfigError(f"normalizer_ma cannot evaluate kind {req.kind!r}")
    if noise.kind == "ma-lattice":
        coeff = noise.lattice_coeffs()
    elif noise.kind == "iid":
        coeff = np.ones((1,) * req.design.d)
    else:
        raise ConfigError("V_MA uses lattice-form coefficients")
    lagsum = float(np.sum(_nd_correlate(coeff, coeff, mode="full",
                                        method="direct")))
    return _u_total(req, noise.sigma2) * lagsum


# ---------------------------------------------------------------------------
# cumulants and rates


def empirical_cumulants(samples, max_order: int = 4) -> tuple[float, ...]:
    """Unbiased sample cumulants (k-statistics) kappa_1..kappa_max_order."""
    data = np.asarray(samples, dtype=float).ravel()
    if data.size < 30:
        raise ConfigError(f"need at least 30 samples, got {data.size}")
    if not 1 <= max_order <= 4:
        raise ConfigError("max_order must be between 1 and 4")
    return tuple(float(kstat(data, r)) for r in range(1, max_order + 1))


def rate_diagnostics(kind: str, ladder, values, predicted_exponent: float,
                     param: str = "") -> dict:
    """Log-log slope of normalizer^{-1/2} against the varied parameter.

    ladder: the parameter values (length >= 4, strictly monotone);
    values: the normalizer evaluated at each rung. Verdict is
    "within bracket" when |slope - predicted_exponent| <= 0.15.
    """
    x = np.asarray(ladder, dtype=float).ravel()
    v = np.asarray(values, dtype=float).ravel()
    if x.size != v.size:
        raise ConfigError("ladder and values must have equal length")
    if x.size < 4:
        raise ConfigError("ladder needs at least 4 rungs")
    if np.unique(x).size != x.size or np.any(x <= 0):
        raise ConfigError("ladder must vary strictly over positive values")
    if np.any(v <= 0):
        raise ConfigError("normalizer values must be positive")
    slope, intercept = np.polyfit(np.log(x), np.log(v) * (-0.5), 1)
    within = abs(slope - predicted_exponent) <= 0.15
    return {
        "kind": kind,
        "param": param,
        "predicted_exponent": float(predicted_exponent),
        "fitted_slope": float(slope),
        "intercept": float(intercept),
        "verdict": "within bracket" if within else "outside bracket",
        "ladder": [float(t) for t in x],
        "normalizers": [float(t) for t in v],
    }
