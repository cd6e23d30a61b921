"""Data synthesis: forward-convolved signals, designs, noise, dataset I/O.

The observable mean is g = psi * theta. For an additive signal and a product
kernel, g is additive over the same blocks with g_0 = theta_0 (psi is a
density), so only block-dimensional convolutions are ever computed. They are
evaluated by panel Gauss-Legendre quadrature with panel boundaries placed
exactly at the kernel's and the component's non-smooth points, over a window
wide enough that the truncated tail is negligible for every built-in family.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass

import numpy as np
from scipy.signal import convolve as _nd_convolve

from .errors import ConfigError, NumericalError, OutputError
from .fourier import gauss_legendre
from .model import (
    AdditiveSignal,
    ConvolutionKernel,
    Dataset,
    Design,
    DensitySpec,
    NoiseSpec,
    density_from_id,
)

__all__ = [
    "ForwardSignal",
    "NoiseField",
    "marginal_kernel",
    "forward_convolve",
    "sample_fixed_design",
    "sample_random_design",
    "gen_noise",
    "density_eval",
    "density_sample",
    "save_dataset",
    "load_dataset",
]


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def marginal_kernel(kernel: ConvolutionKernel, block: tuple[int, ...]) -> ConvolutionKernel:
    """Marginal of a product kernel over a block of axes (exact)."""
    return kernel.marginal(tuple(block))


def _component_kinks(component, d_j: int) -> tuple[tuple[float, ...], ...]:
    kinks = getattr(component, "kinks", None)
    if kinks is None:
        return ((),) * d_j
    return tuple(tuple(float(c) for c in ax) for ax in kinks)


def _axis_panels(u: np.ndarray, window: tuple[float, float],
                 kernel_kinks: tuple[float, ...],
                 comp_kinks: tuple[float, ...]) -> np.ndarray:
    """Sorted panel boundaries in s for each u; shape (len(u), nb).

    The integration variable is s = u - t, so a component kink at t = c sits
    at s = u - c. Boundaries outside the window are clipped onto its edge,
    producing zero-width panels that contribute nothing.
    """
    lo, hi = window
    cols = [np.full_like(u, lo), np.full_like(u, hi)]
    for k in kernel_kinks:
        cols.append(np.full_like(u, min(max(k, lo), hi)))
    for c in comp_kinks:
        cols.append(np.clip(u - c, lo, hi))
    return np.sort(np.stack(cols, axis=-1), axis=-1)


@dataclass(frozen=True)
class ForwardSignal:
    """g = psi * theta for an additive signal and a product kernel.

    g(x) = g_0 + sum_j g_j(x restricted to block j), where g_j is the
    convolution of component j with the kernel's marginal on that block.
    """

    signal: AdditiveSignal
    kernel: ConvolutionKernel
    order: int = 48

    def __post_init__(self):
        if self.kernel.d != self.signal.partition.d:
            raise ConfigError("signal/kernel dimension mismatch")

    @property
    def g0(self) -> float:
        return float(self.signal.theta0)

    def _block_mean_1d(self, j: int, u: np.ndarray) -> np.ndarray:
        comp = self.signal.components[j]
        window = self.kernel.axis_window()
        bounds = _axis_panels(u, window, self.kernel.axis_kinks(),
                              _component_kinks(comp, 1)[0])
        rule = gauss_legendre(self.order)
        gx, gw = rule.nodes, rule.weights
        total = np.zeros_like(u)
        for p in range(bounds.shape[-1] - 1):
            b0, b1 = bounds[..., p], bounds[..., p + 1]
            mid = 0.5 * (b0 + b1)
            half = 0.5 * (b1 - b0)
            s = mid[..., None] + half[..., None] * gx
            vals = self.kernel.density_axis(s) * np.asarray(comp(u[..., None] - s))
            total = total + (vals @ gw) * half
        return total

    def _block_mean_nd(self, j: int, u: np.ndarray) -> np.ndarray:
        comp = self.signal.components[j]
        d_j = u.shape[-1]
        window = self.kernel.axis_window()
        kinks = _component_kinks(comp, d_j)
        rule = gauss_legendre(max(24, self.order // 2))
        gx, gw = rule.nodes, rule.weights
        flat = u.reshape(-1, d_j)
        out = np.empty(flat.shape[0])
        for r, urow in enumerate(flat):
            nodes_ax, wts_ax = [], []
            for i in range(d_j):
                bounds = _axis_panels(np.asarray([urow[i]]), window,
                                      self.kernel.axis_kinks(), kinks[i])[0]
                ns, ws = [], []
                for p in range(bounds.size - 1):
                    mid = 0.5 * (bounds[p] + bounds[p + 1])
                    half = 0.5 * (bounds[p + 1] - bounds[p])
                    ns.append(mid + half * gx)
                    ws.append(half * gw * self.kernel.density_axis(mid + half * gx))
                nodes_ax.append(np.concatenate(ns))
                wts_ax.append(np.concatenate(ws))
            grids = np.meshgrid(*nodes_ax, indexing="ij")
            spts = np.stack([g.ravel() for g in grids], axis=-1)
            wgrid = np.meshgrid(*wts_ax, indexing="ij")
            wprod = np.ones(spts.shape[0])
            for g in wgrid:
                wprod = wprod * g.ravel()
            out[r] = np.asarray(comp(urow[None, :] - spts)) @ wprod
        return out.reshape(u.shape[:-1])

    def block_mean(self, j: int, u) -> np.ndarray:
        """g_j at block coordinates u of shape (..., d_j) (or (...) if d_j=1)."""
        d_j = len(self.signal.partition.blocks[j])
        u = np.asarray(u, dtype=float)
        if d_j == 1:
            if u.ndim and u.shape[-1] == 1:
                u = u[..., 0]
            return self._block_mean_1d(j, np.atleast_1d(u)).reshape(u.shape)
        return self._block_mean_nd(j, u)

    def eval(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        part = self.signal.partition
        if x.shape[-1] != part.d:
            raise ConfigError(f"point dimension must be {part.d}")
        out = np.full(x.shape[:-1], self.g0)
        for j, block in enumerate(part.blocks):
            out = out + self.block_mean(j, x[..., list(block)])
        return out

    def field_on_axes(self, axes) -> np.ndarray:
        """g on the tensor grid spanned by per-axis sample vectors.

        Exploits additivity: each block is evaluated on its own axes only and
        broadcast over the rest, so the cost is sum over blocks of the block
        grid sizes rather than the full mesh.
        """
        axes = [np.asarray(a, dtype=float) for a in axes]
        d = self.signal.partition.d
        if len(axes) != d:
            raise ConfigError(f"need {d} axis vectors")
        sizes = [a.size for a in axes]
        field = np.full(tuple(sizes), self.g0)
        for j, block in enumerate(self.signal.partition.blocks):
            if len(block) == 1:
                vals = self.block_mean(j, axes[block[0]])
            else:
                grids = np.meshgrid(*[axes[i] for i in block], indexing="ij")
                vals = self.block_mean(j, np.stack(grids, axis=-1))
            shape = [1] * d
            for i in block:
                shape[i] = sizes[i]
            field = field + vals.reshape(shape)
        return field

    def lattice_field(self, design: Design) -> np.ndarray:
        """g on the full lattice, shape (2n+1, ..., 2n+1); separable per block."""
        return self.field_on_axes([design.lattice_axis()] * design.d)


def forward_convolve(signal: AdditiveSignal, kernel: ConvolutionKernel, z) -> float | np.ndarray:
    """g(z) = (psi * theta)(z); accepts one point or an array of points."""
    fs = ForwardSignal(signal, kernel)
    z = np.asarray(z, dtype=float)
    vals = fs.eval(z)
    return float(vals) if vals.ndim == 0 else vals


# ---------------------------------------------------------------------------
# noise


@dataclass(frozen=True)
class NoiseField:
    values: np.ndarray
    spec: NoiseSpec
    seed: object = None


def gen_noise(spec: NoiseSpec, shape, seed) -> NoiseField:
    """Noise with the requested dependence structure on a lattice or sequence.

    ``ma-seq`` runs along the raster (C-order) flattening of ``shape``;
    ``ma-lattice`` convolves an innovation lattice extended by a halo of
    width q on every side, so no wraparound occurs.
    """
    rng = _rng(seed)
    shape = (int(shape),) if np.isscalar(shape) else tuple(int(s) for s in shape)
    sd = math.sqrt(spec.sigma2)
    if spec.kind == "iid":
        vals = sd * rng.standard_normal(shape)
    elif spec.kind == "ma-seq":
        count = int(np.prod(shape))
        coeff = spec.seq_coeffs()
        z = sd * rng.standard_normal(count + spec.q)
        vals = np.convolve(z, coeff, mode="valid").reshape(shape)
    else:
        coeff = spec.lattice_coeffs()
        if coeff.ndim != len(shape):
            raise ConfigError("lattice noise dimension mismatch")
        q = spec.q
        halo = tuple(s + 2 * q for s in shape)
        z = sd * rng.standard_normal(halo)
        vals = _nd_convolve(z, coeff, mode="valid", method="direct")
    return NoiseField(vals, spec, seed)


# ---------------------------------------------------------------------------
# sampling


def sample_fixed_design(design: Design, signal: AdditiveSignal,
                        kernel: ConvolutionKernel, noise: NoiseSpec,
                        seed) -> Dataset:
    """Y_k = g(z_k) + eps_k on the full lattice; deterministic given seed."""
    if design.kind != "fixed":
        raise ConfigError("sample_fixed_design needs a fixed design")
    fs = ForwardSignal(signal, kernel)
    g = fs.lattice_field(design)
    eps = gen_noise(noise, g.shape, seed).values
    meta = {"signal": signal.id, "kernel": kernel.id, "seed": _seed_repr(seed),
            "noise": _noise_meta(noise)}
    return Dataset(design, (g + eps).ravel(), None, meta)


def sample_random_design(design: Design, signal: AdditiveSignal,
                         kernel: ConvolutionKernel, noise: NoiseSpec,
                         seed) -> Dataset:
    """X_k iid from the design density, Y_k = g(X_k) + eps_k."""
    if design.kind != "random":
        raise ConfigError("sample_random_design needs a random design")
    if noise.kind == "ma-lattice":
        raise ConfigError("lattice noise is defined for fixed designs only")
    rng = _rng(seed)
    x = design.density.sample(rng, design.n, design.a_n)
    fs = ForwardSignal(signal, kernel)
    g = fs.eval(x)
    eps = gen_noise(noise, (design.n,), rng).values
    meta = {"signal": signal.id, "kernel": kernel.id, "seed": _seed_repr(seed),
            "noise": _noise_meta(noise)}
    return Dataset(design, g + eps, x, meta)


def density_eval(spec: DensitySpec, x, a_n: float):
    """Pointwise design density; the value at (1/a_n, ..., 1/a_n) is the
    truncation level used by the random-design weights."""
    return spec.pdf(np.asarray(x, dtype=float), a_n)


def density_sample(spec: DensitySpec, n: int, a_n: float, seed) -> np.ndarray:
    return spec.sample(_rng(seed), n, a_n)


# ---------------------------------------------------------------------------
# dataset csv + sidecar


def _seed_repr(seed):
    if isinstance(seed, np.random.Generator):
        return None
    if isinstance(seed, (int, np.integer)):
        return int(seed)
    return repr(seed)


def _noise_meta(noise: NoiseSpec) -> dict:
    meta = {"kind": noise.kind, "sigma2": noise.sigma2}
    if noise.kind == "ma-seq":
        meta["beta"] = list(noise.beta)
    elif noise.kind == "ma-lattice":
        meta["beta"] = noise.lattice_coeffs().tolist()
    return meta


def _noise_from_meta(meta: dict, d: int) -> NoiseSpec:
    kind = meta.get("kind", "iid")
    beta = meta.get("beta", ())
    return NoiseSpec(kind, float(meta.get("sigma2", 1.0)), tuple(beta) if kind == "ma-seq" else beta, d)


def sidecar_path(path: str) -> str:
    base, _ = os.path.splitext(str(path))
    return base + ".meta.json"


def save_dataset(dataset: Dataset, path: str) -> None:
    """Write responses as CSV plus a JSON sidecar with the provenance.

    Fixed designs store integer lattice indices k_1..k_d (locations are
    reconstructed from n and a_n); random designs store coordinates. Floats
    are written with shortest round-trip precision, so reloading is exact.
    """
    design = dataset.design
    d = design.d
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            if design.kind == "fixed":
                writer.writerow([f"k_{i + 1}" for i in range(d)] + ["y"])
                idx = np.arange(-design.n, design.n + 1)
                grids = np.meshgrid(*([idx] * d), indexing="ij")
                cols = [g.ravel() for g in grids]
                for r in range(dataset.y.size):
                    writer.writerow([int(c[r]) for c in cols] + [repr(float(dataset.y[r]))])
            else:
                writer.writerow([f"x_{i + 1}" for i in range(d)] + ["y"])
                for r in range(dataset.y.size):
                    writer.writerow([repr(float(v)) for v in dataset.x[r]]
                                    + [repr(float(dataset.y[r]))])
        meta = {
            "format": "deconvo-dataset-v1",
            "design": {
                "kind": design.kind,
                "n": design.n,
                "a_n": design.a_n,
                "d": d,
                "density": design.density.id if design.density else None,
            },
            "provenance": dataset.meta,
        }
        with open(sidecar_path(path), "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OutputError(f"cannot write dataset to {path}: {exc}") from exc


def load_dataset(path: str) -> Dataset:
    try:
        with open(sidecar_path(path)) as fh:
            meta = json.load(fh)
    except OSError as exc:
        raise OutputError(f"missing dataset sidecar for {path}: {exc}") from exc
    dm = meta["design"]
    density = density_from_id(dm["density"], dm["d"]) if dm.get("density") else None
    design = Design(dm["kind"], int(dm["n"]), float(dm["a_n"]), int(dm["d"]), density)
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = list(reader)
    except OSError as exc:
        raise OutputError(f"cannot read dataset {path}: {exc}") from exc
    d = design.d
    y = np.array([float(r[d]) for r in rows])
    if design.kind == "fixed":
        if len(header) != d + 1 or y.size != design.size:
            raise ConfigError(f"dataset {path} does not match its sidecar design")
        return Dataset(design, y, None, meta.get("provenance", {}))
    x = np.array([[float(v) for v in r[:d]] for r in rows])
    return Dataset(design, y, x, meta.get("provenance", {}))
