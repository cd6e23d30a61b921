"""Domain objects for additive inverse regression.

The observation model is ``y = (psi * theta)(location) + noise``: an additive
signal ``theta`` blurred by a known convolution kernel ``psi`` and sampled
either on a rectangular lattice (fixed design) or at random locations drawn
from a design density (random design). This module holds the declarative
pieces of a scenario: coordinate partitions, kernels, signals, design
densities, noise models, designs, datasets, estimator configuration, and the
scenario validation report. All types are immutable after construction and
safe to share across workers. Numerics live in the sibling modules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError


def _fmt_num(v: float) -> str:
    """Shortest exact rendering; integral values drop the trailing .0."""
    v = float(v)
    return str(int(v)) if v == int(v) else repr(v)


__all__ = [
    "Partition",
    "ConvolutionKernel",
    "SmoothingKernel",
    "GaussBump",
    "AbsExpBump",
    "AdditiveSignal",
    "WeightMeasure",
    "DensitySpec",
    "NoiseSpec",
    "Design",
    "Dataset",
    "EstimatorConfig",
    "RateParameters",
    "Check",
    "ValidationReport",
    "signal_preset",
    "kernel_from_id",
    "density_from_id",
    "smoothing_from_id",
    "theta_eval",
    "validate_scenario",
]


# ---------------------------------------------------------------------------
# partitions


@dataclass(frozen=True)
class Partition:
    """Disjoint blocks of coordinate indices covering ``{0, ..., d-1}``."""

    d: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.d < 1:
            raise ConfigError("partition dimension must be >= 1")
        blocks = tuple(tuple(sorted(int(i) for i in b)) for b in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        seen: set[int] = set()
        for b in blocks:
            if not b:
                raise ConfigError("empty partition block")
            for i in b:
                if not 0 <= i < self.d:
                    raise ConfigError(f"block index {i} outside 0..{self.d - 1}")
                if i in seen:
                    raise ConfigError(f"coordinate {i} appears in two blocks")
                seen.add(i)
        if len(seen) != self.d:
            missing = sorted(set(range(self.d)) - seen)
            raise ConfigError(f"blocks do not cover coordinates {missing}")

    @property
    def m(self) -> int:
        return len(self.blocks)

    @property
    def block_dims(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.blocks)

    def complement(self, j: int) -> tuple[int, ...]:
        inside = set(self.blocks[j])
        return tuple(i for i in range(self.d) if i not in inside)

    @classmethod
    def full(cls, d: int) -> "Partition":
        return cls(d, (tuple(range(d)),))

    @classmethod
    def from_id(cls, text: str, d: int) -> "Partition":
        """Parse ``"1|2"`` or ``"1,2|3"`` (1-based axes, ``|`` between blocks)."""
        try:
            blocks = tuple(
                tuple(int(tok) - 1 for tok in part.split(","))
                for part in text.split("|")
            )
        except ValueError as exc:
            raise ConfigError(f"cannot parse partition {text!r}") from exc
        return cls(d, blocks)

    @property
    def id(self) -> str:
        return "|".join(",".join(str(i + 1) for i in b) for b in self.blocks)


# ---------------------------------------------------------------------------
# kernels


_KERNEL_FAMILIES = ("laplace", "gauss", "gamma")


@dataclass(frozen=True)
class ConvolutionKernel:
    """Product convolution kernel (point spread function), one family per axis.

    Families: ``laplace`` (rate lam per axis, density lam/2 e^{-lam|x|}),
    ``gauss`` (scale sigma), ``gamma`` (shape alpha, rate beta; supported on
    x >= 0). All are probability densities, so the transform is 1 at w = 0.
    Laplace and Gaussian transforms are real, even and strictly positive;
    the Gamma transform is complex, which makes that family usable for data
    generation only.
    """

    family: str
    params: tuple[float, ...]
    d: int

    def __post_init__(self):
        if self.family not in _KERNEL_FAMILIES:
            raise ConfigError(f"unknown kernel family {self.family!r}")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        np_ = {"laplace": 1, "gauss": 1, "gamma": 2}[self.family]
        if len(self.params) != np_:
            raise ConfigError(f"{self.family} kernel takes {np_} parameter(s)")
        if any(p <= 0 for p in self.params):
            raise ConfigError("kernel parameters must be positive")
        if self.d < 1:
            raise ConfigError("kernel dimension must be >= 1")

    @property
    def symmetric_real(self) -> bool:
        """True when the Fourier transform is real and even (estimation-eligible)."""
        return self.family in ("laplace", "gauss")

    def transform_axis(self, w):
        w = np.asarray(w, dtype=float)
        if self.family == "laplace":
            lam = self.params[0]
            return 1.0 / (1.0 + (w / lam) ** 2)
        if self.family == "gauss":
            sig = self.params[0]
            return np.exp(-0.5 * (sig * w) ** 2)
        alpha, beta = self.params
        return (1.0 - 1j * w / beta) ** (-alpha)

    def transform(self, w):
        w = np.asarray(w, dtype=float)
        if w.shape[-1] != self.d:
            raise ConfigError(f"transform argument must have last axis {self.d}")
        vals = self.transform_axis(w[..., 0])
        for i in range(1, self.d):
            vals = vals * self.transform_axis(w[..., i])
        return vals

    def reciprocal_axis(self, w):
        """1 / transform_axis(w), analytic for the symmetric families."""
        w = np.asarray(w, dtype=float)
        if self.family == "laplace":
            lam = self.params[0]
            return 1.0 + (w / lam) ** 2
        if self.family == "gauss":
            sig = self.params[0]
            return np.exp(0.5 * (sig * w) ** 2)
        raise ConfigError("gamma kernels have a non-symmetric transform; "
                          "estimation weights are undefined")

    def density_axis(self, x):
        x = np.asarray(x, dtype=float)
        if self.family == "laplace":
            lam = self.params[0]
            return 0.5 * lam * np.exp(-lam * np.abs(x))
        if self.family == "gauss":
            sig = self.params[0]
            return np.exp(-0.5 * (x / sig) ** 2) / (sig * math.sqrt(2 * math.pi))
        alpha, beta = self.params
        out = np.zeros_like(x)
        pos = x > 0
        xp = x[pos]
        out[pos] = np.exp(
            alpha * math.log(beta) + (alpha - 1) * np.log(xp) - beta * xp
            - math.lgamma(alpha)
        )
        return out

    def axis_window(self) -> tuple[float, float]:
        """Half-open support window (lo, hi) around 0 capturing all but ~1e-12 mass."""
        if self.family == "laplace":
            r = 30.0 / self.params[0]
            return (-r, r)
        if self.family == "gauss":
            r = 8.0 * self.params[0]
            return (-r, r)
        alpha, beta = self.params
        return (0.0, (alpha + 40.0 + 10.0 * math.sqrt(alpha)) / beta)

    def axis_kinks(self) -> tuple[float, ...]:
        """Points where the axis density is not smooth."""
        if self.family == "gauss":
            return ()
        return (0.0,)

    def marginal(self, axes: tuple[int, ...]) -> "ConvolutionKernel":
        """Marginal over a subset of axes; exact for product densities."""
        if not axes or any(not 0 <= i < self.d for i in axes):
            raise ConfigError("marginal axes outside kernel dimension")
        return ConvolutionKernel(self.family, self.params, len(axes))

    @property
    def id(self) -> str:
        return f"{self.family}:" + ",".join(_fmt_num(p) for p in self.params)


def kernel_from_id(text: str, d: int) -> ConvolutionKernel:
    """Parse ``"laplace:3"``, ``"gauss:1"``, or ``"gamma:3,2"``."""
    name, _, rest = text.partition(":")
    name = name.strip()
    if not rest:
        raise ConfigError(f"kernel id {text!r} missing parameters")
    try:
        params = tuple(float(tok) for tok in rest.split(","))
    except ValueError as exc:
        raise ConfigError(f"cannot parse kernel id {text!r}") from exc
    return ConvolutionKernel(name, params, d)


@dataclass(frozen=True)
class SmoothingKernel:
    """Band-limiting smoothing kernel; only the sinc product is built in.

    Its transform is the indicator of [-1, 1] per axis (plateau b = 1), so
    every frequency integral in the package is supported on that cube.
    """

    family: str = "sinc"

    def __post_init__(self):
        if self.family != "sinc":
            raise ConfigError(f"unknown smoothing kernel {self.family!r}")

    def taper(self, w):
        """Transform values on the support cube; identically 1 for sinc."""
        return np.ones_like(np.asarray(w, dtype=float))

    def transform_axis(self, w):
        w = np.asarray(w, dtype=float)
        return (np.abs(w) <= 1.0).astype(float)

    def kernel_axis(self, x):
        x = np.asarray(x, dtype=float)
        return np.sinc(x / math.pi) / math.pi

    @property
    def id(self) -> str:
        return self.family


def smoothing_from_id(text: str) -> SmoothingKernel:
    return SmoothingKernel(text.strip())


# ---------------------------------------------------------------------------
# signals


@dataclass(frozen=True)
class GaussBump:
    """scale * exp(-rate * (u - center)^2) on a 1-D block."""

    center: float
    rate: float = 1.0
    scale: float = 1.0

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        return self.scale * np.exp(-self.rate * (u - self.center) ** 2)

    # per-axis non-smooth points (none)
    kinks: tuple[tuple[float, ...], ...] = ((),)


@dataclass(frozen=True)
class AbsExpBump:
    """scale * exp(-rate * |u - center|) on a 1-D block."""

    center: float
    rate: float = 1.0
    scale: float = 1.0

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        return self.scale * np.exp(-self.rate * np.abs(u - self.center))

    @property
    def kinks(self) -> tuple[tuple[float, ...], ...]:
        return ((self.center,),)


@dataclass(frozen=True)
class AdditiveSignal:
    """theta(x) = theta0 + sum_j component_j(x restricted to block j).

    Components are callables mapping arrays of block coordinates with shape
    ``(..., d_j)`` (or ``(...)`` when d_j = 1) to values of shape ``(...)``.
    """

    partition: Partition
    components: tuple
    theta0: float = 0.0
    name: str = ""

    def __post_init__(self):
        if len(self.components) != self.partition.m:
            raise ConfigError("one component per partition block required")

    def component_eval(self, j: int, u):
        u = np.asarray(u, dtype=float)
        d_j = len(self.partition.blocks[j])
        if u.ndim and u.shape[-1] == d_j and d_j == 1:
            u = u[..., 0]
        return np.asarray(self.components[j](u), dtype=float)

    def eval(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.partition.d:
            raise ConfigError(f"point dimension must be {self.partition.d}")
        out = np.full(x.shape[:-1], float(self.theta0))
        for j, block in enumerate(self.partition.blocks):
            out = out + self.component_eval(j, x[..., list(block)])
        return out

    @property
    def id(self) -> str:
        return self.name or "custom"


def theta_eval(signal: AdditiveSignal, x):
    """Evaluate the signal at one point (returns float) or an array of points."""
    x = np.asarray(x, dtype=float)
    vals = signal.eval(x)
    return float(vals) if vals.ndim == 0 else vals


def signal_preset(name: str) -> AdditiveSignal:
    """Built-in two-dimensional additive test signals ``theta1`` and ``theta2``."""
    part = Partition(2, ((0,), (1,)))
    if name == "theta1":
        comps = (GaussBump(0.1, 1.0, 1.0), GaussBump(0.4, 1.0, 1.0))
    elif name == "theta2":
        comps = (GaussBump(0.0, 2.0, 2.0), AbsExpBump(0.4, 1.0, 1.0))
    else:
        raise ConfigError(f"unknown signal preset {name!r}")
    return AdditiveSignal(part, comps, 0.0, name)


# ---------------------------------------------------------------------------
# weight measure for marginal integration


@dataclass(frozen=True)
class WeightMeasure:
    """Per-axis weight measure on [-1, 1] used by the marginal-integration
    estimator; blocks of dimension d_j use the product of d_j copies.

    ``uniform`` is density 1 on [-1, 1] (total mass 2 per axis). ``table``
    takes density values on a node grid and integrates by the trapezoid rule.
    """

    kind: str = "uniform"
    nodes: tuple[float, ...] = ()
    values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("uniform", "table"):
            raise ConfigError(f"unknown weight measure {self.kind!r}")
        if self.kind == "table":
            if len(self.nodes) != len(self.values) or len(self.nodes) < 2:
                raise ConfigError("table measure needs matching nodes/values")
            arr = np.asarray(self.nodes, dtype=float)
            if np.any(np.diff(arr) <= 0) or arr[0] < -1 or arr[-1] > 1:
                raise ConfigError("table nodes must increase within [-1, 1]")
            if any(v < 0 for v in self.values):
                raise ConfigError("table density values must be >= 0")

    def _table_weights(self) -> tuple[np.ndarray, np.ndarray]:
        t = np.asarray(self.nodes)
        q = np.asarray(self.values)
        wts = np.zeros_like(t)
        dt = np.diff(t)
        wts[:-1] += 0.5 * dt
        wts[1:] += 0.5 * dt
        return t, wts * q

    def axis_mass(self) -> float:
        if self.kind == "uniform":
            return 2.0
        _, qw = self._table_weights()
        return float(qw.sum())

    def axis_cos_transform(self, y, normalized: bool = False):
        """int cos(y t) dQ(t) over one axis, vectorized in y."""
        y = np.asarray(y, dtype=float)
        if self.kind == "uniform":
            out = 2.0 * np.sinc(y / math.pi)
        else:
            t, qw = self._table_weights()
            out = np.cos(np.multiply.outer(y, t)) @ qw
        if normalized:
            out = out / self.axis_mass()
        return out


# ---------------------------------------------------------------------------
# design densities


@dataclass(frozen=True)
class DensitySpec:
    """Product design density for random locations.

    Families: ``uniform`` on the cube [-1/a_n, 1/a_n]^d, ``gauss`` (standard
    normal per axis), ``t`` (Student t, df per params), ``heavytail`` with
    tail exponent b > 1: density a on [-1, 1] and a/|x|^b outside, where
    a = (b-1)/(2b).
    """

    family: str
    params: tuple[float, ...] = ()
    d: int = 2

    def __post_init__(self):
        if self.family not in ("uniform", "gauss", "t", "heavytail"):
            raise ConfigError(f"unknown density family {self.family!r}")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if self.family == "t" and (len(self.params) != 1 or self.params[0] <= 0):
            raise ConfigError("t density needs positive degrees of freedom")
        if self.family == "heavytail":
            if len(self.params) != 1 or self.params[0] <= 1:
                raise ConfigError("heavytail density needs b > 1")

    def pdf_axis(self, x, a_n: float):
        x = np.asarray(x, dtype=float)
        if self.family == "uniform":
            half = 1.0 / a_n
            return np.where(np.abs(x) <= half, a_n / 2.0, 0.0)
        if self.family == "gauss":
            return np.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)
        if self.family == "t":
            nu = self.params[0]
            c = math.exp(math.lgamma((nu + 1) / 2) - math.lgamma(nu / 2)) / math.sqrt(nu * math.pi)
            return c * (1.0 + x * x / nu) ** (-(nu + 1) / 2)
        b = self.params[0]
        a = (b - 1.0) / (2.0 * b)
        ax = np.abs(x)
        return np.where(ax <= 1.0, a, a * np.maximum(ax, 1.0) ** (-b))

    def pdf(self, x, a_n: float):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.d:
            raise ConfigError(f"density argument must have last axis {self.d}")
        vals = self.pdf_axis(x[..., 0], a_n)
        for i in range(1, self.d):
            vals = vals * self.pdf_axis(x[..., i], a_n)
        return vals

    def floor(self, a_n: float) -> float:
        """Density at the cube corner (1/a_n, ..., 1/a_n), the truncation level."""
        return float(self.pdf_axis(np.asarray(1.0 / a_n), a_n)) ** self.d

    def sample_axis(self, rng: np.random.Generator, size, a_n: float):
        if self.family == "uniform":
            half = 1.0 / a_n
            return rng.uniform(-half, half, size)
        if self.family == "gauss":
            return rng.standard_normal(size)
        if self.family == "t":
            return rng.standard_t(self.params[0], size)
        b = self.params[0]
        u = rng.uniform(0.0, 1.0, size)
        a = (b - 1.0) / (2.0 * b)
        tail = 1.0 / (2.0 * b)
        lower = u < tail
        upper = u > 1.0 - tail
        x = (u - tail) / a - 1.0
        with np.errstate(divide="ignore", over="ignore"):
            x = np.where(lower, -((2.0 * b * u) ** (-1.0 / (b - 1.0))), x)
            x = np.where(upper, (2.0 * b * (1.0 - u)) ** (-1.0 / (b - 1.0)), x)
        return x

    def sample(self, rng: np.random.Generator, n: int, a_n: float):
        cols = [self.sample_axis(rng, n, a_n) for _ in range(self.d)]
        return np.stack(cols, axis=-1)

    @property
    def id(self) -> str:
        if self.family == "uniform" or self.family == "gauss":
            return self.family
        if self.family == "t":
            return f"t{_fmt_num(self.params[0])}"
        return f"heavytail:{_fmt_num(self.params[0])}"


def density_from_id(text: str, d: int) -> DensitySpec:
    """Parse ``"uniform"``, ``"gauss"``, ``"t2"``, or ``"heavytail:2.5"``."""
    text = text.strip()
    if text in ("uniform", "gauss"):
        return DensitySpec(text, (), d)
    if text.startswith("t") and text[1:].replace(".", "", 1).isdigit():
        return DensitySpec("t", (float(text[1:]),), d)
    if text.startswith("heavytail:"):
        return DensitySpec("heavytail", (float(text.split(":", 1)[1]),), d)
    raise ConfigError(f"unknown density id {text!r}")


# ---------------------------------------------------------------------------
# noise


@dataclass(frozen=True)
class NoiseSpec:
    """Noise model: iid Gaussian, moving-average sequence, or moving-average
    lattice field.

    ``ma-seq`` uses eps_t = Z_t + sum_{i=1..q} beta_i Z_{t-i} along the raster
    order of the observations (beta holds beta_1..beta_q; the leading 1 is
    implicit). ``ma-lattice`` uses eps_k = sum_{r in {-q..q}^d} beta_r Z_{k-r}
    with the full coefficient cube given explicitly. Innovations are Gaussian
    with variance sigma2.
    """

    kind: str = "iid"
    sigma2: float = 1.0
    beta: tuple = ()
    d: int = 2

    def __post_init__(self):
        if self.kind not in ("iid", "ma-seq", "ma-lattice"):
            raise ConfigError(f"unknown noise kind {self.kind!r}")
        if not self.sigma2 >= 0:
            raise ConfigError("sigma2 must be >= 0")
        if self.kind == "iid" and self.beta:
            raise ConfigError("iid noise takes no coefficients")
        if self.kind == "ma-seq":
            object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        if self.kind == "ma-lattice":
            arr = np.asarray(self.beta, dtype=float)
            if arr.ndim != self.d or len(set(arr.shape)) != 1 or arr.shape[0] % 2 == 0:
                raise ConfigError(
                    "lattice coefficients must form a (2q+1)^d cube")

            def to_tuple(a):
                return tuple(to_tuple(row) for row in a) if a.ndim > 1 else tuple(a)

            object.__setattr__(self, "beta", to_tuple(arr))

    @property
    def q(self) -> int:
        if self.kind == "iid":
            return 0
        if self.kind == "ma-seq":
            return len(self.beta)
        return (np.asarray(self.beta).shape[0] - 1) // 2

    def seq_coeffs(self) -> np.ndarray:
        """(1, beta_1, ..., beta_q) for the sequence form."""
        return np.concatenate(([1.0], np.asarray(self.beta, dtype=float)))

    def lattice_coeffs(self) -> np.ndarray:
        return np.asarray(self.beta, dtype=float)

    def variance(self) -> float:
        """Marginal noise variance."""
        if self.kind == "iid":
            return self.sigma2
        if self.kind == "ma-seq":
            return self.sigma2 * float(np.sum(self.seq_coeffs() ** 2))
        return self.sigma2 * float(np.sum(self.lattice_coeffs() ** 2))


# ---------------------------------------------------------------------------
# designs and datasets


@dataclass(frozen=True)
class Design:
    """Sampling design: ``fixed`` lattice z_k = k/(n a_n), k in {-n..n}^d
    (N = (2n+1)^d points), or ``random`` with N = n iid draws from a density.
    """

    kind: str
    n: int
    a_n: float
    d: int = 2
    density: DensitySpec | None = None

    def __post_init__(self):
        if self.kind not in ("fixed", "random"):
            raise ConfigError(f"unknown design kind {self.kind!r}")
        if self.n < 1:
            raise ConfigError("design size must be >= 1")
        if not self.a_n > 0:
            raise ConfigError("a_n must be > 0")
        if self.kind == "random":
            if self.density is None:
                raise ConfigError("random design needs a density")
            if self.density.d != self.d:
                raise ConfigError("density dimension mismatch")

    @property
    def size(self) -> int:
        return (2 * self.n + 1) ** self.d if self.kind == "fixed" else self.n

    def lattice_axis(self) -> np.ndarray:
        if self.kind != "fixed":
            raise ConfigError("lattice_axis is defined for fixed designs only")
        return np.arange(-self.n, self.n + 1) / (self.n * self.a_n)

    def lattice_points(self) -> np.ndarray:
        """All lattice locations, shape (N, d), lexicographic in k."""
        axis = self.lattice_axis()
        grids = np.meshgrid(*([axis] * self.d), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)


@dataclass
class Dataset:
    """Observed responses with their design.

    Fixed design: ``y`` holds the responses in lexicographic k-order (C order
    of the lattice tensor) and ``x`` is None. Random design: ``x`` holds the
    observation locations, shape (n, d).
    """

    design: Design
    y: np.ndarray
    x: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float).ravel()
        if self.y.size != self.design.size:
            raise ConfigError(
                f"expected {self.design.size} responses, got {self.y.size}")
        if self.design.kind == "fixed":
            if self.x is not None:
                raise ConfigError("fixed-design datasets carry no x array")
        else:
            if self.x is None:
                raise ConfigError("random-design datasets need locations")
            self.x = np.asarray(self.x, dtype=float)
            if self.x.shape != (self.design.n, self.design.d):
                raise ConfigError("location array shape mismatch")

    @property
    def d(self) -> int:
        return self.design.d

    @property
    def locations(self) -> np.ndarray:
        return self.design.lattice_points() if self.x is None else self.x

    def y_lattice(self) -> np.ndarray:
        """Responses reshaped to the (2n+1, ..., 2n+1) lattice tensor."""
        side = 2 * self.design.n + 1
        return self.y.reshape((side,) * self.d)


# ---------------------------------------------------------------------------
# estimator configuration


@dataclass(frozen=True)
class EstimatorConfig:
    """Everything an estimator needs besides the data: the assumed kernel,
    the smoothing kernel, bandwidth, partition (additive estimators), weight
    measure (marginal integration), and quadrature controls.

    ``fast_path=False`` switches the weight integrals to full-dimensional
    tensor quadrature (the slow reference path).
    """

    kernel: ConvolutionKernel
    h: float
    smoothing: SmoothingKernel = SmoothingKernel()
    partition: Partition | None = None
    q_measure: WeightMeasure = WeightMeasure()
    quad_order: int = 64
    fast_path: bool = True
    imag_tolerance: float = 1e-8
    a_n: float | None = None

    def __post_init__(self):
        if not self.h > 0:
            raise ConfigError("bandwidth h must be > 0")
        if self.quad_order < 2:
            raise ConfigError("quadrature order must be >= 2")
        if not 0 < self.imag_tolerance < 1:
            raise ConfigError("imag_tolerance must be in (0, 1)")
        if self.partition is not None and self.partition.d != self.kernel.d:
            raise ConfigError("partition/kernel dimension mismatch")

    def design_scale(self, design: Design) -> float:
        """a_n to use with a given design; the two must agree when both set."""
        if self.a_n is None:
            return design.a_n
        if abs(self.a_n - design.a_n) > 1e-12:
            raise ConfigError("config a_n disagrees with the design")
        return self.a_n


# ---------------------------------------------------------------------------
# rate parameters


@dataclass(frozen=True)
class RateParameters:
    """Exponents entering the convergence-rate diagnostics.

    ``beta``: ill-posedness degree (growth exponent of the reciprocal kernel
    transform integrals as h -> 0; 2d for the d-dimensional Laplace product).
    ``gamma``: per-block gain exponents of the marginal-integration variance
    integrals. ``s``: signal smoothness exponent. ``r``: design tail exponent.
    """

    beta: float
    gamma: tuple[float, ...] = ()
    s: float = 2.0
    r: float = 1.0

    def __post_init__(self):
        if not self.beta > 0:
            raise ConfigError("beta must be > 0")
        if any(not g > 0 for g in self.gamma):
            raise ConfigError("gamma exponents must be > 0")
        if not self.s > 1:
            raise ConfigError("s must be > 1")
        if not self.r > 0:
            raise ConfigError("r must be > 0")

    def v1_h_exponent(self, d: int) -> float:
        """Slope of log(V1^{-1/2}) in log h at fixed n, a_n."""
        return d / 2.0 + self.beta

    def u_total_n_exponent(self, d: int) -> float:
        """Slope of log(U_n^{-1/2}) in log n at fixed h, a_n."""
        return d / 2.0


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Check:
    name: str
    status: str  # "satisfied" | "violated" | "unchecked"
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[Check, ...]

    @property
    def ok(self) -> bool:
        return all(c.status != "violated" for c in self.checks)

    def summary(self) -> str:
        return "\n".join(f"{c.name}: {c.status}" + (f" ({c.detail})" if c.detail else "")
                         for c in self.checks)


def validate_scenario(signal: AdditiveSignal, kernel: ConvolutionKernel,
                      smoothing: SmoothingKernel, design: Design,
                      config: EstimatorConfig | None = None) -> ValidationReport:
    """Diagnostic checks for a scenario; structural mismatches raise instead.

    Purely asymptotic conditions (rate requirements on n, h, a_n) are not
    decidable from a single configuration and are reported as "unchecked".
    """
    d = signal.partition.d
    if kernel.d != d or design.d != d:
        raise ConfigError(
            f"dimension mismatch: signal d={d}, kernel d={kernel.d}, design d={design.d}")
    if config is not None and config.partition is not None:
        if config.partition.d != d:
            raise ConfigError("config partition dimension mismatch")

    checks: list[Check] = []

    w0 = np.zeros((1, d))
    phi0 = complex(np.asarray(kernel.transform(w0)).ravel()[0])
    ok0 = abs(phi0 - 1.0) <= 1e-10
    checks.append(Check("transform_normalization",
                        "satisfied" if ok0 else "violated",
                        f"transform(0) = {phi0:.3e}"))

    if kernel.symmetric_real:
        checks.append(Check("transform_symmetric_real", "satisfied"))
    else:
        probe = complex(np.asarray(kernel.transform_axis(np.asarray(1.0))))
        checks.append(Check(
            "transform_symmetric_real", "violated",
            f"non-symmetric transform (imag at w=1: {probe.imag:.3e}); "
            "data generation only"))

    wprobe = np.linspace(-0.999, 0.999, 7)
    taper = smoothing.taper(wprobe)
    plateau = bool(np.all(np.abs(taper - 1.0) <= 1e-12))
    outside = float(smoothing.transform_axis(np.asarray(1.01)))
    checks.append(Check("smoothing_band_limited",
                        "satisfied" if plateau and outside == 0.0 else "violated"))

    if design.kind == "random":
        dens = design.density
        axis = np.linspace(-1.0 / design.a_n, 1.0 / design.a_n, 41)
        vals = dens.pdf_axis(axis, design.a_n) ** dens.d
        fl = dens.floor(design.a_n)
        ok = bool(np.all(vals >= fl * (1 - 1e-12))) and fl > 0
        checks.append(Check("density_floor_on_cube",
                            "satisfied" if ok else "violated",
                            f"floor {fl:.3e}"))
    else:
        checks.append(Check("density_floor_on_cube", "unchecked",
                            "fixed design"))

    checks.append(Check("asymptotic_rate_conditions", "unchecked",
                        "not decidable at finite n"))
    return ValidationReport(tuple(checks))
