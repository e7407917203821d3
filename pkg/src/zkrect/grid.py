"""Rectangular domain, grid fields, quadrature and admissible initial data.

Grid values are stored as ``(nx, ny)`` arrays with ``values[i, j] = u(i*hx, j*hy)``.
Flattening is row-major, so node ``(i, j)`` has flat index ``i*ny + j``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

MIN_NODES = 8


class ParameterError(ValueError):
    """Invalid numeric parameter; ``field`` names the offending input."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class ShapeError(ValueError):
    """Fields defined on different domains or with mismatched shapes."""


@dataclass(frozen=True)
class RectDomain:
    """Uniform tensor grid on (0, L) x (0, B), boundary nodes included."""

    L: float
    B: float
    nx: int
    ny: int

    def __post_init__(self):
        for name in ("L", "B"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ParameterError(name, f"must be positive and finite, got {value!r}")
        for name in ("nx", "ny"):
            value = getattr(self, name)
            if int(value) != value or value < MIN_NODES:
                raise ParameterError(name, f"must be an integer >= {MIN_NODES}, got {value!r}")
        object.__setattr__(self, "L", float(self.L))
        object.__setattr__(self, "B", float(self.B))
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))

    @property
    def hx(self) -> float:
        return self.L / (self.nx - 1)

    @property
    def hy(self) -> float:
        return self.B / (self.ny - 1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def size(self) -> int:
        return self.nx * self.ny

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, self.L, self.nx)

    @property
    def y(self) -> np.ndarray:
        return np.linspace(0.0, self.B, self.ny)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    def index(self, i: int, j: int) -> int:
        return i * self.ny + j

    @cached_property
    def weights_x(self) -> np.ndarray:
        w = np.full(self.nx, self.hx)
        w[[0, -1]] *= 0.5
        return w

    @cached_property
    def weights_y(self) -> np.ndarray:
        w = np.full(self.ny, self.hy)
        w[[0, -1]] *= 0.5
        return w

    @cached_property
    def weights(self) -> np.ndarray:
        """Trapezoid weights on the full grid, shape ``(nx, ny)``."""
        return np.outer(self.weights_x, self.weights_y)

    def refined(self, factor: int = 2) -> "RectDomain":
        """Same rectangle with every grid spacing divided by ``factor``."""
        return RectDomain(self.L, self.B, (self.nx - 1) * factor + 1, (self.ny - 1) * factor + 1)


def build_domain(L: float, B: float, nx: int, ny: int) -> RectDomain:
    return RectDomain(L, B, nx, ny)


@dataclass(frozen=True, eq=False)
class GridField:
    """A scalar field sampled on every node of ``domain``."""

    domain: RectDomain
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.size != self.domain.size:
            raise ShapeError(f"expected {self.domain.size} values for a {self.domain.shape} grid, got {values.size}")
        values = values.reshape(self.domain.shape)
        if not np.all(np.isfinite(values)):
            raise ValueError("grid field contains NaN or Inf")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, domain: RectDomain) -> "GridField":
        return cls(domain, np.zeros(domain.shape))

    @classmethod
    def from_function(cls, domain: RectDomain, func) -> "GridField":
        X, Y = domain.mesh()
        return cls(domain, np.broadcast_to(func(X, Y), domain.shape))

    def ravel(self) -> np.ndarray:
        return self.values.ravel()

    def _check(self, other: "GridField"):
        if self.domain != other.domain:
            raise ShapeError("fields live on different domains")

    def __add__(self, other: "GridField") -> "GridField":
        self._check(other)
        return GridField(self.domain, self.values + other.values)

    def __sub__(self, other: "GridField") -> "GridField":
        self._check(other)
        return GridField(self.domain, self.values - other.values)

    def __mul__(self, scalar: float) -> "GridField":
        return GridField(self.domain, scalar * self.values)

    __rmul__ = __mul__


class ICFamily(enum.Enum):
    SINE_SQUARED_PRODUCT = "SineSquaredProduct"
    GAUSSIAN_BUMP = "GaussianBump"
    MODAL = "Modal"


@dataclass(frozen=True)
class InitialCondition:
    """Initial datum generator.

    Every family is multiplied by ``sin^2(pi x/L) sin^2(pi y/B)``, which vanishes
    together with its first derivatives on the whole boundary, so the data are
    compatible with the boundary conditions by construction.

    ``center`` and ``width`` are fractions of (L, B) and of min(L, B) for
    GaussianBump; ``modes`` = (k, l) multiplies the mask by
    ``cos(k pi x/L) cos(l pi y/B)`` for Modal.
    """

    family: ICFamily = ICFamily.SINE_SQUARED_PRODUCT
    amplitude: float = 1.0
    center: tuple[float, float] = (0.5, 0.5)
    width: float = 0.2
    modes: tuple[int, int] = (1, 1)

    def __post_init__(self):
        object.__setattr__(self, "family", ICFamily(self.family))
        if not np.isfinite(self.amplitude):
            raise ParameterError("amplitude", "must be finite")
        if self.family is ICFamily.GAUSSIAN_BUMP:
            if self.width <= 0:
                raise ParameterError("width", f"must be positive, got {self.width!r}")
            if not all(0.0 <= c <= 1.0 for c in self.center):
                raise ParameterError("center", "components are fractions of (L, B) in [0, 1]")
        if self.family is ICFamily.MODAL and any(int(m) != m or m < 0 for m in self.modes):
            raise ParameterError("modes", "must be nonnegative integers")


def compatibility_mask(d: RectDomain) -> np.ndarray:
    X, Y = d.mesh()
    mask = np.sin(np.pi * X / d.L) ** 2 * np.sin(np.pi * Y / d.B) ** 2
    # sin(pi) is ~1e-16, not 0; the boundary values must be exact zeros
    mask[0, :] = mask[-1, :] = 0.0
    mask[:, 0] = mask[:, -1] = 0.0
    return mask


def sample_initial(ic: InitialCondition, d: RectDomain) -> GridField:
    mask = compatibility_mask(d)
    X, Y = d.mesh()
    if ic.family is ICFamily.SINE_SQUARED_PRODUCT:
        shape = 1.0
    elif ic.family is ICFamily.GAUSSIAN_BUMP:
        cx, cy = ic.center[0] * d.L, ic.center[1] * d.B
        w = ic.width * min(d.L, d.B)
        shape = np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / w**2)
    else:
        k, l = ic.modes
        shape = np.cos(k * np.pi * X / d.L) * np.cos(l * np.pi * Y / d.B)
    return GridField(d, ic.amplitude * mask * shape)


def random_initial_condition(rng: np.random.Generator, family: ICFamily | None = None) -> InitialCondition:
    """Draw a random member of ``family`` (or of a random family)."""
    families = list(ICFamily)
    if family is None:
        family = families[rng.integers(len(families))]
    family = ICFamily(family)
    amplitude = float(rng.uniform(0.5, 2.0) * rng.choice([-1.0, 1.0]))
    if family is ICFamily.GAUSSIAN_BUMP:
        return InitialCondition(
            family,
            amplitude,
            center=(float(rng.uniform(0.25, 0.75)), float(rng.uniform(0.25, 0.75))),
            width=float(rng.uniform(0.15, 0.4)),
        )
    if family is ICFamily.MODAL:
        return InitialCondition(family, amplitude, modes=(int(rng.integers(1, 4)), int(rng.integers(1, 4))))
    return InitialCondition(family, amplitude)


# -- quadrature ---------------------------------------------------------------


def _same_domain(u: GridField, v: GridField):
    if u.domain != v.domain:
        raise ShapeError("fields live on different domains")


def inner_product(u: GridField, v: GridField) -> float:
    _same_domain(u, v)
    return float(np.sum(u.domain.weights * u.values * v.values))


def norm_sq(u: GridField) -> float:
    return inner_product(u, u)


def weighted_norm_sq(u: GridField) -> float:
    """Trapezoid value of the integral of (1 + x) u^2."""
    d = u.domain
    return float(np.sum(d.weights * (1.0 + d.x)[:, None] * u.values**2))


def dx_at_x0(u: GridField) -> np.ndarray:
    """Second-order one-sided u_x on the edge x = 0, one value per y node."""
    U = u.values
    return (-3.0 * U[0] + 4.0 * U[1] - U[2]) / (2.0 * u.domain.hx)


def dx_at_xL(u: GridField) -> np.ndarray:
    U = u.values
    return (3.0 * U[-1] - 4.0 * U[-2] + U[-3]) / (2.0 * u.domain.hx)


def integrate_trace_x0(u: GridField) -> float:
    """Integral over y of u_x(0, y)^2."""
    return float(np.sum(u.domain.weights_y * dx_at_x0(u) ** 2))


def integrate_trace_xL(u: GridField) -> float:
    """Integral over y of u_x(L, y)^2 (the adjoint dissipation trace)."""
    return float(np.sum(u.domain.weights_y * dx_at_xL(u) ** 2))


def integrate_trace_yB(u: GridField, weight: str = "1") -> float:
    """Integral over x of w(x) u(x, B)^2 with w = 1 or w = 1 + x."""
    d = u.domain
    if weight == "1":
        w = d.weights_x
    elif weight == "1+x":
        w = d.weights_x * (1.0 + d.x)
    else:
        raise ValueError(f"weight must be '1' or '1+x', got {weight!r}")
    return float(np.sum(w * u.values[:, -1] ** 2))


def gradient_norms_sq(u: GridField) -> tuple[float, float]:
    """Trapezoid values of ||u_x||^2 and ||u_y||^2 (second-order differences)."""
    d = u.domain
    ux = np.gradient(u.values, d.hx, axis=0, edge_order=2)
    uy = np.gradient(u.values, d.hy, axis=1, edge_order=2)
    return float(np.sum(d.weights * ux**2)), float(np.sum(d.weights * uy**2))
