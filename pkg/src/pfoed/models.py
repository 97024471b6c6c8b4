"""Built-in forward models.

Each model maps an (n_samples, n_params) parameter matrix to an
(n_samples, n_qoi) matrix of candidate QoI values, is pure and total on its
parameter box, and exposes the box as a ``ParameterSpace``.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .core import ParameterSpace
from .errors import DimensionMismatch, OutOfDomain, SolverDidNotConverge
from .rng import stream

__all__ = [
    "Nonlinear2x2",
    "ConvDiffAmplitude",
    "LinearHighDim",
    "convdiff_unit_solve",
    "build_model",
    "MODEL_NAMES",
]


class Nonlinear2x2:
    """Two-parameter nonlinear system with two QoI.

    The parameters (a, b) select the positive solution (x1, x2) of

        a * x1^2 + x2^2 = 1
        x1^2 - b * x2^2 = 1

    Eliminating gives closed forms for the squares:

        x1^2 = (1 + b) / (1 + a b),   x2^2 = (1 - a) / (1 + a b),

    both positive everywhere on the parameter box below.  QoI 0 is x2 and
    QoI 1 is x1.
    """

    BOUNDS = ((0.79, 0.99), (1.0 - 4.5 * math.sqrt(0.1), 1.0 + 4.5 * math.sqrt(0.1)))

    def __init__(self):
        self.space = ParameterSpace(self.BOUNDS)

    @property
    def n_params(self) -> int:
        return 2

    @property
    def n_qoi(self) -> int:
        return 2

    qoi_coords = None

    def evaluate_all(self, params: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(params, dtype=np.float64))
        if pts.shape[1] != 2:
            raise DimensionMismatch("nonlinear2x2 takes 2 parameters")
        if not self.space.contains(pts).all():
            raise OutOfDomain("parameters outside the nonlinear2x2 box")
        a, b = pts[:, 0], pts[:, 1]
        den = 1.0 + a * b
        x1_sq = (1.0 + b) / den
        x2_sq = (1.0 - a) / den
        return np.column_stack([np.sqrt(x2_sq), np.sqrt(x1_sq)])

    def evaluate(self, lam: Sequence[float]) -> tuple[float, float]:
        out = self.evaluate_all(np.asarray(lam)[None, :])[0]
        return float(out[0]), float(out[1])


def convdiff_unit_solve(
    nx: int = 25,
    ny: int = 25,
    diffusion: float = 0.01,
    velocity: tuple[float, float] = (1.0, 1.0),
    source_center: tuple[float, float] = (0.5, 0.5),
    source_width: float = 0.05,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Steady convection-diffusion field for unit source amplitude.

    Solves -D lap(u) + div(v u) = S on the unit square with a Gaussian source,
    zero Dirichlet values on the x=0 and y=0 edges and one-sided zero-gradient
    conditions on x=1 and y=1.  Finite differences on (nx, ny) cells: central
    second differences for diffusion, first-order upwind differences for
    convection (positivity-preserving at the cell Peclet numbers used here).

    Returns (u, x_nodes, y_nodes) with u of shape (nx+1, ny+1).
    """
    if nx < 8 or ny < 8:
        raise ValueError("grid must have at least 8 cells per direction")
    vx, vy = velocity
    if vx < 0 or vy < 0:
        raise ValueError("upwind stencil assumes nonnegative velocity components")
    hx, hy = 1.0 / nx, 1.0 / ny
    xs = np.linspace(0.0, 1.0, nx + 1)
    ys = np.linspace(0.0, 1.0, ny + 1)
    n_nodes = (nx + 1) * (ny + 1)

    def node(i: int, j: int) -> int:
        return i * (ny + 1) + j

    rows, cols, vals = [], [], []
    rhs = np.zeros(n_nodes)
    for i in range(nx + 1):
        for j in range(ny + 1):
            k = node(i, j)
            if i == 0 or j == 0:
                rows.append(k); cols.append(k); vals.append(1.0)
            elif i == nx:
                rows += [k, k]; cols += [k, node(i - 1, j)]; vals += [1.0, -1.0]
            elif j == ny:
                rows += [k, k]; cols += [k, node(i, j - 1)]; vals += [1.0, -1.0]
            else:
                diag = 2.0 * diffusion / hx**2 + 2.0 * diffusion / hy**2 + vx / hx + vy / hy
                rows += [k] * 5
                cols += [k, node(i + 1, j), node(i - 1, j), node(i, j + 1), node(i, j - 1)]
                vals += [
                    diag,
                    -diffusion / hx**2,
                    -diffusion / hx**2 - vx / hx,
                    -diffusion / hy**2,
                    -diffusion / hy**2 - vy / hy,
                ]
                dx = xs[i] - source_center[0]
                dy = ys[j] - source_center[1]
                rhs[k] = math.exp(-(dx * dx + dy * dy) / (2.0 * source_width**2))
    matrix = sp.csr_matrix((vals, (rows, cols)), shape=(n_nodes, n_nodes))
    u = spla.spsolve(matrix, rhs)
    residual = np.linalg.norm(matrix @ u - rhs) / np.linalg.norm(rhs)
    if not residual <= 1e-10:
        raise SolverDidNotConverge(f"relative residual {residual:.3e}")
    return u.reshape(nx + 1, ny + 1), xs, ys


def _bilinear(u: np.ndarray, x: float, y: float) -> float:
    nx, ny = u.shape[0] - 1, u.shape[1] - 1
    fx, fy = x * nx, y * ny
    i = min(int(fx), nx - 1)
    j = min(int(fy), ny - 1)
    tx, ty = fx - i, fy - j
    return float(
        (1 - tx) * (1 - ty) * u[i, j]
        + tx * (1 - ty) * u[i + 1, j]
        + (1 - tx) * ty * u[i, j + 1]
        + tx * ty * u[i + 1, j + 1]
    )


class ConvDiffAmplitude:
    """Steady convection-diffusion with uncertain source amplitude.

    The single parameter scales the source term, and the equation is linear
    in it, so one unit-amplitude solve covers every sample: each QoI is the
    amplitude times the unit field interpolated at a sensor location.
    """

    BOUNDS = ((50.0, 150.0),)

    # Unit-field solves performed by all instances; tests read this to check
    # that a full QoI matrix costs exactly one solve.
    solve_count = 0

    def __init__(
        self,
        sensors: Sequence[tuple[float, float]],
        nx: int = 25,
        ny: int = 25,
        diffusion: float = 0.01,
        velocity: tuple[float, float] = (1.0, 1.0),
        source_center: tuple[float, float] = (0.5, 0.5),
        source_width: float = 0.05,
    ):
        self.space = ParameterSpace(self.BOUNDS)
        self.sensors = tuple((float(x), float(y)) for x, y in sensors)
        for x, y in self.sensors:
            if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
                raise OutOfDomain(f"sensor ({x}, {y}) outside the unit square")
        self._grid = (nx, ny)
        self._physics = (diffusion, velocity, source_center, source_width)
        self._unit_field: Optional[np.ndarray] = None
        self._sensor_values: Optional[np.ndarray] = None

    @property
    def n_params(self) -> int:
        return 1

    @property
    def n_qoi(self) -> int:
        return len(self.sensors)

    @property
    def qoi_coords(self) -> tuple[tuple[float, float], ...]:
        return self.sensors

    @property
    def unit_field(self) -> np.ndarray:
        if self._unit_field is None:
            nx, ny = self._grid
            diffusion, velocity, center, width = self._physics
            self._unit_field, _, _ = convdiff_unit_solve(
                nx, ny, diffusion, velocity, center, width)
            ConvDiffAmplitude.solve_count += 1
        return self._unit_field

    @property
    def unit_sensor_values(self) -> np.ndarray:
        if self._sensor_values is None:
            u = self.unit_field
            self._sensor_values = np.array([_bilinear(u, x, y) for x, y in self.sensors])
        return self._sensor_values

    def evaluate_all(self, params: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(params, dtype=np.float64))
        if pts.shape[1] != 1:
            raise DimensionMismatch("convdiff_amplitude takes 1 parameter")
        if not self.space.contains(pts).all():
            raise OutOfDomain("amplitude outside its admissible range")
        return pts[:, [0]] * self.unit_sensor_values[None, :]

    def measure(self, amplitude: float, sensor: tuple[float, float]) -> float:
        """Concentration at one sensor for one amplitude."""
        x, y = sensor
        if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
            raise OutOfDomain(f"sensor ({x}, {y}) outside the unit square")
        if not self.space.contains(np.array([[amplitude]])).all():
            raise OutOfDomain("amplitude outside its admissible range")
        return amplitude * _bilinear(self.unit_field, x, y)


class LinearHighDim:
    """Seeded affine map from a high-dimensional cube, W lam + c.

    Exercises the data-space gain estimator in regimes where parameter-space
    densities underflow (a unit-variance product density in 100 dimensions
    peaks near 1e-40).
    """

    def __init__(self, n_params: int = 100, n_qoi: int = 1, seed: int = 0,
                 offset: float = 0.0, scale: float = 1.0):
        self.space = ParameterSpace(tuple((-1.0, 1.0) for _ in range(n_params)))
        gen = stream(seed, "weights")
        self.weights = scale * gen.standard_normal((n_qoi, n_params)) / math.sqrt(n_params)
        self.offsets = np.full(n_qoi, float(offset))

    @property
    def n_params(self) -> int:
        return self.space.dims

    @property
    def n_qoi(self) -> int:
        return self.weights.shape[0]

    qoi_coords = None

    def evaluate_all(self, params: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(params, dtype=np.float64))
        if pts.shape[1] != self.n_params:
            raise DimensionMismatch(
                f"linear_highdim takes {self.n_params} parameters, got {pts.shape[1]}")
        return pts @ self.weights.T + self.offsets


MODEL_NAMES = ("nonlinear2x2", "convdiff_amplitude", "linear_highdim")


def build_model(name: str, model_params: dict, sensors=None):
    """Instantiate a built-in model by name.

    ``sensors`` is required for sensor-bearing models and ignored otherwise.
    """
    if name == "nonlinear2x2":
        return Nonlinear2x2()
    if name == "convdiff_amplitude":
        if not sensors:
            raise ValueError("convdiff_amplitude needs sensor locations")
        return ConvDiffAmplitude(sensors=sensors, **model_params)
    if name == "linear_highdim":
        return LinearHighDim(**model_params)
    raise ValueError(f"unknown model {name!r}")
