"""Grid and field containers, norms and boundary extraction.

Array layout
------------
A :class:`Field` stores ``data`` with shape ``[c, (n_t), n_1, ..., n_d]``:
component axis first, the time axis next when the grid is time dependent,
then the spatial axes in grid order. Everything is float64.

Periodic dimensions are cell-centred in the sense that the last sample sits
one spacing before the period (``dx = L / n``). Non-periodic dimensions are
vertex-centred so the first and last samples lie on the boundary
(``dx = L / (n - 1)``), which makes boundary extraction a plain copy.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np

from .errors import GridError, ReferenceZeroError

Dim = Union[int, str]  # spatial index, or "t" for the time axis

QUANTITIES = ("velocity", "pressure", "displacement", "source", "state", "coefficient")


@dataclass(frozen=True)
class Grid:
    """Rectilinear space-time grid over ``[0, T] x Omega``.

    Parameters
    ----------
    points : tuple of int
        Samples per spatial dimension (1 to 3 dimensions).
    extents : tuple of float
        Physical length of each spatial dimension.
    periodic : tuple of bool
        Periodicity flag per spatial dimension.
    time_points : int
        Number of time samples; 0 means a static problem.
    t_end : float
        Final time ``T``. Required positive when ``time_points > 0``.
    time_periodic : bool
        Whether the time axis may be treated as periodic with period
        ``time_points * dt`` (synthesis and time-axis dilation only).
    """

    points: tuple[int, ...]
    extents: tuple[float, ...]
    periodic: tuple[bool, ...]
    time_points: int = 0
    t_end: float = 0.0
    time_periodic: bool = False

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(int(n) for n in self.points))
        object.__setattr__(self, "extents", tuple(float(L) for L in self.extents))
        object.__setattr__(self, "periodic", tuple(bool(p) for p in self.periodic))
        d = len(self.points)
        if not 1 <= d <= 3:
            raise GridError(f"grid must have 1-3 spatial dims, got {d}")
        if len(self.extents) != d or len(self.periodic) != d:
            raise GridError("points, extents and periodic must have equal length")
        if any(n < 1 for n in self.points):
            raise GridError("points per dimension must be positive")
        if any(not L > 0 for L in self.extents):
            raise GridError("extents must be positive")
        if self.time_points < 0:
            raise GridError("time_points must be >= 0")
        if self.time_points > 0 and not self.t_end > 0:
            raise GridError("t_end must be positive for time-dependent grids")

    @classmethod
    def uniform(cls, d: int, n: int, L: float = 2 * np.pi, periodic: bool = True,
                time_points: int = 0, t_end: float = 0.0) -> "Grid":
        return cls((n,) * d, (L,) * d, (periodic,) * d, time_points, t_end)

    @property
    def ndim(self) -> int:
        return len(self.points)

    @property
    def has_time(self) -> bool:
        return self.time_points > 0

    @property
    def fully_periodic(self) -> bool:
        return all(self.periodic)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / n if p else L / (n - 1) if n > 1 else L
                     for n, L, p in zip(self.points, self.extents, self.periodic))

    @property
    def dt(self) -> float:
        if self.time_points < 2:
            return 0.0
        return self.t_end / (self.time_points - 1)

    @property
    def time_period(self) -> float:
        """Period used when the time axis is treated periodically."""
        return self.time_points * self.dt

    @property
    def shape(self) -> tuple[int, ...]:
        """Shape of one component: ``[(n_t), n_1, ..., n_d]``."""
        if self.has_time:
            return (self.time_points,) + self.points
        return self.points

    def field_shape(self, components: int) -> tuple[int, ...]:
        return (components,) + self.shape

    def coords(self, dim: int) -> np.ndarray:
        return np.arange(self.points[dim]) * self.spacing[dim]

    @property
    def times(self) -> np.ndarray:
        if not self.has_time:
            return np.zeros(0)
        if self.time_points == 1:
            return np.zeros(1)
        return np.linspace(0.0, self.t_end, self.time_points)

    def mesh(self) -> list[np.ndarray]:
        """Broadcastable coordinate arrays over the spatial axes only."""
        return list(np.meshgrid(*[self.coords(j) for j in range(self.ndim)], indexing="ij"))

    def axis(self, dim: Dim) -> int:
        """Array axis of ``dim`` inside a component-leading field array."""
        offset = 1 + int(self.has_time)
        if dim == "t":
            if not self.has_time:
                raise GridError("static grid has no time axis")
            return 1
        dim = int(dim)
        if not 0 <= dim < self.ndim:
            raise GridError(f"spatial dim {dim} out of range for {self.ndim}-d grid")
        return offset + dim

    def length(self, dim: Dim) -> float:
        """Period (or physical length) along ``dim``."""
        if dim == "t":
            return self.time_period if self.time_periodic else self.t_end
        return self.extents[int(dim)]

    def is_periodic(self, dim: Dim) -> bool:
        if dim == "t":
            return self.time_periodic
        return self.periodic[int(dim)]

    def step(self, dim: Dim) -> float:
        return self.dt if dim == "t" else self.spacing[int(dim)]

    def static(self) -> "Grid":
        return replace(self, time_points=0, t_end=0.0, time_periodic=False)

    def to_dict(self) -> dict:
        return {
            "points": list(self.points),
            "extents": list(self.extents),
            "periodic": list(self.periodic),
            "time_points": self.time_points,
            "t_end": self.t_end,
            "time_periodic": self.time_periodic,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Grid":
        return cls(tuple(d["points"]), tuple(d["extents"]), tuple(d["periodic"]),
                   int(d.get("time_points", 0)), float(d.get("t_end", 0.0)),
                   bool(d.get("time_periodic", False)))


def _frozen(a, dtype=np.float64) -> np.ndarray:
    out = np.array(a, dtype=dtype, copy=True, order="C")
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Field:
    """Multi-component real samples on a :class:`Grid`."""

    grid: Grid
    data: np.ndarray
    quantity: str = "state"

    def __post_init__(self):
        data = _frozen(self.data)
        if data.ndim == len(self.grid.shape):
            data = _frozen(data[None])
        if data.shape[1:] != self.grid.shape:
            raise GridError(f"data shape {data.shape} inconsistent with grid shape {self.grid.shape}")
        if data.shape[0] < 1:
            raise GridError("field needs at least one component")
        if not np.all(np.isfinite(data)):
            raise ValueError("field data contains NaN or Inf")
        if self.quantity not in QUANTITIES:
            raise ValueError(f"unknown quantity tag {self.quantity!r}")
        object.__setattr__(self, "data", data)

    @property
    def components(self) -> int:
        return self.data.shape[0]

    def axis(self, dim: Dim) -> int:
        return self.grid.axis(dim)

    def with_data(self, data, quantity: str | None = None) -> "Field":
        return Field(self.grid, data, quantity or self.quantity)

    def time_slice(self, i: int) -> "Field":
        """Static field holding time sample ``i``."""
        return Field(self.grid.static(), self.data[:, i], self.quantity)

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)


@dataclass(frozen=True)
class TimeSeries:
    """``n_t`` samples of ``c`` channels at uniform spacing ``dt``."""

    data: np.ndarray
    dt: float

    def __post_init__(self):
        data = _frozen(self.data)
        if data.ndim == 1:
            data = _frozen(data[:, None])
        if data.ndim != 2:
            raise ValueError("time series data must be [n_t, c]")
        if data.shape[0] < 2:
            raise ValueError("time series needs at least two samples")
        if not np.all(np.isfinite(data)):
            raise ValueError("time series contains NaN or Inf")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def n_t(self) -> int:
        return self.data.shape[0]

    @property
    def channels(self) -> int:
        return self.data.shape[1]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_t) * self.dt

    @property
    def t_end(self) -> float:
        return (self.n_t - 1) * self.dt

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)


@dataclass(frozen=True)
class BoundaryData:
    """Boundary traces keyed by ``(dim, side)`` with side ``"lo"`` or ``"hi"``.

    Each trace keeps the component axis and (if present) the time axis, and
    drops the normal axis: a face of dim ``j`` has shape
    ``[c, (n_t), n_1, .., n_j removed, .., n_d]``.
    """

    faces: dict = field(default_factory=dict)

    @property
    def empty(self) -> bool:
        return not self.faces

    def __len__(self):
        return len(self.faces)

    def __getitem__(self, key):
        return self.faces[key]

    def keys(self):
        return self.faces.keys()

    def items(self):
        return self.faces.items()

    @staticmethod
    def key_name(key) -> str:
        dim, side = key
        return f"{dim}_{side}"

    @staticmethod
    def parse_key(name: str):
        dim, side = name.split("_")
        return int(dim), side


def boundary_trace(u: Field) -> BoundaryData:
    """Copy ``u`` on every face of each non-periodic dimension.

    Fully periodic grids have no boundary and return an empty result.
    """
    faces = {}
    for j, periodic in enumerate(u.grid.periodic):
        if periodic:
            continue
        ax = u.axis(j)
        faces[(j, "lo")] = _frozen(np.take(u.data, 0, axis=ax))
        faces[(j, "hi")] = _frozen(np.take(u.data, -1, axis=ax))
    return BoundaryData(faces)


def _values(u) -> np.ndarray:
    if isinstance(u, (Field, TimeSeries)):
        return u.data
    return np.asarray(u, dtype=np.float64)


def norm(u, p=2) -> float:
    """Discrete norm of the flattened data.

    ``p`` in {1, 2} gives the sample-mean forms ``mean|u|`` and
    ``sqrt(mean u^2)``; ``p = inf`` gives ``max|u|``.
    """
    a = _values(u).ravel()
    if a.size == 0:
        return 0.0
    if p == 1:
        return float(np.mean(np.abs(a)))
    if p == 2:
        return float(np.sqrt(np.mean(a * a)))
    if p in (np.inf, "inf"):
        return float(np.max(np.abs(a)))
    raise ValueError(f"unsupported norm order {p!r}")


def relative_l1(u, u_hat) -> float:
    """``norm(u - u_hat, 1) / norm(u, 1)`` with ``u`` the reference."""
    a, b = _values(u), _values(u_hat)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    ref = norm(a, 1)
    if ref == 0.0:
        raise ReferenceZeroError("reference field has zero L1 norm")
    return norm(a - b, 1) / ref
