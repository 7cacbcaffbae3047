"""Affine low-dimensional search spaces and orthogonal projection.

A search space is ``anchor + span(basis)`` with an orthonormal basis of
dimension ``d < D``. Generators are provided for coordinate-axis lines and
for planes spanned by one coordinate axis plus one random direction;
clipping against the rectangular domain is handled by interval arithmetic
for lines and by membership tests for planes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_ORTHO_TOL = 1e-10


@dataclass(frozen=True)
class Box:
    """Axis-aligned domain ``[lower, upper]`` (closed)."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float).ravel()
        upper = np.asarray(self.upper, dtype=float).ravel()
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if lower.shape != upper.shape:
            raise ValueError("lower and upper have different lengths")
        if not np.all(lower < upper):
            raise ValueError("box requires lower < upper in every dimension")

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def chord(self) -> float:
        """Length of the longest segment contained in the box."""
        return float(np.linalg.norm(self.upper - self.lower))

    def contains(self, x, atol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(
            np.all(x >= self.lower - atol) and np.all(x <= self.upper + atol)
        )

    def clip(self, x) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=float), self.lower, self.upper)

    @classmethod
    def unit_centered(cls, dim: int) -> "Box":
        """The normalized domain ``[-0.5, 0.5]^dim``."""
        return cls(np.full(dim, -0.5), np.full(dim, 0.5))


@dataclass(frozen=True)
class Subspace:
    """Affine subspace ``anchor + span(basis)``.

    ``basis`` holds ``d`` orthonormal columns of length ``D``; ``id`` counts
    subspace switches so traces can attribute queries to an epoch.
    """

    anchor: np.ndarray
    basis: np.ndarray
    id: int = 0

    def __post_init__(self):
        anchor = np.asarray(self.anchor, dtype=float).ravel()
        basis = np.atleast_2d(np.asarray(self.basis, dtype=float))
        object.__setattr__(self, "anchor", anchor)
        object.__setattr__(self, "basis", basis)
        if basis.shape[0] != anchor.size:
            raise ValueError("basis rows must match the anchor dimension")
        d = basis.shape[1]
        if not 1 <= d < anchor.size:
            raise ValueError("subspace dimension must satisfy 1 <= d < D")
        gram = basis.T @ basis
        if not np.allclose(gram, np.eye(d), atol=_ORTHO_TOL):
            raise ValueError("basis columns are not orthonormal")

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


def make_coordinate_line(anchor, axis: int, subspace_id: int = 0) -> Subspace:
    """One-dimensional subspace along coordinate ``axis`` through ``anchor``."""
    anchor = np.asarray(anchor, dtype=float).ravel()
    if not 0 <= axis < anchor.size:
        raise ValueError(f"axis {axis} out of range for dimension {anchor.size}")
    basis = np.zeros((anchor.size, 1))
    basis[axis, 0] = 1.0
    return Subspace(anchor, basis, subspace_id)


def make_random_plane(
    anchor, axis: int, rng: np.random.Generator, subspace_id: int = 0
) -> Subspace:
    """Plane spanned by coordinate ``axis`` and a random orthogonal direction.

    The second basis vector is a standard-normal draw with its ``axis``
    component removed and renormalized; degenerate draws are redrawn a
    bounded number of times. Deterministic given the generator state.
    """
    anchor = np.asarray(anchor, dtype=float).ravel()
    D = anchor.size
    if D < 3:
        raise ValueError("a random plane requires D >= 3")
    if not 0 <= axis < D:
        raise ValueError(f"axis {axis} out of range for dimension {D}")
    e_axis = np.zeros(D)
    e_axis[axis] = 1.0
    for _ in range(100):
        v = rng.standard_normal(D)
        v[axis] = 0.0  # Gram-Schmidt against e_axis
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            basis = np.column_stack([e_axis, v / norm])
            return Subspace(anchor, basis, subspace_id)
    raise RuntimeError("could not draw a non-degenerate second direction")


def project(sub: Subspace, x) -> np.ndarray:
    """Orthogonal projection of ``x`` onto the affine subspace.

    Equals ``anchor + B B^T (x - anchor)``: the closest point of the
    subspace to ``x``.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.size != sub.anchor.size:
        raise ValueError(f"point dimension {x.size} != {sub.anchor.size}")
    return sub.anchor + sub.basis @ (sub.basis.T @ (x - sub.anchor))


def projection_distance(sub: Subspace, x) -> float:
    """Euclidean distance from ``x`` to the affine subspace."""
    x = np.asarray(x, dtype=float).ravel()
    return float(np.linalg.norm(project(sub, x) - x))


def embed(sub: Subspace, local) -> np.ndarray:
    """Map local coordinates to the ambient space: ``anchor + basis @ local``."""
    local = np.atleast_1d(np.asarray(local, dtype=float))
    if local.size != sub.dim:
        raise ValueError(f"local coordinates have size {local.size}, expected {sub.dim}")
    return sub.anchor + sub.basis @ local


def to_local(sub: Subspace, x) -> np.ndarray:
    """Local coordinates of the projection of ``x``."""
    x = np.asarray(x, dtype=float).ravel()
    return sub.basis.T @ (x - sub.anchor)


def is_feasible(sub: Subspace, box: Box, local) -> bool:
    """Whether ``embed(local)`` lies inside the (closed) box."""
    return box.contains(embed(sub, local))


def feasible_line_interval(sub: Subspace, box: Box) -> tuple[float, float]:
    """Maximal ``[lo, hi]`` with ``anchor + a*u`` feasible for a in [lo, hi].

    Requires ``sub.dim == 1`` and a feasible anchor, so the interval always
    contains zero.
    """
    if sub.dim != 1:
        raise ValueError("feasible_line_interval applies to 1-D subspaces")
    if not box.contains(sub.anchor, atol=1e-12):
        raise ValueError("anchor lies outside the box")
    lo, hi = _segment_through(sub.anchor, sub.basis[:, 0], box)
    return float(min(lo, 0.0)), float(max(hi, 0.0))


def feasible_interval_along(
    sub: Subspace, box: Box, local, axis: int
) -> tuple[float, float]:
    """Feasible range of ``local[axis]`` with the other coordinates fixed.

    Interval bounds are absolute values of ``local[axis]``, not offsets.
    Empty intersections (an infeasible base point) collapse to the current
    value.
    """
    local = np.atleast_1d(np.asarray(local, dtype=float)).copy()
    base = local.copy()
    base[axis] = 0.0
    origin = embed(sub, base)
    lo, hi = _segment_through(origin, sub.basis[:, axis], box)
    if lo > hi:
        return float(local[axis]), float(local[axis])
    return float(lo), float(hi)


def _segment_through(origin, direction, box: Box) -> tuple[float, float]:
    """Parameter range of ``origin + a*direction`` inside the box."""
    lo, hi = -np.inf, np.inf
    for d in range(box.dim):
        u = direction[d]
        if abs(u) < 1e-15:
            if not (box.lower[d] - 1e-12 <= origin[d] <= box.upper[d] + 1e-12):
                return 1.0, 0.0  # empty
            continue
        a = (box.lower[d] - origin[d]) / u
        b = (box.upper[d] - origin[d]) / u
        if a > b:
            a, b = b, a
        lo = max(lo, a)
        hi = min(hi, b)
    return lo, hi
