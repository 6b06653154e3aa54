"""Distribution-comparison utilities: weighted samples and the 1-Wasserstein distance.

In one dimension the 1-Wasserstein distance between two measures of equal
total mass is the integral of the absolute difference of their cumulative
distribution functions, which is exact for discrete measures. That integral
is what :func:`wasserstein1` computes; no optimal-transport solver is needed
on the main path (a linear-assignment solve is used as an independent oracle
in the test suite).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "WeightedSample",
    "MassMismatchError",
    "wasserstein1",
    "density_to_weighted_sample",
    "density_vs_samples_w1",
]

#: maximum allowed difference of total masses in :func:`wasserstein1`
MASS_ATOL = 1e-9


class MassMismatchError(ValueError):
    """Raised when two measures of unequal total mass are compared.

    W1 is only defined between measures of the same mass; normalize both
    sides explicitly (e.g. divide the weights by the total) before calling.
    """


@dataclass(frozen=True)
class WeightedSample:
    """A discrete measure on the half line: support points with positive weights."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        points = np.atleast_1d(np.asarray(self.points, dtype=float))
        weights = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if points.shape != weights.shape or points.ndim != 1:
            raise ValueError("points and weights must be 1-D arrays of equal length")
        if points.size == 0:
            raise ValueError("empty sample")
        if np.any(points < 0):
            raise ValueError("support points must be non-negative")
        if np.any(weights <= 0):
            raise ValueError("weights must be positive")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def equal_weight(cls, points, total_mass: float = 1.0) -> "WeightedSample":
        """Equal-weight measure on `points` with the given total mass."""
        points = np.atleast_1d(np.asarray(points, dtype=float))
        w = np.full(points.shape, total_mass / points.size)
        return cls(points, w)

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    def normalized(self) -> "WeightedSample":
        """Same support, weights rescaled to unit total mass."""
        return WeightedSample(self.points, self.weights / self.total_mass)


def wasserstein1(a: WeightedSample, b: WeightedSample) -> float:
    """1-Wasserstein distance between two equal-mass discrete measures.

    Computed as the integral of |CDF_a - CDF_b| over the merged support,
    which is the exact optimal-transport cost in one dimension. Raises
    :class:`MassMismatchError` if the total masses differ by more than
    ``MASS_ATOL``.
    """
    ma, mb = a.total_mass, b.total_mass
    if abs(ma - mb) > MASS_ATOL:
        raise MassMismatchError(
            f"total masses differ ({ma!r} vs {mb!r}); normalize both measures first"
        )
    points = np.concatenate([a.points, b.points])
    # signed weights: +w for a, -w for b; the running sum is CDF_a - CDF_b.
    # Deltas at tied support points are combined first, which makes the sweep
    # exactly symmetric in (a, b): swapping the arguments negates every term.
    deltas = np.concatenate([a.weights, -b.weights])
    support, inverse = np.unique(points, return_inverse=True)
    combined = np.zeros(support.size)
    np.add.at(combined, inverse, deltas)
    cdf_diff = np.cumsum(combined)
    gaps = np.diff(support)
    return float(np.sum(np.abs(cdf_diff[:-1]) * gaps))


def density_to_weighted_sample(v, density) -> WeightedSample:
    """Turn a gridded density into a discrete measure by midpoint mass assignment.

    Each grid point receives the mass density*cell_width, where the cell
    around point k spans the midpoints to its neighbours (half-cells at the
    ends). Zero-mass points are dropped.
    """
    v = np.asarray(v, dtype=float)
    density = np.asarray(density, dtype=float)
    if v.ndim != 1 or v.size < 2 or np.any(np.diff(v) <= 0):
        raise ValueError("v must be a strictly increasing grid with >= 2 points")
    if density.shape != v.shape:
        raise ValueError("density must match the grid shape")
    if np.any(density < 0):
        raise ValueError("density must be non-negative")
    mids = 0.5 * (v[1:] + v[:-1])
    left = np.concatenate([[v[0]], mids])
    right = np.concatenate([mids, [v[-1]]])
    mass = density * (right - left)
    keep = mass > 0
    if not np.any(keep):
        raise ValueError("density carries no mass on the grid")
    return WeightedSample(v[keep], mass[keep])


def density_vs_samples_w1(v, density, samples: WeightedSample, rtol: float = 1e-6) -> float:
    """W1 between a gridded density and a discrete sample of the same mass.

    The density is discretized by midpoint mass assignment and rescaled
    exactly onto the samples' total mass; the rescaling factor must be
    within `rtol` of 1, otherwise the caller has mismatched masses and
    must normalize explicitly.
    """
    grid_measure = density_to_weighted_sample(v, density)
    target = samples.total_mass
    ratio = target / grid_measure.total_mass
    if abs(ratio - 1.0) > rtol:
        raise MassMismatchError(
            f"gridded density mass {grid_measure.total_mass!r} does not match "
            f"sample mass {target!r} within rtol={rtol}"
        )
    rescaled = WeightedSample(grid_measure.points, grid_measure.weights * ratio)
    return wasserstein1(rescaled, samples)
