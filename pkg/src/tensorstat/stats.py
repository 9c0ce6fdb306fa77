"""Sample estimators for covariance and correlation tensors.

The covariance estimators accumulate per-observation outer products of
deviations, in observation order, entirely on multi-index arrays.  The
covariance matrix of the vectorized observations (``covariance_of_vec``)
is computed by an unrelated matrix route, so the documented identity
"matricize of the covariance tensor equals the covariance matrix of the
vec" stays an honest cross-check of the shared linearization instead of a
tautology.

Observations are never weighted and cross estimators pair positionally;
there is no alignment or resampling logic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Union

import numpy as np

from .errors import DegenerateVarianceError, ShapeError
from .tensor_core import (
    DenseTensor,
    Shape,
    SquareTensor,
    as_shape,
    matricize,
    unmatricize,
)

__all__ = [
    "NORMALIZATIONS",
    "SampleSet",
    "CovTensor",
    "CrossCovTensor",
    "CorrTensor",
    "CrossCorrTensor",
    "mean_tensor",
    "covariance",
    "cross_covariance",
    "correlation",
    "cross_correlation",
    "covariance_of_vec",
]

NORMALIZATIONS = ("unbiased", "mle")


@dataclass(frozen=True)
class SampleSet:
    """Finite ordered collection of equally shaped tensors.

    The shape travels separately from the observations so that empty sets
    (a legitimate sampler output) stay well-defined; estimators enforce
    their own minimum observation counts.
    """

    shape: Shape
    observations: tuple[DenseTensor, ...]

    def __post_init__(self) -> None:
        shape = as_shape(self.shape)
        obs = tuple(self.observations)
        for k, t in enumerate(obs):
            if not isinstance(t, DenseTensor):
                raise TypeError(f"observation {k} is not a DenseTensor")
            if t.shape != shape:
                raise ShapeError(
                    f"observation {k} has shape {t.shape}, expected {shape}"
                )
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "observations", obs)

    @classmethod
    def from_observations(cls, observations: Iterable[DenseTensor]) -> "SampleSet":
        """Build from a non-empty iterable, inferring the shape."""
        obs = tuple(observations)
        if not obs:
            raise ValueError(
                "cannot infer the shape of an empty sample set; pass it explicitly"
            )
        return cls(shape=obs[0].shape, observations=obs)

    def __len__(self) -> int:
        return len(self.observations)

    def __iter__(self) -> Iterator[DenseTensor]:
        return iter(self.observations)

    def __getitem__(self, k: int) -> DenseTensor:
        return self.observations[k]

    def to_matrix(self) -> np.ndarray:
        """``N x nstar`` matrix whose rows are the vectorized observations."""
        if not self.observations:
            return np.zeros((0, self.shape.nstar))
        return np.stack([t.data for t in self.observations])


@dataclass(frozen=True)
class CovTensor:
    """Self-covariances of a random tensor's cells.

    Symmetric under block transpose (enforced exactly by construction) with
    a positive semidefinite matricization.
    """

    value: SquareTensor
    normalization: str

    def __post_init__(self) -> None:
        m = matricize(self.value)
        if float(np.abs(m - m.T).max()) > 1e-12:
            raise ValueError("covariance tensor must be symmetric")
        scale = max(1.0, float(np.abs(np.diag(m)).max()))
        min_eig = float(np.linalg.eigvalsh(0.5 * (m + m.T)).min())
        if min_eig < -1e-10 * scale:
            raise ValueError(
                f"covariance matricization must be positive semidefinite, "
                f"min eigenvalue {min_eig:.3e}"
            )


@dataclass(frozen=True)
class CrossCovTensor:
    """Pairwise covariances between cells of two random tensors.

    ``value`` is square when the two shapes coincide and an order-2D
    rectangular tensor (concatenated shape) otherwise.
    """

    value: Union[SquareTensor, DenseTensor]
    normalization: str


@dataclass(frozen=True)
class CorrTensor:
    """Correlations between cells of one tensor; unit diagonal exactly."""

    value: SquareTensor
    stddev: DenseTensor


@dataclass(frozen=True)
class CrossCorrTensor:
    """Correlations between cells of two tensors; no diagonal constraint."""

    value: Union[SquareTensor, DenseTensor]
    stddev_x: DenseTensor
    stddev_y: DenseTensor


def mean_tensor(s: SampleSet) -> DenseTensor:
    """Entrywise arithmetic mean of the observations."""
    if len(s) == 0:
        raise ValueError("mean of an empty sample set is undefined")
    acc = np.zeros(s.shape.dims, order="F")
    for t in s:
        acc += t.array
    return DenseTensor._wrap(acc / len(s), s.shape)


def _denominator(n: int, normalization: str) -> float:
    if normalization not in NORMALIZATIONS:
        raise ValueError(
            f"normalization must be one of {NORMALIZATIONS}, got {normalization!r}"
        )
    if normalization == "unbiased":
        if n < 2:
            raise ValueError("unbiased normalization requires at least two observations")
        return float(n - 1)
    if n < 1:
        raise ValueError("mle normalization requires at least one observation")
    return float(n)


def cross_covariance(
    sx: SampleSet, sy: SampleSet, normalization: str = "unbiased"
) -> CrossCovTensor:
    """Accumulated outer products of positionally paired deviations.

    Entry ``(i1..iD, j1..jD)`` of the result is the sample covariance
    between cell ``i`` of the first tensor and cell ``j`` of the second.
    Swapping the arguments transposes the index blocks bit-for-bit, because
    the products commute and the accumulation order is fixed.
    """
    if len(sx) != len(sy):
        raise ValueError(
            f"sample sets must pair positionally, got {len(sx)} and {len(sy)} observations"
        )
    denom = _denominator(len(sx), normalization)
    mx = mean_tensor(sx).array
    my = mean_tensor(sy).array
    acc = np.zeros(sx.shape.dims + sy.shape.dims, order="F")
    for xt, yt in zip(sx, sy):
        acc += np.multiply.outer(xt.array - mx, yt.array - my)
    value_arr = acc / denom
    if sx.shape == sy.shape:
        value: Union[SquareTensor, DenseTensor] = SquareTensor._wrap(value_arr, sx.shape)
    else:
        value = DenseTensor._wrap(value_arr, Shape(sx.shape.dims + sy.shape.dims))
    return CrossCovTensor(value=value, normalization=normalization)


def covariance(s: SampleSet, normalization: str = "unbiased") -> CovTensor:
    """Self covariance tensor of a sample set.

    The result is averaged with its block transpose before wrapping; the
    accumulation is already symmetric bit-for-bit, so this is a no-op that
    pins the symmetry invariant exactly rather than approximately.
    """
    cross = cross_covariance(s, s, normalization)
    m = matricize(cross.value)
    value = unmatricize(0.5 * (m + m.T), s.shape)
    return CovTensor(value=value, normalization=normalization)


def covariance_of_vec(s: SampleSet, normalization: str = "unbiased") -> np.ndarray:
    """Covariance matrix of the vectorized observations.

    Computed entirely in vec space (stack, center, one matrix product),
    sharing no code with the tensor estimator; the matricization of
    :func:`covariance` must reproduce it within round-off.
    """
    denom = _denominator(len(s), normalization)
    v = s.to_matrix()
    d = v - v.mean(axis=0)
    return d.T @ d / denom


def _cell_stddev(s: SampleSet) -> np.ndarray:
    # Per-cell MLE standard deviations; exactly zero for constant cells.
    mean = mean_tensor(s).array
    acc = np.zeros(s.shape.dims, order="F")
    for t in s:
        acc += (t.array - mean) ** 2
    return np.sqrt(acc / len(s))


def _first_degenerate_cell(mask_flat: np.ndarray, shape: Shape) -> tuple[int, ...]:
    k = int(np.flatnonzero(mask_flat)[0])
    return tuple(int(i) for i in np.unravel_index(k, shape.dims, order="F"))


def _check_correlation_bounds(r: np.ndarray) -> None:
    worst = float(np.abs(r).max())
    if worst > 1.0 + 1e-12:
        raise ValueError(
            f"correlation entry out of [-1, 1] beyond round-off: {worst!r}"
        )


def correlation(s: SampleSet, on_degenerate: str = "error") -> CorrTensor:
    """Correlation tensor with an exactly unit diagonal.

    The diagonal is written analytically rather than recomputed as a
    ratio.  ``on_degenerate`` picks the contract for constant cells:
    ``"error"`` (default) raises naming the first offending multi-index,
    ``"substitute"`` writes 0 off the diagonal and 1 on it.
    """
    if on_degenerate not in ("error", "substitute"):
        raise ValueError(f"on_degenerate must be 'error' or 'substitute', got {on_degenerate!r}")
    cov = covariance(s, "mle")
    c = np.array(matricize(cov.value), copy=True)
    var = np.diag(c).copy()
    degenerate = var <= 0.0
    if degenerate.any() and on_degenerate == "error":
        cell = _first_degenerate_cell(degenerate, s.shape)
        raise DegenerateVarianceError(
            f"cell {cell} has zero sample variance", index=cell
        )
    sd = np.sqrt(np.where(degenerate, 1.0, var))
    r = c / np.outer(sd, sd)
    r[degenerate, :] = 0.0
    r[:, degenerate] = 0.0
    np.fill_diagonal(r, 1.0)
    _check_correlation_bounds(r)
    stddev = DenseTensor._wrap(np.sqrt(var).reshape(s.shape.dims, order="F"), s.shape)
    return CorrTensor(value=unmatricize(r, s.shape), stddev=stddev)


def cross_correlation(
    sx: SampleSet, sy: SampleSet, on_degenerate: str = "error"
) -> CrossCorrTensor:
    """Cross-correlations: covariances of cellwise standardized variables.

    Entries lie in [-1, 1] up to round-off; there is no unit-diagonal
    constraint.  Degenerate (constant) cells follow the same contract as
    :func:`correlation`, with substituted entries set to 0.
    """
    if on_degenerate not in ("error", "substitute"):
        raise ValueError(f"on_degenerate must be 'error' or 'substitute', got {on_degenerate!r}")
    cross = cross_covariance(sx, sy, "mle")
    sdx = _cell_stddev(sx).ravel(order="F")
    sdy = _cell_stddev(sy).ravel(order="F")
    degx = sdx <= 0.0
    degy = sdy <= 0.0
    if on_degenerate == "error":
        if degx.any():
            cell = _first_degenerate_cell(degx, sx.shape)
            raise DegenerateVarianceError(
                f"first-argument cell {cell} has zero sample variance", index=cell
            )
        if degy.any():
            cell = _first_degenerate_cell(degy, sy.shape)
            raise DegenerateVarianceError(
                f"second-argument cell {cell} has zero sample variance", index=cell
            )
    nx, ny = sx.shape.nstar, sy.shape.nstar
    c = np.array(cross.value.data, copy=True).reshape((nx, ny), order="F")
    r = c / np.outer(np.where(degx, 1.0, sdx), np.where(degy, 1.0, sdy))
    r[degx, :] = 0.0
    r[:, degy] = 0.0
    _check_correlation_bounds(r)
    stddev_x = DenseTensor._wrap(sdx.reshape(sx.shape.dims, order="F"), sx.shape)
    stddev_y = DenseTensor._wrap(sdy.reshape(sy.shape.dims, order="F"), sy.shape)
    if sx.shape == sy.shape:
        value: Union[SquareTensor, DenseTensor] = unmatricize(r, sx.shape)
    else:
        value = DenseTensor._wrap(
            r.reshape(sx.shape.dims + sy.shape.dims, order="F"),
            Shape(sx.shape.dims + sy.shape.dims),
        )
    return CrossCorrTensor(value=value, stddev_x=stddev_x, stddev_y=stddev_y)
