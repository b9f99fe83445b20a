"""Cylindrical Wiener increments with exact dyadic coupling.

Increments are drawn from a counter-based generator (Philox) keyed by
``(seed, sample id)`` with the mode index in the counter, so entry
``(sample, mode, step)`` never depends on how many samples, modes or steps are
drawn together, nor on which worker draws them.
"""
from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass
import logging
import math
from pathlib import Path
import struct

import numpy as np
import numpy.typing as npt
from scipy.special import ndtri

from .const import (
    BUNDLE_HEADER_FORMAT,
    BUNDLE_MAGIC,
    CONDITIONAL_SERIES_THRESHOLD,
    STREAM_CONVOLUTION,
    STREAM_INCREMENTS,
)
from .errors import InvalidArgument
from .spectral import DiagonalOperator

_LOGGER = logging.getLogger(__name__)

_UINT64_MASK = (1 << 64) - 1


def is_power_of_two(value: int) -> bool:
    return value >= 1 and value & (value - 1) == 0


@dataclass(frozen=True, eq=False)
class NoiseBundle:
    """Per-mode Brownian increments for a block of samples.

    ``increments[s, i, n]`` is the increment of the i-th scalar Brownian motion
    over step n for sample ``first_sample + s``.
    """

    increments: npt.NDArray[np.float64]
    T: float
    seed: int
    first_sample: int = 0

    @property
    def samples(self) -> int:
        return int(self.increments.shape[0])

    @property
    def modes(self) -> int:
        return int(self.increments.shape[1])

    @property
    def N(self) -> int:
        """Number of steps at the bundle's current resolution."""
        return int(self.increments.shape[2])

    @property
    def h(self) -> float:
        return self.T / self.N

    @property
    def sample_ids(self) -> range:
        return range(self.first_sample, self.first_sample + self.samples)

    def matrix(self, sample: int = 0) -> npt.NDArray[np.float64]:
        """M x N increment matrix of one sample."""
        return self.increments[sample]


def _standard_normals(
    seed: int, sample_id: int, mode: int, stream: int, count: int
) -> npt.NDArray[np.float64]:
    key = np.array([seed & _UINT64_MASK, sample_id], dtype=np.uint64)
    counter = np.array([0, mode, stream, 0], dtype=np.uint64)
    raw = np.random.Philox(key=key, counter=counter).random_raw(count)
    # 53-bit midpoint uniforms in (0, 1)
    uniforms = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return ndtri(uniforms)


def _normal_block(
    seed: int, sample_ids: Iterable[int], modes: int, steps: int, stream: int
) -> npt.NDArray[np.float64]:
    sample_ids = list(sample_ids)
    block = np.empty((len(sample_ids), modes, steps))
    for s, sample_id in enumerate(sample_ids):
        for mode in range(modes):
            block[s, mode] = _standard_normals(seed, sample_id, mode, stream, steps)
    return block


def sample_increments(
    modes: int,
    n_max: int,
    T: float,
    seed: int,
    sample_ids: Iterable[int] | None = None,
) -> NoiseBundle:
    """Draw Normal(0, T / n_max) increments for the given samples (default: sample 0)."""
    if modes < 1:
        raise InvalidArgument(f"modes: must be >= 1, got {modes}")
    if not is_power_of_two(n_max):
        raise InvalidArgument(f"n_max: must be a power of two, got {n_max}")
    if not math.isfinite(T) or T <= 0:
        raise InvalidArgument(f"T: must be positive, got {T}")
    ids = range(1) if sample_ids is None else sample_ids
    ids = list(ids)
    if ids and ids != list(range(ids[0], ids[0] + len(ids))):
        raise InvalidArgument("sample_ids: must be a contiguous ascending block")
    normals = _normal_block(seed, ids, modes, n_max, STREAM_INCREMENTS)
    first = ids[0] if ids else 0
    return NoiseBundle(normals * math.sqrt(T / n_max), T, seed, first)


def coarsen(bundle: NoiseBundle, factor: int) -> NoiseBundle:
    """Sum consecutive blocks of ``factor`` steps.

    Blocks are summed as a dyadic tree (pairs, then pairs of pairs, ...), so
    coarsening by 2 twice is bitwise identical to coarsening by 4.
    """
    if factor < 1 or bundle.N % factor != 0 or not is_power_of_two(factor):
        raise InvalidArgument(f"factor {factor} does not divide N={bundle.N}")
    increments = bundle.increments
    while factor > 1:
        increments = increments[..., 0::2] + increments[..., 1::2]
        factor //= 2
    return NoiseBundle(increments, bundle.T, bundle.seed, bundle.first_sample)


def convolution_moments(
    op: DiagonalOperator, h: float
) -> tuple[float, npt.NDArray[np.float64], npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    """Joint law of (dW, I) with I = int_0^h e^{lambda (h - s)} dW_s, per mode.

    Returns Var(dW), Var(I), Cov(dW, I) and the conditional variance
    Var(I | dW) = Var(I) - Cov^2 / h.
    """
    a = op.magnitudes
    x = a * h
    var_i = -np.expm1(-2.0 * x) / (2.0 * a)
    cov = -np.expm1(-x) / a
    with np.errstate(invalid="ignore"):
        conditional = var_i - cov**2 / h
    small = x < CONDITIONAL_SERIES_THRESHOLD
    conditional = np.where(small, h * x**2 * (1.0 - x) / 12.0, conditional)
    return h, var_i, cov, np.maximum(conditional, 0.0)


def convolution_increments(
    op: DiagonalOperator, bundle: NoiseBundle, aux_seed: int
) -> npt.NDArray[np.float64]:
    """Sample the per-step stochastic convolutions jointly with the bundle.

    I = (Cov / h) dW + sqrt(Var(I) - Cov^2 / h) Z with Z from an independent
    stream keyed by ``aux_seed``.  Shape matches ``bundle.increments``.
    """
    if bundle.modes != op.modes:
        raise InvalidArgument(
            f"bundle has {bundle.modes} modes, operator has {op.modes}"
        )
    h, _, cov, conditional = convolution_moments(op, bundle.h)
    normals = _normal_block(
        aux_seed, bundle.sample_ids, bundle.modes, bundle.N, STREAM_CONVOLUTION
    )
    return (cov / h)[:, None] * bundle.increments + np.sqrt(conditional)[:, None] * normals


def coarsen_convolution(
    op: DiagonalOperator, conv: npt.NDArray[np.float64], h_fine: float, factor: int
) -> npt.NDArray[np.float64]:
    """Aggregate per-step convolutions onto a grid ``factor`` times coarser.

    Over a coarse step the convolution is sum_j e^{lambda h (factor - 1 - j)} I_j,
    so coarse X-paths stay coupled to the fine driving noise.
    """
    steps = conv.shape[-1]
    if factor < 1 or steps % factor != 0:
        raise InvalidArgument(f"factor {factor} does not divide N={steps}")
    if conv.shape[-2] != op.modes:
        raise InvalidArgument(f"convolutions have {conv.shape[-2]} modes, operator has {op.modes}")
    lags = np.arange(factor - 1, -1, -1)
    weights = np.exp(op.eigenvalues[:, None] * h_fine * lags[None, :])
    blocks = conv.reshape(*conv.shape[:-1], steps // factor, factor)
    return np.sum(blocks * weights[:, None, :], axis=-1)


def dump_bundle(bundle: NoiseBundle, path: str | Path) -> None:
    """Write a bundle: little-endian header, then row-major float64 data."""
    header = struct.pack(
        BUNDLE_HEADER_FORMAT,
        BUNDLE_MAGIC,
        bundle.modes,
        bundle.N,
        bundle.T,
        bundle.seed & _UINT64_MASK,
        bundle.first_sample,
        bundle.samples,
    )
    with open(path, "wb") as handle:
        handle.write(header)
        handle.write(np.ascontiguousarray(bundle.increments, dtype="<f8").tobytes())
    _LOGGER.debug("Wrote %s samples x %s modes x %s steps to %s", bundle.samples, bundle.modes, bundle.N, path)


def load_bundle(path: str | Path) -> NoiseBundle:
    """Read a bundle written by dump_bundle."""
    data = Path(path).read_bytes()
    size = struct.calcsize(BUNDLE_HEADER_FORMAT)
    magic, modes, steps, T, seed, first, samples = struct.unpack(
        BUNDLE_HEADER_FORMAT, data[:size]
    )
    if magic != BUNDLE_MAGIC:
        raise InvalidArgument(f"{path} is not a noise bundle")
    increments = np.frombuffer(data, dtype="<f8", offset=size)
    if increments.size != samples * modes * steps:
        raise InvalidArgument(f"{path} is truncated")
    increments = increments.reshape(samples, modes, steps).astype(np.float64)
    return NoiseBundle(increments, T, seed, first)
