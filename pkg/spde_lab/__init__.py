"""Spectral-Galerkin simulation of semilinear stochastic evolution equations."""
from __future__ import annotations

from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
import logging

import numpy as np
import numpy.typing as npt

from .const import DEFAULT_CHUNK_SIZE, DOMAIN, VERSION
from .galerkin.errors import InvalidArgument

_LOGGER = logging.getLogger(__name__)

__all__ = ["DOMAIN", "VERSION", "MonteCarloCoordinator", "SimulationFailed", "SpdeLabError"]

ChunkTask = Callable[[range], npt.NDArray[np.float64]]


class MonteCarloCoordinator:
    """Fan sample chunks out to a thread pool and reduce in sample order.

    Chunk boundaries depend only on ``chunk_size``, and per-sample results are
    concatenated in sample-index order, so the output is bit-identical for
    any number of worker threads.
    """

    def __init__(self, threads: int = 1, chunk_size: int = DEFAULT_CHUNK_SIZE) -> None:
        """Initialize the coordinator."""
        if threads < 1:
            raise InvalidArgument(f"threads: must be >= 1, got {threads}")
        if chunk_size < 1:
            raise InvalidArgument(f"chunk_size: must be >= 1, got {chunk_size}")
        self.threads = threads
        self.chunk_size = chunk_size

    def chunks(self, samples: int) -> list[range]:
        """Fixed sample blocks covering 0..samples-1."""
        return [
            range(start, min(start + self.chunk_size, samples))
            for start in range(0, samples, self.chunk_size)
        ]

    def run(self, samples: int, task: ChunkTask) -> npt.NDArray[np.float64]:
        """Run ``task`` on every chunk and stack its per-sample rows."""
        if samples < 1:
            raise InvalidArgument(f"samples: must be >= 1, got {samples}")
        chunks = self.chunks(samples)
        _LOGGER.debug(
            "Running %s samples in %s chunks on %s threads", samples, len(chunks), self.threads
        )
        try:
            if self.threads == 1:
                results = [task(chunk) for chunk in chunks]
            else:
                with ThreadPoolExecutor(max_workers=self.threads) as executor:
                    results = list(executor.map(task, chunks))
        except InvalidArgument:
            raise
        except Exception as err:
            _LOGGER.error("Monte Carlo chunk failed: %s", err)
            raise SimulationFailed(f"Error while simulating samples: {err}") from err
        return np.concatenate(results, axis=0)


class SpdeLabError(Exception):
    """Base error of the experiment runner."""


class SimulationFailed(SpdeLabError):
    """Error to indicate a Monte Carlo run could not complete."""
