# This code is part of optotherm and is licensed under the MIT license.
"""
Noisy averaged periodograms drawn from a model spectrum.

Each bin of an average of ``M`` periodograms is the model value times
``X / 2M`` with ``X`` chi-squared with ``2M`` degrees of freedom, i.e.
``Gamma(M, 1) / M``. Variates come from the inverse CDF of one uniform
per bin; uniforms come from a Philox counter-based generator keyed by
``(seed, side, chunk)`` over fixed-size chunks of bins. The output is
therefore independent of how many workers generate it.
"""
from __future__ import annotations

import logging

import numpy as np
from joblib import Parallel, delayed
from scipy.special import gammaincinv

from .errors import NonPositiveModelError
from .settings import NoiseSettings
from .spectra import Side, SidebandSpectrum

logger = logging.getLogger(__name__)

CHUNK_SIZE = 4096
"""Bins per independently keyed random stream; part of the output format."""

_SIDE_STREAM = {Side.RED: 0, Side.BLUE: 1}


def _chunk_rng(seed: int, stream: int, chunk: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=seed, spawn_key=(stream, chunk))
    return np.random.Generator(np.random.Philox(seq))


def _draw_chunk(psd: np.ndarray, n_avg: int, seed: int, stream: int,
                chunk: int) -> np.ndarray:
    uniforms = _chunk_rng(seed, stream, chunk).random(len(psd))
    return psd * (gammaincinv(n_avg, uniforms) / n_avg)


def point_seed(master_seed: int, index: int) -> int:
    """Seed of sweep point ``index``; unaffected by other points."""
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=(index,))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def synthesize(model: SidebandSpectrum, settings: NoiseSettings, *,
               n_jobs: int = 1) -> SidebandSpectrum:
    """Draw a measured spectrum from ``model``.

    Parameters
    ----------
    model : SidebandSpectrum
        noiseless spectrum; every bin must be strictly positive
    settings : NoiseSettings
        seed, averaging count and the noiseless switch
    n_jobs : int
        worker threads; the result does not depend on it

    Raises
    ------
    NonPositiveModelError
        if any model bin is zero or negative
    """
    if not np.all(model.psd > 0):
        bad = int(np.argmin(model.psd))
        raise NonPositiveModelError(
            f"model bin {bad} at {model.freqs[bad]:.6g} Hz is "
            f"{model.psd[bad]:.3g}; synthesis needs a positive model")

    metadata = model.metadata
    metadata.update({'seed': settings.seed, 'n_avg': settings.n_avg,
                     'noiseless': settings.noiseless})
    if settings.noiseless:
        return SidebandSpectrum(side=model.side, freqs=model.freqs,
                                psd=model.psd, n_avg=settings.n_avg,
                                units=model.units, metadata=metadata)

    stream = _SIDE_STREAM[model.side]
    starts = range(0, len(model), CHUNK_SIZE)
    chunks = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_draw_chunk)(model.psd[start:start + CHUNK_SIZE],
                             settings.n_avg, settings.seed, stream,
                             start // CHUNK_SIZE)
        for start in starts
    )
    logger.debug("synthesized %s sideband, %d bins, M=%d, seed=%d",
                 model.side.value, len(model), settings.n_avg, settings.seed)
    return SidebandSpectrum(side=model.side, freqs=model.freqs,
                            psd=np.concatenate(chunks), n_avg=settings.n_avg,
                            units=model.units, metadata=metadata)
