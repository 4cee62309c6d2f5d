"""Seeded random substreams.

Every consumer derives its generator from ``(seed, stream, *key)`` through
:class:`numpy.random.SeedSequence` spawn keys, so results never depend on
the order in which streams are created.  Column-wise generation is done in
fixed-size blocks of columns, each block with its own substream: the first
``n`` columns of a draw are the same whatever the total number of columns,
and blocks can be generated in any order.
"""

import numpy as np

BLOCK_COLUMNS = 4096

# stream identifiers; values are part of the reproducibility contract
TRUTH = 1
DATA = 2
MASK = 3
TPM = 4
SPLIT = 5


def generator(seed, stream, *key):
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream),) + tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def column_blocks(n, block=BLOCK_COLUMNS):
    """Yield ``(block_index, start, stop)`` covering columns ``0..n-1``."""
    for b, start in enumerate(range(0, n, block)):
        yield b, start, min(start + block, n)


def blockwise(n, seed, stream, draw, block=BLOCK_COLUMNS):
    """Concatenate per-block draws along the column axis.

    ``draw(gen, size)`` must return an array whose last axis has length
    ``size``; it is always called with the full block size so that a block
    is identical regardless of how many of its columns are kept.
    """
    parts = []
    for b, start, stop in column_blocks(n, block):
        out = draw(generator(seed, stream, b), block)
        parts.append(out[..., : stop - start])
    if not parts:
        return draw(generator(seed, stream, 0), 0)
    return np.concatenate(parts, axis=-1)
