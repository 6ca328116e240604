"""Deterministic random-number streams.

Every random draw in the package comes from a PCG64 generator seeded
through numpy's SeedSequence. Streams are split by purpose (and, where
needed, by a per-task index) so that the amount of work done by one
consumer never shifts the draws seen by another. In particular the
per-subgraph solver streams make results independent of scheduling
order, which is what keeps multi-threaded runs bit-identical to
single-threaded ones.
"""

import numpy as np

# Purpose tags for stream derivation. Values are part of the on-disk
# reproducibility story (reports record the root seed and purposes), so
# they must not be renumbered.
GENERATION = 0
SUBSOLVER = 1
WARMUP = 2
DECODER = 3
MCTS = 4

PURPOSE_NAMES = {
    GENERATION: "generation",
    SUBSOLVER: "subsolver",
    WARMUP: "warmup",
    DECODER: "decoder",
    MCTS: "mcts",
}


def stream(seed: int, purpose: int, *key: int) -> np.random.Generator:
    """Return an independent PCG64 generator for (seed, purpose, *key)."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(purpose), *map(int, key)))
    return np.random.Generator(np.random.PCG64(ss))
