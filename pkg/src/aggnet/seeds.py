"""Named RNG substreams derived from a single root seed.

Every source of randomness in an experiment (topology drop, fading
innovations, activation draws, policy sampling, filter init, ...) gets its
own independent generator so that changing, say, the number of policy draws
never perturbs the channel trajectory.
"""

import numpy as np

STREAMS = (
    "topology",
    "fading",
    "activation",
    "policy",
    "init",
    "nodestate",
    "baseline",
    "transfer",
)


def stream_rng(root_seed: int, name: str, extra: tuple = ()) -> np.random.Generator:
    """Return the generator for the named substream of ``root_seed``.

    ``extra`` disambiguates repeated uses of the same stream (e.g. one
    fading stream per transference trial).
    """
    idx = STREAMS.index(name)
    ss = np.random.SeedSequence((int(root_seed), idx) + tuple(int(e) for e in extra))
    return np.random.default_rng(ss)
