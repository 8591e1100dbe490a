"""Labelled random substreams derived from one master seed.

Every random quantity in an experiment comes from ``substream(seed, *labels)``.
Labels are hashed to 32-bit integers (CRC-32 of the UTF-8 text for strings,
the value itself for non-negative ints) and used as the ``spawn_key`` of a
``numpy.random.SeedSequence`` whose entropy is the master seed. Two different
label paths therefore yield statistically independent PCG64 streams, and the
same path always yields the same stream regardless of call order.

Labels used by the package:

* ``("channel", "N=<n>", <split>)``  channel geometry and path phases
* ``("noise", "N=<n>", "snr=<db>", <split>)``  receiver noise
* ``("distortion", "N=<n>")``  the per-experiment hardware instance
* ``("distortion", "N=<n>", "snr=<db>", <split>)``  per-sample refresh mode
* ``("init" | "shuffle", "dist-leanet" | "amp-prenet", "N=<n>", "snr=<db>" | "mixed")``  network
  training, shared by the cascade and the ablation
"""

import zlib

import numpy as np


def _label_key(label):
    if isinstance(label, (int, np.integer)) and not isinstance(label, bool) and label >= 0:
        return int(label) & 0xFFFFFFFF
    return zlib.crc32(str(label).encode("utf-8"))


def seed_sequence(master_seed: int, *labels) -> np.random.SeedSequence:
    if master_seed is None:
        raise ValueError("an explicit master seed is required")
    return np.random.SeedSequence(int(master_seed), spawn_key=tuple(_label_key(lb) for lb in labels))


def substream(master_seed: int, *labels) -> np.random.Generator:
    """Return an independent generator for the given label path."""
    return np.random.Generator(np.random.PCG64(seed_sequence(master_seed, *labels)))


def snr_label(snr_db: float) -> str:
    return f"snr={float(snr_db):g}"
