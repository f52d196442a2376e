"""Counter-based random streams.

Every draw is addressed by ``(seed, stream, position)``: the Philox key is the
pair ``(seed, stream)`` and ``position`` indexes the flat sequence of 64-bit
output words. A block of draws can therefore be produced independently of any
other block, which is what makes parallel generation schedule-independent.
"""

import numpy as np
from scipy.special import ndtri

STREAM_BROWNIAN = 0
STREAM_BRIDGE = 1
STREAM_INITIAL = 2
STREAM_PROBE = 3
STREAM_BOUNDS = 4

# Philox4x64 emits four 64-bit words per counter increment.
_WORDS_PER_COUNTER = 4
_U64_MAX = 2**64 - 1


def check_seed(seed):
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
    seed = int(seed)
    if not 0 <= seed <= _U64_MAX:
        raise ValueError(f"seed must fit in an unsigned 64-bit integer, got {seed}")
    return seed


def bridge_stream(m, factor):
    """Stream id for refining an ``m``-step grid by ``factor``."""
    return STREAM_BRIDGE + (int(m) << 20) + (int(factor) << 4)


def uniforms(seed, stream, start, count):
    """``count`` uniforms on the open interval (0, 1) starting at word ``start``."""
    key = np.array([check_seed(seed), stream], dtype=np.uint64)
    bitgen = np.random.Philox(key=key)
    block, skip = divmod(int(start), _WORDS_PER_COUNTER)
    if block:
        bitgen.advance(block)
    raw = bitgen.random_raw(int(count) + skip)[skip:]
    out = (raw >> np.uint64(11)).astype(np.float64)
    out += 0.5
    out *= 2.0**-53
    return out


def normals(seed, stream, start, count):
    """Standard normals by inversion, one word per draw."""
    u = uniforms(seed, stream, start, count)
    return ndtri(u, out=u)


def generator(seed, stream):
    """A sequential numpy Generator on its own stream, for auxiliary sampling."""
    key = np.array([check_seed(seed), stream], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
