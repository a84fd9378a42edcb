"""
Seedable counter-based random streams.

Every random draw in the toolkit comes from numpy's Philox generator keyed by
``(seed, stream name)``. Per-example draws use one Philox block (four
uniforms) per example, so the values for example ``i`` depend only on the
seed, the stream name and ``i``: injecting noise in chunks, in parallel or in
any order gives the same labels as a single pass.
"""
import hashlib

import numpy as np

UNIFORMS_PER_EXAMPLE = 4


def stream_key(seed: int, stream: str) -> int:
    """128-bit Philox key for a named stream."""
    digest = hashlib.sha256(f"{int(seed)}:{stream}".encode("utf-8")).digest()
    return int.from_bytes(digest[:16], "little")


def generator(seed: int, stream: str) -> np.random.Generator:
    """Generator for sequential draws (shuffles, initialisation, sampling)."""
    return np.random.Generator(np.random.Philox(key=stream_key(seed, stream)))


def example_uniforms(seed: int, stream: str, num_examples: int, start: int = 0) -> np.ndarray:
    """
    Uniform draws for a contiguous range of examples.

    Args:
        seed: Experiment seed
        stream: Stream name (e.g. "inject-symmetric")
        num_examples: Number of rows to produce
        start: Index of the first example

    Returns:
        (num_examples, 4) array in [0, 1); row ``r`` belongs to example
        ``start + r``.
    """
    bit_generator = np.random.Philox(key=stream_key(seed, stream))
    if start:
        bit_generator.advance(start)
    gen = np.random.Generator(bit_generator)
    return gen.random((num_examples, UNIFORMS_PER_EXAMPLE))
