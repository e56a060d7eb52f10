"""Fixed-width bit-string helpers.

Bit strings are plain ``str`` of ``'0'``/``'1'``. Character 0 is the most
significant bit of the integer encoding, so ``"0110"`` encodes 6. All CLI and
JSON output renders bit strings in this fixed-width form.
"""

from __future__ import annotations

from collections.abc import Iterator

import numpy as np


def validate_bits(bits: str, width: int | None = None, name: str = "bit string") -> str:
    if not isinstance(bits, str) or not bits or any(c not in "01" for c in bits):
        raise ValueError(f"{name} must be a nonempty string over {{0,1}}, got {bits!r}")
    if width is not None and len(bits) != width:
        raise ValueError(f"{name} must have width {width}, got width {len(bits)}")
    return bits


def bits_to_int(bits: str) -> int:
    return int(bits, 2)


def int_to_bits(value: int, width: int) -> str:
    if not 0 <= value < (1 << width):
        raise ValueError(f"value {value} does not fit in {width} bits")
    return format(value, f"0{width}b")


def xor_bits(a: str, b: str) -> str:
    if len(a) != len(b):
        raise ValueError(f"width mismatch: {len(a)} vs {len(b)}")
    return format(int(a, 2) ^ int(b, 2), f"0{len(a)}b")


def random_bits(rng: np.random.Generator, width: int) -> str:
    """Uniform random bit string; deterministic under a seeded generator."""
    return "".join("1" if b else "0" for b in rng.integers(0, 2, size=width))


def all_bits(width: int) -> Iterator[str]:
    """All 2**width bit strings in ascending integer order."""
    for value in range(1 << width):
        yield format(value, f"0{width}b")
