"""Keyed Boolean permutations and the reversible XOR-register unitary.

``feistel_permute`` realizes a family of bijections F_s on n-bit strings,
indexed by an n-bit key s (n even). Construction, bit-exact:

* Split the input into halves (L, R) of w = n/2 bits each.
* Round keys: k1 = s[0:w], k2 = s[w:n], k3 = k1 XOR k2.
* Round function: f(k, x) = ((x + k) mod 2^w) XOR rotl_w(x XOR k, 1).
* One round maps (L, R) -> (R, L XOR f(k, R)); three rounds are applied.
* The output is finally XOR-whitened with s.

The Feistel structure guarantees a bijection for any round function; the
whitening keeps the family key-sensitive at every width (at n=2 the 1-bit
round function degenerates to zero, so without whitening all keys would
collapse onto a single permutation). Bijectivity is verified by enumeration
in ``verify_bijection``, never assumed.

This family is NOT cryptographically pseudorandom and does not need to be:
every security statement checked in this package comes from averaging over
the key s (and the other session secrets), never from the permutation's
strength.

``apply_Us`` lifts F_s to a unitary on two equal-width registers,
|m>|t> -> |m>|t XOR F_s(m)>, extended linearly. It is self-inverse.
"""

from __future__ import annotations

import numpy as np

from .bits import bits_to_int, int_to_bits, validate_bits
from .errors import ResourceLimitError
from .qsim import PureState, RegisterLayout

MAX_ENUMERATION_QUBITS = 20


def _validate_perm_key(s: str) -> int:
    validate_bits(s, name="permutation key")
    if len(s) % 2 != 0 or len(s) < 2:
        raise ValueError(f"permutation key width must be even and >= 2, got {len(s)}")
    return len(s)


def _rotl(x: np.ndarray | int, half: int):
    return ((x << 1) | (x >> (half - 1))) & ((1 << half) - 1)


def _round_function(k: int, x: np.ndarray | int, half: int):
    return ((x + k) & ((1 << half) - 1)) ^ _rotl(x ^ k, half)


def _permute_ints(s: int, m: np.ndarray | int, n: int):
    half = n // 2
    half_mask = (1 << half) - 1
    left, right = m >> half, m & half_mask
    k1, k2 = s >> half, s & half_mask
    for k in (k1, k2, k1 ^ k2):
        left, right = right, left ^ _round_function(k, right, half)
    return (((left << half) | right) ^ s)


def feistel_permute(s: str, m: str) -> str:
    """The keyed bijection F_s applied to one n-bit input."""
    n = _validate_perm_key(s)
    validate_bits(m, n, "permutation input")
    return int_to_bits(int(_permute_ints(bits_to_int(s), bits_to_int(m), n)), n)


def permutation_table(s: str, n: int) -> np.ndarray:
    """F_s evaluated on all 2^n inputs at once (index m -> F_s(m))."""
    _validate_perm_key(s)
    if len(s) != n:
        raise ValueError(f"key width {len(s)} does not match n={n}")
    if n > MAX_ENUMERATION_QUBITS:
        raise ResourceLimitError(
            f"permutation table enumerates 2^n inputs; n={n} exceeds the "
            f"supported maximum n={MAX_ENUMERATION_QUBITS}"
        )
    return _permute_ints(bits_to_int(s), np.arange(1 << n, dtype=np.int64), n)


def verify_bijection(s: str, n: int, permute=None) -> bool:
    """True iff the permutation is injective over all 2^n inputs.

    ``permute`` may inject an alternative (s, m) -> m' map, e.g. a broken
    test double; by default the shipped Feistel family is checked.
    """
    if n > MAX_ENUMERATION_QUBITS:
        raise ResourceLimitError(
            f"bijectivity check enumerates 2^n inputs; n={n} exceeds the "
            f"supported maximum n={MAX_ENUMERATION_QUBITS}"
        )
    if permute is None:
        table = permutation_table(s, n)
        return int(np.unique(table).size) == (1 << n)
    outputs = {permute(s, int_to_bits(m, n)) for m in range(1 << n)}
    return len(outputs) == (1 << n)


def apply_Us(
    state: PureState, layout: RegisterLayout, s: str, source: str, target: str
) -> PureState:
    """|m>_source |t>_target -> |m>_source |t XOR F_s(m)>_target, linearly.

    Self-inverse (XOR is an involution) and unitary (a basis permutation).
    """
    n = _validate_perm_key(s)
    if source == target:
        raise ValueError("source and target registers must differ")
    if layout.width(source) != n or layout.width(target) != n:
        raise ValueError(
            f"source and target registers must both have width {n}, got "
            f"{layout.width(source)} and {layout.width(target)}"
        )
    if layout.num_qubits != state.num_qubits:
        raise ValueError("layout does not match state width")

    indices = np.arange(state.amplitudes.size)
    m_values = layout.register_values(source, indices)
    table = permutation_table(s, n)
    _, target_stop = layout.span(target)
    shift = layout.num_qubits - target_stop
    images = indices ^ (table[m_values] << shift)

    out = np.empty_like(state.amplitudes)
    out[images] = state.amplitudes
    return PureState(state.num_qubits, out)
