"""Minimal dense quantum-state simulator.

Pure states over k qubits, density matrices, single-qubit gate layers,
register-addressed computational-basis measurement, partial trace and trace
distance. Everything is dense: the workloads in this package never exceed a
few dozen thousand amplitudes, where dense numpy is both the simplest and the
fastest option.

Conventions (fixed so traces are bit-exact across runs):

* Bit-string character 0 (leftmost) is the most significant bit of the
  basis-state index; qubit ``q`` therefore occupies index bit ``k - 1 - q``.
* Registers are laid out in ascending qubit order, message register first.
* States are compared through density matrices or outcome probabilities,
  never amplitude-wise: global phases (the ±1, ±i from Y layers and
  anticommutation swaps) are unobservable.

All operations are pure functions on immutable values; nothing here holds
shared mutable state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bits import bits_to_int, int_to_bits, validate_bits

ATOL_STATE = 1e-9  # structural invariants: norms, traces, hermiticity
ATOL_GATE = 1e-12  # exact 2x2 gate algebra

_INDEX_CACHE: dict[int, np.ndarray] = {}


def _indices(size: int) -> np.ndarray:
    """Read-only 0..size-1 array, cached (index maps are built constantly)."""
    cached = _INDEX_CACHE.get(size)
    if cached is None:
        cached = np.arange(size)
        cached.setflags(write=False)
        _INDEX_CACHE[size] = cached
    return cached


@dataclass(frozen=True)
class Gate:
    """A named single-qubit unitary with a fixed 2x2 matrix convention."""

    name: str
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError(f"gate {self.name!r} must be 2x2, got shape {m.shape}")
        if np.max(np.abs(m.conj().T @ m - np.eye(2))) > ATOL_GATE:
            raise ValueError(f"gate {self.name!r} is not unitary")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


X = Gate("X", [[0, 1], [1, 0]])
Y = Gate("Y", [[0, -1j], [1j, 0]])
Z = Gate("Z", [[1, 0], [0, -1]])
H = Gate("H", np.array([[1, 1], [1, -1]]) / math.sqrt(2))
I = Gate("I", [[1, 0], [0, 1]])

GATES = {g.name: g for g in (X, Y, Z, H, I)}


@dataclass(frozen=True)
class PureState:
    """A k-qubit pure state as a dense complex amplitude vector."""

    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        # asarray, not array: construction sites hand over ownership, and the
        # array is frozen below either way.
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (1 << self.num_qubits,):
            raise ValueError(
                f"amplitude vector must have length 2**{self.num_qubits}, "
                f"got shape {amps.shape}"
            )
        norm = np.vdot(amps, amps).real
        if abs(norm - 1.0) > ATOL_STATE:
            raise ValueError(f"state is not normalized: |psi|^2 = {norm}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis(cls, bits: str) -> PureState:
        """Computational-basis state |bits>."""
        validate_bits(bits)
        amps = np.zeros(1 << len(bits), dtype=complex)
        amps[bits_to_int(bits)] = 1.0
        return cls(len(bits), amps)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class DensityMatrix:
    """A 2^n x 2^n Hermitian, trace-1, positive-semidefinite matrix."""

    num_qubits: int
    entries: np.ndarray

    def __post_init__(self):
        dim = 1 << self.num_qubits
        m = np.array(self.entries, dtype=complex)
        if m.shape != (dim, dim):
            raise ValueError(f"density matrix must be {dim}x{dim}, got {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > ATOL_STATE:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1.0) > ATOL_STATE:
            raise ValueError(f"density matrix trace is {np.trace(m)}, expected 1")
        if np.min(np.linalg.eigvalsh(m)) < -ATOL_STATE:
            raise ValueError("density matrix has a significantly negative eigenvalue")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)


@dataclass(frozen=True)
class RegisterLayout:
    """Maps named registers onto contiguous, disjoint qubit spans.

    ``spans`` is an ordered tuple of ``(register_id, start_qubit, stop_qubit)``
    covering qubits 0..num_qubits exactly, in ascending order.
    """

    spans: tuple[tuple[str, int, int], ...]

    def __post_init__(self):
        expected_start = 0
        seen = set()
        for reg, start, stop in self.spans:
            if reg in seen:
                raise ValueError(f"duplicate register id {reg!r}")
            if start != expected_start or stop <= start:
                raise ValueError(f"register spans must be contiguous and ascending: {self.spans}")
            seen.add(reg)
            expected_start = stop

    @property
    def num_qubits(self) -> int:
        return self.spans[-1][2]

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(reg for reg, _, _ in self.spans)

    def span(self, reg: str) -> tuple[int, int]:
        for name, start, stop in self.spans:
            if name == reg:
                return start, stop
        raise ValueError(f"register {reg!r} not in layout {self.ids}")

    def width(self, reg: str) -> int:
        start, stop = self.span(reg)
        return stop - start

    def lift_mask(self, reg: str, bits: str | None = None) -> str:
        """Expand a per-register mask to a full-width mask (all-ones if None)."""
        start, stop = self.span(reg)
        if bits is None:
            bits = "1" * (stop - start)
        validate_bits(bits, stop - start, f"mask for register {reg}")
        return "0" * start + bits + "0" * (self.num_qubits - stop)

    def append(self, reg: str, width: int) -> RegisterLayout:
        return RegisterLayout(self.spans + ((reg, self.num_qubits, self.num_qubits + width),))

    def without(self, reg: str) -> RegisterLayout:
        start, stop = self.span(reg)
        width = stop - start
        spans = []
        for name, a, b in self.spans:
            if name == reg:
                continue
            if a >= stop:
                a, b = a - width, b - width
            spans.append((name, a, b))
        return RegisterLayout(tuple(spans))

    def register_values(self, reg: str, indices: np.ndarray) -> np.ndarray:
        """Register contents (as integers) of the given basis-state indices."""
        start, stop = self.span(reg)
        shift = self.num_qubits - stop
        return (indices >> shift) & ((1 << (stop - start)) - 1)


def single_register_layout(reg: str, width: int) -> RegisterLayout:
    return RegisterLayout(((reg, 0, width),))


def apply_gate_layer(state: PureState, gate: Gate, mask: str) -> PureState:
    """Apply ``gate`` to every qubit whose mask bit is 1.

    The mask covers the whole state; use ``RegisterLayout.lift_mask`` to
    target a register slice.
    """
    validate_bits(mask, name="gate-layer mask")
    if len(mask) != state.num_qubits:
        raise ValueError(
            f"mask width {len(mask)} does not match state width {state.num_qubits}"
        )
    psi = state.amplitudes.reshape((2,) * state.num_qubits)
    for qubit, bit in enumerate(mask):
        if bit == "1":
            psi = np.moveaxis(np.tensordot(gate.matrix, psi, axes=([1], [qubit])), 0, qubit)
    return PureState(state.num_qubits, psi.reshape(-1))


def born_weights(state: PureState, layout: RegisterLayout, reg: str) -> np.ndarray:
    """Outcome distribution of a computational-basis measurement of ``reg``."""
    if layout.num_qubits != state.num_qubits:
        raise ValueError("layout does not match state width")
    start, stop = layout.span(reg)
    k = state.num_qubits
    probs = state.probabilities().reshape((2,) * k)
    other_axes = tuple(q for q in range(k) if not start <= q < stop)
    if other_axes:
        probs = probs.sum(axis=other_axes)
    return probs.reshape(-1)


def measure_register(
    state: PureState, layout: RegisterLayout, reg: str, rng: np.random.Generator
) -> tuple[str, PureState, float]:
    """Born-rule measurement of one register.

    Returns the sampled outcome (as a bit string), the renormalized
    post-measurement state, and the Born weight of the sampled outcome.
    """
    width = layout.width(reg)
    weights = born_weights(state, layout, reg)
    cumulative = np.cumsum(weights)
    draw = rng.random() * cumulative[-1]
    outcome = min(int(np.searchsorted(cumulative, draw, side="right")), weights.size - 1)
    probability = float(weights[outcome])

    keep = layout.register_values(reg, _indices(state.amplitudes.size)) == outcome
    post = np.where(keep, state.amplitudes, 0.0) / math.sqrt(probability)
    return int_to_bits(outcome, width), PureState(state.num_qubits, post), probability


def xor_register(
    state: PureState, layout: RegisterLayout, reg: str, bits: str
) -> PureState:
    """XOR a constant into one register: |t> -> |t XOR bits>.

    Exactly equivalent to an X gate layer on the register's set bits (X is a
    phase-free basis permutation); implemented as index arithmetic so wide
    states stay cheap.
    """
    start, stop = layout.span(reg)
    validate_bits(bits, stop - start, f"XOR mask for register {reg}")
    value = bits_to_int(bits)
    if value == 0:
        return state
    shift = layout.num_qubits - stop
    indices = _indices(state.amplitudes.size)
    return PureState(state.num_qubits, state.amplitudes[indices ^ (value << shift)])


def project_register(
    state: PureState, layout: RegisterLayout, reg: str, outcome: str
) -> tuple[PureState, float]:
    """Project one register onto |outcome> and renormalize, without sampling.

    Returns the collapsed state and the Born weight of the outcome. Used for
    exact branch-by-branch probability arithmetic. Raises on a (numerically)
    impossible outcome.
    """
    width = layout.width(reg)
    validate_bits(outcome, width, "projection outcome")
    target = bits_to_int(outcome)
    keep = layout.register_values(reg, _indices(state.amplitudes.size)) == target
    weight = float(np.sum(np.abs(state.amplitudes[keep]) ** 2))
    if weight <= ATOL_STATE**2:
        raise ValueError(f"outcome |{outcome}> of register {reg!r} has zero weight")
    post = np.where(keep, state.amplitudes, 0.0) / math.sqrt(weight)
    return PureState(state.num_qubits, post), weight


def tensor_basis(state: PureState, bits: str) -> PureState:
    """Append a fresh register in basis state |bits> at the low-order end."""
    validate_bits(bits)
    block = 1 << len(bits)
    amps = np.zeros(state.amplitudes.size * block, dtype=complex)
    amps[bits_to_int(bits)::block] = state.amplitudes
    return PureState(state.num_qubits + len(bits), amps)


def remove_basis_register(
    state: PureState, layout: RegisterLayout, reg: str, outcome: str
) -> tuple[PureState, RegisterLayout]:
    """Drop a register known to be in the basis state |outcome>.

    Requires all amplitude mass on the given register value (within 1e-9);
    measured-and-collapsed registers always satisfy this.
    """
    start, stop = layout.span(reg)
    validate_bits(outcome, stop - start, "register outcome")
    indices = np.arange(state.amplitudes.size)
    selected = layout.register_values(reg, indices) == bits_to_int(outcome)
    mass = float(np.sum(np.abs(state.amplitudes[selected]) ** 2))
    if abs(mass - 1.0) > ATOL_STATE:
        raise ValueError(
            f"register {reg!r} is not in basis state |{outcome}> (mass {mass})"
        )
    amps = state.amplitudes[selected] / math.sqrt(mass)
    return PureState(state.num_qubits - (stop - start), amps), layout.without(reg)


def to_density(state: PureState) -> DensityMatrix:
    """Outer product |psi><psi|; global phase cancels."""
    return DensityMatrix(
        state.num_qubits, np.outer(state.amplitudes, state.amplitudes.conj())
    )


def partial_trace(
    rho: DensityMatrix, layout: RegisterLayout, keep: set[str] | tuple[str, ...]
) -> DensityMatrix:
    """Reduced state over the kept registers (in layout order)."""
    keep_set = set(keep)
    if not keep_set:
        raise ValueError("keep set must not be empty")
    unknown = keep_set - set(layout.ids)
    if unknown:
        raise ValueError(f"unknown registers in keep set: {sorted(unknown)}")
    if layout.num_qubits != rho.num_qubits:
        raise ValueError("layout does not match density-matrix width")

    k = rho.num_qubits
    kept_qubits = []
    for reg, start, stop in layout.spans:
        if reg in keep_set:
            kept_qubits.extend(range(start, stop))
    kept = set(kept_qubits)

    row = list(range(k))
    col = [k + q if q in kept else q for q in range(k)]
    out = [q for q in kept_qubits] + [k + q for q in kept_qubits]
    reduced = np.einsum(rho.entries.reshape((2,) * (2 * k)), row + col, out)
    dim = 1 << len(kept_qubits)
    return DensityMatrix(len(kept_qubits), reduced.reshape(dim, dim))


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """(1/2) * sum of |eigenvalues| of rho - sigma."""
    if rho.num_qubits != sigma.num_qubits:
        raise ValueError(
            f"dimension mismatch: {rho.num_qubits} vs {sigma.num_qubits} qubits"
        )
    eigs = np.linalg.eigvalsh(rho.entries - sigma.entries)
    return float(min(max(0.5 * np.sum(np.abs(eigs)), 0.0), 1.0))


def maximally_mixed(num_qubits: int) -> DensityMatrix:
    """I / 2^k: the state carrying zero information about its input."""
    if num_qubits < 1:
        raise ValueError("need at least one qubit")
    dim = 1 << num_qubits
    return DensityMatrix(num_qubits, np.eye(dim, dtype=complex) / dim)


def state_to_json(state: PureState) -> dict:
    return {
        "num_qubits": state.num_qubits,
        "amps": [[float(a.real), float(a.imag)] for a in state.amplitudes],
    }


def state_from_json(payload: dict) -> PureState:
    amps = np.array([complex(re, im) for re, im in payload["amps"]])
    return PureState(payload["num_qubits"], amps)


def density_to_json(rho: DensityMatrix) -> dict:
    flat = rho.entries.reshape(-1)
    return {
        "num_qubits": rho.num_qubits,
        "entries": [[float(e.real), float(e.imag)] for e in flat],
    }


def density_from_json(payload: dict) -> DensityMatrix:
    dim = 1 << payload["num_qubits"]
    flat = np.array([complex(re, im) for re, im in payload["entries"]])
    return DensityMatrix(payload["num_qubits"], flat.reshape(dim, dim))
