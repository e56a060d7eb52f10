"""Private-quantum-channel key families and their verifiers.

A family pairs two single-qubit gates (u1, u2). A key is a pair of n-bit
strings (alpha, beta) drawn uniformly, and the keyed unitary is the layer
product u1^alpha u2^beta (the u2 layer acts on the state first). When the
gate pair anticommutes and {u1^a u2^b} forms an orthonormal operator basis,
averaging the conjugated state over all 2^(2n) keys yields the maximally
mixed state for every input: a quantum one-time pad.

Four named families ship:

* PQC1 = (X, Z)   perfect, but maps basis states to basis states
* PQC2 = (X, Y)   perfect, but maps basis states to basis states
* PQC3 = (X, H)   NOT perfect: the gate pair fails both verifier checks
* PQC4 = (Y, H)   perfect, and conjugate-codes basis states (the default)

PQC3 still encrypts and decrypts (its gates are unitary); only the verifiers
flag it. The workbench's job is to demonstrate the failure, not prevent it.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import reduce

import numpy as np

from . import qsim
from .bits import all_bits, random_bits, validate_bits
from .errors import ResourceLimitError
from .qsim import DensityMatrix, Gate, PureState, RegisterLayout

MAX_AVERAGE_QUBITS = 4  # 2^(2n) conjugations of a 2^n-dim matrix


@dataclass(frozen=True)
class PqcFamily:
    family_id: str
    u1: Gate
    u2: Gate


PQC1 = PqcFamily("PQC1", qsim.X, qsim.Z)
PQC2 = PqcFamily("PQC2", qsim.X, qsim.Y)
PQC3 = PqcFamily("PQC3", qsim.X, qsim.H)
PQC4 = PqcFamily("PQC4", qsim.Y, qsim.H)

FAMILIES = {f.family_id: f for f in (PQC1, PQC2, PQC3, PQC4)}


def family_by_name(name: str) -> PqcFamily:
    """Look up a family by its CLI name (case-insensitive)."""
    family = FAMILIES.get(name.upper())
    if family is None:
        raise ValueError(f"unknown PQC family {name!r}; expected one of pqc1..pqc4")
    return family


@dataclass(frozen=True)
class PqcKey:
    alpha: str
    beta: str

    def __post_init__(self):
        validate_bits(self.alpha, name="alpha")
        validate_bits(self.beta, len(self.alpha), name="beta")

    @property
    def width(self) -> int:
        return len(self.alpha)


def sample_key(n: int, rng: np.random.Generator) -> PqcKey:
    """Uniform, independent alpha and beta; deterministic under a fixed seed."""
    if n < 1:
        raise ValueError("key width must be at least 1")
    return PqcKey(random_bits(rng, n), random_bits(rng, n))


def pqc_apply(
    state: PureState,
    family: PqcFamily,
    key: PqcKey,
    direction: str = "encrypt",
    layout: RegisterLayout | None = None,
    register: str | None = None,
) -> PureState:
    """Encrypt or decrypt a state (or one register of it) under a keyed layer.

    Encryption applies the u2^beta layer first, then u1^alpha; decryption is
    the adjoint order. Decrypt-after-encrypt with the same key is the identity
    on density matrices.
    """
    if direction not in ("encrypt", "decrypt"):
        raise ValueError(f"direction must be 'encrypt' or 'decrypt', got {direction!r}")
    if layout is None:
        if key.width != state.num_qubits:
            raise ValueError(
                f"key width {key.width} does not match state width {state.num_qubits}"
            )
        alpha_mask, beta_mask = key.alpha, key.beta
    else:
        if register is None:
            raise ValueError("register required when a layout is given")
        alpha_mask = layout.lift_mask(register, key.alpha)
        beta_mask = layout.lift_mask(register, key.beta)

    if direction == "encrypt":
        state = qsim.apply_gate_layer(state, family.u2, beta_mask)
        return qsim.apply_gate_layer(state, family.u1, alpha_mask)
    state = qsim.apply_gate_layer(state, family.u1, alpha_mask)
    return qsim.apply_gate_layer(state, family.u2, beta_mask)


def _layer_unitary(family: PqcFamily, alpha: str, beta: str, u1_first: bool = True) -> np.ndarray:
    """Dense matrix of the n-qubit layer product u1^alpha u2^beta (or reversed)."""
    factors = []
    for a, b in zip(alpha, beta):
        first = family.u1.matrix if a == "1" else np.eye(2)
        second = family.u2.matrix if b == "1" else np.eye(2)
        factors.append(first @ second if u1_first else second @ first)
    return reduce(np.kron, factors)


def worker_count() -> int:
    """Worker cap from QNK_THREADS; defaults to serial execution."""
    raw = os.environ.get("QNK_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def perfect_encryption_average(
    family: PqcFamily, rho: DensityMatrix, workers: int | None = None
) -> DensityMatrix:
    """Exact uniform average of U_k rho U_k^dagger over all 2^(2n) keys.

    For a perfect family this equals I/2^n for every rho. The key space may be
    partitioned across worker threads; partial sums are combined in fixed
    partition order, so parallel and serial results agree to 1e-12.
    """
    n = rho.num_qubits
    if n > MAX_AVERAGE_QUBITS:
        raise ResourceLimitError(
            f"perfect_encryption_average enumerates 2^(2n) keys; n={n} exceeds "
            f"the supported maximum n={MAX_AVERAGE_QUBITS}"
        )
    keys = [(a, b) for a in all_bits(n) for b in all_bits(n)]

    def partial(chunk: list[tuple[str, str]]) -> np.ndarray:
        acc = np.zeros_like(rho.entries)
        for alpha, beta in chunk:
            u = _layer_unitary(family, alpha, beta)
            acc += u @ rho.entries @ u.conj().T
        return acc

    workers = worker_count() if workers is None else max(1, workers)
    if workers == 1:
        total = partial(keys)
    else:
        chunks = [keys[i::workers] for i in range(workers)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(partial, chunks))
        total = reduce(np.add, partials)
    return DensityMatrix(n, total / len(keys))


def anticommutation_check(family: PqcFamily) -> bool:
    """True iff u1 u2 + u2 u1 = 0 entry-wise within 1e-12."""
    u1, u2 = family.u1.matrix, family.u2.matrix
    return bool(np.max(np.abs(u1 @ u2 + u2 @ u1)) <= qsim.ATOL_GATE)


def orthonormal_basis_check(family: PqcFamily) -> tuple[bool, dict]:
    """Check that {u1^a u2^b : a,b in {0,1}} is an orthonormal operator basis.

    Orthonormality is under <A,B> = tr(A^dagger B)/2. Verifying at the
    single-qubit level suffices: tensor-product families inherit the property
    (asserted by an exhaustive two-qubit spot check in the test suite).
    """
    ops = [_layer_unitary(family, a, b) for a in "01" for b in "01"]
    gram = np.array(
        [[np.trace(p.conj().T @ q) / 2 for q in ops] for p in ops], dtype=complex
    )
    deviation = float(np.max(np.abs(gram - np.eye(4))))
    ok = deviation <= qsim.ATOL_GATE
    report = {
        "family": family.family_id,
        "orthonormal": ok,
        "max_gram_deviation": deviation,
    }
    return ok, report


@dataclass(frozen=True)
class BasisCoefficients:
    """Expansion of a state in the family's unitary operator basis."""

    family_id: str
    num_qubits: int
    coefficients: dict[tuple[str, str], complex]

    def reconstruct(self) -> np.ndarray:
        family = FAMILIES[self.family_id]
        dim = 1 << self.num_qubits
        acc = np.zeros((dim, dim), dtype=complex)
        for (alpha, beta), coeff in self.coefficients.items():
            acc += coeff * _layer_unitary(family, alpha, beta)
        return acc


def basis_decompose(rho: DensityMatrix, family: PqcFamily) -> BasisCoefficients:
    """Coefficients a_(alpha,beta) = tr(rho u2^beta u1^alpha) / 2^n.

    The sum of a_(alpha,beta) u1^alpha u2^beta reconstructs rho, and the
    identity coefficient of any trace-1 state is exactly 2^-n.
    """
    ok, report = orthonormal_basis_check(family)
    if not ok:
        raise ValueError(
            f"family {family.family_id} does not form an orthonormal operator "
            f"basis (max Gram deviation {report['max_gram_deviation']:.3g})"
        )
    n = rho.num_qubits
    coeffs = {}
    for alpha in all_bits(n):
        for beta in all_bits(n):
            dual = _layer_unitary(family, alpha, beta, u1_first=False)
            coeffs[(alpha, beta)] = complex(np.trace(rho.entries @ dual) / (1 << n))
    return BasisCoefficients(family.family_id, n, coeffs)


def verifier_report(family: PqcFamily, n: int, workers: int | None = None) -> dict:
    """Full verifier summary for one family at width n.

    ``trace_distance_to_mixed`` is measured on the all-zeros basis state: zero
    for perfect families, positive for PQC3 (0.25 at n=1).
    """
    ok, basis_report = orthonormal_basis_check(family)
    probe = qsim.to_density(PureState.basis("0" * n))
    averaged = perfect_encryption_average(family, probe, workers=workers)
    return {
        "family": family.family_id,
        "orthonormal": ok,
        "anticommute": anticommutation_check(family),
        "n": n,
        "trace_distance_to_mixed": qsim.trace_distance(
            averaged, qsim.maximally_mixed(n)
        ),
        "max_gram_deviation": basis_report["max_gram_deviation"],
    }
