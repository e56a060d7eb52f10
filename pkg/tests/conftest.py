import numpy as np

from qnksim.qsim import DensityMatrix, PureState


def random_pure_state(rng: np.random.Generator, num_qubits: int) -> PureState:
    dim = 1 << num_qubits
    amps = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return PureState(num_qubits, amps / np.linalg.norm(amps))


def random_density(rng: np.random.Generator, num_qubits: int) -> DensityMatrix:
    """Random full-rank mixed state (Wishart-normalized)."""
    dim = 1 << num_qubits
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    m = a @ a.conj().T
    return DensityMatrix(num_qubits, m / np.trace(m))
