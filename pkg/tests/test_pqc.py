"""Key families: encryption round trips, verifiers, perfect-encryption averages."""

import numpy as np
import pytest
from conftest import random_pure_state
from numpy.testing import assert_allclose

from qnksim import qsim
from qnksim.bits import all_bits
from qnksim.errors import ResourceLimitError
from qnksim.pqc import (
    FAMILIES,
    PQC1,
    PQC2,
    PQC3,
    PQC4,
    PqcKey,
    _layer_unitary,
    anticommutation_check,
    basis_decompose,
    family_by_name,
    orthonormal_basis_check,
    perfect_encryption_average,
    pqc_apply,
    sample_key,
)
from qnksim.qsim import PureState, maximally_mixed, to_density, trace_distance

PERFECT_FAMILIES = (PQC1, PQC2, PQC4)


class TestFamilyDefinitions:
    def test_gate_pair_mapping(self):
        assert (PQC1.u1.name, PQC1.u2.name) == ("X", "Z")
        assert (PQC2.u1.name, PQC2.u2.name) == ("X", "Y")
        assert (PQC3.u1.name, PQC3.u2.name) == ("X", "H")
        assert (PQC4.u1.name, PQC4.u2.name) == ("Y", "H")

    def test_lookup_case_insensitive(self):
        assert family_by_name("pqc4") is PQC4
        assert family_by_name("PQC1") is PQC1
        with pytest.raises(ValueError, match="unknown"):
            family_by_name("pqc9")


class TestSampleKey:
    def test_deterministic_under_seed(self):
        first = sample_key(4, np.random.default_rng(42))
        second = sample_key(4, np.random.default_rng(42))
        assert first == second

    def test_uniform_over_pairs(self):
        rng = np.random.default_rng(0)
        counts = {}
        samples = 4096
        for _ in range(samples):
            key = sample_key(2, rng)
            counts[(key.alpha, key.beta)] = counts.get((key.alpha, key.beta), 0) + 1
        expected = samples / 16
        sigma = np.sqrt(samples * (1 / 16) * (15 / 16))
        assert len(counts) == 16
        for count in counts.values():
            assert abs(count - expected) <= 5 * sigma

    def test_single_bit_keys(self):
        key = sample_key(1, np.random.default_rng(1))
        assert key.alpha in "01" and key.beta in "01"


class TestPqcApply:
    def test_y_flip_density(self):
        out = pqc_apply(PureState.basis("0"), PQC4, PqcKey("1", "0"), "encrypt")
        assert_allclose(to_density(out).entries, [[0, 0], [0, 1]], atol=1e-12)

    def test_identity_key(self):
        state = PureState.basis("1011")
        for family in FAMILIES.values():
            out = pqc_apply(state, family, PqcKey("0000", "0000"), "encrypt")
            assert_allclose(out.amplitudes, state.amplitudes)

    def test_basis_state_stays_basis_under_pqc1(self):
        out = pqc_apply(PureState.basis("01"), PQC1, PqcKey("10", "11"), "encrypt")
        assert_allclose(
            to_density(out).entries, to_density(PureState.basis("11")).entries,
            atol=1e-12,
        )

    def test_width_mismatch(self):
        with pytest.raises(ValueError, match="width"):
            pqc_apply(PureState.basis("00"), PQC4, PqcKey("1", "0"), "encrypt")

    def test_round_trip_identity(self):
        # Decrypt-after-encrypt fidelity over random states and keys.
        rng = np.random.default_rng(7)
        for family in FAMILIES.values():
            for _ in range(250):
                state = random_pure_state(rng, 3)
                key = sample_key(3, rng)
                back = pqc_apply(
                    pqc_apply(state, family, key, "encrypt"), family, key, "decrypt"
                )
                fidelity = abs(np.vdot(state.amplitudes, back.amplitudes)) ** 2
                assert fidelity == pytest.approx(1.0, abs=1e-9)

    def test_register_slice_target(self):
        layout = qsim.RegisterLayout((("I", 0, 2), ("II", 2, 4)))
        state = qsim.tensor_basis(PureState.basis("00"), "00")
        out = pqc_apply(
            state, PQC1, PqcKey("11", "00"), "encrypt", layout=layout, register="I"
        )
        assert_allclose(out.amplitudes, PureState.basis("1100").amplitudes)


class TestVerifiers:
    def test_anticommutation_per_family(self):
        assert anticommutation_check(PQC1)
        assert anticommutation_check(PQC2)
        assert anticommutation_check(PQC4)
        assert not anticommutation_check(PQC3)

    def test_orthonormal_basis_per_family(self):
        for family, expected in ((PQC1, True), (PQC2, True), (PQC4, True), (PQC3, False)):
            ok, report = orthonormal_basis_check(family)
            assert ok is expected
            assert report["family"] == family.family_id

    def test_two_qubit_exhaustive_spot_check(self):
        # Tensor-product operators inherit orthonormality; verify directly at n=2.
        ops = [_layer_unitary(PQC4, a, b) for a in all_bits(2) for b in all_bits(2)]
        gram = np.array(
            [[np.trace(p.conj().T @ q) / 4 for q in ops] for p in ops]
        )
        assert_allclose(gram, np.eye(16), atol=1e-12)


class TestPerfectEncryptionAverage:
    def test_pqc4_single_qubit(self):
        averaged = perfect_encryption_average(PQC4, to_density(PureState.basis("0")))
        assert_allclose(averaged.entries, maximally_mixed(1).entries, atol=1e-12)

    def test_pqc1_random_two_qubit(self):
        rho = to_density(random_pure_state(np.random.default_rng(3), 2))
        averaged = perfect_encryption_average(PQC1, rho)
        assert trace_distance(averaged, maximally_mixed(2)) <= 1e-9

    def test_pqc3_is_not_perfect(self):
        averaged = perfect_encryption_average(PQC3, to_density(PureState.basis("0")))
        assert_allclose(averaged.entries, [[0.5, 0.25], [0.25, 0.5]], atol=1e-12)

    def test_theorem_for_all_perfect_families(self):
        rng = np.random.default_rng(4)
        for family in PERFECT_FAMILIES:
            assert anticommutation_check(family)
            assert orthonormal_basis_check(family)[0]
            for n in (1, 2, 3):
                rho = to_density(random_pure_state(rng, n))
                averaged = perfect_encryption_average(family, rho)
                assert trace_distance(averaged, maximally_mixed(n)) <= 1e-9

    def test_resource_limit(self):
        with pytest.raises(ResourceLimitError, match="n=4"):
            perfect_encryption_average(PQC4, maximally_mixed(5))

    def test_parallel_matches_serial(self):
        rho = to_density(random_pure_state(np.random.default_rng(5), 2))
        serial = perfect_encryption_average(PQC4, rho, workers=1)
        parallel = perfect_encryption_average(PQC4, rho, workers=3)
        assert np.max(np.abs(serial.entries - parallel.entries)) <= 1e-12


class TestBasisDecompose:
    def test_identity_component_only(self):
        coeffs = basis_decompose(maximally_mixed(1), PQC1)
        assert coeffs.coefficients[("0", "0")] == pytest.approx(0.5)
        for key, value in coeffs.coefficients.items():
            if key != ("0", "0"):
                assert abs(value) <= 1e-12

    def test_zero_projector_decomposition(self):
        # |0><0| = (I + Z)/2 in the (X, Z) family.
        coeffs = basis_decompose(to_density(PureState.basis("0")), PQC1)
        assert coeffs.coefficients[("0", "0")] == pytest.approx(0.5)
        assert coeffs.coefficients[("0", "1")] == pytest.approx(0.5)
        assert abs(coeffs.coefficients[("1", "0")]) <= 1e-12
        assert abs(coeffs.coefficients[("1", "1")]) <= 1e-12

    def test_reconstruction_round_trip(self):
        rng = np.random.default_rng(8)
        rho = to_density(random_pure_state(rng, 2))
        coeffs = basis_decompose(rho, PQC4)
        assert np.max(np.abs(coeffs.reconstruct() - rho.entries)) <= 1e-9

    def test_identity_coefficient_is_power_of_two(self):
        rng = np.random.default_rng(9)
        for n in (1, 2):
            rho = to_density(random_pure_state(rng, n))
            coeffs = basis_decompose(rho, PQC1)
            assert coeffs.coefficients[("0" * n, "0" * n)] == pytest.approx(
                2.0**-n, abs=1e-12
            )

    def test_non_basis_family_rejected(self):
        with pytest.raises(ValueError, match="orthonormal"):
            basis_decompose(maximally_mixed(1), PQC3)


class TestBasisPreservation:
    def test_pqc1_pqc2_keep_basis_states(self):
        rng = np.random.default_rng(10)
        for family in (PQC1, PQC2):
            for _ in range(20):
                key = sample_key(3, rng)
                out = pqc_apply(PureState.basis("010"), family, key, "encrypt")
                assert np.count_nonzero(np.abs(out.amplitudes) > 1e-12) == 1

    def test_pqc4_conjugate_codes(self):
        out = pqc_apply(PureState.basis("000"), PQC4, PqcKey("000", "010"), "encrypt")
        assert np.count_nonzero(np.abs(out.amplitudes) > 1e-12) >= 2
