"""Authenticated session rounds, the full runner, and the unauthenticated baseline."""

import dataclasses

import numpy as np
import pytest
from conftest import random_pure_state
from numpy.testing import assert_allclose

from qnksim import qsim
from qnksim.bits import all_bits, random_bits, xor_bits
from qnksim.boolperm import feistel_permute
from qnksim.pqc import PQC4, PqcKey
from qnksim.protocol import (
    AuthSecret,
    SessionConfig,
    Transcript,
    WireMessage,
    alice_round1,
    alice_round3,
    bob_finish,
    bob_round2,
    run_session,
    run_unauthenticated,
    trace_records,
)
from qnksim.qsim import (
    PureState,
    maximally_mixed,
    partial_trace,
    to_density,
    trace_distance,
)


def fresh_secret(rng, n):
    return AuthSecret(random_bits(rng, n), random_bits(rng, n // 2))


class TestDomainTypes:
    def test_auth_secret_widths(self):
        AuthSecret("1011", "01")
        with pytest.raises(ValueError):
            AuthSecret("101", "0")
        with pytest.raises(ValueError):
            AuthSecret("1011", "011")

    def test_session_config_widths(self):
        with pytest.raises(ValueError):
            SessionConfig(n=3)
        with pytest.raises(ValueError):
            SessionConfig(n=0)

    def test_wire_message_register_contract(self):
        rng = np.random.default_rng(0)
        cfg = SessionConfig(n=2)
        _, msg = alice_round1(cfg, fresh_secret(rng, 2), "01", rng)
        assert msg.registers == ("I", "II")
        with pytest.raises(ValueError, match="round 2"):
            WireMessage(2, msg.registers, msg.state, msg.layout)


class TestAliceRound1:
    def test_shape_and_norm(self):
        rng = np.random.default_rng(1)
        cfg = SessionConfig(n=4)
        _, msg = alice_round1(cfg, fresh_secret(rng, 4), "1010", rng)
        assert msg.state.num_qubits == 8
        assert abs(np.sum(msg.state.probabilities()) - 1.0) <= 1e-9

    def test_forced_diagonal_key_gives_deterministic_tag(self):
        # With the superposing layer disabled, register I is a basis state
        # |x XOR alpha| up to phase and register II holds its permutation
        # image XOR'ed with the nonce pair.
        rng = np.random.default_rng(2)
        cfg = SessionConfig(n=4)
        secret = AuthSecret("0110", "10")
        key = PqcKey("1100", "0000")
        _, msg = alice_round1(cfg, secret, "1010", rng, key=key, nonce="01")

        shifted = xor_bits("1010", "1100")
        expected_tag = xor_bits(feistel_permute(secret.s, shifted), secret.r + "01")
        outcome, _, weight = qsim.measure_register(
            msg.state, msg.layout, "II", np.random.default_rng(0)
        )
        assert outcome == expected_tag
        assert weight == pytest.approx(1.0, abs=1e-9)

    def test_message_marginal_mixed_over_sender_keys(self):
        # Proposition-style check: averaging the message-register marginal of
        # the round-1 wire state over the sender's keys is maximally mixed.
        rng = np.random.default_rng(3)
        cfg = SessionConfig(n=2)
        secret = AuthSecret("01", "1")
        acc = np.zeros((4, 4), dtype=complex)
        keys = [(a, b) for a in all_bits(2) for b in all_bits(2)]
        for alpha, beta in keys:
            _, msg = alice_round1(
                cfg, secret, "10", rng, key=PqcKey(alpha, beta), nonce="0"
            )
            acc += partial_trace(to_density(msg.state), msg.layout, {"I"}).entries
        assert_allclose(acc / len(keys), maximally_mixed(2).entries, atol=1e-9)

    def test_plaintext_width_checked(self):
        rng = np.random.default_rng(4)
        with pytest.raises(ValueError, match="plaintext"):
            alice_round1(SessionConfig(n=4), fresh_secret(rng, 4), "10", rng)


class TestBobRound2:
    def test_honest_accept_is_deterministic(self):
        rng = np.random.default_rng(5)
        cfg = SessionConfig(n=4)
        secret = fresh_secret(rng, 4)
        _, msg = alice_round1(cfg, secret, "0110", rng)
        check, bob, reply = bob_round2(cfg, secret, msg, rng)
        assert check.accepted
        assert check.observed[:2] == secret.r
        assert check.born_weight == pytest.approx(1.0, abs=1e-9)
        assert reply.registers == ("I", "III")
        assert reply.state.num_qubits == 8
        assert bob.peer_nonce is not None

    def test_tampered_tag_aborts(self):
        rng = np.random.default_rng(6)
        cfg = SessionConfig(n=4)
        secret = fresh_secret(rng, 4)
        _, msg = alice_round1(cfg, secret, "0110", rng)
        tampered = WireMessage(
            1, msg.registers,
            qsim.xor_register(msg.state, msg.layout, "II", "1000"),
            msg.layout,
        )
        check, bob, reply = bob_round2(cfg, secret, tampered, rng)
        assert not check.accepted
        assert bob is None and reply is None

    def test_round_number_validated(self):
        rng = np.random.default_rng(7)
        cfg = SessionConfig(n=2)
        secret = fresh_secret(rng, 2)
        _, msg = alice_round1(cfg, secret, "00", rng)
        check, _, reply = bob_round2(cfg, secret, msg, rng)
        with pytest.raises(ValueError, match="round-1"):
            bob_round2(cfg, secret, reply, rng)


class TestAliceRound3:
    def test_honest_accept(self):
        rng = np.random.default_rng(8)
        cfg = SessionConfig(n=4)
        secret = fresh_secret(rng, 4)
        alice, msg1 = alice_round1(cfg, secret, "1001", rng)
        _, _, msg2 = bob_round2(cfg, secret, msg1, rng)
        check, msg3 = alice_round3(alice, msg2, rng)
        assert check.accepted
        assert check.born_weight == pytest.approx(1.0, abs=1e-9)
        assert msg3.registers == ("I", "IV")

    def test_reflection_accepted_only_when_nonces_collide(self):
        # Reflecting the round-1 message back at the sender passes the check
        # exactly when the preshared tag equals the fresh challenge.
        rng = np.random.default_rng(9)
        cfg = SessionConfig(n=2)
        for s in all_bits(2):
            for r in all_bits(1):
                for nonce in all_bits(1):
                    secret = AuthSecret(s, r)
                    alice, msg1 = alice_round1(cfg, secret, "01", rng, nonce=nonce)
                    reflected = WireMessage(
                        2, ("I", "III"), msg1.state,
                        qsim.RegisterLayout((("I", 0, 2), ("III", 2, 4))),
                    )
                    check, _ = alice_round3(alice, reflected, rng)
                    assert check.accepted == (r == nonce)

    def test_requires_round1_party(self):
        rng = np.random.default_rng(10)
        cfg = SessionConfig(n=2)
        secret = fresh_secret(rng, 2)
        alice, msg1 = alice_round1(cfg, secret, "00", rng)
        _, bob, msg2 = bob_round2(cfg, secret, msg1, rng)
        with pytest.raises(ValueError, match="alice_round1"):
            alice_round3(bob, msg2, rng)


class TestBobFinish:
    def test_honest_recovery_and_tag_handoff(self):
        rng = np.random.default_rng(11)
        cfg = SessionConfig(n=4)
        secret = fresh_secret(rng, 4)
        alice, msg1 = alice_round1(cfg, secret, "0111", rng)
        _, bob, msg2 = bob_round2(cfg, secret, msg1, rng)
        _, msg3 = alice_round3(alice, msg2, rng)
        finish = bob_finish(bob, msg3, rng)
        assert finish.check.accepted
        assert finish.plaintext == "0111"
        assert finish.plaintext_born_weight == pytest.approx(1.0, abs=1e-9)
        assert finish.new_r == alice.fresh_tag

    def test_tampered_final_round_retains_tag(self):
        rng = np.random.default_rng(12)
        cfg = SessionConfig(n=4)
        secret = fresh_secret(rng, 4)
        alice, msg1 = alice_round1(cfg, secret, "0111", rng)
        _, bob, msg2 = bob_round2(cfg, secret, msg1, rng)
        _, msg3 = alice_round3(alice, msg2, rng)
        tampered = WireMessage(
            3, msg3.registers,
            qsim.xor_register(msg3.state, msg3.layout, "IV", "1000"),
            msg3.layout,
        )
        finish = bob_finish(bob, tampered, rng)
        assert not finish.check.accepted
        assert finish.plaintext is None
        assert finish.new_r == secret.r


class TestRunSession:
    def test_honest_session(self):
        transcript = run_session(
            SessionConfig(n=4, seed=7), AuthSecret("0110", "01"), "1010"
        )
        assert transcript.final == "1010"
        assert not transcript.aborted
        assert [c.accepted for c in transcript.checks] == [True, True, True]
        for check in transcript.checks:
            assert check.born_weight == pytest.approx(1.0, abs=1e-9)

    def test_chained_sessions_evolve_tag(self):
        rng = np.random.default_rng(13)
        cfg = SessionConfig(n=4)
        secret = fresh_secret(rng, 4)
        for _ in range(100):
            x = random_bits(rng, 4)
            transcript = run_session(cfg, secret, x, rng)
            assert transcript.final == x
            secret = AuthSecret(secret.s, transcript.updated_r)

    def test_correctness_across_widths_and_seeds(self):
        for n in (2, 4, 6):
            for seed in (0, 1, 2):
                rng = np.random.default_rng(seed)
                secret = fresh_secret(rng, n)
                x = random_bits(rng, n)
                transcript = run_session(SessionConfig(n=n), secret, x, rng)
                assert transcript.final == x

    def test_replaced_round2_aborts_at_expected_rate(self):
        # Substituting a random state for the round-2 reply survives only by
        # guessing the half-width challenge: rejection rate 1 - 2^(-n/2).
        rng = np.random.default_rng(14)
        cfg = SessionConfig(n=8)
        trials, aborts = 200, 0
        for _ in range(trials):
            secret = fresh_secret(rng, 8)

            def replace(msg):
                if msg.round_no != 2:
                    return msg
                layout = qsim.RegisterLayout((("I", 0, 8), ("III", 8, 16)))
                return WireMessage(
                    2, layout.ids, PureState.basis(random_bits(rng, 16)), layout
                )

            transcript = run_session(cfg, secret, random_bits(rng, 8), rng, hook=replace)
            aborts += transcript.aborted
        expected = 1 - 2.0**-4
        sigma = np.sqrt(expected * (1 - expected) / trials)
        assert aborts / trials >= expected - 3 * sigma

    def test_no_update_on_abort(self):
        rng = np.random.default_rng(15)
        cfg = SessionConfig(n=4)
        secret = fresh_secret(rng, 4)

        def tamper(msg):
            if msg.round_no != 1:
                return msg
            return WireMessage(
                1, msg.registers,
                qsim.xor_register(msg.state, msg.layout, "II", "1000"),
                msg.layout,
            )

        transcript = run_session(cfg, secret, "0000", rng, hook=tamper)
        assert transcript.aborted_at == "auth1"
        assert transcript.final is None
        assert transcript.updated_r is None

    def test_trace_record_shape(self):
        transcript = run_session(
            SessionConfig(n=2, seed=3), AuthSecret("01", "1"), "10"
        )
        records = trace_records(transcript)
        assert len(records) == 4
        assert [r["round"] for r in records[:3]] == [1, 2, 3]
        assert records[0]["verdicts"] == []
        assert len(records[2]["verdicts"]) == 2
        assert records[3] == {"final": "10", "updated_r": transcript.updated_r,
                              "aborted_at": None}


class TestUnauthenticated:
    def test_basis_state_recovered_exactly(self):
        rng = np.random.default_rng(16)
        cfg = SessionConfig(n=6)
        transcript = run_unauthenticated(cfg, PQC4, PureState.basis("101100"), rng)
        assert transcript.final == "101100"
        assert transcript.final_born_weight == pytest.approx(1.0, abs=1e-9)

    def test_random_pure_states_round_trip(self):
        # The two parties' layers only commute up to a global phase, which
        # cancels in density form.
        rng = np.random.default_rng(17)
        cfg = SessionConfig(n=2)
        for _ in range(1000):
            state = random_pure_state(rng, 2)
            transcript = run_unauthenticated(cfg, PQC4, state, rng)
            assert trace_distance(
                to_density(transcript.recovered_state), to_density(state)
            ) <= 1e-9

    def test_three_wire_messages_recorded(self):
        rng = np.random.default_rng(18)
        transcript = run_unauthenticated(
            SessionConfig(n=2), PQC4, PureState.basis("01"), rng
        )
        assert [m.round_no for m in transcript.messages] == [1, 2, 3]

    def test_width_mismatch(self):
        rng = np.random.default_rng(19)
        with pytest.raises(ValueError, match="qubits"):
            run_unauthenticated(SessionConfig(n=4), PQC4, PureState.basis("01"), rng)


class TestHookIsolation:
    def test_wire_message_carries_no_secrets(self):
        # Type-level audit: hooks receive WireMessages only, and a
        # WireMessage's fields are the round number, register names, state
        # and layout; neither PartyState nor AuthSecret is reachable.
        field_names = {f.name for f in dataclasses.fields(WireMessage)}
        assert field_names == {"round_no", "registers", "state", "layout"}

        seen = []
        transcript = run_session(
            SessionConfig(n=2, seed=5), AuthSecret("01", "1"), "10",
            hook=lambda m: (seen.append(m), m)[1],
        )
        assert transcript.final == "10"
        assert len(seen) == 3
        for msg in seen:
            assert isinstance(msg, WireMessage)
            for value in (msg.round_no, msg.registers, msg.state, msg.layout):
                assert not hasattr(value, "secret")
                assert not hasattr(value, "key")
