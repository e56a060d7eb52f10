"""The authenticated three-round no-key session, plus the unauthenticated baseline.

Wire format: every in-flight message carries the n-qubit message register "I"
together with one fresh n-qubit authentication register ("II", "III" or "IV",
one per round). Each auth register is created in the all-zeros state by its
sender, entangled with the message register through the keyed permutation
unitary, XOR-masked with a pair of half-width nonces, and consumed (measured,
then dropped) by its verifier. The message register is encrypted under the
session's PQC family; both parties remove their own layers by the end.

Nonce chaining: the preshared half-width tag r authenticates round 1; the
responder's challenge from round 1 authenticates round 2; the round-2
challenge authenticates round 3, which also delivers the fresh tag that
replaces r for the next session. A failed prefix check is an ABORT verdict,
not an exception: transcripts always complete, and aborted sessions carry no
plaintext and no tag update.

Adversary interception is modeled by an optional hook: a callable receiving
each WireMessage and returning the (possibly substituted) message that gets
delivered. Hooks see WireMessages only; party states and secrets are never
reachable from hook code.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import qsim
from .bits import random_bits, validate_bits
from .boolperm import apply_Us
from .pqc import PQC4, PqcFamily, PqcKey, pqc_apply, sample_key
from .qsim import PureState, RegisterLayout, measure_register, single_register_layout

REG_MESSAGE = "I"
AUTH_REGS = {1: "II", 2: "III", 3: "IV"}


@dataclass(frozen=True)
class AuthSecret:
    """Preshared secrets: permutation key s (n bits) and tag r (n/2 bits)."""

    s: str
    r: str

    def __post_init__(self):
        validate_bits(self.s, name="s")
        if len(self.s) % 2 != 0 or len(self.s) < 2:
            raise ValueError(f"s must have even width >= 2, got {len(self.s)}")
        validate_bits(self.r, len(self.s) // 2, name="r")


@dataclass(frozen=True)
class SessionConfig:
    n: int
    family: PqcFamily = PQC4
    seed: int | None = None

    def __post_init__(self):
        if self.n < 2 or self.n % 2 != 0:
            raise ValueError(f"n must be even and >= 2, got {self.n}")


@dataclass(frozen=True)
class WireMessage:
    """One in-flight message: the only thing an interception hook ever sees."""

    round_no: int
    registers: tuple[str, ...]
    state: PureState
    layout: RegisterLayout

    def __post_init__(self):
        if self.registers != self.layout.ids:
            raise ValueError(
                f"registers {self.registers} do not match layout {self.layout.ids}"
            )
        expected = AUTH_REGS.get(self.round_no)
        if len(self.registers) == 2 and self.registers != (REG_MESSAGE, expected):
            raise ValueError(
                f"round {self.round_no} must carry ({REG_MESSAGE!r}, {expected!r}), "
                f"got {self.registers}"
            )


@dataclass
class PartyState:
    """Per-party session memory. Never serialized into WireMessages."""

    role: str  # "alice" | "bob"
    secret: AuthSecret
    family: PqcFamily
    key: PqcKey | None = None
    sent_nonce: str | None = None  # challenge this party expects echoed back
    peer_nonce: str | None = None  # challenge received from the peer
    fresh_tag: str | None = None   # replacement tag created in round 3
    phase: int = 0


@dataclass
class CheckResult:
    """Outcome of one authentication prefix check."""

    name: str  # "auth1" | "auth2" | "auth3"
    accepted: bool
    expected_prefix: str
    observed: str
    born_weight: float


@dataclass
class Transcript:
    config: SessionConfig
    messages: list[WireMessage] = field(default_factory=list)
    checks: list[CheckResult] = field(default_factory=list)
    final: str | None = None
    final_born_weight: float | None = None
    updated_r: str | None = None
    aborted_at: str | None = None
    recovered_state: PureState | None = None

    @property
    def aborted(self) -> bool:
        return self.aborted_at is not None


def _entangle_fresh_register(
    state: PureState,
    layout: RegisterLayout,
    reg: str,
    s: str,
    mask_bits: str,
) -> tuple[PureState, RegisterLayout]:
    """Append |0..0>, entangle via the keyed permutation, XOR with mask_bits."""
    n = len(s)
    state = qsim.tensor_basis(state, "0" * n)
    layout = layout.append(reg, n)
    state = apply_Us(state, layout, s, REG_MESSAGE, reg)
    state = qsim.xor_register(state, layout, reg, mask_bits)
    return state, layout


def alice_round1(
    cfg: SessionConfig,
    secret: AuthSecret,
    x: str,
    rng: np.random.Generator,
    *,
    key: PqcKey | None = None,
    nonce: str | None = None,
) -> tuple[PartyState, WireMessage]:
    """Encrypt |x>, attach the round-1 auth register, emit registers (I, II).

    ``key`` and ``nonce`` may be forced for tests and exhaustive sweeps;
    by default both are drawn fresh and uniform from ``rng``.
    """
    validate_bits(x, cfg.n, "plaintext")
    half = cfg.n // 2
    key = key or sample_key(cfg.n, rng)
    nonce = nonce if nonce is not None else random_bits(rng, half)
    validate_bits(nonce, half, "round-1 nonce")

    state = PureState.basis(x)
    state = pqc_apply(state, cfg.family, key, "encrypt")
    layout = single_register_layout(REG_MESSAGE, cfg.n)
    state, layout = _entangle_fresh_register(
        state, layout, AUTH_REGS[1], secret.s, secret.r + nonce
    )

    party = PartyState(
        role="alice", secret=secret, family=cfg.family, key=key,
        sent_nonce=nonce, phase=1,
    )
    return party, WireMessage(1, layout.ids, state, layout)


def bob_round2(
    cfg: SessionConfig,
    secret: AuthSecret,
    msg: WireMessage,
    rng: np.random.Generator,
    *,
    key: PqcKey | None = None,
    nonce: str | None = None,
) -> tuple[CheckResult, PartyState | None, WireMessage | None]:
    """Verify the round-1 tag, re-encrypt, emit registers (I, III).

    A prefix mismatch returns an ABORT verdict (check.accepted False) with no
    party state and no reply; aborting is a modeled outcome, not a fault.
    """
    if msg.round_no != 1:
        raise ValueError(f"expected a round-1 message, got round {msg.round_no}")
    half = cfg.n // 2
    auth = AUTH_REGS[1]

    state = apply_Us(msg.state, msg.layout, secret.s, REG_MESSAGE, auth)
    outcome, state, weight = measure_register(state, msg.layout, auth, rng)
    check = CheckResult("auth1", outcome[:half] == secret.r, secret.r, outcome, weight)
    if not check.accepted:
        return check, None, None

    peer_nonce = outcome[half:]
    state, layout = qsim.remove_basis_register(state, msg.layout, auth, outcome)

    key = key or sample_key(cfg.n, rng)
    nonce = nonce if nonce is not None else random_bits(rng, half)
    validate_bits(nonce, half, "round-2 nonce")
    state = pqc_apply(state, cfg.family, key, "encrypt")
    state, layout = _entangle_fresh_register(
        state, layout, AUTH_REGS[2], secret.s, peer_nonce + nonce
    )

    party = PartyState(
        role="bob", secret=secret, family=cfg.family, key=key,
        sent_nonce=nonce, peer_nonce=peer_nonce, phase=2,
    )
    return check, party, WireMessage(2, layout.ids, state, layout)


def alice_round3(
    party: PartyState,
    msg: WireMessage,
    rng: np.random.Generator,
    *,
    nonce: str | None = None,
) -> tuple[CheckResult, WireMessage | None]:
    """Verify the echoed challenge, remove Alice's layer, emit (I, IV).

    The fresh half-width tag that will replace r is drawn here and delivered
    inside the round-3 auth register.
    """
    if msg.round_no != 2:
        raise ValueError(f"expected a round-2 message, got round {msg.round_no}")
    if party.role != "alice" or party.phase != 1:
        raise ValueError("alice_round3 requires the party state from alice_round1")
    n = len(party.secret.s)
    half = n // 2
    auth = AUTH_REGS[2]

    state = apply_Us(msg.state, msg.layout, party.secret.s, REG_MESSAGE, auth)
    outcome, state, weight = measure_register(state, msg.layout, auth, rng)
    check = CheckResult(
        "auth2", outcome[:half] == party.sent_nonce, party.sent_nonce, outcome, weight
    )
    if not check.accepted:
        return check, None

    party.peer_nonce = outcome[half:]
    state, layout = qsim.remove_basis_register(state, msg.layout, auth, outcome)
    state = pqc_apply(state, party.family, party.key, "decrypt")

    fresh = nonce if nonce is not None else random_bits(rng, half)
    validate_bits(fresh, half, "replacement tag")
    party.fresh_tag = fresh
    state, layout = _entangle_fresh_register(
        state, layout, AUTH_REGS[3], party.secret.s, party.peer_nonce + fresh
    )
    party.phase = 3
    return check, WireMessage(3, layout.ids, state, layout)


@dataclass
class FinishResult:
    check: CheckResult
    plaintext: str | None
    new_r: str
    plaintext_born_weight: float | None


def bob_finish(
    party: PartyState, msg: WireMessage, rng: np.random.Generator
) -> FinishResult:
    """Verify the echoed challenge, extract the new tag, decrypt and measure.

    On ABORT the preshared tag is retained unchanged.
    """
    if msg.round_no != 3:
        raise ValueError(f"expected a round-3 message, got round {msg.round_no}")
    if party.role != "bob" or party.phase != 2:
        raise ValueError("bob_finish requires the party state from bob_round2")
    n = len(party.secret.s)
    half = n // 2
    auth = AUTH_REGS[3]

    state = apply_Us(msg.state, msg.layout, party.secret.s, REG_MESSAGE, auth)
    outcome, state, weight = measure_register(state, msg.layout, auth, rng)
    check = CheckResult(
        "auth3", outcome[:half] == party.sent_nonce, party.sent_nonce, outcome, weight
    )
    if not check.accepted:
        return FinishResult(check, None, party.secret.r, None)

    new_r = outcome[half:]
    state, layout = qsim.remove_basis_register(state, msg.layout, auth, outcome)
    state = pqc_apply(state, party.family, party.key, "decrypt")
    plaintext, _, plain_weight = measure_register(state, layout, REG_MESSAGE, rng)
    party.phase = 4
    return FinishResult(check, plaintext, new_r, plain_weight)


def run_session(
    cfg: SessionConfig,
    secret: AuthSecret,
    x: str,
    rng: np.random.Generator | None = None,
    hook=None,
) -> Transcript:
    """Drive a full session, passing each wire message through ``hook``.

    The transcript records every message as delivered (post-hook), every
    check verdict, and on full acceptance the recovered plaintext plus the
    updated tag.
    """
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    hook = hook if hook is not None else (lambda m: m)
    transcript = Transcript(config=cfg)

    alice, msg1 = alice_round1(cfg, secret, x, rng)
    msg1 = hook(msg1)
    transcript.messages.append(msg1)

    check1, bob, msg2 = bob_round2(cfg, secret, msg1, rng)
    transcript.checks.append(check1)
    if not check1.accepted:
        transcript.aborted_at = check1.name
        return transcript
    msg2 = hook(msg2)
    transcript.messages.append(msg2)

    check2, msg3 = alice_round3(alice, msg2, rng)
    transcript.checks.append(check2)
    if not check2.accepted:
        transcript.aborted_at = check2.name
        return transcript
    msg3 = hook(msg3)
    transcript.messages.append(msg3)

    finish = bob_finish(bob, msg3, rng)
    transcript.checks.append(finish.check)
    if not finish.check.accepted:
        transcript.aborted_at = finish.check.name
        return transcript

    transcript.final = finish.plaintext
    transcript.final_born_weight = finish.plaintext_born_weight
    transcript.updated_r = finish.new_r
    return transcript


def run_unauthenticated(
    cfg: SessionConfig,
    family: PqcFamily,
    input_state: PureState,
    rng: np.random.Generator,
    hook=None,
) -> Transcript:
    """Three-pass no-key exchange with no identification (the MIM-prone baseline).

    Sender encrypts, receiver encrypts on top, sender removes its layer,
    receiver removes its layer. The encryption layers commute up to a global
    phase, so with no interception the output density equals the input
    density for any pure input. The transcript's final field holds the
    computational-basis measurement of the recovered state.
    """
    if input_state.num_qubits != cfg.n:
        raise ValueError(
            f"input state has {input_state.num_qubits} qubits, expected {cfg.n}"
        )
    hook = hook if hook is not None else (lambda m: m)
    layout = single_register_layout(REG_MESSAGE, cfg.n)
    transcript = Transcript(config=cfg)

    key_a = sample_key(cfg.n, rng)
    key_b = sample_key(cfg.n, rng)

    state = pqc_apply(input_state, family, key_a, "encrypt")
    msg = hook(WireMessage(1, layout.ids, state, layout))
    transcript.messages.append(msg)

    state = pqc_apply(msg.state, family, key_b, "encrypt")
    msg = hook(WireMessage(2, layout.ids, state, layout))
    transcript.messages.append(msg)

    state = pqc_apply(msg.state, family, key_a, "decrypt")
    msg = hook(WireMessage(3, layout.ids, state, layout))
    transcript.messages.append(msg)

    recovered = pqc_apply(msg.state, family, key_b, "decrypt")
    transcript.recovered_state = recovered
    outcome, _, weight = measure_register(recovered, layout, REG_MESSAGE, rng)
    transcript.final = outcome
    transcript.final_born_weight = weight
    return transcript


def trace_records(transcript: Transcript) -> list[dict]:
    """JSONL trace records: one per wire message, then one final record."""
    records = []
    for msg in transcript.messages:
        records.append(
            {
                "round": msg.round_no,
                "registers": list(msg.registers),
                "state": qsim.state_to_json(msg.state),
                "verdicts": [
                    {
                        "name": c.name,
                        "accepted": c.accepted,
                        "born_weight": c.born_weight,
                    }
                    for c in transcript.checks[: msg.round_no - 1]
                ],
            }
        )
    records.append(
        {
            "final": transcript.final,
            "updated_r": transcript.updated_r,
            "aborted_at": transcript.aborted_at,
        }
    )
    return records
