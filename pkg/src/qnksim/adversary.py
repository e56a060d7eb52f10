"""Attack strategies against the two protocol variants.

Three harnesses:

* ``mim_unauthenticated`` — the classic man-in-the-middle against the
  unauthenticated three-pass exchange: Eve intercepts the first pass, plays
  the receiver with her own key, lets the sender strip its layer, then strips
  hers. Succeeds with certainty.
* ``forge_authenticated`` — secretless strategies against the authenticated
  session (reflect the round-1 message, substitute a random state, or run the
  responder's procedure under a wrong permutation key). All are capped by the
  prefix-guessing probability 2^(-n/2).
* ``basis_measure_attack`` — Eve measures each in-flight ciphertext of the
  unauthenticated exchange in the computational basis and XORs the three
  outcomes. Recovers the plaintext with certainty for the basis-preserving
  families (PQC1, PQC2) without disturbing the session; conjugate coding
  (PQC4) collapses under her measurements instead.

Attack code never touches party states or preshared secrets: interception is
expressed entirely through WireMessages. Trials draw independent child rng
streams from the master generator, so batch runs are reproducible and safely
parallelizable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import qsim
from .bits import all_bits, bits_to_int, random_bits, xor_bits
from .boolperm import apply_Us
from .errors import ResourceLimitError
from .pqc import PqcFamily, PqcKey, pqc_apply, sample_key
from .protocol import (
    AUTH_REGS,
    REG_MESSAGE,
    AuthSecret,
    SessionConfig,
    WireMessage,
    _entangle_fresh_register,
    alice_round1,
    alice_round3,
    run_unauthenticated,
)
from .qsim import PureState, RegisterLayout, born_weights, measure_register

FORGE_STRATEGIES = ("reflect", "random-state", "wrong-s")


@dataclass
class AttackOutcome:
    """Aggregated result of an attack run.

    ``successes`` is an integer count in sampled mode and an exact expected
    count (Born-weighted) in exhaustive mode.
    """

    attack_id: str
    trials: int
    successes: float
    recovered: str | None = None
    detection: dict[str, int] = field(default_factory=dict)
    exhaustive: bool = False

    @property
    def success_rate(self) -> float:
        return self.successes / self.trials if self.trials else 0.0

    @property
    def success(self) -> bool:
        return self.trials > 0 and self.successes == self.trials


def mim_unauthenticated(
    cfg: SessionConfig,
    family: PqcFamily,
    x: str,
    rng: np.random.Generator,
    trials: int = 100,
    wrong_order: bool = False,
) -> AttackOutcome:
    """Eve substitutes herself for the receiver of the unauthenticated exchange.

    With ``wrong_order`` Eve instead decrypts the intercepted first pass
    directly, skipping the reflection through the sender that removes the
    sender's layer: a chance-level (2^-n) negative control.
    """
    layout = qsim.single_register_layout(REG_MESSAGE, cfg.n)
    successes = 0
    recovered = None
    for trial_rng in rng.spawn(max(trials, 1))[:trials]:
        key_a = sample_key(cfg.n, trial_rng)
        key_e = sample_key(cfg.n, trial_rng)
        pass1 = pqc_apply(PureState.basis(x), family, key_a, "encrypt")
        if wrong_order:
            exposed = pqc_apply(pass1, family, key_e, "decrypt")
        else:
            reflected = pqc_apply(pass1, family, key_e, "encrypt")
            stripped = pqc_apply(reflected, family, key_a, "decrypt")
            exposed = pqc_apply(stripped, family, key_e, "decrypt")
        guess, _, _ = measure_register(exposed, layout, REG_MESSAGE, trial_rng)
        if guess == x:
            successes += 1
            recovered = guess
    return AttackOutcome("mim-unauth", trials, successes, recovered)


def _relabel_as_round2(msg: WireMessage) -> WireMessage:
    """Present a round-1 message as a round-2 reply (reflection forgery)."""
    n = msg.layout.width(REG_MESSAGE)
    layout = RegisterLayout(((REG_MESSAGE, 0, n), (AUTH_REGS[2], n, 2 * n)))
    return WireMessage(2, layout.ids, msg.state, layout)


def _forge_random_state(cfg: SessionConfig, rng: np.random.Generator) -> WireMessage:
    """A uniformly random basis state dressed up as a round-2 reply."""
    n = cfg.n
    layout = RegisterLayout(((REG_MESSAGE, 0, n), (AUTH_REGS[2], n, 2 * n)))
    state = PureState.basis(random_bits(rng, 2 * n))
    return WireMessage(2, layout.ids, state, layout)


def _forge_wrong_s(
    cfg: SessionConfig,
    msg1: WireMessage,
    s_eve: str,
    key_eve: PqcKey,
    nonce_eve: str,
    rng: np.random.Generator,
) -> WireMessage:
    """Run the responder's round-2 procedure under a guessed permutation key.

    Eve cannot verify the preshared tag, so she skips the prefix check and
    treats the second half of whatever she measures as the peer's challenge.
    """
    half = cfg.n // 2
    auth = AUTH_REGS[1]
    state = apply_Us(msg1.state, msg1.layout, s_eve, REG_MESSAGE, auth)
    outcome, state, _ = measure_register(state, msg1.layout, auth, rng)
    believed_nonce = outcome[half:]
    state, layout = qsim.remove_basis_register(state, msg1.layout, auth, outcome)
    state = pqc_apply(state, cfg.family, key_eve, "encrypt")
    state, layout = _entangle_fresh_register(
        state, layout, AUTH_REGS[2], s_eve, believed_nonce + nonce_eve
    )
    return WireMessage(2, layout.ids, state, layout)


def _acceptance_probability(secret_s: str, expected_prefix: str, msg: WireMessage) -> float:
    """Exact Born mass of round-2 replies that pass the verifier's prefix check."""
    n = len(secret_s)
    half = n // 2
    auth = AUTH_REGS[2]
    state = apply_Us(msg.state, msg.layout, secret_s, REG_MESSAGE, auth)
    weights = born_weights(state, msg.layout, auth)
    prefixes = np.arange(weights.size) >> half
    return float(weights[prefixes == bits_to_int(expected_prefix)].sum())


def forge_authenticated(
    cfg: SessionConfig,
    strategy: str,
    trials: int,
    rng: np.random.Generator,
    exhaustive: bool = False,
) -> AttackOutcome:
    """Eve intercepts round 1 and answers the sender without knowing s or r.

    Sampled mode runs ``trials`` independent sessions with fresh secrets and
    counts the sender's round-2 acceptances. Exhaustive mode (n=2 only)
    enumerates every secret, sender key, and adversary choice, weighting
    measurement branches by their exact Born probabilities; ``successes`` is
    then the exact expected acceptance count over the enumerated space.
    """
    if strategy not in FORGE_STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; expected {FORGE_STRATEGIES}")
    if exhaustive:
        return _forge_exhaustive(cfg, strategy)

    half = cfg.n // 2
    successes = 0
    rejections = 0
    for trial_rng in rng.spawn(max(trials, 1))[:trials]:
        secret = AuthSecret(random_bits(trial_rng, cfg.n), random_bits(trial_rng, half))
        x = random_bits(trial_rng, cfg.n)
        alice, msg1 = alice_round1(cfg, secret, x, trial_rng)

        if strategy == "reflect":
            reply = _relabel_as_round2(msg1)
        elif strategy == "random-state":
            reply = _forge_random_state(cfg, trial_rng)
        else:
            s_eve = secret.s
            while s_eve == secret.s:
                s_eve = random_bits(trial_rng, cfg.n)
            reply = _forge_wrong_s(
                cfg, msg1, s_eve, sample_key(cfg.n, trial_rng),
                random_bits(trial_rng, half), trial_rng,
            )

        check, _ = alice_round3(alice, reply, trial_rng)
        if check.accepted:
            successes += 1
        else:
            rejections += 1
    return AttackOutcome(
        f"forge-auth:{strategy}", trials, successes,
        detection={"auth2_rejections": rejections},
    )


def _forge_exhaustive(cfg: SessionConfig, strategy: str) -> AttackOutcome:
    if cfg.n != 2:
        raise ResourceLimitError("exhaustive forgery enumeration supports n=2 only")
    n, half = cfg.n, cfg.n // 2
    rng = np.random.default_rng(0)  # honest-run draws are all forced below

    total = 0.0
    count = 0
    for s in all_bits(n):
        for r in all_bits(half):
            secret = AuthSecret(s, r)
            for alpha in all_bits(n):
                for beta in all_bits(n):
                    for nonce_a in all_bits(half):
                        _, msg1 = alice_round1(
                            cfg, secret, "0" * n, rng,
                            key=PqcKey(alpha, beta), nonce=nonce_a,
                        )
                        if strategy == "reflect":
                            total += _acceptance_probability(
                                s, nonce_a, _relabel_as_round2(msg1)
                            )
                            count += 1
                        elif strategy == "random-state":
                            layout = RegisterLayout(
                                ((REG_MESSAGE, 0, n), (AUTH_REGS[2], n, 2 * n))
                            )
                            for t in all_bits(2 * n):
                                reply = WireMessage(
                                    2, layout.ids, PureState.basis(t), layout
                                )
                                total += _acceptance_probability(s, nonce_a, reply)
                                count += 1
                        else:
                            total_here, count_here = _wrong_s_exhaustive(
                                cfg, msg1, secret, nonce_a
                            )
                            total += total_here
                            count += count_here
    return AttackOutcome(
        f"forge-auth:{strategy}", count, total, exhaustive=True
    )


def _wrong_s_exhaustive(
    cfg: SessionConfig, msg1: WireMessage, secret: AuthSecret, nonce_a: str
) -> tuple[float, int]:
    """Enumerate Eve's wrong-key choices, weighting her measurement branches."""
    n, half = cfg.n, cfg.n // 2
    auth = AUTH_REGS[1]
    total = 0.0
    count = 0
    for s_eve in all_bits(n):
        if s_eve == secret.s:
            continue
        opened = apply_Us(msg1.state, msg1.layout, s_eve, REG_MESSAGE, auth)
        weights = born_weights(opened, msg1.layout, auth)
        branches = []
        for idx, weight in enumerate(weights):
            if weight <= 1e-15:
                continue
            outcome = format(idx, f"0{n}b")
            collapsed, _ = qsim.project_register(opened, msg1.layout, auth, outcome)
            state, layout = qsim.remove_basis_register(
                collapsed, msg1.layout, auth, outcome
            )
            branches.append((outcome, weight, state, layout))
        for alpha in all_bits(n):
            for beta in all_bits(n):
                key_eve = PqcKey(alpha, beta)
                encrypted = [
                    (outcome, weight, pqc_apply(state, cfg.family, key_eve, "encrypt"), layout)
                    for outcome, weight, state, layout in branches
                ]
                for nonce_eve in all_bits(half):
                    branch_total = 0.0
                    for outcome, weight, state, layout in encrypted:
                        state, reply_layout = _entangle_fresh_register(
                            state, layout, AUTH_REGS[2], s_eve,
                            outcome[half:] + nonce_eve,
                        )
                        reply = WireMessage(2, reply_layout.ids, state, reply_layout)
                        branch_total += weight * _acceptance_probability(
                            secret.s, nonce_a, reply
                        )
                    total += branch_total
                    count += 1
    return total, count


def basis_measure_attack(
    cfg: SessionConfig,
    family: PqcFamily,
    x: str,
    rng: np.random.Generator,
    trials: int = 100,
) -> AttackOutcome:
    """Eve measures every in-flight ciphertext in the computational basis.

    The XOR of the first two outcomes is her key-mask estimate; XORing it
    into the third outcome is her plaintext guess. Success means the guess
    equals the plaintext; ``detection`` counts the sessions whose receiver
    ended up with a wrong plaintext (disturbance left behind by Eve).
    """
    successes = 0
    disturbed = 0
    recovered = None
    for trial_rng in rng.spawn(max(trials, 1))[:trials]:
        intercepted: list[str] = []

        def eavesdrop(msg: WireMessage) -> WireMessage:
            outcome, post, _ = measure_register(
                msg.state, msg.layout, REG_MESSAGE, trial_rng
            )
            intercepted.append(outcome)
            return WireMessage(msg.round_no, msg.registers, post, msg.layout)

        transcript = run_unauthenticated(
            cfg, family, PureState.basis(x), trial_rng, hook=eavesdrop
        )
        mask = xor_bits(intercepted[0], intercepted[1])
        guess = xor_bits(mask, intercepted[2])
        if guess == x:
            successes += 1
            recovered = guess
        if transcript.final != x:
            disturbed += 1
    return AttackOutcome(
        "basis-measure", trials, successes, recovered,
        detection={"receiver_plaintext_mismatches": disturbed},
    )


def interception_hook(name: str, cfg: SessionConfig, rng: np.random.Generator):
    """Named wire-tampering hooks for the session runner.

    * ``tamper-round1``: flip the first bit of the round-1 auth register.
    * ``replace-round2``: substitute a random basis state for the round-2 reply.
    """
    if name == "tamper-round1":

        def hook(msg: WireMessage) -> WireMessage:
            if msg.round_no != 1:
                return msg
            mask = msg.layout.lift_mask(
                AUTH_REGS[1], "1" + "0" * (msg.layout.width(AUTH_REGS[1]) - 1)
            )
            state = qsim.apply_gate_layer(msg.state, qsim.X, mask)
            return WireMessage(msg.round_no, msg.registers, state, msg.layout)

        return hook
    if name == "replace-round2":

        def hook(msg: WireMessage) -> WireMessage:
            if msg.round_no != 2:
                return msg
            return _forge_random_state(cfg, rng)

        return hook
    raise ValueError(f"unknown interception hook {name!r}")
