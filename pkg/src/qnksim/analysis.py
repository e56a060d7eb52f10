"""Brute-force computation of the interceptor's view of each round.

For a fixed plaintext, the state an interceptor holds after grabbing one wire
message is the average, over everything the interceptor does not know, of the
in-flight message density. "Everything" means the preshared permutation key
and tag, both parties' one-time encryption keys, and every session nonce
created up to that round; the formulas for the per-round views leave the
encryption keys implicit, but the in-flight amplitudes depend on them, so the
sweep enumerates them too.

Exhaustive mode (n <= 2) enumerates the full space exactly; the averaged view
should be maximally mixed to 1e-9 for every round and every plaintext.
Sampled mode (n <= 4) Monte-Carlo estimates the same average and reports a
split-half standard error. Sweeps are embarrassingly parallel over the
enumeration space; partial sums combine in fixed partition order so parallel
and serial runs agree to 1e-12.

``joint_view_estimate`` is EXPLORATORY: it treats the three wire messages of
one session as if an interceptor could hold them simultaneously (a tensor
product that physically never coexists, since the message register is a
single traveling register and unknown states cannot be cloned) and reports a
measurement-statistics separation between two plaintexts on the computational
basis. That separation lower-bounds the trace distance of the hypothetical
joint views. No verdict is attached: the construction is a what-if, not a
security claim, and the package draws no conclusion from it.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import product

import numpy as np

from .bits import all_bits, random_bits
from .errors import ResourceLimitError
from .pqc import PqcKey, worker_count
from .protocol import (
    AuthSecret,
    SessionConfig,
    alice_round1,
    alice_round3,
    bob_round2,
)
from .qsim import DensityMatrix, maximally_mixed, trace_distance

MAX_EXHAUSTIVE_N = 2
MAX_SAMPLED_N = 4
MIN_JOINT_SAMPLES = 10_000
JOINT_BATCHES = 10


@dataclass
class ViewReport:
    round_no: int
    n: int
    plaintext: str
    mode: str  # "exhaustive" | "sampled"
    space_size: int
    trace_distance_to_mixed: float
    standard_error: float | None
    runtime_seconds: float


@dataclass
class JointViewReport:
    x_a: str
    x_b: str
    n: int
    samples: int
    batches: int
    separation_estimate: float
    standard_error: float
    basis: str
    exploratory: bool
    runtime_seconds: float


def _wire_state(cfg, round_no, x, secret, key_a, nonce_a, key_b=None, nonce_b=None,
                nonce_c=None) -> np.ndarray:
    """Amplitudes of the round-k wire message for fully forced randomness.

    Honest-run measurements are deterministic (their Born weight is 1), so a
    fixed dummy generator drives them without introducing variance.
    """
    rng = np.random.default_rng(0)
    alice, msg1 = alice_round1(cfg, secret, x, rng, key=key_a, nonce=nonce_a)
    if round_no == 1:
        return msg1.state.amplitudes
    check, _, msg2 = bob_round2(cfg, secret, msg1, rng, key=key_b, nonce=nonce_b)
    assert check.accepted, "honest round-1 message must verify"
    if round_no == 2:
        return msg2.state.amplitudes
    check, msg3 = alice_round3(alice, msg2, rng, nonce=nonce_c)
    assert check.accepted, "honest round-2 reply must verify"
    return msg3.state.amplitudes


def _enumeration(cfg: SessionConfig, round_no: int) -> list[tuple]:
    """All secret/nonce/key combinations visible to round ``round_no``."""
    n, half = cfg.n, cfg.n // 2
    combos = product(
        all_bits(n), all_bits(n),            # sender key (alpha, beta)
        all_bits(n), all_bits(half),         # preshared s, r
        all_bits(half),                      # round-1 nonce
    )
    if round_no == 1:
        return [c + (None, None, None, None) for c in combos]
    combos = product(
        combos,
        all_bits(n), all_bits(n),            # responder key
        all_bits(half),                      # round-2 nonce
    )
    if round_no == 2:
        return [c0 + (ba, bb, nb, None) for c0, ba, bb, nb in combos]
    return [
        c0 + (ba, bb, nb, nc)
        for (c0, ba, bb, nb), nc in product(combos, all_bits(half))
    ]


def _combo_state(cfg, round_no, x, combo) -> np.ndarray:
    aa, ab, s, r, na, ba, bb, nb, nc = combo
    key_b = PqcKey(ba, bb) if ba is not None else None
    return _wire_state(
        cfg, round_no, x, AuthSecret(s, r), PqcKey(aa, ab), na, key_b, nb, nc
    )


def _three_wire_states(cfg, x, secret, key_a, nonce_a, key_b, nonce_b, nonce_c):
    """All three wire-message amplitude vectors of one forced honest session."""
    rng = np.random.default_rng(0)
    alice, msg1 = alice_round1(cfg, secret, x, rng, key=key_a, nonce=nonce_a)
    check, _, msg2 = bob_round2(cfg, secret, msg1, rng, key=key_b, nonce=nonce_b)
    assert check.accepted
    check, msg3 = alice_round3(alice, msg2, rng, nonce=nonce_c)
    assert check.accepted
    return msg1.state.amplitudes, msg2.state.amplitudes, msg3.state.amplitudes


def adversary_view(
    round_no: int,
    x: str,
    cfg: SessionConfig,
    exhaustive: bool = True,
    samples: int | None = None,
    rng: np.random.Generator | None = None,
    workers: int | None = None,
) -> tuple[ViewReport, DensityMatrix]:
    """Average in-flight message density for one round, for a fixed plaintext.

    Exhaustive mode enumerates every secret exactly (n <= 2). Sampled mode
    draws ``samples`` independent secret combinations (n <= 4) and reports a
    split-half standard error alongside the estimate.
    """
    if round_no not in (1, 2, 3):
        raise ValueError(f"round must be 1, 2 or 3, got {round_no}")
    started = time.perf_counter()
    dim = 1 << (2 * cfg.n)

    if exhaustive:
        if cfg.n > MAX_EXHAUSTIVE_N:
            raise ResourceLimitError(
                f"exhaustive view enumeration supports n <= {MAX_EXHAUSTIVE_N}; "
                f"use sampled mode (samples=...) for n={cfg.n}"
            )
        combos = _enumeration(cfg, round_no)
        workers = worker_count() if workers is None else max(1, workers)

        def partial(chunk):
            acc = np.zeros((dim, dim), dtype=complex)
            for combo in chunk:
                amps = _combo_state(cfg, round_no, x, combo)
                acc += np.outer(amps, amps.conj())
            return acc

        if workers == 1:
            total = partial(combos)
        else:
            chunks = [combos[i::workers] for i in range(workers)]
            with ThreadPoolExecutor(max_workers=workers) as pool:
                partials = list(pool.map(partial, chunks))
            total = partials[0]
            for extra in partials[1:]:
                total = total + extra
        averaged = DensityMatrix(2 * cfg.n, total / len(combos))
        report = ViewReport(
            round_no=round_no,
            n=cfg.n,
            plaintext=x,
            mode="exhaustive",
            space_size=len(combos),
            trace_distance_to_mixed=trace_distance(averaged, maximally_mixed(2 * cfg.n)),
            standard_error=None,
            runtime_seconds=time.perf_counter() - started,
        )
        return report, averaged

    if cfg.n > MAX_SAMPLED_N:
        raise ResourceLimitError(f"sampled view estimation supports n <= {MAX_SAMPLED_N}")
    if not samples or samples < 2:
        raise ValueError("sampled mode needs samples >= 2")
    rng = np.random.default_rng(cfg.seed) if rng is None else rng

    halves = [np.zeros((dim, dim), dtype=complex) for _ in range(2)]
    counts = [0, 0]
    n, half_w = cfg.n, cfg.n // 2
    for i in range(samples):
        combo = (
            random_bits(rng, n), random_bits(rng, n),
            random_bits(rng, n), random_bits(rng, half_w),
            random_bits(rng, half_w),
            random_bits(rng, n), random_bits(rng, n),
            random_bits(rng, half_w), random_bits(rng, half_w),
        )
        amps = _combo_state(cfg, round_no, x, combo)
        halves[i % 2] += np.outer(amps, amps.conj())
        counts[i % 2] += 1

    total = halves[0] + halves[1]
    averaged = DensityMatrix(2 * cfg.n, total / samples)
    mixed = maximally_mixed(2 * cfg.n)
    # Split-half error estimate: the two half-sample averages carry independent
    # noise, so half their distance estimates the full estimator's noise floor.
    split_distance = trace_distance(
        DensityMatrix(2 * cfg.n, halves[0] / counts[0]),
        DensityMatrix(2 * cfg.n, halves[1] / counts[1]),
    )
    report = ViewReport(
        round_no=round_no,
        n=cfg.n,
        plaintext=x,
        mode="sampled",
        space_size=samples,
        trace_distance_to_mixed=trace_distance(averaged, mixed),
        standard_error=split_distance / 2.0,
        runtime_seconds=time.perf_counter() - started,
    )
    return report, averaged


def joint_view_estimate(
    x_a: str,
    x_b: str,
    cfg: SessionConfig,
    samples: int,
    rng: np.random.Generator | None = None,
) -> JointViewReport:
    """EXPLORATORY separation estimate between hypothetical 3-round joint views.

    For each sampled secret set, the three wire messages of an honest session
    are combined as a tensor product (as if simultaneously intercepted) and
    their computational-basis outcome distribution is accumulated, once per
    plaintext, with shared secrets (common random numbers, so identical
    plaintexts separate by exactly zero). The reported separation is the
    total-variation distance between the two pooled distributions, a lower
    bound on the trace distance of the hypothetical joint views. The standard
    error comes from the spread across sample batches. No pass/fail verdict
    is attached.
    """
    if cfg.n != 2:
        raise ResourceLimitError(
            "joint view estimation enumerates 6n-qubit outcome distributions "
            "and supports n=2 only"
        )
    if samples < MIN_JOINT_SAMPLES:
        raise ValueError(f"joint view estimation needs samples >= {MIN_JOINT_SAMPLES}")
    started = time.perf_counter()
    rng = np.random.default_rng(cfg.seed) if rng is None else rng

    n, half = cfg.n, cfg.n // 2
    dim = 1 << (6 * n)
    batch_a = np.zeros((JOINT_BATCHES, dim))
    batch_b = np.zeros((JOINT_BATCHES, dim))
    batch_counts = np.zeros(JOINT_BATCHES, dtype=int)

    for i in range(samples):
        secret = AuthSecret(random_bits(rng, n), random_bits(rng, half))
        key_a = PqcKey(random_bits(rng, n), random_bits(rng, n))
        key_b = PqcKey(random_bits(rng, n), random_bits(rng, n))
        nonces = tuple(random_bits(rng, half) for _ in range(3))
        batch = i % JOINT_BATCHES
        for x, sink in ((x_a, batch_a), (x_b, batch_b)):
            wires = _three_wire_states(
                cfg, x, secret, key_a, nonces[0], key_b, nonces[1], nonces[2]
            )
            joint = np.ones(1)
            for amps in wires:
                joint = np.kron(joint, np.abs(amps) ** 2)
            sink[batch] += joint
        batch_counts[batch] += 1

    pooled_a = batch_a.sum(axis=0) / samples
    pooled_b = batch_b.sum(axis=0) / samples
    separation = 0.5 * float(np.sum(np.abs(pooled_a - pooled_b)))
    per_batch = 0.5 * np.sum(
        np.abs(batch_a / batch_counts[:, None] - batch_b / batch_counts[:, None]),
        axis=1,
    )
    standard_error = float(np.std(per_batch, ddof=1) / np.sqrt(JOINT_BATCHES))

    return JointViewReport(
        x_a=x_a,
        x_b=x_b,
        n=cfg.n,
        samples=samples,
        batches=JOINT_BATCHES,
        separation_estimate=separation,
        standard_error=standard_error,
        basis="computational",
        exploratory=True,
        runtime_seconds=time.perf_counter() - started,
    )
