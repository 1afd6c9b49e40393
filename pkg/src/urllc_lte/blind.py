"""PDCCH blind decoding over a fixed search space, with DCI duplication.

The decoding path (``decode_*`` and :func:`decide_search_spaces`) only sees
observations, the aggregation level and our RNTI. Ground-truth labels are
read afterwards by :func:`classify` to fill a :class:`DecodeOutcome`.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, IntEnum

import numpy as np

from . import codec
from .channel import SoftObservation, combine_symbolwise, demodulate_llr

DEFAULT_CANDIDATES = 20
CRC_PASS_PROBABILITY = 2.0 ** -codec.CRC_BITS


class Truth(IntEnum):
    TARGET = 0
    OTHER_UE = 1
    NOISE = 2


class Mode(str, Enum):
    SINGLE = "single"
    DUP_BITWISE = "dup-bitwise"
    DUP_SYMBOLWISE = "dup-symbolwise"

    @property
    def duplicated(self) -> bool:
        return self is not Mode.SINGLE


class CombineRule(str, Enum):
    IF_DECODED = "paper"    # combine only when at least one copy decoded
    ALWAYS = "always"  # combine even when both copies fail


def default_pairing(n_candidates: int) -> np.ndarray:
    if n_candidates < 2 or n_candidates % 2:
        raise ValueError("duplication needs an even number of candidates")
    return np.arange(n_candidates).reshape(-1, 2)


@dataclass(frozen=True)
class Candidate:
    index: int
    observation: SoftObservation
    aggregation_level: int
    truth: Truth


@dataclass
class SearchSpace:
    """One subframe's blind-decoding candidates, stored as stacked arrays.

    ``received``/``gains`` have shape ``(n_candidates, 36 * al)``.
    ``target_payload`` is ``None`` for a diagnostic space with no DCI for us.
    """

    received: np.ndarray
    gains: np.ndarray
    noise_var: float
    aggregation_level: int
    truth: np.ndarray
    mode: Mode = Mode.SINGLE
    target_payload: np.ndarray | None = None
    pairing: np.ndarray | None = None

    def __post_init__(self):
        self.mode = Mode(self.mode)
        n = self.received.shape[0]
        if self.truth.shape != (n,):
            raise ValueError("one truth label per candidate required")
        n_sym = codec.codeword_bits(self.aggregation_level) // 2
        if self.received.shape != (n, n_sym) or self.gains.shape != (n, n_sym):
            raise ValueError(f"AL {self.aggregation_level} candidates carry {n_sym} symbols")
        if self.mode.duplicated and self.pairing is None:
            self.pairing = default_pairing(n)
        n_target = int(np.sum(self.truth == Truth.TARGET))
        expected = (2 if self.mode.duplicated else 1) if self.target_payload is not None else 0
        if n_target != expected:
            raise ValueError(f"{self.mode.value} space needs {expected} target candidates, got {n_target}")
        if self.mode.duplicated and expected:
            rows = self.truth[self.pairing]
            if not np.any(np.all(rows == Truth.TARGET, axis=1)):
                raise ValueError("target copies must form one pair")

    @property
    def n_candidates(self) -> int:
        return self.received.shape[0]

    def observation(self, index: int) -> SoftObservation:
        return SoftObservation(self.received[index], self.gains[index], self.noise_var)

    @property
    def candidates(self) -> list[Candidate]:
        return [Candidate(i, self.observation(i), self.aggregation_level, Truth(int(t)))
                for i, t in enumerate(self.truth)]

    def target_index(self) -> int | None:
        hits = np.flatnonzero(self.truth == Truth.TARGET)
        return int(hits[0]) if hits.size else None

    def target_pair(self) -> int | None:
        if not self.mode.duplicated or self.target_payload is None:
            return None
        rows = np.all(self.truth[self.pairing] == Truth.TARGET, axis=1)
        return int(np.flatnonzero(rows)[0])


@dataclass
class DecodeOutcome:
    detected: bool
    missed: bool
    false_positive_count: int
    false_reject: bool

    @property
    def any_false_positive(self) -> bool:
        return self.false_positive_count > 0


# ---------------------------------------------------------------------------
# Truth-blind decoding path
# ---------------------------------------------------------------------------

def decode_llrs(llrs, al: int, rnti: int, *, payload_bits: int = codec.PAYLOAD_BITS):
    """Rate recovery, Viterbi and CRC check for a batch of soft codewords.

    Returns ``(accepted, payloads)`` with shapes ``(B,)`` and ``(B, payload_bits)``.
    """
    llrs = np.atleast_2d(np.asarray(llrs, dtype=np.float64))
    mother = codec.rate_recover(llrs, al, mother_len=3 * (payload_bits + codec.CRC_BITS))
    frames = codec.viterbi_decode_tailbiting(mother, payload_bits=payload_bits)
    accepted = codec.crc_pass_mask(frames, rnti, payload_bits=payload_bits)
    return accepted, frames[:, :payload_bits]


def decode_candidate(candidate: Candidate, rnti: int, *,
                     payload_bits: int = codec.PAYLOAD_BITS) -> np.ndarray | None:
    """Demodulate and decode one candidate; the payload if the CRC passes."""
    llr = demodulate_llr(candidate.observation)
    ok, payload = decode_llrs(llr[None, :], candidate.aggregation_level, rnti,
                              payload_bits=payload_bits)
    return payload[0] if ok[0] else None


def combined_llrs(obs_a: SoftObservation, obs_b: SoftObservation, mode: Mode) -> np.ndarray:
    """Soft input for the combined decode of a duplicate pair."""
    mode = Mode(mode)
    if mode is Mode.DUP_BITWISE:
        return demodulate_llr(obs_a) + demodulate_llr(obs_b)
    if mode is Mode.DUP_SYMBOLWISE:
        return demodulate_llr(combine_symbolwise(obs_a, obs_b))
    raise ValueError("combining needs a duplication mode")


@dataclass
class PairDecision:
    payload: np.ndarray | None
    individual: tuple[np.ndarray | None, np.ndarray | None]
    combined: np.ndarray | None = None
    check_rejected: bool = False  # an individual pass was discarded by the combination check


def _pair_verdict(acc_a, pay_a, acc_b, pay_b, comb_ok, comb_pay):
    """Combined decode must pass CRC and match every individually accepted payload."""
    accepted = bool(comb_ok)
    if accepted and acc_a and not np.array_equal(comb_pay, pay_a):
        accepted = False
    if accepted and acc_b and not np.array_equal(comb_pay, pay_b):
        accepted = False
    return accepted


def decode_pair(a: Candidate, b: Candidate, rnti: int, method: Mode,
                combine_rule: CombineRule = CombineRule.IF_DECODED, *,
                payload_bits: int = codec.PAYLOAD_BITS) -> PairDecision:
    if a.aggregation_level != b.aggregation_level:
        raise ValueError("paired candidates must share one aggregation level")
    al = a.aggregation_level
    llr = np.stack([demodulate_llr(a.observation), demodulate_llr(b.observation)])
    ok, pay = decode_llrs(llr, al, rnti, payload_bits=payload_bits)
    individual = tuple(pay[i] if ok[i] else None for i in range(2))
    if not (ok.any() or CombineRule(combine_rule) is CombineRule.ALWAYS):
        return PairDecision(None, individual)
    comb = combined_llrs(a.observation, b.observation, method)
    c_ok, c_pay = decode_llrs(comb[None, :], al, rnti, payload_bits=payload_bits)
    combined = c_pay[0] if c_ok[0] else None
    accepted = _pair_verdict(ok[0], pay[0], ok[1], pay[1], c_ok[0], c_pay[0])
    return PairDecision(combined if accepted else None, individual, combined,
                        check_rejected=bool(ok.any() and not accepted))


@dataclass
class SpaceDecisions:
    """Per-candidate and, for duplication, per-pair decode results of one space."""

    accepted: np.ndarray
    payloads: np.ndarray
    pair_accepted: np.ndarray | None = None
    pair_payloads: np.ndarray | None = None
    pair_check_rejected: np.ndarray | None = None
    pair_combined: np.ndarray | None = None      # a combined decode was run
    pair_combined_ok: np.ndarray | None = None   # meaningful only where combined
    pair_combined_payloads: np.ndarray | None = None


def _stack_observations(spaces):
    received = np.concatenate([s.received for s in spaces])
    gains = np.concatenate([s.gains for s in spaces])
    noise = np.concatenate([np.full(s.n_candidates, s.noise_var) for s in spaces])
    return SoftObservation(received, gains, noise)


def decode_pairs_combined(spaces, refs, rnti: int, *, payload_bits: int = codec.PAYLOAD_BITS):
    """Combined decode of the pairs ``refs = [(space_idx, pair_idx), ...]``.

    All referenced spaces must share mode and aggregation level.
    Returns ``(accepted, payloads)`` aligned with ``refs``.
    """
    if not refs:
        return np.zeros(0, bool), np.zeros((0, payload_bits), np.uint8)
    first = spaces[refs[0][0]]
    a_rows, b_rows = [], []
    for si, pi in refs:
        i, j = spaces[si].pairing[pi]
        a_rows.append(spaces[si].observation(int(i)))
        b_rows.append(spaces[si].observation(int(j)))
    obs_a = SoftObservation(np.stack([o.received for o in a_rows]),
                            np.stack([o.gains for o in a_rows]),
                            np.array([o.noise_var for o in a_rows], dtype=np.float64))
    obs_b = SoftObservation(np.stack([o.received for o in b_rows]),
                            np.stack([o.gains for o in b_rows]),
                            np.array([o.noise_var for o in b_rows], dtype=np.float64))
    llr = combined_llrs(obs_a, obs_b, first.mode)
    return decode_llrs(llr, first.aggregation_level, rnti, payload_bits=payload_bits)


def decide_search_spaces(spaces, rnti: int, combine_rule: CombineRule = CombineRule.IF_DECODED, *,
                         payload_bits: int = codec.PAYLOAD_BITS) -> list[SpaceDecisions]:
    """Blind-decode a batch of search spaces sharing mode and aggregation level."""
    if not spaces:
        return []
    mode, al = spaces[0].mode, spaces[0].aggregation_level
    if any(s.mode is not mode or s.aggregation_level != al for s in spaces):
        raise ValueError("a batch must share mode and aggregation level")
    combine_rule = CombineRule(combine_rule)
    obs = _stack_observations(spaces)
    acc, pay = decode_llrs(demodulate_llr(obs), al, rnti, payload_bits=payload_bits)

    out = []
    offset = 0
    for s in spaces:
        n = s.n_candidates
        out.append(SpaceDecisions(acc[offset:offset + n], pay[offset:offset + n]))
        offset += n
    if not mode.duplicated:
        return out

    refs = []
    for si, (s, d) in enumerate(zip(spaces, out)):
        hit = d.accepted[s.pairing].any(axis=1)
        need = np.ones_like(hit) if combine_rule is CombineRule.ALWAYS else hit
        refs.extend((si, int(p)) for p in np.flatnonzero(need))
    c_ok, c_pay = decode_pairs_combined(spaces, refs, rnti, payload_bits=payload_bits)

    for s, d in zip(spaces, out):
        n_pairs = s.pairing.shape[0]
        d.pair_combined = np.zeros(n_pairs, bool)
        d.pair_combined_ok = np.zeros(n_pairs, bool)
        d.pair_combined_payloads = np.zeros((n_pairs, payload_bits), np.uint8)
    for k, (si, pi) in enumerate(refs):
        d = out[si]
        d.pair_combined[pi] = True
        d.pair_combined_ok[pi] = c_ok[k]
        d.pair_combined_payloads[pi] = c_pay[k]

    for s, d in zip(spaces, out):
        n_pairs = s.pairing.shape[0]
        d.pair_accepted = np.zeros(n_pairs, bool)
        d.pair_check_rejected = np.zeros(n_pairs, bool)
        d.pair_payloads = d.pair_combined_payloads
        for p in np.flatnonzero(d.pair_combined):
            i, j = s.pairing[p]
            ok = _pair_verdict(d.accepted[i], d.payloads[i], d.accepted[j], d.payloads[j],
                               d.pair_combined_ok[p], d.pair_combined_payloads[p])
            d.pair_accepted[p] = ok
            d.pair_check_rejected[p] = (d.accepted[i] or d.accepted[j]) and not ok
    return out


# ---------------------------------------------------------------------------
# Classification against ground truth
# ---------------------------------------------------------------------------

def classify(space: SearchSpace, d: SpaceDecisions) -> DecodeOutcome:
    """Score decode results against the space's truth labels.

    Any acceptance other than the exact target payload from the target's own
    slot is a false positive. In duplication modes the unit is the pair.
    """
    target = space.target_payload
    if not space.mode.duplicated:
        t = space.target_index()
        detected = bool(t is not None and d.accepted[t] and np.array_equal(d.payloads[t], target))
        fp = int(d.accepted.sum()) - int(detected)
        return DecodeOutcome(detected, target is not None and not detected, fp, False)

    tp = space.target_pair()
    detected = bool(tp is not None and d.pair_accepted[tp]
                    and np.array_equal(d.pair_payloads[tp], target))
    fp = int(d.pair_accepted.sum()) - int(detected)
    false_reject = False
    if tp is not None and d.pair_check_rejected[tp]:
        i, j = space.pairing[tp]
        false_reject = any(d.accepted[k] and np.array_equal(d.payloads[k], target) for k in (i, j))
    return DecodeOutcome(detected, target is not None and not detected, fp, false_reject)


def run_search_spaces(spaces, rnti: int, combine_rule: CombineRule = CombineRule.IF_DECODED, *,
                      payload_bits: int = codec.PAYLOAD_BITS) -> list[DecodeOutcome]:
    decisions = decide_search_spaces(spaces, rnti, combine_rule, payload_bits=payload_bits)
    return [classify(s, d) for s, d in zip(spaces, decisions)]


def run_search_space(space: SearchSpace, rnti: int,
                     combine_rule: CombineRule = CombineRule.IF_DECODED, *,
                     payload_bits: int = codec.PAYLOAD_BITS) -> DecodeOutcome:
    return run_search_spaces([space], rnti, combine_rule, payload_bits=payload_bits)[0]


def fp_probability_analytic(n: int) -> float:
    """Chance that at least one of ``n`` uniformly random CRC checks passes."""
    if n < 0:
        raise ValueError("attempt count must be nonnegative")
    return float(-np.expm1(n * np.log1p(-CRC_PASS_PROBABILITY)))
