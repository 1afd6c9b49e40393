"""Seeded Monte Carlo sweeps over mode x aggregation level x SNR.

Every trial draws from its own generator, seeded by
``(master_seed, mode, al, snr_index, trial_index)``, so results do not depend
on how trials are split into blocks or spread over worker processes.
"""
from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from concurrent.futures.process import BrokenProcessPool
from dataclasses import dataclass, field, fields, replace
from statistics import NormalDist

import numpy as np

from . import codec
from .blind import (DEFAULT_CANDIDATES, CombineRule, DecodeOutcome, Mode, SearchSpace, Truth,
                    classify, decide_search_spaces, decode_pairs_combined, default_pairing,
                    run_search_space)
from .channel import FADING_MODES, apply_channel, qpsk_modulate

log = logging.getLogger(__name__)

UE_RNTI = 0x4A3F
BLOCK_TRIALS = 250
Z95 = 1.959964

INTERFERENCE = ("otherue", "noise")
MODE_ORDER = (Mode.SINGLE, Mode.DUP_BITWISE, Mode.DUP_SYMBOLWISE)


class ConfigError(ValueError):
    """Invalid simulation configuration."""


class PartialSweepError(RuntimeError):
    """A sweep stopped early; ``stats`` holds every grid point that completed."""

    def __init__(self, message: str, stats: "SweepStats"):
        super().__init__(message)
        self.stats = stats


@dataclass(frozen=True)
class SimConfig:
    modes: tuple[Mode, ...] = MODE_ORDER
    al_set: tuple[int, ...] = codec.AGGREGATION_LEVELS
    snr_start: float = -10.0
    snr_stop: float = 10.0
    snr_step: float = 1.0
    trials_per_point: int = 100_000
    target_events: int | None = None
    master_seed: int = 20180101
    interference: str = "otherue"
    combine_rule: CombineRule = CombineRule.IF_DECODED
    fading: str = "iid"
    n_candidates: int = DEFAULT_CANDIDATES
    payload_bits: int = codec.PAYLOAD_BITS
    crc_bits: int = codec.CRC_BITS

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(sorted({Mode(m) for m in self.modes},
                                                       key=MODE_ORDER.index)))
        object.__setattr__(self, "al_set", tuple(sorted(set(int(a) for a in self.al_set))))
        object.__setattr__(self, "combine_rule", CombineRule(self.combine_rule))
        self.validate()

    def validate(self) -> None:
        if not self.modes:
            raise ConfigError("modes: at least one mode required")
        if not self.al_set or any(a not in codec.AGGREGATION_LEVELS for a in self.al_set):
            raise ConfigError(f"al_set: values must be in {codec.AGGREGATION_LEVELS}")
        for name in ("snr_start", "snr_stop", "snr_step"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name}: must be finite")
        if self.snr_step <= 0:
            raise ConfigError("snr_step: must be > 0")
        if self.snr_stop < self.snr_start:
            raise ConfigError("snr_stop: must be >= snr_start")
        if self.trials_per_point < 1:
            raise ConfigError("trials_per_point: must be >= 1")
        if self.target_events is not None and self.target_events < 1:
            raise ConfigError("target_events: must be >= 1")
        if not 0 <= self.master_seed < 2 ** 64:
            raise ConfigError("master_seed: must be a 64-bit unsigned integer")
        if self.interference not in INTERFERENCE:
            raise ConfigError(f"interference: must be one of {INTERFERENCE}")
        if self.fading not in FADING_MODES:
            raise ConfigError(f"fading: must be one of {FADING_MODES}")
        if self.n_candidates < 2 or self.n_candidates % 2:
            raise ConfigError("n_candidates: must be an even number >= 2")
        if self.payload_bits < 6:
            raise ConfigError("payload_bits: must be >= 6")
        if self.crc_bits != codec.CRC_BITS:
            raise ConfigError("crc_bits: only 16 is supported")

    @property
    def snr_grid(self) -> tuple[float, ...]:
        n = int(math.floor((self.snr_stop - self.snr_start) / self.snr_step + 1e-9)) + 1
        return tuple(round(self.snr_start + i * self.snr_step, 10) for i in range(n))

    def attempts_per_subframe(self, mode: Mode) -> int:
        return self.n_candidates // 2 if Mode(mode).duplicated else self.n_candidates


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------

def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials < 1 or not 0 <= successes <= trials:
        raise ValueError(f"need 0 <= successes <= trials and trials >= 1, got {successes}/{trials}")
    z = Z95 if confidence == 0.95 else NormalDist().inv_cdf(0.5 + confidence / 2.0)
    p = successes / trials
    z2n = z * z / trials
    center = (p + z2n / 2.0) / (1.0 + z2n)
    half = z / (1.0 + z2n) * math.sqrt(p * (1.0 - p) / trials + z2n / (4.0 * trials))
    low = 0.0 if successes == 0 else max(0.0, center - half)
    high = 1.0 if successes == trials else min(1.0, center + half)
    return low, high


_COUNTS = ("trials", "detects", "misses", "false_rejects", "fp_events", "fp_subframes",
           "block_errors", "fp_opportunities")


@dataclass
class PointStats:
    """Event counts at one (mode, al, snr) grid point.

    ``block_errors`` is the genie combined BLER count in duplication modes
    (target pair always combined) and equals ``misses`` in single mode.
    """

    trials: int = 0
    detects: int = 0
    misses: int = 0
    false_rejects: int = 0
    fp_events: int = 0
    fp_subframes: int = 0
    block_errors: int = 0
    fp_opportunities: int = 0

    def __add__(self, other: "PointStats") -> "PointStats":
        return PointStats(*(getattr(self, k) + getattr(other, k) for k in _COUNTS))

    def add_outcome(self, outcome: DecodeOutcome, attempts: int, block_error: bool) -> None:
        self.trials += 1
        self.detects += outcome.detected
        self.misses += outcome.missed
        self.false_rejects += outcome.false_reject
        self.fp_events += outcome.false_positive_count
        self.fp_subframes += outcome.any_false_positive
        self.block_errors += block_error
        self.fp_opportunities += attempts

    def _rate(self, num: int, den: int) -> float:
        return num / den if den else float("nan")

    @property
    def bler(self) -> float:
        return self._rate(self.block_errors, self.trials)

    @property
    def miss_rate(self) -> float:
        return self._rate(self.misses, self.trials)

    @property
    def fp_rate_per_attempt(self) -> float:
        return self._rate(self.fp_events, self.fp_opportunities)

    @property
    def fp_rate_per_subframe(self) -> float:
        return self._rate(self.fp_subframes, self.trials)

    def ci95(self, rate: str = "miss_rate") -> tuple[float, float]:
        num, den = {
            "bler": (self.block_errors, self.trials),
            "miss_rate": (self.misses, self.trials),
            "fp_rate_per_attempt": (min(self.fp_events, self.fp_opportunities), self.fp_opportunities),
            "fp_rate_per_subframe": (self.fp_subframes, self.trials),
        }[rate]
        return wilson_interval(num, den) if den else (float("nan"), float("nan"))


PointKey = tuple  # (Mode, al, snr_db)


@dataclass
class SweepStats:
    points: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def sorted_items(self):
        return sorted(self.points.items(),
                      key=lambda kv: (MODE_ORDER.index(kv[0][0]), kv[0][1], kv[0][2]))

    def merge(self, other: "SweepStats") -> "SweepStats":
        out = dict(self.points)
        for key, stats in other.points.items():
            out[key] = out[key] + stats if key in out else stats
        notes = list(self.notes) + [n for n in other.notes if n not in self.notes]
        return SweepStats(out, notes)

    def get(self, mode, al, snr_db) -> PointStats:
        return self.points[(Mode(mode), int(al), float(snr_db))]


# ---------------------------------------------------------------------------
# Trials
# ---------------------------------------------------------------------------

def trial_generator(cfg: SimConfig, mode: Mode, al: int, snr_index: int,
                    trial_index: int) -> np.random.Generator:
    seq = np.random.SeedSequence([cfg.master_seed, MODE_ORDER.index(Mode(mode)), int(al),
                                  int(snr_index), int(trial_index)])
    return np.random.default_rng(seq)


def build_search_space(rng: np.random.Generator, mode: Mode, al: int, snr_db: float,
                       cfg: SimConfig, *, rnti: int = UE_RNTI) -> SearchSpace:
    """Draw one subframe: our DCI (once or duplicated) among interferers."""
    return build_search_spaces([rng], mode, al, snr_db, cfg, rnti=rnti)[0]


def build_search_spaces(rngs, mode: Mode, al: int, snr_db: float, cfg: SimConfig, *,
                        rnti: int = UE_RNTI) -> list[SearchSpace]:
    """One search space per generator.

    Each generator is consumed in the same order as for a lone trial
    (payloads, RNTIs, target slot, then fading and noise); only the
    deterministic encode/modulate step is batched across trials.
    """
    mode = Mode(mode)
    n, k = cfg.n_candidates, cfg.payload_bits
    pairing = default_pairing(n) if mode.duplicated else None
    interferer = Truth.OTHER_UE if cfg.interference == "otherue" else Truth.NOISE
    n_trials = len(rngs)
    payloads = np.empty((n_trials, n, k), np.uint8)
    rntis = np.empty((n_trials, n), np.int64)
    truth = np.full((n_trials, n), interferer, dtype=np.int64)
    targets = np.empty((n_trials, k), np.uint8)
    for b, rng in enumerate(rngs):
        targets[b] = rng.integers(0, 2, k, dtype=np.uint8)
        payloads[b] = rng.integers(0, 2, (n, k), dtype=np.uint8)
        # uniform over the 65535 RNTIs other than ours
        r = rng.integers(0, 0xFFFF, n)
        rntis[b] = r + (r >= rnti)
        rows = pairing[rng.integers(0, n // 2)] if mode.duplicated else rng.integers(0, n)
        truth[b, rows] = Truth.TARGET
        payloads[b, rows] = targets[b]
        rntis[b, rows] = rnti

    frames = codec.attach_crc(payloads.reshape(-1, k), rntis.reshape(-1), payload_bits=k)
    mother = codec.tbcc_encode(frames, payload_bits=k)
    symbols = qpsk_modulate(codec.rate_match(mother, al)).reshape(n_trials, n, -1)
    if cfg.interference == "noise":
        symbols[truth != Truth.TARGET] = 0.0

    spaces = []
    for b, rng in enumerate(rngs):
        obs = apply_channel(symbols[b], snr_db, rng, fading=cfg.fading)
        spaces.append(SearchSpace(obs.received, obs.gains, obs.noise_var, al, truth[b], mode,
                                  target_payload=targets[b], pairing=pairing))
    return spaces


def run_trial(cfg: SimConfig, mode: Mode, al: int, snr_index: int,
              trial_index: int) -> DecodeOutcome:
    """One subframe at grid SNR ``cfg.snr_grid[snr_index]``."""
    snr_db = cfg.snr_grid[snr_index]
    rng = trial_generator(cfg, mode, al, snr_index, trial_index)
    space = build_search_space(rng, mode, al, snr_db, cfg)
    return run_search_space(space, UE_RNTI, cfg.combine_rule, payload_bits=cfg.payload_bits)


def simulate_block(cfg: SimConfig, mode: Mode, al: int, snr_index: int,
                   start: int, stop: int) -> PointStats:
    """Trials ``start..stop-1`` of one grid point, decoded as a single batch."""
    mode = Mode(mode)
    snr_db = cfg.snr_grid[snr_index]
    rngs = [trial_generator(cfg, mode, al, snr_index, t) for t in range(start, stop)]
    spaces = build_search_spaces(rngs, mode, al, snr_db, cfg)
    decisions = decide_search_spaces(spaces, UE_RNTI, cfg.combine_rule,
                                     payload_bits=cfg.payload_bits)
    outcomes = [classify(s, d) for s, d in zip(spaces, decisions)]

    if mode.duplicated:
        # genie reference: the target pair combined unconditionally
        combined_ok = np.zeros(len(spaces), bool)
        todo = []
        for i, (s, d) in enumerate(zip(spaces, decisions)):
            tp = s.target_pair()
            if d.pair_combined[tp]:
                combined_ok[i] = d.pair_combined_ok[tp] and np.array_equal(
                    d.pair_combined_payloads[tp], s.target_payload)
            else:
                todo.append((i, tp))
        ok, pay = decode_pairs_combined(spaces, todo, UE_RNTI, payload_bits=cfg.payload_bits)
        for (i, _), o, p in zip(todo, ok, pay):
            combined_ok[i] = o and np.array_equal(p, spaces[i].target_payload)
        block_errors = ~combined_ok
    else:
        block_errors = np.array([o.missed for o in outcomes])

    stats = PointStats()
    attempts = cfg.attempts_per_subframe(mode)
    for o, e in zip(outcomes, block_errors):
        stats.add_outcome(o, attempts, bool(e))
    return stats


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

def worker_count(requested: int | None = None) -> int:
    n = requested or os.cpu_count() or 1
    cap = os.environ.get("URLLC_WORKERS")
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


def _blocks(start: int, stop: int):
    lo = start
    while lo < stop:
        hi = min(stop, (lo // BLOCK_TRIALS + 1) * BLOCK_TRIALS)
        yield lo, hi
        lo = hi


def run_sweep(cfg: SimConfig, *, trial_start: int = 0, trial_stop: int | None = None,
              workers: int | None = None, progress=None) -> SweepStats:
    """Evaluate every grid point over trial indices ``[trial_start, trial_stop)``.

    With ``cfg.target_events`` set, a point stops after the first block in
    which its miss count reaches the target. Blocks are aligned to
    ``BLOCK_TRIALS`` and consumed in order, so the result is the same for any
    worker count.
    """
    stop = cfg.trials_per_point if trial_stop is None else trial_stop
    if not 0 <= trial_start <= stop:
        raise ConfigError("trial range must satisfy 0 <= start <= stop")
    n_workers = worker_count(workers)
    result = SweepStats(notes=sweep_notes(cfg))
    points = [(m, al, i) for m in cfg.modes for al in cfg.al_set
              for i in range(len(cfg.snr_grid))]
    pool = ProcessPoolExecutor(max_workers=n_workers) if n_workers > 1 else None
    try:
        for mode, al, si in points:
            stats = _run_point(cfg, mode, al, si, trial_start, stop, pool, n_workers)
            result.points[(mode, al, cfg.snr_grid[si])] = stats
            if progress is not None:
                progress(mode, al, cfg.snr_grid[si], stats)
    except (MemoryError, KeyboardInterrupt, BrokenProcessPool, OSError) as exc:
        raise PartialSweepError(f"sweep interrupted ({type(exc).__name__}); "
                                f"{len(result.points)} of {len(points)} points complete",
                                result) from exc
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)
    return result


def _run_point(cfg, mode, al, si, start, stop, pool, n_workers) -> PointStats:
    total = PointStats()
    blocks = list(_blocks(start, stop))
    if pool is None:
        for lo, hi in blocks:
            total = total + simulate_block(cfg, mode, al, si, lo, hi)
            if cfg.target_events is not None and total.misses >= cfg.target_events:
                break
        return total
    for w in range(0, len(blocks), n_workers):
        wave = blocks[w:w + n_workers]
        futures = [pool.submit(simulate_block, cfg, mode, al, si, lo, hi) for lo, hi in wave]
        for fut in futures:
            total = total + fut.result()
            if cfg.target_events is not None and total.misses >= cfg.target_events:
                for f in futures:
                    f.cancel()
                return total
    return total


def sweep_notes(cfg: SimConfig) -> list[str]:
    grid = cfg.snr_grid
    return [
        f"SNR grid: Es/N0 {grid[0]:g} .. {grid[-1]:g} dB, step {cfg.snr_step:g} dB ({len(grid)} points)",
        "Duplicate DCIs see independent fading realisations"
        + (" (iid per symbol)." if cfg.fading == "iid" else " (one gain per candidate)."),
        f"Interference: {cfg.interference}; combining rule: {cfg.combine_rule.value}; "
        f"{cfg.n_candidates} blind decodes per subframe.",
        "BLER in duplication modes is the target pair combined unconditionally; "
        "miss rate applies the combination check and includes false rejections.",
        "The 1e-5 URLLC reliability target is not verifiable by plain Monte Carlo at this "
        "scale; it is assessed analytically from the false-positive formula only.",
    ]


def with_trials(cfg: SimConfig, trials: int) -> SimConfig:
    return replace(cfg, trials_per_point=trials)


CONFIG_FIELDS = tuple(f.name for f in fields(SimConfig))
