"""Configuration files and result serialisation for the simulator."""
from __future__ import annotations

import csv
import io
from dataclasses import fields

from .blind import CombineRule, Mode, fp_probability_analytic
from .harness import ConfigError, SimConfig, SweepStats

CSV_COLUMNS = ("mode", "al", "snr_db", "trials", "detects", "misses", "false_rejects",
               "fp_events", "fp_opportunities", "bler", "miss_rate", "fp_rate_attempt",
               "fp_rate_subframe", "ci_low", "ci_high")

HRLLC_ERROR_TARGET = 1e-4
URLLC_ERROR_TARGET = 1e-5


class ConfigParseError(ConfigError):
    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")
        self.line = line
        self.key = key


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


def _optional_int(text: str) -> int | None:
    return None if text.strip().lower() in ("", "none", "off") else int(text)


_PARSERS = {
    "modes": lambda t: tuple(Mode(v.strip()) for v in t.split(",") if v.strip()),
    "al_set": _int_list,
    "snr_start": float,
    "snr_stop": float,
    "snr_step": float,
    "trials_per_point": int,
    "target_events": _optional_int,
    "master_seed": int,
    "interference": str.strip,
    "combine_rule": lambda t: CombineRule(t.strip()),
    "fading": str.strip,
    "n_candidates": int,
    "payload_bits": int,
    "crc_bits": int,
}
assert set(_PARSERS) == {f.name for f in fields(SimConfig)}


def parse_config_values(text: str) -> tuple[dict, dict]:
    """Parse ``key=value`` lines; returns ``(values, line_numbers)``."""
    values, lines = {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigParseError(f"expected key=value, got {raw.strip()!r}", lineno)
        key, _, value = (part.strip() for part in line.partition("="))
        if key not in _PARSERS:
            raise ConfigParseError(f"unknown key {key!r}", lineno, key)
        try:
            values[key] = _PARSERS[key](value)
        except ValueError as exc:
            raise ConfigParseError(f"{key}: malformed value {value!r} ({exc})", lineno, key) from None
        lines[key] = lineno
    return values, lines


def build_config(values: dict, lines: dict | None = None) -> SimConfig:
    lines = lines or {}
    try:
        return SimConfig(**values)
    except ConfigError as exc:
        key = str(exc).split(":", 1)[0]
        raise ConfigParseError(str(exc), lines.get(key), key) from None


def parse_config(text: str) -> SimConfig:
    """Validated :class:`SimConfig`; absent keys take the defaults."""
    values, lines = parse_config_values(text)
    return build_config(values, lines)


def serialize_config(cfg: SimConfig) -> str:
    out = []
    for f in fields(SimConfig):
        v = getattr(cfg, f.name)
        if f.name == "modes":
            text = ",".join(m.value for m in v)
        elif f.name == "al_set":
            text = ",".join(str(a) for a in v)
        elif f.name == "combine_rule":
            text = v.value
        elif v is None:
            text = "none"
        else:
            text = repr(v) if isinstance(v, float) else str(v)
        out.append(f"{f.name}={text}")
    return "\n".join(out) + "\n"


def _rate(x: float) -> str:
    return f"{x:.6g}"


def csv_rows(stats: SweepStats):
    for (mode, al, snr), p in stats.sorted_items():
        lo, hi = p.ci95("miss_rate")
        yield (mode.value, al, f"{snr:g}", p.trials, p.detects, p.misses, p.false_rejects,
               p.fp_events, p.fp_opportunities, _rate(p.bler), _rate(p.miss_rate),
               _rate(p.fp_rate_per_attempt), _rate(p.fp_rate_per_subframe), _rate(lo), _rate(hi))


def emit_results(stats: SweepStats, fmt: str = "csv") -> str:
    """Serialise sweep statistics; output is a pure function of ``stats``.

    The CSV confidence interval columns bracket the miss rate.
    """
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        writer.writerows(csv_rows(stats))
        return buf.getvalue()
    if fmt != "table":
        raise ValueError(f"unknown format {fmt!r}")
    head = ("mode", "AL", "SNR dB", "trials", "BLER", "miss", "miss 95% CI",
            "false rej", "FP/attempt", "FP/subframe")
    rows = []
    for (mode, al, snr), p in stats.sorted_items():
        lo, hi = p.ci95("miss_rate")
        rows.append((mode.value, str(al), f"{snr:g}", str(p.trials), _rate(p.bler),
                     _rate(p.miss_rate), f"[{_rate(lo)}, {_rate(hi)}]", str(p.false_rejects),
                     _rate(p.fp_rate_per_attempt), _rate(p.fp_rate_per_subframe)))
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h)
              for i, h in enumerate(head)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(head, widths))]
    lines += ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in rows]
    ref = fp_probability_analytic(20)
    lines.append("")
    lines.append(f"Analytic single-DCI false-positive reference, 20 blind decodes: {ref:.4e}")
    lines += [f"note: {n}" for n in stats.notes]
    return "\n".join(lines) + "\n"


def fp_analytic_command(n: int) -> str:
    if n < 0:
        raise ValueError("attempt count must be nonnegative")
    p = fp_probability_analytic(n)
    verdict = ("exceeds 1e-4 HRLLC data target" if p > HRLLC_ERROR_TARGET
               else "below 1e-4 HRLLC data target")
    urllc = ("exceeds 1e-5 URLLC target" if p > URLLC_ERROR_TARGET
             else "below 1e-5 URLLC target")
    return "\n".join([
        f"P_FP(N={n}) = 1 - (1 - 2^-16)^{n} = {p:.4e}" if p else f"P_FP(N={n}) = 0",
        f"{verdict}; {urllc}",
        "",
    ])
