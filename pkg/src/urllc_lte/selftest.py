"""Known-vector and roundtrip checks for the codec, run by ``codec-selftest``."""
from __future__ import annotations

import numpy as np

from . import codec
from ._accel import backend_name

# frozen from an independent long-division / shift-register reference
KNOWN_CRC_UNIT = 0x1A84        # "1" followed by 44 zeros
KNOWN_INPUT = "0011010000010100000110111110100111110100000010000111011100100"
KNOWN_CRC_INPUT45 = 0x903C
KNOWN_CODEWORD = (
    "001001011011100110100010101110100000011000101110010110100000100100110011110110"
    "011111100111101010010111010100111100111101101110100111111011111110001011011011"
    "010111111001001111100001100"
)


def _bits(text: str) -> np.ndarray:
    return np.frombuffer(text.encode(), np.uint8) - ord("0")


def run_selftest(n_random: int = 200, seed: int = 7) -> list[tuple[str, bool, str]]:
    results = []

    def check(name, ok, detail=""):
        results.append((name, bool(ok), detail))

    unit = np.zeros(45, np.uint8)
    unit[0] = 1
    check("crc16 zero input", codec.bits_to_int(codec.crc16(np.zeros(45, np.uint8))) == 0)
    got = codec.bits_to_int(codec.crc16(unit))
    check("crc16 unit vector", got == KNOWN_CRC_UNIT, f"0x{got:04X}")
    x = _bits(KNOWN_INPUT)
    got = codec.bits_to_int(codec.crc16(x[:45]))
    check("crc16 known vector", got == KNOWN_CRC_INPUT45, f"0x{got:04X}")
    check("tbcc known vector", np.array_equal(codec.tbcc_encode(x), _bits(KNOWN_CODEWORD)))
    for jit in (False, True):
        label = "numba" if jit else "numpy"
        check(f"tbcc known vector ({label})",
              np.array_equal(codec.tbcc_encode(x, use_numba=jit), _bits(KNOWN_CODEWORD)))

    rng = np.random.default_rng(seed)
    payloads = rng.integers(0, 2, (n_random, 45), dtype=np.uint8)
    rnti = 0xBEEF
    frames = codec.attach_crc(payloads, rnti)
    mother = codec.tbcc_encode(frames)
    for al in codec.AGGREGATION_LEVELS:
        soft = codec.bits_to_llr(codec.rate_match(mother, al), 4.0)
        decoded = codec.viterbi_decode_tailbiting(codec.rate_recover(soft, al))
        ok = codec.crc_pass_mask(decoded, rnti)
        bad = int(np.sum(~ok | np.any(decoded[:, :45] != payloads, axis=1)))
        check(f"noiseless roundtrip AL{al}", bad == 0, f"{bad}/{n_random} failures")
    wrong = codec.crc_pass_mask(frames, rnti ^ 0x0001)
    check("wrong RNTI rejected", not wrong.any())
    starts = [codec.encoder_start_state(f) == codec.encoder_final_state(f) for f in frames]
    check("tail-biting start state equals end state", all(starts))
    return results


def format_report(results) -> str:
    lines = [f"codec self-test (kernels: {backend_name()})"]
    for name, ok, detail in results:
        lines.append(f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  [{detail}]" if detail else ""))
    return "\n".join(lines) + "\n"
