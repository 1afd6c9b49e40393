"""Bit-true DCI chain: scrambled CRC16, rate-1/3 TBCC, circular rate matching
and a wrap-around tail-biting Viterbi decoder.

Bits are ``uint8`` arrays of 0/1. Every public function accepts a single
sequence (1-D) or a batch of sequences stacked along the first axis.
Soft values follow one convention throughout the package: a positive LLR
means bit 0 is more likely.
"""
from __future__ import annotations

import numpy as np

from ._accel import USE_NUMBA, njit

PAYLOAD_BITS = 45
CRC_BITS = 16
CRC_POLY = 0x1021  # D^16 + D^12 + D^5 + 1, the LTE gCRC16
CONSTRAINT_LENGTH = 7
GENERATORS = (0o133, 0o171, 0o165)
N_STATES = 1 << (CONSTRAINT_LENGTH - 1)
CCE_BITS = 72
AGGREGATION_LEVELS = (1, 2, 4, 8)
VITERBI_CHUNK = 128


class CodecError(ValueError):
    """Raised for malformed codec inputs (wrong lengths, invalid levels)."""


def _as_bits(bits) -> np.ndarray:
    arr = np.asarray(bits)
    if arr.dtype != np.uint8:
        arr = arr.astype(np.uint8)
    return arr


def int_to_bits(value, width: int = CRC_BITS) -> np.ndarray:
    """MSB-first bit expansion of a nonnegative integer (or array of them)."""
    shifts = np.arange(width - 1, -1, -1)
    return ((np.asarray(value, dtype=np.int64)[..., None] >> shifts) & 1).astype(np.uint8)


def bits_to_int(bits) -> np.ndarray | int:
    """Inverse of :func:`int_to_bits`, vectorised over leading axes."""
    arr = _as_bits(bits)
    weights = 1 << np.arange(arr.shape[-1] - 1, -1, -1, dtype=np.int64)
    out = arr.astype(np.int64) @ weights
    return int(out) if arr.ndim == 1 else out


# ---------------------------------------------------------------------------
# CRC16
# ---------------------------------------------------------------------------

@njit
def _crc16_numba(bits):
    n_words, n_bits = bits.shape
    out = np.empty(n_words, np.int64)
    for w in range(n_words):
        reg = 0
        for i in range(n_bits):
            fb = ((reg >> 15) & 1) ^ bits[w, i]
            reg = (reg << 1) & 0xFFFF
            if fb:
                reg ^= CRC_POLY
        out[w] = reg
    return out


def _crc_columns(n_bits: int) -> np.ndarray:
    # remainder of x^(16 + n - 1 - i) mod g for each input position i
    full_poly = (1 << 16) | CRC_POLY
    cols = np.zeros(n_bits, np.int64)
    rem = 1 << 16
    for i in range(n_bits - 1, -1, -1):
        r = rem
        for deg in range(r.bit_length() - 1, 15, -1):
            if (r >> deg) & 1:
                r ^= full_poly << (deg - 16)
        cols[i] = r
        rem <<= 1
    return cols


_COLUMN_CACHE: dict[int, np.ndarray] = {}


def _crc16_numpy(bits: np.ndarray) -> np.ndarray:
    n_bits = bits.shape[1]
    cols = _COLUMN_CACHE.get(n_bits)
    if cols is None:
        cols = _COLUMN_CACHE.setdefault(n_bits, _crc_columns(n_bits))
    col_bits = ((cols[:, None] >> np.arange(15, -1, -1)) & 1).astype(np.int32)
    out = np.empty(bits.shape[0], np.int64)
    weights = 1 << np.arange(15, -1, -1, dtype=np.int64)
    step = 1 << 18
    for lo in range(0, bits.shape[0], step):
        parity = (bits[lo:lo + step].astype(np.int32) @ col_bits) & 1
        out[lo:lo + step] = parity @ weights
    return out


def crc16_register(bits, *, use_numba: bool | None = None) -> np.ndarray:
    """CRC16 remainders as integers for a ``(words, bits)`` batch."""
    arr = _as_bits(bits)
    if arr.ndim != 2:
        raise CodecError("expected a 2-D batch of bit sequences")
    if arr.shape[1] == 0:
        raise CodecError("CRC input must be nonempty")
    jit = USE_NUMBA if use_numba is None else use_numba
    if jit:
        return _crc16_numba(np.ascontiguousarray(arr))
    return _crc16_numpy(arr)


def crc16(bits) -> np.ndarray:
    """16 parity bits (MSB first) for the given sequence or batch."""
    arr = _as_bits(bits)
    if arr.shape[-1] == 0:
        raise CodecError("CRC input must be nonempty")
    values = crc16_register(arr.reshape(-1, arr.shape[-1]))
    out = ((values[:, None] >> np.arange(15, -1, -1)) & 1).astype(np.uint8)
    return out.reshape(arr.shape[:-1] + (CRC_BITS,))


def attach_crc(payload, rnti, *, payload_bits: int = PAYLOAD_BITS) -> np.ndarray:
    """Append ``crc16(payload) XOR rnti``; RNTI bit r_0 is the MSB.

    For a batch of payloads ``rnti`` may hold one value per row.
    """
    arr = _as_bits(payload)
    if arr.shape[-1] != payload_bits:
        raise CodecError(f"payload must have {payload_bits} bits, got {arr.shape[-1]}")
    scrambled = crc16(arr) ^ int_to_bits(_check_rnti(rnti))
    return np.concatenate([arr, scrambled], axis=-1)


def _check_rnti(rnti):
    arr = np.asarray(rnti, dtype=np.int64)
    if np.any((arr < 0) | (arr > 0xFFFF)):
        raise CodecError(f"RNTI must be a 16-bit value, got {rnti}")
    return int(arr) if arr.ndim == 0 else arr


def crc_pass_mask(frames, rnti, *, payload_bits: int = PAYLOAD_BITS) -> np.ndarray:
    """Boolean CRC verdict for each row of a ``(words, payload+16)`` batch.

    ``rnti`` may be a scalar or one value per row.
    """
    arr = _as_bits(frames)
    if arr.ndim != 2 or arr.shape[1] != payload_bits + CRC_BITS:
        raise CodecError(f"expected rows of {payload_bits + CRC_BITS} bits")
    computed = crc16_register(arr[:, :payload_bits])
    received = bits_to_int(arr[:, payload_bits:])
    return computed == (np.asarray(received) ^ np.asarray(rnti, dtype=np.int64))


def check_crc(frame, rnti: int, *, payload_bits: int = PAYLOAD_BITS) -> np.ndarray | None:
    """Descramble with ``rnti`` and verify; returns the payload or ``None``."""
    arr = _as_bits(frame)
    if arr.ndim != 1 or arr.size != payload_bits + CRC_BITS:
        raise CodecError(
            f"frame must have {payload_bits + CRC_BITS} bits, got shape {arr.shape}")
    ok = crc_pass_mask(arr[None, :], _check_rnti(rnti), payload_bits=payload_bits)[0]
    return arr[:payload_bits].copy() if ok else None


# ---------------------------------------------------------------------------
# Tail-biting convolutional code
# ---------------------------------------------------------------------------

def _generator_taps() -> np.ndarray:
    # taps[g, j] multiplies c_{k-j}; octal MSB is the current input
    taps = np.zeros((len(GENERATORS), CONSTRAINT_LENGTH), np.uint8)
    for g, poly in enumerate(GENERATORS):
        for j in range(CONSTRAINT_LENGTH):
            taps[g, j] = (poly >> (CONSTRAINT_LENGTH - 1 - j)) & 1
    return taps


_TAPS = _generator_taps()
_GEN = np.array(GENERATORS, np.int64)


@njit
def _tbcc_encode_numba(bits, gens):
    n_words, n = bits.shape
    out = np.empty((n_words, 3 * n), np.uint8)
    for w in range(n_words):
        state = 0
        for i in range(6):
            state |= np.int64(bits[w, n - 1 - i]) << (5 - i)
        for k in range(n):
            reg = (np.int64(bits[w, k]) << 6) | state
            for g in range(3):
                x = reg & gens[g]
                p = 0
                while x:
                    p ^= 1
                    x &= x - 1
                out[w, 3 * k + g] = p
            state = reg >> 1
    return out


def _tbcc_encode_numpy(bits: np.ndarray) -> np.ndarray:
    n_words, n = bits.shape
    out = np.zeros((n_words, n, 3), np.uint8)
    for g in range(3):
        for j in range(CONSTRAINT_LENGTH):
            if _TAPS[g, j]:
                # c_{k-j} with tail-biting wrap is a circular shift
                out[:, :, g] ^= np.roll(bits, j, axis=1)
    return out.reshape(n_words, 3 * n)


def tbcc_encode(bits, *, payload_bits: int = PAYLOAD_BITS,
                use_numba: bool | None = None) -> np.ndarray:
    """Rate-1/3, K=7 tail-biting encoder; output interleaved (g0, g1, g2) per bit."""
    arr = _as_bits(bits)
    n = payload_bits + CRC_BITS
    if arr.shape[-1] != n:
        raise CodecError(f"encoder input must have {n} bits, got {arr.shape[-1]}")
    flat = np.ascontiguousarray(arr.reshape(-1, n))
    jit = USE_NUMBA if use_numba is None else use_numba
    out = _tbcc_encode_numba(flat, _GEN) if jit else _tbcc_encode_numpy(flat)
    return out.reshape(arr.shape[:-1] + (3 * n,))


def encoder_final_state(bits) -> int:
    """Shift-register content after encoding ``bits`` (equals the start state)."""
    arr = _as_bits(bits)
    state = 0
    for b in arr[-6:]:
        state = (state >> 1) | (int(b) << 5)
    return state


def encoder_start_state(bits) -> int:
    arr = _as_bits(bits)
    n = arr.size
    return sum(int(arr[n - 1 - i]) << (5 - i) for i in range(6))


# ---------------------------------------------------------------------------
# Rate matching
# ---------------------------------------------------------------------------

def codeword_bits(al: int) -> int:
    if al not in AGGREGATION_LEVELS:
        raise CodecError(f"aggregation level must be one of {AGGREGATION_LEVELS}, got {al}")
    return CCE_BITS * al


# inter-column permutation of the 32-column sub-block interleaver (conv. codes)
SUBBLOCK_PERMUTATION = (1, 17, 9, 25, 5, 21, 13, 29, 3, 19, 11, 27, 7, 23, 15, 31,
                        0, 16, 8, 24, 4, 20, 12, 28, 2, 18, 10, 26, 6, 22, 14, 30)


def circular_buffer_order(n_bits: int = PAYLOAD_BITS + CRC_BITS) -> np.ndarray:
    """Mother-codeword positions in circular-buffer order, dummy bits removed.

    Each of the three generator streams goes through the sub-block
    interleaver; the buffer is stream 0, then stream 1, then stream 2.
    """
    cols = len(SUBBLOCK_PERMUTATION)
    rows = -(-n_bits // cols)
    n_dummy = rows * cols - n_bits
    grid = np.concatenate([np.full(n_dummy, -1), np.arange(n_bits)]).reshape(rows, cols)
    stream_order = grid[:, list(SUBBLOCK_PERMUTATION)].T.reshape(-1)
    stream_order = stream_order[stream_order >= 0]
    return np.concatenate([3 * stream_order + g for g in range(3)])


_BUFFER_ORDER: dict[int, np.ndarray] = {}


def _buffer_order(mother_len: int) -> np.ndarray:
    order = _BUFFER_ORDER.get(mother_len)
    if order is None:
        if mother_len % 3:
            raise CodecError("mother codeword length must be a multiple of 3")
        order = _BUFFER_ORDER.setdefault(mother_len, circular_buffer_order(mother_len // 3))
    return order


def rate_match(mother, al: int) -> np.ndarray:
    """Select ``72 * al`` bits from the circular buffer, wrapping as needed.

    Output bit i is buffer entry ``i mod 183``; the buffer holds every mother
    bit exactly once, so AL 4/8 repeat and AL 1/2 puncture.
    """
    e = codeword_bits(al)
    arr = np.asarray(mother)
    order = _buffer_order(arr.shape[-1])
    return arr[..., order[np.arange(e) % order.size]]


def rate_recover(llrs, al: int, *, mother_len: int = 3 * (PAYLOAD_BITS + CRC_BITS)) -> np.ndarray:
    """Sum repeated soft values back onto the mother codeword; positions that
    were never transmitted stay at zero (erasure)."""
    e = codeword_bits(al)
    arr = np.asarray(llrs, dtype=np.float64)
    if arr.shape[-1] != e:
        raise CodecError(f"expected {e} soft values for AL {al}, got {arr.shape[-1]}")
    order = _buffer_order(mother_len)
    lead = arr.shape[:-1]
    reps = -(-e // mother_len)
    padded = np.zeros(lead + (reps * mother_len,))
    padded[..., :e] = arr
    buffered = padded.reshape(lead + (reps, mother_len)).sum(axis=-2)
    out = np.empty_like(buffered)
    out[..., order] = buffered
    return out


# ---------------------------------------------------------------------------
# Tail-biting Viterbi
# ---------------------------------------------------------------------------

def _trellis_tables():
    # state = last six inputs, newest in bit 5; next = (state >> 1) | (u << 5)
    out_idx = np.zeros((N_STATES, 2), np.int64)
    for nxt in range(N_STATES):
        u = nxt >> 5
        for j in range(2):
            prev = ((nxt << 1) & (N_STATES - 1)) | j
            reg = (u << 6) | prev
            pattern = 0
            for poly in GENERATORS:
                pattern = (pattern << 1) | (bin(reg & poly).count("1") & 1)
            out_idx[nxt, j] = pattern
    # branch metric sign of each output bit in each of the 8 patterns
    signs = np.array([[1.0 - 2.0 * ((o >> (2 - i)) & 1) for i in range(3)]
                      for o in range(8)], np.float32)
    return out_idx, signs


_OUT_IDX, _SIGNS = _trellis_tables()


@njit
def _viterbi_numba(llr_t, out_idx):
    # llr_t: (3n, B) float32, batch innermost so the ACS loop vectorises
    n3, n_words = llr_t.shape
    n = n3 // 3
    steps = 3 * n
    pm = np.zeros((64, n_words), np.float32)
    new = np.empty((64, n_words), np.float32)
    bm = np.empty((8, n_words), np.float32)
    dec = np.empty((steps, 64, n_words), np.uint8)
    res = np.empty((n_words, n), np.uint8)
    for t in range(steps):
        k = 3 * (t % n)
        a0 = llr_t[k]
        a1 = llr_t[k + 1]
        a2 = llr_t[k + 2]
        for o in range(8):
            row = bm[o]
            for b in range(n_words):
                v = a0[b] if (o & 4) == 0 else -a0[b]
                v += a1[b] if (o & 2) == 0 else -a1[b]
                v += a2[b] if (o & 1) == 0 else -a2[b]
                row[b] = v
        for s in range(64):
            p0 = (s << 1) & 63
            pa = pm[p0]
            pb = pm[p0 + 1]
            ba = bm[out_idx[s, 0]]
            bb = bm[out_idx[s, 1]]
            nw = new[s]
            dc = dec[t, s]
            for b in range(n_words):
                m0 = pa[b] + ba[b]
                m1 = pb[b] + bb[b]
                d = m1 > m0
                nw[b] = m1 if d else m0
                dc[b] = d
        pm, new = new, pm
    for b in range(n_words):
        s = 0
        best = pm[0, b]
        for c in range(1, 64):
            if pm[c, b] > best:
                best = pm[c, b]
                s = c
        for t in range(steps - 1, n - 1, -1):
            if t < 2 * n:
                res[b, t - n] = s >> 5
            s = ((s << 1) & 63) | dec[t, s, b]
    return res


def _viterbi_numpy(llr_t: np.ndarray) -> np.ndarray:
    n3, n_words = llr_t.shape
    n = n3 // 3
    steps = 3 * n
    prev0 = (np.arange(64) << 1) & 63
    prev1 = prev0 + 1
    o0, o1 = _OUT_IDX[:, 0], _OUT_IDX[:, 1]
    s0, s1, s2 = (_SIGNS[:, i, None] for i in range(3))
    pm = np.zeros((64, n_words), np.float32)
    dec = np.empty((steps, 64, n_words), np.uint8)
    for t in range(steps):
        k = 3 * (t % n)
        bm = s0 * llr_t[k] + s1 * llr_t[k + 1] + s2 * llr_t[k + 2]
        m0 = pm[prev0] + bm[o0]
        m1 = pm[prev1] + bm[o1]
        d = m1 > m0
        pm = np.where(d, m1, m0)
        dec[t] = d
    res = np.empty((n_words, n), np.uint8)
    cols = np.arange(n_words)
    s = np.argmax(pm, axis=0)
    for t in range(steps - 1, n - 1, -1):
        if t < 2 * n:
            res[:, t - n] = s >> 5
        s = ((s << 1) & 63) | dec[t, s, cols]
    return res


def viterbi_decode_tailbiting(llrs, *, payload_bits: int = PAYLOAD_BITS,
                              use_numba: bool | None = None) -> np.ndarray:
    """Soft-input tail-biting Viterbi decoding (three-fold wrap-around).

    The mother-codeword LLRs are repeated three times, decoded from uniform
    start metrics, traced back from the best end state, and the middle copy's
    decisions are returned.
    """
    arr = np.asarray(llrs, dtype=np.float32)
    n = payload_bits + CRC_BITS
    if arr.shape[-1] != 3 * n:
        raise CodecError(f"decoder input must have {3 * n} soft values, got {arr.shape[-1]}")
    flat = arr.reshape(-1, 3 * n)
    jit = USE_NUMBA if use_numba is None else use_numba
    out = np.empty((flat.shape[0], n), np.uint8)
    # rows are independent; chunking only bounds the decision buffer
    for lo in range(0, flat.shape[0], VITERBI_CHUNK):
        llr_t = np.ascontiguousarray(flat[lo:lo + VITERBI_CHUNK].T)
        out[lo:lo + VITERBI_CHUNK] = (_viterbi_numba(llr_t, _OUT_IDX) if jit
                                      else _viterbi_numpy(llr_t))
    return out.reshape(arr.shape[:-1] + (n,))


def bits_to_llr(bits, amplitude: float = 1.0) -> np.ndarray:
    """Noiseless soft values: +A for bit 0, -A for bit 1."""
    return amplitude * (1.0 - 2.0 * np.asarray(bits, dtype=np.float64))
