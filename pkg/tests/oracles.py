"""Straightforward reference implementations used as test oracles.

Written independently of the package: list-based polynomial long division
for the CRC and a literal shift register for the convolutional encoder.
"""

GCRC16 = [1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1]  # x^16 + x^12 + x^5 + 1


def crc16_longdiv(bits):
    work = list(bits) + [0] * 16
    for i in range(len(bits)):
        if work[i]:
            for j in range(17):
                work[i + j] ^= GCRC16[j]
    return work[-16:]


def tbcc_shiftreg(c, gens=("133", "171", "165")):
    taps = [[int(b) for b in format(int(o, 8), "07b")] for o in gens]
    reg = [c[-1 - i] for i in range(6)]  # reg[0] = most recent input
    out = []
    for bit in c:
        window = [bit] + reg
        for t in taps:
            out.append(sum(a * b for a, b in zip(t, window)) % 2)
        reg = [bit] + reg[:-1]
    return out


def qpsk_ber_awgn(snr_db):
    """Uncoded Gray QPSK bit error rate at Es/N0 = snr_db: Q(sqrt(Es/N0))."""
    import math
    es_n0 = 10 ** (snr_db / 10)
    return 0.5 * math.erfc(math.sqrt(es_n0) / math.sqrt(2))
