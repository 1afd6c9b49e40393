"""QPSK over flat Rayleigh fading with ideal CSI, LLR demapping, and the two
duplicate-combining rules (LLR sum and symbol-level MRC)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_INV_SQRT2 = 1.0 / np.sqrt(2.0)
_LLR_SCALE = 2.0 * np.sqrt(2.0)

FADING_MODES = ("iid", "block")


class ChannelError(ValueError):
    pass


@dataclass(frozen=True)
class SoftObservation:
    """Received symbols with their exact channel gains and noise variance.

    Arrays may carry leading batch axes; ``noise_var`` is the total complex
    noise variance and must broadcast against the symbol axis's leading dims.
    """

    received: np.ndarray
    gains: np.ndarray
    noise_var: float | np.ndarray

    def __post_init__(self):
        if np.shape(self.received) != np.shape(self.gains):
            raise ChannelError("received and gains must have the same shape")
        if np.any(np.asarray(self.noise_var) < 0):
            raise ChannelError("noise variance must be nonnegative")

    def __len__(self) -> int:
        return np.shape(self.received)[-1]


def qpsk_modulate(bits) -> np.ndarray:
    """Gray QPSK: (b0, b1) -> ((1 - 2 b0) + j (1 - 2 b1)) / sqrt(2)."""
    arr = np.asarray(bits)
    if arr.shape[-1] % 2:
        raise ChannelError("QPSK needs an even number of bits")
    pairs = (1.0 - 2.0 * arr.astype(np.float64)).reshape(arr.shape[:-1] + (-1, 2))
    return (pairs[..., 0] + 1j * pairs[..., 1]) * _INV_SQRT2


def noise_variance(snr_db: float) -> float:
    """Complex noise variance for unit-energy symbols at Es/N0 = ``snr_db``."""
    return float(10.0 ** (-snr_db / 10.0))


def apply_channel(symbols, snr_db: float, rng: np.random.Generator, *,
                  fading: str = "iid") -> SoftObservation:
    """Rayleigh fading plus AWGN.

    Gains are unit-power circular complex Gaussians, one per symbol
    (``fading="iid"``) or one per row (``fading="block"``). Gains are drawn
    before noise so both fading modes consume the generator in the same order.
    """
    if fading not in FADING_MODES:
        raise ChannelError(f"fading must be one of {FADING_MODES}, got {fading!r}")
    x = np.asarray(symbols, dtype=np.complex128)
    gain_shape = x.shape if fading == "iid" else x.shape[:-1] + (1,)
    h = _complex_normal(rng, gain_shape)
    if fading == "block":
        h = np.broadcast_to(h, x.shape).copy()
    if np.isposinf(snr_db):
        return SoftObservation(h * x, h, 0.0)
    sigma2 = noise_variance(snr_db)
    n = _complex_normal(rng, x.shape) * np.sqrt(sigma2)
    return SoftObservation(h * x + n, h, sigma2)


def _complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    # unit-variance circular Gaussian; real/imag drawn as consecutive pairs
    pairs = rng.standard_normal(tuple(shape) + (2,))
    return pairs.view(np.complex128)[..., 0] * _INV_SQRT2


def demodulate_llr(obs: SoftObservation) -> np.ndarray:
    """Matched-filter LLRs, two per symbol, positive meaning bit 0."""
    sigma2 = np.asarray(obs.noise_var, dtype=np.float64)
    if np.any(sigma2 <= 0):
        raise ChannelError("LLR demapping needs a strictly positive noise variance")
    z = np.conj(obs.gains) * obs.received
    if sigma2.ndim:
        sigma2 = sigma2[..., None]
    out = np.empty(z.shape[:-1] + (2 * z.shape[-1],))
    out[..., 0::2] = _LLR_SCALE * z.real / sigma2
    out[..., 1::2] = _LLR_SCALE * z.imag / sigma2
    return out


def combine_bitwise(llr_a, llr_b) -> np.ndarray:
    a = np.asarray(llr_a, dtype=np.float64)
    b = np.asarray(llr_b, dtype=np.float64)
    if a.shape != b.shape:
        raise ChannelError(f"LLR length mismatch: {a.shape} vs {b.shape}")
    return a + b


def combine_symbolwise(obs_a: SoftObservation, obs_b: SoftObservation) -> SoftObservation:
    """Maximal-ratio combining of two observations of the same symbols.

    The result is packaged so that ``demodulate_llr`` sees the MRC output
    ``conj(h_a) y_a + conj(h_b) y_b``: the gain is ``sqrt(|h_a|^2 + |h_b|^2)``
    and the received sample is the MRC output divided by that gain.
    """
    if np.shape(obs_a.received) != np.shape(obs_b.received):
        raise ChannelError("observation length mismatch")
    if not np.array_equal(np.asarray(obs_a.noise_var), np.asarray(obs_b.noise_var)):
        raise ChannelError("branches must share one noise variance")
    z = np.conj(obs_a.gains) * obs_a.received + np.conj(obs_b.gains) * obs_b.received
    g = np.sqrt(np.abs(obs_a.gains) ** 2 + np.abs(obs_b.gains) ** 2)
    y = np.divide(z, g, out=np.zeros_like(z), where=g > 0)
    return SoftObservation(y, g.astype(np.complex128), obs_a.noise_var)
