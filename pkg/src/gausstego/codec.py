"""Reversible message <-> Gaussian-noise codec.

Encoding path: message bytes -> length header + padding -> keystream
encryption -> fixed-width symbols -> per-symbol interval sampling in u-space
-> percent-point transform to noise. Decoding inverts the chain and needs no
knowledge of the per-element sampling randomness.

Interval layout. Mode I splits (0, 1) into 2^l equal symbol intervals; mode
II splits it into 2^(l+1) and assigns each symbol a mirrored pair of
intervals around u = 1/2, with a keyed fair coin picking the side. Interval
boundaries that separate two symbols are decision quantiles; crossing one
flips the decoded symbol. The clearance parameter delta_g keeps every
emitted noise value at least delta_g away (in noise units) from the image of
each adjacent quantile, so perturbations smaller than delta_g cannot corrupt
a symbol. Boundaries that are not quantiles (u = 0, u = 1, and u = 1/2 in
mode II) get no clearance: crossing them cannot change the decoded symbol.

Variance correction. Carving out clearance bands distorts the sample
variance while leaving the mean centered, so encoding can iteratively trim
interval edges: c1 trims the edge nearest u = 1/2 (pushing samples outwards,
raising the variance) and c2 trims the outer edge (lowering it). The loop
reuses frozen per-element randomness, so only the geometry moves between
iterations and the final symbols always decode exactly.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms

from .errors import CapacityError, CorruptionError, InfeasibleGeometryError
from .normal import std_normal_cdf, std_normal_ppf
from .stats import sample_moments

__all__ = [
    "Mode",
    "CodecConfig",
    "NoiseVector",
    "IntervalGeometry",
    "CorrectionReport",
    "pack_bits",
    "unpack_symbols",
    "pad_and_encrypt",
    "decrypt_bits",
    "decrypt_and_unpad",
    "encode_uniform",
    "decode_uniform",
    "compute_no_sampling_offsets",
    "interval_geometry",
    "symbols_to_noise_plain",
    "encode_variance_preserving",
    "noise_to_symbols",
    "bit_accuracy",
]

KEY_BYTES = 32
NONCE_BYTES = 16
HEADER_BITS = 32


class Mode(Enum):
    I = "I"
    II = "II"


@dataclass(frozen=True)
class CodecConfig:
    """Static encoding parameters plus the shared secret.

    l is the number of message bits per noise element, delta_g the clearance
    in noise units, e the tolerated |S^2 - 1| after correction, n_max the
    correction iteration budget and delta_c the per-iteration trim width.
    """

    mode: Mode = Mode.I
    l: int = 1
    delta_g: float = 0.0
    e: float = 0.0185
    n_max: int = 100
    delta_c: float = 1.0 / 3072.0
    key: bytes = b"\x00" * KEY_BYTES
    master_seed: int = 0

    def __post_init__(self):
        if not isinstance(self.mode, Mode):
            raise ValueError(f"mode must be a Mode, got {self.mode!r}")
        if not 1 <= int(self.l) <= 24:
            raise ValueError(f"l must be in [1, 24], got {self.l}")
        if not (np.isfinite(self.delta_g) and self.delta_g >= 0.0):
            raise ValueError(f"delta_g must be >= 0, got {self.delta_g}")
        if not (np.isfinite(self.e) and self.e > 0.0):
            raise ValueError(f"e must be > 0, got {self.e}")
        if int(self.n_max) < 0:
            raise ValueError(f"n_max must be >= 0, got {self.n_max}")
        if not (np.isfinite(self.delta_c) and self.delta_c > 0.0):
            raise ValueError(f"delta_c must be > 0, got {self.delta_c}")
        if len(self.key) != KEY_BYTES:
            raise ValueError(f"key must be {KEY_BYTES} bytes, got {len(self.key)}")
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValueError("master_seed must fit in 64 bits")


@dataclass
class NoiseVector:
    """Flat noise values with shape metadata and the reparameterization scale.

    sigma_T = 1 means unit-normal scale; the ODE layer scales by sigma(T) on
    entry and divides on the way back.
    """

    values: np.ndarray
    shape: tuple[int, ...]
    sigma_T: float = 1.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).ravel()
        self.shape = tuple(int(d) for d in self.shape)
        if self.values.size != int(np.prod(self.shape)):
            raise ValueError(
                f"shape {self.shape} does not match {self.values.size} values"
            )
        if not np.isfinite(self.values).all():
            raise ValueError("noise values must be finite")
        if not (np.isfinite(self.sigma_T) and self.sigma_T > 0):
            raise ValueError("sigma_T must be a positive real")

    @property
    def k(self) -> int:
        return self.values.size

    def with_shape(self, shape: tuple[int, ...]) -> "NoiseVector":
        return NoiseVector(self.values, shape, self.sigma_T)


@dataclass(frozen=True)
class IntervalGeometry:
    """Per-symbol interval layout for one (mode, l, delta_g) triple.

    Arrays are indexed by symbol value and describe the left-side interval
    (mode II mirrors it around 1/2). h1 is the clearance below the interval's
    upper boundary, h2 the clearance above its lower boundary; boundaries
    that are not decision quantiles carry offset 0.
    """

    mode: Mode
    l: int
    delta_g: float
    width: float
    lo: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    lower_half: np.ndarray
    quantiles: np.ndarray

    def effective_width(self, c1: float, c2: float) -> np.ndarray:
        return self.width - self.h1 - self.h2 - (c1 + c2)

    def check_feasible(self, c1: float, c2: float, iteration: int = 0) -> None:
        w = self.effective_width(c1, c2)
        bad = np.flatnonzero(w <= 0.0)
        if bad.size:
            worst = bad[np.argmin(w[bad])]
            raise InfeasibleGeometryError(worst, float(w[worst]), iteration)


@dataclass(frozen=True)
class CorrectionReport:
    """Outcome of the variance-correction loop.

    c1_edge records which interval edge c1 trims: "inner" means the edge
    nearest u = 1/2, which pushes samples outwards and raises the sample
    variance (c2 symmetrically trims the outer edge and lowers it). The
    direction is asserted empirically by the test suite.
    """

    iterations: int
    c1: float
    c2: float
    g_bar: float
    s_g2: float
    converged: bool
    c1_edge: str = field(default="inner")


# ---------------------------------------------------------------------------
# bit packing and keyed encryption

def pack_bits(bits, l: int) -> np.ndarray:
    """Group consecutive bits, most significant first, into l-bit symbols."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.ndim != 1:
        raise ValueError("bits must be one-dimensional")
    if (bits > 1).any():
        raise ValueError("bits must be 0/1 valued")
    if not 1 <= int(l) <= 24:
        raise ValueError(f"l must be in [1, 24], got {l}")
    if bits.size % l != 0:
        raise ValueError(f"bit count {bits.size} is not a multiple of l={l}")
    weights = (1 << np.arange(l - 1, -1, -1)).astype(np.int64)
    return bits.reshape(-1, l).astype(np.int64) @ weights


def unpack_symbols(symbols, l: int) -> np.ndarray:
    """Inverse of pack_bits."""
    symbols = np.asarray(symbols, dtype=np.int64)
    if ((symbols < 0) | (symbols >= (1 << l))).any():
        raise ValueError(f"symbols must lie in [0, 2^{l})")
    shifts = np.arange(l - 1, -1, -1)
    return ((symbols[:, None] >> shifts) & 1).astype(np.uint8).ravel()


def _subkey(key: bytes, purpose: bytes) -> bytes:
    return hashlib.blake2b(purpose, key=key, digest_size=KEY_BYTES).digest()


def _chacha_stream(key: bytes, nonce: bytes, nbytes: int) -> bytes:
    cipher = Cipher(algorithms.ChaCha20(key, nonce), mode=None)
    return cipher.encryptor().update(b"\x00" * nbytes)


def _keystream_bits(key: bytes, nonce: bytes, nbits: int) -> np.ndarray:
    if len(nonce) != NONCE_BYTES:
        raise ValueError(f"nonce must be {NONCE_BYTES} bytes, got {len(nonce)}")
    raw = _chacha_stream(_subkey(key, b"bitstream-cipher"), nonce, (nbits + 7) // 8)
    return np.unpackbits(np.frombuffer(raw, dtype=np.uint8))[:nbits]


def pad_and_encrypt(message: bytes, capacity_bits: int, key: bytes, nonce: bytes) -> np.ndarray:
    """Frame a message into an encrypted bit sequence of exactly capacity_bits.

    Layout before encryption: a 32-bit big-endian bit-length header, the
    message bits (MSB first within each byte), then zero fill. The whole
    sequence is XORed with a keyed counter-mode keystream, so the fill bits
    are indistinguishable from payload.
    """
    needed = HEADER_BITS + 8 * len(message)
    if needed > capacity_bits:
        raise CapacityError(
            f"message needs {needed} bits but capacity is {capacity_bits}"
        )
    header = np.unpackbits(np.frombuffer(struct.pack(">I", 8 * len(message)), np.uint8))
    body = np.unpackbits(np.frombuffer(message, dtype=np.uint8))
    plain = np.zeros(capacity_bits, dtype=np.uint8)
    plain[:HEADER_BITS] = header
    plain[HEADER_BITS:needed] = body
    return plain ^ _keystream_bits(key, nonce, capacity_bits)


def decrypt_bits(bits, key: bytes, nonce: bytes) -> np.ndarray:
    """Strip the keystream, exposing header + payload + fill bits."""
    bits = np.asarray(bits, dtype=np.uint8)
    return bits ^ _keystream_bits(key, nonce, bits.size)


def decrypt_and_unpad(bits, key: bytes, nonce: bytes) -> bytes:
    """Invert pad_and_encrypt; raises CorruptionError on a bad header."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size < HEADER_BITS:
        raise CorruptionError(f"only {bits.size} bits, header needs {HEADER_BITS}")
    plain = decrypt_bits(bits, key, nonce)
    (bit_len,) = struct.unpack(">I", np.packbits(plain[:HEADER_BITS]).tobytes())
    if bit_len % 8 != 0 or bit_len > bits.size - HEADER_BITS:
        raise CorruptionError(
            f"header declares {bit_len} payload bits in a {bits.size}-bit frame"
        )
    return np.packbits(plain[HEADER_BITS:HEADER_BITS + bit_len]).tobytes()


# ---------------------------------------------------------------------------
# interval geometry

def _clearance_below(q: np.ndarray, delta_g: float) -> np.ndarray:
    # u-width of a delta_g step in noise space just below quantile q
    return q - std_normal_cdf(std_normal_ppf(q) - delta_g)


def _clearance_above(q: np.ndarray, delta_g: float) -> np.ndarray:
    return std_normal_cdf(std_normal_ppf(q) + delta_g) - q


def interval_geometry(mode: Mode, l: int, delta_g: float) -> IntervalGeometry:
    """Build the per-symbol layout; raises if any base interval collapses."""
    n_sym = 1 << l
    denom = n_sym if mode is Mode.I else n_sym << 1
    width = 1.0 / denom
    m = np.arange(n_sym)
    lo = m / denom

    upper = (m + 1) / denom
    upper_is_quantile = m < n_sym - 1  # u = 1 (mode I) and u = 1/2 (mode II) carry no offset
    lower_is_quantile = m > 0

    h1 = np.zeros(n_sym)
    h2 = np.zeros(n_sym)
    if delta_g > 0.0:
        if upper_is_quantile.any():
            h1[upper_is_quantile] = _clearance_below(upper[upper_is_quantile], delta_g)
        if lower_is_quantile.any():
            h2[lower_is_quantile] = _clearance_above(lo[lower_is_quantile], delta_g)

    if mode is Mode.I:
        lower_half = m < (n_sym >> 1) if l > 0 else np.zeros(n_sym, bool)
        quantiles = np.arange(1, n_sym) / denom
    else:
        lower_half = np.ones(n_sym, dtype=bool)  # left-side intervals all sit below 1/2
        i = np.arange(1, 2 * n_sym)
        quantiles = i[i != n_sym] / denom

    geom = IntervalGeometry(
        mode=mode, l=l, delta_g=float(delta_g), width=width,
        lo=lo, h1=h1, h2=h2, lower_half=lower_half, quantiles=quantiles,
    )
    geom.check_feasible(0.0, 0.0)
    return geom


def compute_no_sampling_offsets(m: int, cfg: CodecConfig) -> tuple[float, float]:
    """Clearance pair (h1 below the upper boundary, h2 above the lower one)."""
    geom = interval_geometry(cfg.mode, cfg.l, cfg.delta_g)
    if not 0 <= m < (1 << cfg.l):
        raise ValueError(f"symbol {m} out of range for l={cfg.l}")
    return float(geom.h1[m]), float(geom.h2[m])


def _validate_symbols(symbols, l: int) -> np.ndarray:
    symbols = np.asarray(symbols, dtype=np.int64)
    if symbols.ndim != 1 or symbols.size == 0:
        raise ValueError("symbols must be a non-empty 1-D sequence")
    if ((symbols < 0) | (symbols >= (1 << l))).any():
        raise ValueError(f"symbols must lie in [0, 2^{l})")
    return symbols


def _assemble_uniform(symbols, r, side, geom: IntervalGeometry,
                      c1: float, c2: float) -> np.ndarray:
    """Place each element inside its (clearance- and correction-trimmed)
    interval: u = base + h_bottom + c_bottom + width_eff * r.

    The construction reduces bit-exactly to the plain partition formulas when
    every offset is zero, and clamps to the open effective interval so that
    endpoint rounding can never leak across a decision boundary.
    """
    w = geom.effective_width(c1, c2)[symbols]
    h1 = geom.h1[symbols]
    h2 = geom.h2[symbols]
    lo = geom.lo[symbols]

    if geom.mode is Mode.II:
        mirrored = side
        base = np.where(mirrored, 1.0 - (lo + geom.width), lo)
        h_bot = np.where(mirrored, h1, h2)
        c_bot = np.where(mirrored, c1, c2)
    else:
        base = lo
        h_bot = h2
        # c1 trims the edge nearest u = 1/2: the top of lower-half intervals,
        # the bottom of upper-half ones.
        c_bot = np.where(geom.lower_half[symbols], c2, c1)

    lo_eff = base + h_bot + c_bot
    u = lo_eff + w * r
    return np.clip(u, np.nextafter(lo_eff, 1.0), np.nextafter(lo_eff + w, 0.0))


def _sample_stream(cfg: CodecConfig, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Frozen per-element randomness: r_i strictly inside (0, 1) plus the
    mode-II side coin, both from a keyed counter-mode stream parameterized by
    (key, master_seed). Iterating the correction loop reuses these values.
    """
    nonce = struct.pack("<Q", cfg.master_seed) + b"\x00" * 8
    raw = _chacha_stream(_subkey(cfg.key, b"interval-sampler"), nonce, 16 * k)
    words = np.frombuffer(raw, dtype="<u8").reshape(k, 2)
    r = ((words[:, 0] >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    side = (words[:, 1] & np.uint64(1)).astype(bool)
    return r, side


# ---------------------------------------------------------------------------
# encoding / decoding

def encode_uniform(m, r, side, cfg: CodecConfig):
    """Plain partition map (no clearance, no correction).

    Mode I: u = (r + m) / 2^l. Mode II: u = (r + m) / 2^(l+1) on the left
    side, u = r / 2^(l+1) + 1 - (m + 1) / 2^(l+1) on the mirrored side.
    """
    scalar = np.isscalar(m)
    symbols = _validate_symbols(np.atleast_1d(m), cfg.l)
    r_arr = np.asarray(r, dtype=np.float64).ravel()
    if ((r_arr <= 0.0) | (r_arr >= 1.0)).any():
        raise ValueError("r must lie strictly inside (0, 1)")
    side_arr = np.broadcast_to(np.asarray(side, dtype=bool).ravel(), symbols.shape)
    geom = interval_geometry(cfg.mode, cfg.l, 0.0)
    u = _assemble_uniform(symbols, r_arr, side_arr, geom, 0.0, 0.0)
    return float(u[0]) if scalar else u


def decode_uniform(u, cfg: CodecConfig):
    """Recover symbols from u; total on the closed interval [0, 1]."""
    scalar = np.isscalar(u)
    u_arr = np.asarray(u, dtype=np.float64).ravel()
    if np.isnan(u_arr).any() or ((u_arr < 0.0) | (u_arr > 1.0)).any():
        raise ValueError("u must lie in [0, 1]")
    n_sym = 1 << cfg.l
    if cfg.mode is Mode.I:
        m = np.floor(u_arr * n_sym).astype(np.int64)
    else:
        folded = np.where(u_arr > 0.5, 1.0 - u_arr, u_arr)
        m = np.floor(folded * (n_sym << 1)).astype(np.int64)
    m = np.clip(m, 0, n_sym - 1)
    return int(m[0]) if scalar else m


def symbols_to_noise_plain(symbols, cfg: CodecConfig) -> NoiseVector:
    """Zero-clearance encoding: g_i = ppf(encode_uniform(m_i, r_i, side_i))."""
    symbols = _validate_symbols(symbols, cfg.l)
    r, side = _sample_stream(cfg, symbols.size)
    geom = interval_geometry(cfg.mode, cfg.l, 0.0)
    u = _assemble_uniform(symbols, r, side, geom, 0.0, 0.0)
    g = std_normal_ppf(u)
    return NoiseVector(g, (symbols.size,))


def encode_variance_preserving(symbols, cfg: CodecConfig) -> tuple[NoiseVector, CorrectionReport]:
    """Clearance-aware encoding with iterative variance correction.

    Re-samples with frozen per-element randomness while growing c1 (variance
    too low) or c2 (variance too high) by delta_c per iteration, until
    |S^2 - 1| <= e or the iteration budget runs out; the budget case returns
    the best-effort noise flagged non-converged. Interval collapse at any
    iteration raises InfeasibleGeometryError.
    """
    symbols = _validate_symbols(symbols, cfg.l)
    k = symbols.size
    geom = interval_geometry(cfg.mode, cfg.l, cfg.delta_g)
    r, side = _sample_stream(cfg, k)

    def emit(c1: float, c2: float) -> tuple[np.ndarray, float, float]:
        u = _assemble_uniform(symbols, r, side, geom, c1, c2)
        g = std_normal_ppf(u)
        if k < 2:
            return g, float(g.mean()), 1.0
        mean, var = sample_moments(g)
        return g, mean, var

    c1 = c2 = 0.0
    iterations = 0
    g, g_bar, s2 = emit(c1, c2)
    while abs(s2 - 1.0) > cfg.e and iterations < cfg.n_max:
        if 1.0 - s2 > cfg.e:
            c1 += cfg.delta_c
        else:
            c2 += cfg.delta_c
        iterations += 1
        geom.check_feasible(c1, c2, iterations)
        g, g_bar, s2 = emit(c1, c2)

    report = CorrectionReport(
        iterations=iterations, c1=c1, c2=c2, g_bar=g_bar, s_g2=s2,
        converged=abs(s2 - 1.0) <= cfg.e,
    )
    return NoiseVector(g, (k,)), report


def noise_to_symbols(noise: NoiseVector, cfg: CodecConfig) -> np.ndarray:
    """Total inverse of both encode paths on unperturbed noise.

    Decoding is seed-free: only the partition (mode, l) and the carrier
    scale matter. Perturbed inputs decode to whatever interval they land in;
    that loss is measured elsewhere, never raised.
    """
    u = std_normal_cdf(noise.values / noise.sigma_T)
    return decode_uniform(u, cfg)


def bit_accuracy(sent, received) -> float:
    """Fraction of positions where two equal-length bit sequences agree."""
    sent = np.asarray(sent, dtype=np.uint8)
    received = np.asarray(received, dtype=np.uint8)
    if sent.shape != received.shape:
        raise ValueError(f"length mismatch: {sent.shape} vs {received.shape}")
    if sent.size == 0:
        raise ValueError("empty bit sequences")
    return float(np.mean(sent == received))
