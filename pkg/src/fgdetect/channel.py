"""Discrete-time ISI channel simulation and matrix observation models.

Index conventions (0-based throughout the code):
  * symbols k = 1..K map to positions L..L+K-1 of the padded transmit
    sequence ``c_check`` of length S = K + 2L; the L leading and L trailing
    positions hold the known boundary symbol (constellation point 0).
  * observations y_r, r = 0..K+L-1, with y_r = sum_l h_l c_check[r+L-l] + w_r.

Observation models place both the matched filter (G = H^H H, x = H^H y)
and the generic causal FIR preprocessor (G~ = PH, x~ = Py) on the padded
index space, so detectors can treat them uniformly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constellations import Constellation
from .errors import ConfigurationError

BAND_ZERO_TOL = 1e-12

PROAKIS_A = np.array([0.04, -0.05, 0.07, -0.21, -0.5, 0.72, 0.36, 0.0, 0.21, 0.03, 0.07])
PROAKIS_B = np.array([0.407, 0.815, 0.407])


@dataclass(frozen=True)
class ChannelModel:
    """FIR channel with impulse response h of length L+1."""

    h: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        h = np.asarray(self.h, dtype=np.complex128)
        if h.ndim != 1 or len(h) < 1:
            raise ConfigurationError("channel taps must be a nonempty 1-d sequence")
        if not np.any(h != 0):
            raise ConfigurationError("channel taps are all zero")
        object.__setattr__(self, "h", h)

    @property
    def memory(self) -> int:
        return len(self.h) - 1


def make_channel(name: str) -> ChannelModel:
    """Built-in channels by name, or a comma-separated real tap list."""
    key = name.strip().lower()
    if key == "proakis-a":
        ch = ChannelModel(PROAKIS_A, "proakis-a")
    elif key == "proakis-b":
        ch = ChannelModel(PROAKIS_B, "proakis-b")
    else:
        try:
            taps = np.array([float(t) for t in name.split(",")])
        except ValueError:
            raise ConfigurationError(f"unknown channel {name!r}; use 'proakis-a', 'proakis-b' or a tap list")
        return ChannelModel(taps)
    # Eb/N0 convention assumes roughly unit-energy responses for the built-ins.
    assert abs(np.sum(np.abs(ch.h) ** 2) - 1.0) < 0.01
    return ch


@dataclass(frozen=True)
class TransmissionFrame:
    """One simulated block: symbols, padded transmit sequence, observations."""

    c: np.ndarray        # length K, transmitted information symbols
    c_check: np.ndarray  # length K+2L, with known boundary symbols
    y: np.ndarray        # length K+L
    sigma2: float
    symbol_indices: np.ndarray  # length K, indices into the constellation

    @property
    def block_length(self) -> int:
        return len(self.c)


def pad_symbols(c: np.ndarray, ch: ChannelModel, boundary_symbol: complex) -> np.ndarray:
    L = ch.memory
    return np.concatenate([np.full(L, boundary_symbol), c, np.full(L, boundary_symbol)])


def transmit(c, ch: ChannelModel, sigma2: float, rng: np.random.Generator,
             cons: Constellation | None = None,
             symbol_indices: np.ndarray | None = None) -> TransmissionFrame:
    """Pass symbols through the ISI channel and add circular complex noise.

    The noise has total variance sigma2 (sigma2/2 per real dimension).
    Boundary symbols are fixed to the first constellation point (or +1
    when no constellation is given).
    """
    c = np.asarray(c, dtype=np.complex128)
    boundary = cons.points[0] if cons is not None else 1.0 + 0j
    c_check = pad_symbols(c, ch, boundary)
    y_clean = np.convolve(c_check, ch.h, mode="full")[ch.memory:ch.memory + len(c) + ch.memory]
    noise = np.sqrt(sigma2 / 2.0) * (rng.standard_normal(len(y_clean)) + 1j * rng.standard_normal(len(y_clean)))
    if sigma2 == 0.0:
        noise = np.zeros_like(y_clean)
    if symbol_indices is None and cons is not None:
        symbol_indices = np.array([int(np.argmin(np.abs(cons.points - s))) for s in c])
    return TransmissionFrame(c=c, c_check=c_check, y=y_clean + noise, sigma2=float(sigma2),
                             symbol_indices=symbol_indices if symbol_indices is not None else np.array([], dtype=int))


def build_convolution_matrix(taps, input_length: int) -> np.ndarray:
    """Full-convolution Toeplitz matrix: (len(taps)+input_length-1) x input_length."""
    taps = np.asarray(taps, dtype=np.complex128)
    if taps.ndim != 1 or len(taps) == 0:
        raise ValueError("taps must be a nonempty 1-d sequence")
    n_out = len(taps) + input_length - 1
    mat = np.zeros((n_out, input_length), dtype=np.complex128)
    for i, t in enumerate(taps):
        mat[np.arange(input_length) + i, np.arange(input_length)] = t
    return mat


def channel_matrix(ch: ChannelModel, block_length: int) -> np.ndarray:
    """The (K+L) x (K+2L) matrix H with y = H c_check (noiseless)."""
    L = ch.memory
    full = build_convolution_matrix(ch.h, block_length + 2 * L)  # (K+3L) x (K+2L)
    return full[L:L + block_length + L, :]


@dataclass(frozen=True)
class ObservationModel:
    """Preprocessed observation: Gmat = P H and xseq = P y on padded indices."""

    Gmat: np.ndarray  # (K+2L) x (K+2L)
    xseq: np.ndarray  # length K+2L
    band: int         # largest |k-l| with Gmat[k, l] != 0
    hermitian: bool


def _band_of(G: np.ndarray) -> int:
    nz = np.argwhere(np.abs(G) > BAND_ZERO_TOL)
    if len(nz) == 0:
        return 0
    return int(np.max(np.abs(nz[:, 0] - nz[:, 1])))


def matched_filter_model(ch: ChannelModel, y) -> ObservationModel:
    """Matched-filter observation model G = H^H H, x = H^H y."""
    y = np.asarray(y, dtype=np.complex128)
    L = ch.memory
    K = len(y) - L
    H = channel_matrix(ch, K)
    G = H.conj().T @ H
    x = H.conj().T @ y
    return ObservationModel(Gmat=G, xseq=x, band=_band_of(G), hermitian=True)


def preprocessed_model(p, ch: ChannelModel, y) -> ObservationModel:
    """Generic causal FIR preprocessor: G~ = PH, x~ = Py, zero delay.

    Output sample t of the causal convolution with p corresponds to symbol
    index t+1 (padded index t+L); rows for boundary positions and beyond
    the block are zero.  The resulting G~ is lower-banded with half
    bandwidth L + len(p) - 1.
    """
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or len(p) < 1:
        raise ValueError("preprocessor taps must be a nonempty 1-d sequence")
    y = np.asarray(y, dtype=np.complex128)
    L = ch.memory
    K = len(y) - L
    S = K + 2 * L
    band = L + len(p) - 1
    x_full = np.convolve(p, y)         # length K+L+len(p)-1
    G = np.zeros((S, S), dtype=np.complex128)
    x = np.zeros(S, dtype=np.complex128)
    for j in range(L, S):
        t = j - L
        if t < len(x_full):
            x[j] = x_full[t]
        # warm-up rows (t < len(p)-1) see a zero-padded y, so their
        # effective combined taps are the truncated convolution of p and h
        imax = min(len(p) - 1, t)
        for d in range(band + 1):
            if j - d < 0:
                continue
            G[j, j - d] = sum(p[i] * ch.h[d - i]
                              for i in range(max(0, d - L), min(imax, d) + 1))
    G[np.abs(G) <= BAND_ZERO_TOL] = 0.0
    return ObservationModel(Gmat=G, xseq=x, band=_band_of(G), hermitian=False)
