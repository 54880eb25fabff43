"""Symbol constellations with bit labelings and noise conventions."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class Constellation:
    """Unit-energy symbol alphabet with an m-bit label per point.

    ``labels[i]`` is the bit pattern (MSB first) of ``points[i]``; all
    2**m patterns occur exactly once.
    """

    name: str
    points: np.ndarray  # complex, shape (M,)
    labels: np.ndarray  # int {0,1}, shape (M, m)
    bits_per_symbol: int = field(init=False)

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.complex128)
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "labels", labels)
        M = len(points)
        m = int(np.log2(M))
        if 2**m != M or labels.shape != (M, m):
            raise ConfigurationError(f"constellation {self.name!r}: need 2^m points with m-bit labels")
        packed = labels @ (1 << np.arange(m - 1, -1, -1))
        if len(set(packed.tolist())) != M:
            raise ConfigurationError(f"constellation {self.name!r}: labels are not distinct")
        energy = np.mean(np.abs(points) ** 2)
        if abs(energy - 1.0) > 1e-12:
            raise ConfigurationError(f"constellation {self.name!r}: average energy {energy} != 1")
        object.__setattr__(self, "bits_per_symbol", m)

    @property
    def size(self) -> int:
        return len(self.points)

    def bits_of(self, indices) -> np.ndarray:
        """Bit patterns of the given symbol indices, shape (..., m)."""
        return self.labels[np.asarray(indices)]

    def index_of_bits(self, bits) -> np.ndarray:
        """Symbol indices whose labels match the given (..., m) bit groups."""
        bits = np.asarray(bits, dtype=np.int64)
        m = self.bits_per_symbol
        packed = bits @ (1 << np.arange(m - 1, -1, -1))
        lut = np.empty(self.size, dtype=np.int64)
        lut[self.labels @ (1 << np.arange(m - 1, -1, -1))] = np.arange(self.size)
        return lut[packed]


def _bpsk() -> Constellation:
    return Constellation("bpsk", np.array([1.0 + 0j, -1.0 + 0j]), np.array([[0], [1]]))


def _gray2(v: int) -> int:
    return v ^ (v >> 1)


def _qam16() -> Constellation:
    # Per-axis Gray mapping on the {+-1, +-3} grid, scaled to unit average energy.
    # First two label bits select I, last two select Q.
    amps = np.array([-3.0, -1.0, 1.0, 3.0])
    points = []
    labels = []
    for bi in range(4):
        for bq in range(4):
            i_level = amps[_gray2_inverse(bi)]
            q_level = amps[_gray2_inverse(bq)]
            points.append(i_level + 1j * q_level)
            labels.append([(bi >> 1) & 1, bi & 1, (bq >> 1) & 1, bq & 1])
    points = np.array(points) / np.sqrt(10.0)
    return Constellation("16qam", points, np.array(labels))


def _gray2_inverse(g: int) -> int:
    # Inverse of the 2-bit Gray code: label bits -> amplitude level index.
    v = g
    v ^= v >> 1
    return v


_BUILDERS = {"bpsk": _bpsk, "16qam": _qam16}


def make_constellation(name: str) -> Constellation:
    """Build a named constellation ("bpsk" or "16qam")."""
    key = name.strip().lower().replace("-", "")
    if key not in _BUILDERS:
        raise ConfigurationError(f"unknown constellation {name!r}; supported: {sorted(_BUILDERS)}")
    return _BUILDERS[key]()


def modulate(bits, cons: Constellation) -> np.ndarray:
    """Map a bit sequence to symbols, m bits per symbol."""
    bits = np.asarray(bits, dtype=np.int64).ravel()
    m = cons.bits_per_symbol
    if len(bits) % m != 0:
        raise ValueError(f"bit count {len(bits)} not divisible by m={m}")
    idx = cons.index_of_bits(bits.reshape(-1, m))
    return cons.points[idx]


def ebn0_to_sigma2(ebn0_db: float, cons: Constellation) -> float:
    """Total complex noise variance for a given Eb/N0 = 1/(m sigma^2)."""
    return 1.0 / (cons.bits_per_symbol * 10.0 ** (ebn0_db / 10.0))
