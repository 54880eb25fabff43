"""Bit-metric decoding: LLRs from symbol posteriors, BER, BMI estimate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_LLR_CLAMP = 30.0  # nats; probability floor ~1e-13


@dataclass(frozen=True)
class LlrFrame:
    """Bitwise log-likelihood ratios of one frame, shape (K, m), clamped."""

    llrs: np.ndarray
    clamp: float

    def __post_init__(self):
        llrs = np.asarray(self.llrs, dtype=np.float64)
        if not np.all(np.isfinite(llrs)):
            raise ValueError("LLRs contain non-finite values")
        object.__setattr__(self, "llrs", llrs)


def bmd_llrs(beliefs, cons, clamp: float = DEFAULT_LLR_CLAMP) -> LlrFrame:
    """Bit-metric decoder: symbol posteriors (K, M) -> bit LLRs (K, m).

    L_{k,i} = ln P(b_i = 0 | y) - ln P(b_i = 1 | y), clamped to +-clamp.
    """
    beliefs = np.asarray(beliefs, dtype=np.float64)
    mask0 = (cons.labels == 0).T  # (m, M)
    p0 = beliefs @ mask0.T.astype(np.float64)  # (K, m)
    p1 = 1.0 - p0
    tiny = np.exp(-clamp * 2)
    llrs = np.log(np.maximum(p0, tiny)) - np.log(np.maximum(p1, tiny))
    return LlrFrame(np.clip(llrs, -clamp, clamp), clamp)


def ber(llr_frame: LlrFrame, true_bits) -> float:
    """Hard-decision bit error rate; L >= 0 decides bit 0."""
    true_bits = np.asarray(true_bits)
    if true_bits.shape != llr_frame.llrs.shape:
        raise ValueError(f"bit shape {true_bits.shape} != LLR shape {llr_frame.llrs.shape}")
    decisions = (llr_frame.llrs < 0).astype(np.int64)
    return float(np.mean(decisions != true_bits))


def bmi_estimate(llr_frames, true_bits) -> float:
    """Sample-mean bitwise mutual information in bits per symbol.

    llr_frames: list of LlrFrame; true_bits: matching list of (K, m) bit
    arrays.  Returns log2(M) minus the averaged bit-metric penalty
    (1/(D K)) sum log2(1 + exp(-(-1)^b L)).
    """
    if not llr_frames:
        raise ValueError("need at least one frame")
    llrs = np.stack([f.llrs for f in llr_frames])   # (D, K, m)
    bits = np.stack([np.asarray(b) for b in true_bits])
    if bits.shape != llrs.shape:
        raise ValueError("bit/LLR shape mismatch")
    D, K, m = llrs.shape
    signed = np.where(bits == 0, llrs, -llrs)
    penalty = np.logaddexp(0.0, -signed) / np.log(2.0)
    return float(m - penalty.sum() / (D * K))
