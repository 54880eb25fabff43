"""Exact and baseline detectors: BCJR MAP, brute-force APP, linear MMSE."""

from __future__ import annotations

import itertools

import numpy as np
from scipy.special import logsumexp

from .channel import ChannelModel, TransmissionFrame, channel_matrix, pad_symbols
from .constellations import Constellation
from .errors import CapabilityError

MAX_TRELLIS_STATES = 10**7
MAX_BRUTE_SEQUENCES = 10**7


def bcjr_map(frame: TransmissionFrame, ch: ChannelModel, cons: Constellation) -> np.ndarray:
    """Exact symbol-wise APPs via log-domain forward/backward recursion.

    Returns (K, M) probabilities.  The trellis state encodes the last L
    symbols (most recent in the least significant digit); boundary states
    are clamped to the known boundary symbol.
    """
    return bcjr_map_batch(frame.y[None, :], frame.sigma2, ch, cons)[0]


def bcjr_map_batch(ys, sigma2, ch: ChannelModel, cons: Constellation) -> np.ndarray:
    ys = np.asarray(ys, dtype=np.complex128)
    M = cons.size
    L = ch.memory
    if M**L > MAX_TRELLIS_STATES:
        raise CapabilityError(f"trellis with {M}^{L} states is not representable")
    B, n_obs = ys.shape
    K = n_obs - L
    points = cons.points
    h = ch.h
    neg_inf = -1e300

    if L == 0:
        g = -np.abs(ys[:, :K, None] - h[0] * points[None, None, :]) ** 2 / sigma2
        g -= g.max(axis=2, keepdims=True)
        p = np.exp(g)
        return p / p.sum(axis=2, keepdims=True)

    # state s encodes (c_{k-1}, ..., c_{k-L}); base-M digit l (l=0 least
    # significant) holds the symbol index of c_{k-1-l}
    n_states = M**L
    n_low = n_states // M
    s_idx = np.arange(n_states)
    bout = np.repeat(h[0] * points[None, :], n_states, axis=0)
    for l in range(1, L + 1):
        digit = (s_idx // M ** (l - 1)) % M
        bout = bout + h[l] * points[digit][:, None]

    def gamma(k):
        # (B, n_states, M); inputs clamped to the boundary symbol for k >= K
        g = -np.abs(ys[:, k, None, None] - bout[None, :, :]) ** 2 / sigma2
        if k >= K:
            mask = np.full(M, neg_inf)
            mask[0] = 0.0
            g = g + mask[None, None, :]
        return g

    # forward: successor of (s, a) is s' = (s mod M^(L-1)) * M + a
    alphas = np.empty((n_obs + 1, B, n_states))
    alpha = np.full((B, n_states), neg_inf)
    alpha[:, 0] = 0.0  # all-boundary initial state
    alphas[0] = alpha
    for k in range(n_obs):
        tmp = (alpha[:, :, None] + gamma(k)).reshape(B, M, n_low, M)  # (B, hi, low, a)
        alpha = logsumexp(tmp, axis=1).reshape(B, n_states)
        alpha -= alpha.max(axis=1, keepdims=True)
        alphas[k + 1] = alpha

    # backward + APPs
    probs = np.empty((B, K, M))
    beta = np.zeros((B, n_states))  # uniform; trailing clamped inputs force s'
    low = s_idx % n_low
    succ = (low[:, None] * M + np.arange(M)[None, :]).reshape(-1)
    for k in range(n_obs - 1, -1, -1):
        g = gamma(k)
        beta_sa = beta[:, succ].reshape(B, n_states, M)
        if k < K:
            total = alphas[k][:, :, None] + g + beta_sa
            joint = logsumexp(total, axis=1)
            joint -= joint.max(axis=1, keepdims=True)
            p = np.exp(joint)
            probs[:, k] = p / p.sum(axis=1, keepdims=True)
        beta = logsumexp(g + beta_sa, axis=2)
        beta -= beta.max(axis=1, keepdims=True)
    return probs


def brute_force_app(frame: TransmissionFrame, ch: ChannelModel, cons: Constellation) -> np.ndarray:
    """Exhaustive symbol-wise APPs from the full-sequence likelihood."""
    M = cons.size
    K = frame.block_length
    if M**K > MAX_BRUTE_SEQUENCES:
        raise CapabilityError(f"{M}^{K} candidate sequences is not enumerable")
    L = ch.memory
    boundary = cons.points[0]
    # all M^K candidate sequences at once: rows of mixed-radix digits
    digits = np.stack(np.meshgrid(*([np.arange(M)] * K), indexing="ij"),
                      axis=-1).reshape(-1, K)
    c_check = np.empty((len(digits), K + 2 * L), dtype=np.complex128)
    c_check[:, :L] = boundary
    c_check[:, L + K:] = boundary
    c_check[:, L:L + K] = cons.points[digits]
    y_clean = c_check @ channel_matrix(ch, K).T
    loglik = (-np.sum(np.abs(frame.y - y_clean) ** 2, axis=1)
              / frame.sigma2).reshape((M,) * K)
    probs = np.empty((K, M))
    for k in range(K):
        axes = tuple(i for i in range(K) if i != k)
        marg = logsumexp(loglik, axis=axes)
        marg -= marg.max()
        p = np.exp(marg)
        probs[k] = p / p.sum()
    return probs


def mmse_filter(ch: ChannelModel, sigma2: float, order: int):
    """Wiener filter taps and decision delay for a windowed observation.

    Returns (f, delay, mse) where f has length ``order`` and the delay is
    chosen to minimize the analytic MSE over delays 0..order+L-1.  Unit
    symbol energy is assumed.
    """
    if order < 1:
        raise ValueError("filter order must be >= 1")
    L = ch.memory
    Hw = np.zeros((order, order + L), dtype=np.complex128)
    for i in range(order):
        Hw[i, i:i + L + 1] = ch.h
    R = Hw @ Hw.conj().T + sigma2 * np.eye(order)
    best = None
    for delay in range(order + L):
        r = Hw[:, delay]
        f = np.linalg.solve(R, r)
        mse = float((1.0 - r.conj() @ f).real)
        if best is None or mse < best[2]:
            best = (f, delay, mse)
    return best


def mmse_equalize(frame: TransmissionFrame, ch: ChannelModel, cons: Constellation,
                  order: int = 30):
    """Linear MMSE equalization with exhaustive delay selection.

    Returns (hard_indices, estimates): nearest-point decisions for
    c_1..c_K and the raw linear estimates.  The filter spans observations
    y_{k+delay}, ..., y_{k+delay-order+1}.
    """
    f, delay, _ = mmse_filter(ch, frame.sigma2, order)
    K = frame.block_length
    y = frame.y
    est = np.empty(K, dtype=np.complex128)
    for k in range(K):
        # window y[k+delay], y[k+delay-1], ..., matching Hw's row ordering
        idx = k + delay - np.arange(order)
        win = np.where((idx >= 0) & (idx < len(y)), y[np.clip(idx, 0, len(y) - 1)], 0.0)
        est[k] = f.conj() @ win
    hard = np.argmin(np.abs(est[:, None] - cons.points[None, :]), axis=1)
    return hard, est
