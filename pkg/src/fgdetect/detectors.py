"""FFG, UFG, and GFG symbol detectors as unrolled message passing.

The production path is a batched torch implementation (float64), which
doubles as the differentiable forward pass for training.  ``build_ffg``
and ``build_gfg`` expose the same graphs to the generic engine in
:mod:`fgdetect.spa` for small-scale cross-checks.

Detector kinds:
  * "ffg": factors q_k over (c_k, ..., c_{k-L}) from the direct
    observation model, one per received sample.
  * "ufg": matched-filter observation model, degree-1 F factors plus
    degree-2 I factors over the band of G = H^H H.
  * "gfg": like "ufg" but with a generic causal FIR preprocessor p,
    per-iteration factor weights kappa/lambda, and the same NBP edge
    weights.  Unit weights and p = matched filter reproduce "ufg".
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import torch

from . import spa
from .channel import (ChannelModel, ObservationModel, TransmissionFrame,
                      matched_filter_model, preprocessed_model)
from .constellations import Constellation
from .errors import ConfigurationError

DTYPE = torch.float64
CDTYPE = torch.complex128
CLAMP_NEG = -1e9

DETECTOR_KINDS = ("ffg", "ufg", "gfg")


@dataclass
class FfgParams:
    """Per-edge, per-iteration NBP weights of the FFG detector.

    Arrays have shape (N, K+L, L+1): entry (n, k, l) weights the message
    on the edge between factor q_{k+1} and symbol c_{k+1-l} in iteration
    n+1.  Edges touching clamped boundary symbols are present but inert.
    """

    n_iters: int
    w_v2f: np.ndarray
    w_f2v: np.ndarray

    @property
    def block_length(self):
        # arrays cover K+L factors
        return self.w_v2f.shape[1]


@dataclass
class GfgParams:
    """Parameters of the GFG detector (and of UFG, its matched-filter case).

    ``p`` is None for the matched-filter (UFG) observation model.  Arrays
    are indexed over the padded symbol axis of length S = K+2L and the
    band offsets d = 1..B: kappa (N, S, 3), lam (N, S, B) for factor
    I_{j,j-d}, and edge weights (N, S, 2B) where slot d-1 is the edge
    c_j -- I_{j,j-d} and slot B+d-1 is the edge c_j -- I_{j+d,j}.
    """

    n_iters: int
    band: int
    p: np.ndarray | None
    kappa: np.ndarray
    lam: np.ndarray
    w_v2f: np.ndarray
    w_f2v: np.ndarray


def unit_ffg_params(K: int, L: int, n_iters: int) -> FfgParams:
    shape = (n_iters, K + L, L + 1)
    return FfgParams(n_iters, np.ones(shape), np.ones(shape))


def unit_gfg_params(K: int, L: int, band: int, n_iters: int, p=None) -> GfgParams:
    S = K + 2 * L
    return GfgParams(
        n_iters=n_iters, band=band,
        p=None if p is None else np.asarray(p, dtype=np.float64),
        kappa=np.ones((n_iters, S, 3)),
        lam=np.ones((n_iters, S, band)),
        w_v2f=np.ones((n_iters, S, 2 * band)),
        w_f2v=np.ones((n_iters, S, 2 * band)),
    )


def _t(a, dtype=DTYPE):
    if isinstance(a, torch.Tensor):
        return a
    return torch.as_tensor(np.ascontiguousarray(a), dtype=dtype)


def _normalize(msg):
    return msg - msg.amax(dim=-1, keepdim=True)


# ---------------------------------------------------------------------------
# FFG forward pass
# ---------------------------------------------------------------------------

def ffg_forward(y, h, sigma2, points, boundary_idx, K, w_v2f, w_f2v,
                per_iteration=False):
    """Batched FFG detection; returns log-beliefs (B, K, M).

    y: (B, K+L) complex tensor; h: (L+1,) complex; points: (M,) complex;
    w_v2f/w_f2v: (N, K+L, L+1) real tensors.  With per_iteration, returns
    the (N, B, K, M) log-beliefs after every iteration instead.
    """
    y = _t(y, CDTYPE)
    h = _t(h, CDTYPE)
    points = _t(points, CDTYPE)
    w_v2f = _t(w_v2f)
    w_f2v = _t(w_f2v)
    n_iters = w_v2f.shape[0]
    L = h.shape[0] - 1
    M = points.shape[0]
    B = y.shape[0]
    n_obs = K + L
    S = K + 2 * L

    # joint noiseless outputs over all (L+1)-tuples; axis l is symbol c_{k-l}
    grids = torch.meshgrid(*([torch.arange(M)] * (L + 1)), indexing="ij")
    sumh = sum(h[l] * points[grids[l]] for l in range(L + 1))  # (M,)*(L+1)
    logq = -(torch.abs(y.reshape(B, n_obs, *([1] * (L + 1))) - sumh) ** 2) / sigma2  # (B, n_obs, M..M)

    # edge (k, l) touches padded symbol j = k + L - l; boundary symbols clamped
    kk = torch.arange(n_obs).unsqueeze(1)
    ll = torch.arange(L + 1).unsqueeze(0)
    jj = kk + L - ll
    known_edge = (jj < L) | (jj >= L + K)  # (n_obs, L+1)
    clampvec = torch.full((M,), CLAMP_NEG, dtype=y.real.dtype)
    clampvec[boundary_idx] = 0.0

    f2v = torch.zeros((B, n_obs, L + 1, M), dtype=y.real.dtype)
    per_iter = []
    for n in range(n_iters):
        # VN -> FN: per padded symbol, sum incoming f2v minus the target edge
        vn_sum = torch.zeros((B, S, M), dtype=f2v.dtype)
        for l in range(L + 1):
            vn_sum[:, L - l:L - l + n_obs] = vn_sum[:, L - l:L - l + n_obs] + f2v[:, :, l]
        v2f = torch.empty_like(f2v)
        for l in range(L + 1):
            raw = vn_sum[:, L - l:L - l + n_obs] - f2v[:, :, l]
            v2f[:, :, l] = w_v2f[n, :, l].unsqueeze(-1) * _normalize(raw)
        v2f = torch.where(known_edge.unsqueeze(0).unsqueeze(-1), clampvec, v2f)

        # FN -> VN: full joint table, subtract the target edge, max* the rest
        total = logq
        for l in range(L + 1):
            total = total + v2f[:, :, l].reshape(B, n_obs, *[M if i == l else 1 for i in range(L + 1)])
        new_f2v = torch.empty_like(f2v)
        for l in range(L + 1):
            tmp = total - v2f[:, :, l].reshape(B, n_obs, *[M if i == l else 1 for i in range(L + 1)])
            red_dims = [2 + i for i in range(L + 1) if i != l]
            out = tmp if not red_dims else torch.logsumexp(tmp, dim=red_dims)
            new_f2v[:, :, l] = w_f2v[n, :, l].unsqueeze(-1) * _normalize(out)
        f2v = new_f2v
        if per_iteration:
            per_iter.append(_ffg_readout(f2v, B, K, M, L))

    if per_iteration:
        return torch.stack(per_iter)
    return _ffg_readout(f2v, B, K, M, L)


def _ffg_readout(f2v, B, K, M, L):
    # per unknown symbol j = L..L+K-1, sum the incoming messages
    logb = torch.zeros((B, K, M), dtype=f2v.dtype)
    for l in range(L + 1):
        logb = logb + f2v[:, l:l + K, l]
    return torch.log_softmax(logb, dim=-1)


# ---------------------------------------------------------------------------
# GFG forward pass (UFG = matched-filter observation model, unit weights)
# ---------------------------------------------------------------------------

def gfg_band_tensors(obs: ObservationModel, band: int):
    """Extract (gkl, glk, gdiag) band tensors from an observation model."""
    G = np.asarray(obs.Gmat)
    S = G.shape[0]
    gkl = np.zeros((S, band), dtype=np.complex128)
    glk = np.zeros((S, band), dtype=np.complex128)
    for d in range(1, band + 1):
        idx = np.arange(d, S)
        gkl[idx, d - 1] = G[idx, idx - d]
        glk[idx, d - 1] = G[idx - d, idx]
    return (_t(gkl, CDTYPE), _t(glk, CDTYPE), _t(np.diagonal(G).copy(), CDTYPE))


_MF_CACHE: dict = {}


def matched_filter_tensors(ch: ChannelModel, K: int):
    """Cached (H, gkl, glk, gdiag) for the matched-filter model at block K."""
    key = (ch.name, ch.h.tobytes(), K)
    if key not in _MF_CACHE:
        from .channel import channel_matrix
        H = channel_matrix(ch, K)
        G = H.conj().T @ H
        S = K + 2 * ch.memory
        band = ch.memory
        gkl = np.zeros((S, band), dtype=np.complex128)
        glk = np.zeros((S, band), dtype=np.complex128)
        for d in range(1, band + 1):
            idx = np.arange(d, S)
            gkl[idx, d - 1] = G[idx, idx - d]
            glk[idx, d - 1] = G[idx - d, idx]
        _MF_CACHE[key] = (H, _t(gkl, CDTYPE), _t(glk, CDTYPE),
                          _t(np.diagonal(G).copy(), CDTYPE))
    return _MF_CACHE[key]


def gfg_observation_tensors(p, ch: ChannelModel, ys):
    """Observation tensors for a detector batch; differentiable in p.

    ``p`` is None for the matched filter (UFG), else a real torch tensor
    of FIR taps for the causal zero-delay preprocessor (GFG).  ``ys`` may
    be a numpy array or complex tensor of shape (B, K+L).  Returns
    (x, gkl, glk, gdiag) on the padded index axis of length K+2L.
    """
    ys_t = _t(np.asarray(ys) if not isinstance(ys, torch.Tensor) else ys, CDTYPE)
    L = ch.memory
    B, n_obs = ys_t.shape
    K = n_obs - L
    S = K + 2 * L
    if p is None:
        H, gkl, glk, gdiag = matched_filter_tensors(ch, K)
        x = ys_t @ _t(H, CDTYPE).conj()
        return x, gkl, glk, gdiag
    p = _t(p).to(CDTYPE)
    h = _t(ch.h, CDTYPE)
    Lp = p.shape[0]
    band = L + Lp - 1
    # combined response g = p * h; warm-up rows (j - L < Lp - 1) see a
    # zero-padded y, so their effective taps truncate the sum over p
    zero_c = torch.zeros((), dtype=CDTYPE)
    gs = torch.stack([
        torch.stack([
            sum((p[i] * h[d - i] for i in range(max(0, d - L), min(r, d) + 1)), zero_c)
            for d in range(band + 1)
        ])
        for r in range(Lp)
    ])  # (Lp, band+1): row r holds the taps truncated to p[0..r]
    jj = torch.arange(S)
    row_ok = jj >= L
    gfull = gs[torch.clamp(jj - L, 0, Lp - 1)]  # (S, band+1)
    gdiag = torch.where(row_ok, gfull[:, 0], zero_c)
    cols = []
    for d in range(1, band + 1):
        cols.append(torch.where(row_ok & (jj >= d), gfull[:, d], zero_c))
    gkl = torch.stack(cols, dim=1) if cols else torch.zeros((S, 0), dtype=CDTYPE)
    glk = torch.zeros((S, band), dtype=CDTYPE)
    # x~ = causal convolution of p with y on padded indices L..S-1
    ypad = torch.cat([torch.zeros((B, Lp - 1), dtype=CDTYPE), ys_t], dim=1)
    x_full = sum(p[i] * ypad[:, Lp - 1 - i:Lp - 1 - i + n_obs] for i in range(Lp))
    x = torch.cat([torch.zeros((B, L), dtype=CDTYPE), x_full], dim=1)
    return x, gkl, glk, gdiag


def gfg_forward(x, gkl, glk, gdiag, sigma2, points, boundary_idx, K, L,
                kappa, lam, w_v2f, w_f2v, per_iteration=False):
    """Batched GFG detection; returns log-beliefs (B, K, M).

    x: (B, S) complex preprocessed observation on padded indices; gkl/glk:
    (S, band) complex with gkl[j, d-1] = G[j, j-d] and glk[j, d-1] =
    G[j-d, j]; gdiag: (S,) complex.  kappa (N, S, 3), lam (N, S, band),
    w_v2f/w_f2v (N, S, 2*band) real tensors.  With per_iteration, returns
    the (N, B, K, M) log-beliefs after every iteration instead.
    """
    x = _t(x, CDTYPE)
    points = _t(points, CDTYPE)
    kappa, lam, w_v2f, w_f2v = _t(kappa), _t(lam), _t(w_v2f), _t(w_f2v)
    n_iters = kappa.shape[0]
    S = x.shape[1]
    B = x.shape[0]
    M = points.shape[0]
    band = lam.shape[2]
    rdt = x.real.dtype

    # base pair table: Tbase[j, d-1, a, b] for factor I_{j, j-d}
    ma = points.reshape(M, 1)
    mb = points.reshape(1, M)
    tbase = -(gkl.real[..., None, None] * (mb * ma.conj()).real
              - gkl.imag[..., None, None] * (mb * ma.conj()).imag
              + glk.real[..., None, None] * (ma * mb.conj()).real
              - glk.imag[..., None, None] * (ma * mb.conj()).imag) / sigma2  # (S, band, M, M)

    xa = 2.0 * (x[..., None] * points.conj()).real  # (B, S, M)
    gd = gdiag.real[None, :, None] * (torch.abs(points) ** 2)[None, None, :]  # (1, S, M)

    def f_message(n):
        k1, k2, k3 = kappa[n, :, 0], kappa[n, :, 1], kappa[n, :, 2]
        return (k1[None, :, None] / sigma2) * (k2[None, :, None] * xa - k3[None, :, None] * gd)

    valid = torch.zeros((S, 2 * band), dtype=torch.bool)
    jj = torch.arange(S)
    for d in range(1, band + 1):
        valid[:, d - 1] = jj - d >= 0
        valid[:, band + d - 1] = jj + d <= S - 1
    known = torch.zeros(S, dtype=torch.bool)
    known[:L] = True
    known[L + K:] = True
    clampvec = torch.full((M,), CLAMP_NEG, dtype=rdt)
    clampvec[boundary_idx] = 0.0

    f2v = torch.zeros((B, S, 2 * band, M), dtype=rdt)
    fmsg = torch.zeros((B, S, M), dtype=rdt)  # degree-1 F message, uniform at start
    per_iter = []
    for n in range(n_iters):
        # VN -> FN
        vn_sum = fmsg + f2v.sum(dim=2)
        raw = vn_sum.unsqueeze(2) - f2v
        v2f = w_v2f[n].unsqueeze(0).unsqueeze(-1) * _normalize(raw)
        v2f = torch.where(known.reshape(1, S, 1, 1), clampvec, v2f)
        v2f = v2f * valid.reshape(1, S, 2 * band, 1)

        # FN -> VN through the degree-2 I factors
        new_f2v = torch.zeros_like(f2v)
        for d in range(1, band + 1):
            T = lam[n, :, d - 1].reshape(S, 1, 1) * tbase[:, d - 1]  # (S, M, M)
            # edge (j, d-1): target c_j, partner message from c_{j-d}
            in_b = torch.zeros((B, S, M), dtype=rdt)
            in_b[:, d:] = v2f[:, :S - d, band + d - 1]
            out_a = torch.logsumexp(T.unsqueeze(0) + in_b.unsqueeze(2), dim=3)
            new_f2v[:, :, d - 1] = w_f2v[n, :, d - 1].unsqueeze(-1) * _normalize(out_a)
            # edge (j, band+d-1): target c_j as the lower index of I_{j+d, j}
            in_a = torch.zeros((B, S, M), dtype=rdt)
            in_a[:, :S - d] = v2f[:, d:, d - 1]
            Tup = torch.zeros((S, M, M), dtype=rdt)
            Tup[:S - d] = T[d:]
            out_b = torch.logsumexp(Tup.unsqueeze(0) + in_a.unsqueeze(3), dim=2)
            new_f2v[:, :, band + d - 1] = w_f2v[n, :, band + d - 1].unsqueeze(-1) * _normalize(out_b)
        f2v = new_f2v * valid.reshape(1, S, 2 * band, 1)
        fmsg = f_message(n)
        if per_iteration:
            logb = fmsg + f2v.sum(dim=2)
            per_iter.append(torch.log_softmax(logb[:, L:L + K], dim=-1))

    if per_iteration:
        return torch.stack(per_iter)
    logb = fmsg + f2v.sum(dim=2)
    return torch.log_softmax(logb[:, L:L + K], dim=-1)


# ---------------------------------------------------------------------------
# Observation-model plumbing and the public detect API
# ---------------------------------------------------------------------------

def detect(frame: TransmissionFrame, ch: ChannelModel, cons: Constellation,
           kind: str, params=None, n_iters: int = 10) -> np.ndarray:
    """Run one detector on one frame; returns (K, M) symbol posteriors."""
    probs = detect_batch(frame.y[None, :], frame.sigma2, ch, cons, kind,
                         params=params, n_iters=n_iters)
    return probs[0]


def detect_batch(ys, sigma2, ch: ChannelModel, cons: Constellation, kind: str,
                 params=None, n_iters: int = 10) -> np.ndarray:
    """Batched detection; ys is (B, K+L) complex, returns (B, K, M) posteriors."""
    ys = np.asarray(ys, dtype=np.complex128)
    L = ch.memory
    K = ys.shape[1] - L
    if kind not in DETECTOR_KINDS:
        raise ConfigurationError(f"unknown detector kind {kind!r}")
    with torch.no_grad():
        if kind == "ffg":
            if params is None:
                params = unit_ffg_params(K, L, n_iters)
            if params.w_v2f.shape[1] != K + L:
                raise ConfigurationError("FFG parameter block length does not match frame")
            logb = ffg_forward(_t(ys, CDTYPE), ch.h, sigma2, cons.points, 0, K,
                               params.w_v2f, params.w_f2v)
        else:
            if kind == "ufg":
                if params is None:
                    params = unit_gfg_params(K, L, L, n_iters)
                elif params.p is not None:
                    raise ConfigurationError("UFG takes matched-filter parameters (p must be None)")
                if params.band != L:
                    raise ConfigurationError(
                        f"parameter band {params.band} does not match matched-filter band {L}")
            else:
                if params is None:
                    raise ConfigurationError("GFG requires a parameter set")
                if params.p is None:
                    # matched-filter preprocessing: GFG(H^H)
                    if params.band != L:
                        raise ConfigurationError(
                            f"parameter band {params.band} does not match matched-filter band {L}")
                elif params.band != L + len(params.p) - 1:
                    raise ConfigurationError(
                        f"parameter band {params.band} does not match observation band "
                        f"{L + len(params.p) - 1}")
            if params.kappa.shape[1] != K + 2 * L:
                raise ConfigurationError("GFG parameter block length does not match frame")
            p_t = None if params.p is None else _t(params.p)
            x, gkl, glk, gdiag = gfg_observation_tensors(p_t, ch, ys)
            logb = gfg_forward(x, gkl, glk, gdiag, sigma2, cons.points, 0, K, L,
                               params.kappa, params.lam, params.w_v2f, params.w_f2v)
        return torch.exp(logb).numpy()


def observation_model_for(ch: ChannelModel, y, params: GfgParams | None, kind: str) -> ObservationModel:
    if kind == "gfg":
        return preprocessed_model(params.p, ch, y)
    return matched_filter_model(ch, y)


# ---------------------------------------------------------------------------
# Generic-engine graph builders (oracle path for small instances)
# ---------------------------------------------------------------------------

def build_ffg(frame: TransmissionFrame, ch: ChannelModel, cons: Constellation) -> spa.FactorGraph:
    """FFG over the padded symbols: FN q_k per observation, degree L+1."""
    L = ch.memory
    K = frame.block_length
    S = K + 2 * L
    M = cons.size
    points = cons.points
    h = ch.h
    sigma2 = frame.sigma2
    factors = []
    for k in range(K + L):
        nbrs = [k + L - l for l in range(L + 1)]  # c_{k+1}, c_k, ..., c_{k+1-L}

        def log_q(assign, yk=frame.y[k]):
            s = sum(h[l] * points[assign[l]] for l in range(L + 1))
            return -abs(yk - s) ** 2 / sigma2

        factors.append(spa.FactorNode(nbrs, log_q))
    clamped = {j: 0 for j in list(range(L)) + list(range(L + K, S))}
    return spa.FactorGraph(vn_count=S, alphabet_size=M, factors=factors, clamped=clamped)


def build_gfg(frame: TransmissionFrame, ch: ChannelModel, cons: Constellation,
              obs: ObservationModel, kappa=(1.0, 1.0, 1.0), lam=1.0) -> spa.FactorGraph:
    """GFG/UFG graph: degree-1 F factors plus banded degree-2 I factors.

    kappa/lam here are static scalars (the generic engine is used for
    unit-weight cross-checks; per-iteration weights live in the torch path).
    """
    L = ch.memory
    K = frame.block_length
    S = K + 2 * L
    if obs.Gmat.shape[0] != S:
        raise ConfigurationError("observation model size does not match frame")
    points = cons.points
    sigma2 = frame.sigma2
    G, x = obs.Gmat, obs.xseq
    factors = []
    for j in range(S):
        def log_f(assign, j=j):
            c = points[assign[0]]
            k1, k2, k3 = kappa
            return (k1 / sigma2) * (k2 * 2.0 * (x[j] * c.conjugate()).real
                                    - k3 * (G[j, j] * abs(c) ** 2).real)

        factors.append(spa.FactorNode([j], log_f))
    for j in range(S):
        for d in range(1, obs.band + 1):
            if j - d < 0:
                continue

            def log_i(assign, j=j, d=d):
                ck = points[assign[0]]
                cl = points[assign[1]]
                jkl = -(G[j, j - d] * cl * ck.conjugate()).real / sigma2
                jlk = -(G[j - d, j] * ck * cl.conjugate()).real / sigma2
                return lam * (jkl + jlk)

            factors.append(spa.FactorNode([j, j - d], log_i))
    clamped = {i: 0 for i in list(range(L)) + list(range(L + K, S))}
    return spa.FactorGraph(vn_count=S, alphabet_size=cons.size, factors=factors, clamped=clamped)


# ---------------------------------------------------------------------------
# Complexity accounting
# ---------------------------------------------------------------------------

def count_fn_operations(kind: str, K: int, L_or_band: int, M: int, n_iters: int) -> int:
    """Factor-table terms evaluated by the FN updates of N iterations.

    FFG: every factor q_k evaluates its full (L+1)-dimensional joint table
    once per outgoing edge.  UFG/GFG: every valid edge of a degree-2 I
    factor evaluates M^2 terms (M summary terms per output value).
    """
    if kind == "ffg":
        L = L_or_band
        return n_iters * (K + L) * (L + 1) * M ** (L + 1)
    if kind in ("ufg", "gfg"):
        band = L_or_band
        S = K + 2 * band  # padded axis for a memory-`band` matched model
        n_edges = 2 * (band * S - band * (band + 1) // 2)
        return n_iters * n_edges * M * M
    raise ConfigurationError(f"unknown detector kind {kind!r}")
