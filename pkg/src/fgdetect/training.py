"""End-to-end optimization of detector parameters against the BMI estimate.

The unrolled detectors in :mod:`fgdetect.detectors` are differentiable
torch computations; reverse-mode gradients of the negative BMI come from
autograd and are cross-checked against central finite differences in the
test suite.  Adam is implemented directly so update semantics are
explicit and parameter containers stay plain numpy.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field

import numpy as np
import torch

from .channel import ChannelModel
from .constellations import Constellation, ebn0_to_sigma2
from .detectors import (CDTYPE, DTYPE, FfgParams, GfgParams, ffg_forward,
                        gfg_forward, gfg_observation_tensors, unit_ffg_params,
                        unit_gfg_params)
from .errors import ConfigurationError, ParamsIOError, TrainingError

PARAMS_FORMAT_VERSION = 1


# ---------------------------------------------------------------------------
# Datasets
# ---------------------------------------------------------------------------

@dataclass
class Dataset:
    """Labeled frames at one operating point: symbol indices and observations."""

    symbol_indices: np.ndarray  # (D, K) int
    ys: np.ndarray              # (D, K+L) complex
    sigma2: float
    ebn0_db: float
    channel_name: str


def simulate_batch(ch: ChannelModel, cons: Constellation, K: int, sigma2: float,
                   count: int, rng: np.random.Generator):
    """Vectorized i.i.d. uniform frames through the ISI+AWGN channel."""
    L = ch.memory
    idx = rng.integers(0, cons.size, size=(count, K))
    c_check = np.empty((count, K + 2 * L), dtype=np.complex128)
    c_check[:, :L] = cons.points[0]
    c_check[:, L + K:] = cons.points[0]
    c_check[:, L:L + K] = cons.points[idx]
    y = np.zeros((count, K + L), dtype=np.complex128)
    for l, tap in enumerate(ch.h):
        # y_r = sum_l h_l c_check[r + L - l]
        y += tap * c_check[:, L - l:L - l + K + L]
    if sigma2 > 0:
        y = y + np.sqrt(sigma2 / 2.0) * (rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape))
    return idx, y


def generate_dataset(ch: ChannelModel, cons: Constellation, K: int, ebn0_db: float,
                     count: int, rng: np.random.Generator) -> Dataset:
    if count < 1:
        raise ValueError("count must be >= 1")
    sigma2 = ebn0_to_sigma2(ebn0_db, cons)
    idx, ys = simulate_batch(ch, cons, K, sigma2, count, rng)
    return Dataset(idx, ys, sigma2, ebn0_db, ch.name)


# ---------------------------------------------------------------------------
# Differentiable loss (negative BMI estimate)
# ---------------------------------------------------------------------------

def _llrs_from_logbeliefs(logb: torch.Tensor, cons: Constellation) -> torch.Tensor:
    """(B, K, M) log-beliefs -> (B, K, m) LLRs, differentiable.

    Unlike the reporting path, the training objective leaves LLRs
    unclamped: log-beliefs are finite, softplus is stable for any
    magnitude, and a hard clamp would zero the gradient exactly where the
    detector is confidently wrong.
    """
    mask0 = torch.as_tensor(cons.labels == 0).T  # (m, M)
    expanded = logb.unsqueeze(2)  # (B, K, 1, M)
    neg = torch.tensor(-np.inf, dtype=logb.dtype)
    logp0 = torch.logsumexp(torch.where(mask0, expanded, neg), dim=-1)
    logp1 = torch.logsumexp(torch.where(~mask0, expanded, neg), dim=-1)
    return logp0 - logp1


def bmi_loss(logb: torch.Tensor, symbol_indices: np.ndarray, cons: Constellation) -> torch.Tensor:
    """Negative BMI estimate of a batch of log-beliefs, differentiable."""
    llrs = _llrs_from_logbeliefs(logb, cons)
    bits = torch.as_tensor(cons.labels[symbol_indices])  # (B, K, m)
    signed = torch.where(bits == 0, llrs, -llrs)
    D, K, m = llrs.shape
    penalty = torch.nn.functional.softplus(-signed).sum() / (D * K * math.log(2.0))
    return penalty - m


def _params_to_tensors(params, kind: str):
    """Trainable parameter dict as float64 leaf tensors with grad."""
    def leaf(a):
        return torch.tensor(np.asarray(a, dtype=np.float64), requires_grad=True)

    if kind == "ffg":
        return {"w_v2f": leaf(params.w_v2f), "w_f2v": leaf(params.w_f2v)}
    tensors = {"w_v2f": leaf(params.w_v2f), "w_f2v": leaf(params.w_f2v)}
    if kind == "gfg":
        tensors["p"] = leaf(params.p)
        tensors["kappa"] = leaf(params.kappa)
        tensors["lam"] = leaf(params.lam)
    return tensors


def _tensors_to_params(tensors, params, kind: str):
    """Copy tensor values back into a (new) parameter container."""
    vals = {k: t.detach().numpy().copy() for k, t in tensors.items()}
    if kind == "ffg":
        return dataclasses.replace(params, w_v2f=vals["w_v2f"], w_f2v=vals["w_f2v"])
    out = dataclasses.replace(params, w_v2f=vals["w_v2f"], w_f2v=vals["w_f2v"])
    if kind == "gfg":
        out = dataclasses.replace(out, p=vals["p"], kappa=vals["kappa"], lam=vals["lam"])
    return out


def detector_logbeliefs(tensors, params, kind: str, ch: ChannelModel,
                        cons: Constellation, ys: np.ndarray, sigma2: float,
                        per_iteration: bool = False) -> torch.Tensor:
    """Differentiable forward pass of the chosen detector on a batch."""
    L = ch.memory
    K = ys.shape[1] - L
    if kind == "ffg":
        return ffg_forward(torch.as_tensor(ys, dtype=CDTYPE), ch.h, sigma2, cons.points,
                           0, K, tensors["w_v2f"], tensors["w_f2v"],
                           per_iteration=per_iteration)
    x, gkl, glk, gdiag = gfg_observation_tensors(tensors.get("p"), ch, ys)
    kappa = tensors.get("kappa", torch.as_tensor(params.kappa, dtype=DTYPE))
    lam = tensors.get("lam", torch.as_tensor(params.lam, dtype=DTYPE))
    return gfg_forward(x, gkl, glk, gdiag, sigma2, cons.points, 0, K, L,
                       kappa, lam, tensors["w_v2f"], tensors["w_f2v"],
                       per_iteration=per_iteration)


def loss_and_gradients(params, batch: Dataset, kind: str, ch: ChannelModel,
                       cons: Constellation, multiloss: bool = False):
    """Negative-BMI loss and its gradient for every trainable parameter.

    With multiloss, the objective is the mean of the per-iteration BMI
    losses over all unrolled iterations (every iteration's beliefs are
    pushed towards the transmitted bits) instead of the final-iteration
    loss alone.
    """
    tensors = _params_to_tensors(params, kind)
    logb = detector_logbeliefs(tensors, params, kind, ch, cons, batch.ys,
                               batch.sigma2, per_iteration=multiloss)
    if multiloss:
        loss = sum(bmi_loss(lb, batch.symbol_indices, cons) for lb in logb) / logb.shape[0]
    else:
        loss = bmi_loss(logb, batch.symbol_indices, cons)
    if not torch.isfinite(loss):
        last = logb[-1] if multiloss else logb  # (B, K, M)
        finite = torch.isfinite(last).reshape(last.shape[0], -1).all(dim=1)
        bad = torch.nonzero(~finite)
        idx = int(bad[0]) if len(bad) else -1
        raise TrainingError(f"non-finite loss (first offending frame {idx})")
    loss.backward()
    grads = {k: (t.grad.numpy().copy() if t.grad is not None else np.zeros_like(t.detach().numpy()))
             for k, t in tensors.items()}
    return float(loss.item()), grads


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------

@dataclass
class AdamState:
    """First/second moment estimates and step counter for a parameter dict."""

    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(state: AdamState, values: dict, grads: dict) -> dict:
    """One bias-corrected Adam update; returns the new parameter dict."""
    state.step_count += 1
    t = state.step_count
    out = {}
    for key, g in grads.items():
        g = np.asarray(g, dtype=np.float64)
        if key not in state.m:
            state.m[key] = np.zeros_like(g)
            state.v[key] = np.zeros_like(g)
        state.m[key] = state.beta1 * state.m[key] + (1 - state.beta1) * g
        state.v[key] = state.beta2 * state.v[key] + (1 - state.beta2) * g * g
        mhat = state.m[key] / (1 - state.beta1**t)
        vhat = state.v[key] / (1 - state.beta2**t)
        out[key] = values[key] - state.learning_rate * mhat / (np.sqrt(vhat) + state.eps)
    return out


# ---------------------------------------------------------------------------
# Training loop
# ---------------------------------------------------------------------------

@dataclass
class TrainConfig:
    n_iters: int = 10
    block_length: int = 500
    batch_size: int = 32
    steps: int = 2000
    learning_rate: float = 1e-3
    final_learning_rate: float | None = None  # cosine decay target; None = constant
    multiloss: bool = False  # average the BMI loss over all unrolled iterations
    seed: int = 0
    l_p: int | None = None  # GFG preprocessor length


def _params_dict(params, kind):
    if kind == "ffg":
        return {"w_v2f": params.w_v2f, "w_f2v": params.w_f2v}
    d = {"w_v2f": params.w_v2f, "w_f2v": params.w_f2v}
    if kind == "gfg":
        d.update(p=params.p, kappa=params.kappa, lam=params.lam)
    return d


def _params_from_dict(template, values, kind):
    if kind == "ffg":
        return dataclasses.replace(template, w_v2f=values["w_v2f"], w_f2v=values["w_f2v"])
    out = dataclasses.replace(template, w_v2f=values["w_v2f"], w_f2v=values["w_f2v"])
    if kind == "gfg":
        out = dataclasses.replace(out, p=values["p"], kappa=values["kappa"], lam=values["lam"])
    return out


def init_params(kind: str, ch: ChannelModel, K: int, config: TrainConfig,
                rng: np.random.Generator | None = None):
    """Unit-weight initialization; GFG preprocessor taps ~ N(0, 1)."""
    L = ch.memory
    if kind == "ffg":
        return unit_ffg_params(K, L, config.n_iters)
    if kind == "ufg":
        band = L
        return unit_gfg_params(K, L, band, config.n_iters)
    if kind == "gfg":
        if config.l_p is None or config.l_p < 1:
            raise ConfigurationError("GFG training needs l_p >= 1")
        rng = rng or np.random.default_rng(0)
        p = rng.standard_normal(config.l_p)
        return unit_gfg_params(K, L, L + config.l_p - 1, config.n_iters, p=p)
    raise ConfigurationError(f"unknown detector kind {kind!r}")


def train(kind: str, ch: ChannelModel, cons: Constellation, train_ebn0_db: float,
          config: TrainConfig, progress=None, start=None):
    """Adam optimization of the detector's parameter set against -BMI.

    Returns (best_params, loss_log).  Step 0 (the returned initialization
    for config.steps == 0) is the plain unit-weight detector.  ``start``
    warm-starts from an existing parameter set instead of init_params.
    When config.final_learning_rate is set, the learning rate follows a
    cosine schedule from learning_rate down to that value.
    """
    rng = np.random.default_rng(config.seed)
    params = init_params(kind, ch, config.block_length, config, rng) if start is None else start
    sigma2 = ebn0_to_sigma2(train_ebn0_db, cons)
    state = AdamState(learning_rate=config.learning_rate)
    lr0, lr1 = config.learning_rate, config.final_learning_rate
    best_params = params
    best_loss = np.inf
    loss_log = []
    for step in range(config.steps):
        if lr1 is not None and config.steps > 1:
            frac = step / (config.steps - 1)
            state.learning_rate = lr1 + 0.5 * (lr0 - lr1) * (1.0 + np.cos(np.pi * frac))
        idx, ys = simulate_batch(ch, cons, config.block_length, sigma2, config.batch_size, rng)
        batch = Dataset(idx, ys, sigma2, train_ebn0_db, ch.name)
        loss, grads = loss_and_gradients(params, batch, kind, ch, cons,
                                         multiloss=config.multiloss)
        loss_log.append(loss)
        if loss < best_loss:
            best_loss = loss
            best_params = params
        values = adam_step(state, _params_dict(params, kind), grads)
        params = _params_from_dict(params, values, kind)
        if progress is not None:
            progress(step, loss)
    return best_params, loss_log


# ---------------------------------------------------------------------------
# Parameter file round-trip
# ---------------------------------------------------------------------------

def save_params(params, path, kind: str, ch: ChannelModel, cons: Constellation,
                block_length: int, train_ebn0_db: float | None = None) -> None:
    """Write a self-describing .npz parameter container."""
    meta = {
        "format_version": PARAMS_FORMAT_VERSION,
        "kind": kind,
        "n_iters": params.n_iters,
        "block_length": block_length,
        "channel": ch.name,
        "channel_taps_real": list(np.real(ch.h)),
        "channel_taps_imag": list(np.imag(ch.h)),
        "constellation": cons.name,
        "train_ebn0_db": train_ebn0_db,
    }
    arrays = {"w_v2f": params.w_v2f, "w_f2v": params.w_f2v}
    if kind == "ffg":
        pass
    else:
        meta["band"] = params.band
        arrays["kappa"] = params.kappa
        arrays["lam"] = params.lam
        if params.p is not None:
            arrays["p"] = params.p
            meta["l_p"] = len(params.p)
    with open(path, "wb") as fh:
        np.savez(fh, meta=json.dumps(meta), **arrays)


def load_params(path):
    """Read a parameter container; returns (params, meta dict)."""
    try:
        data = np.load(path, allow_pickle=False)
    except Exception as exc:
        raise ParamsIOError(f"cannot read parameter file {path}: {exc}") from exc
    try:
        meta = json.loads(str(data["meta"]))
    except Exception as exc:
        raise ParamsIOError(f"parameter file {path}: missing or invalid 'meta' block") from exc
    if meta.get("format_version") != PARAMS_FORMAT_VERSION:
        raise ParamsIOError(f"parameter file {path}: unsupported format_version "
                            f"{meta.get('format_version')}")
    kind = meta.get("kind")
    n_iters = int(meta["n_iters"])
    K = int(meta["block_length"])
    taps = np.array(meta["channel_taps_real"]) + 1j * np.array(meta["channel_taps_imag"])
    L = len(taps) - 1
    try:
        w_v2f = data["w_v2f"]
        w_f2v = data["w_f2v"]
        if kind == "ffg":
            expect = (n_iters, K + L, L + 1)
            if w_v2f.shape != expect or w_f2v.shape != expect:
                raise ParamsIOError(f"field w_v2f/w_f2v: shape {w_v2f.shape} != {expect}")
            params = FfgParams(n_iters, w_v2f, w_f2v)
        elif kind in ("ufg", "gfg"):
            band = int(meta["band"])
            S = K + 2 * L
            for name, arr, expect in (("kappa", data["kappa"], (n_iters, S, 3)),
                                      ("lam", data["lam"], (n_iters, S, band)),
                                      ("w_v2f", w_v2f, (n_iters, S, 2 * band)),
                                      ("w_f2v", w_f2v, (n_iters, S, 2 * band))):
                if arr.shape != expect:
                    raise ParamsIOError(f"field {name}: shape {arr.shape} != {expect}")
            p = data["p"] if "p" in data else None
            params = GfgParams(n_iters, band, p, data["kappa"], data["lam"], w_v2f, w_f2v)
        else:
            raise ParamsIOError(f"field kind: unknown detector kind {kind!r}")
    except KeyError as exc:
        raise ParamsIOError(f"parameter file {path}: missing field {exc}") from exc
    return params, meta


def check_params_compatible(meta: dict, ch: ChannelModel, cons: Constellation, K: int) -> None:
    """Raise if a loaded parameter file does not match the run configuration."""
    taps = np.array(meta["channel_taps_real"]) + 1j * np.array(meta["channel_taps_imag"])
    if meta.get("channel") != ch.name or len(taps) != len(ch.h) or not np.allclose(taps, ch.h):
        raise ConfigurationError(
            f"parameter file trained on channel {meta.get('channel')!r}, run uses {ch.name!r}")
    if meta.get("constellation") != cons.name:
        raise ConfigurationError(
            f"parameter file trained with {meta.get('constellation')!r}, run uses {cons.name!r}")
    if int(meta["block_length"]) != K:
        raise ConfigurationError(
            f"parameter file trained at K={meta['block_length']}, run uses K={K}")
