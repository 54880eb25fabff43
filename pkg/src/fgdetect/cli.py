"""Experiment runner: Eb/N0 sweeps, detector training, and a selftest gate.

Subcommands:
  sweep     Monte-Carlo BER/BMI sweep over an Eb/N0 grid; writes a CSV and
            renders a PNG figure next to it.
  train     Optimize detector parameters against the BMI objective; writes
            a parameter file plus a per-step loss CSV and figure.
  selftest  Desk-scale oracle-equivalence and gradient checks.

Configuration is a flat key=value text file (# comments allowed); every
key can be overridden on the command line.  Exit codes: 0 ok, 1 check
failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import dataclasses
import os
import sys
import time

import numpy as np

from . import detectors, plots, reference, spa, training
from .channel import ChannelModel, make_channel, transmit
from .constellations import Constellation, ebn0_to_sigma2, make_constellation
from .errors import ConfigurationError, FgdetectError
from .metrics import bmd_llrs

EXIT_OK = 0
EXIT_CHECK_FAILURE = 1
EXIT_CONFIG_ERROR = 2

CHUNK_FRAMES = 25          # fixed chunk size keeps the RNG stream independent of stopping
DEFAULT_MIN_ERRORS = 200
DEFAULT_FRAME_CAP = 10_000
DEFAULT_MMSE_ORDER = 30
GRAPH_KINDS = detectors.DETECTOR_KINDS
BASELINE_KINDS = ("bcjr", "mmse")


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class SweepConfig:
    channel: str = "proakis-b"
    mod: str = "bpsk"
    detectors: tuple = ("bcjr", "ufg")
    ebno_min: float = 0.0
    ebno_max: float = 12.0
    ebno_step: float = 2.0
    frames: int = DEFAULT_FRAME_CAP       # frame cap per grid point
    seed: int = 0
    iters: int = 10
    params: tuple = ()                    # parameter-file paths
    out: str = "sweep.csv"
    min_errors: int = DEFAULT_MIN_ERRORS
    block_length: int = 500
    mmse_order: int = DEFAULT_MMSE_ORDER


def read_config_file(path: str) -> dict:
    """Parse a flat key=value config file; '#' starts a comment."""
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def _merge(file_values: dict, args: argparse.Namespace, fields: dict) -> dict:
    """File values overridden by explicitly-set CLI flags; typed per field."""
    out = {}
    for key, (typ, default) in fields.items():
        value = default
        if key in file_values:
            value = file_values.pop(key)
        cli = getattr(args, key, None)
        if cli is not None:
            value = cli
        if value is not None and not isinstance(value, typ) and typ is not tuple:
            try:
                if typ is bool:
                    if str(value).lower() not in ("0", "1", "true", "false"):
                        raise ValueError(f"expected a boolean, got {value!r}")
                    value = str(value).lower() in ("1", "true")
                else:
                    value = typ(value)
            except (TypeError, ValueError) as exc:
                raise ConfigurationError(f"config key {key}: {exc}") from exc
        out[key] = value
    if file_values:
        raise ConfigurationError(f"unknown config keys: {sorted(file_values)}")
    return out


def _parse_list(value) -> tuple:
    if isinstance(value, tuple):
        return value
    if isinstance(value, list):
        return tuple(value)
    return tuple(s.strip() for s in str(value).split(",") if s.strip())


def sweep_config_from_args(args: argparse.Namespace) -> SweepConfig:
    file_values = read_config_file(args.config) if args.config else {}
    fields = {
        "channel": (str, SweepConfig.channel),
        "mod": (str, SweepConfig.mod),
        "detectors": (tuple, SweepConfig.detectors),
        "ebno_min": (float, SweepConfig.ebno_min),
        "ebno_max": (float, SweepConfig.ebno_max),
        "ebno_step": (float, SweepConfig.ebno_step),
        "frames": (int, SweepConfig.frames),
        "seed": (int, SweepConfig.seed),
        "iters": (int, SweepConfig.iters),
        "params": (tuple, SweepConfig.params),
        "out": (str, SweepConfig.out),
        "min_errors": (int, SweepConfig.min_errors),
        "block_length": (int, SweepConfig.block_length),
        "mmse_order": (int, SweepConfig.mmse_order),
    }
    merged = _merge(file_values, args, fields)
    merged["detectors"] = _parse_list(merged["detectors"])
    merged["params"] = _parse_list(merged["params"])
    cfg = SweepConfig(**merged)
    _validate_sweep_config(cfg)
    return cfg


def _validate_sweep_config(cfg: SweepConfig) -> None:
    known = set(GRAPH_KINDS) | set(BASELINE_KINDS)
    for det in cfg.detectors:
        if det not in known:
            raise ConfigurationError(f"unknown detector {det!r}; choose from {sorted(known)}")
    if not cfg.detectors:
        raise ConfigurationError("need at least one detector")
    if len(set(cfg.detectors)) != len(cfg.detectors):
        raise ConfigurationError("duplicate detector names")
    if cfg.ebno_step <= 0:
        raise ConfigurationError("ebno_step must be positive")
    if cfg.ebno_max < cfg.ebno_min:
        raise ConfigurationError("ebno_max must be >= ebno_min")
    if cfg.frames < 1 or cfg.block_length < 1 or cfg.iters < 1 or cfg.min_errors < 1:
        raise ConfigurationError("frames, block_length, iters, min_errors must be >= 1")


def ebn0_grid(cfg: SweepConfig) -> list:
    n = int(round((cfg.ebno_max - cfg.ebno_min) / cfg.ebno_step)) + 1
    return [cfg.ebno_min + i * cfg.ebno_step for i in range(n)]


# ---------------------------------------------------------------------------
# Sweep
# ---------------------------------------------------------------------------

def _load_params_map(cfg: SweepConfig, ch: ChannelModel, cons: Constellation) -> dict:
    params_map = {}
    for path in cfg.params:
        params, meta = training.load_params(path)
        training.check_params_compatible(meta, ch, cons, cfg.block_length)
        kind = meta["kind"]
        if kind in params_map:
            raise ConfigurationError(f"two parameter files for detector {kind!r}")
        params_map[kind] = params
    return params_map


def _detector_params(name: str, cfg: SweepConfig, ch: ChannelModel, params_map: dict):
    """Parameter set (or None for unit weights) for a graph detector."""
    if name in params_map:
        return params_map[name]
    if name == "gfg":
        raise ConfigurationError("gfg needs a parameter file (--params) providing the preprocessor")
    return None


def _bcjr_sub_batch(K: int, L: int, M: int) -> int:
    # keep the (n_obs, B, M^L, M) branch-metric tensor around ~10^7 entries
    return max(1, int(1.2e7 // max(1, (K + L) * M ** (L + 1))))


def _ffg_sub_batch(K: int, L: int, M: int) -> int:
    return max(1, int(1.2e7 // max(1, (K + L) * M ** (L + 1))))


def _beliefs_for(name: str, ys: np.ndarray, sigma2: float, ch: ChannelModel,
                 cons: Constellation, cfg: SweepConfig, params_map: dict,
                 mmse_cache: dict) -> np.ndarray:
    """(B, K, M) posterior (or surrogate) probabilities for one chunk."""
    B = ys.shape[0]
    K = cfg.block_length
    L = ch.memory
    M = cons.size
    if name == "bcjr":
        sub = _bcjr_sub_batch(K, L, M)
        parts = [reference.bcjr_map_batch(ys[i:i + sub], sigma2, ch, cons)
                 for i in range(0, B, sub)]
        return np.concatenate(parts, axis=0)
    if name == "mmse":
        if "filter" not in mmse_cache:
            mmse_cache["filter"] = reference.mmse_filter(ch, sigma2, cfg.mmse_order)
        f, delay, mse = mmse_cache["filter"]
        order = cfg.mmse_order
        ypad = np.concatenate([np.zeros((B, order), dtype=ys.dtype), ys,
                               np.zeros((B, order + L), dtype=ys.dtype)], axis=1)
        est = np.zeros((B, K), dtype=np.complex128)
        for i in range(order):
            est += np.conj(f[i]) * ypad[:, order + delay - i:order + delay - i + K]
        # Gaussian post-equalization surrogate for soft metrics
        var = max(mse, 1e-12)
        d2 = np.abs(est[:, :, None] - cons.points[None, None, :]) ** 2 / var
        d2 -= d2.min(axis=2, keepdims=True)
        p = np.exp(-d2)
        return p / p.sum(axis=2, keepdims=True)
    params = _detector_params(name, cfg, ch, params_map)
    if name == "ffg":
        sub = _ffg_sub_batch(K, L, M)
        parts = [detectors.detect_batch(ys[i:i + sub], sigma2, ch, cons, name,
                                        params=params, n_iters=cfg.iters)
                 for i in range(0, B, sub)]
        return np.concatenate(parts, axis=0)
    return detectors.detect_batch(ys, sigma2, ch, cons, name,
                                  params=params, n_iters=cfg.iters)


@dataclasses.dataclass
class _Cell:
    """Monte-Carlo accumulator for one (detector, Eb/N0) point."""
    bit_errors: int = 0
    bits: int = 0
    penalty: float = 0.0    # sum of log2(1 + exp(-(-1)^b L)) over all bits
    symbols: int = 0
    frames: int = 0
    done: bool = False

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits if self.bits else 0.0

    def bmi(self, m: int) -> float:
        return m - self.penalty / self.symbols if self.symbols else 0.0


def run_sweep(cfg: SweepConfig, log=None):
    """Monte-Carlo sweep; returns (ebn0 list, {detector: columns dict}).

    Each grid point simulates shared frame chunks until every detector has
    seen >= cfg.min_errors bit errors or cfg.frames frames.  Chunk RNG
    streams are seeded by (seed, point index, chunk index), so results do
    not depend on which detectors run together.
    """
    ch = make_channel(cfg.channel)
    cons = make_constellation(cfg.mod)
    params_map = _load_params_map(cfg, ch, cons)
    for det in cfg.detectors:
        if det in GRAPH_KINDS:
            _detector_params(det, cfg, ch, params_map)  # fail fast on gfg without params
    grid = ebn0_grid(cfg)
    K, m = cfg.block_length, cons.bits_per_symbol
    results = {det: {"ber": [], "bmi": [], "frames": []} for det in cfg.detectors}
    for pt, ebn0 in enumerate(grid):
        sigma2 = ebn0_to_sigma2(ebn0, cons)
        cells = {det: _Cell() for det in cfg.detectors}
        mmse_cache = {}
        frames_done = 0
        chunk_idx = 0
        while frames_done < cfg.frames and not all(c.done for c in cells.values()):
            count = min(CHUNK_FRAMES, cfg.frames - frames_done)
            rng = np.random.default_rng([cfg.seed, pt, chunk_idx])
            idx, ys = training.simulate_batch(ch, cons, K, sigma2, count, rng)
            bits = cons.labels[idx]  # (count, K, m)
            for det, cell in cells.items():
                if cell.done:
                    continue
                beliefs = _beliefs_for(det, ys, sigma2, ch, cons, cfg, params_map, mmse_cache)
                for b in range(count):
                    llr = bmd_llrs(beliefs[b], cons)
                    signed = np.where(bits[b] == 0, llr.llrs, -llr.llrs)
                    cell.bit_errors += int(np.count_nonzero(signed < 0))
                    cell.bits += K * m
                    cell.penalty += float(np.logaddexp(0.0, -signed).sum() / np.log(2.0))
                    cell.symbols += K
                    cell.frames += 1
                if cell.bit_errors >= cfg.min_errors:
                    cell.done = True
            frames_done += count
            chunk_idx += 1
        for det, cell in cells.items():
            results[det]["ber"].append(cell.ber)
            results[det]["bmi"].append(cell.bmi(m))
            results[det]["frames"].append(cell.frames)
        if log is not None:
            summary = "  ".join(f"{det}: ber={cells[det].ber:.3e}" for det in cfg.detectors)
            log(f"Eb/N0 {ebn0:g} dB  {summary}")
    return grid, results


def write_sweep_csv(grid, results, path) -> None:
    dets = list(results)
    header = "ebn0_db," + ",".join(f"{d}_ber,{d}_bmi,{d}_frames" for d in dets)
    lines = [header]
    for i, ebn0 in enumerate(grid):
        cols = [f"{ebn0:.10g}"]
        for d in dets:
            cols.append(f"{results[d]['ber'][i]:.10g}")
            cols.append(f"{results[d]['bmi'][i]:.10g}")
            cols.append(str(results[d]["frames"][i]))
        lines.append(",".join(cols))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = sweep_config_from_args(args)
    grid, results = run_sweep(cfg, log=lambda s: print(s, flush=True))
    write_sweep_csv(grid, results, cfg.out)
    png = os.path.splitext(cfg.out)[0] + ".png"
    plots.render_sweep_figure(grid, results, png,
                              title=f"{cfg.channel} / {cfg.mod} (K={cfg.block_length}, N={cfg.iters})")
    print(f"wrote {cfg.out} and {png}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

def train_config_from_args(args: argparse.Namespace):
    file_values = read_config_file(args.config) if args.config else {}
    fields = {
        "channel": (str, "proakis-b"),
        "mod": (str, "bpsk"),
        "kind": (str, "ufg"),
        "ebno": (float, 10.0),
        "steps": (int, 2000),
        "batch": (int, 32),
        "lr": (float, 1e-3),
        "lr_final": (float, None),
        "init": (str, None),
        "multiloss": (bool, False),
        "lp": (int, None),
        "seed": (int, 0),
        "iters": (int, 10),
        "block_length": (int, 500),
        "out": (str, "params.npz"),
    }
    merged = _merge(file_values, args, fields)
    if merged["kind"] not in GRAPH_KINDS:
        raise ConfigurationError(f"unknown trainable detector {merged['kind']!r}")
    if merged["kind"] == "gfg" and not merged["lp"]:
        raise ConfigurationError("gfg training needs --lp (preprocessor length)")
    return merged


def cmd_train(args: argparse.Namespace) -> int:
    cfg = train_config_from_args(args)
    ch = make_channel(cfg["channel"])
    cons = make_constellation(cfg["mod"])
    tc = training.TrainConfig(n_iters=cfg["iters"], block_length=cfg["block_length"],
                              batch_size=cfg["batch"], steps=cfg["steps"],
                              learning_rate=cfg["lr"], final_learning_rate=cfg["lr_final"],
                              multiloss=cfg["multiloss"], seed=cfg["seed"], l_p=cfg["lp"])
    t0 = time.time()

    def progress(step, loss):
        if step % 25 == 0 or step == cfg["steps"] - 1:
            print(f"step {step:5d}  loss {loss:+.4f}  ({time.time() - t0:.0f}s)", flush=True)

    start = None
    if cfg["init"]:
        start, meta = training.load_params(cfg["init"])
        training.check_params_compatible(meta, ch, cons, cfg["block_length"])
        if meta.get("kind") != cfg["kind"]:
            raise ConfigurationError(
                f"--init file holds {meta.get('kind')!r} parameters, training {cfg['kind']!r}")
    params, losses = training.train(cfg["kind"], ch, cons, cfg["ebno"], tc,
                                    progress=progress, start=start)
    training.save_params(params, cfg["out"], cfg["kind"], ch, cons,
                         cfg["block_length"], train_ebn0_db=cfg["ebno"])
    base = os.path.splitext(cfg["out"])[0]
    with open(base + "_loss.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("step,loss\n")
        fh.writelines(f"{i},{loss:.10g}\n" for i, loss in enumerate(losses))
    if losses:
        plots.render_loss_figure(losses, base + "_loss.png",
                                 title=f"{cfg['kind']} @ {cfg['ebno']:g} dB")
    print(f"wrote {cfg['out']}" + (f", {base}_loss.csv, {base}_loss.png" if losses else ""))
    return EXIT_OK


# ---------------------------------------------------------------------------
# Selftest
# ---------------------------------------------------------------------------

def _check_bcjr_vs_brute() -> tuple:
    ch = make_channel("proakis-b")
    cons = make_constellation("bpsk")
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(20):
        idx = rng.integers(0, cons.size, size=8)
        frame = transmit(cons.points[idx], ch, ebn0_to_sigma2(6.0, cons), rng,
                         cons=cons, symbol_indices=idx)
        dev = np.abs(reference.bcjr_map(frame, ch, cons)
                     - reference.brute_force_app(frame, ch, cons)).max()
        worst = max(worst, dev)
    return worst < 1e-9, f"max dev {worst:.2e}"


def _check_tree_exactness() -> tuple:
    rng = np.random.default_rng(1)
    M = 3
    worst = 0.0
    for _ in range(10):
        tabs = [rng.standard_normal((M, M)) for _ in range(3)]
        factors = [spa.FactorNode([i, i + 1], lambda assign, t=t: t[assign])
                   for i, t in enumerate(tabs)]
        graph = spa.FactorGraph(4, M, factors)
        beliefs = spa.run_flooding(graph, 8)
        joint = tabs[0][:, :, None, None] + tabs[1][None, :, :, None] + tabs[2][None, None, :, :]
        joint = np.exp(joint - joint.max())
        joint /= joint.sum()
        for v in range(4):
            exact = joint.sum(axis=tuple(a for a in range(4) if a != v))
            worst = max(worst, np.abs(beliefs[v] - exact).max())
    return worst < 1e-8, f"max dev {worst:.2e}"


def _check_memoryless() -> tuple:
    ch = ChannelModel([1.0])
    cons = make_constellation("16qam")
    rng = np.random.default_rng(2)
    sigma2 = 0.5
    idx, ys = training.simulate_batch(ch, cons, 6, sigma2, 4, rng)
    exact = np.exp(-np.abs(ys[:, :, None] - cons.points[None, None, :]) ** 2 / sigma2)
    exact /= exact.sum(axis=2, keepdims=True)
    worst = 0.0
    for kind, params in (("ffg", None), ("ufg", None),
                         ("gfg", detectors.unit_gfg_params(6, 0, 0, 1, p=np.array([1.0])))):
        probs = detectors.detect_batch(ys, sigma2, ch, cons, kind, params=params, n_iters=1)
        worst = max(worst, np.abs(probs - exact).max())
    worst = max(worst, np.abs(reference.bcjr_map_batch(ys, sigma2, ch, cons) - exact).max())
    return worst < 1e-10, f"max dev {worst:.2e}"


def _check_ufg_gfg_identity() -> tuple:
    ch = make_channel("proakis-b")
    cons = make_constellation("bpsk")
    rng = np.random.default_rng(3)
    K, L = 20, ch.memory
    idx, ys = training.simulate_batch(ch, cons, K, ebn0_to_sigma2(8.0, cons), 5, rng)
    ufg = detectors.detect_batch(ys, 0.1, ch, cons, "ufg", n_iters=5)
    gfg = detectors.detect_batch(ys, 0.1, ch, cons, "gfg",
                                 params=detectors.unit_gfg_params(K, L, L, 5), n_iters=5)
    ok = np.array_equal(ufg, gfg)
    return ok, "bitwise equal" if ok else f"max dev {np.abs(ufg - gfg).max():.2e}"


def _check_gradients() -> tuple:
    ch = make_channel("proakis-b")
    cons = make_constellation("bpsk")
    rng = np.random.default_rng(4)
    batch = training.generate_dataset(ch, cons, 8, 8.0, 2, rng)
    tc = training.TrainConfig(n_iters=3, block_length=8, l_p=3, steps=0)
    params = training.init_params("gfg", ch, 8, tc, np.random.default_rng(5))
    _, grads = training.loss_and_gradients(params, batch, "gfg", ch, cons)
    eps = 1e-4
    worst = 0.0
    for name, index in (("p", (0,)), ("lam", (2, 6, 1)), ("w_f2v", (1, 5, 2)), ("kappa", (1, 5, 0))):
        arr = np.array(getattr(params, name), dtype=float)
        hi, lo = arr.copy(), arr.copy()
        hi[index] += eps
        lo[index] -= eps
        lp, _ = training.loss_and_gradients(dataclasses.replace(params, **{name: hi}),
                                            batch, "gfg", ch, cons)
        lm, _ = training.loss_and_gradients(dataclasses.replace(params, **{name: lo}),
                                            batch, "gfg", ch, cons)
        fd = (lp - lm) / (2 * eps)
        rel = abs(grads[name][index] - fd) / max(abs(fd), 1e-6)
        worst = max(worst, rel)
    return worst < 1e-3, f"max rel err {worst:.2e}"


def run_selftest(log=print) -> bool:
    checks = [
        ("bcjr-vs-brute-force", _check_bcjr_vs_brute),
        ("spa-tree-exactness", _check_tree_exactness),
        ("memoryless-reduction", _check_memoryless),
        ("ufg-gfg-identity", _check_ufg_gfg_identity),
        ("gradient-vs-finite-diff", _check_gradients),
    ]
    all_ok = True
    for name, fn in checks:
        t0 = time.time()
        ok, detail = fn()
        all_ok &= ok
        log(f"{'PASS' if ok else 'FAIL'}  {name:28s} {detail}  ({time.time() - t0:.1f}s)")
    return all_ok


def cmd_selftest(args: argparse.Namespace) -> int:
    return EXIT_OK if run_selftest() else EXIT_CHECK_FAILURE


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fgdetect",
                                     description="Factor-graph symbol detection for ISI channels")
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="Monte-Carlo BER/BMI sweep")
    sweep.add_argument("--config", help="flat key=value config file")
    sweep.add_argument("--channel", help="proakis-a, proakis-b, or comma-separated taps")
    sweep.add_argument("--mod", help="bpsk or 16qam")
    sweep.add_argument("--detectors", help="comma list from: ffg,ufg,gfg,bcjr,mmse")
    sweep.add_argument("--ebno-min", dest="ebno_min", type=float)
    sweep.add_argument("--ebno-max", dest="ebno_max", type=float)
    sweep.add_argument("--ebno-step", dest="ebno_step", type=float)
    sweep.add_argument("--frames", type=int, help="frame cap per grid point")
    sweep.add_argument("--seed", type=int)
    sweep.add_argument("--iters", type=int, help="message-passing iterations N")
    sweep.add_argument("--params", action="append", help="parameter file (repeatable)")
    sweep.add_argument("--out", help="output CSV path")
    sweep.add_argument("--min-errors", dest="min_errors", type=int)
    sweep.add_argument("--block-length", dest="block_length", type=int)
    sweep.add_argument("--mmse-order", dest="mmse_order", type=int)
    sweep.set_defaults(func=cmd_sweep)

    train = sub.add_parser("train", help="optimize detector parameters")
    train.add_argument("--config", help="flat key=value config file")
    train.add_argument("--channel")
    train.add_argument("--mod")
    train.add_argument("--kind", help="ffg, ufg, or gfg")
    train.add_argument("--ebno", type=float, help="training Eb/N0 in dB")
    train.add_argument("--steps", type=int)
    train.add_argument("--batch", type=int)
    train.add_argument("--lr", type=float)
    train.add_argument("--lr-final", dest="lr_final", type=float,
                       help="cosine-decay the learning rate to this value")
    train.add_argument("--init", help="warm-start from an existing parameter file")
    train.add_argument("--multiloss", action="store_true", default=None,
                       help="average the BMI loss over all unrolled iterations")
    train.add_argument("--lp", type=int, help="GFG preprocessor length")
    train.add_argument("--seed", type=int)
    train.add_argument("--iters", type=int)
    train.add_argument("--block-length", dest="block_length", type=int)
    train.add_argument("--out", help="output parameter file (.npz)")
    train.set_defaults(func=cmd_train)

    selftest = sub.add_parser("selftest", help="oracle and gradient checks")
    selftest.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FgdetectError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
