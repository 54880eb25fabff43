import numpy as np
import pytest

from fgdetect import detectors, spa
from fgdetect.channel import ChannelModel, make_channel, transmit
from fgdetect.constellations import ebn0_to_sigma2, make_constellation
from fgdetect.errors import ConfigurationError
from fgdetect.reference import bcjr_map, brute_force_app
from fgdetect.training import simulate_batch


def make_frame(ch, cons, K, ebn0_db, seed):
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, cons.size, size=K)
    sigma2 = ebn0_to_sigma2(ebn0_db, cons)
    return transmit(cons.points[idx], ch, sigma2, rng, cons=cons, symbol_indices=idx)


def test_ffg_torch_matches_generic_engine():
    ch = make_channel("proakis-b")
    cons = make_constellation("bpsk")
    for seed in range(3):
        frame = make_frame(ch, cons, 5, 7.0, seed)
        fast = detectors.detect(frame, ch, cons, "ffg", n_iters=4)
        graph = detectors.build_ffg(frame, ch, cons)
        slow = spa.run_flooding(graph, 4)[ch.memory:ch.memory + 5]
        assert np.abs(fast - slow).max() < 1e-10


def test_ufg_torch_matches_generic_engine():
    ch = make_channel("proakis-b")
    cons = make_constellation("bpsk")
    for seed in range(3):
        frame = make_frame(ch, cons, 5, 7.0, seed)
        fast = detectors.detect(frame, ch, cons, "ufg", n_iters=4)
        graph = detectors.build_gfg(frame, ch, cons,
                                    detectors.observation_model_for(ch, frame.y, None, "ufg"))
        slow = spa.run_flooding(graph, 4)[ch.memory:ch.memory + 5]
        assert np.abs(fast - slow).max() < 1e-10


def test_ffg_close_to_brute_force_on_cyclic_graph():
    # loopy SPA is approximate here: close to exact APPs, but not equal
    ch = make_channel("proakis-b")
    cons = make_constellation("bpsk")
    devs = []
    for seed in range(5):
        frame = make_frame(ch, cons, 5, 8.0, seed + 10)
        app = brute_force_app(frame, ch, cons)
        ffg = detectors.detect(frame, ch, cons, "ffg", n_iters=10)
        devs.append(np.abs(app - ffg).max())
    assert max(devs) < 0.2
    assert max(devs) > 1e-12


def test_memoryless_reduction_all_detectors():
    ch = ChannelModel([1.0])
    cons = make_constellation("bpsk")
    rng = np.random.default_rng(0)
    sigma2 = 0.6
    idx, ys = simulate_batch(ch, cons, 5, sigma2, 4, rng)
    exact = np.exp(-np.abs(ys[:, :, None] - cons.points[None, None, :]) ** 2 / sigma2)
    exact /= exact.sum(axis=2, keepdims=True)
    for kind, params in (("ffg", None), ("ufg", None),
                         ("gfg", detectors.unit_gfg_params(5, 0, 0, 2, p=np.array([1.0])))):
        probs = detectors.detect_batch(ys, sigma2, ch, cons, kind, params=params, n_iters=2)
        assert np.abs(probs - exact).max() < 1e-10


def test_gfg_matched_filter_equals_ufg_bitwise():
    ch = make_channel("proakis-b")
    cons = make_constellation("bpsk")
    rng = np.random.default_rng(1)
    K, L = 30, ch.memory
    sigma2 = ebn0_to_sigma2(8.0, cons)
    idx, ys = simulate_batch(ch, cons, K, sigma2, 10, rng)
    ufg = detectors.detect_batch(ys, sigma2, ch, cons, "ufg", n_iters=5)
    gfg = detectors.detect_batch(ys, sigma2, ch, cons, "gfg",
                                 params=detectors.unit_gfg_params(K, L, L, 5), n_iters=5)
    assert np.array_equal(ufg, gfg)


def test_detect_matches_detect_batch():
    ch = make_channel("proakis-b")
    cons = make_constellation("16qam")
    frame = make_frame(ch, cons, 6, 12.0, 2)
    single = detectors.detect(frame, ch, cons, "ufg", n_iters=3)
    batch = detectors.detect_batch(frame.y[None, :], frame.sigma2, ch, cons, "ufg", n_iters=3)
    assert np.array_equal(single, batch[0])


def test_high_snr_detection_recovers_symbols():
    ch = make_channel("proakis-b")
    cons = make_constellation("bpsk")
    for kind in ("ffg", "ufg"):
        frame = make_frame(ch, cons, 40, 25.0, 3)
        probs = detectors.detect(frame, ch, cons, kind, n_iters=10)
        assert np.array_equal(np.argmax(probs, axis=1), frame.symbol_indices)


def test_nbp_weights_change_output():
    ch = make_channel("proakis-b")
    cons = make_constellation("bpsk")
    frame = make_frame(ch, cons, 10, 6.0, 4)
    K, L = 10, ch.memory
    unit = detectors.detect(frame, ch, cons, "ufg", n_iters=4)
    params = detectors.unit_gfg_params(K, L, L, 4)
    w = params.w_f2v.copy()
    w[2, L + 3, 0] = 1.7
    tweaked = detectors.detect(frame, ch, cons, "ufg",
                               params=detectors.GfgParams(4, L, None, params.kappa,
                                                          params.lam, params.w_v2f, w),
                               n_iters=4)
    assert np.abs(unit - tweaked).max() > 1e-9


def test_unit_kappa_lambda_recover_ufg():
    # scaling kappa/lambda away from 1 must change beliefs; 1 recovers UFG
    ch = make_channel("proakis-b")
    cons = make_constellation("bpsk")
    frame = make_frame(ch, cons, 10, 6.0, 5)
    K, L = 10, ch.memory
    params = detectors.unit_gfg_params(K, L, L, 4)
    assert np.array_equal(detectors.detect(frame, ch, cons, "gfg", params=params, n_iters=4),
                          detectors.detect(frame, ch, cons, "ufg", n_iters=4))
    kappa = params.kappa.copy()
    kappa[:, :, 0] = 0.5
    scaled = detectors.GfgParams(4, L, None, kappa, params.lam, params.w_v2f, params.w_f2v)
    assert np.abs(detectors.detect(frame, ch, cons, "gfg", params=scaled, n_iters=4)
                  - detectors.detect(frame, ch, cons, "ufg", n_iters=4)).max() > 1e-9


def test_validation_errors():
    ch = make_channel("proakis-b")
    cons = make_constellation("bpsk")
    frame = make_frame(ch, cons, 6, 6.0, 6)
    with pytest.raises(ConfigurationError):
        detectors.detect(frame, ch, cons, "turbo")
    with pytest.raises(ConfigurationError):
        detectors.detect(frame, ch, cons, "gfg")  # needs parameters
    bad = detectors.unit_gfg_params(6, 2, 5, 3, p=np.ones(3))  # band 5 != 2+3-1
    with pytest.raises(ConfigurationError):
        detectors.detect(frame, ch, cons, "gfg", params=bad, n_iters=3)
    wrong_k = detectors.unit_ffg_params(7, 2, 3)
    with pytest.raises(ConfigurationError):
        detectors.detect(frame, ch, cons, "ffg", params=wrong_k, n_iters=3)


def test_count_fn_operations():
    # FFG: N (K+L) (L+1) M^(L+1) table entries
    assert detectors.count_fn_operations("ffg", 100, 2, 2, 10) == 10 * 102 * 3 * 8
    # UFG/GFG: two directed messages per pairwise factor, M^2 work each
    K, band, M, N = 100, 2, 2, 10
    S = K + 2 * band
    pairs = band * S - band * (band + 1) // 2
    assert detectors.count_fn_operations("ufg", K, band, M, N) == N * 2 * pairs * M * M
    assert detectors.count_fn_operations("gfg", K, band, M, N) == \
        detectors.count_fn_operations("ufg", K, band, M, N)
    with pytest.raises(ConfigurationError):
        detectors.count_fn_operations("bogus", 1, 1, 2, 1)


def test_ffg_complexity_exponential_in_memory():
    c1 = detectors.count_fn_operations("ffg", 500, 1, 4, 10)
    c2 = detectors.count_fn_operations("ffg", 500, 2, 4, 10)
    assert c2 / c1 > 3  # roughly x M per extra tap
    u1 = detectors.count_fn_operations("ufg", 500, 1, 4, 10)
    u2 = detectors.count_fn_operations("ufg", 500, 2, 4, 10)
    assert 1.5 < u2 / u1 < 2.5  # linear in the band
