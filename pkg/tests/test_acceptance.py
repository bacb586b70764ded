"""Acceptance criteria 1-11, one PASS/FAIL line each.

Run ``pytest tests/test_acceptance.py -v`` (lines appear in the
"acceptance criteria" summary section) or ``python tests/test_acceptance.py``.
"""

import json
import time
from dataclasses import replace

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, run_walk
from twr_chtm.chtm import basis, chebyshev_coefficients, coefficient_diagnostics, project_slice, truncation_residual
from twr_chtm.cli import main
from twr_chtm.dsp import DspConfig, mti_two_pulse, process_cube
from twr_chtm.echo import (RadarConfig, ScattererSet, WallConfig, electrical_length, simulate_cube,
                           synthesize_cube, wall_terms)
from twr_chtm.envelope import envelope_frequencies, extract_envelopes
from twr_chtm.evaluation import (Pipeline, cache_samples, generate_dataset, make_presets, order_sweep,
                                 snr_sweep)
from twr_chtm.kinematics import Gait, GaitConfig, SkeletonPose, expected_peak_doppler
from twr_chtm.matrixio import MatrixKind, decode_matrix, encode_matrix

DATASET_SEED = 0
N_PAIRS = 20


def verdict(n, ok, detail):
    line = f"CRITERION {n} {'PASS' if ok else 'FAIL'}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_01_mti_null():
    t0 = time.perf_counter()
    still = GaitConfig(torso_speed=0.0, thigh_amplitude=0.0, calf_amplitude=0.0, arm_amplitude=0.0)
    cube = simulate_cube(still, RadarConfig(), WallConfig(), ScattererSet())
    ratio = np.abs(mti_two_pulse(cube).samples).max() / np.abs(cube.samples).max()
    dt = time.perf_counter() - t0
    verdict(1, ratio <= 1e-12 and dt < 1.0, f"max|MTI|/max|in| = {ratio:.2e} (<= 1e-12), {dt:.2f} s (< 1 s)")


def test_02_doppler_fidelity():
    t0 = time.perf_counter()
    radar = RadarConfig()
    wavelength = 0.12
    radar = replace(radar, center_frequency=299792458.0 / wavelength)
    errors = []
    for v in (0.5, 1.0, 2.0):
        t = radar.slow_time()
        poses = [SkeletonPose(ti, {"Torso": np.array([-(4.0 - v * ti), 0.0, 1.5])}) for ti in t]
        cube = synthesize_cube(poses, radar, WallConfig(), ScattererSet())
        _, _, dtm = process_cube(cube, lambda s: np.zeros_like(s), DspConfig(compensate=False))
        peaks = dtm.doppler_axis[np.argmax(dtm.magnitudes, axis=0)]
        # the zero-padded edge frames are excluded; interior frames see a full window
        interior = peaks[16:-16]
        errors.append(np.abs(interior - 2 * v / wavelength).max() / dtm.bin_width)
    dt = time.perf_counter() - t0
    ok = max(errors) <= 1.0 and dt < 10
    verdict(2, ok, "peak error in bins for v=0.5/1/2 m/s: " + ", ".join(f"{e:.2f}" for e in errors)
            + f" (<= 1), {dt:.1f} s (< 10 s)")


def test_03_range_tracking():
    t0 = time.perf_counter()
    gait = GaitConfig(initial_position=(-5.0, 0.0, 0.0))
    radar = RadarConfig(pulses=int(round(4.0 / gait.torso_speed / 5e-3)))
    wall = WallConfig()
    _, profiles, rtm, _ = run_walk(gait, radar, wall)
    from twr_chtm.kinematics import torso_position

    torso = torso_position(gait, rtm.slow_time_axis)
    tx, rx = radar.tx_positions[0], radar.rx_positions[0]
    truth = electrical_length(torso, tx, rx, wall) / 2
    bin_size = rtm.range_axis[1]
    est = rtm.range_axis[np.argmax(rtm.magnitudes, axis=0)]
    frac = np.mean(np.abs(est - truth) <= 2 * bin_size)
    dt = time.perf_counter() - t0
    verdict(3, frac >= 0.95 and dt < 30,
            f"{100 * frac:.1f}% of {len(est)} columns within 2 bins ({2 * bin_size:.3f} m) of the torso's apparent "
            f"range (>= 95%), {dt:.1f} s (< 30 s)")


def test_04_wall_terms():
    t0 = time.perf_counter()
    w = wall_terms(WallConfig(), 2.5e9)
    dt = time.perf_counter() - t0
    ok = abs(w.path_excess - 0.3478) <= 1e-3 and abs(w.power_transmission - 0.678) <= 0.002 and dt < 1
    verdict(4, ok, f"path excess {w.path_excess:.5f} m (0.3478 +- 1e-3), T_power {w.power_transmission:.4f} "
                   f"(0.678 +- 0.002)")


def test_05_chebyshev_projector():
    rng = np.random.default_rng(5)
    mean_err = max(abs(project_slice(s, basis(len(s), 8))[0] - s.mean())
                   for s in (rng.normal(size=n) for n in range(2, 80)))
    const = project_slice([1.0, 1.0, 1.0], basis(3, 2))
    const_err = np.abs(const - [1, 0, 1 / 3]).max()
    k = np.arange(128)
    worst_rel, monotone = 0.0, True
    for center, width in ((64, 10), (40, 6), (90, 15)):
        s = np.exp(-0.5 * ((k - center) / width) ** 2)
        b = basis(128, 32)
        res = [truncation_residual(s, b, n) for n in range(33)]
        monotone &= all(r2 <= r1 + 1e-12 for r1, r2 in zip(res, res[1:]))
        worst_rel = max(worst_rel, res[32] / res[0])
    ok = mean_err <= 1e-12 and const_err <= 1e-15 and monotone and worst_rel < 1e-3
    verdict(5, ok, f"|c0 - mean| <= {mean_err:.1e}, (1,1,1) -> {np.round(const, 12).tolist()}, "
                   f"residual nonincreasing={monotone}, residual(32)/residual(0) = {worst_rel:.1e} (< 1e-3)")


@pytest.fixture(scope="module")
def gait_pairs():
    """Normal/armed pairs sharing one randomized scenario per seed."""
    pipe = Pipeline()
    pairs = []
    for seed in range(N_PAIRS):
        spec = generate_dataset(make_presets(), 1, seed=seed, identities=[0], threats=[False])[0]
        out = []
        for pattern in (Gait.NORMAL, Gait.ARMED):
            maps = pipe.maps(replace(spec, gait=spec.gait.with_pattern(pattern)))
            out.append(chebyshev_coefficients(maps.dtm, maps.envelopes, "micro", 32))
        pairs.append(out)
    return pairs


def test_06_c2_discrimination(gait_pairs):
    t0 = time.perf_counter()
    wins = [np.abs(n[2]).mean() > np.abs(a[2]).mean() for n, a in gait_pairs]
    ratio = np.median([np.abs(n[2]).mean() / np.abs(a[2]).mean() for n, a in gait_pairs])
    dt = time.perf_counter() - t0
    verdict(6, sum(wins) >= 0.9 * N_PAIRS and dt < 300,
            f"normal > armed in {sum(wins)}/{N_PAIRS} seeded pairs (>= 18), median |c2| ratio {ratio:.2f}")


@pytest.mark.xfail(strict=True, reason="high-order energy share is larger for armed walking in this echo model")
def test_high_order_fraction_normal_vs_armed(gait_pairs):
    n = np.mean([coefficient_diagnostics(p[0]).high_order_fraction for p in gait_pairs])
    a = np.mean([coefficient_diagnostics(p[1]).high_order_fraction for p in gait_pairs])
    print(f"mean high-order fraction: normal {n:.4f}, armed {a:.4f}")
    assert n > a


def test_07_compression_contract(normal_walk):
    dtm = normal_walk["dtm"]
    from twr_chtm.chtm import build_chtm

    chtm = build_chtm(dtm, normal_walk["env"], "micro", 32)
    ratio = chtm.values.size / dtm.magnitudes.size
    verdict(7, chtm.values.shape[0] == 33 and dtm.shape[0] == 128 and ratio <= 0.26,
            f"{chtm.values.shape[0]} vs {dtm.shape[0]} rows, element ratio {ratio:.4f} (<= 0.26)")


@pytest.fixture(scope="module")
def dataset():
    return generate_dataset(make_presets(), 20, seed=DATASET_SEED)


@pytest.mark.slow
def test_08_order_sweep(dataset):
    t0 = time.perf_counter()
    cached = cache_samples(dataset, Pipeline())
    table = order_sweep(cached, [4, 8, 16, 32, 48, 64])
    acc = {r.key: r.accuracy for r in table.rows}
    dt = time.perf_counter() - t0
    gain, sat = acc[32] - acc[4], abs(acc[64] - acc[48])
    ok = gain >= 0.15 and sat <= 0.05 and dt < 900
    verdict(8, ok, "accuracy by order " + ", ".join(f"{k}:{v:.3f}" for k, v in acc.items())
            + f"; acc32-acc4 = {100 * gain:+.1f} pts (>= +15), |acc64-acc48| = {100 * sat:.1f} pts (<= 5), {dt:.0f} s")


@pytest.mark.slow
def test_09_snr_sweep(dataset):
    t0 = time.perf_counter()
    levels = [0.0, -8.0, -16.0]
    table = snr_sweep(dataset, Pipeline(), levels)
    dt = time.perf_counter() - t0
    acc = {rep: [table.accuracy(l, rep) for l in levels] for rep in ("DTM", "ChTM")}
    monotone = all(b <= a + 0.03 for seq in acc.values() for a, b in zip(seq, seq[1:]))
    ordered = acc["ChTM"][-1] >= acc["DTM"][-1]
    ok = monotone and ordered and dt < 1200
    verdict(9, ok, "0/-8/-16 dB accuracy DTM " + "/".join(f"{a:.3f}" for a in acc["DTM"])
            + ", ChTM " + "/".join(f"{a:.3f}" for a in acc["ChTM"])
            + f"; nonincreasing within 3 pts={monotone}, ChTM >= DTM at -16 dB={ordered}, {dt:.0f} s")


def test_10_envelope_physicality():
    t0 = time.perf_counter()
    gait = GaitConfig()
    radar = RadarConfig()
    *_, dtm = run_walk(gait, radar)
    env = extract_envelopes(dtm)
    hz = envelope_frequencies(env, dtm.doppler_axis)
    got = max(hz[0].max(), -hz[3].min())
    oracle = expected_peak_doppler(gait, dtm.slow_time_axis, radar.array_center, radar.wavelength).max()
    dt = time.perf_counter() - t0
    rel = abs(got - oracle) / oracle
    verdict(10, rel <= 0.25 and dt < 30,
            f"max micro-envelope {got:.1f} Hz vs kinematic peak {oracle:.1f} Hz, deviation {100 * rel:.1f}% (<= 25%)")


def test_11_determinism_and_round_trip(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text("seed = 17\n[gait]\n[radar]\n[wall]\n[dataset]\nper_class = 2\n")
    trees = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
        assert main(["eval", "--config", str(cfg), str(out), "--out", str(out / "reports")]) == 0
        trees.append({p.relative_to(out).as_posix(): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()})
    same = trees[0] == trees[1]
    manifest = json.loads(trees[0]["manifest.json"])
    rng = np.random.default_rng(0)
    mats = [rng.normal(size=(33, 100)), np.array([[np.inf, -0.0, 5e-324]]), np.zeros((0, 4))]
    exact = all(decode_matrix(encode_matrix(MatrixKind.CHTM, m))[1].tobytes() == m.tobytes() for m in mats)
    verdict(11, same and exact, f"{len(trees[0])} files byte-identical across reruns={same} "
                                f"({len(manifest['samples'])} samples + reports), MatrixFile bit-exact={exact}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
