"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line (see ``acceptance_report``) that is
repeated in the terminal summary, then asserts the criterion at its
stated tolerance. Criteria that the method does not meet are marked as
strict expected failures: they still run in full and report FAIL, and
they turn into errors if they ever start passing.
"""

import functools
import subprocess
import sys
import time

import numpy as np
import pytest

from adareg.admm import SolverConfig
from adareg.denoise import denoise, denoise_energy
from adareg.flow import (FlowState, PyramidConfig, angular_error, endpoint_error, flow_level,
                         flow_pyramid, linearize)
from adareg.grid import divergence, gradient, shrink_vector2, soft_shrink
from adareg.imgio import FlowFormatError, ImageFormatError, read_flo, read_image, write_flo, \
    write_image
from adareg.metrics import psnr
from adareg.segment import estimate_means, f_measure, segment, segment_energy
from adareg.synth import (BiasedNoiseSpec, NoiseProfile, add_biased_noise, make_piecewise_image,
                          make_texture, make_translation_pair, make_two_level_phantom,
                          make_two_motion_pair)
from adareg.weights import AdaptiveWeightConfig, WeightMode, compute_lambda, lambda_lower_bound

from acceptance_report import report
from oracles import grid_prox_1d, grid_prox_2d, tv1d_exact

pytestmark = pytest.mark.acceptance

SEG_BETAS = (0.1, 0.3, 1.0, 3.0, 10.0)
SEG_STATIC = (0.6, 0.7, 0.8, 0.9, 0.95)
DEN_BETAS = (0.05, 0.1, 0.2, 0.3, 0.5, 1.0, 2.0)
DEN_STATIC = (0.5, 0.6, 0.65, 0.7, 0.75, 0.8, 0.9)
FLOW_STATIC = (0.01, 0.05, 0.2)


# -- shared scenes and runs -------------------------------------------------

@functools.lru_cache(maxsize=None)
def seg_scene(biased):
    ph = make_two_level_phantom(64, 64, 0.25, 0.75)
    if biased:
        spec = BiasedNoiseSpec(0.4, NoiseProfile.HALF_PLANE_RAMP, 7)
    else:
        spec = BiasedNoiseSpec(0.1, NoiseProfile.UNIFORM, 7)
    return add_biased_noise(ph.clean, spec), ph.truth_mask


@functools.lru_cache(maxsize=None)
def seg_run(biased, kind, value):
    f, truth = seg_scene(biased)
    if kind == "static":
        res = segment(f, static_lambda=value)
    elif biased:
        res = segment(f, AdaptiveWeightConfig.smoothed(value, 0.1, 1.0))
    else:
        res = segment(f, AdaptiveWeightConfig.plain(value))
    return f_measure(res.mask, truth), res.trace


@functools.lru_cache(maxsize=None)
def den_scene():
    clean = make_piecewise_image(128, 128)
    return clean, add_biased_noise(clean, BiasedNoiseSpec(0.4, NoiseProfile.HALF_PLANE_RAMP, 1))


@functools.lru_cache(maxsize=None)
def den_run(kind, value):
    clean, noisy = den_scene()
    if kind == "static":
        u, trace = denoise(noisy, static_lambda=value)
    else:
        u, trace = denoise(noisy, AdaptiveWeightConfig.smoothed(value, 0.1, 1.0))
    return psnr(u, clean), trace


def interior(shape, frac=0.8):
    h, w = shape
    mh, mw = int(round(h * (1 - frac) / 2)), int(round(w * (1 - frac) / 2))
    m = np.zeros(shape, dtype=bool)
    m[mh:h - mh, mw:w - mw] = True
    return m


# -- criteria ---------------------------------------------------------------

def test_c01_operator_adjointness():
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        h, w = rng.integers(16, 65, size=2)
        u = rng.standard_normal((h, w))
        p = rng.standard_normal((2, h, w))
        gap = abs(np.sum(gradient(u) * p) + np.sum(u * divergence(p)))
        worst = max(worst, gap / (np.linalg.norm(u) * np.linalg.norm(p) + 1))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-10 and elapsed < 1.0
    report(1, "operator adjointness", ok, f"max rel gap {worst:.2e}, {elapsed:.2f}s")
    assert ok


def test_c02_prox_oracles():
    rng = np.random.default_rng(2)
    start = time.perf_counter()
    e1 = e2 = 0.0
    for _ in range(1000):
        x, mu = rng.uniform(-3, 3), rng.uniform(0, 2)
        e1 = max(e1, abs(soft_shrink(x, mu) - grid_prox_1d(x, mu)))
        v, mu = rng.uniform(-3, 3, size=2), rng.uniform(0, 2)
        e2 = max(e2, np.max(np.abs(shrink_vector2(v, mu) - grid_prox_2d(v, mu))))
    elapsed = time.perf_counter() - start
    ok = e1 <= 1e-4 and e2 <= 1e-4 and elapsed < 5.0
    report(2, "prox oracles", ok, f"scalar {e1:.1e}, vector {e2:.1e}, {elapsed:.2f}s")
    assert ok


def test_c03_zero_residual_fixed_point():
    rng = np.random.default_rng(3)
    inputs = [np.full((32, 32), c) for c in (0.0, 0.3, 1.0)]
    inputs += [make_piecewise_image(48, 40), make_two_level_phantom(32, 32).clean,
               rng.random((24, 24))]
    worst, iters = 0.0, 0
    for f in inputs:
        for beta in (0.01, 1.0):
            u, trace = denoise(f, AdaptiveWeightConfig.plain(beta))
            worst = max(worst, float(np.max(np.abs(u - f))))
            iters = max(iters, trace.iterations)
    ok = worst <= 1e-8 and iters <= 5
    report(3, "fixed point at zero residual", ok, f"max dev {worst:.1e}, {iters} iterations")
    assert ok


def test_c04_fixed_lambda_tv_oracle():
    rng = np.random.default_rng(4)
    start = time.perf_counter()
    worst = 0.0
    for n in (32, 64):
        clean = np.repeat(rng.uniform(0.2, 0.8, size=4), n // 4)
        f = np.clip(clean + 0.1 * rng.standard_normal(n), 0, 1)[None, :]
        for lam0 in (0.3, 0.5, 0.8):
            # a single row has ||grad||^2 <= 4, so tau = 4 is the matching step
            u, trace = denoise(f, static_lambda=lam0,
                               scfg=SolverConfig(tau=4.0, max_iters=300, tol_rel_change=0.0))
            ref = tv1d_exact(f[0], (1 - lam0) / lam0)
            worst = max(worst, float(np.max(np.abs(u[0] - ref))))
            assert trace.iterations <= 300
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-3 and elapsed < 2.0
    report(4, "fixed-lambda TV oracle", ok, f"max gap {worst:.1e}, {elapsed:.2f}s")
    assert ok


@pytest.mark.xfail(strict=True, reason="linearized ADMM does not decrease the primal "
                   "energy monotonically; the late iterates oscillate")
def test_c05_energy_descent():
    rng = np.random.default_rng(5)
    worst = 0.0
    where = ""
    for k in range(10):
        blocks = rng.uniform(0, 1, size=(4, 4))
        clean = np.kron(blocks, np.ones((8, 8)))
        f = np.clip(clean + 0.1 * rng.standard_normal((32, 32)), 0, 1)
        lam0 = rng.uniform(0.1, 0.9)

        e_den = []
        denoise(f, static_lambda=lam0,
                callback=lambda it, u, lam: e_den.append(denoise_energy(u, f, lam)))
        c1, c2 = float(np.max(blocks)), float(np.min(blocks))
        e_seg = []
        segment(f, static_lambda=lam0, means=(c1, c2),
                callback=lambda it, u, lam: e_seg.append(segment_energy(u, f, lam, c1, c2)))
        for label, e in (("denoise", e_den), ("segment", e_seg)):
            rise = np.diff(np.asarray(e)[5:])
            if rise.size and rise.max() > worst:
                worst = float(rise.max())
                where = f"{label} instance {k}"
    ok = worst <= 1e-9
    report(5, "energy descent", ok, f"largest rise {worst:.2e} ({where})" if where else "")
    assert ok


def test_c06_lambda_invariants():
    rng = np.random.default_rng(6)
    f = np.clip(0.5 + 0.2 * rng.standard_normal((24, 24)), 0, 1)
    f[6:18, 6:18] += 0.3
    violations = []

    def watch(wcfg, rho_of):
        upper = wcfg.upper

        def cb(k, u, lam):
            if not (lam.min() > 0 and lam.max() <= upper):
                violations.append(("range", wcfg.mode, k))
            if wcfg.mode is WeightMode.SMOOTHED:
                if lambda_lower_bound(rho_of(u), wcfg) > lam.min():
                    violations.append(("bound", k))
        return cb

    for wcfg in (AdaptiveWeightConfig.plain(0.05), AdaptiveWeightConfig.smoothed(0.05, 0.1),
                 AdaptiveWeightConfig.smoothed(0.5, 0.3, 2.0)):
        denoise(f, wcfg, SolverConfig(max_iters=80), callback=watch(wcfg, lambda u: (u - f) ** 2 / 2))
        # the solver re-estimates the means from the previous iterate; track them here
        prev = {"u": (f - f.min()) / (f.max() - f.min())}

        def seg_rho(u):
            c1, c2 = prev["means"]
            return (f - c1) ** 2 * u + (f - c2) ** 2 * (1 - u)

        def seg_cb(k, u, lam, cb=watch(wcfg, seg_rho)):
            prev["means"] = estimate_means(f, prev["u"])
            prev["u"] = u
            cb(k, u, lam)

        segment(f, wcfg, SolverConfig(max_iters=80), callback=seg_cb)

    sc = make_translation_pair(make_texture(32, 32, seed=6), (1.0, 0.5))
    for wcfg in (AdaptiveWeightConfig.plain(1.0), AdaptiveWeightConfig.smoothed(0.2, 0.1)):
        data = linearize(sc.clean, sc.noisy, np.zeros((2, 32, 32)))
        state = FlowState.start(np.zeros((2, 32, 32)), data, compute_lambda(np.abs(data.It), wcfg))
        for k in range(60):
            state = flow_level(data, wcfg, SolverConfig(), state, 1)
            lam = state.lam
            if not (lam.min() > 0 and lam.max() <= wcfg.upper):
                violations.append(("flow range", k))
            if wcfg.mode is WeightMode.SMOOTHED:
                rho = np.abs(data.residual(state.u, state.v))
                if lambda_lower_bound(rho, wcfg) > lam.min():
                    violations.append(("flow bound", k))
    ok = not violations
    report(6, "lambda range and lower bound", ok,
           f"{len(violations)} violations" + (f", first {violations[0]}" if violations else ""))
    assert ok


def test_c07_segmentation_phantom():
    start = time.perf_counter()
    uniform_best = max(seg_run(False, "adaptive", b)[0] for b in SEG_BETAS)
    adaptive_best = max(seg_run(True, "adaptive", b)[0] for b in SEG_BETAS)
    static_best = max(seg_run(True, "static", v)[0] for v in SEG_STATIC)
    elapsed = time.perf_counter() - start
    ok = uniform_best >= 0.99 and adaptive_best >= static_best - 0.005 and elapsed < 30
    report(7, "segmentation phantom", ok,
           f"uniform F {uniform_best:.4f}; biased adaptive {adaptive_best:.4f} "
           f"vs static {static_best:.4f}; {elapsed:.1f}s")
    assert ok


def test_c08_denoising_biased_noise():
    start = time.perf_counter()
    adaptive = {b: den_run("adaptive", b)[0] for b in DEN_BETAS}
    static = {v: den_run("static", v)[0] for v in DEN_STATIC}
    elapsed = time.perf_counter() - start
    a_best, s_best = max(adaptive.values()), max(static.values())
    ok = a_best >= s_best - 0.1 and elapsed < 120
    verdict = "adaptive wins" if a_best > s_best else "static wins"
    report(8, "denoising biased noise", ok,
           f"adaptive {a_best:.2f} dB vs static {s_best:.2f} dB, {verdict}; {elapsed:.1f}s")
    assert ok


@pytest.mark.xfail(strict=True, reason="for segmentation the misfit shrinks as u becomes "
                   "binary, so the mean adaptive weight rises instead of falling")
def test_c09_lambda_trajectory():
    lines, failures = [], []
    for b in DEN_BETAS:
        tr = den_run("adaptive", b)[1]
        m = tr.column("lambda_mean")
        lines.append(("denoise", b, m[0], m[-1]))
    for biased in (False, True):
        for b in SEG_BETAS:
            tr = seg_run(biased, "adaptive", b)[1]
            m = tr.column("lambda_mean")
            lines.append(("segment biased" if biased else "segment uniform", b, m[0], m[-1]))
    for task, b, first, last in lines:
        if not last < first:
            failures.append(f"{task} beta={b}: {first:.4f} -> {last:.4f}")
    den_ok = all(last < first for task, _, first, last in lines if task == "denoise")
    ok = not failures
    report(9, "mean lambda decreases", ok,
           f"denoise {'all decrease' if den_ok else 'some rise'}; "
           f"{len(failures)}/{len(lines)} instances rise" + (f", e.g. {failures[0]}"
                                                           if failures else ""))
    assert ok


def test_c10_flow_recovery():
    start = time.perf_counter()
    beta1 = AdaptiveWeightConfig.plain(1.0)
    sc = make_translation_pair(make_texture(64, 64, seed=1), (2.0, 1.0))
    mask = interior((64, 64))
    flow, _ = flow_pyramid(sc.clean, sc.noisy, beta1)
    ee = endpoint_error(flow, sc.truth_flow, mask)
    ae = angular_error(flow, sc.truth_flow, mask)

    base = make_texture(64, 64, seed=2)
    yy, xx = np.mgrid[0:64, 0:64]
    disk = (yy - 31.5) ** 2 + (xx - 31.5) ** 2 <= 14 ** 2
    two = make_two_motion_pair(base, disk, (1.5, -1.0), (-1.0, 0.5))
    flow_a, _ = flow_pyramid(two.clean, two.noisy, beta1)
    ee_a = endpoint_error(flow_a, two.truth_flow, mask)
    ee_s = {}
    for lam in FLOW_STATIC:
        flow_s, _ = flow_pyramid(two.clean, two.noisy, static_lambda=lam)
        ee_s[lam] = endpoint_error(flow_s, two.truth_flow, mask)
    best_static = min(ee_s.values())
    elapsed = time.perf_counter() - start
    ok = ee <= 0.2 and ae <= 5.0 and ee_a <= 1.1 * best_static and elapsed < 60
    report(10, "flow recovery", ok,
           f"translation EE {ee:.3f} AE {ae:.2f} deg; two-motion adaptive EE {ee_a:.3f} "
           f"vs best static {best_static:.3f}; {elapsed:.1f}s")
    assert ok


def test_c11_io(tmp_path):
    rng = np.random.default_rng(11)
    flo_ok = True
    for _ in range(50):
        h, w = rng.integers(1, 40, size=2)
        flow = (20 * rng.standard_normal((2, h, w))).astype(np.float32)
        write_flo(tmp_path / "f.flo", flow)
        flo_ok &= read_flo(tmp_path / "f.flo").tobytes() == flow.tobytes()
    u = rng.random((31, 17))
    write_image(tmp_path / "r.pgm", u)
    pgm_err = float(np.max(np.abs(read_image(tmp_path / "r.pgm") - u)))

    errors_ok = True
    for name, data, exc in (("a.flo", b"XXXX\x01\0\0\0\x01\0\0\0" + bytes(8), FlowFormatError),
                            ("b.flo", b"PIEH\x02\0\0\0\x02\0\0\0" + bytes(4), FlowFormatError),
                            ("c.pgm", b"P5\n4 4", ImageFormatError),
                            ("d.pgm", b"P5\n4 4\n255\n" + bytes(3), ImageFormatError)):
        (tmp_path / name).write_bytes(data)
        reader = read_flo if name.endswith(".flo") else read_image
        try:
            reader(tmp_path / name)
            errors_ok = False
        except exc:
            pass
    ok = flo_ok and pgm_err <= 1 / 255 and errors_ok
    report(11, "file I/O", ok, f"flo bitwise {flo_ok}, pgm max err {pgm_err:.4f}, "
                               f"error paths {errors_ok}")
    assert ok


def _cli(*args):
    return subprocess.run([sys.executable, "-m", "adareg.cli", *map(str, args)],
                          capture_output=True, text=True)


def test_c12_cli_determinism(tmp_path):
    outputs = {}
    for run in ("a", "b"):
        d = tmp_path / run
        assert _cli("synth", "--scene", "disk", "--seed", 3, "--width", 32, "--height", 32,
                    "--out-dir", d / "disk").returncode == 0
        assert _cli("synth", "--scene", "translation", "--seed", 3, "--width", 32,
                    "--height", 32, "--out-dir", d / "mot").returncode == 0
        assert _cli("denoise", "--input", d / "disk/noisy.pgm", "--output", d / "den.pgm",
                    "--trace", d / "den.csv", "--reference", d / "disk/clean.pgm"
                    ).returncode == 0
        assert _cli("segment", "--input", d / "disk/noisy.pgm", "--output", d / "seg.pgm",
                    "--trace", d / "seg.csv", "--truth", d / "disk/mask.pgm").returncode == 0
        assert _cli("flow", "--frame0", d / "mot/frame0.pgm", "--frame1", d / "mot/frame1.pgm",
                    "--output", d / "flow.flo", "--gt-flo", d / "mot/truth.flo", "--color",
                    d / "flow.png", "--metrics-csv", d / "flow.csv", "--trace",
                    d / "flowtrace.csv").returncode == 0
        assert _cli("sweep", "--task", "denoise", "--scene", "biased", "--width", 32,
                    "--height", 32, "--static", "0.5,0.8", "--adaptive", "0.1,1", "--jobs", 2,
                    "--out-dir", d / "sweep").returncode == 0
        outputs[run] = {p.relative_to(d): p.read_bytes() for p in sorted(d.rglob("*"))
                        if p.is_file()}
    same = outputs["a"] == outputs["b"]
    ok = same and len(outputs["a"]) >= 14
    report(12, "CLI determinism", ok, f"{len(outputs['a'])} files compared, identical {same}")
    assert ok
