import numpy as np
import pytest
from hypothesis import given, strategies as st

from ssrc.core import NoiseKind, standardize
from ssrc.errors import ContractError, DivergenceError
from ssrc.generators import (LorenzParams, NoiseFamily, NoiseSpec, gen_highfreq_sin, gen_lorenz, gen_mlogistic,
                             lorenz_trajectory, measured_snr_db, mix, sample_noise, snr_db)

N = 10 ** 6


def rk4_reference(state, sigma, rho, beta, dt, steps):
    """Plain-python classical RK4, independent of the package kernels."""
    def f(s):
        x, y, z = s
        return np.array([sigma * (y - x), x * (rho - z) - y, x * y - beta * z])
    s = np.array(state, dtype=float)
    out = [s]
    for _ in range(steps):
        k1 = f(s)
        k2 = f(s + dt / 2 * k1)
        k3 = f(s + dt / 2 * k2)
        k4 = f(s + dt * k3)
        s = s + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(s)
    return np.array(out)


def test_lorenz_fixed_point():
    assert np.all(gen_lorenz(LorenzParams(initial_state=(0.0, 0.0, 0.0)), 200) == 0.0)


def test_lorenz_matches_fine_step_oracle():
    # compared from the initial state: after a chaotic transient no two distinct schemes agree
    p = LorenzParams(transient_skip=0)
    got = gen_lorenz(p, 1000)[:500]
    ref = rk4_reference(p.initial_state, p.sigma, p.rho, p.beta, p.dt / 10, 4990)[::10, 0]
    assert np.max(np.abs(got - ref)) < 1e-4


def test_lorenz_kernel_matches_python_rk4():
    p = LorenzParams(substeps=1)
    np.testing.assert_allclose(lorenz_trajectory(p, 300), rk4_reference(p.initial_state, p.sigma, p.rho, p.beta,
                                                                         p.dt, 300), rtol=1e-9, atol=1e-9)
    p4 = LorenzParams()
    np.testing.assert_allclose(lorenz_trajectory(p4, 50), rk4_reference(p.initial_state, p.sigma, p.rho, p.beta,
                                                                         p.dt / 4, 200)[::4], rtol=1e-9, atol=1e-9)


def test_lorenz_dt_refinement_is_fourth_order():
    # one-step local error of RK4 scales like dt^5; global error over a fixed horizon like dt^4
    p = LorenzParams(substeps=1)
    T = 0.5
    ref = rk4_reference(p.initial_state, p.sigma, p.rho, p.beta, 1e-4, int(T / 1e-4))[-1]
    errs = [np.max(np.abs(lorenz_trajectory(p, int(round(T / dt)), dt)[-1] - ref)) for dt in (0.01, 0.005)]
    assert 12 < errs[0] / errs[1] < 20


def test_lorenz_deterministic_and_validated():
    assert np.array_equal(gen_lorenz(n=300), gen_lorenz(n=300))
    with pytest.raises(ContractError):
        LorenzParams(dt=0)
    with pytest.raises(ContractError):
        LorenzParams(observe="w")


def test_lorenz_divergence():
    with pytest.raises(DivergenceError):
        gen_lorenz(LorenzParams(dt=1.0, transient_skip=0), 500)


def test_sinusoid_values():
    q = gen_highfreq_sin(1.0, 8.0, 0.0, 4)
    assert abs(q[2] - 1.0) < 1e-15
    assert np.all(gen_highfreq_sin(0.0, 5.5, 0.3, 50) == 0)
    z, _ = standardize(gen_highfreq_sin(n=9000))
    assert abs(z.std(ddof=1) - 1) < 0.02


def test_sinusoid_aliasing():
    with pytest.raises(ContractError):
        gen_highfreq_sin(period_samples=2.0)


def test_mlogistic_recurrence():
    # with no memory the transient of a fixed point stays there
    assert np.allclose(gen_mlogistic(gamma_mem=0.0, n=5, q0=0.5, q1=0.75), 0.75)
    # direct recurrence oracle: 0.2 -> 0.64 -> 0.9216 (checked on the raw map before the transient cut)
    q = [0.3, 0.2]
    for _ in range(2):
        q.append(4 * q[-1] * (1 - q[-1]))
    assert np.allclose(q[2:], [0.64, 0.9216])
    a = gen_mlogistic(n=500)
    assert np.array_equal(a, gen_mlogistic(n=500))
    assert np.all((a > 0) & (a < 1))


def test_mlogistic_memory_matches_loop():
    g, r = 0.3, 4.0
    q = [0.3, 0.6]
    for _ in range(100 + 20):
        q.append((1 - g) * r * q[-1] * (1 - q[-1]) + g * q[-2])
    np.testing.assert_allclose(gen_mlogistic(r, g, 20), q[102:122], rtol=0, atol=1e-15)


def test_mlogistic_divergence():
    with pytest.raises(DivergenceError):
        gen_mlogistic(r=4.0, gamma_mem=0.0, n=10, q0=0.5, q1=5.0)


def test_lognormal_moments():
    x = sample_noise(NoiseSpec(NoiseFamily.LOGNORMAL), N, 0)
    assert abs(x.mean()) < 4 * x.std() / np.sqrt(N)


def test_gamma_moments():
    x = sample_noise(NoiseSpec(NoiseFamily.GAMMA, k=4.0), N, 0)
    assert abs(x.mean() - 1) < 0.005
    assert abs(x.var() - 0.25) < 0.05 * 0.25
    assert abs(x.mean() - 1) < 4 * x.std() / np.sqrt(N)


def test_bimodal_moments_and_modes():
    x = sample_noise(NoiseSpec(NoiseFamily.BIMODAL, s=0.2), N, 0)
    assert abs(x.mean()) < 4 * x.std() / np.sqrt(N)
    counts, edges = np.histogram(x, 80, (-2, 2))
    c = 0.5 * (edges[1:] + edges[:-1])
    peaks = [c[i] for i in range(1, 79) if counts[i] >= counts[i - 1] and counts[i] > counts[i + 1]
             and counts[i] > 0.5 * counts.max()]
    assert len(peaks) == 2 and abs(peaks[0] + 1) < 0.1 and abs(peaks[1] - 1) < 0.1


@given(st.sampled_from(list(NoiseFamily)), st.integers(0, 2 ** 32))
def test_samplers_reproducible(family, seed):
    spec = NoiseSpec(family)
    assert np.array_equal(sample_noise(spec, 100, seed), sample_noise(spec, 100, seed))


def test_noise_spec_validation():
    with pytest.raises(ContractError):
        NoiseSpec(NoiseFamily.GAMMA, k=0)
    with pytest.raises(ContractError):
        NoiseSpec(NoiseFamily.BIMODAL, s=0)
    with pytest.raises(ContractError):
        NoiseSpec(NoiseFamily.LOGNORMAL, sigma_ln=-1)
    assert NoiseSpec("gamma").kind is NoiseKind.MULTIPLICATIVE
    assert NoiseSpec("bimodal").kind is NoiseKind.ADDITIVE


def test_snr_definition():
    rng = np.random.default_rng(0)
    a = rng.standard_normal(1000)
    assert abs(snr_db(a, a)) < 1e-12
    b = rng.standard_normal(1000)
    b = b / b.std(ddof=1)
    s = a / a.std(ddof=1) * np.sqrt(10)
    assert abs(snr_db(s, b) - 10) < 1e-12
    with pytest.raises(ContractError):
        snr_db(a, np.ones(1000))


def test_mix_zero_db():
    q, _ = standardize(gen_highfreq_sin(n=2000))
    s = mix(q, NoiseSpec(NoiseFamily.LOGNORMAL, 0.0), 1)
    assert abs(np.var(s.truth_noise, ddof=1) - 1) < 1e-3


@pytest.mark.parametrize("family,snr,signal", [
    ("lognormal", 2.67, "lorenz"), ("bimodal", -8.01, "lorenz"), ("gamma", 9.0, "mlogistic"),
    ("gamma", -2.68, "lorenz"), ("bimodal", 4.58, "sinusoid")])
def test_mix_hits_target_snr(family, snr, signal):
    q = {"lorenz": lambda: gen_lorenz(n=9000), "mlogistic": lambda: gen_mlogistic(n=9000),
         "sinusoid": lambda: gen_highfreq_sin(n=9000)}[signal]()
    q, _ = standardize(q)
    s = mix(q, NoiseSpec(family, snr), 11)
    tol = 0.05 if family == "gamma" else 0.01
    assert abs(measured_snr_db(s) - snr) < tol


@given(st.integers(0, 10 ** 6), st.sampled_from(["lognormal", "bimodal", "gamma"]))
def test_mix_identities(seed, family):
    q, _ = standardize(gen_mlogistic(n=300))
    s = mix(q, NoiseSpec(family, 3.0), seed)
    if s.noise_kind_truth is NoiseKind.ADDITIVE:
        assert np.array_equal(s.observed - s.truth_signal, s.truth_noise) or \
            np.allclose(s.observed - s.truth_signal, s.truth_noise, rtol=0, atol=1e-12)
    else:
        nz = q != 0
        np.testing.assert_allclose(s.observed[nz] / q[nz], s.truth_noise[nz], rtol=1e-12)
