
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import minimize

from noncobf.array_channel import IIDUniform, Known, WrappedGaussian, draw_phase_vector
from noncobf.errors import DegenerateChannelError, InvalidArgumentError
from noncobf.su import (Beamformer, Criterion, WorstCaseOptions, coherent_bf, dc_inner_solve,
                        stationary_bf, stationary_power, stationary_power_bounds, uniform_bf,
                        worst_case_bf, worst_case_phases, worst_case_power)

from conftest import alignment, crandn, random_probes, unit


def grid_min_power(g, A, n=64):
    """Brute-force min of |g^H A v|^2 over an n^L grid of phases."""
    w = A.T @ g.conj()  # w_l = g^H a_l
    L = w.size
    ph = np.exp(2j * np.pi * np.arange(n) / n)
    total = np.zeros([n] * L, dtype=complex)
    for l in range(L):
        shape = [1] * L
        shape[l] = n
        total = total + (w[l] * ph).reshape(shape)
    return float(np.min(np.abs(total) ** 2)), float(np.sum(np.abs(w)))


def surrogate(g, c, Ao):
    return -np.real(np.vdot(c, g)) + np.sum(np.abs(Ao.conj().T @ g))


def surrogate_oracle(c, Ao, rng, probes=10 ** 5):
    """Random probes on the sphere, then local polish of the best few."""
    n = c.size
    X = random_probes(rng, n, probes)
    vals = -np.real(X.conj() @ c) + np.sum(np.abs(X.conj() @ Ao), axis=1)
    best = np.inf

    def f(x):
        z = x[:n] + 1j * x[n:]
        return surrogate(z / np.linalg.norm(z), c, Ao)

    for i in np.argsort(vals)[:5]:
        x0 = np.concatenate([X[i].real, X[i].imag])
        res = minimize(f, x0, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 20000})
        best = min(best, res.fun, vals[i])
    # positively homogeneous objective: g = 0 gives 0
    return min(best, 0.0)


class TestBaselines:
    def test_coherent_examples(self):
        bf = coherent_bf([1, 0])
        assert np.allclose(bf.g, [1, 0]) and bf.objective_value == 1
        assert coherent_bf(np.ones(4)).objective_value == pytest.approx(4)
        assert bf.criterion is Criterion.COHERENT

    def test_coherent_cauchy_schwarz_probe(self, rng):
        h = crandn(rng, 16)
        p = abs(np.vdot(coherent_bf(h).g, h)) ** 2
        U = random_probes(rng, 16, 1000)
        assert np.all(np.abs(U.conj() @ h) ** 2 <= p * (1 + 1e-12))

    def test_coherent_zero(self):
        with pytest.raises(DegenerateChannelError):
            coherent_bf(np.zeros(3))

    def test_uniform(self):
        assert np.allclose(uniform_bf(1).g, [1])
        assert np.isclose(np.linalg.norm(uniform_bf(4).g), 1)
        g = uniform_bf(128).g
        assert abs(np.vdot(g, np.ones(128))) ** 2 == pytest.approx(128)
        with pytest.raises(InvalidArgumentError):
            uniform_bf(0)

    def test_norm_invariant(self):
        with pytest.raises(InvalidArgumentError):
            Beamformer(np.ones(2), Criterion.UNIFORM, 0.0)


class TestStationary:
    def test_single_path(self, rng):
        a = crandn(rng, 8, 1)
        bf = stationary_bf(a, np.eye(1))
        assert alignment(bf.g, a[:, 0]) == pytest.approx(1)
        assert bf.objective_value == pytest.approx(np.linalg.norm(a) ** 2)

    def test_orthogonal_equipower(self, rng):
        Q, _ = np.linalg.qr(crandn(rng, 8, 3))
        A = 1.7 * Q
        bf = stationary_bf(A, np.eye(3))
        tr = np.real(np.trace(A @ A.conj().T))
        assert bf.objective_value == pytest.approx(tr / 3, rel=1e-12)
        assert 10 * np.log10(tr / bf.objective_value) == pytest.approx(10 * np.log10(3), abs=1e-6)

    def test_all_ones_R_rank_one(self, rng):
        A = crandn(rng, 6, 3)
        bf = stationary_bf(A, np.ones((3, 3)))
        s = A.sum(axis=1)
        assert alignment(bf.g, s) == pytest.approx(1)
        assert bf.objective_value == pytest.approx(np.linalg.norm(s) ** 2)

    def test_known_phases_coherent_special_case(self, rng):
        A = crandn(rng, 6, 4)
        mu = rng.uniform(0, 2 * np.pi, 4)
        v0 = np.exp(1j * mu)
        bf = stationary_bf(A, Known(mu).correlation())
        assert alignment(bf.g, A @ v0) == pytest.approx(1)
        assert bf.objective_value == pytest.approx(np.linalg.norm(A @ v0) ** 2)

    def test_degenerate(self):
        with pytest.raises(DegenerateChannelError):
            stationary_bf(np.zeros((3, 2)), np.eye(2))

    def test_R_shape_mismatch(self, rng):
        with pytest.raises(InvalidArgumentError):
            stationary_bf(crandn(rng, 3, 2), np.eye(3))

    def test_optimality_probe(self, rng):
        A = crandn(rng, 10, 4)
        bf = stationary_bf(A, np.eye(4))
        U = random_probes(rng, 10, 1000)
        probe = np.sum(np.abs(U.conj() @ A) ** 2, axis=1)
        assert bf.objective_value >= np.max(probe)
        assert bf.objective_value >= stationary_power(uniform_bf(10).g, A, np.eye(4))

    @pytest.mark.parametrize("model", [IIDUniform(5), WrappedGaussian(np.arange(5.0), 0.6)])
    def test_monte_carlo_mean(self, rng, model):
        A = crandn(rng, 12, 5)
        R = model.correlation()
        bf = stationary_bf(A, R)
        V = draw_phase_vector(model, rng, 10 ** 5)
        mean = np.mean(np.abs(V @ (A.T @ bf.g.conj())) ** 2)
        assert abs(mean - bf.objective_value) <= 0.02 * bf.objective_value


class TestBounds:
    def test_rank_one(self, rng):
        a = crandn(rng, 5, 1)
        lo, hi, r = stationary_power_bounds(np.hstack([a, 2 * a]), np.eye(2))
        assert r == 1 and lo == pytest.approx(hi)

    def test_orthogonal_equipower_attains_lower(self, rng):
        Q, _ = np.linalg.qr(crandn(rng, 8, 3))
        lo, hi, r = stationary_power_bounds(Q, np.eye(3))
        assert r == 3
        assert stationary_bf(Q, np.eye(3)).objective_value == pytest.approx(lo, rel=1e-12)

    def test_random_instances(self, rng):
        for _ in range(200):
            L = int(rng.integers(1, 7))
            A = crandn(rng, 8, L)
            X = crandn(rng, L, L)
            d = 1 / np.sqrt(np.real(np.diag(X @ X.conj().T)))
            R = d[:, None] * (X @ X.conj().T) * d[None, :]
            lo, hi, _ = stationary_power_bounds(A, R)
            lam = np.linalg.eigvalsh(A @ R @ A.conj().T)[-1]
            assert lam - lo >= -1e-9 * hi
            assert hi - lam >= -1e-9 * hi


class TestWorstCasePower:
    def test_polygon_example(self):
        # z = (3, 1, 1) with g = e1
        A = np.array([[3, 1, 1j]])
        assert worst_case_power([1], A) == pytest.approx(1)

    def test_equal_signatures(self, rng):
        a = crandn(rng, 4, 1)
        assert worst_case_power(unit(crandn(rng, 4)), np.hstack([a, a])) == 0

    def test_grid_oracle(self, rng):
        delta = 2 * np.pi / 64
        for L in (2, 3):
            for _ in range(10):
                A = crandn(rng, 4, L)
                g = unit(crandn(rng, 4))
                ref, s = grid_min_power(g, A)
                wc = worst_case_power(g, A)
                assert wc <= ref + 1e-12
                assert ref - wc <= 2 * delta * s ** 2

    def test_phases_attain_closed_form(self, rng):
        for L in (1, 2, 3, 5, 8):
            for _ in range(20):
                A = crandn(rng, 6, L) * rng.uniform(0.1, 3, L)
                g = unit(crandn(rng, 6))
                v = worst_case_phases(g, A)
                assert np.allclose(np.abs(v), 1)
                assert abs(abs(np.vdot(g, A @ v)) ** 2 - worst_case_power(g, A)) <= 1e-9

    def test_samples_bounded_below(self, rng):
        A = crandn(rng, 6, 4)
        g = unit(crandn(rng, 6))
        V = draw_phase_vector(IIDUniform(4), rng, 10 ** 4)
        assert np.min(np.abs(V @ (A.T @ g.conj())) ** 2) >= worst_case_power(g, A) - 1e-9

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(0, 10), min_size=1, max_size=8))
    def test_closed_form_formula(self, z):
        z = np.array(z)
        A = z[None, :].astype(complex)
        expect = max(0.0, 2 * z.max() - z.sum()) ** 2
        assert worst_case_power([1.0], A) == pytest.approx(expect, abs=1e-9)


class TestDCInner:
    def test_no_others_matched_filter(self, rng):
        a = crandn(rng, 5)
        g = dc_inner_solve(a, np.zeros((5, 0)), unit(crandn(rng, 5)))
        assert np.allclose(g, unit(a) * np.exp(1j * np.angle(np.vdot(a, g))))
        assert alignment(g, a) == pytest.approx(1)

    def test_identical_other_cancels(self, rng):
        a = crandn(rng, 4)
        g0 = unit(crandn(rng, 4))
        g = dc_inner_solve(a, a[:, None], g0)
        c = a * np.vdot(a, g0) / abs(np.vdot(a, g0))
        assert surrogate(g, c, a[:, None]) == pytest.approx(0, abs=1e-10)

    def test_kink_uses_main_signature(self):
        a = np.array([1, 0, 0], dtype=complex)
        g = dc_inner_solve(a, np.zeros((3, 0)), np.array([0, 1, 0], dtype=complex))
        assert np.allclose(g, a)

    def test_rejects_outside_ball(self):
        with pytest.raises(InvalidArgumentError):
            dc_inner_solve(np.ones(2), np.ones((2, 1)), np.ones(2))

    @pytest.mark.parametrize("kwargs", [{}, {"method": "subgradient", "iterations": 20000,
                                             "step0": 0.1}])
    def test_random_probe_oracle(self, kwargs):
        rng = np.random.default_rng(21)
        for _ in range(3):
            A = crandn(rng, 4, 3)
            a, Ao = A[:, 0], A[:, 1:]
            g0 = unit(crandn(rng, 4))
            c = a * np.vdot(a, g0) / abs(np.vdot(a, g0))
            g = dc_inner_solve(a, Ao, g0, **kwargs)
            assert np.linalg.norm(g) <= 1 + 1e-10
            val = surrogate(g, c, Ao)
            assert val <= surrogate(g0, c, Ao) + 1e-12
            assert val <= surrogate_oracle(c, Ao, rng) + 1e-3

    def test_unknown_method(self, rng):
        with pytest.raises(InvalidArgumentError):
            dc_inner_solve(np.ones(2), np.eye(2)[:, :1], np.array([1, 0]), method="newton")


class TestWorstCaseBF:
    def test_single_path(self, rng):
        a = crandn(rng, 6, 1)
        bf = worst_case_bf(a)
        assert alignment(bf.g, a[:, 0]) == pytest.approx(1)
        assert bf.objective_value == pytest.approx(np.linalg.norm(a) ** 2)

    def test_equal_signatures_flagged(self, rng):
        a = crandn(rng, 4, 1)
        bf = worst_case_bf(np.hstack([a, a]))
        assert bf.objective_value == 0
        assert bf.diagnostics["zero_worst_case"]
        assert np.isclose(np.linalg.norm(bf.g), 1)

    def test_orthogonal_pair_span_sweep(self, rng):
        Q, _ = np.linalg.qr(crandn(rng, 6, 2))
        a1, a2 = 2 * Q[:, 0], Q[:, 1]
        A = np.stack([a1, a2], axis=1)
        bf = worst_case_bf(A)
        # sweep g = cos t e1 + exp(j p) sin t e2 over the span at 1e-3 resolution
        t = np.arange(0, np.pi / 2 + 1e-3, 1e-3)
        p = np.arange(0, 2 * np.pi, 1e-3)
        z1 = 2 * np.abs(np.cos(t))[:, None] * np.ones_like(p)
        z2 = np.abs(np.exp(1j * p)[None, :] * np.sin(t)[:, None])
        wc = np.maximum(0, np.abs(z1 - z2)) ** 2
        ref = wc.max()
        assert ref == pytest.approx(4, abs=1e-6)
        assert abs(bf.objective_value - 4) <= 1e-4
        assert bf.objective_value >= ref - 1e-4
        assert alignment(bf.g, a1) >= 1 - 1e-6

    def test_monotone_traces(self, rng):
        A = crandn(rng, 8, 5) * np.array([2, 1.5, 1, 0.5, 0.3])
        bf = worst_case_bf(A, WorstCaseOptions(restarts=4))
        assert bf.diagnostics["runs"]
        for run in bf.diagnostics["runs"]:
            assert np.all(np.diff(run["trace"]) >= -1e-10)
        assert bf.objective_value == pytest.approx(worst_case_power(bf.g, A))

    def test_beats_alternatives(self, rng):
        for _ in range(10):
            L = int(rng.integers(2, 6))
            A = crandn(rng, 8, L) * rng.uniform(0.2, 2, L)
            bf = worst_case_bf(A)
            if not all(r["converged"] for r in bf.diagnostics["runs"]):
                continue
            alts = [stationary_bf(A, np.eye(L)).g, uniform_bf(8).g, unit(A.sum(axis=1))]
            for g in alts:
                assert bf.objective_value >= worst_case_power(g, A) - 1e-9

    def test_subgradient_inner_option(self, rng):
        A = crandn(rng, 6, 3) * np.array([2, 1, 0.5])
        bf = worst_case_bf(A, WorstCaseOptions(inner="subgradient", restarts=2))
        ref = worst_case_bf(A)
        assert np.isclose(np.linalg.norm(bf.g), 1)
        assert bf.objective_value <= ref.objective_value * (1 + 1e-6)
        assert bf.objective_value >= 0.9 * ref.objective_value

    def test_deterministic(self, rng):
        A = crandn(rng, 8, 4)
        assert np.array_equal(worst_case_bf(A).g, worst_case_bf(A).g)

    def test_kwargs_options(self, rng):
        A = crandn(rng, 5, 3)
        bf = worst_case_bf(A, restarts=1, max_outer_iters=5)
        assert all(r["start"] == "matched" for r in bf.diagnostics["runs"])
        assert all(r["iterations"] <= 5 for r in bf.diagnostics["runs"])
