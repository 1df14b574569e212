import numpy as np
import pytest

from nls6 import functionals as fn
from nls6.dynamics import (IntegratorConfig, apply_sponge, evolve, linear_substep,
                           nonlinear_substep, series_columns, sponge_profile, strang_step)
from nls6.grids import FieldPair, RadialGrid, TensorGrid, l2_norm
from nls6.ground_state import ground_state_closed_form


def smooth_pair(g, kappa=0.5, amp=1.0):
    x = g.x
    r2 = sum(a ** 2 for a in x)
    u = amp * np.exp(-r2 / 2) * np.exp(0.6j * x[0])
    v = 0.8 * amp * np.exp(-(r2 + 0.3 * x[0]) / 2.5)
    return FieldPair(u, v, kappa, g)


def dist(a, b):
    g = a.grid
    return np.sqrt(l2_norm(a.u - b.u, g) ** 2 + l2_norm(a.v - b.v, g) ** 2)


def test_config_validation():
    for bad in (dict(dt_min=1e-3, dt0=1e-3), dict(dt0=2.0, t_end=1.0), dict(cfl_c=0.0),
                dict(sponge_width=1.0), dict(record_every=0), dict(blowup_H_factor=1.0),
                dict(t_end=np.inf)):
        with pytest.raises(ValueError):
            IntegratorConfig(**bad)
    IntegratorConfig(t_end=0.0)


class TestNonlinear:
    def test_zero_step(self, tgrid2):
        fp = smooth_pair(tgrid2)
        assert nonlinear_substep(fp, 0.0) is fp

    def test_v_from_u_squared(self):
        g = TensorGrid(1, 1.0, 4)
        a = 0.7
        fp = FieldPair(np.full(4, a), np.zeros(4), 0.5, g)
        dt = 1e-3
        out = nonlinear_substep(fp, dt)
        ref = fp
        for _ in range(1000):
            ref = nonlinear_substep(ref, dt / 1000)
        np.testing.assert_allclose(out.v, ref.v, atol=1e-14)
        np.testing.assert_allclose(out.v, 1j * a ** 2 * dt, rtol=1e-5)
        assert np.max(np.abs(np.abs(out.u) - a)) < dt ** 2

    def test_fourth_order(self, tgrid2):
        fp = smooth_pair(tgrid2)

        def run(dt, T=0.5):
            f = fp
            for _ in range(int(round(T / dt))):
                f = nonlinear_substep(f, dt)
            return f
        ref = run(0.5 / 2000)
        dts = [0.05, 0.025, 0.0125]
        errs = [dist(run(d), ref) for d in dts]
        assert np.polyfit(np.log(dts), np.log(errs), 1)[0] == pytest.approx(4, abs=0.2)

    def test_non_finite_raises(self):
        g = TensorGrid(1, 1.0, 4)
        fp = FieldPair(np.full(4, 1e200), np.full(4, 1e200), 0.5, g)
        with pytest.raises(FloatingPointError):
            nonlinear_substep(fp, 1.0)


class TestLinear:
    def test_zero_step(self, run_grid):
        fp = FieldPair(np.exp(-run_grid.r ** 2), np.zeros(run_grid.n), 0.5, run_grid)
        assert linear_substep(fp, 0.0) is fp

    def test_plane_wave_phase(self):
        g = TensorGrid(2, 2 * np.pi, 16)
        x, y = g.x
        w = np.exp(1j * (2 * x + y))
        out = linear_substep(FieldPair(w, w, 0.5, g), 0.3)
        np.testing.assert_allclose(out.u, np.exp(-5j * 0.3) * w, atol=1e-13)
        np.testing.assert_allclose(out.v, np.exp(-2.5j * 0.3) * w, atol=1e-13)

    def test_cn_preserves_mass(self, run_grid, rng):
        f = np.exp(-(run_grid.r / 8) ** 2) * (1 + 0.3j * rng.normal(size=run_grid.n))
        fp = FieldPair(f, 2 * f, 0.5, run_grid)
        out = linear_substep(fp, 0.05)
        for a, b in ((fp.u, out.u), (fp.v, out.v)):
            assert abs(l2_norm(b, run_grid) - l2_norm(a, run_grid)) < 1e-12 * l2_norm(a, run_grid)

    def test_cn_second_order_in_time(self):
        g = RadialGrid(512, 30.0)
        fp = FieldPair(np.exp(-g.r ** 2 / 4), np.zeros(512), 0.5, g)

        def run(dt, T=0.2):
            f = fp
            for _ in range(int(round(T / dt))):
                f = linear_substep(f, dt)
            return f
        ref = run(1e-4)
        e = [dist(run(d), ref) for d in (0.02, 0.01)]
        assert np.log2(e[0] / e[1]) == pytest.approx(2, abs=0.1)


class TestStrang:
    def test_zero_step(self, tgrid2):
        fp = smooth_pair(tgrid2)
        assert strang_step(fp, 0.0) is fp

    def test_trivial_scattering_branch(self, tgrid2):
        g = tgrid2
        v0 = np.exp(-g.r2 / 3) * np.exp(0.5j * g.x[1])
        fp = FieldPair(np.zeros(g.shape), v0, 0.5, g)
        f = fp
        for _ in range(50):
            f = strang_step(f, 0.01)
        assert np.max(np.abs(f.u)) == 0.0
        free = linear_substep(fp, 0.5)
        np.testing.assert_allclose(f.v, free.v, atol=1e-12)

    def test_time_symmetry(self, tgrid2):
        fp = smooth_pair(tgrid2)
        errs = [dist(strang_step(strang_step(fp, dt), -dt), fp) for dt in (0.04, 0.02, 0.01)]
        assert np.log2(errs[0] / errs[1]) > 2.8 or errs[0] < 1e-13
        assert max(errs) < 1e-5


class TestSponge:
    def test_identity_cases(self, run_grid):
        fp = FieldPair(np.exp(-run_grid.r ** 2), np.exp(-run_grid.r ** 2), 0.5, run_grid)
        assert apply_sponge(fp, 0.1, IntegratorConfig(sponge_width=0.2, sponge_strength=0.0)) is fp
        out = apply_sponge(fp, 0.1, IntegratorConfig(sponge_width=0.2, sponge_strength=5.0))
        np.testing.assert_array_equal(out.u, fp.u)

    def test_mass_decreases(self, run_grid):
        cfg = IntegratorConfig(sponge_width=0.5, sponge_strength=1.0)
        fp = FieldPair(np.exp(-(run_grid.r - 300) ** 2 / 400), np.zeros(run_grid.n), 0.5, run_grid)
        masses = [fn.mass(fp)]
        for _ in range(5):
            fp = apply_sponge(fp, 0.1, cfg)
            masses.append(fn.mass(fp))
        assert np.all(np.diff(masses) < 0)

    def test_profile_support(self, run_grid):
        sig = sponge_profile(run_grid, IntegratorConfig(sponge_width=0.25, sponge_strength=2.0))
        assert np.all(sig[run_grid.r <= 300] == 0) and sig[-1] == pytest.approx(2.0, rel=1e-3)

    def test_outgoing_packet_absorbed(self):
        g = TensorGrid(1, 40.0, 512)
        x = g.axis
        fp = FieldPair(0.01 * np.exp(-x ** 2) * np.exp(5j * x), np.zeros(512), 0.5, g)
        kw = dict(dt0=1e-3, t_end=3.0, record_every=1000)
        plain = evolve(fp, IntegratorConfig(**kw)).final
        sponged = evolve(fp, IntegratorConfig(sponge_width=0.3, sponge_strength=20.0, **kw)).final
        inner = np.abs(x) < 0.7 * 20

        def back(f):
            return np.sum(np.abs(f.u[inner]) ** 2 + np.abs(f.v[inner]) ** 2)
        assert back(sponged) <= 0.01 * back(plain)


class TestEvolve:
    def test_static_W(self, gs_half):
        res = evolve(gs_half.pair, IntegratorConfig(dt0=1e-3, t_end=0.1, record_every=10), thresholds=gs_half)
        assert res.outcome.name == "Completed"
        assert np.all(np.abs(res.series["H"] - gs_half.H_W) < 1e-3 * gs_half.H_W)
        assert np.all(np.diff(res.series["t"]) > 0)
        assert set(series_columns(6)) <= set(res.series)

    def test_half_W_trapped(self, gs_half):
        fp = gs_half.scaled(0.5)
        res = evolve(fp, IntegratorConfig(dt0=1e-3, t_end=2.0, record_every=100), thresholds=gs_half)
        _, dp, _ = fn.trapping_deltas(fn.energy(fp), gs_half)
        assert res.outcome.name == "Completed"
        assert np.all(res.series["H"] <= (1 - dp) * gs_half.H_W * (1 + 1e-9))

    def test_blowup_detected_coarse(self):
        g = RadialGrid(2048, 200.0)
        gs = ground_state_closed_form(0.5, g)
        res = evolve(gs.scaled(1.3), IntegratorConfig(dt0=2e-3, t_end=20.0, record_every=500), thresholds=gs)
        assert res.outcome.name == "BlowUpDetected"
        assert res.series["H"][-1] > 5 * gs.H_W

    def test_conservation_tensor(self, tgrid2):
        fp = smooth_pair(tgrid2)
        res = evolve(fp, IntegratorConfig(dt0=1e-3, t_end=0.2, record_every=20))
        s = res.series
        assert np.max(np.abs(s["M"] / s["M"][0] - 1)) < 1e-6
        assert np.max(np.abs(s["E"] - s["E"][0])) / max(abs(s["E"][0]), 1) < 1e-5
        for k in ("Px", "Py"):
            assert np.max(np.abs(s[k] - s[k][0])) < 1e-8 * (1 + abs(s[k][0]))

    def test_lands_on_t_end(self, tgrid2):
        res = evolve(smooth_pair(tgrid2), IntegratorConfig(dt0=0.03, t_end=0.1, record_every=2))
        assert res.series["t"][-1] == pytest.approx(0.1, abs=1e-14)

    def test_dt_floor(self, gs_half):
        cfg = IntegratorConfig(dt0=1e-3, dt_min=5e-4, cfl_c=1e-4, t_end=0.01)
        res = evolve(gs_half.scaled(3.0), cfg, thresholds=gs_half)
        assert res.outcome.name == "DtFloor"
