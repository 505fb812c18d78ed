import math

import numpy as np
import pytest
from scipy.optimize import root

from regimes import PRIMARY, steady
from turing_inverse.pde import (
    BlowUp,
    FieldPair,
    Grid1D,
    InvalidField,
    PdeCoefficients,
    SteadyOptions,
    SteadyStateTimeout,
    advance,
    chi0_threshold_scan,
    critical_chi0,
    dispersion_scan,
    growth_rate,
    initial_condition,
    rate_norm,
    read_fields_csv,
    rhs,
    stable_dt,
    step_to_steady,
    write_fields_csv,
)
from turing_inverse.residuals import Model
from turing_inverse.spectral import project_amplitudes

MODELS = [Model.ONE, Model.TWO]


def params(model=Model.ONE, d_n=0.1, d_c=1.0, chi0=2.0, r=1.0):
    return PdeCoefficients(model, d_n, d_c, chi0, r)


def uniform(g, n, c):
    return FieldPair(np.full(g.N, n), np.full(g.N, c))


class TestGrid:
    def test_cell_centres(self):
        g = Grid1D(2.0, 64)
        assert g.dx == 2.0 / 64
        assert g.x[0] == pytest.approx(g.dx / 2) and g.x[-1] == pytest.approx(2.0 - g.dx / 2)

    @pytest.mark.parametrize("L,N", [(1.0, 32), (0.0, 64), (-1.0, 128)])
    def test_rejects(self, L, N):
        with pytest.raises(ValueError):
            Grid1D(L, N)


class TestRhs:
    @pytest.mark.parametrize("model", MODELS)
    def test_unit_state_is_fixed(self, model):
        g = Grid1D(3.0, 64)
        out = rhs(model, params(model), uniform(g, 1.0, 1.0), g)
        assert not np.any(out.n) and not np.any(out.c)

    def test_extinct_state_is_fixed(self):
        g = Grid1D(3.0, 64)
        out = rhs(Model.ONE, params(), uniform(g, 0.0, 0.0), g)
        assert not np.any(out.n) and not np.any(out.c)

    @pytest.mark.parametrize("model", MODELS)
    def test_transport_sums_to_zero(self, model):
        g = Grid1D(2.5, 96)
        n = 1 + 0.05 * np.cos(np.pi * g.x / g.L)
        p = params(model, chi0=0.0, r=1.3)
        out = rhs(model, p, FieldPair(n, 1 + 0.02 * np.cos(2 * np.pi * g.x / g.L)), g)
        assert out.n.sum() == pytest.approx(1.3 * np.sum(n * (1 - n)), rel=0, abs=1e-12)

    @pytest.mark.parametrize("model", MODELS)
    def test_chemotactic_flux_conserves_mass(self, model):
        g = Grid1D(2.0, 64)
        rng = np.random.default_rng(5)
        n, c = 1 + 0.1 * rng.random(g.N), 1 + 0.1 * rng.random(g.N)
        p = params(model, chi0=3.0, r=1.0)
        out = rhs(model, p, FieldPair(n, c), g)
        assert out.n.sum() == pytest.approx(np.sum(n * (1 - n)), abs=1e-11)

    def test_matches_continuum_operator(self):
        # second-order consistency of the semi-discrete operator on smooth data
        errs = []
        for N in (64, 128):
            g = Grid1D(1.0, N)
            x, w = g.x, np.pi
            n, c = 1 + 0.1 * np.cos(w * x), 1 + 0.2 * np.cos(w * x)
            p = params(Model.ONE, d_n=0.3, d_c=0.5, chi0=1.5, r=0.7)
            nx, nxx, cx, cxx = -0.1 * w * np.sin(w * x), -0.1 * w**2 * np.cos(w * x), -0.2 * w * np.sin(w * x), -0.2 * w**2 * np.cos(w * x)
            exact = p.d_n * nxx - p.chi0 * (nx * cx + n * cxx) + p.r * n * (1 - n)
            interior = slice(2, -2)
            errs.append(np.max(np.abs(rhs(Model.ONE, p, FieldPair(n, c), g).n - exact)[interior]))
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)

    def test_model2_rejects_non_positive_concentration(self):
        g = Grid1D(1.0, 64)
        c = np.ones(g.N)
        c[10] = 0.0
        with pytest.raises(InvalidField):
            rhs(Model.TWO, params(Model.TWO), FieldPair(np.ones(g.N), c), g)

    def test_non_finite_input(self):
        g = Grid1D(1.0, 64)
        n = np.ones(g.N)
        n[3] = np.nan
        with pytest.raises(BlowUp):
            rhs(Model.ONE, params(), FieldPair(n, np.ones(g.N)), g)


class TestTimeStepping:
    @pytest.mark.parametrize("model", MODELS)
    def test_conservation_without_growth(self, model):
        g = Grid1D(2.0, 64)
        p = params(model, chi0=1.5, r=0.0)
        f = initial_condition(g, mode=2, amplitude=0.05)
        out = advance(model, p, g, f, 10_000, stable_dt(p, g, float(f.c.max())))
        assert out.n.sum() == pytest.approx(f.n.sum(), rel=1e-10)
        assert np.max(np.abs(out.n - f.n)) > 1e-4  # something actually moved

    @pytest.mark.parametrize("model", MODELS)
    def test_reflection_symmetry(self, model):
        g = Grid1D(3.0, 64)
        x = g.x
        pert = 0.02 * np.cos(2 * np.pi * x / g.L) + 0.01 * np.cos(4 * np.pi * x / g.L)
        f = FieldPair(1 + pert, 1 - 0.5 * pert)
        p = params(model, chi0=3.0)
        out = advance(model, p, g, f, 2000, stable_dt(p, g, 1.1))
        assert np.max(np.abs(out.n - out.n[::-1])) < 1e-10
        assert np.max(np.abs(out.c - out.c[::-1])) < 1e-10

    def test_chemotaxis_off_relaxes_to_unit_state(self):
        g = Grid1D(2.0, 64)
        ic = FieldPair(1 + 1e-3 * np.cos(2 * np.pi * g.x / g.L), np.ones(g.N))
        out = step_to_steady(Model.ONE, params(chi0=0.0), g, ic)
        a = project_amplitudes(out.n, g, 16)
        assert a[0] == pytest.approx(1.0, abs=1e-6)
        assert np.max(np.abs(a[1:])) < 1e-6

    @pytest.mark.parametrize("model", MODELS)
    def test_unit_state_stays_put(self, model):
        g = Grid1D(2.0, 64)
        out = step_to_steady(model, params(model), g, uniform(g, 1.0, 1.0))
        assert np.all(out.n == 1.0) and np.all(out.c == 1.0)

    def test_timeout_carries_state(self):
        g = Grid1D(2.0, 64)
        ic = initial_condition(g, mode=1)
        with pytest.raises(SteadyStateTimeout) as exc:
            step_to_steady(Model.ONE, params(), g, ic, SteadyOptions(t_max=0.5))
        assert exc.value.state.time >= 0.5 and np.all(np.isfinite(exc.value.state.n))

    def test_blow_up(self):
        g = Grid1D(1.0, 64)
        with pytest.raises((BlowUp, InvalidField)):
            step_to_steady(Model.ONE, params(), g, initial_condition(g, mode=3), SteadyOptions(dt=0.05))

    @pytest.mark.parametrize("model", MODELS)
    def test_steady_pattern(self, model):
        p, rep, g, f, _ = steady(int(model), *PRIMARY[model])
        assert f.rate_norm < 1e-9
        assert rate_norm(model, p, f, g) == f.rate_norm
        a = project_amplitudes(f.n, g, 12)
        m = int(np.argmax(np.abs(a[1:]))) + 1
        assert m == rep.m_star
        assert m * math.pi / g.L == pytest.approx(rep.q_star)
        assert np.all(f.n >= 0) and np.all(f.c > 0)

    @pytest.mark.parametrize("model", MODELS)
    def test_grid_refinement_is_second_order(self, model):
        # time stepping at N = 256 takes minutes, so finer grids are polished by Newton
        # on the discrete steady equations, starting from the interpolated coarse pattern
        p, _, g, f, _ = steady(int(model), *PRIMARY[model])
        amps = [project_amplitudes(f.n, g, 3)[1:]]
        for N in (128, 256):
            fine = Grid1D(g.L, N)

            def F(z):
                out = rhs(model, p, FieldPair(z[:N], z[N:]), fine)
                return np.r_[out.n, out.c]

            sol = root(F, np.r_[np.interp(fine.x, g.x, f.n), np.interp(fine.x, g.x, f.c)], method="hybr", tol=1e-14)
            assert np.max(np.abs(F(sol.x))) < 1e-9
            g, f = fine, FieldPair(sol.x[:N], sol.x[N:])
            amps.append(project_amplitudes(f.n, g, 3)[1:])
        d = np.diff(np.array(amps), axis=0)
        np.testing.assert_allclose(d[0] / d[1], 4.0, rtol=0.3)


class TestDispersion:
    def test_uniform_mode_stable(self):
        for r in (0.3, 1.0, 4.0):
            assert growth_rate(0.0, 0.1, 1.0, 5.0, r) == pytest.approx(-min(r, 1.0))

    def test_no_chemotaxis_no_instability(self):
        rep = dispersion_scan(0.1, 1.0, 0.0, 1.0, 10.0, 40)
        assert np.all(rep.growth < 0) and not rep.unstable

    def test_onset_curve(self):
        q = 1.7
        chi = critical_chi0(0.1, 1.0, 1.0, q)
        assert growth_rate(q, 0.1, 1.0, chi, 1.0) == pytest.approx(0.0, abs=1e-12)
        assert growth_rate(q, 0.1, 1.0, chi * 1.01, 1.0) > 0 > growth_rate(q, 0.1, 1.0, chi * 0.99, 1.0)

    def test_continuum_threshold_is_minimum(self):
        qs = np.linspace(0.2, 10, 2000)
        assert critical_chi0(0.1, 1.0, 1.0) == pytest.approx(min(critical_chi0(0.1, 1.0, 1.0, q) for q in qs), rel=1e-5)

    def test_picks_fastest_mode(self):
        rep = dispersion_scan(0.1, 1.0, 2.5, 1.0, 10.0, 30)
        assert rep.unstable
        assert rep.growth[rep.m_star] == rep.growth[1:].max()
        assert rep.q_star == rep.m_star * math.pi / 10.0

    def test_coefficients_allow_switching_terms_off(self):
        assert params(chi0=0.0, r=0.0).r == 0.0
        with pytest.raises(ValueError):
            params(r=-1.0)
        with pytest.raises(ValueError):
            params(d_c=0.0)

    def test_rejects_non_positive_growth(self):
        with pytest.raises(ValueError):
            dispersion_scan(0.1, 1.0, 1.0, 0.0, 1.0, 4)

    def test_sweep_boundary_confirmed_by_simulation(self):
        d_n, d_c, r, L = 0.1, 1.0, 1.0, math.pi / (10.0**0.25)
        sweep = np.linspace(1.0, 3.0, 201)
        boundary = chi0_threshold_scan(d_n, d_c, r, L, 8, sweep)
        assert boundary is not None
        step = sweep[1] - sweep[0]
        assert critical_chi0(d_n, d_c, r, math.pi / L) == pytest.approx(boundary, abs=step)
        g = Grid1D(L, 64)
        ic = initial_condition(g, mode=1, amplitude=1e-3)
        trend = {}
        for label, chi in (("below", boundary * 0.9), ("above", boundary * 1.1)):
            p = params(d_n=d_n, d_c=d_c, chi0=chi, r=r)
            dt = stable_dt(p, g, 1.01)
            # past the initial transient, compare mode-1 amplitude at two later times
            first = advance(Model.ONE, p, g, ic, 10_000, dt)
            second = advance(Model.ONE, p, g, first, 10_000, dt)
            a1, a2 = (abs(project_amplitudes(f.n, g, 1)[1]) for f in (first, second))
            trend[label] = a2 / a1
        assert trend["below"] < 1 < trend["above"]


class TestCsv:
    def test_roundtrip_exact(self, tmp_path):
        g = Grid1D(1.3, 64)
        rng = np.random.default_rng(1)
        f = FieldPair(rng.random(64), rng.random(64) + 1)
        write_fields_csv(tmp_path / "f.csv", g, f)
        g2, f2 = read_fields_csv(tmp_path / "f.csv")
        assert g2.N == 64 and g2.L == pytest.approx(1.3, rel=1e-14)
        assert np.array_equal(f.n, f2.n) and np.array_equal(f.c, f2.c)

    @pytest.mark.parametrize("text", ["a,b,c\n1,2,3\n", "x,n,c\n1,2\n", "x,n,c\n0.1,1,zz\n"])
    def test_malformed(self, tmp_path, text):
        (tmp_path / "bad.csv").write_text(text)
        with pytest.raises(ValueError):
            read_fields_csv(tmp_path / "bad.csv")
