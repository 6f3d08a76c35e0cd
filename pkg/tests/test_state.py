import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybridswe.mesh import build_dual, build_primal, generate_structured
from hybridswe.state import (
    NumericsConfig,
    PhysicalParams,
    dual_depth,
    eigenvalues,
    element_depth,
    friction_gamma,
    initial_state,
    velocity_from_momentum,
)


class TestConfigs:
    def test_defaults(self):
        cfg = NumericsConfig()
        assert cfg.theta == 1.0 and cfg.c_alpha == 0.0 and not cfg.fe_rusanov
        assert cfg.resolve_mode() == "wp1"
        assert NumericsConfig(theta=0.6).resolve_mode() == "wp2"
        assert NumericsConfig(mode="wp3").resolve_mode() == "wp3"

    def test_validation(self):
        with pytest.raises(ValueError):
            NumericsConfig(theta=1.5)
        with pytest.raises(ValueError):
            NumericsConfig(c_alpha=-1)
        with pytest.raises(ValueError):
            PhysicalParams(g=0)
        with pytest.raises(ValueError):
            PhysicalParams(n_manning=-0.1)


class TestElementDepth:
    def test_flat(self):
        assert element_depth([1, 1, 1], [0.2, 0.2, 0.2]) == pytest.approx(0.8)

    def test_varying_bottom(self):
        assert element_depth([1, 1, 1], [0, 0.3, 0.6]) == pytest.approx(0.7)

    def test_dry_clamp(self):
        assert element_depth([0, 0, 0], [0.5, 0.5, 0.5]) == 0.0


class TestVelocity:
    def test_unit(self):
        v = velocity_from_momentum(np.array([1.0, 0.0]), 1.0)
        assert v[0] == pytest.approx(1.0 / (1.0 + 1e-7), rel=1e-15)
        assert v[1] == 0.0

    def test_dry(self):
        v = velocity_from_momentum(np.array([0.3, 0.0]), 0.0)
        assert np.all(v == 0.0)

    def test_generic(self):
        v = velocity_from_momentum(np.array([2.0, -1.0]), 2.0)
        assert np.allclose(v, [1.0, -0.5], rtol=1e-7)

    @given(st.floats(0.01, 100), st.floats(-50, 50), st.floats(-50, 50))
    @settings(max_examples=50)
    def test_momentum_roundtrip(self, h, v1, v2):
        v = np.array([v1, v2])
        back = velocity_from_momentum(h * v, h)
        bound = 1e-7 / h**2 * np.abs(v) + 1e-13 * (1 + np.abs(v))
        assert np.all(np.abs(back - v) <= bound)


class TestEigenvalues:
    def test_full(self):
        lam = eigenvalues(1.0, [1.0, 0.0], [1.0, 0.0], "full", g=9.81)
        c = np.sqrt(9.81)
        assert lam == pytest.approx([1 - c, 0, 1, 1 + c], abs=1e-4)
        assert lam[0] == pytest.approx(1 - 3.1321, abs=1e-4)

    def test_convective(self):
        lam = eigenvalues(1.0, [1.0, 0.0], [1.0, 0.0], "convective")
        assert lam == pytest.approx([0, 0, 1, 2])

    def test_dry_collapse(self):
        lam = eigenvalues(0.0, [1.0, 0.0], [1.0, 0.0], "full")
        assert lam == pytest.approx([1, 0, 1, 1])

    def test_pressure(self):
        lam = eigenvalues(4.0, [0.3, 0.1], [0.0, 1.0], "pressure", g=9.81)
        c = np.sqrt(4 * 9.81)
        assert lam == pytest.approx([-c, 0, 0, c])

    @given(st.floats(0, 10), st.floats(-5, 5), st.floats(-5, 5),
           st.floats(0, 2 * np.pi))
    @settings(max_examples=50)
    def test_advective_odd_under_flip(self, h, v1, v2, ang):
        n = np.array([np.cos(ang), np.sin(ang)])
        lp = eigenvalues(h, [v1, v2], n, "convective")
        lm = eigenvalues(h, [v1, v2], -n, "convective")
        assert lp[2] == pytest.approx(-lm[2], abs=1e-12)


class TestFriction:
    def test_frictionless(self):
        p = PhysicalParams(n_manning=0.0)
        assert friction_gamma(1.0, 1.0, p) == 0.0

    def test_formula(self):
        p = PhysicalParams(n_manning=1e-3)
        assert friction_gamma(1.0, 1.0, p) == pytest.approx(9.81e-6, rel=1e-12)

    def test_dry_clamp_bound(self):
        p = PhysicalParams(n_manning=1e-3)
        g = friction_gamma(0.0, 1.0, p, h_dry=1e-6)
        assert g == pytest.approx(9.81 * 1e-6 * 1e8, rel=1e-10)

    @given(st.floats(0, 10), st.floats(0, 100), st.floats(0, 0.1))
    @settings(max_examples=50)
    def test_nonnegative(self, h, speed, n):
        p = PhysicalParams(n_manning=n)
        assert friction_gamma(h, speed, p) >= 0.0


class TestInitialState:
    def test_fields_and_sync(self):
        tags = {"left": "periodic:x", "right": "periodic:x"}
        verts, tris, bspec = generate_structured(0, 1, 0, 1, 4, 4, tags=tags)
        primal = build_primal(verts, tris, bspec)
        dual = build_dual(primal)
        state = initial_state(
            primal, dual,
            eta_fn=lambda x, y: 1.0 + 0.1 * np.sin(2 * np.pi * x),
            v_fn=lambda x, y: (np.zeros_like(x), np.zeros_like(x)),
            b_fn=lambda x, y: 0.2 * y,
        )
        state.check(primal, dual)
        slaves = np.flatnonzero(primal.vertex_master != np.arange(primal.num_vertices))
        assert len(slaves) > 0
        assert np.array_equal(state.eta[slaves], state.eta[primal.vertex_master[slaves]])
        h = dual_depth(dual, state.eta, state.b_dual)
        assert np.all(h >= 0)
