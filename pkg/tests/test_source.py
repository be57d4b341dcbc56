import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from epl import source as src
from epl.polcalc import bell, fidelity, partial_trace
from epl.source import SourceConfig

unit = st.floats(0, 1)
alphas = st.floats(-math.pi / 4, math.pi / 4)
phis = st.floats(-math.pi, math.pi)


def cfg(**kw):
    return src.ideal_config(**kw)


class TestConfig:
    def test_preset_values(self):
        p = src.paper_preset()
        assert (p.pgr_per_mw, p.coincidence_per_mw) == (8.2e5, 3e4)
        assert p.eta_signal == p.eta_idler == 0.191
        assert p.white_noise_w == pytest.approx(0.02, abs=1e-15)
        assert p.dephasing_d == 1 and p.imbalance_alpha == 0 and p.phase_phi == 0
        assert p.dark_signal == p.dark_idler == 0

    @pytest.mark.parametrize("field,value", [
        ("pump_power", -1), ("eta_signal", 1.2), ("white_noise_w", -0.1), ("dephasing_d", 2),
        ("coincidence_window", 0), ("dark_idler", -5), ("imbalance_alpha", 1.0), ("pgr_per_mw", math.nan),
    ])
    def test_rejects_out_of_range(self, field, value):
        with pytest.raises(ValueError):
            SourceConfig(**{field: value})

    def test_coincidence_not_above_pgr(self):
        with pytest.raises(ValueError):
            SourceConfig(pgr_per_mw=1e4, coincidence_per_mw=2e4)

    def test_dict_round_trip(self):
        p = src.paper_preset(pump_power=3.1, dark_signal=50)
        assert SourceConfig.from_dict(p.to_dict()) == p
        with pytest.raises(ValueError):
            SourceConfig.from_dict({"pump_mw": 1})

    def test_noise_tuple(self):
        n = SourceConfig(imbalance_alpha=0.1, phase_phi=0.2, dephasing_d=0.9, white_noise_w=0.05).noise
        assert n == (0.1, 0.2, 0.9, 0.05)


class TestStates:
    def test_ideal_state(self):
        s = src.ideal_state()
        assert fidelity(s.as_mixed(), bell("Phi+")) == pytest.approx(1, abs=1e-12)
        np.testing.assert_allclose(partial_trace(s.as_mixed(), [1]).data, np.eye(2) / 2, atol=1e-15)

    def test_noiseless_limit(self):
        np.testing.assert_allclose(src.noisy_state(cfg()).data, bell("Phi+").dm(), atol=1e-15)

    def test_preset_fidelity(self):
        assert fidelity(src.noisy_state(src.paper_preset()), bell("Phi+")) == pytest.approx(0.985, abs=1e-12)

    def test_phase_flip(self):
        rho = src.noisy_state(cfg(phase_phi=math.pi))
        assert fidelity(rho, bell("Phi+")) == pytest.approx(0, abs=1e-12)
        assert fidelity(rho, bell("Phi-")) == pytest.approx(1, abs=1e-12)

    @given(alphas, phis, unit, unit)
    def test_valid_state_everywhere(self, a, phi, d, w):
        rho = src.noisy_state(cfg(imbalance_alpha=a, phase_phi=phi, dephasing_d=d, white_noise_w=w)).data
        assert np.trace(rho).real == pytest.approx(1, abs=1e-12)
        assert np.linalg.eigvalsh(rho).min() >= -1e-10
        np.testing.assert_allclose(rho, rho.conj().T, atol=1e-12)

    @given(unit, unit)
    def test_closed_form_fidelity(self, d, w):
        f = fidelity(src.noisy_state(cfg(dephasing_d=d, white_noise_w=w)), bell("Phi+"))
        assert f == pytest.approx((1 - w) * (1 + d) / 2 + w / 4, abs=1e-12)

    @given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
    def test_monotone_in_w_and_d(self, x1, x2, y):
        lo, hi = sorted((x1, x2))

        def f(**kw):
            return fidelity(src.noisy_state(cfg(**kw)), bell("Phi+"))

        assert f(white_noise_w=hi, dephasing_d=y) <= f(white_noise_w=lo, dephasing_d=y) + 1e-12
        assert f(dephasing_d=hi, white_noise_w=y) >= f(dephasing_d=lo, white_noise_w=y) - 1e-12

    @given(alphas, alphas, st.floats(-math.pi / 2, math.pi / 2))
    def test_monotone_in_alpha(self, a1, a2, phi):
        # with cos(phi) < 0 the imbalance shrinks the (negative) coherence term instead
        lo, hi = sorted((abs(a1), abs(a2)))
        f = [fidelity(src.noisy_state(cfg(imbalance_alpha=a, phase_phi=phi)), bell("Phi+")) for a in (lo, -hi)]
        assert f[1] <= f[0] + 1e-12

    @given(phis, phis, st.floats(0, 1))
    def test_monotone_in_phi(self, p1, p2, a):
        lo, hi = sorted((abs(p1), abs(p2)))
        alpha = a * math.pi / 4
        f = [fidelity(src.noisy_state(cfg(phase_phi=p, imbalance_alpha=alpha)), bell("Phi+")) for p in (lo, -hi)]
        assert f[1] <= f[0] + 1e-12

    @given(st.floats(0, 1), st.floats(0, 1), st.floats(-math.pi / 2, math.pi / 2))
    def test_monotone_in_d_with_phase(self, d1, d2, phi):
        lo, hi = sorted((d1, d2))
        f = [fidelity(src.noisy_state(cfg(dephasing_d=d, phase_phi=phi)), bell("Phi+")) for d in (lo, hi)]
        assert f[1] >= f[0] - 1e-12


class TestAccidentals:
    def test_zero_singles(self):
        assert src.accidental_white_noise(n_signal=0, n_idler=0, coincidences=3e4, window=1e-9) == 0

    def test_plug_in_example(self):
        ns, ni, c, tau = 1.57e5, 1.86e5, 3.6e4, 1e-9
        a = ns * ni * tau
        assert a == pytest.approx(29.2, abs=0.05)
        w = src.accidental_white_noise(n_signal=ns, n_idler=ni, coincidences=c, window=tau)
        assert w == pytest.approx(a / (c + a), rel=1e-15)
        assert w == pytest.approx(8.1e-4, abs=0.05e-4)

    def test_linear_in_power(self):
        p = src.paper_preset()
        powers = np.array([0.5, 1, 2, 4, 8])
        w = np.array([src.accidental_white_noise(p.replace(pump_power=x)) for x in powers])
        # A/(C+A) ~ A/C for A << C, and A/C is exactly linear in power
        ratio = w / (1 - w)
        np.testing.assert_allclose(ratio / powers, ratio[0] / powers[0], rtol=1e-12)
        assert np.all(np.diff(w) > 0)

    def test_requires_inputs(self):
        with pytest.raises(ValueError):
            src.accidental_white_noise(n_signal=1.0)
