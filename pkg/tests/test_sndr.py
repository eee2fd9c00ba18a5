import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special as sp

from conftest import make_chain
from hrelay.fading import nakagami, rayleigh, to_h_params
from hrelay.sndr import (
    BPSK,
    OOK,
    ChainConfig,
    ChainError,
    Hop,
    HopImpairment,
    ModulationSpec,
    Protocol,
    ceiling_af,
    ceiling_df,
    derive_coefficients,
    max_equal_kappa,
    sndr_csi,
    sndr_df,
    sndr_fg,
)

kappas = st.lists(st.floats(0.0, 0.4), min_size=1, max_size=5)
positive = st.floats(1e-2, 1e5)


def test_ceilings_three_hop():
    assert 10 * math.log10(ceiling_af([0.15] * 3)) == pytest.approx(11.6096, abs=1e-3)
    assert 10 * math.log10(ceiling_af([0.3] * 3)) == pytest.approx(5.3014, abs=1e-3)
    assert 10 * math.log10(ceiling_df([0.15] * 3)) == pytest.approx(16.4782, abs=1e-3)
    assert 10 * math.log10(ceiling_df([0.3] * 3)) == pytest.approx(10.4576, abs=1e-3)


def test_ideal_ceilings_are_infinite():
    assert math.isinf(ceiling_af([0.0, 0.0]))
    assert math.isinf(ceiling_df([0.0]))


def test_max_equal_kappa_values():
    assert max_equal_kappa("semi_blind", 2, 15) == pytest.approx(0.18110, abs=1e-5)
    assert max_equal_kappa("semi_blind", 3, 15) == pytest.approx(0.14747, abs=1e-5)
    assert max_equal_kappa("semi_blind", 4, 15) == pytest.approx(0.12753, abs=1e-5)
    assert max_equal_kappa("df", 3, 15) == pytest.approx(0.2582, abs=1e-4)
    with pytest.raises(ChainError):
        max_equal_kappa("df", 2, 0.0)


@given(st.integers(1, 6), st.floats(0.1, 100.0))
def test_max_equal_kappa_sits_on_the_ceiling(n, gamma):
    k = max_equal_kappa("semi_blind", n, gamma)
    assert ceiling_af([k] * n) == pytest.approx(gamma, rel=1e-9)
    assert ceiling_df([max_equal_kappa("df", n, gamma)] * n) == pytest.approx(gamma, rel=1e-9)


@settings(max_examples=60)
@given(kappas, st.data())
def test_fixed_gain_sndr_below_ceiling(ks, data):
    n = len(ks)
    chain = make_chain([nakagami(2)] * n, 10.0, ks)
    g = np.array(data.draw(st.lists(positive, min_size=n, max_size=n)))
    value = sndr_fg(derive_coefficients(chain), g)
    assert 0 < value <= ceiling_af(ks) * (1 + 1e-12)


@settings(max_examples=60)
@given(kappas, st.data())
def test_csi_and_df_below_their_ceilings(ks, data):
    n = len(ks)
    k2 = np.square(ks)
    g = np.array(data.draw(st.lists(positive, min_size=n, max_size=n)))
    assert 0 < sndr_csi(k2, g) <= ceiling_af(ks) * (1 + 1e-9)
    assert 0 < sndr_df(k2, g) <= ceiling_df(ks) * (1 + 1e-12)


@settings(max_examples=40)
@given(kappas, st.data(), st.floats(1.01, 10.0))
def test_fixed_gain_sndr_increases_with_any_hop(ks, data, boost):
    n = len(ks)
    chain = make_chain([rayleigh()] * n, 5.0, ks)
    coeffs = derive_coefficients(chain)
    g = np.array(data.draw(st.lists(st.floats(0.1, 1e3), min_size=n, max_size=n)))
    i = data.draw(st.integers(0, n - 1))
    up = g.copy()
    up[i] *= boost
    assert sndr_fg(coeffs, up) >= sndr_fg(coeffs, g)


def test_fixed_gain_sndr_by_hand():
    # two hops: 1/G = d1 + lam2/g1 + C1/(g1 g2)
    k = [0.1, 0.2]
    chain = make_chain([nakagami(2)] * 2, 10.0, k)
    c = derive_coefficients(chain)
    lam2 = 1 + 0.04
    lam1 = (1 + 0.01) * lam2
    C1 = (1 + 0.01) * 10.0 + 1
    assert c.lam[0] == pytest.approx(lam1) and c.lam[1] == pytest.approx(lam2) and c.lam[2] == 1.0
    assert c.C[1] == pytest.approx(C1)
    g1, g2 = 7.0, 3.0
    want = 1 / (lam1 - 1 + lam2 / g1 + C1 / (g1 * g2))
    assert sndr_fg(c, [g1, g2]) == pytest.approx(want, rel=1e-14)


def test_ideal_csi_is_harmonic_form():
    g = np.array([4.0, 9.0])
    assert sndr_csi([0, 0], g) == pytest.approx(1 / ((1 + 1 / 4) * (1 + 1 / 9) - 1))


def test_sndr_broadcasts_over_draws():
    chain = make_chain([nakagami(2)] * 3, 10.0, 0.1)
    g = np.random.default_rng(0).exponential(10.0, (1000, 3))
    out = sndr_fg(derive_coefficients(chain), g)
    assert out.shape == (1000,)
    with pytest.raises(ChainError):
        sndr_fg(derive_coefficients(chain), g[:, :2])


def test_blind_needs_gain():
    hop = Hop(to_h_params(rayleigh(), 10.0))
    with pytest.raises(ChainError, match="gain_constant"):
        ChainConfig((hop, hop), Protocol.BLIND)
    chain = ChainConfig((Hop(hop.dist, gain_constant=5.0), hop), Protocol.BLIND)
    assert derive_coefficients(chain).C[1] == 5.0
    design = ChainConfig((hop, hop), Protocol.BLIND, design_snr=20.0)
    assert derive_coefficients(design).C[1] == pytest.approx(21.0)


def test_semi_blind_gain_uses_mean_and_impairment():
    chain = make_chain([nakagami(2)] * 2, 50.0, 0.3)
    assert derive_coefficients(chain).C[1] == pytest.approx(1.09 * 50 + 1)


def test_printed_lambda_rule_differs_only_with_impairments():
    ideal = derive_coefficients(make_chain([rayleigh()] * 3, 10.0), "printed")
    assert np.allclose(ideal.Lambda, derive_coefficients(make_chain([rayleigh()] * 3, 10.0)).Lambda)
    hi = derive_coefficients(make_chain([rayleigh()] * 3, 100.0, 0.2), "printed")
    assert hi.Lambda[0] < 0  # the printed multiplier goes negative for N >= 3


def test_capacity_constant_from_detection():
    assert make_chain([rayleigh()] * 2, 1.0).c == 1.0
    assert make_chain([rayleigh(), rayleigh(r=2)], 1.0).c == pytest.approx(math.e / (2 * math.pi))


def test_modulation_templates():
    g = np.array([0.5, 3.0, 12.0])
    q = lambda x: 0.5 * sp.erfc(x / math.sqrt(2))
    assert np.allclose(OOK.conditional_bep(g), q(np.sqrt(g)), rtol=1e-12)
    assert np.allclose(BPSK.conditional_bep(g), q(np.sqrt(2 * g)), rtol=1e-12)
    with pytest.raises(ChainError):
        ModulationSpec(1.0, 0.5, ())
    with pytest.raises(ChainError):
        ModulationSpec(-1.0, 0.5, (0.5,))


def test_negative_kappa_rejected():
    with pytest.raises(ChainError):
        HopImpairment.from_kappa(-0.1)


def test_chain_helpers():
    chain = make_chain([nakagami(2)] * 3, 10.0, 0.1)
    assert chain.N == 3 and not chain.ideal
    assert np.allclose(chain.with_snr(5.0, [1, 2, 3]).means, [5, 10, 15])
    assert np.allclose(chain.with_kappa2([0, 0.04, 0]).kappa2, [0, 0.04, 0])
    assert chain.with_protocol("df").protocol is Protocol.DF
    assert Protocol.BLIND.is_fixed_gain and not Protocol.CSI.is_fixed_gain
