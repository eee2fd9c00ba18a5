import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import FISHER_PE, make_chain
from hrelay.fading import nakagami, rayleigh
from hrelay.metrics_af import bep_af_id, outage_af
from hrelay.metrics_df import bep_df_id, outage_df
from hrelay.montecarlo import SimPlan, cascade_sndr, simulate, sndr_samples
from hrelay.sndr import BPSK, ChainError, ceiling_af, ceiling_df, derive_coefficients, sndr_csi, sndr_df, sndr_fg


def test_same_seed_same_bits():
    chain = make_chain([nakagami(2)] * 3, 30.0, 0.1)
    plan = SimPlan(chain, (1.0, 3.0), trials=50_000, seed=11, metrics=("op", "bep", "ec"))
    a, b = simulate(plan), simulate(plan)
    assert a == b
    assert np.array_equal(sndr_samples(plan, 1000), sndr_samples(plan, 1000))


def test_same_seed_same_bits_with_workers():
    chain = make_chain([rayleigh()] * 2, 10.0, 0.1)
    plan = SimPlan(chain, (1.0,), trials=40_000, seed=5, workers=2)
    assert simulate(plan) == simulate(plan)


def test_different_seeds_differ():
    chain = make_chain([rayleigh()] * 2, 10.0)
    a = simulate(SimPlan(chain, trials=20_000, seed=1)).op[1.0].value
    b = simulate(SimPlan(chain, trials=20_000, seed=2)).op[1.0].value
    assert a != b


@settings(max_examples=30, deadline=None)
@given(
    ks=st.lists(st.floats(0.0, 0.4), min_size=1, max_size=4),
    protocol=st.sampled_from(["semi_blind", "csi", "df"]),
    seed=st.integers(0, 2**31),
)
def test_cascade_equals_closed_sndr_per_draw(ks, protocol, seed):
    n = len(ks)
    chain = make_chain([nakagami(2)] * n, 20.0, ks, protocol=protocol)
    g = np.random.default_rng(seed).gamma(2.0, 10.0, size=(500, n))
    got = cascade_sndr(chain, g)
    if protocol == "semi_blind":
        want = sndr_fg(derive_coefficients(chain), g)
    elif protocol == "csi":
        want = sndr_csi(chain.kappa2, g)
    else:
        want = sndr_df(chain.kappa2, g)
    assert np.allclose(got, want, rtol=1e-12, atol=0)


@pytest.mark.parametrize("protocol", ["semi_blind", "csi", "df"])
def test_all_draws_below_ceiling(protocol):
    chain = make_chain([FISHER_PE] * 3, 1e4, [0.1, 0.2, 0.15], protocol=protocol)
    snr = sndr_samples(SimPlan(chain, trials=200_000, seed=9))
    ceil = ceiling_df(chain) if protocol == "df" else ceiling_af(chain)
    assert np.all(snr > 0) and np.all(snr <= ceil * (1 + 1e-12))
    # at 40 dB the ceiling is approached but never crossed
    assert snr.max() > 0.9 * ceil


def test_outage_agrees_with_closed_forms():
    chain = make_chain([nakagami(2)] * 2, 10.0, 0.1)
    res = simulate(SimPlan(chain, (1.0, 3.0), trials=200_000, seed=4))
    for g, est in res.op.items():
        assert est.covers(outage_af(chain, g), k=4)
    df = chain.with_protocol("df")
    res = simulate(SimPlan(df, (1.0, 3.0), trials=200_000, seed=4))
    for g, est in res.op.items():
        assert est.covers(outage_df(df, g), k=4)


@pytest.mark.parametrize("method", ["symbols", "conditional"])
def test_bit_error_rate(method):
    chain = make_chain([nakagami(2), nakagami(1)], 1000.0)
    est = simulate(SimPlan(chain, trials=400_000, seed=8, metrics=("bep",), bep_method=method)).bep
    # reference: independent numerical integration over the exact two-hop law
    assert est.covers(0.0010104884030664675, k=4)
    assert est.value == pytest.approx(bep_af_id(chain), rel=0.1)
    single = make_chain([nakagami(2)], 10.0, protocol="df")
    est = simulate(SimPlan(single, trials=400_000, seed=8, metrics=("bep",), modulation=BPSK, bep_method=method)).bep
    assert est.covers(bep_df_id(single, BPSK), k=4)


def test_standard_errors_are_calibrated():
    chain = make_chain([rayleigh()], 1.0)
    truth = -math.expm1(-0.5)
    hits = 0
    runs = 60
    for seed in range(runs):
        est = simulate(SimPlan(chain, (0.5,), trials=2_000, seed=seed)).op[0.5]
        hits += abs(est.value - truth) <= 1.96 * est.stderr
    assert hits / runs > 0.85


def test_mean_override_and_hops():
    chain = make_chain([rayleigh()] * 2, 10.0)
    plan = SimPlan(chain, trials=1000, means=(5.0, 50.0))
    snr, hops = sndr_samples(plan, return_hops=True)
    assert hops.shape == (1000, 2) and snr.shape == (1000,)
    assert np.allclose(plan.chain.means, [5.0, 50.0])


@pytest.mark.parametrize(
    "kwargs",
    [dict(trials=0), dict(workers=0), dict(metrics=("median",)), dict(bep_method="x"), dict(means=(1.0,))],
)
def test_plan_validation(kwargs):
    with pytest.raises(ChainError):
        SimPlan(make_chain([rayleigh()] * 2, 10.0), **kwargs)
