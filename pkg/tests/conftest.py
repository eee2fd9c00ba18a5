import sys
import warnings

import pytest

from hrelay.fading import FadingModel, nakagami, rayleigh, to_h_params
from hrelay.sndr import ChainConfig, Hop, HopImpairment


def make_chain(models, snr, kappa=0.0, protocol="semi_blind", **kw):
    """Chain with one mean SNR (or one per hop) and a common or per-hop kappa."""
    n = len(models)
    snrs = snr if isinstance(snr, (list, tuple)) else [snr] * n
    kappas = kappa if isinstance(kappa, (list, tuple)) else [kappa] * n
    hops = tuple(
        Hop(to_h_params(m, g), HopImpairment.from_kappa(k)) for m, g, k in zip(models, snrs, kappas)
    )
    return ChainConfig(hops, protocol=protocol, **kw)


# a few non-Rayleigh shapes used across suites
ALPHA_MU_PE = FadingModel("alpha_mu_pe", {"alpha": 1.4, "mu": 1.5, "xi": 2.34})
FISHER_PE = FadingModel("fisher_f_pe", {"a": 2.3378, "b": 4.5323, "xi": 1.22})
MALAGA_PE = FadingModel(
    "malaga_pe", {"alpha": 2.296, "beta": 2, "b0": 0.1079, "rho": 0.596, "omega": 1.3265, "xi": 1.22}
)
DGG_STRONG = FadingModel(
    "dgg_pe",
    {"alpha1": 1.8621, "alpha2": 1.0, "beta1": 0.5, "beta2": 1.8, "omega1": 1.5074, "omega2": 0.928, "xi": 1.22, "r": 2},
)
EGK = FadingModel("egk", {"m": 2, "ms": 2, "beta": 2, "beta_s": 2})


@pytest.fixture(autouse=True)
def _quiet_numerics():
    # coincident-pole perturbation and quadrature roundoff warnings are expected
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        yield



def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(mod.format_line(number))
