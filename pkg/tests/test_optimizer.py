import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_chain
from hrelay.fading import nakagami, rayleigh
from hrelay.metrics_df import outage_df
from hrelay.optimizer import (
    BudgetProblem,
    InfeasibleBudgetError,
    kkt_residual,
    objective,
    project_simplex,
    solve_af_nakagami,
    solve_df_nakagami,
    solve_numeric,
)
from hrelay.sndr import ChainError


def df_chain(n, snr=100.0, m=2, ratio=5.0):
    return make_chain([nakagami(m)] * n, [snr] + [ratio * snr] * (n - 1), protocol="df")


# ---------------------------------------------------------------- closed forms


@settings(max_examples=50)
@given(
    A=st.floats(0.01, 1.0),
    n=st.integers(2, 5),
    gamma=st.floats(0.5, 30.0),
    m=st.floats(0.5, 4.0),
    data=st.data(),
)
def test_df_closed_form_budget_and_ceilings(A, n, gamma, m, data):
    means = data.draw(st.lists(st.floats(1.0, 1e4), min_size=n, max_size=n))
    try:
        x = solve_df_nakagami(A, n, gamma, means, m)
    except InfeasibleBudgetError as exc:
        assert A * gamma >= n or exc.min_budget is not None
        return
    assert abs(x.sum() - A) < 1e-10
    assert np.all(x >= 0) and np.all(x * gamma < 1)


def test_df_closed_form_gives_weaker_hops_less():
    x = solve_df_nakagami(0.3, 3, 7.0, [10.0, 50.0, 200.0], 2.0)
    assert x[0] < x[1] < x[2]


def test_df_closed_form_equal_means_is_equal_split():
    x = solve_df_nakagami(0.3, 3, 7.0, [40.0] * 3, 1.5)
    assert np.allclose(x, 0.1, atol=1e-14)


def test_df_infeasible_budget_reports_limits():
    with pytest.raises(InfeasibleBudgetError) as err:
        solve_df_nakagami(0.3, 4, 15.0, [100.0] * 4, 2.0)
    assert err.value.max_budget == pytest.approx(4 / 15)
    assert err.value.max_gamma == pytest.approx(4 / 0.3)


@settings(max_examples=50)
@given(A=st.floats(0.05, 1.0), n=st.integers(2, 5), gamma=st.floats(0.1, 10.0))
def test_af_closed_form_budget(A, n, gamma):
    try:
        x = solve_af_nakagami(A, n, gamma)
    except InfeasibleBudgetError as exc:
        assert exc.min_budget is not None and exc.min_budget > A
        return
    assert abs(x.sum() - A) < 1e-10
    assert np.all(x >= 0)


@pytest.mark.parametrize("m, snr", [(1.0, 1e4), (2.0, 1e4), (3.0, 1e5)])
def test_af_closed_form_is_stationary_for_any_fading(m, snr):
    # the split depends only on A, N and gamma, and is a KKT point for every m and SNR
    chain = make_chain([nakagami(m)] * 2, snr)
    problem = BudgetProblem(chain, 0.3, 3.0, objective="first_term")
    x = solve_af_nakagami(0.3, 2, 3.0)
    assert kkt_residual(problem, x) < 1e-6


def test_af_closed_form_does_not_minimise():
    chain = make_chain([nakagami(2)] * 2, 1e4)
    problem = BudgetProblem(chain, 0.3, 3.0, objective="first_term")
    closed = solve_af_nakagami(0.3, 2, 3.0)
    sol = solve_numeric(problem)
    assert sol.objective < objective(problem, closed)
    assert sol.kappa2[0] == pytest.approx(0.3, abs=1e-9)  # whole budget on the first hop


# ---------------------------------------------------------------- numeric solver


@pytest.mark.parametrize("kind", ["first_term", "asymptotic"])
def test_numeric_reproduces_df_closed_form(kind):
    chain = df_chain(2)
    problem = BudgetProblem(chain, 0.3, 3.0, objective=kind)
    sol = solve_numeric(problem)
    want = solve_df_nakagami(0.3, 2, 3.0, chain.means, 2.0)
    assert np.max(np.abs(sol.kappa2 - want)) < 1e-6
    assert abs(sol.kappa2.sum() - 0.3) < 1e-10


def test_numeric_reproduces_df_closed_form_three_hops():
    chain = df_chain(3)
    sol = solve_numeric(BudgetProblem(chain, 0.3, 7.0, objective="first_term"))
    want = solve_df_nakagami(0.3, 3, 7.0, chain.means, 2.0)
    assert np.max(np.abs(sol.kappa2 - want)) < 1e-6


@settings(max_examples=8, deadline=None)
@given(
    A=st.floats(0.05, 0.5),
    ratio=st.floats(0.2, 10.0),
    gamma=st.floats(0.5, 3.0),
    seed=st.integers(0, 1000),
)
def test_numeric_never_worse_than_equal_split(A, ratio, gamma, seed):
    chain = make_chain([nakagami(2), rayleigh()], [1e3, 1e3 * ratio], protocol="df")
    problem = BudgetProblem(chain, A, gamma, objective="first_term")
    try:
        problem.check_feasible()
    except InfeasibleBudgetError:
        return
    sol = solve_numeric(problem, seed=seed)
    assert sol.objective <= sol.equal_objective * (1 + 1e-9)
    assert abs(sol.kappa2.sum() - A) < 1e-10
    assert np.all(sol.kappa2 >= 0)


def test_exact_objective_beats_equal_split_at_20_db():
    chain = df_chain(2, snr=100.0)
    sol = solve_numeric(BudgetProblem(chain, 0.3, 3.0, objective="exact"))
    assert sol.objective < sol.equal_objective
    assert sol.objective == pytest.approx(outage_df(chain.with_kappa2(sol.kappa2), 3.0), rel=1e-9)


def test_optimal_outage_falls_with_snr():
    values = []
    for snr in (30.0, 100.0, 300.0):
        sol = solve_numeric(BudgetProblem(df_chain(2, snr), 0.3, 3.0, objective="exact"))
        values.append(sol.objective)
    assert values[0] > values[1] > values[2]


def test_infeasible_problem_raises_before_search():
    problem = BudgetProblem(make_chain([nakagami(2)] * 2, 100.0), 0.3, 4.0)
    with pytest.raises(InfeasibleBudgetError):
        solve_numeric(problem)


def test_problem_validation():
    chain = make_chain([nakagami(2)] * 2, 100.0)
    with pytest.raises(ChainError):
        BudgetProblem(chain, -0.1, 1.0)
    with pytest.raises(ChainError):
        BudgetProblem(chain, 0.1, 1.0, protocol="csi")
    with pytest.raises(ChainError):
        BudgetProblem(chain, 0.1, 1.0, objective="median")
    assert BudgetProblem(chain, 0.1, 1.0).protocol == "af"
    assert BudgetProblem(chain.with_protocol("df"), 0.1, 1.0).protocol == "df"


@settings(max_examples=100)
@given(st.lists(st.floats(-5.0, 5.0), min_size=1, max_size=8), st.floats(0.01, 10.0))
def test_projection_onto_budget_simplex(v, total):
    x = project_simplex(v, total)
    assert np.all(x >= 0)
    assert x.sum() == pytest.approx(total, rel=1e-12, abs=1e-12)
    assert np.allclose(project_simplex(x, total), x, atol=1e-12)
