import math

import numpy as np
import pytest

import amgs


def random_spd(rng, m):
    b = rng.uniform(-1.0, 1.0, (m, m))
    return 0.5 * (b + b.T) + m * np.eye(m)


def test_dense_solvers_agree_with_oracle():
    rng = np.random.default_rng(7)
    a = random_spd(rng, 6)
    q = rng.uniform(-1.0, 1.0, 6)
    prob = amgs.LcpProblem(a, q)
    ref = amgs.oracle_solve(prob).lam
    cfg = amgs.SolverConfig(max_iterations=2000, residual_tol=1e-12)
    zero = np.zeros(6)
    for solve in (amgs.pgs_solve, amgs.amgs_dense_solve):
        sol = solve(prob, zero, cfg)
        assert sol.converged
        np.testing.assert_allclose(sol.lam, ref, atol=1e-8)
        w = a @ sol.lam + q
        assert np.all(sol.lam >= 0.0)
        assert np.all(w >= -1e-9)
        assert abs(sol.lam @ w) < 1e-9


def test_contact_solver_matches_densified_problem():
    # two stacked discs on a floor: rows are floor-lower and lower-upper
    j = amgs.SparseMatrix.from_coo(
        2, 6, [0, 1, 1], [1, 1, 4], [1.0, -1.0, 1.0])
    diags = [np.array([1.0, 1.0, 2.0]), np.array([1.0, 1.0, 2.0])]
    v = np.array([0.0, -0.2, 0.0, 0.0, -0.2, 0.0])
    prob = amgs.ContactLcp(j, diags, v, np.zeros(2))
    np.testing.assert_allclose(prob.a_diag, [1.0, 2.0])
    cfg = amgs.SolverConfig(max_iterations=50, record_history=True)
    sparse = amgs.amgs_contact_solve(prob, np.zeros(2), cfg)
    dense = amgs.amgs_dense_solve(prob.densify(), np.zeros(2), cfg)
    np.testing.assert_allclose(sparse.lam, dense.lam, atol=1e-12)
    assert len(sparse.residual_history) == 50
    # floor pushes both discs to rest: 0.2 m/s of momentum each
    np.testing.assert_allclose(sparse.lam, [0.4, 0.2], atol=1e-9)


def test_boxed_solver_clamps_to_upper_bound():
    prob = amgs.ContactLcp(
        amgs.SparseMatrix.from_dense(np.array([[1.0, 0.0, 0.0]])),
        [np.array([2.0, 2.0, 2.0])], np.array([-2.0, 0.0, 0.0]), np.zeros(1))
    bounds = amgs.Bounds(np.array([0.0]), np.array([1.0]))
    sol = amgs.amgs_boxed_solve(prob, bounds, np.zeros(1),
                                amgs.SolverConfig(max_iterations=20))
    np.testing.assert_allclose(sol.lam, [1.0])
    np.testing.assert_allclose(sol.w, [-2.0 + 2.0])


def test_certificate_closed_form():
    a = np.array([[2.0, -1.0], [-1.0, 2.0]])
    cert = amgs.certificate(a, amgs.SolverConfig(alpha=0.5))
    assert cert.tau == pytest.approx(math.sqrt(5.0) / 4.0, abs=1e-9)
    assert cert.delta == pytest.approx(cert.tau, abs=1e-9)
    assert cert.guaranteed
    assert "tau=" in str(cert)
    sweep = amgs.alpha_sweep_certificates(a, 2.0, [0.1 * k for k in range(1, 11)])
    best = min(sweep, key=lambda p: p[1])
    assert best[0] == pytest.approx(0.5)


def test_spectral_norm():
    assert amgs.spectral_norm(np.diag([1.0, -3.0, 2.0])) == pytest.approx(3.0)


def test_simulation_is_deterministic():
    first = amgs.simulate("stacking", solver="amgs", steps=5, circles=4)
    second = amgs.simulate("stacking", solver="amgs", steps=5, circles=4)
    assert first == second
    assert first.splitlines()[0] == "step,solver,alpha,iters,residual"
    assert len(first.splitlines()) == 6


def test_invalid_input_raises():
    with pytest.raises(ValueError):
        amgs.LcpProblem(np.array([[0.0]]), np.array([1.0]))
    with pytest.raises(ValueError):
        amgs.SolverConfig(omega="nope")
