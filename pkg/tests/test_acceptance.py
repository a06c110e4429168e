"""Exit criteria. Each test is one criterion; a PASS/FAIL summary line per
criterion is printed at the end of the pytest run (see conftest.py)."""

import math
import time

import numpy as np
import pytest
from scipy.stats import unitary_group

from w_expander import bounds
from w_expander.circuit import (
    CircuitSpec,
    CompiledCircuit,
    build_hm,
    build_lossy,
    build_optimal,
    compile_circuit,
    extract_coefficients,
)
from w_expander.expansion import WExpansionProblem, eta_closed_form, eta_via_engine, verify_exact_w
from w_expander.fock_engine import FockState, ModeUnitary, transition_amplitude
from w_expander.optimizer import (
    LOSSLESS_M,
    PerturbationBasis,
    cross_residual,
    end_to_end_optimality,
    maximize_H,
    scan_symmetric_lossy,
    verify_local_max,
)

from oracles import random_region_point, unitary_with_columns

pytestmark = pytest.mark.acceptance


class _Clock:
    def __init__(self, limit):
        self.limit = limit

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
        if exc[0] is None:
            assert self.elapsed < self.limit, f"took {self.elapsed:.2f}s, limit {self.limit}s"


def _p_suc(spec, N):
    rep = verify_exact_w(WExpansionProblem(N, spec.n, compile_circuit(spec)))
    assert rep.exact_w, rep.violations[:3]
    return rep.p_suc


def test_criterion_01_optimal_n1():
    with _Clock(1.0):
        spec = build_optimal(1)
        for N in range(2, 11):
            assert abs(_p_suc(spec, N) - (N + 1) / (5 * N)) < 1e-12


def test_criterion_02_optimal_n2():
    with _Clock(1.0):
        spec = build_optimal(2)
        for N in range(2, 11):
            p = _p_suc(spec, N)
            assert abs(p - 8 * (N + 2) / (125 * N)) < 1e-12
            assert p > (N + 2) / (16 * N)
        # the ratio to the prior value is N-independent
        assert 8 / 125 > 1 / 16


def test_criterion_03_lossy_small_n():
    with _Clock(1.0):
        for N in range(2, 11):
            assert abs(_p_suc(build_lossy(1), N) - 3 * (N + 1) / (16 * N)) < 1e-12
            assert abs(_p_suc(build_lossy(2), N) - 128 * (N + 2) / (2187 * N)) < 1e-12


def test_criterion_04_general_n_saturation():
    with _Clock(10.0):
        for n in range(1, 7):
            for N in (2, 5):
                pref = bounds.success_prefactor(n, N)
                assert abs(_p_suc(build_optimal(n), N) - bounds.P_max_of(n, N)) < 1e-10
                for m in range(1, n + 1):
                    assert abs(_p_suc(build_hm(n, m), N) - pref * bounds.H_m_of(n, m)) < 1e-10
                assert abs(_p_suc(build_lossy(n), N) - pref * bounds.H_lossy_of(n)) < 1e-10


def test_criterion_05_engine_closed_form_equivalence():
    rng = np.random.default_rng(2024)
    worst = 0.0
    with _Clock(20.0):
        for n in (1, 2, 3):
            L = n + 1
            spec = CircuitSpec(n=n, width=L, elements=(), output_modes=tuple(range(1, n + 2)))
            for _ in range(200):
                U = unitary_group.rvs(2 * L, random_state=rng)
                c = CompiledCircuit(spec, ModeUnitary(U), L)
                worst = max(worst, eta_via_engine(c).max_deviation(eta_closed_form(extract_coefficients(c), n)))
    assert worst < 1e-11


def test_criterion_06_destructive_interference():
    rng = np.random.default_rng(6)
    # n = 1 HOM: two H photons on a balanced splitter never exit separated
    s = 1 / math.sqrt(2)
    hom = np.kron(np.array([[s, 1j * s], [1j * s, s]]), np.eye(2))
    assert abs(transition_amplitude(hom, FockState((1, 0, 1, 0)), FockState((1, 0, 1, 0)))) < 1e-12
    for n in (1, 2, 3, 4):
        L = n + 2
        dim = 2 * L
        h_rows = [2 * k for k in range(L)]
        alpha = np.zeros(dim, complex)
        alpha[h_rows[: n + 1]] = 1 / math.sqrt(n + 1)
        spec = CircuitSpec(n=n, width=L, elements=(), output_modes=tuple(range(1, n + 2)))
        for _ in range(100):
            beta = np.zeros(dim, complex)
            beta[h_rows] = rng.standard_normal(L) + 1j * rng.standard_normal(L)
            beta -= alpha * np.vdot(alpha, beta)
            beta /= np.linalg.norm(beta)
            U = unitary_with_columns({0: beta, 2: alpha}, dim, rng)
            assert abs(eta_via_engine(CompiledCircuit(spec, ModeUnitary(U), L)).eta0) < 1e-12


def test_criterion_07_optimizer_agreement():
    with _Clock(30.0):
        for n in range(1, 7):
            res = maximize_H(n)
            assert abs(res.best_H - bounds.H1_of(n)) < 1e-6
            assert (res.classification, res.m) == (LOSSLESS_M, 1)
            S, _ = scan_symmetric_lossy(n)
            assert abs(S - (1 - (n + 1) ** -2)) < 1e-9


def test_criterion_08_bound_sweep():
    with _Clock(5.0):
        rep = bounds.verify_appendices(20)
    assert rep.passed, [(c.name, c.n, c.m, c.margin) for c in rep.failures[:5]]
    names = {c.name for c in rep.checks}
    for needed in ("lossy.F_decreasing", "lossy.G_increasing", "lossless.unique_root", "compare.H1_gt_Hm", "compare.H1_gt_H_lossy", "compare.compH_ratio_gt_1"):
        assert needed in names


def test_criterion_09_local_max_conditions():
    for n in range(1, 5):
        S = 1 - (n + 1) ** -2
        xi = bounds.xi_m(n, 1)
        lossy = verify_local_max(np.full(n + 1, S / (n + 1)), n, PerturbationBasis.unconstrained(n))
        lossless = verify_local_max(np.array([xi] + [(1 - xi) / n] * n), n, PerturbationBasis.constrained(n))
        for rep in (lossy, lossless):
            assert rep.normalized_residual < 1e-9
            assert rep.disc_ok and rep.sampled > 0
    rng = np.random.default_rng(9)
    vals = []
    for n in range(1, 5):
        basis = PerturbationBasis.unconstrained(n)
        vals += [cross_residual(random_region_point(n, rng), basis)[1] for _ in range(250)]
    assert np.median(vals) > 1e-3


def test_criterion_10_monte_carlo():
    with _Clock(60.0):
        for n in (1, 2):
            rep = end_to_end_optimality(n, 10_000, seed=n)
            assert rep.passes >= 10_000
            assert rep.exceedances == 0
            assert rep.best_p_suc <= bounds.P_max_of(n, 2) + 1e-9
