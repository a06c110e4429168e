"""Aggregated verification run behind ``w-expander verify``."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np
from scipy.stats import unitary_group

from . import bounds
from .circuit import (
    CircuitSpec,
    CompiledCircuit,
    _two_arm_circuit,
    build_hm,
    build_lossy,
    build_optimal,
    compile_circuit,
    extract_coefficients,
)
from .expansion import WExpansionProblem, eta_closed_form, eta_via_engine, verify_exact_w
from .fock_engine import ModeUnitary, check_unitary, fock_states, transition_amplitude
from .optimizer import (
    LOSSLESS_M,
    PerturbationBasis,
    end_to_end_optimality,
    maximize_H,
    scan_symmetric_lossy,
    verify_local_max,
)

__all__ = ["CheckResult", "run_verify", "random_compiled", "results_to_dict"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def random_compiled(n: int, L: int, rng: np.random.Generator) -> CompiledCircuit:
    """Haar-random mode unitary over L spatial modes wrapped as a compiled circuit."""
    U = unitary_group.rvs(2 * L, random_state=rng)
    spec = CircuitSpec(n=n, width=L, elements=(), output_modes=tuple(range(1, n + 2)), label="haar")
    return CompiledCircuit(spec=spec, unitary=ModeUnitary(U), L=L)


def _engine_probability(engine_n_max: int) -> str:
    rng = np.random.default_rng(11)
    worst = 0.0
    for dim in (2, 4, 6, 8):
        U = unitary_group.rvs(dim, random_state=rng)
        for p in range(1, min(4, engine_n_max + 1) + 1):
            src = next(iter(fock_states(p, dim)))
            total = sum(abs(transition_amplitude(U, src, dst)) ** 2 for dst in fock_states(p, dim))
            worst = max(worst, abs(total - 1))
    if worst > 1e-10:
        raise AssertionError(f"probability sum off by {worst:.3e}")
    return f"max |sum|amp|^2 - 1| = {worst:.2e}"


def _equivalence(engine_n_max: int) -> str:
    rng = np.random.default_rng(12)
    worst = 0.0
    for n in range(1, engine_n_max + 1):
        for _ in range(20):
            c = random_compiled(n, n + 2, rng)
            dev = eta_via_engine(c).max_deviation(eta_closed_form(extract_coefficients(c), n))
            worst = max(worst, dev)
    if worst > 1e-11:
        raise AssertionError(f"engine vs closed form deviates by {worst:.3e}")
    return f"max deviation {worst:.2e}"


def _saturation(engine_n_max: int, tamper: bool) -> str:
    N = 2
    for n in range(1, engine_n_max + 1):
        p1 = bounds.P1_opt_of(n) + (1e-3 if tamper else 0.0)
        spec = _two_arm_circuit(n, 1, p1, f"optimal n={n}")
        rep = verify_exact_w(WExpansionProblem(N, n, compile_circuit(spec)))
        if not rep.exact_w or abs(rep.p_suc - bounds.P_max_of(n, N)) > 1e-10:
            raise AssertionError(
                f"n={n}: exact_w={rep.exact_w}, p_suc={rep.p_suc!r} vs P_max={bounds.P_max_of(n, N)!r}"
            )
        for m in range(2, n + 1):
            rep = verify_exact_w(WExpansionProblem(N, n, compile_circuit(build_hm(n, m))))
            want = bounds.success_prefactor(n, N) * bounds.H_m_of(n, m)
            if not rep.exact_w or abs(rep.p_suc - want) > 1e-10:
                raise AssertionError(f"hm n={n} m={m}: p_suc={rep.p_suc!r} want {want!r}")
        rep = verify_exact_w(WExpansionProblem(N, n, compile_circuit(build_lossy(n))))
        if not rep.exact_w or abs(rep.p_suc - bounds.P_lossy_of(n, N)) > 1e-10:
            raise AssertionError(f"lossy n={n}: p_suc={rep.p_suc!r}")
        if check_unitary(compile_circuit(build_optimal(n)).unitary, 1e-12):
            raise AssertionError(f"optimal n={n} not unitary")
    return f"optimal, hm, lossy circuits saturate for n <= {engine_n_max}"


def _appendices(n_max: int) -> str:
    rep = bounds.verify_appendices(n_max)
    if not rep.passed:
        f = rep.failures[0]
        raise AssertionError(f"{len(rep.failures)} failed, first {f.name} n={f.n} m={f.m} margin={f.margin:.3e}")
    return f"{len(rep.checks)} sub-checks"


def _optimizer(limit: int) -> str:
    for n in range(1, limit + 1):
        res = maximize_H(n)
        if abs(res.best_H - bounds.H1_of(n)) > 1e-6 or (res.classification, res.m) != (LOSSLESS_M, 1):
            raise AssertionError(f"n={n}: H={res.best_H!r} class={res.classification}({res.m})")
        S, H = scan_symmetric_lossy(n)
        if abs(S - (1 - (n + 1) ** -2)) > 1e-9 or abs(H - bounds.H_lossy_of(n)) > 1e-10:
            raise AssertionError(f"n={n}: lossy scan S*={S!r}")
    return f"maximize_H and lossy scan agree for n <= {limit}"


def _local_max(limit: int) -> str:
    for n in range(1, limit + 1):
        S = 1 - (n + 1) ** -2
        rep = verify_local_max(np.full(n + 1, S / (n + 1)), n, PerturbationBasis.unconstrained(n))
        xi = bounds.xi_m(n, 1)
        rep2 = verify_local_max(np.array([xi] + [(1 - xi) / n] * n), n, PerturbationBasis.constrained(n))
        if not (rep.passed and rep2.passed):
            raise AssertionError(f"n={n}: lossy={rep.passed} lossless={rep2.passed}")
    return f"both optima pass for n <= {limit}"


def _e2e(limit: int) -> str:
    parts = []
    for n in range(1, limit + 1):
        rep = end_to_end_optimality(n, 300, seed=n)
        if not rep.passed:
            raise AssertionError(f"n={n}: {rep.exceedances} exceedances, {rep.passes} passes")
        parts.append(f"n={n}: {rep.passes} ok")
    return ", ".join(parts)


def run_verify(n_max: int = 20, engine_n_max: int = 6, tamper: bool = False) -> list[CheckResult]:
    checks: list[tuple[str, Callable[[], str]]] = [
        ("engine.probability_conservation", lambda: _engine_probability(engine_n_max)),
        ("expansion.engine_closed_form_equivalence", lambda: _equivalence(engine_n_max)),
        ("expansion.saturation", lambda: _saturation(engine_n_max, tamper)),
        ("bounds.appendices", lambda: _appendices(n_max)),
        ("optimizer.maximize_H", lambda: _optimizer(min(6, engine_n_max, n_max))),
        ("optimizer.local_max_conditions", lambda: _local_max(min(4, n_max))),
        ("optimizer.end_to_end_smoke", lambda: _e2e(min(2, engine_n_max))),
    ]
    results = []
    for name, fn in checks:
        t0 = time.perf_counter()
        try:
            detail, ok = fn(), True
        except AssertionError as exc:
            detail, ok = str(exc), False
        results.append(CheckResult(name, ok, detail, round(time.perf_counter() - t0, 3)))
    return results


def results_to_dict(results: list[CheckResult]) -> dict:
    return {"passed": all(r.passed for r in results), "checks": [asdict(r) for r in results]}

