"""Evaluate a compiled circuit as a W-state expander.

The accessed photon of the N-photon W state enters spatial mode 1 (as 1H or
1V), the n-photon H Fock ancilla enters mode 2. Success means one photon in
each of the n+1 output modes, and the post-selected state must be exactly the
(N+n)-photon W state. The N-dependence factors out into the prefactor
n!(N+n)/N, so every condition below is checked on the (n+1)-photon sector.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import success_prefactor
from .circuit import Coefficients, CompiledCircuit, extract_coefficients
from .errors import DomainError
from .fock_engine import FockState, transition_amplitude

__all__ = [
    "EtaVector",
    "Violation",
    "ExpansionReport",
    "WExpansionProblem",
    "eta_closed_form",
    "eta_via_engine",
    "pattern_amplitudes",
    "verify_exact_w",
    "appendix_a_conditions",
    "complex_to_json",
]


@dataclass(frozen=True)
class EtaVector:
    eta0: complex
    eta: tuple[complex, ...]

    def max_deviation(self, other: "EtaVector") -> float:
        diffs = [abs(self.eta0 - other.eta0)] + [abs(a - b) for a, b in zip(self.eta, other.eta)]
        return max(diffs)

    def spread(self) -> float:
        """Largest |eta_i - eta_0|."""
        return max((abs(e - self.eta0) for e in self.eta), default=0.0)


@dataclass(frozen=True)
class Violation:
    condition: str
    location: str
    magnitude: float


@dataclass
class ExpansionReport:
    eta: EtaVector
    p_suc: float
    exact_w: bool
    violations: list[Violation]
    N: int
    n: int

    def to_dict(self) -> dict:
        return {
            "eta0": complex_to_json(self.eta.eta0),
            "eta": [complex_to_json(e) for e in self.eta.eta],
            "p_suc": self.p_suc,
            "exact_w": self.exact_w,
            "violations": [
                {"condition": v.condition, "location": v.location, "magnitude": v.magnitude} for v in self.violations
            ],
            "N": self.N,
            "n": self.n,
        }


@dataclass(frozen=True)
class WExpansionProblem:
    N: int
    n: int
    circuit: CompiledCircuit = field(repr=False)

    def __post_init__(self) -> None:
        if int(self.N) != self.N or self.N < 2:
            raise DomainError(f"initial W state needs N >= 2 photons, got {self.N}")
        if self.n != self.circuit.n or len(self.circuit.output_modes) != self.n + 1:
            raise DomainError(f"circuit is built for n={self.circuit.n}, problem asks n={self.n}")


def complex_to_json(z: complex) -> dict:
    return {"re": float(z.real), "im": float(z.imag)}


def _prod_except(values: np.ndarray, skip: set[int]) -> complex:
    out = 1.0 + 0.0j
    for k, v in enumerate(values):
        if k not in skip:
            out *= v
    return out


def eta_closed_form(coeffs: Coefficients, n: int) -> EtaVector:
    """eta from the single-photon coefficients alone (no permanents)."""
    k = n + 1
    aH, aV = coeffs.alpha_H[:k], coeffs.alpha_V[:k]
    bH = coeffs.beta_H[:k]
    gH, gV = coeffs.gamma_H[:k], coeffs.gamma_V[:k]
    eta0 = sum(bH[i] * _prod_except(aH, {i}) for i in range(k))
    eta = []
    for i in range(k):
        cross = sum(gH[j] * _prod_except(aH, {i, j}) for j in range(k) if j != i)
        eta.append(complex(gV[i] * _prod_except(aH, {i}) + aV[i] * cross))
    return EtaVector(complex(eta0), tuple(eta))


def _input_state(L: int, n: int, polarization: int) -> FockState:
    occ = [0] * (2 * L)
    occ[polarization] = 1  # spatial mode 1
    occ[2] += n  # spatial mode 2, H
    return FockState(tuple(occ))


def _output_state(L: int, outputs: tuple[int, ...], pattern: tuple[int, ...]) -> FockState:
    occ = [0] * (2 * L)
    for spatial, pol in zip(outputs, pattern):
        occ[2 * (spatial - 1) + pol] += 1
    return FockState(tuple(occ))


def pattern_amplitudes(circuit: CompiledCircuit, polarization: int) -> dict[tuple[int, ...], complex]:
    """eta-normalized amplitudes for every one-photon-per-output polarization pattern.

    ``polarization`` selects the accessed photon (0 = 1H, 1 = 1V). Patterns are
    tuples over output labels with 0 = H, 1 = V, in binary counting order.
    """
    n, L = circuit.n, circuit.L
    U = circuit.unitary
    src = _input_state(L, n, polarization)
    # amplitude of the normalized ancilla input carries sqrt(n!); eta uses 1/n!
    scale = 1.0 / math.sqrt(math.factorial(n))
    out = {}
    for pattern in itertools.product((0, 1), repeat=n + 1):
        dst = _output_state(L, circuit.output_modes, pattern)
        out[pattern] = transition_amplitude(U, src, dst) * scale
    return out


def eta_via_engine(circuit: CompiledCircuit, n: int | None = None) -> EtaVector:
    n = circuit.n if n is None else n
    if n != circuit.n:
        raise DomainError(f"circuit is built for n={circuit.n}, asked for n={n}")
    L, outputs = circuit.L, circuit.output_modes
    U = circuit.unitary
    scale = 1.0 / math.sqrt(math.factorial(n))
    all_h = (0,) * (n + 1)
    eta0 = transition_amplitude(U, _input_state(L, n, 0), _output_state(L, outputs, all_h)) * scale
    src_v = _input_state(L, n, 1)
    eta = []
    for i in range(n + 1):
        pattern = tuple(1 if k == i else 0 for k in range(n + 1))
        eta.append(transition_amplitude(U, src_v, _output_state(L, outputs, pattern)) * scale)
    return EtaVector(complex(eta0), tuple(complex(e) for e in eta))


def appendix_a_conditions(coeffs: Coefficients, n: int, tol: float = 1e-10) -> list[Violation]:
    """Necessary conditions for nonzero success: no H->V mixing into the outputs
    for the ancilla and the H input, and every output reachable by the ancilla."""
    k = n + 1
    out = []
    for i in range(k):
        for name, arr in (("alpha_V", coeffs.alpha_V), ("beta_V", coeffs.beta_V)):
            mag = abs(arr[i])
            if mag > tol:
                out.append(Violation(f"no_mixing.{name}", f"output {i + 1}", float(mag)))
    prod = float(np.prod(np.abs(coeffs.alpha_H[:k])))
    if not prod > tol:
        out.append(Violation("coupling.alpha_H_product", "outputs 1..%d" % k, prod))
    return out


def _pattern_label(pattern: tuple[int, ...]) -> str:
    return "".join("HV"[p] for p in pattern)


def verify_exact_w(problem: WExpansionProblem, tol: float = 1e-10) -> ExpansionReport:
    """Check that post-selection yields exactly the (N+n)-photon W state.

    Every polarization pattern on the outputs is enumerated for both input
    terms. From 1H only the all-H pattern may survive; from 1V only the
    single-V patterns may survive, each with amplitude equal to the all-H one.
    """
    if not tol > 0:
        raise DomainError(f"tolerance must be > 0, got {tol}")
    circuit, n = problem.circuit, problem.n
    amps_h = pattern_amplitudes(circuit, 0)
    amps_v = pattern_amplitudes(circuit, 1)
    all_h = (0,) * (n + 1)
    eta0 = amps_h[all_h]
    violations: list[Violation] = []

    for pattern, amp in amps_h.items():
        n_v = sum(pattern)
        if n_v == 0:
            continue
        if n_v == 1:
            cond = "gamma_i"
        elif n_v == n + 1:
            cond = "h_input_all_v"
        else:
            cond = "h_input_multi_v"
        if abs(amp) > tol:
            violations.append(Violation(cond, f"1H -> {_pattern_label(pattern)}", float(abs(amp))))

    eta = []
    for pattern, amp in amps_v.items():
        n_v = sum(pattern)
        if n_v == 1:
            i = pattern.index(1)
            eta.append((i, amp))
            dev = abs(amp - eta0)
            if dev > tol:
                violations.append(Violation("eta_equality", f"eta_{i + 1} vs eta_0", float(dev)))
        elif abs(amp) > tol:
            cond = "v_input_no_v" if n_v == 0 else "v_input_multi_v"
            violations.append(Violation(cond, f"1V -> {_pattern_label(pattern)}", float(abs(amp))))
    eta.sort()
    eta_vec = EtaVector(complex(eta0), tuple(complex(a) for _, a in eta))

    if not abs(eta0) > tol:
        violations.append(Violation("nonzero_success", "eta_0", float(abs(eta0))))
    violations.extend(appendix_a_conditions(extract_coefficients(circuit), n, tol))
    violations.sort(key=lambda v: -v.magnitude)

    exact = not violations
    p_suc = success_prefactor(n, problem.N) * abs(eta0) ** 2 if exact else 0.0
    return ExpansionReport(eta=eta_vec, p_suc=float(p_suc), exact_w=exact, violations=violations, N=problem.N, n=n)
