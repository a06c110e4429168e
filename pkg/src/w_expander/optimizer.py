"""Numerical maximization of H = min(F, G) and checks of the local-maximum conditions.

The search never uses the closed forms from :mod:`bounds` beyond evaluating
F and G, so its agreement with ``H1_of`` is an independent confirmation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from .bounds import (
    REGION_SLACK,
    DistributionVector,
    H_of,
    P_max_of,
    grad_F,
    grad_G,
)
from .circuit import CircuitSpec, bs, build_optimal, compile_circuit, loss, pdbs, phase_shifter
from .errors import DomainError
from .expansion import WExpansionProblem, verify_exact_w

__all__ = [
    "SearchConfig",
    "OptimizationResult",
    "PerturbationBasis",
    "LocalMaxReport",
    "E2EReport",
    "maximize_H",
    "classify",
    "cross_residual",
    "verify_local_max",
    "scan_symmetric_lossy",
    "end_to_end_optimality",
    "random_expander",
    "write_trace_csv",
]

LOSSLESS_M = "lossless_m"
LOSSY_SYMMETRIC = "lossy_symmetric"
BOUNDARY_OTHER = "boundary_other"


@dataclass(frozen=True)
class SearchConfig:
    restarts: int = 6
    max_iters: int = 4000
    tol_x: float = 1e-10
    tol_f: float = 1e-13
    seed: int = 0

    def __post_init__(self) -> None:
        if self.restarts < 1:
            raise DomainError(f"restarts must be >= 1, got {self.restarts}")
        if self.max_iters < 1:
            raise DomainError(f"max_iters must be >= 1, got {self.max_iters}")
        if not (self.tol_x > 0 and self.tol_f > 0):
            raise DomainError("tolerances must be > 0")


@dataclass
class OptimizationResult:
    n: int
    best_P: DistributionVector
    best_H: float
    converged: bool
    classification: str
    m: int | None
    trace: list[dict] = field(default_factory=list)
    history: list[tuple[int, int, float]] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "best_P": list(self.best_P.P),
            "best_H": self.best_H,
            "S": self.best_P.S,
            "converged": self.converged,
            "classification": self.classification,
            "m": self.m,
            "trace": self.trace,
        }


def write_trace_csv(result: OptimizationResult, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["restart", "iteration", "H"])
        writer.writerows(result.history)


# ---------------------------------------------------------------------------
# search


def _softmax(w: np.ndarray) -> np.ndarray:
    z = np.append(w, 0.0)
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def _sigmoid(y: float) -> float:
    if y >= 0:
        return 1.0 / (1.0 + math.exp(-y))
    e = math.exp(y)
    return e / (1.0 + e)


def _interior_point(x: np.ndarray) -> np.ndarray:
    # (y, w_1..w_n) -> P = sigmoid(y) * softmax(w, 0): always inside R with S < 1
    return _sigmoid(float(x[0])) * _softmax(x[1:])


def _face_point(w: np.ndarray) -> np.ndarray:
    return _softmax(w)


def _neg_log_H(P: np.ndarray) -> float:
    # inlined F and G: this runs ~10^5 times per search
    if not (P.min() > 1e-300 and np.isfinite(P).all()):
        return 1e6
    k = P.size
    prod = P.prod()
    F = prod * ((1.0 / P).sum() - k * k)
    G = prod / P.sum()
    H = F if F < G else G
    if H <= 0:
        # F < 0 only near the symmetric lossless point; push away from it
        return 1e3 - H
    return -math.log(H)


def _to_interior_params(P: np.ndarray) -> np.ndarray:
    S = float(np.clip(P.sum(), 1e-12, 1 - 1e-12))
    y = math.log(S / (1 - S))
    return np.concatenate([[y], np.log(P[:-1] / P[-1])])


def _to_face_params(P: np.ndarray) -> np.ndarray:
    return np.log(P[:-1] / P[-1])


def _nelder_mead(fun, x0: np.ndarray, cfg: SearchConfig, history: list, restart: int):
    it = [0]

    def callback(intermediate_result):
        it[0] += 1
        f = float(intermediate_result.fun)
        history.append((restart, it[0], math.exp(-f) if f < 1e2 else 0.0))

    return minimize(
        fun,
        x0,
        method="Nelder-Mead",
        callback=callback,
        options={"maxiter": cfg.max_iters, "xatol": cfg.tol_x, "fatol": cfg.tol_f, "adaptive": True},
    )


def _polish(fun, x0: np.ndarray, cfg: SearchConfig, history: list, restart: int, rounds: int = 6):
    # restarting the simplex from the incumbent escapes collapse along the F = G kink
    res = _nelder_mead(fun, x0, cfg, history, restart)
    for _ in range(rounds):
        again = _nelder_mead(fun, res.x, cfg, history, restart)
        improved = again.fun < res.fun - cfg.tol_f
        if again.fun < res.fun:
            res = again
        if not improved:
            break
    return res, bool(res.success)


def classify(P, atol: float = 1e-4, s_tol: float = 1e-6) -> tuple[str, int | None]:
    """Label a point as lossless_m (two-level, S = 1), lossy_symmetric, or boundary_other."""
    p = np.sort(np.asarray(P.P if isinstance(P, DistributionVector) else P, dtype=float))
    S = float(p.sum())
    spread = p[-1] - p[0]
    if S < 1 - s_tol:
        return (LOSSY_SYMMETRIC, None) if spread <= atol else (BOUNDARY_OTHER, None)
    if spread <= atol:
        return BOUNDARY_OTHER, None
    low = np.abs(p - p[0]) <= atol
    high = np.abs(p - p[-1]) <= atol
    if np.all(low | high):
        return LOSSLESS_M, int(low.sum())
    return BOUNDARY_OTHER, None


def maximize_H(n: int, config: SearchConfig | None = None) -> OptimizationResult:
    """Multi-start simplex search for max H over R, in two phases per restart.

    Phase 1 searches the open region S < 1; phase 2 searches the face S = 1
    starting from the phase-1 endpoint rescaled onto it.
    """
    if int(n) != n or n < 1:
        raise DomainError(f"n must be an integer >= 1, got {n}")
    cfg = config or SearchConfig()
    rng = np.random.default_rng(cfg.seed)
    history: list[tuple[int, int, float]] = []
    candidates: list[tuple[float, np.ndarray, bool, int]] = []
    trace = []

    def f_int(x):
        return _neg_log_H(_interior_point(x))

    def f_face(w):
        return _neg_log_H(_face_point(w))

    for r in range(cfg.restarts):
        start = rng.dirichlet(np.ones(n + 1)) * rng.uniform(1e-3, 1.0)
        start = np.maximum(start, 1e-9)
        res1, conv1 = _polish(f_int, _to_interior_params(start), cfg, history, r)
        P1 = _interior_point(res1.x)
        res2, conv2 = _polish(f_face, _to_face_params(P1 / P1.sum()), cfg, history, r)
        P2 = _face_point(res2.x)
        best_P, conv = (P2, conv2) if res2.fun <= res1.fun else (P1, conv1)
        H = H_of(best_P)
        candidates.append((H, best_P, conv, r))
        trace.append({"restart": r, "start": start.tolist(), "end": best_P.tolist(), "H": H})

    top = max(c[0] for c in candidates)
    tied = [c for c in candidates if c[0] >= top - cfg.tol_f]
    H, P, conv, _ = min(tied, key=lambda c: (tuple(np.sort(c[1])), c[3]))
    # softmax output may exceed S = 1 by an ulp
    if P.sum() > 1:
        P = P / P.sum()
    dv = DistributionVector(tuple(P))
    label, m = classify(dv)
    return OptimizationResult(
        n=n, best_P=dv, best_H=H_of(dv), converged=conv, classification=label, m=m, trace=trace, history=history
    )


# ---------------------------------------------------------------------------
# local-maximum conditions


@dataclass(frozen=True)
class PerturbationBasis:
    u: np.ndarray
    v: np.ndarray
    constrained: bool

    @classmethod
    def unconstrained(cls, n: int) -> "PerturbationBasis":
        u = np.zeros(n + 1)
        v = np.zeros(n + 1)
        u[0] = 1.0
        v[-1] = 1.0
        return cls(u, v, False)

    @classmethod
    def constrained(cls, n: int) -> "PerturbationBasis":
        """u0, v0 projected onto the tangent space of S(P) = 1."""
        base = cls.unconstrained(n)
        grad_S = np.ones(n + 1)
        proj = lambda x: x - (x @ grad_S) / (grad_S @ grad_S) * grad_S  # noqa: E731
        return cls(proj(base.u), proj(base.v), True)


def cross_residual(P, basis: PerturbationBasis) -> tuple[float, float]:
    """(raw, normalized) residual of <u,dF><v,dG> - <v,dF><u,dG>.

    The normalized value divides by the norms of the projected gradient pairs,
    i.e. it is the sine of the angle between them within span(u, v).
    """
    gF, gG = grad_F(P), grad_G(P)
    a = np.array([basis.u @ gF, basis.v @ gF])
    b = np.array([basis.u @ gG, basis.v @ gG])
    raw = float(a[0] * b[1] - a[1] * b[0])
    denom = float(np.linalg.norm(a) * np.linalg.norm(b))
    return raw, (abs(raw) / denom if denom > 0 else 0.0)


@dataclass(frozen=True)
class LocalMaxReport:
    H: float
    worst_increase: float
    sampled: int
    skipped: int
    residual: float
    normalized_residual: float
    disc_ok: bool
    cross_ok: bool

    @property
    def passed(self) -> bool:
        return self.disc_ok and self.cross_ok


def verify_local_max(
    P,
    n: int,
    basis: PerturbationBasis,
    eps: float = 1e-4,
    directions: int = 64,
    residual_tol: float = 1e-9,
) -> LocalMaxReport:
    """Disc sampling of H around P in span(u, v) plus the gradient cross condition."""
    if not eps > 0:
        raise DomainError(f"eps must be > 0, got {eps}")
    p = np.asarray(P.P if isinstance(P, DistributionVector) else P, dtype=float)
    if p.size != n + 1:
        raise DomainError(f"P has {p.size} entries, expected {n + 1}")
    H0 = H_of(p)
    worst = -math.inf
    sampled = skipped = 0
    for radius in (eps, eps / 2, eps / 4):
        for k in range(max(64, directions)):
            theta = 2 * math.pi * k / max(64, directions)
            q = p + radius * (math.cos(theta) * basis.u + math.sin(theta) * basis.v)
            if np.any(q <= 0) or q.sum() > 1 + REGION_SLACK:
                skipped += 1
                continue
            sampled += 1
            worst = max(worst, H_of(q) - H0)
    raw, normed = cross_residual(p, basis)
    return LocalMaxReport(
        H=H0,
        worst_increase=float(worst),
        sampled=sampled,
        skipped=skipped,
        residual=raw,
        normalized_residual=normed,
        disc_ok=sampled > 0 and worst <= 1e-12,
        cross_ok=normed < residual_tol,
    )


def scan_symmetric_lossy(n: int) -> tuple[float, float]:
    """Maximize min(F, G) along P_i = S/(n+1); returns (S*, H*)."""
    if int(n) != n or n < 1:
        raise DomainError(f"n must be an integer >= 1, got {n}")

    def h(S: float) -> float:
        return H_of(np.full(n + 1, S / (n + 1)))

    # golden section: min(F, G) is unimodal in S but kinked at the optimum,
    # which stalls the parabolic steps of Brent's method
    inv_phi = (math.sqrt(5) - 1) / 2
    a, b = 1e-9, 1.0
    c, d = b - inv_phi * (b - a), a + inv_phi * (b - a)
    hc, hd = h(c), h(d)
    while b - a > 1e-14:
        if hc >= hd:
            b, d, hd = d, c, hc
            c = b - inv_phi * (b - a)
            hc = h(c)
        else:
            a, c, hc = c, d, hd
            d = a + inv_phi * (b - a)
            hd = h(d)
    S = (a + b) / 2
    return S, h(S)


# ---------------------------------------------------------------------------
# Monte-Carlo corroboration over explicit circuits


def _cascade(arm: int, taps: list[int], fractions: np.ndarray) -> list:
    """BS chain on ``arm`` sending fractions[k] of its light to taps[k]; the rest stays."""
    elements = []
    remaining = 1.0
    for tap, q in zip(taps, fractions[:-1]):
        reflect = min(1.0, q / remaining) if remaining > 0 else 0.0
        elements.append(bs(arm, tap, T=1.0 - reflect))
        remaining -= q
    return elements


def _random_losses(rng, modes: list[int]) -> list:
    return [loss(j, float(rng.uniform(0.3, 1.0))) for j in modes if rng.random() < 0.3]


def random_expander(n: int, rng: np.random.Generator) -> tuple[str, CircuitSpec]:
    """Draw a circuit from a family built to satisfy the exact-W conditions.

    Families: "two_arm" (PDBS + arbitrary splitting in both arms, T_H solved so
    the all-H amplitude matches the single-V ones), "lossy" (one PDBS arm
    discarded), and "random" (unconstrained PDBS, mostly rejected).
    """
    kind = str(rng.choice(["two_arm", "lossy", "random"], p=[0.6, 0.3, 0.1]))
    concentration = float(rng.choice([1.0, 10.0, 1000.0]))
    pre = _random_losses(rng, [1, 2])
    if kind == "lossy":
        t_v = float(rng.uniform(0.05, 1.0))
        t_h = t_v / (n + 1) ** 2
        taps = list(range(3, n + 3))
        elements = pre + [pdbs(1, 2, T_H=t_h, T_V=t_v)]
        elements += _cascade(1, taps, rng.dirichlet(np.full(n + 1, concentration)))
        outputs = taps + [1]
        elements += _random_losses(rng, outputs)
        spec = CircuitSpec(n=n, width=n + 2, elements=tuple(elements), output_modes=tuple(outputs), label="mc-lossy")
        return kind, spec

    m = int(rng.integers(1, n + 1))
    k = n + 1 - m
    if kind == "two_arm":
        # sqrt(T/R) = x solves k x^2 + s x - m = 0 with s = +1 or -1
        sign = 1 if rng.random() < 0.8 else -1
        x = (-sign + math.sqrt(1 + 4 * k * m)) / (2 * k)
        t_h = x * x / (1 + x * x)
        t_v = 1 - t_h
        fix_arm = 1 if sign == 1 else 2
    else:
        t_h, t_v = float(rng.uniform(0.01, 0.99)), float(rng.uniform(0.01, 0.99))
        fix_arm = int(rng.integers(1, 3))
    taps_b = list(range(3, m + 2))
    taps_a = list(range(m + 2, n + 2))
    elements = pre + [pdbs(1, 2, T_H=t_h, T_V=t_v), phase_shifter(fix_arm, math.pi, "V")]
    elements += _cascade(2, taps_b, rng.dirichlet(np.full(m, concentration)))
    elements += _cascade(1, taps_a, rng.dirichlet(np.full(k, concentration)))
    outputs = taps_b + [2] + taps_a + [1]
    elements += _random_losses(rng, outputs)
    elements += [phase_shifter(j, float(rng.uniform(0, 2 * math.pi)), "both") for j in outputs if rng.random() < 0.3]
    spec = CircuitSpec(n=n, width=n + 1, elements=tuple(elements), output_modes=tuple(outputs), label=f"mc-{kind}")
    return kind, spec


@dataclass
class E2EReport:
    n: int
    N: int
    target_passes: int
    attempts: int
    passes: int
    rejected: int
    exceedances: int
    best_p_suc: float
    P_max: float
    reference_deviation: float
    passes_by_family: dict[str, int] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.passes >= self.target_passes and self.exceedances == 0

    def to_dict(self) -> dict:
        return {**self.__dict__, "passed": self.passed}


def end_to_end_optimality(n: int, trials: int, N: int = 2, seed: int = 0, max_attempts: int | None = None) -> E2EReport:
    """Count exact-W circuits whose engine-evaluated P_suc exceeds P_max.

    Trial 0 is the optimal construction itself. Sampling continues until
    ``trials`` circuits have passed the exact-W check (or ``max_attempts``).
    """
    if int(n) != n or n < 1:
        raise DomainError(f"n must be an integer >= 1, got {n}")
    rng = np.random.default_rng(seed)
    p_max = P_max_of(n, N)
    limit = max_attempts if max_attempts is not None else 3 * trials + 10
    ref = verify_exact_w(WExpansionProblem(N, n, compile_circuit(build_optimal(n))))
    ref_dev = abs(ref.p_suc - p_max) if ref.exact_w else math.inf
    passes = 1 if ref.exact_w else 0
    by_family = {"reference": passes}
    exceed = int(ref.exact_w and ref.p_suc > p_max + 1e-9)
    best = ref.p_suc
    attempts = 1
    while passes < trials and attempts < limit:
        attempts += 1
        family, spec = random_expander(n, rng)
        report = verify_exact_w(WExpansionProblem(N, n, compile_circuit(spec)))
        if not report.exact_w:
            continue
        passes += 1
        by_family[family] = by_family.get(family, 0) + 1
        best = max(best, report.p_suc)
        if report.p_suc > p_max + 1e-9:
            exceed += 1
    return E2EReport(
        n=n,
        N=N,
        target_passes=trials,
        attempts=attempts,
        passes=passes,
        rejected=attempts - passes,
        exceedances=exceed,
        best_p_suc=best,
        P_max=p_max,
        reference_deviation=ref_dev,
        passes_by_family=by_family,
    )
