"""Closed-form bounds on the post-selected amplitude and their maximizers.

``P`` is the coupling vector ``P_i = |alpha_iH|^2`` of the Fock ancilla into
the ``n+1`` output modes. Two upper bounds on ``|eta_0|^2`` are available:

* ``F(P) = Pi(P) * (sum_k 1/P_k - (n+1)^2)`` from the all-H amplitude, and
* ``G(P) = Pi(P) / S(P)`` from the single-V amplitudes,

and ``H = min(F, G)``. Its maximum over the region ``P_i > 0, S <= 1`` sets the
largest achievable success probability.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ._parallel import map_ordered
from .errors import DomainError

__all__ = [
    "DistributionVector",
    "BoundValues",
    "OptimumSummary",
    "SubCheck",
    "AppendixReport",
    "S_of",
    "Pi_of",
    "F_of",
    "G_of",
    "H_of",
    "bound_values",
    "grad_F",
    "grad_G",
    "xi_m",
    "H_m_of",
    "H_lossy_of",
    "P1_opt_of",
    "H1_of",
    "P_max_of",
    "P_lossy_of",
    "success_prefactor",
    "optimum_summary",
    "verify_appendices",
]

# slack for S(P) <= 1 so points built as sum-to-one floats stay admissible
REGION_SLACK = 1e-12


@dataclass(frozen=True)
class DistributionVector:
    P: tuple[float, ...]

    def __post_init__(self) -> None:
        P = tuple(float(p) for p in self.P)
        if len(P) < 2:
            raise DomainError(f"need at least two couplings (n >= 1), got {len(P)}")
        if any(not p > 0 for p in P):
            raise DomainError(f"all P_i must be > 0, got {P}")
        if sum(P) > 1 + REGION_SLACK:
            raise DomainError(f"S(P) = {sum(P)!r} exceeds 1")
        object.__setattr__(self, "P", P)

    @property
    def n(self) -> int:
        return len(self.P) - 1

    @property
    def S(self) -> float:
        return math.fsum(self.P)

    @property
    def Pi(self) -> float:
        return math.prod(self.P)

    def array(self) -> np.ndarray:
        return np.array(self.P)


@dataclass(frozen=True)
class BoundValues:
    S: float
    Pi: float
    F: float
    G: float
    H: float


def _vec(P) -> np.ndarray:
    arr = P.array() if isinstance(P, DistributionVector) else np.asarray(P, dtype=float)
    if arr.ndim != 1 or arr.size < 2:
        raise DomainError(f"P must be a vector of length >= 2, got shape {arr.shape}")
    if np.any(~(arr > 0)):
        raise DomainError(f"all P_i must be > 0, got {arr.tolist()}")
    return arr


def S_of(P) -> float:
    return float(np.sum(_vec(P)))


def Pi_of(P) -> float:
    return float(np.prod(_vec(P)))


def F_of(P) -> float:
    """Bound from the all-H amplitude. Negative when sum 1/P_k < (n+1)^2."""
    p = _vec(P)
    k = p.size
    return float(np.prod(p) * (np.sum(1.0 / p) - k * k))


def G_of(P) -> float:
    """Bound from the single-V amplitudes."""
    p = _vec(P)
    return float(np.prod(p) / np.sum(p))


def H_of(P) -> float:
    return min(F_of(P), G_of(P))


def bound_values(P) -> BoundValues:
    p = _vec(P)
    F, G = F_of(p), G_of(p)
    return BoundValues(S=float(p.sum()), Pi=float(p.prod()), F=F, G=G, H=min(F, G))


def grad_F(P) -> np.ndarray:
    p = _vec(P)
    pi = np.prod(p)
    F = F_of(p)
    return (F - pi / p) / p


def grad_G(P) -> np.ndarray:
    p = _vec(P)
    return G_of(p) * (1.0 / p - 1.0 / np.sum(p))


# ---------------------------------------------------------------------------
# closed-form maxima


def _check_n(n: int) -> None:
    if int(n) != n or n < 1:
        raise DomainError(f"n must be an integer >= 1, got {n}")


def _check_m(n: int, m: float, integer: bool = True) -> None:
    _check_n(n)
    if integer and int(m) != m:
        raise DomainError(f"m must be an integer, got {m}")
    if not 1 <= m <= n:
        raise DomainError(f"m must lie in 1..{n}, got {m}")


def xi_m(n: int, m: float, *, integer: bool = True) -> float:
    """Smaller coupling at the two-level lossless local maximum with m small entries.

    ``integer=False`` admits real m in [1, n], used when treating H_m as a
    continuous function of m.
    """
    _check_m(n, m, integer)
    return (2 * m * (n + 1) + 1 - math.sqrt(4 * m * (n + 1 - m) + 1)) / (2 * m * ((n + 1) ** 2 + 1))


def H_m_of(n: int, m: float, *, integer: bool = True) -> float:
    xi = xi_m(n, m, integer=integer)
    return xi**m * ((1 - m * xi) / (n + 1 - m)) ** (n + 1 - m)


def H_lossy_of(n: int) -> float:
    _check_n(n)
    return n**n * (n + 2) ** n / (n + 1) ** (3 * n + 1)


def P1_opt_of(n: int) -> float:
    _check_n(n)
    return (2 * n + 3 - math.sqrt(4 * n + 1)) / (2 * (n * n + 2 * n + 2))


def H1_of(n: int) -> float:
    p = P1_opt_of(n)
    return (1 / n) ** n * p * (1 - p) ** n


def success_prefactor(n: int, N: int) -> float:
    """n!(N+n)/N, converting |eta_0|^2 into a success probability."""
    _check_n(n)
    if int(N) != N or N < 2:
        raise DomainError(f"N must be an integer >= 2, got {N}")
    return math.factorial(n) * (N + n) / N


def P_max_of(n: int, N: int) -> float:
    return success_prefactor(n, N) * H1_of(n)


def P_lossy_of(n: int, N: int) -> float:
    return success_prefactor(n, N) * H_lossy_of(n)


@dataclass(frozen=True)
class OptimumSummary:
    n: int
    xi_m: tuple[float, ...]
    H_m: tuple[float, ...]
    H_lossy: float
    P1_opt: float
    H_1: float

    def P_max(self, N: int) -> float:
        return success_prefactor(self.n, N) * self.H_1

    def to_dict(self) -> dict:
        return asdict(self)


def optimum_summary(n: int) -> OptimumSummary:
    _check_n(n)
    return OptimumSummary(
        n=n,
        xi_m=tuple(xi_m(n, m) for m in range(1, n + 1)),
        H_m=tuple(H_m_of(n, m) for m in range(1, n + 1)),
        H_lossy=H_lossy_of(n),
        P1_opt=P1_opt_of(n),
        H_1=H1_of(n),
    )


# ---------------------------------------------------------------------------
# numeric sweeps over the 1-D reductions


@dataclass(frozen=True)
class SubCheck:
    name: str
    n: int
    m: int | None
    passed: bool
    margin: float
    detail: str = ""


@dataclass
class AppendixReport:
    n_max: int
    checks: list[SubCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[SubCheck]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {"n_max": self.n_max, "passed": self.passed, "checks": [asdict(c) for c in self.checks]}


def _sym_F(S: np.ndarray, n: int) -> np.ndarray:
    return S**n / (n + 1) ** (n - 1) * (1 - S)


def _sym_G(S: np.ndarray, n: int) -> np.ndarray:
    return (S / (n + 1)) ** (n + 1) / S


def _two_level(xi: np.ndarray, n: int, m: float) -> tuple[np.ndarray, np.ndarray]:
    zeta = (1 - m * xi) / (n + 1 - m)
    F = xi ** (m - 1) * zeta ** (n - m) * (m * zeta + (n + 1 - m) * xi - (n + 1) ** 2 * xi * zeta)
    G = xi**m * zeta ** (n + 1 - m)
    return F, G


def _nonincreasing_margin(y: np.ndarray) -> float:
    # relative size of the largest upward step; <= 0 means monotone non-increasing
    scale = np.max(np.abs(y))
    return float(np.max(np.diff(y)) / scale)


def _checks_for_n(n: int, samples: int) -> list[SubCheck]:
    out: list[SubCheck] = []

    # symmetric lossy family P_i = S/(n+1)
    S_lo = n / (n + 1)
    S = np.linspace(S_lo, 1.0, samples)
    mg = _nonincreasing_margin(_sym_F(S, n))
    out.append(SubCheck("lossy.F_decreasing", n, None, mg < 0, -mg))
    S_all = np.linspace(1.0 / samples, 1.0, samples)
    mg = _nonincreasing_margin(-_sym_G(S_all, n))
    out.append(SubCheck("lossy.G_increasing", n, None, mg < 0, -mg))
    S_star = 1 - (n + 1) ** -2
    fs, gs = _sym_F(np.array([S_star]), n)[0], _sym_G(np.array([S_star]), n)[0]
    rel = abs(fs - gs) / gs
    out.append(SubCheck("lossy.crossing_at_S_star", n, None, rel < 1e-12, 1e-12 - rel))
    below = _sym_F(S[S < S_star], n) - _sym_G(S[S < S_star], n)
    above = _sym_F(S[S > S_star], n) - _sym_G(S[S > S_star], n)
    ok = bool(np.all(below > 0) and np.all(above < 0))
    out.append(SubCheck("lossy.single_crossing", n, None, ok, float(min(below.min(initial=np.inf), -above.max(initial=-np.inf)))))
    H_grid = np.minimum(_sym_F(S, n), _sym_G(S, n)).max()
    H_l = H_lossy_of(n)
    out.append(SubCheck("lossy.H_lossy_is_grid_max", n, None, H_grid <= H_l * (1 + 1e-12), float(H_l - H_grid),
                        f"H_lossy={H_l:.6e}"))

    # two-level lossless family
    upper = 1.0 / (n + 1)
    xi_grid = np.linspace(upper / samples, upper * (1 - 1.0 / samples), samples)
    for m in range(1, n + 1):
        zeta = (1 - m * xi_grid) / (n + 1 - m)
        I = m * zeta + (n + 1 - m) * xi_grid - (n + 1) ** 2 * xi_grid * zeta - xi_grid * zeta
        sign_changes = int(np.count_nonzero(np.diff(np.sign(I)) != 0))
        out.append(SubCheck("lossless.unique_root", n, m, sign_changes == 1, float(1 - abs(sign_changes - 1)),
                            f"{sign_changes} sign changes of I(xi)"))
        xi = xi_m(n, m)
        in_range = 0 < xi < upper
        out.append(SubCheck("lossless.root_in_range", n, m, in_range, float(min(xi, upper - xi))))
        F1, G1 = _two_level(np.array([xi]), n, m)
        rel = abs(F1[0] - G1[0]) / G1[0]
        out.append(SubCheck("lossless.F_equals_G_at_root", n, m, rel < 1e-12, 1e-12 - rel))
        root_idx = np.flatnonzero(np.diff(np.sign(I)) != 0)
        if root_idx.size:
            bracket_ok = xi_grid[root_idx[0]] <= xi <= xi_grid[root_idx[0] + 1]
        else:
            bracket_ok = False
        out.append(SubCheck("lossless.root_matches_sign_change", n, m, bool(bracket_ok), 0.0 if bracket_ok else -1.0))
        tail = np.linspace(xi, upper, samples, endpoint=False)
        Ft, _ = _two_level(tail, n, m)
        mg = _nonincreasing_margin(Ft)
        out.append(SubCheck("lossless.F_decreasing_after_root", n, m, mg < 0, -mg))
        _, Gg = _two_level(xi_grid, n, m)
        mg = _nonincreasing_margin(-Gg)
        out.append(SubCheck("lossless.G_increasing", n, m, mg < 0, -mg))

    # global comparison
    H1 = H_m_of(n, 1)
    for m in range(2, n + 1):
        Hm = H_m_of(n, m)
        out.append(SubCheck("compare.H1_gt_Hm", n, m, H1 > Hm, float(H1 / Hm - 1)))
    H_l = H_lossy_of(n)
    out.append(SubCheck("compare.H1_gt_H_lossy", n, None, H1 > H_l, float(H1 / H_l - 1)))
    if n >= 2:
        m_cont = np.linspace(1.0, float(n), 500)
        logH = np.array([math.log(H_m_of(n, float(mc), integer=False)) for mc in m_cont])
        mg = _nonincreasing_margin(logH)
        out.append(SubCheck("compare.H_m_decreasing_in_m", n, None, mg < 0, -mg))
    q = (n + 1) ** 4 / ((n + 1) ** 4 - 1)
    ratio_closed = q * (q * (n + 1) ** 2 / ((n + 1) ** 2 - 1)) ** ((n - 1) / 2)
    ratio_direct = H_m_of(n, (n + 1) / 2, integer=False) / H_l
    agree = abs(ratio_closed - ratio_direct) <= 1e-12 * ratio_direct
    out.append(SubCheck("compare.compH_ratio_gt_1", n, None, ratio_closed > 1 and agree, float(ratio_closed - 1),
                        f"closed={ratio_closed:.15g} direct={ratio_direct:.15g}"))
    return out


def verify_appendices(n_max: int, samples: int = 10_000) -> AppendixReport:
    """Numerically confirm the monotonicity, root and ordering claims for n = 1..n_max."""
    _check_n(n_max)
    per_n = map_ordered(lambda n: _checks_for_n(n, samples), range(1, n_max + 1))
    report = AppendixReport(n_max=n_max)
    for checks in per_n:
        report.checks.extend(checks)
    return report

