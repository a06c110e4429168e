"""Optical circuit descriptions, compilation to mode unitaries, and builders.

Two-mode elements act on spatial modes ``(a, b)`` with the symmetric
convention: amplitude ``sqrt(T)`` to stay in the same spatial mode and
``i*sqrt(1-T)`` to cross. A PDBS applies that block with ``T_H`` to the H pair
and ``T_V`` to the V pair. A ``loss`` element on mode ``j`` appends one
auxiliary spatial mode and couples it to ``j`` like a PDBS, so ``T_H``/``T_V``
are the surviving fractions.

Output ordering: ``output_modes[k]`` is the physical spatial mode that plays
the role of output ``k+1``. Coefficient views are reported in that order,
followed by the remaining (non-output) spatial modes in ascending order.
"""

from __future__ import annotations

import cmath
import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from .bounds import P1_opt_of, xi_m
from .errors import CircuitValidationError, DomainError
from .fock_engine import ModeUnitary, check_unitary

__all__ = [
    "ElementKind",
    "Element",
    "CircuitSpec",
    "CompiledCircuit",
    "Coefficients",
    "pdbs",
    "bs",
    "phase_shifter",
    "waveplate",
    "loss",
    "compile_circuit",
    "build_optimal",
    "build_hm",
    "build_lossy",
    "extract_coefficients",
    "circuit_to_dict",
    "circuit_from_dict",
    "load_circuit",
    "dump_circuit",
]


class ElementKind(str, enum.Enum):
    PDBS = "pdbs"
    BS = "bs"
    PHASE = "phase"
    WAVEPLATE = "waveplate"
    LOSS = "loss"


_TWO_MODE = {ElementKind.PDBS, ElementKind.BS}


@dataclass(frozen=True)
class Element:
    kind: ElementKind
    modes: tuple[int, ...]
    params: dict[str, Any] = field(default_factory=dict, compare=True, hash=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ElementKind(self.kind))
        object.__setattr__(self, "modes", tuple(int(j) for j in self.modes))
        expected = 2 if self.kind in _TWO_MODE else 1
        if len(self.modes) != expected:
            raise CircuitValidationError(
                f"{self.kind.value} takes {expected} spatial mode(s), got {list(self.modes)}"
            )
        if expected == 2 and self.modes[0] == self.modes[1]:
            raise CircuitValidationError(f"{self.kind.value} needs two distinct modes, got {list(self.modes)}")
        if any(j < 1 for j in self.modes):
            raise CircuitValidationError(f"spatial modes are 1-based, got {list(self.modes)}")
        self._check_params()

    def _check_params(self) -> None:
        p = self.params
        if self.kind in (ElementKind.PDBS, ElementKind.LOSS):
            _require_keys(self, {"T_H", "T_V"})
            _check_transmittance(self, "T_H", p["T_H"])
            _check_transmittance(self, "T_V", p["T_V"])
        elif self.kind is ElementKind.BS:
            _require_keys(self, {"T"})
            _check_transmittance(self, "T", p["T"])
        elif self.kind is ElementKind.PHASE:
            _require_keys(self, {"phase", "polarization"})
            phi = float(p["phase"])
            if not 0.0 <= phi < 2 * math.pi:
                raise CircuitValidationError(f"phase must lie in [0, 2*pi), got {phi}")
            if p["polarization"] not in ("H", "V", "both"):
                raise CircuitValidationError(f"phase polarization must be H, V or both, got {p['polarization']!r}")
        elif self.kind is ElementKind.WAVEPLATE:
            _require_keys(self, {"matrix"})
            m = _complex_matrix(p["matrix"])
            if m.shape != (2, 2):
                raise CircuitValidationError(f"waveplate matrix must be 2x2, got shape {m.shape}")
            if check_unitary(m, 1e-9):
                raise CircuitValidationError("waveplate matrix is not unitary")

    @property
    def block(self) -> np.ndarray:
        """Local unitary on (aH, aV, bH, bV) or (aH, aV) for one-mode elements."""
        p = self.params
        if self.kind is ElementKind.BS:
            return _pdbs_block(p["T"], p["T"])
        if self.kind in (ElementKind.PDBS, ElementKind.LOSS):
            return _pdbs_block(p["T_H"], p["T_V"])
        if self.kind is ElementKind.PHASE:
            ph = cmath.exp(1j * float(p["phase"]))
            pol = p["polarization"]
            return np.diag([ph if pol in ("H", "both") else 1.0, ph if pol in ("V", "both") else 1.0]).astype(complex)
        return _complex_matrix(p["matrix"])


def _require_keys(el: Element, keys: set[str]) -> None:
    got = set(el.params)
    if got != keys:
        raise CircuitValidationError(
            f"{el.kind.value} params must be exactly {sorted(keys)}, got {sorted(got)}"
        )


def _check_transmittance(el: Element, name: str, value: Any) -> None:
    try:
        t = float(value)
    except (TypeError, ValueError):
        raise CircuitValidationError(f"{el.kind.value} {name} must be a number, got {value!r}") from None
    if not 0.0 <= t <= 1.0:
        raise CircuitValidationError(f"{el.kind.value} {name} must lie in [0, 1], got {t}")


def _to_complex(value: Any) -> complex:
    if isinstance(value, dict):
        return complex(float(value["re"]), float(value["im"]))
    return complex(value)


def _complex_matrix(rows: Any) -> np.ndarray:
    try:
        return np.array([[_to_complex(v) for v in row] for row in rows], dtype=complex)
    except (TypeError, ValueError, KeyError) as exc:
        raise CircuitValidationError(f"bad complex matrix: {exc}") from None


def _bs2(T: float) -> np.ndarray:
    t = math.sqrt(T)
    r = 1j * math.sqrt(max(0.0, 1.0 - T))
    return np.array([[t, r], [r, t]], dtype=complex)


def _pdbs_block(T_H: float, T_V: float) -> np.ndarray:
    # local ordering (aH, aV, bH, bV)
    block = np.zeros((4, 4), dtype=complex)
    for pol, T in ((0, float(T_H)), (1, float(T_V))):
        idx = [pol, 2 + pol]
        block[np.ix_(idx, idx)] = _bs2(T)
    return block


def pdbs(a: int, b: int, T_H: float, T_V: float) -> Element:
    return Element(ElementKind.PDBS, (a, b), {"T_H": T_H, "T_V": T_V})


def bs(a: int, b: int, T: float) -> Element:
    return Element(ElementKind.BS, (a, b), {"T": T})


def phase_shifter(mode: int, phase: float, polarization: str = "both") -> Element:
    return Element(ElementKind.PHASE, (mode,), {"phase": phase, "polarization": polarization})


def waveplate(mode: int, matrix) -> Element:
    m = np.asarray(matrix, dtype=complex)
    return Element(ElementKind.WAVEPLATE, (mode,), {"matrix": [[complex(v) for v in row] for row in m]})


def loss(mode: int, T_H: float, T_V: float | None = None) -> Element:
    return Element(ElementKind.LOSS, (mode,), {"T_H": T_H, "T_V": T_H if T_V is None else T_V})


@dataclass(frozen=True)
class CircuitSpec:
    n: int
    width: int
    elements: tuple[Element, ...]
    output_modes: tuple[int, ...]
    label: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "elements", tuple(self.elements))
        object.__setattr__(self, "output_modes", tuple(int(j) for j in self.output_modes))
        if self.n < 1:
            raise CircuitValidationError(f"ancilla photon count n must be >= 1, got {self.n}")
        if self.width < max(2, self.n + 1):
            raise CircuitValidationError(f"width {self.width} too small for n={self.n}")
        if len(self.output_modes) != self.n + 1 or len(set(self.output_modes)) != self.n + 1:
            raise CircuitValidationError(
                f"output_modes must list {self.n + 1} distinct spatial modes, got {list(self.output_modes)}"
            )
        for j in self.output_modes:
            if not 1 <= j <= self.width:
                raise CircuitValidationError(f"output mode {j} outside 1..{self.width}")
        for el in self.elements:
            for j in el.modes:
                if j > self.width:
                    raise CircuitValidationError(
                        f"{el.kind.value} references spatial mode {j} beyond width {self.width}"
                    )

    @property
    def n_aux(self) -> int:
        return sum(1 for el in self.elements if el.kind is ElementKind.LOSS)


@dataclass(frozen=True)
class Coefficients:
    """Columns of the unitary for inputs 2H (alpha), 1H (beta) and 1V (gamma).

    Each array has one entry per spatial mode, in output-label order followed by
    the non-output modes.
    """

    alpha_H: np.ndarray
    alpha_V: np.ndarray
    beta_H: np.ndarray
    beta_V: np.ndarray
    gamma_H: np.ndarray
    gamma_V: np.ndarray
    spatial_order: tuple[int, ...]


@dataclass(frozen=True)
class CompiledCircuit:
    spec: CircuitSpec
    unitary: ModeUnitary
    L: int

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def output_modes(self) -> tuple[int, ...]:
        return self.spec.output_modes

    @property
    def alpha(self) -> np.ndarray:
        return self.unitary.column(2)

    @property
    def beta(self) -> np.ndarray:
        return self.unitary.column(0)

    @property
    def gamma(self) -> np.ndarray:
        return self.unitary.column(1)


def compile_circuit(spec: CircuitSpec) -> CompiledCircuit:
    """Multiply the element unitaries in order; losses add auxiliary modes."""
    L = spec.width + spec.n_aux
    U = np.eye(2 * L, dtype=complex)
    next_aux = spec.width + 1
    for el in spec.elements:
        if el.kind is ElementKind.LOSS:
            spatial = (el.modes[0], next_aux)
            next_aux += 1
        else:
            spatial = el.modes
        rows = [2 * (j - 1) + pol for j in spatial for pol in (0, 1)]
        U[rows, :] = el.block @ U[rows, :]
    compiled = CompiledCircuit(spec=spec, unitary=ModeUnitary(U), L=L)
    bad = check_unitary(compiled.unitary, 1e-10)
    if bad:
        worst = max(bad, key=lambda v: v.magnitude)
        raise CircuitValidationError(f"compiled matrix not unitary (worst {worst})")
    return compiled


def extract_coefficients(c: CompiledCircuit) -> Coefficients:
    order = tuple(c.output_modes) + tuple(j for j in range(1, c.L + 1) if j not in c.output_modes)
    h_rows = [2 * (j - 1) for j in order]
    v_rows = [r + 1 for r in h_rows]
    U = c.unitary.matrix
    cols = {"alpha": 2, "beta": 0, "gamma": 1}
    views = {}
    for name, col in cols.items():
        views[f"{name}_H"] = U[h_rows, col].copy()
        views[f"{name}_V"] = U[v_rows, col].copy()
    return Coefficients(spatial_order=order, **views)


# ---------------------------------------------------------------------------
# builders


def _check_n(n: int) -> None:
    if int(n) != n or n < 1:
        raise DomainError(f"ancilla photon count n must be an integer >= 1, got {n}")


def _two_arm_circuit(n: int, m: int, t_h: float, label: str) -> CircuitSpec:
    # PDBS on (1, 2); straight arm 2 carries t_h and feeds outputs 1..m,
    # crossed arm 1 feeds outputs m+1..n+1. The V phase flip on arm 1 aligns
    # gamma/alpha between the arms.
    elements = [pdbs(1, 2, T_H=t_h, T_V=1.0 - t_h), phase_shifter(1, math.pi, "V")]
    for k in range(1, n):
        if k < m:
            elements.append(bs(2, k + 2, T=(m - k) / (m + 1 - k)))
        else:
            elements.append(bs(1, k + 2, T=(n - k) / (n + 1 - k)))
    outputs = [2] + list(range(3, m + 2)) + [1] + list(range(m + 2, n + 2))
    return CircuitSpec(n=n, width=n + 1, elements=tuple(elements), output_modes=tuple(outputs), label=label)


def build_optimal(n: int) -> CircuitSpec:
    """PDBS with T_H = R_V = P1_opt(n) and an equal-split cascade of n-1 BSs."""
    _check_n(n)
    return _two_arm_circuit(n, 1, P1_opt_of(n), f"optimal n={n}")


def build_hm(n: int, m: int) -> CircuitSpec:
    """Local-maximum circuit: m outputs share T_H = m*xi_m, n+1-m share the rest."""
    _check_n(n)
    if int(m) != m or not 1 <= m <= n:
        raise DomainError(f"m must be an integer in 1..{n}, got {m}")
    return _two_arm_circuit(n, m, m * xi_m(n, m), f"hm n={n} m={m}")


def build_lossy(n: int) -> CircuitSpec:
    """Symmetric lossy circuit: the transmitted H arm of the PDBS is discarded."""
    _check_n(n)
    elements = [pdbs(1, 2, T_H=(n + 1) ** -2, T_V=1.0)]
    for k in range(1, n + 1):
        elements.append(bs(1, k + 2, T=(n + 1 - k) / (n + 2 - k)))
    outputs = [1] + list(range(3, n + 3))
    return CircuitSpec(n=n, width=n + 2, elements=tuple(elements), output_modes=tuple(outputs), label=f"lossy n={n}")


# ---------------------------------------------------------------------------
# JSON

_NUM = {"type": "number"}
_COMPLEX = {
    "oneOf": [
        _NUM,
        {
            "type": "object",
            "properties": {"re": _NUM, "im": _NUM},
            "required": ["re", "im"],
            "additionalProperties": False,
        },
    ]
}


def _params(props: dict) -> dict:
    return {"type": "object", "properties": props, "required": sorted(props), "additionalProperties": False}


def _element_schema(kind: str, n_modes: int, params: dict) -> dict:
    return {
        "type": "object",
        "properties": {
            "kind": {"const": kind},
            "modes": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": n_modes, "maxItems": n_modes},
            "params": _params(params),
        },
        "required": ["kind", "modes", "params"],
        "additionalProperties": False,
    }


CIRCUIT_SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "n": {"type": "integer", "minimum": 1},
        "width": {"type": "integer", "minimum": 2},
        "output_modes": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "elements": {
            "type": "array",
            "items": {
                "oneOf": [
                    _element_schema("pdbs", 2, {"T_H": _NUM, "T_V": _NUM}),
                    _element_schema("bs", 2, {"T": _NUM}),
                    _element_schema("phase", 1, {"phase": _NUM, "polarization": {"enum": ["H", "V", "both"]}}),
                    _element_schema(
                        "waveplate",
                        1,
                        {"matrix": {"type": "array", "items": {"type": "array", "items": _COMPLEX}}},
                    ),
                    _element_schema("loss", 1, {"T_H": _NUM, "T_V": _NUM}),
                ]
            },
        },
        "label": {"type": "string"},
    },
    "required": ["n", "width", "output_modes", "elements", "label"],
    "additionalProperties": False,
}


def _jsonable(value: Any) -> Any:
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    if isinstance(value, list):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


def circuit_to_dict(spec: CircuitSpec) -> dict:
    return {
        "n": spec.n,
        "width": spec.width,
        "output_modes": list(spec.output_modes),
        "elements": [
            {"kind": el.kind.value, "modes": list(el.modes), "params": {k: _jsonable(v) for k, v in el.params.items()}}
            for el in spec.elements
        ],
        "label": spec.label,
    }


def circuit_from_dict(data: Any) -> CircuitSpec:
    try:
        jsonschema.validate(data, CIRCUIT_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise CircuitValidationError(f"circuit JSON invalid at {where}: {exc.message}") from None
    elements = tuple(Element(e["kind"], tuple(e["modes"]), dict(e["params"])) for e in data["elements"])
    return CircuitSpec(
        n=data["n"],
        width=data["width"],
        elements=elements,
        output_modes=tuple(data["output_modes"]),
        label=data["label"],
    )


def dump_circuit(spec: CircuitSpec, path: str | Path | None = None) -> str:
    text = json.dumps(circuit_to_dict(spec), indent=2)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text


def load_circuit(path: str | Path) -> CircuitSpec:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise CircuitValidationError(f"{path}: not valid JSON ({exc})") from None
    return circuit_from_dict(data)
