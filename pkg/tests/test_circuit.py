import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from w_expander import bounds
from w_expander.circuit import (
    CircuitSpec,
    Element,
    bs,
    build_hm,
    build_lossy,
    build_optimal,
    circuit_from_dict,
    circuit_to_dict,
    compile_circuit,
    dump_circuit,
    extract_coefficients,
    load_circuit,
    loss,
    pdbs,
    phase_shifter,
    waveplate,
)
from w_expander.errors import CircuitValidationError
from w_expander.fock_engine import check_unitary


def _spec(elements, n=1, width=3, outputs=(1, 2)):
    return CircuitSpec(n=n, width=width, elements=tuple(elements), output_modes=outputs)


def test_identity_beamsplitter_is_identity():
    c = compile_circuit(_spec([bs(1, 2, T=1.0)]))
    assert np.allclose(c.unitary.matrix, np.eye(6))


def test_balanced_bs_block():
    c = compile_circuit(_spec([bs(1, 2, T=0.5)], width=2))
    s = 1 / math.sqrt(2)
    U = c.unitary.matrix
    assert U[0, 0] == pytest.approx(s)
    assert U[2, 0] == pytest.approx(1j * s)
    assert U[1, 1] == pytest.approx(s)
    assert U[0, 1] == 0


def test_pdbs_acts_per_polarization():
    U = compile_circuit(_spec([pdbs(1, 2, T_H=1.0, T_V=0.0)], width=2)).unitary.matrix
    assert U[0, 0] == pytest.approx(1)
    assert abs(U[3, 1]) == pytest.approx(1)


def test_elements_apply_in_order():
    a, b = bs(1, 2, T=0.3), phase_shifter(1, 1.0, "H")
    U_ab = compile_circuit(_spec([a, b])).unitary.matrix
    U_a = compile_circuit(_spec([a])).unitary.matrix
    U_b = compile_circuit(_spec([b])).unitary.matrix
    assert np.allclose(U_ab, U_b @ U_a)
    assert not np.allclose(U_ab, U_a @ U_b)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 3), st.integers(1, 3), st.floats(0, 1)), min_size=3, max_size=8))
def test_compile_is_associative(raw):
    els = [bs(a, b, T=t) if a != b else phase_shifter(a, 2 * math.pi * t % (2 * math.pi)) for a, b, t in raw]
    k = len(els) // 2
    whole = compile_circuit(_spec(els)).unitary.matrix
    split = compile_circuit(_spec(els[k:])).unitary.matrix @ compile_circuit(_spec(els[:k])).unitary.matrix
    assert np.allclose(whole, split, atol=1e-13)
    assert check_unitary(whole, 1e-12) == []


def test_loss_adds_auxiliary_mode():
    spec = _spec([loss(1, 0.5), loss(2, 0.25, 1.0)])
    c = compile_circuit(spec)
    assert spec.n_aux == 2
    assert c.L == 5
    co = extract_coefficients(c)
    assert abs(co.beta_H[0]) ** 2 == pytest.approx(0.5)
    assert abs(co.alpha_H[1]) ** 2 == pytest.approx(0.25)
    assert abs(co.alpha_V[1]) == 0


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8])
def test_optimal_coefficient_magnitudes(n):
    p1 = bounds.P1_opt_of(n)
    co = extract_coefficients(compile_circuit(build_optimal(n)))
    aH = np.abs(co.alpha_H[: n + 1]) ** 2
    assert aH == pytest.approx([p1] + [(1 - p1) / n] * n, abs=1e-14)
    assert np.abs(co.beta_H[: n + 1]) ** 2 == pytest.approx([1 - p1] + [p1 / n] * n, abs=1e-14)
    assert np.abs(co.gamma_V[: n + 1]) ** 2 == pytest.approx(aH, abs=1e-14)
    assert np.abs(co.alpha_V).max() < 1e-15
    assert np.abs(co.beta_V).max() < 1e-15
    assert np.abs(co.gamma_H).max() < 1e-15


@pytest.mark.parametrize("n", [1, 2, 4])
def test_lossy_coefficient_magnitudes(n):
    co = extract_coefficients(compile_circuit(build_lossy(n)))
    S = 1 - (n + 1) ** -2
    assert np.abs(co.alpha_H[: n + 1]) ** 2 == pytest.approx([S / (n + 1)] * (n + 1), abs=1e-14)


def test_known_small_circuits():
    opt2 = build_optimal(2)
    kinds = [e.kind.value for e in opt2.elements]
    assert kinds.count("pdbs") == 1 and kinds.count("bs") == 1
    assert [e for e in opt2.elements if e.kind.value == "bs"][0].params["T"] == pytest.approx(0.5)
    lossy1 = build_lossy(1)
    assert lossy1.elements[0].params["T_H"] == pytest.approx(0.25)
    assert lossy1.elements[1].params["T"] == pytest.approx(0.5)


@pytest.mark.parametrize("builder", [lambda: build_optimal(3), lambda: build_hm(3, 2), lambda: build_lossy(2)])
def test_json_round_trip(builder, tmp_path):
    spec = builder()
    path = tmp_path / "c.json"
    dump_circuit(spec, path)
    back = load_circuit(path)
    assert back == spec
    assert np.array_equal(compile_circuit(back).unitary.matrix, compile_circuit(spec).unitary.matrix)


def test_waveplate_complex_entries_round_trip():
    s = 1 / math.sqrt(2)
    spec = _spec([waveplate(1, [[s, 1j * s], [1j * s, s]])])
    data = json.loads(json.dumps(circuit_to_dict(spec)))
    assert np.allclose(compile_circuit(circuit_from_dict(data)).unitary.matrix, compile_circuit(spec).unitary.matrix)


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d.update(extra=1),
        lambda d: d["elements"][0].update(colour="red"),
        lambda d: d["elements"][0]["params"].update(T_D=0.5),
        lambda d: d["elements"][0].update(kind="mirror"),
        lambda d: d.pop("output_modes"),
        lambda d: d["elements"][0]["params"].update(T_H=1.5),
    ],
)
def test_schema_rejects_bad_documents(mutate):
    data = circuit_to_dict(build_optimal(1))
    mutate(data)
    with pytest.raises(CircuitValidationError):
        circuit_from_dict(data)


def test_load_rejects_non_json(tmp_path):
    p = tmp_path / "x.json"
    p.write_text("{not json")
    with pytest.raises(CircuitValidationError):
        load_circuit(p)


@pytest.mark.parametrize(
    "factory",
    [
        lambda: bs(1, 1, T=0.5),
        lambda: bs(0, 1, T=0.5),
        lambda: pdbs(1, 2, T_H=-0.1, T_V=0.5),
        lambda: phase_shifter(1, 2 * math.pi),
        lambda: phase_shifter(1, 0.1, "D"),
        lambda: waveplate(1, [[1, 1], [0, 1]]),
        lambda: Element("bs", (1, 2), {}),
    ],
)
def test_invalid_elements(factory):
    with pytest.raises(CircuitValidationError):
        factory()


def test_spec_validation():
    with pytest.raises(CircuitValidationError):
        CircuitSpec(n=1, width=2, elements=(bs(1, 3, T=0.5),), output_modes=(1, 2))
    with pytest.raises(CircuitValidationError):
        CircuitSpec(n=2, width=3, elements=(), output_modes=(1, 1, 2))
    with pytest.raises(CircuitValidationError):
        CircuitSpec(n=1, width=2, elements=(), output_modes=(1, 3))
