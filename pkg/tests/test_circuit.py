import json
from itertools import combinations

import numpy as np
import pytest

from qptmpdo import channels as ch
from qptmpdo import dense
from qptmpdo.circuit import (
    Circuit,
    Gate,
    NoiseMode,
    NoisePolicy,
    attach_noise,
    circuit_unitary,
    compile_cnot,
    equal_up_to_phase,
    gate_unitary,
    inject_crosstalk,
    load_circuit,
    route_to_adjacent,
    save_circuit,
    to_cz_form,
)
from qptmpdo.errors import ConfigurationError, ParameterError, SchemaError, ShapeError
from qptmpdo.metrics import trace_distance

CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


# --- gates ------------------------------------------------------------------


def test_rx_zero_is_identity():
    np.testing.assert_allclose(gate_unitary(Gate("RX", (0,), (0.0,))), np.eye(2))


def test_cz_definition():
    np.testing.assert_allclose(gate_unitary(Gate("CZ", (0, 1))), np.diag([1, 1, 1, -1]))


def test_rzz_half_pi():
    u = gate_unitary(Gate("RZZ", (0, 1), (np.pi / 2,)))
    expected = np.diag(np.exp(1j * np.pi / 2 * np.array([1, -1, -1, 1])))
    np.testing.assert_allclose(u, expected, atol=1e-15)


@pytest.mark.parametrize("kind, pauli", [("RX", ch.X), ("RY", ch.Y), ("RZ", ch.Z)])
def test_rotation_convention(kind, pauli):
    t = 0.37
    expected = np.cos(t) * np.eye(2) + 1j * np.sin(t) * pauli
    np.testing.assert_allclose(gate_unitary(Gate(kind, (0,), (t,))), expected, atol=1e-15)


@pytest.mark.parametrize(
    "kind, qubits, params",
    [("RX", (0,), ()), ("CZ", (0,), ()), ("H", (0, 1), ()), ("CZ", (1, 1), ()), ("FOO", (0,), ())],
)
def test_gate_validation(kind, qubits, params):
    with pytest.raises(ParameterError):
        Gate(kind, qubits, params)


def test_custom_unitary_shape_checked():
    with pytest.raises(ShapeError):
        Gate("CustomUnitary", (0,), matrix=np.eye(4))


def test_gate_aliases():
    assert Gate("cx", (0, 1)).kind == "CNOT"


def test_circuit_rejects_out_of_range_gate():
    with pytest.raises(ParameterError):
        Circuit(2, (Gate("H", (2,)),))


# --- CNOT compilation ---------------------------------------------------------


def test_compile_without_cnot_is_unchanged():
    c = Circuit(2, (Gate("H", (0,)), Gate("CZ", (0, 1))))
    assert compile_cnot(c).gates == c.gates


def test_compile_single_cnot():
    out = compile_cnot(Circuit(2, (Gate("CNOT", (0, 1)),)))
    assert [g.kind for g in out.gates] == ["RY", "CZ", "RY"]
    assert equal_up_to_phase(circuit_unitary(out), CNOT, atol=1e-12)


@pytest.mark.parametrize("control, target", [(0, 1), (1, 0)])
def test_compile_cnot_both_directions(control, target):
    c = Circuit(2, (Gate("CNOT", (control, target)),))
    assert equal_up_to_phase(circuit_unitary(compile_cnot(c)), circuit_unitary(c), atol=1e-12)


def test_compile_ghz_state_unchanged():
    c = Circuit(4, (Gate("H", (0,)),) + tuple(Gate("CNOT", (q, q + 1)) for q in range(3)))
    a = dense.simulate_dense(c).rho
    b = dense.simulate_dense(compile_cnot(c)).rho
    assert np.linalg.norm(a - b) <= 1e-12


@pytest.mark.parametrize(
    "gate",
    [Gate("RZZ", (0, 1), (0.7,)), Gate("CP", (0, 1), (1.1,)), Gate("SWAP", (0, 1)), Gate("CNOT", (1, 0))],
)
def test_to_cz_form_preserves_unitary(gate):
    c = Circuit(2, (gate,))
    out = to_cz_form(c)
    assert {g.kind for g in out.gates if g.is_two_qubit} == {"CZ"}
    assert equal_up_to_phase(circuit_unitary(out), circuit_unitary(c), atol=1e-12)


def test_to_cz_form_carries_parameter_bookkeeping():
    out = to_cz_form(Circuit(2, (Gate("RZZ", (0, 1), (0.5,), param_index=3, param_scale=0.5),)))
    trainable = [g for g in out.gates if g.param_index is not None]
    assert len(trainable) == 1
    assert trainable[0].kind == "RZ" and trainable[0].param_index == 3 and trainable[0].param_scale == 0.5


# --- routing ------------------------------------------------------------------


def test_adjacent_gate_not_routed():
    c = Circuit(4, (Gate("CZ", (2, 3)),))
    assert route_to_adjacent(c).gates == c.gates


def test_distance_three_routing_count():
    out = route_to_adjacent(Circuit(4, (Gate("CZ", (0, 3)),)))
    kinds = [g.kind for g in out.gates]
    assert kinds == ["SWAP", "SWAP", "CZ", "SWAP", "SWAP"]
    assert all(abs(g.qubits[0] - g.qubits[1]) == 1 for g in out.gates)


def test_routing_preserves_fully_connected_layer():
    gates = tuple(Gate("H", (q,)) for q in range(5))
    gates += tuple(Gate("RZZ", (a, b), (0.1 * (a + 1) + 0.07 * b,)) for a, b in combinations(range(5), 2))
    c = Circuit(5, gates)
    a = dense.simulate_dense(c).rho
    b = dense.simulate_dense(route_to_adjacent(c)).rho
    assert trace_distance(a, b) <= 1e-10


# --- crosstalk ----------------------------------------------------------------


def test_no_crosstalk_without_neighbours():
    out = inject_crosstalk(Circuit(2, (Gate("CZ", (0, 1)),)), seed=1)
    assert len(out) == 1


def test_crosstalk_on_chain_neighbours():
    out = inject_crosstalk(Circuit(4, (Gate("CZ", (1, 2)),)), seed=1)
    extra = out.gates[1:]
    assert [g.kind for g in extra] == ["RZ", "RZ"]
    assert sorted(g.qubits[0] for g in extra) == [0, 3]


def test_crosstalk_default_range():
    c = Circuit(3, tuple(Gate("CZ", (0, 1)) for _ in range(200)))
    angles = [g.params[0] for g in inject_crosstalk(c, seed=3).gates if g.kind == "RZ"]
    assert len(angles) == 200
    assert min(angles) > 1e-5 * np.pi and max(angles) <= 1e-3 * np.pi


def test_crosstalk_deterministic():
    c = Circuit(4, (Gate("CZ", (1, 2)), Gate("CZ", (0, 1))))
    a = [g.params for g in inject_crosstalk(c, 9).gates]
    b = [g.params for g in inject_crosstalk(c, 9).gates]
    assert a == b


def test_crosstalk_rejects_bad_range():
    with pytest.raises(ParameterError):
        inject_crosstalk(Circuit(2), 0, (1e-3, 1e-5))


# --- noise attachment -----------------------------------------------------------


CZ_CIRCUIT = Circuit(2, (Gate("CZ", (0, 1)),))


def test_ideal_policy_unchanged():
    assert attach_noise(CZ_CIRCUIT, NoisePolicy.ideal()) is CZ_CIRCUIT


def test_unified_noise_on_target_only():
    out = attach_noise(CZ_CIRCUIT, NoisePolicy(NoiseMode.UNIFIED, p2=0.1))
    expected = ch.tensor(ch.identity_channel(1), ch.depolarizing(0.1))
    np.testing.assert_allclose(out.gates[0].noise.operators, expected.operators)


def test_general_noise_on_both_lines(rng):
    pol = NoisePolicy(NoiseMode.GENERAL, p2=0.1, t1=20e-6, t2=25e-6)
    noise = attach_noise(CZ_CIRCUIT, pol).gates[0].noise
    local = ch.compose(ch.thermal_relaxation(20e-6, 25e-6, pol.duration_2q), ch.depolarizing(0.1))
    r0, r1 = (np.diag(rng.dirichlet([1, 1])).astype(complex) for _ in range(2))
    np.testing.assert_allclose(
        noise.apply(np.kron(r0, r1)), np.kron(local.apply(r0), local.apply(r1)), atol=1e-14
    )


def test_spam_attached():
    out = attach_noise(CZ_CIRCUIT, NoisePolicy(NoiseMode.GENERAL, p_meas=0.042, p_prep=0.01))
    assert set(out.measurement) == {0, 1} and set(out.preparation) == {0, 1}
    np.testing.assert_allclose(out.measurement[0].apply(np.diag([1.0, 0.0])), np.diag([0.958, 0.042]))


def test_qpt_missing_record_names_gate():
    pol = NoisePolicy(NoiseMode.QPT, gateset={})
    with pytest.raises(ConfigurationError, match=r"CZ on qubits \(0, 1\)"):
        attach_noise(CZ_CIRCUIT, pol)


def test_qpt_reversed_pair_lookup():
    noisy = ch.compose(ch.unitary_channel(gate_unitary(Gate("CZ", (0, 1)))), ch.tensor(ch.identity_channel(1), ch.amplitude_damping(0.2)))
    pol = NoisePolicy(NoiseMode.QPT, gateset={("CZ", (0, 1)): noisy})
    flip = (Gate("RX", (0,), (np.pi / 2,)), Gate("RX", (1,), (np.pi / 2,)))
    out = attach_noise(Circuit(2, flip + (Gate("CZ", (1, 0)),)), pol)
    probs = dense.simulate_dense(out).probabilities
    # damping acts on qubit 1 whichever way the gate is written
    np.testing.assert_allclose(probs, [0, 0, 0.2, 0.8], atol=1e-14)


# --- serialization --------------------------------------------------------------


def test_circuit_json_roundtrip(tmp_path):
    c = Circuit(3, (Gate("H", (0,)), Gate("RZZ", (0, 2), (0.25,)), Gate("CustomUnitary", (1,), matrix=ch.Y)), seed=5)
    path = tmp_path / "c.json"
    save_circuit(c, path)
    back = load_circuit(path)
    assert back.n_qubits == 3 and back.seed == 5
    np.testing.assert_allclose(circuit_unitary(back), circuit_unitary(c))


def test_circuit_schema_error(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"n_qubits": 2}))
    with pytest.raises(SchemaError):
        load_circuit(path)
