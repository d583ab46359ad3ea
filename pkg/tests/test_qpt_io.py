import json
import warnings

import numpy as np
import pytest

from qptmpdo import channels as ch
from qptmpdo import qpt_io
from qptmpdo.circuit import Gate, NoiseMode, gate_unitary
from qptmpdo.errors import NonCPError, SchemaError, ValidationError

from conftest import random_density

CZ = gate_unitary(Gate("CZ", (0, 1)))


@pytest.fixture
def depolarized_cz_record():
    return qpt_io.record_from_channel("CZ", (0, 1), qpt_io.depolarized_gate(CZ, 0.05), "2024-01-01T00:00:00+00:00")


# --- records and files ------------------------------------------------------------


def test_identity_record_loads_and_converts(tmp_path):
    path = tmp_path / "id.json"
    qpt_io.save_qpt_file([qpt_io.identity_record()], path)
    (rec,) = qpt_io.load_qpt_file(path)
    k = qpt_io.build_noisy_gateset([rec])[("I", (0,))]
    assert k.rank == 1
    np.testing.assert_allclose(k.operators[0], np.eye(2), atol=1e-15)


def test_non_hermitian_record_names_record(tmp_path):
    rec = qpt_io.identity_record((3,), "X90")
    rec.chi[0, 1] = 0.5
    path = tmp_path / "bad.json"
    qpt_io.save_qpt_file([rec], path)
    with pytest.raises(ValidationError, match=r"X90\[3\]"):
        qpt_io.load_qpt_file(path)


def test_save_load_bit_exact(tmp_path, depolarized_cz_record):
    path = tmp_path / "cz.json"
    qpt_io.save_qpt_file([depolarized_cz_record], path)
    (back,) = qpt_io.load_qpt_file(path)
    np.testing.assert_array_equal(back.chi, depolarized_cz_record.chi)
    assert back.timestamp == depolarized_cz_record.timestamp
    assert back.qubits == (0, 1) and back.gate_label == "CZ"


@pytest.mark.parametrize(
    "text",
    ["{not json", json.dumps({"schema_version": 1}), json.dumps({"schema_version": 1, "records": [{"gate_label": "CZ"}]})],
)
def test_malformed_files(tmp_path, text):
    path = tmp_path / "f.json"
    path.write_text(text)
    with pytest.raises(SchemaError):
        qpt_io.load_qpt_file(path)


def test_record_shape_check():
    rec = qpt_io.QptRecord("CZ", (0, 1), np.eye(4))
    with pytest.raises(ValidationError, match="16x16"):
        rec.check()


def test_record_basis_check():
    rec = qpt_io.QptRecord("I", (0,), np.eye(4) / 4, basis_tag="gell-mann")
    with pytest.raises(ValidationError, match="basis_tag"):
        rec.check()


# --- gateset construction ----------------------------------------------------------


def test_depolarized_cz_gateset(rng, depolarized_cz_record):
    k = qpt_io.build_noisy_gateset([depolarized_cz_record])[("CZ", (0, 1))]
    assert k.rank == 4
    truth = qpt_io.depolarized_gate(CZ, 0.05)
    for _ in range(5):
        rho = random_density(rng, 4)
        assert np.linalg.norm(k.apply(rho) - truth.apply(rho)) <= 1e-8


def test_depolarized_cz_rank_cutoff(depolarized_cz_record):
    k = qpt_io.build_noisy_gateset([depolarized_cz_record], rank_cutoff=2)[("CZ", (0, 1))]
    assert k.rank == 2
    assert ch.validate_cptp(k, 1e-6)
    assert k.pruned_weight > 0


def test_non_cp_record_lists_eigenvalues():
    rec = qpt_io.identity_record((0,))
    rec.chi[1, 1] = -0.01
    with pytest.raises(NonCPError, match=r"I\[0\].*-"):
        qpt_io.build_noisy_gateset([rec])


def test_non_trace_preserving_record_rejected():
    rec = qpt_io.QptRecord("I", (0,), np.diag([0.5, 0, 0, 0]))
    with pytest.raises(ValidationError, match="trace preserving"):
        qpt_io.build_noisy_gateset([rec])


# --- calibration -------------------------------------------------------------------


def test_bundled_calibration_values():
    cal = qpt_io.bundled_calibration()
    q = cal.qubit("Q108")
    assert (q.t1_us, q.t2_us, q.frequency_ghz) == (17.01, 22.58, 4.294)
    assert cal.pair_fidelity("Q109", "Q108") == 0.957


def test_readout_fidelity_to_flip_probability():
    pol = qpt_io.standard_policy_from_calibration(qpt_io.bundled_calibration())
    assert pol.mode is NoiseMode.GENERAL
    assert pol.p_meas[0] == pytest.approx(0.042, abs=1e-12)
    assert pol.t1[0] == pytest.approx(17.01e-6)
    assert pol.p2_pairs[frozenset((0, 1))] == pytest.approx(4 / 3 * (1 - 0.957))


def test_qubit_order_selects_sites():
    pol = qpt_io.standard_policy_from_calibration(qpt_io.bundled_calibration(), qubit_order=["Q110", "Q111"])
    assert pol.t1 == {0: pytest.approx(26.48e-6), 1: pytest.approx(38.03e-6)}
    assert set(pol.p2_pairs) == {frozenset((0, 1))}


def test_empty_calibration_warns():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        pol = qpt_io.standard_policy_from_calibration(qpt_io.DeviceCalibration())
    assert pol.mode is NoiseMode.IDEAL
    assert any("ideal" in str(w.message) for w in caught)


def test_calibration_missing_field(tmp_path):
    path = tmp_path / "cal.json"
    path.write_text(json.dumps({"schema_version": 1, "qubits": [{"name": "Q0", "t1_us": 10.0}]}))
    with pytest.raises(SchemaError):
        qpt_io.load_calibration(path)


def test_calibration_roundtrip(tmp_path):
    cal = qpt_io.bundled_calibration()
    qpt_io.save_calibration(cal, tmp_path / "cal.json")
    back = qpt_io.load_calibration(tmp_path / "cal.json")
    assert back == cal


@pytest.mark.parametrize("f, p", [(1.0, 0.0), (0.25, 1.0), (0.0, 1.0), (0.97, 0.04)])
def test_fidelity_to_depolarizing(f, p):
    assert qpt_io.fidelity_to_depolarizing(f) == pytest.approx(p)


# --- synthetic device ----------------------------------------------------------------


def test_synthetic_device_is_seeded():
    a, b = qpt_io.synthetic_device(4, 3), qpt_io.synthetic_device(4, 3)
    for key in a.cz_channels:
        np.testing.assert_array_equal(a.cz_channels[key].operators, b.cz_channels[key].operators)
    assert a.p_meas == b.p_meas


def test_synthetic_cz_is_nontrivial_and_cptp():
    chan = qpt_io.synthetic_cz_channel(np.random.default_rng(0))
    assert ch.validate_cptp(chan, 1e-10)
    f = ch.average_gate_fidelity(chan, CZ)
    assert 0.9 < f < 0.995


def test_synthetic_records_roundtrip_to_channels(rng):
    dev = qpt_io.synthetic_device(3, 1)
    gs = qpt_io.build_noisy_gateset(dev.records("t"))
    for pair, truth in dev.cz_channels.items():
        rho = random_density(rng, 4)
        assert np.linalg.norm(gs[("CZ", pair)].apply(rho) - truth.apply(rho)) <= 1e-10
