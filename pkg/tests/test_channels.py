import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qptmpdo import channels as ch
from qptmpdo import qpt_io
from qptmpdo.circuit import Gate, gate_unitary
from qptmpdo.errors import NonCPError, ParameterError, RepresentationError, ShapeError, UnphysicalParametersError

from conftest import random_density

KET0 = np.diag([1.0, 0.0]).astype(complex)
KET1 = np.diag([0.0, 1.0]).astype(complex)
CZ = gate_unitary(Gate("CZ", (0, 1)))


def depolarizing_action(rho, p):
    return (1 - p) * rho + p * np.trace(rho) * np.eye(2) / 2


def equal_up_to_phase(a, b, atol=1e-10):
    overlap = np.vdot(b, a)
    return np.linalg.norm(a - overlap / abs(overlap) * b) <= atol


# --- constructors -----------------------------------------------------------


def test_depolarizing_zero_is_identity():
    c = ch.depolarizing(0.0)
    assert c.rank == 1
    np.testing.assert_allclose(c.operators[0], np.eye(2))


def test_depolarizing_k0_prefactor():
    c = ch.depolarizing(0.2)
    np.testing.assert_allclose(c.operators[0], np.sqrt(0.85) * np.eye(2))


def test_depolarizing_on_ground_state():
    np.testing.assert_allclose(ch.depolarizing(0.1).apply(KET0), np.diag([0.95, 0.05]), atol=1e-15)


@pytest.mark.parametrize("p", [0.0, 0.05, 0.37, 0.5, 1.0])
def test_depolarizing_matches_mixing_form(rng, p):
    rho = random_density(rng, 2)
    assert np.linalg.norm(ch.depolarizing(p).apply(rho) - depolarizing_action(rho, p)) <= 1e-12


@pytest.mark.parametrize("ctor", [ch.depolarizing, ch.bit_flip, ch.amplitude_damping, ch.phase_damping])
@pytest.mark.parametrize("bad", [-0.1, 1.5, np.nan])
def test_probability_out_of_range(ctor, bad):
    with pytest.raises(ParameterError):
        ctor(bad)


@pytest.mark.parametrize("p, expected", [(0.0, KET0), (1.0, KET1), (0.3, np.diag([0.7, 0.3]))])
def test_bit_flip_on_ground_state(p, expected):
    np.testing.assert_allclose(ch.bit_flip(p).apply(KET0), expected, atol=1e-15)


def test_thermal_relaxation_zero_duration_is_identity(rng):
    rho = random_density(rng, 2)
    np.testing.assert_allclose(ch.thermal_relaxation(17.01, 22.58, 0.0).apply(rho), rho, atol=1e-15)


def test_thermal_relaxation_accepts_table_values():
    c = ch.thermal_relaxation(17.01e-6, 22.58e-6, 60e-9)
    assert ch.validate_cptp(c, 1e-10)


def test_thermal_relaxation_full_decay():
    out = ch.thermal_relaxation(1.0, 1.5, np.inf).apply(KET1)
    assert np.linalg.norm(out - KET0) <= 1e-6


def test_thermal_relaxation_rates():
    t1, t2, t = 10.0, 12.0, 3.0
    plus = np.full((2, 2), 0.5, dtype=complex)
    out = ch.thermal_relaxation(t1, t2, t).apply(plus)
    assert abs(out[0, 1]) == pytest.approx(0.5 * np.exp(-t / t2), rel=1e-12)
    out1 = ch.thermal_relaxation(t1, t2, t).apply(KET1)
    assert out1[1, 1].real == pytest.approx(np.exp(-t / t1), rel=1e-12)


def test_thermal_relaxation_unphysical():
    with pytest.raises(UnphysicalParametersError):
        ch.thermal_relaxation(10.0, 25.0, 1.0)


def test_kraus_shape_checked():
    with pytest.raises(ShapeError):
        ch.KrausChannel(1, np.zeros((1, 4, 4)))


def test_compose_order(rng):
    rho = random_density(rng, 2)
    a, b = ch.amplitude_damping(0.3), ch.bit_flip(0.2)
    np.testing.assert_allclose(ch.compose(a, b).apply(rho), b.apply(a.apply(rho)), atol=1e-14)


def test_tensor_product_action(rng):
    r0, r1 = random_density(rng, 2), random_density(rng, 2)
    a, b = ch.depolarizing(0.2), ch.amplitude_damping(0.4)
    out = ch.tensor(a, b).apply(np.kron(r0, r1))
    np.testing.assert_allclose(out, np.kron(a.apply(r0), b.apply(r1)), atol=1e-14)


def test_swap_qubits_relabels(rng):
    r0, r1 = random_density(rng, 2), random_density(rng, 2)
    a, b = ch.depolarizing(0.2), ch.amplitude_damping(0.4)
    out = ch.swap_qubits(ch.tensor(a, b)).apply(np.kron(r1, r0))
    np.testing.assert_allclose(out, np.kron(b.apply(r1), a.apply(r0)), atol=1e-14)


# --- representation changes -------------------------------------------------


def test_identity_chi_gives_maximally_correlated_choi():
    chi = np.zeros((4, 4))
    chi[0, 0] = 1
    choi = ch.chi_to_choi(ch.ChiMatrix(1, chi)).entries
    phi = np.array([1, 0, 0, 1])  # sqrt(d) |Phi+>
    np.testing.assert_allclose(choi, np.outer(phi, phi), atol=1e-15)


def test_pauli_x_chi_gives_vec_x_projector():
    chi = np.zeros((4, 4))
    chi[1, 1] = 1
    choi = ch.chi_to_choi(ch.ChiMatrix(1, chi)).entries
    v = ch.vec(ch.X)
    np.testing.assert_allclose(choi, np.outer(v, v.conj()), atol=1e-15)


@pytest.mark.parametrize("p", [0.0, 0.1, 0.6])
def test_depolarizing_chi_roundtrip_choi(p):
    c = ch.depolarizing(p)
    via_chi = ch.chi_to_choi(ch.kraus_to_chi(c)).entries
    assert np.linalg.norm(via_chi - ch.kraus_to_choi(c).entries) <= 1e-10


def test_depolarizing_chi_is_diagonal():
    chi = ch.kraus_to_chi(ch.depolarizing(0.2)).entries
    np.testing.assert_allclose(np.diag(chi).real, [0.85, 0.05, 0.05, 0.05], atol=1e-15)
    assert np.linalg.norm(chi - np.diag(np.diag(chi))) <= 1e-15


def test_identity_kraus_choi():
    choi = ch.kraus_to_choi(ch.identity_channel()).entries
    phi = np.array([1, 0, 0, 1])
    np.testing.assert_allclose(choi, np.outer(phi, phi))


def test_full_depolarizing_choi_is_half_identity():
    np.testing.assert_allclose(ch.kraus_to_choi(ch.depolarizing(1.0)).entries, np.eye(4) / 2, atol=1e-15)


def test_chi_to_choi_rejects_non_hermitian():
    chi = np.zeros((4, 4), dtype=complex)
    chi[0, 1] = 1
    with pytest.raises(RepresentationError):
        ch.chi_to_choi(ch.ChiMatrix(1, chi))


def test_chi_shape_checked():
    with pytest.raises(ShapeError):
        ch.ChiMatrix(1, np.zeros((3, 3)))


def test_choi_to_kraus_identity():
    k = ch.choi_to_kraus(ch.kraus_to_choi(ch.identity_channel()))
    assert k.rank == 1
    assert equal_up_to_phase(k.operators[0], np.eye(2))


def test_choi_to_kraus_depolarizing(rng):
    k = ch.choi_to_kraus(ch.kraus_to_choi(ch.depolarizing(0.2)))
    assert k.rank == 4
    for _ in range(5):
        rho = random_density(rng, 2)
        assert np.linalg.norm(k.apply(rho) - depolarizing_action(rho, 0.2)) <= 1e-10


def test_rank_cutoff_pruned_weight():
    k = ch.choi_to_kraus(ch.kraus_to_choi(ch.depolarizing(0.01)), rank_cutoff=1)
    assert k.rank == 1
    assert equal_up_to_phase(k.operators[0], np.eye(2), atol=1e-12)
    # tail of the Choi spectrum over d: 3 * (2 * p / 4) / 2
    assert k.pruned_weight == pytest.approx(0.0075, rel=1e-12)
    assert ch.validate_cptp(k, 1e-12)


def test_rank_cutoff_restores_completeness_after_gate():
    # Pauli noise after CZ: the kept pair is chosen inside a degenerate cluster
    k = ch.choi_to_kraus(ch.kraus_to_choi(qpt_io.depolarized_gate(CZ, 0.05)), rank_cutoff=2)
    assert k.rank == 2
    assert ch.validate_cptp(k, 1e-6)


def test_choi_to_kraus_clips_small_negative():
    choi = ch.kraus_to_choi(ch.identity_channel()).entries - 5e-7 * np.eye(4)
    k = ch.choi_to_kraus(ch.ChoiMatrix(1, choi))
    assert k.rank == 1


def test_choi_to_kraus_rejects_non_cp():
    choi = ch.kraus_to_choi(ch.identity_channel()).entries - 1e-3 * np.eye(4)
    with pytest.raises(NonCPError, match="eigenvalues"):
        ch.choi_to_kraus(ch.ChoiMatrix(1, choi))


@pytest.mark.parametrize("n_qubits, rank", [(1, 2), (1, 4), (2, 3), (2, 16)])
def test_random_channel_roundtrip_action(rng, n_qubits, rank):
    c = ch.random_channel(n_qubits, rank, rng)
    back = ch.chi_to_kraus(ch.kraus_to_chi(c))
    d = 2**n_qubits
    for _ in range(10):
        rho = random_density(rng, d)
        assert np.linalg.norm(back.apply(rho) - c.apply(rho)) <= 1e-10


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 2), st.integers(1, 8))
def test_choi_to_kraus_output_is_cptp(seed, n_qubits, rank):
    c = ch.random_channel(n_qubits, rank, np.random.default_rng(seed))
    assert ch.validate_cptp(ch.choi_to_kraus(ch.kraus_to_choi(c)), 1e-8)


def test_minimal_kraus_reduces_rank():
    c = ch.compose(ch.depolarizing(0.2), ch.depolarizing(0.3), simplify=False)
    assert c.rank == 16
    assert ch.minimal_kraus(c).rank == 4


# --- validation and noise factoring -----------------------------------------


def test_validate_cptp_depolarizing():
    rep = ch.validate_cptp(ch.depolarizing(0.37), 1e-10)
    assert rep.passed and rep.defect <= 1e-10


def test_validate_cptp_incomplete_set():
    rep = ch.validate_cptp(ch.KrausChannel(1, np.sqrt(0.5) * np.eye(2)[None]), 1e-10)
    assert not rep.passed
    assert rep.spectral_defect == pytest.approx(0.5)
    assert rep.defect == pytest.approx(0.5 * np.sqrt(2))


def test_factor_noise_ideal_gate():
    u = gate_unitary(Gate("RX", (0,), (0.3,)))
    nt = ch.factor_noise(ch.unitary_channel(u), u)
    assert nt.rank == 1
    np.testing.assert_allclose(nt.slices[0], np.eye(2), atol=1e-15)


def test_factor_noise_depolarized_x():
    c = ch.compose(ch.unitary_channel(ch.X), ch.depolarizing(0.2))
    nt = ch.factor_noise(c, ch.X)
    for s, pauli, w in zip(nt.slices, (ch.I2, ch.X, ch.Y, ch.Z), (0.85, 0.05, 0.05, 0.05)):
        np.testing.assert_allclose(s, np.sqrt(w) * pauli, atol=1e-15)
    assert nt.tensor.shape == (2, 2, 4)


def test_factor_noise_qpt_cz_leading_slice_near_identity():
    rec = qpt_io.record_from_channel("CZ", (0, 1), qpt_io.depolarized_gate(CZ, 0.01))
    k = qpt_io.build_noisy_gateset([rec])[("CZ", (0, 1))]
    lead = ch.factor_noise(k, CZ).slices[0]
    phase = lead[0, 0] / abs(lead[0, 0])
    assert np.linalg.norm(lead / phase - np.eye(4), 2) <= 0.01


def test_factor_noise_rejects_non_unitary():
    with pytest.raises(ParameterError):
        ch.factor_noise(ch.depolarizing(0.1), np.diag([1.0, 0.5]))


def test_average_gate_fidelity_of_depolarizing():
    # F = 1 - p/2 for single-qubit depolarizing
    assert ch.average_gate_fidelity(ch.depolarizing(0.1), np.eye(2)) == pytest.approx(0.95)
