"""Matrix product density operators.

Each qubit carries a rank-4 site tensor ``T[l, p, n, r]``: left inner bond,
physical index (extent 2), noise bond and right inner bond. The density
matrix is

    rho = sum_{n_0..n_{N-1}} |T(n)><T(n)|

where ``|T(n)>`` is the matrix product state obtained by fixing every noise
index; inner bonds of the ket and bra copies are contracted separately.
Because the state is stored in this locally purified form, every
reconstructed ``rho`` is positive semidefinite by construction.

Noise channels enlarge the noise bond of the site they act on by their Kraus
rank; two-qubit gates enlarge the inner bond between their sites. Both are
truncated by SVD: the noise bond locally (``kappa``), inner bonds after a
left-to-right QR sweep followed by a right-to-left SVD sweep (``chi``).
"""

from __future__ import annotations

import copy
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .channels import KrausChannel, SWAP, pauli_string
from .circuit import Circuit, gate_unitary
from .errors import ParameterError, ResourceError, RoutingError, ShapeError

log = logging.getLogger(__name__)

DENSE_GUARD = 12
STATE_DUMP_VERSION = 1


@dataclass
class TruncationConfig:
    """Bond caps. ``None`` means uncapped.

    ``compress_noise`` losslessly shrinks noise and inner bonds to their
    numerical rank after every noisy step, dropping only singular values below
    ``sv_floor`` relative to the largest.
    """

    chi_max: int | None = None
    kappa_max: int | None = None
    sv_floor: float = 1e-12
    compress_noise: bool = True

    def __post_init__(self):
        for name in ("chi_max", "kappa_max"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ParameterError(f"{name} must be >= 1, got {v}")


@dataclass(frozen=True)
class TruncationEvent:
    kind: str  # "noise" or "inner"
    site: int
    error: float
    kept: int
    discarded: int


@dataclass
class MpdoState:
    sites: list[np.ndarray]
    trunc: TruncationConfig = field(default_factory=TruncationConfig)
    log: list[TruncationEvent] = field(default_factory=list)

    def __post_init__(self):
        for i, t in enumerate(self.sites):
            if t.ndim != 4 or t.shape[1] != 2:
                raise ShapeError(f"site {i} must have shape (l, 2, n, r), got {t.shape}")
        for i in range(len(self.sites) - 1):
            if self.sites[i].shape[3] != self.sites[i + 1].shape[0]:
                raise ShapeError(f"bond mismatch between sites {i} and {i + 1}")
        if self.sites and (self.sites[0].shape[0] != 1 or self.sites[-1].shape[3] != 1):
            raise ShapeError("boundary bonds must have extent 1")

    @property
    def n_qubits(self) -> int:
        return len(self.sites)

    @property
    def bond_dims(self) -> list[int]:
        return [t.shape[3] for t in self.sites[:-1]]

    @property
    def noise_dims(self) -> list[int]:
        return [t.shape[2] for t in self.sites]

    @property
    def truncation_error(self) -> float:
        """Sum of the reported per-step truncation errors."""
        return float(sum(e.error for e in self.log))

    def copy(self) -> "MpdoState":
        return MpdoState([t.copy() for t in self.sites], copy.copy(self.trunc), list(self.log))

    def to_dict(self) -> dict:
        return {
            "version": STATE_DUMP_VERSION,
            "sites": [
                {"shape": list(t.shape), "re": t.real.ravel().tolist(), "im": t.imag.ravel().tolist()}
                for t in self.sites
            ],
        }

    @classmethod
    def from_dict(cls, data: dict, trunc: TruncationConfig | None = None) -> "MpdoState":
        if data.get("version") != STATE_DUMP_VERSION:
            raise ParameterError(f"unsupported state dump version {data.get('version')}")
        sites = [
            (np.array(s["re"]) + 1j * np.array(s["im"])).reshape(s["shape"]) for s in data["sites"]
        ]
        return cls(sites, trunc or TruncationConfig())

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)


def init_product_state(
    n: int, local_states=None, trunc: TruncationConfig | None = None, tol: float = 1e-10
) -> MpdoState:
    """Product state ``|psi_0> (x) ... (x) |psi_{n-1}>`` (default all ``|0>``)."""
    if n < 1:
        raise ParameterError("need at least one qubit")
    if local_states is None:
        local_states = [np.array([1.0, 0.0])] * n
    if len(local_states) != n:
        raise ParameterError(f"expected {n} local states, got {len(local_states)}")
    sites = []
    for i, psi in enumerate(local_states):
        psi = np.asarray(psi, dtype=np.complex128).reshape(-1)
        if psi.shape != (2,):
            raise ShapeError(f"local state {i} must have 2 amplitudes")
        if abs(np.vdot(psi, psi).real - 1.0) > tol:
            raise ParameterError(f"local state {i} is not normalized")
        sites.append(psi.reshape(1, 2, 1, 1))
    return MpdoState(sites, trunc or TruncationConfig())


def _gate_stack(ideal_gate: np.ndarray, channel: KrausChannel | None) -> np.ndarray:
    u = np.asarray(ideal_gate, dtype=np.complex128)
    if channel is None:
        return u[None]
    if channel.dim != u.shape[0]:
        raise ShapeError(f"channel dimension {channel.dim} does not match gate dimension {u.shape[0]}")
    return channel.operators @ u


def truncate_noise_bond(state: MpdoState, site: int, kappa: int | None, rel_floor: float = 0.0) -> float:
    """Cap the noise bond of ``site`` at ``kappa`` (in place).

    The site is viewed as a ``(l*p*r) x n`` matrix ``U S V^H``; ``U' S`` is
    kept, which leaves the local density ``U' S^2 U'^H`` unchanged up to the
    discarded singular values. Returns the Frobenius error
    ``sqrt(sum of squared discarded singular values)``.
    """
    if kappa is not None and kappa < 1:
        raise ParameterError(f"kappa must be >= 1, got {kappa}")
    t = state.sites[site]
    l, p, n, r = t.shape
    if (kappa is None or n <= kappa) and rel_floor <= 0:
        return 0.0
    m = t.transpose(0, 1, 3, 2).reshape(l * p * r, n)
    u, s, _, err = linalg.truncated_svd(m, kappa, rel_floor=rel_floor)
    k = len(s)
    state.sites[site] = (u * s[None, :]).reshape(l, p, r, k).transpose(0, 1, 3, 2)
    state.log.append(TruncationEvent("noise", site, err, k, n - k))
    return err


def move_center(state: MpdoState, site: int) -> MpdoState:
    """Bring the chain into mixed canonical form centred on ``site`` (in place).

    Sites left of ``site`` become left-orthonormal and sites right of it
    right-orthonormal, treating the noise leg as part of the physical leg.
    Local SVDs of the centre site then see the global weights.
    """
    sites = state.sites
    for i in range(site):
        l, p, n, r = sites[i].shape
        q, rr = linalg.qr(sites[i].reshape(l * p * n, r))
        sites[i] = q.reshape(l, p, n, q.shape[1])
        sites[i + 1] = np.einsum("ab,bpnr->apnr", rr, sites[i + 1])
    for i in range(len(sites) - 1, site, -1):
        l, p, n, r = sites[i].shape
        q, rr = linalg.qr(sites[i].reshape(l, p * n * r).conj().T)
        sites[i] = q.conj().T.reshape(q.shape[1], p, n, r)
        sites[i - 1] = np.einsum("apnr,rb->apnb", sites[i - 1], rr.conj().T)
    return state


def _after_noise_growth(state: MpdoState, site: int) -> None:
    cfg = state.trunc
    l, p, n, r = state.sites[site].shape
    over_kappa = cfg.kappa_max is not None and n > cfg.kappa_max
    if over_kappa:
        # truncation is only optimal in the gauge centred on the site
        move_center(state, site)
    if over_kappa or cfg.compress_noise:
        floor = cfg.sv_floor if cfg.compress_noise else 0.0
        truncate_noise_bond(state, site, cfg.kappa_max, rel_floor=floor)


def apply_single_qubit_channel(
    state: MpdoState, site: int, ideal_gate: np.ndarray, channel: KrausChannel | None = None
) -> MpdoState:
    """Contract a (noisy) one-qubit gate into ``site``.

    The noisy gate has Kraus operators ``N_i @ ideal_gate``; the noise bond of
    the site grows by the channel rank and is then truncated if needed.
    """
    if not 0 <= site < state.n_qubits:
        raise ParameterError(f"site {site} out of range")
    g = _gate_stack(ideal_gate, channel)
    if g.shape[1:] != (2, 2):
        raise ShapeError(f"single-qubit gate must be 2x2, got {g.shape[1:]}")
    t = state.sites[site]
    l, _, n, r = t.shape
    new = np.einsum("kxp,apnr->axnkr", g, t).reshape(l, 2, n * g.shape[0], r)
    state.sites[site] = new
    if g.shape[0] > 1:
        _after_noise_growth(state, site)
    return state


def apply_two_qubit_channel(
    state: MpdoState,
    site: int,
    ideal_gate: np.ndarray,
    channel: KrausChannel | None = None,
    noise_site: int = 1,
) -> MpdoState:
    """Apply a (noisy) gate to sites ``site`` and ``site + 1``.

    ``ideal_gate`` is 4x4 with ``site`` as the more significant qubit.
    The noise index joins the noise bond of ``site + noise_site``.
    """
    i = site
    if not 0 <= i < state.n_qubits - 1:
        raise RoutingError(f"two-qubit gate needs adjacent sites (i, i+1); got i={i}")
    g = _gate_stack(ideal_gate, channel)
    if g.shape[1:] != (4, 4):
        raise ShapeError(f"two-qubit gate must be 4x4, got {g.shape[1:]}")
    k = g.shape[0]
    g = g.reshape(k, 2, 2, 2, 2)
    a, b = state.sites[i], state.sites[i + 1]
    l, n1, r = a.shape[0], a.shape[2], b.shape[3]
    n2 = b.shape[2]
    theta = np.einsum("apnm,mqor->apnqor", a, b)
    if noise_site == 1:
        theta = np.einsum("kxypq,apnqor->axnyokr", g, theta)
        rows, cols = l * 2 * n1, 2 * n2 * k * r
        left_noise, right_noise = n1, n2 * k
    else:
        theta = np.einsum("kxypq,apnqor->axnkyor", g, theta)
        rows, cols = l * 2 * n1 * k, 2 * n2 * r
        left_noise, right_noise = n1 * k, n2
    pooled = state.trunc.compress_noise and k * n1 * n2 > 1
    if pooled:
        theta = theta.reshape(l, 2, n1, 2, n2, k, r) if noise_site == 1 else (
            theta.reshape(l, 2, n1, k, 2, n2, r).transpose(0, 1, 2, 4, 5, 3, 6)
        )
        fused = _pool_noise(state, theta)
        # without a kappa cap the noise leg may sit on either site; take the smaller bond
        sides = (noise_site,) if state.trunc.kappa_max is not None else (noise_site, 1 - noise_site)
        noise_site = _split_pooled(state, i, fused, sides)
    else:
        u, s, vh, err = linalg.truncated_svd(theta.reshape(rows, cols), None, rel_floor=state.trunc.sv_floor)
        chi = len(s)
        if err > 0:
            state.log.append(TruncationEvent("inner", i, err, chi, min(rows, cols) - chi))
        state.sites[i] = (u * s[None, :]).reshape(l, 2, left_noise, chi)
        state.sites[i + 1] = vh.reshape(chi, 2, right_noise, r)
    chi = state.sites[i].shape[3]
    if k > 1 or state.trunc.kappa_max is not None:
        _after_noise_growth(state, i + noise_site)
    cap = state.trunc.chi_max
    if (cap is not None and chi > cap) or (state.trunc.compress_noise and k > 1):
        canonicalize_and_truncate_inner(state, cap)
    return state


def swap_sites(state: MpdoState, site: int) -> MpdoState:
    """Exchange the qubits on ``site`` and ``site + 1`` together with their noise legs.

    Equivalent to an ideal SWAP gate. Moving each noise leg along with its
    qubit keeps the inner bond far smaller than contracting a SWAP unitary.
    Without a noise-bond cap the two legs are instead pooled onto whichever
    site gives the smaller inner bond, which is also exact.
    """
    i = site
    if not 0 <= i < state.n_qubits - 1:
        raise RoutingError(f"swap needs adjacent sites (i, i+1); got i={i}")
    a, b = state.sites[i], state.sites[i + 1]
    l, p, n1, _ = a.shape
    _, q, n2, r = b.shape
    cap = state.trunc.chi_max
    if state.trunc.compress_noise and state.trunc.kappa_max is None and n1 * n2 > 1:
        # lossless mode: pool both noise legs on the side with the smaller bond
        theta = np.einsum("apnm,mqor->aqopnr", a, b)[:, :, :, :, :, None, :]
        _split_pooled(state, i, _pool_noise(state, theta), (1, 0))
    else:
        theta = np.einsum("apnm,mqor->aqopnr", a, b).reshape(l * q * n2, p * n1 * r)
        u, s, vh, err = linalg.truncated_svd(theta, None, rel_floor=state.trunc.sv_floor)
        chi = len(s)
        if err > 0:
            state.log.append(TruncationEvent("inner", i, err, chi, min(theta.shape) - chi))
        state.sites[i] = (u * s[None, :]).reshape(l, q, n2, chi)
        state.sites[i + 1] = vh.reshape(chi, p, n1, r)
    if cap is not None and state.sites[i].shape[3] > cap:
        canonicalize_and_truncate_inner(state, cap)
    return state


def _pool_noise(state: MpdoState, theta: np.ndarray) -> np.ndarray:
    """Fuse all noise legs of a merged pair into one leg of minimal rank.

    ``theta`` has axes ``(l, p, n1, q, n2, k, r)``. Only the sum over noise
    indices of ``theta theta^H`` enters the density operator, so the noise
    legs can be fused and compressed to the numerical rank of the
    ``(l p q r) x (n1 n2 k)`` matrix without changing the state. Returns the
    fused tensor with axes ``(l, p, q, r, m)``.
    """
    l, p, n1, q, n2, k, r = theta.shape
    m = theta.transpose(0, 1, 3, 6, 2, 4, 5).reshape(l * p * q * r, n1 * n2 * k)
    u, s, _, _ = linalg.truncated_svd(m, None, rel_floor=state.trunc.sv_floor)
    return (u * s[None, :]).reshape(l, p, q, r, len(s))


def _split_pooled(state: MpdoState, i: int, fused: np.ndarray, sides: tuple[int, ...]) -> int:
    """Split a pooled pair back into sites ``i``, ``i+1``.

    The fused noise leg goes to ``i + side`` for the first side in ``sides``
    that gives the smallest inner bond. Returns the chosen side.
    """
    l, p, q, r, m = fused.shape
    best = None
    for side in sides:
        if side == 0:
            mat = fused.transpose(0, 1, 4, 2, 3).reshape(l * p * m, q * r)
        else:
            mat = fused.transpose(0, 1, 2, 4, 3).reshape(l * p, q * m * r)
        u, s, vh, err = linalg.truncated_svd(mat, None, rel_floor=state.trunc.sv_floor)
        if best is None or len(s) < len(best[2]):
            best = (side, u, s, vh, err, min(mat.shape))
    side, u, s, vh, err, full = best
    chi = len(s)
    if err > 0:
        state.log.append(TruncationEvent("inner", i, err, chi, full - chi))
    left_noise, right_noise = (m, 1) if side == 0 else (1, m)
    state.sites[i] = (u * s[None, :]).reshape(l, p, left_noise, chi)
    state.sites[i + 1] = vh.reshape(chi, q, right_noise, r)
    return side


def canonicalize_and_truncate_inner(state: MpdoState, chi: int | None) -> list[float]:
    """QR sweep left to right, then SVD truncation of every bond right to left.

    The noise index is treated as part of the physical leg, so the sweep
    puts the purified chain in canonical form and each bond truncation is
    optimal for the chain as a whole. Returns per-bond errors (bond ``i``
    joins sites ``i`` and ``i+1``).
    """
    if chi is not None and chi < 1:
        raise ParameterError(f"chi must be >= 1, got {chi}")
    sites = state.sites
    nq = len(sites)
    for i in range(nq - 1):
        t = sites[i]
        l, p, n, r = t.shape
        q, rr = linalg.qr(t.reshape(l * p * n, r))
        sites[i] = q.reshape(l, p, n, q.shape[1])
        sites[i + 1] = np.einsum("ab,bpnr->apnr", rr, sites[i + 1])
    errors = [0.0] * max(nq - 1, 0)
    for i in range(nq - 1, 0, -1):
        t = sites[i]
        l, p, n, r = t.shape
        u, s, vh, err = linalg.truncated_svd(t.reshape(l, p * n * r), chi, rel_floor=state.trunc.sv_floor)
        k = len(s)
        sites[i] = vh.reshape(k, p, n, r)
        sites[i - 1] = np.einsum("apnr,rb->apnb", sites[i - 1], u * s[None, :])
        errors[i - 1] = err
        if err > 0:
            state.log.append(TruncationEvent("inner", i - 1, err, k, l - k))
    return errors


def _transfer(env: np.ndarray, t: np.ndarray, op: np.ndarray | None = None) -> np.ndarray:
    if op is None:
        return np.einsum("ab,apnr,bpns->rs", env, t, t.conj(), optimize=True)
    return np.einsum("ab,apnr,qp,bqns->rs", env, t, op, t.conj(), optimize=True)


def trace(state: MpdoState) -> float:
    env = np.ones((1, 1), dtype=np.complex128)
    for t in state.sites:
        env = _transfer(env, t)
    return float(env[0, 0].real)


def expectation(state: MpdoState, pauli: str, normalize: bool = False) -> float:
    """``tr(rho P)`` for a Pauli string such as ``"ZIZ"`` (qubit 0 first)."""
    pauli = pauli.upper()
    if len(pauli) != state.n_qubits or set(pauli) - set("IXYZ"):
        raise ParameterError(f"bad Pauli string {pauli!r} for {state.n_qubits} qubits")
    env = np.ones((1, 1), dtype=np.complex128)
    for c, t in zip(pauli, state.sites):
        env = _transfer(env, t, None if c == "I" else pauli_string(c))
    val = env[0, 0]
    if abs(val.imag) > 1e-10 * max(1.0, abs(val.real)):
        log.warning("expectation has imaginary part %.3e", val.imag)
    out = float(val.real)
    return out / trace(state) if normalize else out


def full_density_matrix(state: MpdoState, max_qubits: int = DENSE_GUARD) -> np.ndarray:
    """Dense ``2^N x 2^N`` density matrix (qubit 0 most significant)."""
    if state.n_qubits > max_qubits:
        raise ResourceError(f"{state.n_qubits} qubits exceed the dense guard of {max_qubits}")
    env = np.ones((1, 1, 1, 1), dtype=np.complex128)
    for t in state.sites:
        env = np.einsum("dexy,xpnr,yqns->dpeqrs", env, t, t.conj(), optimize=True)
        d, p, e, q, r, s = env.shape
        env = env.reshape(d * p, e * q, r, s)
    rho = env[:, :, 0, 0]
    return 0.5 * (rho + rho.conj().T)


def _diagonal(state: MpdoState) -> np.ndarray:
    env = np.ones((1, 1, 1), dtype=np.complex128)
    for t in state.sites:
        env = np.einsum("dxy,xpnr,ypns->dprs", env, t, t.conj(), optimize=True)
        d, p, r, s = env.shape
        env = env.reshape(d * p, r, s)
    return env[:, 0, 0].real.copy()


def probabilities(state: MpdoState, max_qubits: int = 20, return_drift: bool = False):
    """Computational-basis probabilities (diagonal of ``rho``).

    Negative entries are clipped to 0; if the total deviates from 1 by more
    than 1e-10 (after truncation) the vector is renormalized and the drift
    logged.
    """
    if state.n_qubits > max_qubits:
        raise ResourceError(f"{state.n_qubits} qubits exceed the probability guard of {max_qubits}")
    p = np.clip(_diagonal(state), 0.0, None)
    total = float(p.sum())
    drift = total - 1.0
    if abs(drift) > 1e-10:
        log.info("probability drift %.3e after truncation; renormalizing", drift)
        p = p / total
    return (p, drift) if return_drift else p


def sample_bitstrings(state: MpdoState, shots: int, seed: int | None = None) -> dict[str, int]:
    p = probabilities(state)
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(int(shots), p / p.sum())
    n = state.n_qubits
    return {format(i, f"0{n}b"): int(c) for i, c in enumerate(counts) if c}


def apply_gate(state: MpdoState, gate) -> MpdoState:
    """Apply a circuit :class:`~qptmpdo.circuit.Gate` (with its noise, if any)."""
    u = gate_unitary(gate)
    noise = gate.noise
    if len(gate.qubits) == 1:
        return apply_single_qubit_channel(state, gate.qubits[0], u, noise)
    if len(gate.qubits) != 2:
        raise ShapeError("only one- and two-qubit gates are supported by the MPDO engine")
    a, b = gate.qubits
    if abs(a - b) != 1:
        raise RoutingError(f"gate {gate.kind} on non-adjacent qubits {gate.qubits}; route the circuit first")
    if gate.kind == "SWAP" and noise is None:
        return swap_sites(state, min(a, b))
    # the target (second listed) qubit receives the noise bond
    if a < b:
        return apply_two_qubit_channel(state, a, u, noise, noise_site=1)
    u = SWAP @ u @ SWAP
    if noise is not None:
        noise = KrausChannel(2, SWAP @ noise.operators @ SWAP)
    return apply_two_qubit_channel(state, b, u, noise, noise_site=0)


def simulate_mpdo(
    circuit: Circuit, trunc: TruncationConfig | None = None, initial_states=None
) -> MpdoState:
    """Run a (noise-annotated, adjacency-routed) circuit from a product state."""
    state = init_product_state(circuit.n_qubits, initial_states, trunc)
    eye = np.eye(2, dtype=np.complex128)
    for q, c in sorted((circuit.preparation or {}).items()):
        apply_single_qubit_channel(state, q, eye, c)
    for g in circuit.gates:
        apply_gate(state, g)
    for q, c in sorted((circuit.measurement or {}).items()):
        apply_single_qubit_channel(state, q, eye, c)
    return state
