"""Dense statevector engine, exact propagator oracle and dimer dynamics.

Qubit 0 is the most significant bit of a basis index. A statevector of n
qubits is stored as a flat complex array; kernels view it as an n-axis
tensor (axis q is qubit q), optionally with trailing batch axes so the same
code builds dense circuit unitaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from tedopa_sim.errors import InvalidInputError, NumericalError, UnsupportedSizeError
from tedopa_sim.pauli import word_action
from tedopa_sim.units import CM1_PS_TO_RAD

DEFAULT_MAX_QUBITS = 14
EIGH_MAX_DIM = 1 << 10
KRYLOV_DIM = 40
KRYLOV_TOL = 1e-10
MAX_UNITARY_QUBITS = 10

_SQRT_HALF = 1.0 / math.sqrt(2.0)
_H = np.array([[_SQRT_HALF, _SQRT_HALF], [_SQRT_HALF, -_SQRT_HALF]], dtype=complex)
_DIAG = {"s": (1.0, 1j), "sdg": (1.0, -1j)}


class Statevector:
    """Amplitudes of an n-qubit pure state."""

    def __init__(self, amplitudes):
        amps = np.array(amplitudes, dtype=complex).ravel()
        n = amps.size.bit_length() - 1
        if amps.size == 0 or (1 << n) != amps.size:
            raise InvalidInputError(f"statevector length {amps.size} is not a power of two")
        self.amplitudes = amps
        self.n_qubits = n

    @classmethod
    def basis(cls, n_qubits, index):
        amps = np.zeros(1 << n_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(amps)

    def copy(self):
        return Statevector(self.amplitudes.copy())

    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self):
        return np.abs(self.amplitudes) ** 2

    def expectation(self, matrix):
        return complex(np.vdot(self.amplitudes, matrix @ self.amplitudes))


# ---------------------------------------------------------------- gate kernels

def _axis(q, value):
    # the trailing Ellipsis keeps a view even when no axes remain
    return (slice(None),) * q + (value, Ellipsis)


def _apply_1q(t, q, m):
    a0 = t[_axis(q, 0)]
    a1 = t[_axis(q, 1)]
    n0 = m[0, 0] * a0 + m[0, 1] * a1
    a1[...] = m[1, 0] * a0 + m[1, 1] * a1
    a0[...] = n0


def _apply_diag(t, q, d0, d1):
    if d0 != 1.0:
        t[_axis(q, 0)] *= d0
    t[_axis(q, 1)] *= d1


def _apply_cx(t, control, target):
    sub = t[_axis(control, 1)]
    tq = target if target < control else target - 1
    x0 = sub[_axis(tq, 0)]
    x1 = sub[_axis(tq, 1)]
    tmp = x0.copy()
    x0[...] = x1
    x1[...] = tmp


def _rotation(kind, angle):
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    if kind == "rx":
        return np.array([[c, -1j * s], [-1j * s, c]])
    return np.array([[c, -s], [s, c]], dtype=complex)  # ry


def apply_gate(tensor, gate):
    """Apply ``gate`` in place to an (2,)*n [+ batch] tensor."""
    kind, qs = gate.kind, gate.qubits
    if kind == "cx":
        _apply_cx(tensor, qs[0], qs[1])
    elif kind == "rz":
        half = 0.5 * gate.angle
        _apply_diag(tensor, qs[0], complex(math.cos(half), -math.sin(half)),
                    complex(math.cos(half), math.sin(half)))
    elif kind in _DIAG:
        _apply_diag(tensor, qs[0], *_DIAG[kind])
    elif kind == "h":
        _apply_1q(tensor, qs[0], _H)
    else:
        _apply_1q(tensor, qs[0], _rotation(kind, gate.angle))


def apply_circuit(state, circuit):
    """New statevector after running ``circuit`` on ``state``."""
    if state.n_qubits != circuit.n_qubits:
        raise InvalidInputError(
            f"circuit on {circuit.n_qubits} qubits applied to a {state.n_qubits}-qubit state"
        )
    out = state.amplitudes.copy()
    t = out.reshape((2,) * state.n_qubits)
    for g in circuit.gates:
        apply_gate(t, g)
    return Statevector(out)


def circuit_unitary(circuit):
    """Dense unitary of ``circuit`` (columns are images of basis states)."""
    n = circuit.n_qubits
    if n > MAX_UNITARY_QUBITS:
        raise UnsupportedSizeError(f"dense unitary limited to {MAX_UNITARY_QUBITS} qubits")
    u = np.eye(1 << n, dtype=complex)
    t = u.reshape((2,) * n + (1 << n,))
    for g in circuit.gates:
        apply_gate(t, g)
    return u


def _hermitian_expm(matrix, tau):
    evals, evecs = np.linalg.eigh(matrix)
    return (evecs * np.exp(-1j * tau * evals)) @ evecs.conj().T


def product_formula_unitary(terms, dt, n_steps, level="group"):
    """Dense first-order product formula, groups applied odd, even, ..., singles.

    ``level="group"`` exponentiates each group as a whole; ``level="term"``
    multiplies single Pauli exponentials in the circuit's term order.
    """
    n = terms.n_qubits
    if n > MAX_UNITARY_QUBITS:
        raise UnsupportedSizeError(f"dense unitary limited to {MAX_UNITARY_QUBITS} qubits")
    if level not in ("group", "term"):
        raise InvalidInputError(f"level must be 'group' or 'term', got {level!r}")
    tau = dt * CM1_PS_TO_RAD
    dim = 1 << n
    step = np.eye(dim, dtype=complex)
    for group in terms.all_groups():
        if level == "group":
            step = _hermitian_expm(group.to_matrix(n), tau) @ step
        else:
            for t in group.terms:
                p = type(group)({t.factors: 1.0}).to_matrix(n)
                theta = t.coefficient.real * tau
                step = (math.cos(theta) * np.eye(dim) - 1j * math.sin(theta) * p) @ step
    return np.linalg.matrix_power(step, n_steps)


# ------------------------------------------------------------- state handling

def init_state(layout, excited_site):
    """Oscillators in vacuum, ``excited_site`` in |1>, other sites in |0>."""
    if not 0 <= excited_site < layout.n_sites:
        raise InvalidInputError(f"excited_site {excited_site} not among {layout.n_sites} sites")
    n = layout.total_qubits
    index = 1 << (n - 1 - layout.system_qubits[excited_site])
    return Statevector.basis(n, index)


def _site_bits(layout):
    n = layout.total_qubits
    return [1 << (n - 1 - q) for q in layout.system_qubits]


def single_excitation_basis(layout):
    """Sorted basis indices with exactly one site qubit excited."""
    n = layout.total_qubits
    mask = sum(_site_bits(layout))
    idx = np.arange(1 << n, dtype=np.int64)
    return idx[np.bitwise_count(idx & mask) == 1]


@dataclass
class Populations:
    p: np.ndarray
    sector_mass: float


def measure_populations(state, layout, sector_filter=True):
    """Site populations of the single-excitation configurations.

    P(m) is the probability that site m alone is excited, summed over the
    oscillators. With ``sector_filter`` the values are renormalized by the
    total single-excitation mass, which is reported alongside.
    """
    probs = state.probabilities()
    idx = np.arange(probs.size, dtype=np.int64)
    bits = _site_bits(layout)
    mask = sum(bits)
    site_part = idx & mask
    p = np.array([probs[site_part == b].sum() for b in bits])
    mass = float(p.sum())
    if sector_filter:
        if mass <= 0:
            raise NumericalError("no weight in the single-excitation sector", residual=mass)
        p = p / mass
    return Populations(p=p, sector_mass=mass)


def simulation_error(p_a, p_b, site=1):
    """|P_a(site) - P_b(site)|, the dimer error metric."""
    p_a, p_b = np.asarray(p_a), np.asarray(p_b)
    if p_a.shape != p_b.shape:
        raise InvalidInputError("population vectors differ in shape")
    return float(abs(p_a[site] - p_b[site]))


def total_variation(p_a, p_b):
    p_a, p_b = np.asarray(p_a), np.asarray(p_b)
    if p_a.shape != p_b.shape:
        raise InvalidInputError("population vectors differ in shape")
    return float(0.5 * np.abs(p_a - p_b).sum())


# ----------------------------------------------------------- exact propagator

def restricted_matrix(ps, n_qubits, basis):
    """CSR matrix of ``ps`` on the span of the sorted basis indices ``basis``.

    The span must be invariant; any amplitude leaking out raises.
    """
    basis = np.asarray(basis, dtype=np.int64)
    dim = basis.size
    by_flip = {}
    for word, coeff in ps.items():
        x, phases = word_action(word, n_qubits)
        ph = coeff * phases[basis]
        by_flip[x] = ph if x not in by_flip else by_flip[x] + ph
    rows, cols, data = [], [], []
    col = np.arange(dim, dtype=np.int64)
    for x in sorted(by_flip):
        vals = by_flip[x]
        target = basis ^ x
        pos = np.searchsorted(basis, target)
        pos_c = np.minimum(pos, dim - 1)
        inside = basis[pos_c] == target
        nz = np.abs(vals) > 0
        if np.any(nz & ~inside):
            raise InvalidInputError("basis does not span an invariant subspace")
        keep = nz & inside
        rows.append(pos_c[keep])
        cols.append(col[keep])
        data.append(vals[keep])
    if not rows:
        return sparse.csr_matrix((dim, dim), dtype=complex)
    return sparse.csr_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
    )


def _lanczos_expm(matvec, v, tau, m, tol):
    """exp(-i tau H) v by adaptive Lanczos substeps; returns (w, error estimate)."""
    total_err = 0.0
    remaining = tau
    out = v.copy()
    step = tau
    beta0 = np.linalg.norm(v)
    if beta0 == 0 or tau == 0:
        return out, 0.0
    while remaining > 0:
        step = min(step, remaining)
        basis = np.empty((m + 1, out.size), dtype=complex)
        alpha = np.zeros(m)
        beta = np.zeros(m)
        basis[0] = out / np.linalg.norm(out)
        k = m
        for j in range(m):
            w = matvec(basis[j])
            alpha[j] = np.vdot(basis[j], w).real
            w = w - alpha[j] * basis[j]
            if j > 0:
                w -= beta[j - 1] * basis[j - 1]
            w -= basis[: j + 1].T @ (basis[: j + 1].conj() @ w)
            beta[j] = np.linalg.norm(w)
            if beta[j] < 1e-13 * max(1.0, abs(alpha[j])):
                k = j + 1
                break
            basis[j + 1] = w / beta[j]
        happy = k < m or beta[k - 1] < 1e-13
        tri_e, tri_v = _tridiag_eigh(alpha[:k], beta[: k - 1])
        budget = tol * step / tau
        while True:
            y = tri_v @ (np.exp(-1j * step * tri_e) * tri_v[0].conj())
            err = 0.0 if happy else float(step * beta[k - 1] * abs(y[-1]))
            if err <= budget or step <= tau * 1e-9:
                break
            step *= 0.5
            budget = tol * step / tau
        if err > budget:
            raise NumericalError(
                f"Krylov propagation did not converge (error estimate {err:.3e})", residual=err
            )
        nrm = np.linalg.norm(out)
        out = nrm * (basis[:k].T @ y)
        total_err += err
        remaining -= step
        step *= 2.0 if err < 0.1 * budget else 1.0
    return out, total_err


def _tridiag_eigh(a, b):
    from scipy.linalg import eigh_tridiagonal

    if a.size == 1:
        return a.copy(), np.ones((1, 1))
    return eigh_tridiagonal(a, b)


class ExactPropagator:
    """exp(-i H tau) on the full register or an invariant subspace.

    Small problems (dimension <= 1024) use a full eigendecomposition;
    larger ones a Lanczos propagator with error estimate below ``tol``.
    """

    def __init__(self, hamiltonian, n_qubits, basis=None, max_qubits=DEFAULT_MAX_QUBITS,
                 method="auto", tol=KRYLOV_TOL):
        if n_qubits > max_qubits:
            raise UnsupportedSizeError(
                f"exact propagation limited to {max_qubits} qubits (got {n_qubits})"
            )
        self.n_qubits = n_qubits
        self.basis = None if basis is None else np.asarray(basis, dtype=np.int64)
        if self.basis is None:
            self.matrix = hamiltonian.to_sparse(n_qubits).tocsr()
        else:
            self.matrix = restricted_matrix(hamiltonian, n_qubits, self.basis)
        dim = self.matrix.shape[0]
        if method == "auto":
            method = "eigh" if dim <= EIGH_MAX_DIM else "krylov"
        if method not in ("eigh", "krylov"):
            raise InvalidInputError(f"unknown propagation method {method!r}")
        self.method = method
        self.tol = tol
        self.last_error = 0.0
        if method == "eigh":
            self._evals, self._evecs = np.linalg.eigh(self.matrix.toarray())

    def _restrict(self, amps):
        if self.basis is None:
            return amps
        sub = amps[self.basis]
        leak = np.linalg.norm(amps) ** 2 - np.linalg.norm(sub) ** 2
        if leak > 1e-20 + 1e-12 * np.linalg.norm(amps) ** 2:
            raise InvalidInputError(f"state has weight {leak:.3e} outside the propagation subspace")
        return sub

    def evolve_amplitudes(self, amps, t):
        """Amplitudes after time ``t`` (ps)."""
        tau = t * CM1_PS_TO_RAD
        v = self._restrict(np.asarray(amps, dtype=complex))
        if self.method == "eigh":
            c = self._evecs.conj().T @ v
            w = self._evecs @ (np.exp(-1j * tau * self._evals) * c)
            self.last_error = 0.0
        else:
            w, self.last_error = _lanczos_expm(lambda x: self.matrix @ x, v, tau, KRYLOV_DIM, self.tol)
        if self.basis is None:
            return w
        out = np.zeros(1 << self.n_qubits, dtype=complex)
        out[self.basis] = w
        return out

    def evolve(self, state, t):
        if state.n_qubits != self.n_qubits:
            raise InvalidInputError("state and Hamiltonian differ in qubit count")
        return Statevector(self.evolve_amplitudes(state.amplitudes, t))


def exact_evolve(hamiltonian, state, t, max_qubits=DEFAULT_MAX_QUBITS, method="auto"):
    """exp(-i H t 2 pi c) |state> with H in cm^-1 and t in ps."""
    prop = ExactPropagator(hamiltonian, state.n_qubits, max_qubits=max_qubits, method=method)
    return prop.evolve(state, t)


# -------------------------------------------------------------------- dynamics

@dataclass
class DynamicsResult:
    times: np.ndarray
    p_site: np.ndarray
    sector_mass: np.ndarray
    epsilon: np.ndarray | None = None
    p_oracle: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)


def _sector_propagator(spec, coeffs, layout, max_qubits):
    from tedopa_sim.hamiltonian import assemble

    terms = assemble(spec, coeffs, layout)
    basis = single_excitation_basis(layout)
    return ExactPropagator(terms.total(), layout.total_qubits, basis=basis, max_qubits=max_qubits)


def run_dynamics(config):
    """Trotter circuit dynamics with an optional exact reference.

    Oracle modes: ``same-d`` (the circuit's own truncated Hamiltonian),
    ``higher-d`` (binary encoding with ``oracle.d_ref`` levels, same l) and
    ``long-chain`` (same d, ``oracle.l_ref`` oscillators per chain).
    """
    from tedopa_sim.chain_mapping import chain_coefficients
    from tedopa_sim.hamiltonian import QubitLayout, assemble
    from tedopa_sim.pauli import BosonEncoding
    from tedopa_sim.trotter import build_trotter_circuit

    spec = config.system_spec()
    sd = config.spectral_density()
    cc = config.chain
    ev = config.evolution
    oc = config.oracle
    l_max = max(cc.l, oc.l_ref or 0) if oc.enabled else cc.l
    coeffs = chain_coefficients(sd, max(l_max, 1), pi_normalization=config.bath.measure_pi_normalization,
                                panels=config.bath.panels, nodes_per_panel=config.bath.nodes_per_panel)

    enc = BosonEncoding(cc.encoding, cc.d)
    layout = QubitLayout.linear(spec.n_sites, cc.l, enc)
    terms = assemble(spec, coeffs, layout)
    step_circuit = build_trotter_circuit(terms, ev.dt_ps, 1)

    state = init_state(layout, config.system.excited_site)
    n = ev.n_steps
    times = ev.dt_ps * np.arange(n + 1)
    p_site = np.empty((n + 1, spec.n_sites))
    mass = np.empty(n + 1)
    pops = measure_populations(state, layout)
    p_site[0], mass[0] = pops.p, pops.sector_mass
    for k in range(1, n + 1):
        state = apply_circuit(state, step_circuit)
        pops = measure_populations(state, layout)
        p_site[k], mass[k] = pops.p, pops.sector_mass

    metadata = {
        "n_qubits": layout.total_qubits,
        "cnots_per_step": step_circuit.cnot_count,
        "dropped_constant_cm1": terms.constant,
        "t0": coeffs.t0,
    }
    result = DynamicsResult(times=times, p_site=p_site, sector_mass=mass, metadata=metadata)
    if not oc.enabled:
        return result

    if oc.mode == "same-d":
        ref_layout, ref_coeffs = layout, coeffs
    elif oc.mode == "higher-d":
        ref_layout = QubitLayout.linear(spec.n_sites, cc.l, BosonEncoding("binary", oc.d_ref))
        ref_coeffs = coeffs
    elif oc.mode == "long-chain":
        ref_layout = QubitLayout.linear(spec.n_sites, oc.l_ref, enc)
        ref_coeffs = coeffs
    else:
        raise InvalidInputError(f"unknown oracle mode {oc.mode!r}")
    prop = _sector_propagator(spec, ref_coeffs, ref_layout, oc.max_qubits)
    ref = init_state(ref_layout, config.system.excited_site)
    p_ref = np.empty_like(p_site)
    p_ref[0] = measure_populations(ref, ref_layout).p
    for k in range(1, n + 1):
        ref = prop.evolve(ref, ev.dt_ps)
        p_ref[k] = measure_populations(ref, ref_layout).p
    observable = min(1, spec.n_sites - 1)
    result.p_oracle = p_ref
    result.epsilon = np.array([simulation_error(a, b, observable) for a, b in zip(p_site, p_ref)])
    metadata["oracle_qubits"] = ref_layout.total_qubits
    metadata["oracle_method"] = prop.method
    return result
