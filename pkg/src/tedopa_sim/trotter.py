"""First-order Trotter circuits, resource counts and the commutator error bound.

A Pauli exponential exp(-i theta P) is synthesized as a basis change
(H for X, S^dag then H for Y), a CNOT ladder onto the highest qubit,
RZ(2 theta) there, and the mirror image. It costs 2 (weight - 1) CNOTs.
Angles are dimensionless: theta = coefficient [cm^-1] * dt [ps] * 2 pi c.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import eigsh

from tedopa_sim.errors import InvalidInputError, UnsupportedSizeError
from tedopa_sim.pauli import (
    BosonEncoding,
    PauliString,
    encode_boson,
    hopping_term_pauli,
    PauliSum,
)
from tedopa_sim.units import CM1_PS_TO_RAD

GATE_KINDS = ("rx", "ry", "rz", "h", "s", "sdg", "cx")
MAX_COMMUTATOR_QUBITS = 12
_DENSE_EIG_QUBITS = 8


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple
    angle: float | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise InvalidInputError(f"unknown gate kind {self.kind!r}")
        n_expected = 2 if self.kind == "cx" else 1
        if len(self.qubits) != n_expected:
            raise InvalidInputError(f"{self.kind} acts on {n_expected} qubit(s)")
        if self.kind == "cx" and self.qubits[0] == self.qubits[1]:
            raise InvalidInputError("CNOT control and target must differ")
        rotation = self.kind in ("rx", "ry", "rz")
        if rotation and (self.angle is None or not math.isfinite(self.angle)):
            raise InvalidInputError("rotation angle must be finite")
        if not rotation and self.angle is not None:
            raise InvalidInputError(f"{self.kind} takes no angle")


@dataclass
class Circuit:
    n_qubits: int
    gates: list = field(default_factory=list)
    dt: float | None = None
    n_steps: int | None = None

    def __post_init__(self):
        for g in self.gates:
            self._check(g)

    def _check(self, gate):
        if max(gate.qubits) >= self.n_qubits or min(gate.qubits) < 0:
            raise InvalidInputError(f"gate {gate.kind} on {gate.qubits} outside {self.n_qubits} qubits")

    def append(self, gate):
        self._check(gate)
        self.gates.append(gate)

    def extend(self, gates):
        for g in gates:
            self.append(g)

    def __len__(self):
        return len(self.gates)

    @property
    def cnot_count(self):
        return sum(1 for g in self.gates if g.kind == "cx")

    def depth(self):
        """Circuit depth with every gate taking one layer."""
        frontier = [0] * self.n_qubits
        for g in self.gates:
            layer = max(frontier[q] for q in g.qubits) + 1
            for q in g.qubits:
                frontier[q] = layer
        return max(frontier, default=0)

    def to_qasm(self, full_precision=False):
        fmt = "{:.17g}" if full_precision else "{:.12g}"
        lines = ["OPENQASM 2.0;", 'include "qelib1.inc";', f"qreg q[{self.n_qubits}];"]
        for g in self.gates:
            args = ",".join(f"q[{q}]" for q in g.qubits)
            if g.angle is None:
                lines.append(f"{g.kind} {args};")
            else:
                lines.append(f"{g.kind}({fmt.format(g.angle)}) {args};")
        return "\n".join(lines) + "\n"


def exponentiate_pauli(term, angle):
    """Gates for exp(-i angle P) where P is the Pauli word of ``term``.

    The coefficient of ``term`` is ignored; fold it into ``angle``.
    Identity words are a global phase and emit nothing.
    """
    factors = term.factors if isinstance(term, PauliString) else tuple(term)
    if not factors:
        return []
    factors = sorted(factors)
    pre, post = [], []
    for q, axis in factors:
        if axis == "X":
            pre.append(Gate("h", (q,)))
            post.append(Gate("h", (q,)))
        elif axis == "Y":
            pre += [Gate("sdg", (q,)), Gate("h", (q,))]
            post += [Gate("h", (q,)), Gate("s", (q,))]
    qs = [q for q, _ in factors]
    ladder = [Gate("cx", (a, b)) for a, b in zip(qs, qs[1:])]
    rot = Gate("rz", (qs[-1],), 2.0 * angle)
    return pre + ladder + [rot] + ladder[::-1] + post


def step_sequence(terms):
    """Groups in application order within one step: odd, even, extra, singles."""
    return terms.all_groups()


def _group_gates(group, tau):
    gates = []
    for t in group.terms:
        gates += exponentiate_pauli(t, t.coefficient.real * tau)
    return gates


def build_trotter_circuit(terms, dt, n_steps):
    """N first-order steps exp(-i H_sing tau) ... exp(-i H_even tau) exp(-i H_odd tau)."""
    if not dt > 0:
        raise InvalidInputError("dt must be positive")
    if n_steps < 1:
        raise InvalidInputError("n_steps must be at least 1")
    tau = dt * CM1_PS_TO_RAD
    step = []
    for group in step_sequence(terms):
        step += _group_gates(group, tau)
    circuit = Circuit(terms.n_qubits, dt=dt, n_steps=n_steps)
    for _ in range(n_steps):
        circuit.extend(step)
    return circuit


def _cnots(ps):
    return sum(2 * (t.weight - 1) for t in ps.terms if t.weight > 0)


@dataclass(frozen=True)
class ResourceEstimate:
    qubits: int
    cnot_count: int
    pauli_term_count: int
    depth_estimate: int
    cnot_asymptotic: int

    def __post_init__(self):
        for name in ("qubits", "cnot_count", "pauli_term_count", "depth_estimate", "cnot_asymptotic"):
            if getattr(self, name) < 0:
                raise InvalidInputError(f"{name} must be non-negative")


@functools.lru_cache(maxsize=None)
def _unit_costs(scheme, d):
    """(cnots, terms) for one number term, one hopping bond, one site coupling."""
    enc = BosonEncoding(scheme, d)
    q = enc.qubits_per_oscillator
    a, b = tuple(range(q)), tuple(range(q, 2 * q))
    number = encode_boson(enc, "number", a).without_constant()
    hop = hopping_term_pauli(enc, b, a).without_constant()
    disp = encode_boson(enc, "create", b)
    inter = (PauliSum.single(0, "Z") * (disp + disp.dagger())).real().without_constant()
    bond_cnots = {"hop": _cnots(hop), "inter": _cnots(inter), "number": _cnots(number)}
    bond_terms = {"hop": len(hop), "inter": len(inter), "number": len(number)}
    return bond_cnots, bond_terms


def asymptotic_cnots(d, l, n_steps, encoding, n_chains):
    """Leading-order count l N d^2 (unary) or l N d^2 log2 d (binary) per chain."""
    per = l * n_steps * d * d
    if encoding == "binary":
        per *= max(1, int(round(math.log2(d))))
    return n_chains * per


def estimate_resources(d, l, n_steps, encoding, n_chains, n_system_qubits):
    """Qubits and CNOTs of a first-order Trotter run, counted symbolically.

    System sites are assumed coupled along a line (n_system_qubits - 1
    hopping bonds); each chain couples to a system qubit through Z (b + b^dag).
    """
    for name, v in (("d", d), ("l", l), ("n_steps", n_steps), ("n_chains", n_chains),
                    ("n_system_qubits", n_system_qubits)):
        if v < 1:
            raise InvalidInputError(f"{name} must be at least 1")
    enc = BosonEncoding(encoding, d)  # validates the power-of-two rule
    cnots, nterms = _unit_costs(encoding, d)
    qubits = n_system_qubits + n_chains * l * enc.qubits_per_oscillator

    sys_bonds = n_system_qubits - 1
    per_step_cnots = 4 * sys_bonds + n_chains * (
        cnots["inter"] + (l - 1) * cnots["hop"] + l * cnots["number"]
    )
    per_step_terms = n_system_qubits + 2 * sys_bonds + n_chains * (
        nterms["inter"] + (l - 1) * nterms["hop"] + l * nterms["number"]
    )
    # two bond layers run in parallel; a bond costs its CNOTs in sequence
    widest = max(cnots["hop"] if l > 1 else 0, cnots["inter"], 4 if sys_bonds else 0)
    depth = n_steps * (2 * widest + 1)
    return ResourceEstimate(
        qubits=qubits,
        cnot_count=per_step_cnots * n_steps,
        pauli_term_count=per_step_terms,
        depth_estimate=depth,
        cnot_asymptotic=asymptotic_cnots(d, l, n_steps, encoding, n_chains),
    )


def _group_matrices(terms):
    n = terms.n_qubits
    return [g.to_sparse(n).tocsr() for g in terms.all_groups() if len(g)]


def commutator_norm(terms):
    """alpha_comm = sum over group pairs of ||[H_i, H_j]|| (cm^-2)."""
    if terms.n_qubits > MAX_COMMUTATOR_QUBITS:
        raise UnsupportedSizeError(
            f"dense commutator norms are limited to {MAX_COMMUTATOR_QUBITS} qubits "
            f"(got {terms.n_qubits}); use trotter.asymptotic_cnots / the O(l) bound instead"
        )
    mats = _group_matrices(terms)
    total = 0.0
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            total += _spectral_norm_antihermitian(mats[i] @ mats[j] - mats[j] @ mats[i])
    return total


def _spectral_norm_antihermitian(c):
    h = (1j * c).tocsr()
    if h.nnz == 0 or abs(h).max() == 0:
        return 0.0
    if h.shape[0] <= 2**_DENSE_EIG_QUBITS:
        ev = np.linalg.eigvalsh(h.toarray())
        return float(np.max(np.abs(ev)))
    v0 = np.ones(h.shape[0]) / math.sqrt(h.shape[0])
    ev = eigsh(h, k=2, which="LM", tol=1e-12, v0=v0, return_eigenvectors=False)
    return float(np.max(np.abs(ev)))


def trotter_error_bound(alpha_comm, total_time, n_steps):
    """alpha_comm tau^2 / (2 N) with tau = total_time [ps] * 2 pi c."""
    if n_steps < 1:
        raise InvalidInputError("n_steps must be at least 1")
    tau = total_time * CM1_PS_TO_RAD
    return alpha_comm * tau * tau / (2.0 * n_steps)
