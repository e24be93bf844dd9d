import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from tedopa_sim.config import parse_config
from tedopa_sim.errors import InvalidInputError, NumericalError, UnsupportedSizeError
from tedopa_sim.hamiltonian import QubitLayout, SystemSpec, assemble, exciton_number
from tedopa_sim.pauli import BosonEncoding, PauliSum
from tedopa_sim.simulator import (
    ExactPropagator,
    Statevector,
    apply_circuit,
    circuit_unitary,
    exact_evolve,
    init_state,
    measure_populations,
    product_formula_unitary,
    restricted_matrix,
    run_dynamics,
    simulation_error,
    single_excitation_basis,
    total_variation,
)
from tedopa_sim.trotter import Circuit, Gate, build_trotter_circuit
from tedopa_sim.units import CM1_PS_TO_RAD

GATE_MATRICES = {
    "h": np.array([[1, 1], [1, -1]]) / np.sqrt(2),
    "s": np.diag([1, 1j]),
    "sdg": np.diag([1, -1j]),
}
PAULI = {"X": np.array([[0, 1], [1, 0]]), "Y": np.array([[0, -1j], [1j, 0]]), "Z": np.diag([1, -1])}


def kron_gate(gate, n):
    """Full 2^n matrix of a gate by Kronecker products, qubit 0 leftmost."""
    if gate.kind == "cx":
        c, t = gate.qubits
        p0 = [np.eye(2)] * n
        p1 = [np.eye(2)] * n
        p0 = p0[:c] + [np.diag([1, 0])] + p0[c + 1:]
        p1 = p1[:c] + [np.diag([0, 1])] + p1[c + 1:]
        p1[t] = PAULI["X"]
        return _kron(p0) + _kron(p1)
    if gate.kind in GATE_MATRICES:
        m = GATE_MATRICES[gate.kind]
    else:
        m = expm(-0.5j * gate.angle * PAULI[gate.kind[1].upper()])
    ops = [np.eye(2)] * n
    ops[gate.qubits[0]] = m
    return _kron(ops)


def _kron(ops):
    out = np.array([[1.0 + 0j]])
    for o in ops:
        out = np.kron(out, o)
    return out


def random_circuit(rng, n, n_gates):
    gates = []
    for _ in range(n_gates):
        kind = rng.choice(["rx", "ry", "rz", "h", "s", "sdg", "cx"])
        if kind == "cx" and n > 1:
            a, b = rng.choice(n, size=2, replace=False)
            gates.append(Gate("cx", (int(a), int(b))))
        elif kind in ("rx", "ry", "rz"):
            gates.append(Gate(kind, (int(rng.integers(n)),), float(rng.uniform(-3, 3))))
        elif kind != "cx":
            gates.append(Gate(kind, (int(rng.integers(n)),)))
    return Circuit(n, gates)


def random_state(rng, n):
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return Statevector(v / np.linalg.norm(v))


def dimer(coeffs, l, scheme="binary", d=2):
    layout = QubitLayout.linear(2, l, BosonEncoding(scheme, d))
    return assemble(SystemSpec.dimer(), coeffs, layout), layout


def test_x_flips_zero_to_one():
    circ = Circuit(1, [Gate("h", (0,)), Gate("rz", (0,), np.pi), Gate("h", (0,))])
    out = apply_circuit(Statevector.basis(1, 0), circ)
    assert abs(abs(out.amplitudes[1]) - 1) < 1e-12


def test_cnot_uses_msb_convention():
    # |10> (qubit 0 set) -> |11>
    out = apply_circuit(Statevector.basis(2, 2), Circuit(2, [Gate("cx", (0, 1))]))
    assert np.allclose(out.amplitudes, [0, 0, 0, 1])


def test_statevector_validation():
    with pytest.raises(InvalidInputError):
        Statevector(np.ones(3))


@settings(max_examples=15, deadline=None)
@given(st.integers(min_value=1, max_value=4), st.integers(min_value=0, max_value=2**32 - 1))
def test_kernels_match_kronecker_matrices(n, seed):
    rng = np.random.default_rng(seed)
    circ = random_circuit(rng, n, 12)
    state = random_state(rng, n)
    ref = state.amplitudes.copy()
    for g in circ.gates:
        ref = kron_gate(g, n) @ ref
    out = apply_circuit(state, circ)
    assert np.allclose(out.amplitudes, ref, atol=1e-12)
    assert abs(out.norm() - 1) < 1e-12


def test_apply_circuit_leaves_input(rng):
    state = random_state(rng, 3)
    before = state.amplitudes.copy()
    apply_circuit(state, random_circuit(rng, 3, 10))
    assert np.array_equal(state.amplitudes, before)


def test_circuit_unitary_matches_columns(rng):
    circ = random_circuit(rng, 3, 15)
    u = circuit_unitary(circ)
    assert np.allclose(u.conj().T @ u, np.eye(8), atol=1e-12)
    for k in range(8):
        assert np.allclose(u[:, k], apply_circuit(Statevector.basis(3, k), circ).amplitudes)


def test_circuit_unitary_size_cap():
    with pytest.raises(UnsupportedSizeError):
        circuit_unitary(Circuit(11, []))


def test_init_state_and_populations(coeffs8):
    _, layout = dimer(coeffs8, 2)
    state = init_state(layout, 0)
    pops = measure_populations(state, layout)
    assert np.allclose(pops.p, [1, 0]) and pops.sector_mass == 1.0
    assert np.allclose(measure_populations(init_state(layout, 1), layout).p, [0, 1])
    with pytest.raises(InvalidInputError):
        init_state(layout, 2)


def test_populations_of_plus_plus():
    # |++> on two site qubits: each single-excitation configuration has 1/4
    layout = QubitLayout.linear(2, 0, BosonEncoding("binary", 2))
    state = Statevector(np.full(4, 0.5))
    pops = measure_populations(state, layout)
    assert np.allclose(pops.p, [0.5, 0.5]) and pops.sector_mass == pytest.approx(0.5)
    raw = measure_populations(state, layout, sector_filter=False)
    assert np.allclose(raw.p, [0.25, 0.25])


def test_empty_sector_raises():
    layout = QubitLayout.linear(2, 0, BosonEncoding("binary", 2))
    with pytest.raises(NumericalError):
        measure_populations(Statevector.basis(2, 0), layout)


def test_error_metrics():
    assert simulation_error([0.7, 0.3], [0.6, 0.4]) == pytest.approx(0.1)
    assert simulation_error([0.7, 0.3], [0.6, 0.4], site=0) == pytest.approx(0.1)
    assert total_variation([1, 0, 0], [0, 0.5, 0.5]) == pytest.approx(1.0)
    with pytest.raises(InvalidInputError):
        simulation_error([1.0], [0.5, 0.5])


def test_single_excitation_basis(coeffs8):
    _, layout = dimer(coeffs8, 1)
    basis = single_excitation_basis(layout)
    # 4 qubits, site qubits 1 and 2: 2 site configurations x 4 oscillator states
    assert basis.size == 8
    n = layout.total_qubits
    for b in basis:
        bits = [(int(b) >> (n - 1 - q)) & 1 for q in layout.system_qubits]
        assert sum(bits) == 1


def test_restricted_matrix_matches_dense(coeffs8):
    terms, layout = dimer(coeffs8, 2)
    h = terms.total()
    basis = single_excitation_basis(layout)
    dense = h.to_matrix(layout.total_qubits)
    assert np.allclose(restricted_matrix(h, layout.total_qubits, basis).toarray(), dense[np.ix_(basis, basis)])


def test_restricted_matrix_rejects_leaks():
    with pytest.raises(InvalidInputError, match="invariant"):
        restricted_matrix(PauliSum.single(0, "X"), 2, np.array([0, 1]))


def test_time_zero_is_identity(rng):
    h = PauliSum.single(0, "X", 100.0) + PauliSum.single(1, "Z", 30.0)
    state = random_state(rng, 2)
    assert np.allclose(exact_evolve(h, state, 0.0).amplitudes, state.amplitudes)


def test_diagonal_phases():
    h = PauliSum.single(0, "Z", 100.0)
    out = exact_evolve(h, Statevector(np.full(2, 2**-0.5)), 0.02)
    phase = 100.0 * 0.02 * CM1_PS_TO_RAD
    assert np.allclose(out.amplitudes, 2**-0.5 * np.exp([-1j * phase, 1j * phase]))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_krylov_matches_eigh(seed):
    rng = np.random.default_rng(seed)
    n = 8
    words = {}
    for _ in range(30):
        word = tuple((q, str(rng.choice(list("XYZ")))) for q in sorted(rng.choice(n, 2, replace=False)))
        words[word] = float(rng.normal(scale=200.0))
    h = PauliSum(words)
    state = random_state(rng, n)
    a = ExactPropagator(h, n, method="eigh").evolve(state, 0.05)
    kry = ExactPropagator(h, n, method="krylov")
    b = kry.evolve(state, 0.05)
    assert np.max(np.abs(a.amplitudes - b.amplitudes)) < 1e-9
    assert kry.last_error < 1e-10
    dense = expm(-1j * 0.05 * CM1_PS_TO_RAD * h.to_matrix(n)) @ state.amplitudes
    assert np.max(np.abs(a.amplitudes - dense)) < 1e-10


def test_propagator_size_cap():
    with pytest.raises(UnsupportedSizeError):
        ExactPropagator(PauliSum.single(0, "Z"), 15)
    prop = ExactPropagator(PauliSum.single(0, "Z"), 15, basis=np.array([0]), max_qubits=15)
    assert prop.method == "eigh"


def test_sector_propagator_matches_full(coeffs8):
    terms, layout = dimer(coeffs8, 2)
    h = terms.total()
    n = layout.total_qubits
    state = init_state(layout, 0)
    full = ExactPropagator(h, n).evolve(state, 0.1)
    sector = ExactPropagator(h, n, basis=single_excitation_basis(layout)).evolve(state, 0.1)
    assert np.max(np.abs(full.amplitudes - sector.amplitudes)) < 1e-10


def test_sector_propagator_rejects_outside_states(coeffs8):
    terms, layout = dimer(coeffs8, 1)
    prop = ExactPropagator(terms.total(), layout.total_qubits, basis=single_excitation_basis(layout))
    with pytest.raises(InvalidInputError):
        prop.evolve(Statevector.basis(layout.total_qubits, 0), 0.01)


def test_trotter_circuit_conserves_exciton_number(coeffs8):
    terms, layout = dimer(coeffs8, 3)
    state = init_state(layout, 0)
    circ = build_trotter_circuit(terms, 0.01, 10)
    out = apply_circuit(state, circ)
    number = exciton_number(layout).to_sparse(layout.total_qubits)
    assert abs(out.expectation(number) - 1) < 1e-10
    assert abs(measure_populations(out, layout).sector_mass - 1) < 1e-10


def test_zero_coupling_keeps_population(coeffs8):
    spec = SystemSpec((12410.0, 12530.0), ((0, 1, 0.0),))
    layout = QubitLayout.linear(2, 2, BosonEncoding("binary", 2))
    terms = assemble(spec, coeffs8, layout)
    out = apply_circuit(init_state(layout, 0), build_trotter_circuit(terms, 0.01, 10))
    assert np.allclose(measure_populations(out, layout).p, [1, 0], atol=1e-12)


def test_ten_step_circuit_matches_dense_product_formula(coeffs8):
    terms, layout = dimer(coeffs8, 2)
    state = init_state(layout, 0)
    circ_state = apply_circuit(state, build_trotter_circuit(terms, 0.01, 10))
    tau = 0.01 * CM1_PS_TO_RAD
    n = layout.total_qubits
    step = np.eye(2**n, dtype=complex)
    for g in terms.all_groups():
        step = expm(-1j * tau * g.to_matrix(n)) @ step
    ref = np.linalg.matrix_power(step, 10) @ state.amplitudes
    assert np.max(np.abs(circ_state.amplitudes - ref)) < 1e-9


@pytest.mark.parametrize("scheme,d,level", [("binary", 2, "group"), ("binary", 4, "term"), ("unary", 3, "term")])
def test_product_formula_levels(coeffs8, scheme, d, level):
    terms, _ = dimer(coeffs8, 1, scheme, d)
    u = circuit_unitary(build_trotter_circuit(terms, 0.01, 2))
    assert np.max(np.abs(u - product_formula_unitary(terms, 0.01, 2, level=level))) < 1e-10


def test_product_formula_level_validation(coeffs8):
    terms, _ = dimer(coeffs8, 1)
    with pytest.raises(InvalidInputError):
        product_formula_unitary(terms, 0.01, 1, level="bond")


def _config(text):
    return parse_config(text)


def test_run_dynamics_shapes_and_start():
    cfg = _config("[chain]\nl = 2\n[evolution]\nn_steps = 4\n[oracle]\nenabled = true\n")
    res = run_dynamics(cfg)
    assert res.times.shape == (5,) and res.p_site.shape == (5, 2)
    assert np.allclose(res.p_site[0], [1, 0])
    assert res.epsilon[0] == 0.0
    assert np.all(np.abs(res.sector_mass - 1) < 1e-10)
    assert res.metadata["n_qubits"] == 6 and res.metadata["oracle_method"] == "eigh"


def test_run_dynamics_deterministic():
    cfg = _config("[chain]\nl = 2\n[evolution]\nn_steps = 3\n[oracle]\nenabled = true\n")
    a, b = run_dynamics(cfg), run_dynamics(cfg)
    assert np.array_equal(a.p_site, b.p_site) and np.array_equal(a.epsilon, b.epsilon)


def test_higher_d_oracle_reference():
    base = "[chain]\nl = 2\n[evolution]\nn_steps = 5\n[oracle]\nenabled = true\n"
    hi = run_dynamics(_config(base + 'mode = "higher-d"\nd_ref = 4\n'))
    assert hi.metadata["oracle_qubits"] == 2 + 4 * 2
    # independent reference: dense propagation of the d = 4 Hamiltonian
    from tedopa_sim.chain_mapping import chain_coefficients

    cfg = _config(base)
    coeffs = chain_coefficients(cfg.spectral_density(), 2)
    terms, layout = dimer(coeffs, 2, "binary", 4)
    n = layout.total_qubits
    u = expm(-1j * 0.01 * CM1_PS_TO_RAD * terms.total().to_matrix(n))
    psi = init_state(layout, 0).amplitudes
    for _ in range(5):
        psi = u @ psi
    ref = measure_populations(Statevector(psi), layout).p
    assert np.allclose(hi.p_oracle[-1], ref, atol=1e-10)


def test_long_chain_oracle_uses_longer_chain():
    cfg = _config("[chain]\nl = 2\n[evolution]\nn_steps = 2\n[oracle]\nenabled = true\n"
                  'mode = "long-chain"\nl_ref = 4\n')
    res = run_dynamics(cfg)
    assert res.metadata["oracle_qubits"] == 10


def test_oracle_size_limit():
    cfg = _config("[chain]\nl = 5\n[evolution]\nn_steps = 1\n[oracle]\nenabled = true\nmax_qubits = 10\n")
    with pytest.raises(UnsupportedSizeError):
        run_dynamics(cfg)
