"""Qubit Hamiltonian of sites plus oscillator chains, grouped for Trotterization.

Sites are hardcore bosons (one qubit each); chain oscillators use a
:class:`~tedopa_sim.pauli.BosonEncoding`. Every two-body term lives on a
*bond* between two units (a site or an oscillator). Bonds are coloured so
that bonds of one colour share no unit; colour 0 is the "odd" layer and
colour 1 the "even" layer of a linear layout.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from tedopa_sim.errors import InvalidInputError
from tedopa_sim.pauli import (
    BosonEncoding,
    PauliSum,
    encode_boson,
    encode_hardcore_boson,
    hopping_term_pauli,
    number_op,
)


@dataclass(frozen=True)
class SystemSpec:
    """Site energies (cm^-1) and pairwise couplings ``(m, n, g)``."""

    site_energies: tuple
    couplings: tuple = ()
    coupling_operator: str = "Z"

    def __post_init__(self):
        energies = tuple(float(e) for e in self.site_energies)
        if not energies:
            raise InvalidInputError("need at least one site")
        couplings = tuple((int(m), int(n), float(g)) for m, n, g in self.couplings)
        for m, n, _ in couplings:
            if m == n or not (0 <= m < len(energies) and 0 <= n < len(energies)):
                raise InvalidInputError(f"coupling ({m}, {n}) does not join two distinct sites")
        if self.coupling_operator.upper() != "Z":
            raise InvalidInputError("only the Pauli-Z system-bath coupling is supported")
        object.__setattr__(self, "site_energies", energies)
        object.__setattr__(self, "couplings", couplings)

    @property
    def n_sites(self):
        return len(self.site_energies)

    @classmethod
    def dimer(cls, e0=12410.0, e1=12530.0, g=87.7):
        return cls((e0, e1), ((0, 1, g),))


@dataclass(frozen=True)
class QubitLayout:
    """Assignment of sites and chain oscillators to register qubits.

    ``chains`` holds ``(site, ranges)`` with ``ranges`` ordered head to tail.
    """

    system_qubits: tuple
    chains: tuple
    encoding: BosonEncoding
    total_qubits: int

    def __post_init__(self):
        used = list(self.system_qubits)
        for _, ranges in self.chains:
            for r in ranges:
                if len(r) != self.encoding.qubits_per_oscillator:
                    raise InvalidInputError("oscillator range size does not match the encoding")
                used.extend(r)
        if len(set(used)) != len(used):
            raise InvalidInputError("layout assigns a qubit twice")
        if used and (min(used) < 0 or max(used) >= self.total_qubits):
            raise InvalidInputError("layout qubit outside the register")

    @classmethod
    def linear(cls, n_sites, l, encoding):
        """Line layout: chain 0 tail..head, sites 0..n-1, then chains 1.. head..tail.

        For a dimer this is chain A (tail..head), site 0, site 1, chain B
        (head..tail), the ordering of the standard two-site circuit.
        """
        q = encoding.qubits_per_oscillator
        pos = 0

        def take():
            nonlocal pos
            r = tuple(range(pos, pos + q))
            pos += q
            return r

        chains = []
        if l > 0:
            first = [take() for _ in range(l)]
            chains.append((0, tuple(reversed(first))))
        system = tuple(range(pos, pos + n_sites))
        pos += n_sites
        if l > 0:
            for site in range(1, n_sites):
                chains.append((site, tuple(take() for _ in range(l))))
        return cls(system, tuple(chains), encoding, pos)

    @property
    def n_sites(self):
        return len(self.system_qubits)

    def chain_for(self, site):
        for s, ranges in self.chains:
            if s == site:
                return ranges
        return ()

    def oscillator_qubits(self):
        return sorted(q for _, ranges in self.chains for r in ranges for q in r)


@dataclass
class HamiltonianTerms:
    """Grouped Hamiltonian; ``groups[0]`` is H_odd, ``groups[1]`` H_even."""

    h_sing: PauliSum
    groups: list
    n_qubits: int
    constant: float = 0.0
    bonds: list = field(default_factory=list)

    @property
    def h_odd(self):
        return self.groups[0] if self.groups else PauliSum()

    @property
    def h_even(self):
        return self.groups[1] if len(self.groups) > 1 else PauliSum()

    @property
    def n_groups(self):
        return len(self.groups)

    def all_groups(self):
        """Groups in Trotter application order: two-body layers, then singles."""
        return [*self.groups, self.h_sing]

    def total(self):
        out = self.h_sing
        for g in self.groups:
            out = out + g
        return out

    def to_json(self):
        def encode(ps):
            return [
                {"coefficient": [t.coefficient.real, t.coefficient.imag],
                 "factors": [[q, a] for q, a in t.factors]}
                for t in ps.terms
            ]

        payload = {
            "n_qubits": self.n_qubits,
            "dropped_constant": self.constant,
            "h_sing": encode(self.h_sing),
            "groups": [
                {"name": _group_name(i), "bonds": [list(b) for b in self.bonds[i]],
                 "terms": encode(g)}
                for i, g in enumerate(self.groups)
            ],
        }
        return json.dumps(payload, indent=1)


def _group_name(i):
    return {0: "odd", 1: "even"}.get(i, f"group{i}")


def build_system(spec):
    """Sum_m eps_m c_m^dag c_m + sum g (c_m^dag c_n + h.c.), constants included."""
    out = PauliSum()
    for m, eps in enumerate(spec.site_energies):
        out = out + eps * number_op(m)
    for m, n, g in spec.couplings:
        hop = encode_hardcore_boson(m, "create") * encode_hardcore_boson(n, "annihilate")
        out = out + g * (hop + hop.dagger())
    return out.real()


def build_chain(coeffs, enc, qubit_ranges):
    """Sum_n w_n b_n^dag b_n + sum_n t_{n+1,n} (b_{n+1}^dag b_n + h.c.)."""
    qubit_ranges = [tuple(r) for r in qubit_ranges]
    if len(qubit_ranges) != coeffs.length:
        raise InvalidInputError(
            f"{len(qubit_ranges)} oscillator ranges for a chain of length {coeffs.length}"
        )
    out = PauliSum()
    for w, r in zip(coeffs.w, qubit_ranges):
        out = out + float(w) * encode_boson(enc, "number", r)
    for t, ra, rb in zip(coeffs.t, qubit_ranges, qubit_ranges[1:]):
        out = out + float(t) * hopping_term_pauli(enc, rb, ra)
    return out.real()


def build_interaction(site_qubit, head_oscillator, t0, enc):
    """t0 Z_site (b_0^dag + b_0) on the chain head."""
    if t0 == 0:
        return PauliSum()
    displacement = encode_boson(enc, "create", head_oscillator)
    displacement = displacement + displacement.dagger()
    return (t0 * PauliSum.single(site_qubit, "Z") * displacement).real()


def exciton_number(layout):
    """Total site excitation number sum_m (I - Z_m)/2."""
    out = PauliSum()
    for q in layout.system_qubits:
        out = out + number_op(q)
    return out


def _color_bonds(bonds):
    """Greedy edge colouring of bonds sorted by position along the register."""
    colours = {}
    for bond in sorted(bonds, key=lambda b: (min(b), max(b))):
        taken = {c for other, c in colours.items() if set(other) & set(bond)}
        c = 0
        while c in taken:
            c += 1
        colours[bond] = c
    return colours


def assemble(spec, coeffs, layout):
    """Full grouped Hamiltonian H_S + sum over chains of (H_SE + H_E).

    ``coeffs`` is one :class:`ChainCoefficients` shared by every chain, or a
    mapping from site to coefficients. Identity components are dropped and
    reported in ``constant``.
    """
    if spec.n_sites != layout.n_sites:
        raise InvalidInputError("layout and system disagree on the number of sites")
    chain_sites = [s for s, _ in layout.chains]
    if len(set(chain_sites)) != len(chain_sites):
        raise InvalidInputError("each site may own at most one chain")
    enc = layout.encoding
    site_q = layout.system_qubits

    # units are keyed by their first qubit
    single = PauliSum()
    bond_terms = {}

    def add_bond(unit_a, unit_b, ps):
        key = (min(unit_a, unit_b), max(unit_a, unit_b))
        bond_terms[key] = bond_terms.get(key, PauliSum()) + ps

    sys_h = build_system(spec).relabel(dict(enumerate(site_q)))
    for m, eps in enumerate(spec.site_energies):
        single = single + eps * number_op(site_q[m])
    for m, n, g in spec.couplings:
        hop = encode_hardcore_boson(site_q[m], "create") * encode_hardcore_boson(site_q[n], "annihilate")
        add_bond(site_q[m], site_q[n], (g * (hop + hop.dagger())).real())

    for site, ranges in layout.chains:
        if not ranges:
            continue
        c = coeffs[site] if isinstance(coeffs, dict) else coeffs
        if c.length < len(ranges):
            raise InvalidInputError(f"chain for site {site} needs {len(ranges)} coefficients")
        c = c.truncated(len(ranges))
        add_bond(site_q[site], ranges[0][0], build_interaction(site_q[site], ranges[0], c.t0, enc))
        for w, r in zip(c.w, ranges):
            single = single + float(w) * encode_boson(enc, "number", r)
        for t, ra, rb in zip(c.t, ranges, ranges[1:]):
            add_bond(ra[0], rb[0], float(t) * hopping_term_pauli(enc, rb, ra))

    constant = single.constant().real
    for ps in bond_terms.values():
        constant += ps.constant().real
    single = single.without_constant().real()
    bond_terms = {k: v.without_constant().real() for k, v in bond_terms.items() if v.without_constant()}

    colours = _color_bonds(list(bond_terms))
    n_colours = max(colours.values(), default=-1) + 1
    groups = [PauliSum() for _ in range(n_colours)]
    bonds = [[] for _ in range(n_colours)]
    for bond in sorted(bond_terms):
        c = colours[bond]
        groups[c] = groups[c] + bond_terms[bond]
        bonds[c].append(bond)
    assert abs(constant - sys_h.constant().real - _chain_constant(layout, coeffs, enc)) < 1e-6 * (1 + abs(constant))
    return HamiltonianTerms(
        h_sing=single.canonicalize(),
        groups=[g.canonicalize() for g in groups],
        n_qubits=layout.total_qubits,
        constant=constant,
        bonds=bonds,
    )


def _chain_constant(layout, coeffs, enc):
    total = 0.0
    for site, ranges in layout.chains:
        if not ranges:
            continue
        c = (coeffs[site] if isinstance(coeffs, dict) else coeffs).truncated(len(ranges))
        total += build_chain(c, enc, ranges).constant().real
    return total
