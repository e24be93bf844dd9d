"""Pauli strings and sums, and the bosonic encodings built from them.

Qubit 0 is the leftmost tensor factor, i.e. the most significant bit of a
basis-state index. A Pauli word is a sorted tuple of ``(qubit, axis)`` pairs
with identity factors omitted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from tedopa_sim.errors import InvalidInputError, UnsupportedSizeError

PRUNE_TOL = 1e-12
MAX_DECOMPOSE_QUBITS = 12

_AXES = ("X", "Y", "Z")

# sigma_a sigma_b = phase * sigma_c
_PRODUCT = {
    ("X", "Y"): (1j, "Z"),
    ("Y", "X"): (-1j, "Z"),
    ("Y", "Z"): (1j, "X"),
    ("Z", "Y"): (-1j, "X"),
    ("Z", "X"): (1j, "Y"),
    ("X", "Z"): (-1j, "Y"),
}

_SINGLE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _word(factors):
    word = tuple(sorted((int(q), str(a).upper()) for q, a in factors))
    qubits = [q for q, _ in word]
    if len(set(qubits)) != len(qubits):
        raise InvalidInputError(f"repeated qubit in Pauli word {word}")
    for q, a in word:
        if q < 0 or a not in _AXES:
            raise InvalidInputError(f"bad Pauli factor {(q, a)}")
    return word


def multiply_words(left, right):
    """Product of two Pauli words as ``(phase, word)``."""
    phase = 1 + 0j
    merged = dict(left)
    for q, b in right:
        a = merged.get(q)
        if a is None:
            merged[q] = b
        elif a == b:
            del merged[q]
        else:
            p, c = _PRODUCT[(a, b)]
            phase *= p
            merged[q] = c
    return phase, tuple(sorted(merged.items()))


@dataclass(frozen=True)
class PauliString:
    coefficient: complex
    factors: tuple

    def __post_init__(self):
        object.__setattr__(self, "factors", _word(self.factors))
        object.__setattr__(self, "coefficient", complex(self.coefficient))

    @property
    def weight(self):
        return len(self.factors)

    @property
    def qubits(self):
        return tuple(q for q, _ in self.factors)

    def label(self):
        return " ".join(f"{a}{q}" for q, a in self.factors) or "I"


class PauliSum:
    """Weighted sum of Pauli words kept in combined, pruned form."""

    __slots__ = ("_terms",)

    def __init__(self, terms=None):
        self._terms = {}
        if terms is None:
            return
        if isinstance(terms, dict):
            items = terms.items()
        else:
            items = ((t.factors, t.coefficient) if isinstance(t, PauliString) else
                     (_word(t[1]), t[0]) for t in terms)
        for word, coeff in items:
            word = _word(word)
            self._terms[word] = self._terms.get(word, 0j) + complex(coeff)
        self._prune()

    @classmethod
    def _raw(cls, mapping):
        out = cls()
        out._terms = mapping
        out._prune()
        return out

    @classmethod
    def identity(cls, coefficient=1.0):
        return cls({(): coefficient})

    @classmethod
    def single(cls, qubit, axis, coefficient=1.0):
        return cls({((qubit, axis),): coefficient})

    def _prune(self):
        for word in [w for w, c in self._terms.items() if abs(c) < PRUNE_TOL]:
            del self._terms[word]

    def canonicalize(self):
        """Copy with terms sorted by (first qubit, axes) and tiny terms dropped."""
        return PauliSum._raw(dict(sorted(self._terms.items(), key=lambda kv: _sort_key(kv[0]))))

    @property
    def terms(self):
        return [PauliString(c, w) for w, c in sorted(self._terms.items(), key=lambda kv: _sort_key(kv[0]))]

    def items(self):
        return self._terms.items()

    def coefficient(self, factors):
        return self._terms.get(_word(factors), 0j)

    def __len__(self):
        return len(self._terms)

    def __iter__(self):
        return iter(self.terms)

    def __bool__(self):
        return bool(self._terms)

    def __repr__(self):
        inner = " + ".join(f"({c:.6g})*{PauliString(c, w).label()}" for w, c in self._terms.items())
        return f"PauliSum({inner or '0'})"

    def __eq__(self, other):
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self._terms == other._terms

    def allclose(self, other, atol=1e-12):
        keys = set(self._terms) | set(other._terms)
        return all(abs(self._terms.get(k, 0) - other._terms.get(k, 0)) <= atol for k in keys)

    def __add__(self, other):
        if isinstance(other, (int, float, complex)):
            other = PauliSum.identity(other)
        out = dict(self._terms)
        for w, c in other._terms.items():
            out[w] = out.get(w, 0j) + c
        return PauliSum._raw(out)

    __radd__ = __add__

    def __neg__(self):
        return PauliSum._raw({w: -c for w, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return PauliSum._raw({w: c * other for w, c in self._terms.items()})
        out = {}
        for w1, c1 in self._terms.items():
            for w2, c2 in other._terms.items():
                phase, w = multiply_words(w1, w2)
                out[w] = out.get(w, 0j) + phase * c1 * c2
        return PauliSum._raw(out)

    def __rmul__(self, other):
        return self * other

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def dagger(self):
        return PauliSum._raw({w: c.conjugate() for w, c in self._terms.items()})

    def is_hermitian(self, atol=PRUNE_TOL):
        return all(abs(c.imag) <= atol for c in self._terms.values())

    def real(self):
        """Drop imaginary parts (use after checking ``is_hermitian``)."""
        return PauliSum._raw({w: complex(c.real) for w, c in self._terms.items()})

    def constant(self):
        return self._terms.get((), 0j)

    def without_constant(self):
        return PauliSum._raw({w: c for w, c in self._terms.items() if w})

    def qubits(self):
        return sorted({q for w in self._terms for q, _ in w})

    def max_qubit(self):
        qs = self.qubits()
        return qs[-1] if qs else -1

    def relabel(self, mapping):
        """Move qubit ``k`` to ``mapping[k]``."""
        return PauliSum._raw(
            {_word((mapping[q], a) for q, a in w): c for w, c in self._terms.items()}
        )

    def to_sparse(self, n_qubits):
        return pauli_sum_matrix(self, n_qubits)

    def to_matrix(self, n_qubits):
        if n_qubits > 14:
            raise UnsupportedSizeError(f"dense matrix for {n_qubits} qubits is too large")
        return pauli_sum_matrix(self, n_qubits).toarray()


def _sort_key(word):
    return (word[0][0] if word else -1, tuple(a for _, a in word), tuple(q for q, _ in word))


def _masks(word, n_qubits):
    x = z = ny = 0
    for q, a in word:
        if q >= n_qubits:
            raise InvalidInputError(f"qubit {q} outside a {n_qubits}-qubit register")
        bit = 1 << (n_qubits - 1 - q)
        if a in ("X", "Y"):
            x |= bit
        if a in ("Y", "Z"):
            z |= bit
        if a == "Y":
            ny += 1
    return x, z, ny


def word_action(word, n_qubits):
    """``(flip_mask, phases)`` with P|b> = phases[b] |b ^ flip_mask>."""
    x, z, ny = _masks(word, n_qubits)
    idx = np.arange(1 << n_qubits, dtype=np.int64)
    sign = 1 - 2 * (np.bitwise_count(idx & z) & 1).astype(np.int8)
    return x, (1j) ** ny * sign


def pauli_sum_matrix(ps, n_qubits):
    """Sparse CSR matrix of a Pauli sum on ``n_qubits`` qubits."""
    dim = 1 << n_qubits
    by_flip = {}
    for word, coeff in ps.items():
        x, phases = word_action(word, n_qubits)
        acc = by_flip.get(x)
        by_flip[x] = coeff * phases if acc is None else acc + coeff * phases
    if not by_flip:
        return sparse.csr_matrix((dim, dim), dtype=complex)
    cols = np.arange(dim, dtype=np.int64)
    rows, data, colss = [], [], []
    for x in sorted(by_flip):
        rows.append(cols ^ x)
        colss.append(cols)
        data.append(by_flip[x])
    mat = sparse.csr_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(colss))), shape=(dim, dim)
    )
    mat.eliminate_zeros()
    return mat


# transfer matrix from (row bit, col bit) to the Pauli labels I, X, Y, Z:
# c_sigma = sum_{r,c} conj(sigma[r, c]) M[r, c] / 2
_TO_PAULI = np.array(
    [[np.conj(_SINGLE[s][r, c]) / 2 for r in (0, 1) for c in (0, 1)] for s in "IXYZ"]
)


def matrix_to_pauli(matrix):
    """Pauli decomposition c_P = Tr(P^dagger M) / 2^q of a 2^q x 2^q matrix.

    Uses a per-qubit basis change, O(q 4^q), instead of 4^q traces.
    """
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {m.shape}")
    dim = m.shape[0]
    q = dim.bit_length() - 1
    if dim < 1 or (1 << q) != dim:
        raise InvalidInputError(f"dimension {dim} is not a power of two")
    if q > MAX_DECOMPOSE_QUBITS:
        raise UnsupportedSizeError(f"{q} qubits exceeds the decomposition cap of {MAX_DECOMPOSE_QUBITS}")
    if q == 0:
        return PauliSum.identity(m[0, 0])
    t = m.reshape((2,) * (2 * q))
    # interleave (r0, c0, r1, c1, ...) and fuse each pair into one axis of size 4
    order = [ax for k in range(q) for ax in (k, q + k)]
    t = t.transpose(order).reshape((4,) * q)
    for k in range(q):
        t = np.moveaxis(np.tensordot(_TO_PAULI, t, axes=([1], [k])), 0, k)
    flat = t.reshape(-1)
    keep = np.flatnonzero(np.abs(flat) >= PRUNE_TOL)
    out = {}
    for idx in keep:
        digits = np.unravel_index(idx, (4,) * q)
        word = tuple((k, "IXYZ"[d]) for k, d in enumerate(digits) if d)
        out[word] = complex(flat[idx])
    return PauliSum._raw(out)


# |0><1| and |1><0| on one qubit
def lower_op(qubit):
    """|0><1| = (X + iY)/2."""
    return PauliSum({((qubit, "X"),): 0.5, ((qubit, "Y"),): 0.5j})


def raise_op(qubit):
    """|1><0| = (X - iY)/2."""
    return PauliSum({((qubit, "X"),): 0.5, ((qubit, "Y"),): -0.5j})


def number_op(qubit):
    """|1><1| = (I - Z)/2."""
    return PauliSum({(): 0.5, ((qubit, "Z"),): -0.5})


@dataclass(frozen=True)
class BosonEncoding:
    """Qubit encoding of a d-level truncated oscillator."""

    scheme: str
    d: int

    def __post_init__(self):
        scheme = str(self.scheme).lower()
        if scheme not in ("unary", "binary"):
            raise InvalidInputError(f"unknown encoding {self.scheme!r}")
        object.__setattr__(self, "scheme", scheme)
        if self.d < 2:
            raise InvalidInputError("an oscillator needs at least d = 2 levels")
        if scheme == "binary" and self.d & (self.d - 1):
            raise InvalidInputError(f"binary encoding needs d to be a power of two, got d = {self.d}")

    @property
    def qubits_per_oscillator(self):
        return self.d if self.scheme == "unary" else int(math.log2(self.d))

    def basis_index(self, level, n_qubits=None, offset=0):
        """Register index of the encoded level on qubits offset.. of an n-qubit register."""
        q = self.qubits_per_oscillator
        n_qubits = q if n_qubits is None else n_qubits
        if self.scheme == "unary":
            local = 1 << (q - 1 - level)
        else:
            local = level
        return local << (n_qubits - offset - q)


def ladder_matrix(d):
    """Truncated annihilation operator, sum_{m<d-1} sqrt(m+1) |m><m+1|."""
    return np.diag(np.sqrt(np.arange(1, d, dtype=float)), 1)


def _check_which(which):
    if which not in ("create", "annihilate", "number"):
        raise InvalidInputError(f"unknown operator {which!r}")


def encode_boson(enc, which, qubits=None):
    """Pauli form of b^dagger, b or b^dagger b on the oscillator's qubits."""
    _check_which(which)
    q = enc.qubits_per_oscillator
    qubits = tuple(range(q)) if qubits is None else tuple(qubits)
    if len(qubits) != q:
        raise InvalidInputError(f"{enc.scheme} d={enc.d} needs {q} qubits, got {len(qubits)}")
    if enc.scheme == "binary":
        b = ladder_matrix(enc.d)
        mat = {"annihilate": b, "create": b.T, "number": b.T @ b}[which]
        return matrix_to_pauli(mat).relabel(dict(enumerate(qubits)))
    if which == "number":
        out = PauliSum()
        for level, qubit in enumerate(qubits):
            out = out + level * number_op(qubit)
        return out
    out = PauliSum()
    for j in range(enc.d - 1):
        amp = math.sqrt(j + 1)
        if which == "create":
            term = lower_op(qubits[j]) * raise_op(qubits[j + 1])
        else:
            term = raise_op(qubits[j]) * lower_op(qubits[j + 1])
        out = out + amp * term
    return out


def encode_hardcore_boson(site_qubit, which):
    """Two-level exciton operators on one qubit."""
    _check_which(which)
    if which == "create":
        return raise_op(site_qubit)
    if which == "annihilate":
        return lower_op(site_qubit)
    return number_op(site_qubit)


def hopping_term_pauli(enc, osc_a, osc_b):
    """Hermitian b_a^dagger b_b + b_b^dagger b_a between two oscillators."""
    osc_a, osc_b = tuple(osc_a), tuple(osc_b)
    if set(osc_a) & set(osc_b):
        raise InvalidInputError("oscillator qubit ranges overlap")
    create_a = encode_boson(enc, "create", osc_a)
    create_b = encode_boson(enc, "create", osc_b)
    hop = create_a * create_b.dagger() + create_b * create_a.dagger()
    return hop.real()


def dumps(ps):
    """One term per line: ``(<re>,<im>) <axis><index> ...``."""
    lines = []
    for term in ps.terms:
        c = term.coefficient
        body = " ".join(f"{a}{q}" for q, a in term.factors)
        lines.append(f"({c.real:.12g},{c.imag:.12g}) {body}".rstrip())
    return "\n".join(lines) + ("\n" if lines else "")


def loads(text):
    terms = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        head, _, body = line.partition(")")
        re_s, im_s = head.lstrip("(").split(",")
        word = tuple((int(tok[1:]), tok[0]) for tok in body.split())
        terms[word] = complex(float(re_s), float(im_s))
    return PauliSum(terms)
