"""Molecular integrals, the Jordan-Wigner qubit Hamiltonian and dense FCI checks.

Spin orbitals are interleaved: qubit ``2p`` is spatial orbital ``p`` with spin
alpha, qubit ``2p + 1`` is the same orbital with spin beta.  Basis states are
little-endian, qubit ``k`` is bit ``k`` of the amplitude index.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse

PRUNE_TOL = 1e-12
MAX_DENSE_QUBITS = 16

FIXTURE_DIR = Path(__file__).parent / "fixtures"


class FCIDUMPError(ValueError):
    """Raised for malformed FCIDUMP text; the message names the offending line."""


@dataclass(frozen=True)
class FermionIntegrals:
    """Spatial-orbital integrals of a molecular Hamiltonian.

    ``h2`` is stored in chemist notation, ``h2[p, q, r, s] = (pq|rs)``.
    """

    n_spatial: int
    n_alpha: int
    n_beta: int
    e_nuclear: float
    h1: np.ndarray
    h2: np.ndarray

    def __post_init__(self):
        n = self.n_spatial
        if self.h1.shape != (n, n) or self.h2.shape != (n, n, n, n):
            raise ValueError("integral shapes do not match n_spatial")
        if not 0 <= self.n_alpha <= n or not 0 <= self.n_beta <= n:
            raise ValueError("electron counts exceed the number of orbitals")

    @property
    def n_qubits(self) -> int:
        return 2 * self.n_spatial

    @property
    def n_electrons(self) -> int:
        return self.n_alpha + self.n_beta

    @property
    def sz(self) -> float:
        return 0.5 * (self.n_alpha - self.n_beta)

    def check_symmetry(self, atol: float = 1e-12) -> None:
        h1, h2 = self.h1, self.h2
        if not np.allclose(h1, h1.T, atol=atol):
            raise ValueError("h1 is not symmetric")
        for perm in _EIGHTFOLD[1:]:
            if not np.allclose(h2, h2.transpose(perm), atol=atol):
                raise ValueError(f"h2 lacks permutational symmetry {perm}")


# index permutations (of the axes p,q,r,s) that leave real (pq|rs) invariant
_EIGHTFOLD = [
    (0, 1, 2, 3), (1, 0, 2, 3), (0, 1, 3, 2), (1, 0, 3, 2),
    (2, 3, 0, 1), (3, 2, 0, 1), (2, 3, 1, 0), (3, 2, 1, 0),
]


_HEADER_RE = re.compile(r"&FCI(.*?)(?:&END|/)", re.IGNORECASE | re.DOTALL)
_KEY_RE = re.compile(r"([A-Za-z0-9_]+)\s*=\s*([^=]*?)(?=,?\s*[A-Za-z0-9_]+\s*=|$)", re.DOTALL)


def _parse_header(text: str) -> tuple[dict[str, str], int]:
    match = _HEADER_RE.search(text)
    if match is None or not text.lstrip().upper().startswith("&FCI"):
        raise FCIDUMPError("line 1: missing '&FCI ... &END' namelist header")
    body = match.group(1)
    fields = {}
    for key, value in _KEY_RE.findall(body):
        fields[key.upper()] = value.strip().rstrip(",")
    header_lines = text[: match.end()].count("\n") + 1
    return fields, header_lines


def _header_int(fields: dict[str, str], key: str, default: int | None = None) -> int:
    if key not in fields:
        if default is not None:
            return default
        raise FCIDUMPError(f"line 1: header is missing {key}")
    try:
        return int(fields[key])
    except ValueError:
        raise FCIDUMPError(f"line 1: header field {key}={fields[key]!r} is not an integer") from None


def parse_fcidump(text: str) -> FermionIntegrals:
    """Parse FCIDUMP text (chemist convention, 1-based indices).

    Every listed integral is copied into all of its symmetry-equivalent
    slots.  Repeated entries must agree to 1e-10.
    """
    fields, n_header = _parse_header(text)
    norb = _header_int(fields, "NORB")
    nelec = _header_int(fields, "NELEC")
    ms2 = _header_int(fields, "MS2", 0)
    if norb <= 0:
        raise FCIDUMPError("line 1: NORB must be positive")
    if (nelec + ms2) % 2 or abs(ms2) > nelec:
        raise FCIDUMPError(f"line 1: NELEC={nelec} and MS2={ms2} are inconsistent")
    n_alpha = (nelec + ms2) // 2
    n_beta = (nelec - ms2) // 2
    if n_alpha > norb or n_beta > norb:
        raise FCIDUMPError(f"line 1: {nelec} electrons do not fit in {norb} orbitals")

    h1 = np.zeros((norb, norb))
    h2 = np.zeros((norb, norb, norb, norb))
    e_nuc = 0.0
    seen1: dict[tuple[int, int], float] = {}
    seen2: dict[tuple[int, int, int, int], float] = {}
    seen_nuc = None

    lines = text.splitlines()
    for lineno, line in enumerate(lines[n_header:], start=n_header + 1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 5:
            raise FCIDUMPError(f"line {lineno}: expected 'value p q r s', got {line.strip()!r}")
        try:
            value = float(parts[0].replace("D", "E").replace("d", "e"))
            p, q, r, s = (int(x) for x in parts[1:])
        except ValueError:
            raise FCIDUMPError(f"line {lineno}: cannot parse {line.strip()!r}") from None
        if any(i < 0 or i > norb for i in (p, q, r, s)):
            raise FCIDUMPError(f"line {lineno}: index out of range 0..{norb}")

        if p == q == r == s == 0:
            if seen_nuc is not None and abs(seen_nuc - value) > 1e-10:
                raise FCIDUMPError(f"line {lineno}: conflicting nuclear repulsion entry")
            seen_nuc = e_nuc = value
        elif r == s == 0:
            if p == 0 or q == 0:
                raise FCIDUMPError(f"line {lineno}: malformed one-electron index pair")
            key = (min(p, q), max(p, q))
            if key in seen1 and abs(seen1[key] - value) > 1e-10:
                raise FCIDUMPError(f"line {lineno}: conflicting duplicate entry for h1{key}")
            seen1[key] = value
            h1[p - 1, q - 1] = h1[q - 1, p - 1] = value
        elif 0 in (p, q, r, s):
            # orbital energies (p 0 0 0) carry no Hamiltonian information
            if q == r == s == 0:
                continue
            raise FCIDUMPError(f"line {lineno}: malformed two-electron indices")
        else:
            idx = (p - 1, q - 1, r - 1, s - 1)
            key = min(tuple(idx[i] for i in perm) for perm in _EIGHTFOLD)
            if key in seen2 and abs(seen2[key] - value) > 1e-10:
                raise FCIDUMPError(f"line {lineno}: conflicting duplicate entry for (pq|rs)={idx}")
            seen2[key] = value
            for perm in _EIGHTFOLD:
                h2[tuple(idx[i] for i in perm)] = value

    return FermionIntegrals(norb, n_alpha, n_beta, e_nuc, h1, h2)


def read_fcidump(path: str | Path) -> FermionIntegrals:
    return parse_fcidump(Path(path).read_text())


def to_fcidump(ints: FermionIntegrals, tol: float = 0.0) -> str:
    """Serialize integrals to FCIDUMP text, one line per symmetry-unique value."""
    n = ints.n_spatial
    out = [
        f" &FCI NORB={n},NELEC={ints.n_electrons},MS2={ints.n_alpha - ints.n_beta},",
        "  ORBSYM=" + "1," * n,
        "  ISYM=1,",
        " &END",
    ]
    for p, q, r, s in itertools.product(range(n), repeat=4):
        if p < q or r < s or (p * n + q) < (r * n + s):
            continue
        v = ints.h2[p, q, r, s]
        if abs(v) > tol:
            out.append(f"{float(v)!r} {p + 1} {q + 1} {r + 1} {s + 1}")
    for p in range(n):
        for q in range(p + 1):
            v = ints.h1[p, q]
            if abs(v) > tol:
                out.append(f"{float(v)!r} {p + 1} {q + 1} 0 0")
    out.append(f"{float(ints.e_nuclear)!r} 0 0 0 0")
    return "\n".join(out) + "\n"


def synthetic_hamiltonian(n_spatial: int, seed: int) -> FermionIntegrals:
    """Random symmetric integrals with entries in [-1, 1], half filling."""
    if not 1 <= n_spatial <= 6:
        raise ValueError("n_spatial must be between 1 and 6")
    rng = np.random.default_rng(seed)
    n = n_spatial
    h1 = rng.uniform(-1, 1, (n, n))
    h1 = np.triu(h1) + np.triu(h1, 1).T
    raw = rng.uniform(-1, 1, (n, n, n, n))
    h2 = np.zeros_like(raw)
    for idx in itertools.product(range(n), repeat=4):
        key = min(tuple(idx[i] for i in perm) for perm in _EIGHTFOLD)
        h2[idx] = raw[key]
    n_alpha = (n + 1) // 2
    n_beta = n // 2
    return FermionIntegrals(n, n_alpha, n_beta, float(rng.uniform(-1, 1)), h1, h2)


@dataclass(frozen=True, order=True)
class PauliString:
    """A tensor product of single-qubit Paulis; ``letters[k]`` acts on qubit ``k``."""

    letters: str

    def __post_init__(self):
        if set(self.letters) - set("IXYZ"):
            raise ValueError(f"invalid Pauli letters {self.letters!r}")

    @property
    def n_qubits(self) -> int:
        return len(self.letters)

    @classmethod
    def from_masks(cls, n_qubits: int, x: int, z: int) -> PauliString:
        table = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}
        return cls("".join(table[(x >> k) & 1, (z >> k) & 1] for k in range(n_qubits)))

    @classmethod
    def from_dict(cls, n_qubits: int, ops: dict[int, str]) -> PauliString:
        letters = ["I"] * n_qubits
        for k, a in ops.items():
            letters[k] = a
        return cls("".join(letters))

    @cached_property
    def masks(self) -> tuple[int, int]:
        """Symplectic (x, z) bit masks, with Y = i X Z."""
        x = z = 0
        for k, a in enumerate(self.letters):
            if a in "XY":
                x |= 1 << k
            if a in "ZY":
                z |= 1 << k
        return x, z

    def is_identity(self) -> bool:
        return set(self.letters) <= {"I"}

    def __str__(self):
        ops = [f"{a}{k}" for k, a in enumerate(self.letters) if a != "I"]
        return " ".join(ops) if ops else "I"


def _pauli_product_phase(x1: int, z1: int, x2: int, z2: int) -> int:
    """Power of i in P(x1,z1) P(x2,z2) = i**g P(x1^x2, z1^z2)."""
    y1 = x1 & z1
    xo = x1 & ~z1
    zo = ~x1 & z1
    g = (
        (y1 & z2 & ~x2).bit_count() - (y1 & x2 & ~z2).bit_count()
        + (xo & z2 & x2).bit_count() - (xo & z2 & ~x2).bit_count()
        + (zo & x2 & ~z2).bit_count() - (zo & x2 & z2).bit_count()
    )
    return g % 4


_IPOW = (1, 1j, -1, -1j)


class _MaskOperator(dict):
    """Complex-weighted Pauli sum keyed by (x, z) masks; builder for jordan_wigner."""

    def __mul__(self, other: _MaskOperator) -> _MaskOperator:
        out = _MaskOperator()
        for (x1, z1), c1 in self.items():
            for (x2, z2), c2 in other.items():
                key = (x1 ^ x2, z1 ^ z2)
                out[key] = out.get(key, 0) + c1 * c2 * _IPOW[_pauli_product_phase(x1, z1, x2, z2)]
        return out

    def add(self, other: _MaskOperator, scale: complex = 1.0) -> None:
        for key, c in other.items():
            self[key] = self.get(key, 0) + scale * c


def _ladder(j: int, dagger: bool) -> _MaskOperator:
    """JW image of a_j (or a_j^dagger): Z_0...Z_{j-1} (X_j +/- iY_j)/2."""
    chain = (1 << j) - 1
    bit = 1 << j
    # (bit, chain | bit) is Y_j on top of the parity chain
    return _MaskOperator({(bit, chain): 0.5, (bit, chain | bit): -0.5j if dagger else 0.5j})


@dataclass
class QubitOperator:
    """Real-weighted sum of Pauli strings (a Hermitian operator)."""

    n_qubits: int
    terms: dict[PauliString, float] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for p, c in self.terms.items():
            if p.n_qubits != self.n_qubits:
                raise ValueError(f"Pauli string {p} has wrong length for {self.n_qubits} qubits")
            c = complex(c)
            if abs(c.imag) > 1e-10:
                raise ValueError(f"coefficient of {p} is not real: {c}")
            if abs(c.real) >= PRUNE_TOL:
                clean[p] = clean.get(p, 0.0) + c.real
        self.terms = clean

    @classmethod
    def from_pairs(cls, n_qubits: int, pairs) -> QubitOperator:
        terms: dict[PauliString, float] = {}
        for letters, c in pairs:
            p = letters if isinstance(letters, PauliString) else PauliString(letters)
            terms[p] = terms.get(p, 0.0) + c
        return cls(n_qubits, terms)

    @classmethod
    def identity(cls, n_qubits: int, c: float = 1.0) -> QubitOperator:
        return cls(n_qubits, {PauliString("I" * n_qubits): c})

    def __add__(self, other: QubitOperator) -> QubitOperator:
        if other.n_qubits != self.n_qubits:
            raise ValueError("operator sizes differ")
        terms = dict(self.terms)
        for p, c in other.terms.items():
            terms[p] = terms.get(p, 0.0) + c
        return QubitOperator(self.n_qubits, terms)

    def __sub__(self, other: QubitOperator) -> QubitOperator:
        return self + (-1.0) * other

    def __rmul__(self, scale: float) -> QubitOperator:
        return QubitOperator(self.n_qubits, {p: scale * c for p, c in self.terms.items()})

    def __len__(self):
        return len(self.terms)

    @property
    def constant(self) -> float:
        return self.terms.get(PauliString("I" * self.n_qubits), 0.0)

    def to_sparse(self) -> scipy.sparse.csr_matrix:
        """Matrix in the little-endian computational basis."""
        n = self.n_qubits
        dim = 1 << n
        basis = np.arange(dim, dtype=np.int64)
        grouped: dict[int, np.ndarray] = {}
        for p, c in self.terms.items():
            x, z = p.masks
            phase = c * _IPOW[(x & z).bit_count() % 4]
            signs = 1 - 2 * (np.bitwise_count(basis & z) & 1).astype(np.int8)
            grouped[x] = grouped.get(x, 0) + phase * signs
        rows, cols, data = [], [], []
        for x, vals in grouped.items():
            keep = np.abs(vals) > PRUNE_TOL
            rows.append(basis[keep] ^ x)
            cols.append(basis[keep])
            data.append(vals[keep])
        if not rows:
            return scipy.sparse.csr_matrix((dim, dim), dtype=complex)
        mat = scipy.sparse.csr_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
            shape=(dim, dim), dtype=complex,
        )
        return mat

    def to_dense(self) -> np.ndarray:
        if self.n_qubits > MAX_DENSE_QUBITS:
            raise ValueError(f"dense matrix limited to {MAX_DENSE_QUBITS} qubits")
        return self.to_sparse().toarray()

    @cached_property
    def _sparse_cache(self) -> scipy.sparse.csr_matrix:
        return self.to_sparse()

    def apply(self, amplitudes: np.ndarray) -> np.ndarray:
        return self._sparse_cache @ amplitudes


def _from_masks(n_qubits: int, op: _MaskOperator) -> QubitOperator:
    terms = {}
    for (x, z), c in op.items():
        c = complex(c)
        if abs(c) < PRUNE_TOL:
            continue
        if abs(c.imag) > 1e-9:
            raise ValueError("operator is not Hermitian")
        terms[PauliString.from_masks(n_qubits, x, z)] = c.real
    return QubitOperator(n_qubits, terms)


def jordan_wigner(ints: FermionIntegrals) -> QubitOperator:
    """Qubit Hamiltonian of the integrals, constant ``e_nuclear`` included.

    H = sum h1[p,q] a+_{p s} a_{q s}
        + 1/2 sum (pq|rs) a+_{p s} a+_{r t} a_{s t} a_{q s} + e_nuclear
    """
    n = ints.n_spatial
    nq = 2 * n
    create = [_ladder(j, True) for j in range(nq)]
    annihilate = [_ladder(j, False) for j in range(nq)]

    total = _MaskOperator({(0, 0): ints.e_nuclear})
    for p, q in itertools.product(range(n), repeat=2):
        h = ints.h1[p, q]
        if abs(h) < PRUNE_TOL:
            continue
        for spin in (0, 1):
            total.add(create[2 * p + spin] * annihilate[2 * q + spin], h)

    # cache pair products a+_i a_j to avoid redundant multiplication
    pair: dict[tuple[int, int], _MaskOperator] = {}

    def hop(i, j):
        if (i, j) not in pair:
            pair[(i, j)] = create[i] * annihilate[j]
        return pair[(i, j)]

    for p, q, r, s in itertools.product(range(n), repeat=4):
        v = ints.h2[p, q, r, s]
        if abs(v) < PRUNE_TOL:
            continue
        for sig, tau in itertools.product((0, 1), repeat=2):
            i, j = 2 * p + sig, 2 * r + tau
            k, l = 2 * s + tau, 2 * q + sig
            if i == j or k == l:
                continue
            # a+_i a+_j a_k a_l = a+_i a_l a+_j a_k - delta_{jl} a+_i a_k
            term = hop(i, l) * hop(j, k)
            if j == l:
                term.add(hop(i, k), -1.0)
            total.add(term, 0.5 * v)

    return _from_masks(nq, total)


def excitation_generator(n_qubits: int, terms) -> QubitOperator:
    """Hermitian ``K = i (A - A^dagger)`` for a sum ``A`` of excitation strings.

    ``terms`` is a list of ``(coefficient, creators, annihilators)``; each
    string is ``a+_{c1} a+_{c2} ... a_{a1} a_{a2} ...`` in the order given.
    ``exp(-i theta K) = exp(theta (A - A^dagger))``.
    """
    total = _MaskOperator()
    for coeff, creators, annihilators in terms:
        string = _MaskOperator({(0, 0): 1.0})
        for j in creators:
            string = string * _ladder(j, True)
        for j in annihilators:
            string = string * _ladder(j, False)
        total.add(string, coeff)
    # (A - A^dagger): conjugate coefficient of each Hermitian Pauli string
    k_op = _MaskOperator()
    for key, c in total.items():
        k_op[key] = 1j * (c - np.conj(c))
    return _from_masks(n_qubits, k_op)


def one_norm(op: QubitOperator) -> float:
    """Sum of absolute coefficients, identity term excluded."""
    return float(sum(abs(c) for p, c in op.terms.items() if not p.is_identity()))


def number_operator(n_qubits: int) -> QubitOperator:
    pairs = [("I" * n_qubits, n_qubits / 2)]
    for k in range(n_qubits):
        pairs.append((PauliString.from_dict(n_qubits, {k: "Z"}), -0.5))
    return QubitOperator.from_pairs(n_qubits, pairs)


def sz_operator(n_qubits: int) -> QubitOperator:
    """(N_alpha - N_beta)/2 for the interleaved ordering."""
    pairs = []
    for k in range(n_qubits):
        sign = 1 if k % 2 == 0 else -1
        pairs.append((PauliString.from_dict(n_qubits, {k: "Z"}), -0.25 * sign))
    return QubitOperator.from_pairs(n_qubits, pairs)


def sector_indices(n_qubits: int, n_electrons: int | None = None, sz: float | None = None) -> np.ndarray:
    """Basis indices with the given particle number and Sz (None = unrestricted)."""
    basis = np.arange(1 << n_qubits, dtype=np.int64)
    keep = np.ones(basis.shape, dtype=bool)
    even = sum(1 << k for k in range(0, n_qubits, 2))
    odd = sum(1 << k for k in range(1, n_qubits, 2))
    n_a = np.bitwise_count(basis & even)
    n_b = np.bitwise_count(basis & odd)
    if n_electrons is not None:
        keep &= (n_a + n_b) == n_electrons
    if sz is not None:
        keep &= np.isclose(0.5 * (n_a.astype(float) - n_b), sz)
    return basis[keep]


def sector_matrix(op: QubitOperator, indices: np.ndarray) -> np.ndarray:
    """Dense block of ``op`` on the given basis states."""
    sp = op.to_sparse()
    return sp[indices][:, indices].toarray()


def fci_oracle(op: QubitOperator, n_electrons: int | None = None, sz: float | None = None) -> float:
    """Lowest eigenvalue of ``op`` inside a particle-number / Sz sector."""
    if op.n_qubits > MAX_DENSE_QUBITS:
        raise ValueError(f"dense diagonalization limited to {MAX_DENSE_QUBITS} qubits")
    idx = sector_indices(op.n_qubits, n_electrons, sz)
    if idx.size == 0:
        raise ValueError("requested sector is empty")
    block = sector_matrix(op, idx)
    return float(np.linalg.eigvalsh(block)[0])


def load_fixture(name: str) -> FermionIntegrals:
    """Load ``fixtures/<name>.fcidump`` shipped with the package, or a path."""
    path = Path(name)
    if not path.exists():
        path = FIXTURE_DIR / f"{name}.fcidump"
    return read_fcidump(path)
