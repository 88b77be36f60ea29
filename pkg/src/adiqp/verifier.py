"""Two-colorable graph states: stabilizers, a stabilizer tableau, noise, and
the 2k+1-copy stabilizer test.

A two-colorable graph state is, up to Hadamards on one color class, a CSS
state; that correspondence is only noted here, no encoder is provided.

Pauli strings are written over "IXYZ", qubit 0 first, with an optional
leading sign ("+" or "-").
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .circuit import Circuit, graph_of, validate_adiqp
from .errors import ArgumentError, ConsistencyError, ResourceLimitError, UnsupportedCircuitError

DENSE_QUBIT_LIMIT = 10

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class GraphState:
    q: int
    edges: tuple[tuple[int, int], ...]
    coloring: tuple[int, ...]

    def __post_init__(self):
        if len(self.coloring) != self.q:
            raise ArgumentError("coloring must assign every vertex")
        norm = []
        for a, b in self.edges:
            if not (0 <= a < self.q and 0 <= b < self.q) or a == b:
                raise ArgumentError(f"bad edge ({a}, {b})")
            if self.coloring[a] == self.coloring[b]:
                raise ConsistencyError(f"edge ({a}, {b}) joins two vertices of the same color")
            norm.append((min(a, b), max(a, b)))
        if len(set(norm)) != len(norm):
            raise ArgumentError("repeated edge")
        object.__setattr__(self, "edges", tuple(sorted(norm)))

    def neighbours(self, v: int) -> list[int]:
        return [b if a == v else a for a, b in self.edges if v in (a, b)]

    @classmethod
    def random(cls, q: int, rng: np.random.Generator, density: float = 0.5) -> "GraphState":
        coloring = tuple(int(b) for b in rng.integers(0, 2, size=q))
        edges = tuple(
            (a, b) for a, b in itertools.combinations(range(q), 2) if coloring[a] != coloring[b] and rng.random() < density
        )
        return cls(q, edges, coloring)

    def to_json(self) -> dict:
        return {"q": self.q, "edges": [list(e) for e in self.edges], "coloring": list(self.coloring)}


def stabilizer_generators(g: GraphState) -> list[str]:
    """X_v Z_{N(v)} for each vertex v."""
    gens = []
    for v in range(g.q):
        s = ["I"] * g.q
        s[v] = "X"
        for w in g.neighbours(v):
            s[w] = "Z"
        gens.append("".join(s))
    return gens


def parse_pauli(p: str, q: int | None = None) -> tuple[np.ndarray, np.ndarray, int]:
    """Return (x bits, z bits, sign bit)."""
    sign = 0
    if p[:1] in "+-":
        sign = int(p[0] == "-")
        p = p[1:]
    if set(p) - set("IXYZ"):
        raise ArgumentError(f"malformed Pauli string {p!r}")
    if q is not None and len(p) != q:
        raise ArgumentError(f"Pauli string has length {len(p)}, expected {q}")
    x = np.array([ch in "XY" for ch in p], dtype=np.uint8)
    z = np.array([ch in "ZY" for ch in p], dtype=np.uint8)
    return x, z, sign


def _g(x1, z1, x2, z2):
    """Exponent of i picked up when multiplying single-qubit Paulis (x1,z1)(x2,z2)."""
    x1, z1, x2, z2 = (np.asarray(a, dtype=np.int64) for a in (x1, z1, x2, z2))
    return np.where(
        (x1 == 0) & (z1 == 0),
        0,
        np.where(
            (x1 == 1) & (z1 == 1),
            z2 - x2,
            np.where(x1 == 1, z2 * (2 * x2 - 1), x2 * (1 - 2 * z2)),
        ),
    )


class StabilizerTableau:
    """Stabilizer generators as GF(2) rows (x | z) plus a sign bit."""

    def __init__(self, x: np.ndarray, z: np.ndarray, r: np.ndarray):
        self.x = np.array(x, dtype=np.uint8)
        self.z = np.array(z, dtype=np.uint8)
        self.r = np.array(r, dtype=np.uint8)

    @property
    def q(self) -> int:
        return self.x.shape[1]

    @classmethod
    def from_graph(cls, g: GraphState) -> "StabilizerTableau":
        x = np.eye(g.q, dtype=np.uint8)
        z = np.zeros((g.q, g.q), dtype=np.uint8)
        for a, b in g.edges:
            z[a, b] = z[b, a] = 1
        return cls(x, z, np.zeros(g.q, dtype=np.uint8))

    @classmethod
    def zero_state(cls, q: int) -> "StabilizerTableau":
        return cls(np.zeros((q, q)), np.eye(q), np.zeros(q))

    def copy(self) -> "StabilizerTableau":
        return StabilizerTableau(self.x, self.z, self.r)

    def rows(self) -> list[str]:
        letters = np.array([["I", "Z"], ["X", "Y"]])
        return [("-" if s else "+") + "".join(letters[xr, zr]) for xr, zr, s in zip(self.x, self.z, self.r)]

    def check(self) -> None:
        """Rows commute pairwise and are independent."""
        m = (self.x.astype(int) @ self.z.T.astype(int) + self.z.astype(int) @ self.x.T.astype(int)) % 2
        if m.any():
            raise ConsistencyError("tableau rows do not commute")
        if _gf2_rank(np.hstack([self.x, self.z])) != self.x.shape[0]:
            raise ConsistencyError("tableau rows are dependent")

    # Clifford updates (conjugation of every row)
    def h(self, a: int) -> None:
        self.r ^= self.x[:, a] & self.z[:, a]
        self.x[:, a], self.z[:, a] = self.z[:, a].copy(), self.x[:, a].copy()

    def s(self, a: int) -> None:
        self.r ^= self.x[:, a] & self.z[:, a]
        self.z[:, a] ^= self.x[:, a]

    def cnot(self, a: int, b: int) -> None:
        self.r ^= self.x[:, a] & self.z[:, b] & (self.x[:, b] ^ self.z[:, a] ^ 1)
        self.x[:, b] ^= self.x[:, a]
        self.z[:, a] ^= self.z[:, b]

    def cz(self, a: int, b: int) -> None:
        self.h(b)
        self.cnot(a, b)
        self.h(b)

    def pauli(self, p: str) -> None:
        """Apply a Pauli operator: flips the sign of every anticommuting row."""
        x, z, _ = parse_pauli(p, self.q)
        self.r ^= ((self.x.astype(int) @ z + self.z.astype(int) @ x) % 2).astype(np.uint8)


def _gf2_rank(m: np.ndarray) -> int:
    m = m.copy() % 2
    rank = 0
    for col in range(m.shape[1]):
        piv = np.nonzero(m[rank:, col])[0]
        if len(piv) == 0:
            continue
        p = rank + piv[0]
        m[[rank, p]] = m[[p, rank]]
        others = np.nonzero(m[:, col])[0]
        others = others[others != rank]
        m[others] ^= m[rank]
        rank += 1
        if rank == m.shape[0]:
            break
    return rank


def _solve_gf2(a: np.ndarray, b: np.ndarray) -> np.ndarray | None:
    """Some c with c @ a = b over GF(2), or None."""
    rows, cols = a.shape
    aug = np.hstack([a.T % 2, b.reshape(-1, 1) % 2]).astype(np.uint8)  # cols x (rows + 1)
    pivots = []
    r = 0
    for c in range(rows):
        piv = np.nonzero(aug[r:, c])[0]
        if len(piv) == 0:
            continue
        p = r + piv[0]
        aug[[r, p]] = aug[[p, r]]
        others = np.nonzero(aug[:, c])[0]
        others = others[others != r]
        aug[others] ^= aug[r]
        pivots.append(c)
        r += 1
        if r == cols:
            break
    if aug[r:, -1].any():
        return None
    sol = np.zeros(rows, dtype=np.uint8)
    for i, c in enumerate(pivots):
        sol[c] = aug[i, -1]
    return sol


def tableau_expectation(t: StabilizerTableau, pauli: str) -> int:
    """+1 or -1 if the Pauli (with its sign) or its negative is in the group, else 0."""
    px, pz, psign = parse_pauli(pauli, t.q)
    coeff = _solve_gf2(np.hstack([t.x, t.z]), np.concatenate([px, pz]))
    if coeff is None:
        return 0
    # Multiply the selected rows, tracking the phase as a power of i.
    x = np.zeros(t.q, dtype=np.uint8)
    z = np.zeros(t.q, dtype=np.uint8)
    e = 0
    for i in np.nonzero(coeff)[0]:
        e += 2 * int(t.r[i]) + int(_g(t.x[i], t.z[i], x, z).sum())
        x ^= t.x[i]
        z ^= t.z[i]
    e %= 4
    if e not in (0, 2):
        raise ConsistencyError("group element with imaginary phase")
    sign = -1 if e == 2 else 1
    return sign * (-1 if psign else 1)


# -- dense backend -----------------------------------------------------------


def pauli_matrix(p: str) -> np.ndarray:
    _, _, sign = parse_pauli(p)
    m = np.ones((1, 1), dtype=complex)
    for ch in p.lstrip("+-"):
        m = np.kron(m, _PAULI[ch])
    return -m if sign else m


def graph_state_vector(g: GraphState) -> np.ndarray:
    if g.q > DENSE_QUBIT_LIMIT + 4:
        raise ResourceLimitError(f"{g.q} qubits is too many for a dense state")
    idx = np.arange(1 << g.q)
    phase = np.zeros(1 << g.q, dtype=np.int64)
    for a, b in g.edges:
        phase += ((idx >> (g.q - 1 - a)) & 1) & ((idx >> (g.q - 1 - b)) & 1)
    return (-1.0) ** phase / np.sqrt(1 << g.q) + 0j


def apply_clifford_dense(psi: np.ndarray, q: int, gate: str, *targets: int) -> np.ndarray:
    psi = psi.reshape((2,) * q)
    if gate == "h":
        m = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    elif gate == "s":
        m = np.diag([1, 1j])
    elif gate == "cz":
        a, b = targets
        psi = psi.copy()
        sl = [slice(None)] * q
        sl[a], sl[b] = 1, 1
        psi[tuple(sl)] *= -1
        return psi.ravel()
    elif gate == "cnot":
        a, b = targets
        psi = psi.copy()
        sl = [slice(None)] * q
        sl[a] = 1
        sub = psi[tuple(sl)]
        psi[tuple(sl)] = np.flip(sub, axis=b - (b > a))
        return psi.ravel()
    else:
        raise ArgumentError(f"unknown gate {gate}")
    psi = np.moveaxis(np.tensordot(m, psi, axes=([1], [targets[0]])), 0, targets[0])
    return psi.ravel()


def depolarize(rho: np.ndarray, q: int, p: float) -> np.ndarray:
    """rho -> (1-p) rho + p/3 (X rho X + Y rho Y + Z rho Z) on every qubit."""
    if not 0 <= p <= 1:
        raise ArgumentError(f"depolarizing probability {p} outside [0, 1]")
    t = rho.reshape((2,) * (2 * q))
    for a in range(q):
        acc = (1 - p) * t
        for name in "XYZ":
            P = _PAULI[name]
            u = np.moveaxis(np.tensordot(P, t, axes=([1], [a])), 0, a)
            u = np.moveaxis(np.tensordot(u, P.conj(), axes=([q + a], [1])), -1, q + a)
            acc = acc + p / 3 * u
        t = acc
    return t.reshape(1 << q, 1 << q)


def density_expectation(rho: np.ndarray, pauli: str) -> float:
    return float(np.real(np.trace(rho @ pauli_matrix(pauli))))


# -- noise sources -----------------------------------------------------------


@dataclass(frozen=True)
class NoiseModel:
    """kind is "none", "depolarizing" (per-qubit probability p) or "pauli" (fixed Pauli string)."""

    kind: str = "none"
    p: float = 0.0
    pauli: str = ""

    @classmethod
    def parse(cls, text: str | None) -> "NoiseModel":
        if not text or text == "none":
            return cls()
        kind, _, arg = text.partition(":")
        if kind == "depolarizing":
            try:
                p = float(arg)
            except ValueError:
                raise ArgumentError(f"bad depolarizing probability {arg!r}") from None
            if not 0 <= p <= 1:
                raise ArgumentError(f"depolarizing probability {p} outside [0, 1]")
            return cls("depolarizing", p)
        if kind == "pauli":
            parse_pauli(arg)
            return cls("pauli", pauli=arg)
        raise ArgumentError(f"unknown noise model {text!r}; use depolarizing:p or pauli:STRING")

    def __str__(self):
        return {"none": "none", "depolarizing": f"depolarizing:{self.p}", "pauli": f"pauli:{self.pauli}"}[self.kind]


def noisy_density(g: GraphState, noise: NoiseModel) -> np.ndarray:
    if g.q > DENSE_QUBIT_LIMIT:
        raise ResourceLimitError(f"dense density matrix limited to {DENSE_QUBIT_LIMIT} qubits")
    psi = graph_state_vector(g)
    if noise.kind == "pauli":
        psi = pauli_matrix(noise.pauli) @ psi
    rho = np.outer(psi, psi.conj())
    if noise.kind == "depolarizing":
        rho = depolarize(rho, g.q, noise.p)
    return rho


def exact_fidelity(g: GraphState, noise: NoiseModel) -> float:
    """<G| rho |G> from the dense density matrix."""
    psi = graph_state_vector(g)
    rho = noisy_density(g, noise)
    return float(np.real(np.vdot(psi, rho @ psi)))


def generator_failure_probabilities(g: GraphState, noise: NoiseModel, backend: str = "auto") -> np.ndarray:
    """Pr[outcome -1] when measuring generator v on one copy."""
    gens = stabilizer_generators(g)
    if backend == "auto":
        backend = "dense" if g.q <= DENSE_QUBIT_LIMIT else "tableau"
    if backend == "dense":
        rho = noisy_density(g, noise)
        return np.array([(1 - density_expectation(rho, s)) / 2 for s in gens])
    if backend != "tableau":
        raise ArgumentError(f"unknown backend {backend!r}")
    # A Pauli error flips generator v iff it anticommutes with it.
    if noise.kind == "none":
        return np.zeros(g.q)
    if noise.kind == "pauli":
        t = StabilizerTableau.from_graph(g)
        t.pauli(noise.pauli)
        return t.r.astype(float)
    # Depolarizing: per qubit, 2 of the 3 Paulis anticommute with a non-identity letter.
    flip = 2 * noise.p / 3
    out = []
    for v in range(g.q):
        support = 1 + len(g.neighbours(v))
        out.append((1 - (1 - 2 * flip) ** support) / 2)
    return np.array(out)


@dataclass
class TestOutcome:
    copies_used: int
    failures: int
    tested: int
    fidelity_lower_bound: float
    untested_copy: int
    per_generator: dict[int, list[int]] = field(default_factory=dict)  # v -> [measured, failures]

    # pytest would otherwise try to collect this class
    __test__ = False

    @property
    def failure_rate(self) -> float:
        return self.failures / self.tested

    def to_json(self) -> dict:
        return {
            "copies_used": self.copies_used,
            "tested": self.tested,
            "failures": self.failures,
            "failure_rate": self.failure_rate,
            "fidelity_lower_bound": self.fidelity_lower_bound,
            "untested_copy": self.untested_copy,
            "per_generator": {str(v): {"measured": m, "failures": f} for v, (m, f) in sorted(self.per_generator.items())},
        }


def fidelity_lower_bound(q: int, failure_rate: float) -> float:
    """Union bound over the q generator projectors: F >= 1 - q p."""
    return max(0.0, 1.0 - q * failure_rate)


def _copy_outcomes(seeds, fail_prob: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    gens = np.empty(len(seeds), dtype=np.int64)
    fails = np.empty(len(seeds), dtype=bool)
    for i, ss in enumerate(seeds):
        rng = np.random.default_rng(ss)
        v = int(rng.integers(len(fail_prob)))
        gens[i] = v
        fails[i] = rng.random() < fail_prob[v]
    return gens, fails


def stabilizer_test(
    g: GraphState,
    noise: NoiseModel | None = None,
    k: int = 1000,
    seed: int = 0,
    backend: str = "auto",
    jobs: int = 1,
) -> TestOutcome:
    """Run the 2k+1-copy test: 2k random copies each measure one random generator."""
    if k <= 0:
        raise ArgumentError("k must be a positive integer")
    noise = noise or NoiseModel()
    fail_prob = generator_failure_probabilities(g, noise, backend)
    root = np.random.SeedSequence(seed)
    select_ss, copies_ss = root.spawn(2)
    n_copies = 2 * k + 1
    untested = int(np.random.default_rng(select_ss).integers(n_copies))
    seeds = [s for i, s in enumerate(copies_ss.spawn(n_copies)) if i != untested]
    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        chunks = np.array_split(np.arange(len(seeds)), jobs)
        with ThreadPoolExecutor(jobs) as ex:
            parts = list(ex.map(lambda ix: _copy_outcomes([seeds[i] for i in ix], fail_prob), chunks))
        gens = np.concatenate([p[0] for p in parts])
        fails = np.concatenate([p[1] for p in parts])
    else:
        gens, fails = _copy_outcomes(seeds, fail_prob)
    per = {v: [int(np.sum(gens == v)), int(np.sum(fails & (gens == v)))] for v in range(g.q)}
    failures = int(fails.sum())
    return TestOutcome(n_copies, failures, 2 * k, fidelity_lower_bound(g.q, failures / (2 * k)), untested, per)


def circuit_to_graphstate(c: Circuit) -> GraphState:
    """CZ graph of a validated ADIQP circuit; T powers are local and dropped."""
    report = validate_adiqp(c)
    if not report.ok:
        raise UnsupportedCircuitError(f"not an ADIQP circuit: {report.codes}")
    edges, coloring = graph_of(c)
    return GraphState(c.n, tuple(edges), tuple(coloring[i] for i in range(c.n)))
