"""Strong simulation of ADIQP circuits whose blacks carry at most one CZ,
and the exhaustive search showing ADIQP cannot do a deterministic NOT.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .circuit import BLACK, WHITE, Circuit, Gate, Qubit, CZ, T, validate_adiqp
from .densesim import H, OMEGA
from .distribution import Distribution
from .errors import ArgumentError, DegeneratePostselectionError, ResourceLimitError, UnsupportedCircuitError

# Amplitudes held at once by the search (about 64 MB of complex128).
CHUNK_AMPLITUDES = 1 << 21

# Same threshold as the dense simulator uses for a vanishing branch.
ZERO_WEIGHT = 1e-14


@dataclass
class WhiteBlock:
    white: int
    prep: int
    attached: list[tuple[int, int]] = field(default_factory=list)  # (black, T power)


@lru_cache(maxsize=None)
def pendant_kraus(power: int, outcome: int) -> np.ndarray:
    """Effect of a pendant black on its white's middle-frame state.

    Built from a two-qubit dense simulation: black starts in H|0>, CZ with
    the white, T^power on the black, then <outcome|H on the black.
    """
    plus = H @ np.array([1, 0], dtype=complex)
    cz = np.diag([1, 1, 1, -1]).astype(complex)
    phase = np.kron(np.eye(2), np.diag([1, OMEGA ** power]))
    bra = np.array([1, 0] if outcome == 0 else [0, 1], dtype=complex) @ H
    full = np.kron(np.eye(2), bra[None, :]) @ phase @ cz @ np.kron(np.eye(2), plus[:, None])
    return full  # 2x2 on the white


@dataclass
class ProductDistribution:
    """Independent bits: p1[i] = Pr[output bit i = 1]."""

    p1: np.ndarray
    log2_success: float = 0.0

    @property
    def success_probability(self) -> float:
        return float(2.0 ** self.log2_success)

    @property
    def n_bits(self) -> int:
        return len(self.p1)

    def probability(self, y) -> float:
        bits = np.array([int(ch) for ch in y]) if isinstance(y, str) else np.asarray(y)
        return float(np.prod(np.where(bits == 1, self.p1, 1 - self.p1)))

    def to_distribution(self, limit: int = 20) -> Distribution:
        if self.n_bits > limit:
            raise ResourceLimitError(f"{self.n_bits} output bits is too many to tabulate")
        p = np.ones(())
        for q in self.p1:
            p = np.multiply.outer(p, np.array([1 - q, q]))
        return Distribution.from_array(p, self.success_probability)


def white_blocks(c: Circuit, strict: bool = False) -> tuple[dict[int, WhiteBlock], list[int]]:
    """Group each black with the single white it touches; return also the isolated blacks."""
    report = validate_adiqp(c)
    if not report.ok:
        raise UnsupportedCircuitError(f"not an ADIQP circuit: {report.codes}")
    limit = 0 if strict else 1
    neighbour: dict[int, int] = {}
    for b, k in report.cz_degree.items():
        if k > limit:
            raise UnsupportedCircuitError(f"black qubit {b} carries {k} CZ gates (limit {limit})")
    power = {q.index: 0 for q in c.qubits if q.color == BLACK}
    for g in c.body:
        if g.kind == "CZ":
            w, b = g.targets if c.color(g.targets[1]) == BLACK else g.targets[::-1]
            neighbour[b] = w
        else:
            power[g.targets[0]] = (power[g.targets[0]] + g.t_power) % 8
    blocks = {q.index: WhiteBlock(q.index, q.prep) for q in c.qubits if q.color == WHITE}
    for b, w in neighbour.items():
        blocks[w].attached.append((b, power[b]))
    isolated = [b for b in power if b not in neighbour]
    return blocks, isolated


def strong_simulate(c: Circuit, strict: bool = False) -> ProductDistribution:
    """Exact output-register distribution of a one-CZ-per-black ADIQP circuit.

    Each white and its pendant blacks form an independent block; a pendant is
    a Kraus map on the white's 2x2 middle-frame state (traced out, or fixed by
    postselection).  Cost is linear in the number of qubits.
    """
    blocks, isolated = white_blocks(c, strict)
    flips = set(c.flips)
    log2_success = 0.0

    def weigh(w: float, where: str):
        nonlocal log2_success
        if w <= ZERO_WEIGHT:
            raise DegeneratePostselectionError(f"postselection at {where} has zero probability")
        log2_success += math.log2(w)

    powers = {}
    for g in c.body:
        if g.kind != "CZ":
            powers[g.targets[0]] = (powers.get(g.targets[0], 0) + g.t_power) % 8
    for b in isolated:
        if b in c.postselect:
            s = c.postselect[b] ^ (b in flips)
            # <s|H T^d H|0>
            amp = 0.5 * (1 + (-1) ** s * OMEGA ** powers.get(b, 0))
            weigh(abs(amp) ** 2, f"black {b}")
    p1 = {}
    for w, blk in blocks.items():
        psi = H @ np.eye(2)[blk.prep]
        rho = np.outer(psi, psi.conj())
        for b, d in blk.attached:
            if b in c.postselect:
                K = pendant_kraus(d, c.postselect[b] ^ (b in flips))
                rho = K @ rho @ K.conj().T
            else:
                K0, K1 = pendant_kraus(d, 0), pendant_kraus(d, 1)
                rho = K0 @ rho @ K0.conj().T + K1 @ rho @ K1.conj().T
        out = np.real(np.diag(H @ rho @ H))
        if w in c.postselect:
            weigh(out[c.postselect[w] ^ (w in flips)], f"white {w}")
            continue
        tot = out.sum()
        weigh(tot, f"block of white {w}")
        p = out[1] / tot
        p1[w] = 1 - p if w in flips else p
    reg = [q for q in c.output_register if c.color(q) == WHITE]
    if len(reg) != len(c.output_register):
        raise UnsupportedCircuitError("output register must be white (declare outputs to exclude blacks)")
    return ProductDistribution(np.array([p1[q] for q in reg]), log2_success)


# -- deterministic NOT search ------------------------------------------------


def _walsh_hadamard(a: np.ndarray, n: int) -> np.ndarray:
    """H^{(x)n} applied along the last axis (length 2^n), batched over the rest."""
    if n <= 10:
        # a BLAS product beats the butterfly at these sizes
        return a @ _hadamard_matrix(n)
    lead = a.shape[:-1]
    a = a.reshape(lead + (2,) * n)
    for k in range(n):
        ax = len(lead) + k
        lo = np.take(a, 0, axis=ax)
        hi = np.take(a, 1, axis=ax)
        a = np.stack([lo + hi, lo - hi], axis=ax)
    return a.reshape(lead + (-1,)) * 2.0 ** (-n / 2)


@lru_cache(maxsize=None)
def _hadamard_matrix(n: int) -> np.ndarray:
    Hn = np.ones((1, 1))
    for _ in range(n):
        Hn = np.kron(Hn, H.real)
    return Hn


def _black_options(n_white: int):
    """(neighbour set, T power) for one black: up to two whites, d in 0..7."""
    nbrs = [()] + [(w,) for w in range(n_white)] + list(itertools.combinations(range(n_white), 2))
    return [(nb, d) for nb in nbrs for d in range(8)]


def _phase_tables(n_white: int, n_black: int) -> np.ndarray:
    """Phase exponent (units of pi/4) of each black option on each basis state.

    Shape (n_black, options, 2^n); qubit order is whites then blacks, qubit 0 most significant.
    """
    n = n_white + n_black
    idx = np.arange(1 << n)
    bit = [(idx >> (n - 1 - q)) & 1 for q in range(n)]
    opts = _black_options(n_white)
    table = np.zeros((n_black, len(opts), 1 << n), dtype=np.int8)
    for j in range(n_black):
        bq = bit[n_white + j]
        for o, (nb, d) in enumerate(opts):
            e = d * bq
            for w in nb:
                e = e + 4 * bq * bit[w]
            table[j, o] = e % 8
    return table


def _not_probabilities(n_white: int, n_black: int, white_preps, configs, out_qubit: int, in_qubit: int, table=None):
    """Pr[output qubit = 1] for inputs x = 0, 1 over a batch of black configurations.

    Dense simulation of the whole sandwich, vectorized across configurations.
    """
    n = n_white + n_black
    if table is None:
        table = _phase_tables(n_white, n_black)
    cfg = np.asarray(configs)
    expo = np.zeros((len(cfg), 1 << n), dtype=np.int64)
    for j in range(n_black):
        expo += table[j, cfg[:, j]]
    phases = OMEGA ** (expo % 8)
    is_one = ((np.arange(1 << n) >> (n - 1 - out_qubit)) & 1) == 1
    res = []
    for x in (0, 1):
        preps = list(white_preps)
        preps[in_qubit] = x
        start = np.zeros(1 << n)
        start[sum(p << (n - 1 - q) for q, p in enumerate(preps))] = 1.0
        plus = _walsh_hadamard(start, n)
        amps = _walsh_hadamard(phases * plus[None, :], n)
        res.append((np.abs(amps[:, is_one]) ** 2).sum(axis=1))
    return res


def not_infeasibility_search(
    max_blacks: int = 3,
    max_white_ancillas: int = 2,
    exhaustive_limit: int = 2_000_000,
    samples: int = 200_000,
    seed: int = 0,
    max_work: float = 2e10,
) -> dict:
    """Best deterministic-NOT success over ADIQP circuits of the given size.

    Same register: one white is both input and output; success is
    min over x of Pr[output = x xor 1].  Distinct registers: a separate
    output white prepared in |0>; success is Pr[output = 1] on x = 0.
    Blacks with no CZ and whites with no edges are included, so smaller
    circuits are covered too.
    """
    if max_blacks < 0 or max_white_ancillas < 0:
        raise ArgumentError("sizes must be non-negative")
    report = {"max_blacks": max_blacks, "max_white_ancillas": max_white_ancillas}
    rng = np.random.default_rng(seed)
    for variant in ("same_register", "distinct_register"):
        n_extra = 1 if variant == "distinct_register" else 0
        n_white = 1 + n_extra + max_white_ancillas
        if n_white + max_blacks > 14:
            raise ResourceLimitError("family too large for dense simulation")
        opts = _black_options(n_white)
        n_cfg = math.comb(len(opts) + max_blacks - 1, max_blacks)
        exhaustive = n_cfg <= exhaustive_limit
        work = (n_cfg if exhaustive else samples) * 2**max_white_ancillas * 2 ** (n_white + max_blacks)
        if work > max_work:
            raise ResourceLimitError(f"search needs about {work:.2e} amplitude evaluations (limit {max_work:.0e})")
        best, best_desc, count = -1.0, None, 0
        table = _phase_tables(n_white, max_blacks)
        if exhaustive:
            all_configs = np.array(
                list(itertools.combinations_with_replacement(range(len(opts)), max_blacks)), dtype=np.int64
            ).reshape(-1, max_blacks)
        for preps in itertools.product((0, 1), repeat=max_white_ancillas):
            white_preps = [0] * n_white
            for i, p in enumerate(preps):
                white_preps[1 + n_extra + i] = p
            if exhaustive:
                configs = all_configs
            else:
                configs = rng.integers(0, len(opts), size=(samples, max_blacks))
            rows = max(1, CHUNK_AMPLITUDES >> (n_white + max_blacks))
            for lo in range(0, len(configs), rows):
                chunk = configs[lo : lo + rows]
                out_q = 1 if n_extra else 0
                p0, p1 = _not_probabilities(n_white, max_blacks, white_preps, chunk, out_q, 0, table)
                if variant == "same_register":
                    succ = np.minimum(p0, 1 - p1)  # x=0 -> 1, x=1 -> 0
                else:
                    succ = p0
                i = int(np.argmax(succ))
                count += len(chunk)
                if succ[i] > best:
                    best = float(succ[i])
                    best_desc = {
                        "white_preps": white_preps,
                        "blacks": [{"cz": list(opts[o][0]), "power": opts[o][1]} for o in chunk[i]],
                    }
        report[variant] = {"max_success": best, "argmax": best_desc, "circuits": count, "exhaustive": exhaustive}
    report["max_success"] = max(report["same_register"]["max_success"], report["distinct_register"]["max_success"])
    return report


def not_family_circuit(white_preps, blacks, x: int, out_qubit: int = 0) -> Circuit:
    """Explicit circuit for one member of the search family (for cross-checks)."""
    nw = len(white_preps)
    qubits = [Qubit(i, WHITE, x if i == 0 else white_preps[i], "output" if i == out_qubit else ("input" if i == 0 else "none")) for i in range(nw)]
    body = []
    for j, blk in enumerate(blacks):
        b = nw + j
        qubits.append(Qubit(b, BLACK, 0, "ancilla"))
        body += [CZ(w, b) for w in blk["cz"]]
        if blk["power"]:
            body.append(T(b, blk["power"]))
    return Circuit(tuple(qubits), tuple(body), True, {}, (0,), (out_qubit,))


def iqp_not_circuit(x: int) -> Circuit:
    """H Z H on one qubit: the IQP circuit that negates its input."""
    return Circuit((Qubit(0, WHITE, x, "output"),), (Gate("Z", (0,)),), True, {}, (0,), (0,))
