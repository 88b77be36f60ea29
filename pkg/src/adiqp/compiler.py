"""From polynomials to IQP circuits, and from IQP circuits to ADIQP circuits.

Lowering works in the middle frame of the Hadamard sandwich, where the
logical white register sees only diagonal gates plus the H's that gadgets
teleport in:

    middle CZ  -> WhiteCZ   (3 black ancillas)
    middle H   -> WhiteH    (3 black + 1 white, logical qubit moves)
    middle T   -> WhiteHTH  (3 black + 1 white)
    middle S^dag -> one pendant black carrying S
    middle Z   -> flip the white's preparation bit (only before any gadget)

Every measured ancilla contributes exactly 1/sqrt(2) to the magnitude of the
all-zero amplitude, which is what makes the ancilla budget add up.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .circuit import BLACK, WHITE, Circuit, Gate, Qubit, CZ, T
from .errors import ArgumentError, InputShapeError, UnsupportedCircuitError
from .f2poly import PolyF2Deg3
from .gadgets import GadgetKind, instantiate

CZ_BLOCK = 3
CCZ_BLOCK = 130
CCZ_WHITE = 25
CCZ_PAD_BLACKS = 80


@dataclass(frozen=True)
class AncillaBudget:
    n: int
    m: int
    white_ancillas: int

    @property
    def black_ancillas(self) -> int:
        return self.m - self.white_ancillas


def ancilla_budget(n: int) -> AncillaBudget:
    if n < 1:
        raise ArgumentError("n must be positive")
    return AncillaBudget(n, CCZ_BLOCK * comb(n, 3) + CZ_BLOCK * comb(n, 2), CCZ_WHITE * comb(n, 3))


def build_cf(f: PolyF2Deg3) -> Circuit:
    """IQP circuit with one Z / CZ / CCZ per linear / quadratic / cubic monomial."""
    body = [Gate("Z", (i - 1,)) for i in f.linear]
    body += [Gate("CZ", (i - 1, j - 1)) for i, j in f.quadratic]
    body += [Gate("CCZ", (i - 1, j - 1, k - 1)) for i, j, k in f.cubic]
    reg = tuple(range(f.n))
    qubits = tuple(Qubit(i, WHITE, 0, "output") for i in reg)
    return Circuit(qubits, tuple(body), sandwich=True, inputs=reg, outputs=reg)


def _cs(x: int, y: int) -> list[Gate]:
    # controlled-S = T_x T_y CX(x,y) T^dag_y CX(x,y), with CX = H_y CZ H_y and T^dag = T S^dag.
    return [
        Gate("H", (y,)), CZ(x, y), Gate("H", (y,)),
        T(y), Gate("Sdg", (y,)),
        Gate("H", (y,)), CZ(x, y), Gate("H", (y,)),
        T(x), T(y),
    ]


def ccz_decompose(a: int = 0, b: int = 1, c: int = 2) -> list[Gate]:
    """CCZ(a,b,c) over {CZ, H, T, S^dag}: 9 CZ, 16 H, 9 T, 3 S^dag.

    Phases multiply as i^{bc} i^{-(a xor b)c} i^{ac} = (-1)^{abc}, using
    CS^dag = CS CZ so that only controlled-S is needed.
    """
    cx = [Gate("H", (b,)), CZ(a, b), Gate("H", (b,))]
    return _cs(b, c) + cx + _cs(b, c) + [CZ(b, c)] + cx + _cs(a, c)


def gate_census(gates) -> dict[str, int]:
    out: dict[str, int] = {}
    for g in gates:
        key = "T" if g.kind == "T" and g.power == 1 else g.kind
        out[key] = out.get(key, 0) + 1
    return out


# -- lowering ------------------------------------------------------------


@dataclass
class LoweringTrace:
    n: int
    budget: AncillaBudget
    inputs: list[int] = field(default_factory=list)
    steps: list[dict] = field(default_factory=list)

    @property
    def consumed(self) -> int:
        return sum(s["ancillas"] for s in self.steps)

    @property
    def padded(self) -> int:
        return sum(s["padded"] for s in self.steps)

    @property
    def reconciled(self) -> bool:
        return self.consumed + self.padded == self.budget.m

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "budget": {
                "m": self.budget.m,
                "white_ancillas": self.budget.white_ancillas,
                "black_ancillas": self.budget.black_ancillas,
            },
            "inputs": list(self.inputs),
            "steps": self.steps,
            "totals": {
                "consumed": self.consumed,
                "padded": self.padded,
                "m": self.budget.m,
                "reconciled": self.reconciled,
            },
        }


class _Builder:
    """Accumulates qubits, gates and trace blocks; indices are handed out in order."""

    def __init__(self, n_logical: int, preps=None):
        preps = preps or [0] * n_logical
        self.colors = [WHITE] * n_logical
        self.preps = list(preps)
        self.body: list[Gate] = []
        self.loc = list(range(n_logical))
        self.postselect: dict[int, int] = {}
        self.used = 0  # ancillas consumed by functional gadgets

    def _fresh(self, colors):
        for col in colors:
            self.colors.append(col)
            self.preps.append(0)
            yield len(self.colors) - 1

    def gadget(self, kind: GadgetKind, logical) -> dict:
        from .gadgets import TEMPLATES

        tpl = TEMPLATES[kind]
        anc_colors = [tpl.colors[q] for q in tpl.ancillas]
        targets = [self.loc[i] for i in logical]
        start = len(self.body)
        inst = instantiate(kind, targets, self._fresh(anc_colors))
        self.body.extend(inst.gates)
        for q in inst.postselect_pattern:
            self.postselect[q] = 0
        for old, new in inst.output_relocation.items():
            self.loc[self.loc.index(old)] = new
        self.used += len(inst.ancillas)
        return {
            "kind": kind.value,
            "gates": [start, len(self.body)],
            "new": sorted(inst.ancillas),
            "retire": sorted(inst.postselect_pattern),
            "targets": targets,
            "relocation": {str(k): v for k, v in inst.output_relocation.items()},
        }

    def pendant(self, logical: int, power: int) -> dict:
        w = self.loc[logical]
        (b,) = self._fresh([BLACK])
        start = len(self.body)
        self.body += [CZ(w, b), T(b, power)]
        self.postselect[b] = 0
        self.used += 1
        return {"kind": "Pendant", "gates": [start, len(self.body)], "new": [b], "retire": [b], "targets": [w]}

    def pad_black(self) -> dict:
        (b,) = self._fresh([BLACK])
        start = len(self.body)
        self.body.append(T(b, 2))
        self.postselect[b] = 0
        return {"kind": "PadHSH", "gates": [start, start + 1], "new": [b], "retire": [b]}

    def pad_pair(self) -> dict:
        w, b = self._fresh([WHITE, BLACK])
        start = len(self.body)
        self.body.append(CZ(w, b))
        self.postselect[w] = 0
        self.postselect[b] = 0
        return {"kind": "PadPair", "gates": [start, start + 1], "new": [w, b], "retire": [w, b]}

    def middle_gate(self, g: Gate, logical) -> dict:
        """Lower one middle-frame gate acting on logical qubits."""
        if g.kind == "CZ":
            return self.gadget(GadgetKind.WhiteCZ, logical)
        if g.kind == "H":
            return self.gadget(GadgetKind.WhiteH, logical)
        if g.kind == "T" and g.power == 1:
            return self.gadget(GadgetKind.WhiteHTH, logical)
        if g.kind == "Sdg":
            return self.pendant(logical[0], 2)
        if g.kind == "S":
            return self.pendant(logical[0], 6)
        raise UnsupportedCircuitError(f"no gadget lowering for middle-frame {g}")

    def circuit(self, n_logical: int) -> Circuit:
        outputs = tuple(self.loc)
        inputs = tuple(range(n_logical))
        qubits = []
        for q, (col, prep) in enumerate(zip(self.colors, self.preps)):
            if q in outputs:
                role = "output"
            elif q in inputs:
                role = "input"
            else:
                role = "ancilla"
            qubits.append(Qubit(q, col, prep, role))
        ps = {q: 0 for q in range(len(qubits)) if q not in outputs}
        return Circuit(tuple(qubits), tuple(self.body), True, ps, inputs, outputs)


def _check_cf(cf: Circuit) -> int:
    n = len(cf.outputs)
    if not cf.sandwich or cf.n != n or cf.inputs != tuple(range(n)) or cf.outputs != tuple(range(n)):
        raise UnsupportedCircuitError("expected a circuit produced by build_cf")
    if any(q.color != WHITE or q.prep for q in cf.qubits):
        raise UnsupportedCircuitError("C_f circuits start with all whites in |0>")
    seen = set()
    for g in cf.body:
        if g.kind not in ("Z", "CZ", "CCZ"):
            raise UnsupportedCircuitError(f"unexpected gate {g} in C_f")
        key = tuple(sorted(g.targets))
        if key in seen:
            raise UnsupportedCircuitError(f"repeated monomial {key}")
        seen.add(key)
    return n


def lower_to_adiqp(cf: Circuit) -> tuple[Circuit, LoweringTrace]:
    """ADIQP circuit on n + m qubits whose all-zero amplitude has modulus |gap| / 2^(n+m/2)."""
    n = _check_cf(cf)
    budget = ancilla_budget(n)
    preps = [0] * n
    for g in cf.body:
        if g.kind == "Z":
            preps[g.targets[0]] ^= 1
    bld = _Builder(n, preps)
    trace = LoweringTrace(n, budget, inputs=list(range(n)))
    for g in cf.body:
        if g.kind == "Z":
            trace.steps.append({"source": str(g), "gadgets": [], "ancillas": 0, "padded": 0, "realization": "prep-flip"})
    present_pairs = {tuple(sorted(g.targets)) for g in cf.body if g.kind == "CZ"}
    present_triples = {tuple(sorted(g.targets)) for g in cf.body if g.kind == "CCZ"}

    for g in cf.body:
        if g.kind == "Z":
            continue
        before = bld.used
        if g.kind == "CZ":
            blocks = [bld.middle_gate(g, g.targets)]
        else:
            blocks = [bld.middle_gate(h, h.targets) for h in ccz_decompose(*g.targets)]
        trace.steps.append(
            {"source": str(g), "gadgets": blocks, "ancillas": bld.used - before, "padded": 0}
        )

    for pair in itertools.combinations(range(n), 2):
        if pair not in present_pairs:
            blocks = [bld.pad_black() for _ in range(CZ_BLOCK)]
            trace.steps.append(
                {"source": f"pad CZ{pair}", "gadgets": blocks, "ancillas": 0, "padded": CZ_BLOCK}
            )
    for triple in itertools.combinations(range(n), 3):
        if triple not in present_triples:
            blocks = [bld.pad_black() for _ in range(CCZ_PAD_BLACKS)]
            blocks += [bld.pad_pair() for _ in range(CCZ_WHITE)]
            trace.steps.append(
                {"source": f"pad CCZ{triple}", "gadgets": blocks, "ancillas": 0, "padded": CCZ_BLOCK}
            )
    return bld.circuit(n), trace


def lower_adiqp_star(cf: Circuit) -> tuple[Circuit, LoweringTrace]:
    """Like ``lower_to_adiqp`` but CCZ stays in the body (valid under ADIQP*)."""
    n = _check_cf(cf)
    preps = [0] * n
    for g in cf.body:
        if g.kind == "Z":
            preps[g.targets[0]] ^= 1
    bld = _Builder(n, preps)
    budget = AncillaBudget(n, CZ_BLOCK * comb(n, 2), 0)
    trace = LoweringTrace(n, budget, inputs=list(range(n)))
    present = set()
    for g in cf.body:
        if g.kind == "CZ":
            trace.steps.append({"source": str(g), "gadgets": [bld.middle_gate(g, g.targets)], "ancillas": 3, "padded": 0})
            present.add(tuple(sorted(g.targets)))
        elif g.kind == "CCZ":
            start = len(bld.body)
            bld.body.append(g)
            blk = {"kind": "CCZ", "gates": [start, start + 1], "new": [], "retire": [], "targets": list(g.targets)}
            trace.steps.append({"source": str(g), "gadgets": [blk], "ancillas": 0, "padded": 0})
    for pair in itertools.combinations(range(n), 2):
        if pair not in present:
            blocks = [bld.pad_black() for _ in range(CZ_BLOCK)]
            trace.steps.append({"source": f"pad CZ{pair}", "gadgets": blocks, "ancillas": 0, "padded": CZ_BLOCK})
    return bld.circuit(n), trace


def _middle_sequence(target: Circuit) -> list[Gate]:
    """H-conjugate the target gate list and cancel adjacent H pairs per qubit."""
    k = target.n
    seq = [Gate("H", (q,)) for q in range(k)] + list(target.body) + [Gate("H", (q,)) for q in range(k)]
    out: list[Gate | None] = []
    hist: dict[int, list[int]] = {q: [] for q in range(k)}
    for g in seq:
        if g.kind == "H":
            stack = hist[g.targets[0]]
            if stack and out[stack[-1]].kind == "H":
                out[stack.pop()] = None
                continue
        out.append(g)
        for t in g.targets:
            hist[t].append(len(out) - 1)
    return [g for g in out if g is not None]


def lower_universal(target: Circuit, max_qubits: int = 4) -> tuple[Circuit, LoweringTrace]:
    """Postselected ADIQP circuit whose action on the white register equals ``target``.

    ``target`` is a non-sandwich circuit over {H, T, CZ}.
    """
    if target.sandwich:
        raise ArgumentError("target must be a plain gate list (sandwich=False)")
    if target.n > max_qubits:
        raise ArgumentError(f"target has {target.n} qubits; the verified bound is {max_qubits}")
    for g in target.body:
        if g.kind not in ("H", "CZ") and not (g.kind == "T" and g.power == 1):
            raise ArgumentError(f"unsupported gate {g}; expected H, T or CZ")
    k = target.n
    bld = _Builder(k)
    trace = LoweringTrace(k, AncillaBudget(k, 0, 0), inputs=list(range(k)))
    for g in _middle_sequence(target):
        before = bld.used
        trace.steps.append(
            {"source": str(g), "gadgets": [bld.middle_gate(g, g.targets)], "ancillas": bld.used - before, "padded": 0}
        )
    trace.budget = AncillaBudget(k, bld.used, sum(c == WHITE for c in bld.colors[k:]))
    return bld.circuit(k), trace


def apply_mask(c2: Circuit, x) -> Circuit:
    """Record inverted outcomes on the logical output qubits where x_k = 1.

    HZH = X just before a Z measurement only relabels the outcome, so the
    all-zero amplitude of the result is the x-outcome amplitude of ``c2``.
    Masking twice with the same x restores the original circuit.
    """
    bits = [int(b) for b in x] if not isinstance(x, str) else [int(ch) for ch in x]
    outs = c2.outputs or tuple(range(len(bits)))
    if len(bits) != len(outs) or any(b not in (0, 1) for b in bits):
        raise ArgumentError(f"mask needs {len(outs)} bits, got {x!r}")
    flips = set(c2.flips)
    for q, b in zip(outs, bits):
        if b:
            flips ^= {q}
    return c2.replace(flips=tuple(sorted(flips)))


def logical_unitary(target: Circuit) -> np.ndarray:
    """Dense matrix of a small non-sandwich target circuit."""
    from .densesim import unitary

    if target.sandwich:
        raise InputShapeError("expected a plain gate list")
    return unitary(target)


@dataclass
class IdentityCheck:
    """Outcome of comparing the lowered circuit's all-zero amplitude with |gap| / 2^(n+m/2)."""

    poly: str
    n: int
    m: int
    gap: int
    observed: float  # |amplitude| * 2^(n+m/2)
    reconciled: bool
    ok: bool

    def to_json(self) -> dict:
        return dict(self.__dict__)


def amplitude_identity(f: PolyF2Deg3, rtol: float = 1e-9) -> IdentityCheck:
    """Lower C_f, run the lazy simulator along the trace and check the amplitude modulus."""
    from .densesim import run_lazy
    from .f2poly import gap

    c2, trace = lower_to_adiqp(build_cf(f))
    amp = run_lazy(c2, trace)
    g = gap(f)
    m = trace.budget.m
    observed = 2.0 ** (amp.log2_abs + f.n + m / 2)
    ok = abs(observed - abs(g)) <= rtol * max(1, abs(g)) and trace.reconciled and c2.n == f.n + m
    return IdentityCheck(f.to_text().strip().replace("\n", "; "), f.n, m, g, observed, trace.reconciled, ok)
