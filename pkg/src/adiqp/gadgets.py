"""Postselected gadgets realizing white-qubit gates inside a Hadamard sandwich.

Everything between the two Hadamard layers is diagonal, so it is easiest to
reason in the *middle frame*: a white qubit carrying middle-frame state phi
represents the logical state H phi.  A black qubit joined by CZ to a set of
whites and carrying T^d contributes, on outcome 0, the diagonal factor
(1 + (-1)^p w^d) / 2 with p the parity of those whites and w = e^{i pi/4}.
Measuring a white qubit with outcome 0 projects it onto <+| in the middle
frame, which is how gadgets hand a logical qubit to a fresh white.

Every template below is checked against its target by ``verify_gadget``.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field

import numpy as np

from .circuit import BLACK, WHITE, Circuit, Gate, Qubit, CZ, T
from .densesim import H, OMEGA, statevector
from .errors import ArgumentError, ResourceLimitError

GADGET_QUBIT_LIMIT = 6


class GadgetKind(str, enum.Enum):
    Bridge = "Bridge"
    SRemoval = "SRemoval"
    TGadgetADQC = "TGadgetADQC"
    HadamardGadget = "HadamardGadget"
    WhiteCZ = "WhiteCZ"
    WhiteH = "WhiteH"
    WhiteHTH = "WhiteHTH"


@dataclass(frozen=True)
class Template:
    colors: tuple[str, ...]
    preps: tuple[int, ...]
    gates: tuple[Gate, ...]
    inputs: tuple[int, ...]
    outputs: tuple[int, ...]
    measured: tuple[int, ...]

    @property
    def ancillas(self) -> tuple[int, ...]:
        return tuple(q for q in range(len(self.colors)) if q not in self.inputs)


W, B = WHITE, BLACK

# Local qubit numbering: logical inputs first, then ancillas.
TEMPLATES: dict[GadgetKind, Template] = {
    # CZ(w0,b) CZ(w1,b) S(b): middle-frame CZ (S^dag x S^dag).
    GadgetKind.Bridge: Template((W, W, B), (0, 0, 0), (CZ(0, 2), CZ(1, 2), T(2, 2)), (0, 1), (0, 1), (2,)),
    # Pendant black with S^3: middle-frame S, cancelling a bridge's S^dag.
    GadgetKind.SRemoval: Template((W, B), (0, 0), (CZ(0, 1), T(1, 6)), (0,), (0,), (1,)),
    # Black with T between the input white and a fresh white; the input is measured.
    GadgetKind.TGadgetADQC: Template((W, B, W), (0, 0, 0), (CZ(0, 1), CZ(1, 2), T(1, 1)), (0,), (2,), (0, 1)),
    # Unrestricted-IQP form: white-white CZ, input measured, output on the fresh white.
    GadgetKind.HadamardGadget: Template((W, W), (0, 0), (CZ(0, 1),), (0,), (1,), (0,)),
    # Bridge plus one S-removal pendant on each white.
    GadgetKind.WhiteCZ: Template(
        (W, W, B, B, B),
        (0, 0, 0, 0, 0),
        (CZ(0, 2), CZ(1, 2), T(2, 2), CZ(0, 3), T(3, 6), CZ(1, 4), T(4, 6)),
        (0, 1),
        (0, 1),
        (2, 3, 4),
    ),
    # WhiteCZ between the input and a fresh white, then measure the input.
    GadgetKind.WhiteH: Template(
        (W, W, B, B, B),
        (0, 0, 0, 0, 0),
        (CZ(0, 2), CZ(1, 2), T(2, 2), CZ(0, 3), T(3, 6), CZ(1, 4), T(4, 6)),
        (0,),
        (1,),
        (0, 2, 3, 4),
    ),
    # White ancilla carrying T and S pendants, bridged to the target with S^3;
    # measuring the ancilla leaves middle-frame T on the target.
    GadgetKind.WhiteHTH: Template(
        (W, W, B, B, B),
        (0, 0, 0, 0, 0),
        (CZ(1, 2), T(2, 1), CZ(1, 3), T(3, 6), CZ(0, 4), CZ(1, 4), T(4, 6)),
        (0,),
        (0,),
        (1, 2, 3, 4),
    ),
}

_S = np.diag([1, 1j])
_T = np.diag([1, OMEGA])
_CZ = np.diag([1, 1, 1, -1]).astype(complex)
_HH = np.kron(H, H)

TARGETS: dict[GadgetKind, np.ndarray] = {
    GadgetKind.Bridge: _HH @ _CZ @ np.kron(_S.conj(), _S.conj()) @ _HH,
    GadgetKind.SRemoval: H @ _S @ H,
    GadgetKind.TGadgetADQC: _T,
    GadgetKind.HadamardGadget: H,
    GadgetKind.WhiteCZ: _HH @ _CZ @ _HH,
    GadgetKind.WhiteH: H,
    GadgetKind.WhiteHTH: H @ _T @ H,
}


def target_channel(kind: GadgetKind) -> np.ndarray:
    """Operator the success branch implements on the logical register."""
    return TARGETS[GadgetKind(kind)].copy()


@dataclass
class GadgetInstance:
    kind: GadgetKind
    target_whites: tuple[int, ...]
    ancillas: dict[int, str]
    postselect_pattern: dict[int, int]
    byproduct: dict[str, tuple[int, ...]] = field(default_factory=dict)
    output_relocation: dict[int, int] = field(default_factory=dict)
    gates: tuple[Gate, ...] = ()

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "target_whites": list(self.target_whites),
            "ancillas": {str(k): v for k, v in sorted(self.ancillas.items())},
            "postselect_pattern": {str(k): v for k, v in sorted(self.postselect_pattern.items())},
            "byproduct": {k: list(v) for k, v in sorted(self.byproduct.items())},
            "output_relocation": {str(k): v for k, v in sorted(self.output_relocation.items())},
        }


def instantiate(kind: GadgetKind, targets, fresh) -> GadgetInstance:
    """Bind a template to global wires.

    ``targets`` are the logical input whites; ``fresh`` yields new indices for
    the ancillas in template order.
    """
    kind = GadgetKind(kind)
    tpl = TEMPLATES[kind]
    targets = tuple(targets)
    if len(targets) != len(tpl.inputs):
        raise ArgumentError(f"{kind.value} takes {len(tpl.inputs)} target(s), got {len(targets)}")
    wire = dict(zip(tpl.inputs, targets))
    for q in tpl.ancillas:
        wire[q] = next(fresh)
    gates = tuple(Gate(g.kind, tuple(wire[t] for t in g.targets), g.power) for g in tpl.gates)
    relocation = {wire[i]: wire[o] for i, o in zip(tpl.inputs, tpl.outputs) if i != o}
    inst = GadgetInstance(
        kind,
        targets,
        {wire[q]: tpl.colors[q] for q in tpl.ancillas},
        {wire[q]: 0 for q in tpl.measured},
        output_relocation=relocation,
        gates=gates,
    )
    if kind is GadgetKind.WhiteCZ:
        bridge, p0, p1 = (wire[q] for q in (2, 3, 4))
        for pattern in itertools.product((0, 1), repeat=3):
            key = "".join(map(str, pattern))
            inst.byproduct[key] = _white_cz_correction(pattern, targets)
    return inst


def _white_cz_correction(pattern, targets) -> tuple[int, ...]:
    # A 1 on the bridge black flips both S^dag to S (a Z on each white); a 1 on
    # a pendant turns its S into S^dag (a Z on that white).
    b, p0, p1 = pattern
    z = []
    if b ^ p0:
        z.append(targets[0])
    if b ^ p1:
        z.append(targets[1])
    return tuple(z)


def gadget_circuit(kind: GadgetKind) -> Circuit:
    """Stand-alone sandwich circuit of a gadget with local indices 0..k-1."""
    kind = GadgetKind(kind)
    tpl = TEMPLATES[kind]
    qubits = []
    for q, (col, prep) in enumerate(zip(tpl.colors, tpl.preps)):
        if q in tpl.outputs:
            role = "output"
        elif q in tpl.inputs:
            role = "input"
        else:
            role = "ancilla"
        qubits.append(Qubit(q, col, prep, role))
    return Circuit(
        tuple(qubits),
        tpl.gates,
        sandwich=True,
        postselect={q: 0 for q in tpl.measured},
        inputs=tpl.inputs,
        outputs=tpl.outputs,
    )


def branch_operator(c: Circuit, pattern: dict[int, int] | None = None) -> np.ndarray:
    """Map from logical inputs to outputs on a fixed outcome of the measured qubits."""
    if c.n > GADGET_QUBIT_LIMIT:
        raise ResourceLimitError(f"{c.n} qubits exceeds the gadget oracle limit {GADGET_QUBIT_LIMIT}")
    pattern = dict(c.postselect if pattern is None else pattern)
    k_in, k_out = len(c.inputs), len(c.outputs)
    A = np.zeros((1 << k_out, 1 << k_in), dtype=complex)
    for col, xs in enumerate(itertools.product((0, 1), repeat=k_in)):
        psi = statevector(c.with_preps(dict(zip(c.inputs, xs))))
        for row, ys in enumerate(itertools.product((0, 1), repeat=k_out)):
            idx = dict(pattern)
            idx.update(zip(c.outputs, ys))
            A[row, col] = psi[tuple(idx[q] for q in range(c.n))]
    return A


def phase_aligned_residual(A: np.ndarray, target: np.ndarray) -> float:
    """min over phi of ||e^{i phi} A - target||_2."""
    overlap = np.vdot(A.ravel(), target.ravel())
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.linalg.norm(A * phase - target, ord=2))


def verify_gadget(kind: GadgetKind, circuit: Circuit | None = None) -> float:
    """Operator-norm residual of the rescaled success branch against the target."""
    kind = GadgetKind(kind)
    c = gadget_circuit(kind) if circuit is None else circuit
    A = branch_operator(c)
    return phase_aligned_residual(A * 2 ** (len(c.postselect) / 2), TARGETS[kind])


def success_probabilities(kind: GadgetKind) -> np.ndarray:
    """Postselection probability for each computational-basis logical input."""
    A = branch_operator(gadget_circuit(kind))
    return np.sum(np.abs(A) ** 2, axis=0)


def nonzero_branch_byproduct(kind: GadgetKind, pattern) -> tuple[int, ...]:
    """Whites (local indices) that need a middle-frame Z after a WhiteCZ outcome.

    ``pattern`` lists the outcomes of the bridge black and the two pendants.
    """
    if GadgetKind(kind) is not GadgetKind.WhiteCZ:
        raise ArgumentError("byproduct records exist only for WhiteCZ")
    bits = tuple(int(b) for b in (pattern if not isinstance(pattern, str) else list(pattern)))
    if len(bits) != 3 or any(b not in (0, 1) for b in bits):
        raise ArgumentError(f"WhiteCZ outcome pattern has 3 bits, got {pattern!r}")
    return _white_cz_correction(bits, (0, 1))


def byproduct_residual(pattern) -> float:
    """Residual of a WhiteCZ branch after its Z corrections.

    A middle-frame Z on a white becomes X on its recorded outcome, so the
    corrected branch is X^z applied after the raw branch operator.
    """
    bits = tuple(int(b) for b in pattern)
    c = gadget_circuit(GadgetKind.WhiteCZ)
    A = branch_operator(c, dict(zip((2, 3, 4), bits)))
    fix = np.eye(1)
    zs = nonzero_branch_byproduct(GadgetKind.WhiteCZ, bits)
    for w in (0, 1):
        fix = np.kron(fix, np.array([[0, 1], [1, 0]]) if w in zs else np.eye(2))
    return phase_aligned_residual(fix @ A * 2 ** 1.5, TARGETS[GadgetKind.WhiteCZ])
