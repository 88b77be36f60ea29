"""Circuit IR: colored qubits, a gate list, and postselection.

A *sandwich* circuit means H on every qubit, then the (diagonal) body, then
H on every qubit again, followed by Z-basis measurement of every qubit.
Non-sandwich circuits apply the body directly to the prepared basis state.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import ArgumentError, ConsistencyError, InputShapeError

WHITE, BLACK = "white", "black"
ROLES = ("input", "output", "ancilla", "none")

ARITY = {"H": 1, "T": 1, "S": 1, "Sdg": 1, "Z": 1, "X": 1, "CZ": 2, "CCZ": 3}
DIAGONAL = frozenset({"T", "S", "Sdg", "Z", "CZ", "CCZ"})
# Phase gates expressed as powers of T.
T_EQUIV = {"S": 2, "Z": 4, "Sdg": 6}


@dataclass(frozen=True)
class Qubit:
    index: int
    color: str = WHITE
    prep: int = 0
    role: str = "none"

    def __post_init__(self):
        if self.color not in (WHITE, BLACK):
            raise InputShapeError(f"qubit {self.index}: unknown color {self.color!r}")
        if self.prep not in (0, 1):
            raise InputShapeError(f"qubit {self.index}: prep must be 0 or 1")
        if self.role not in ROLES:
            raise InputShapeError(f"qubit {self.index}: unknown role {self.role!r}")


@dataclass(frozen=True)
class Gate:
    kind: str
    targets: tuple[int, ...]
    power: int = 1  # only meaningful for T

    def __post_init__(self):
        if self.kind not in ARITY:
            raise InputShapeError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if len(self.targets) != ARITY[self.kind]:
            raise InputShapeError(f"{self.kind} takes {ARITY[self.kind]} targets, got {self.targets}")
        if len(set(self.targets)) != len(self.targets):
            raise InputShapeError(f"{self.kind} targets must be distinct: {self.targets}")
        if self.kind == "T":
            object.__setattr__(self, "power", int(self.power) % 8)
        else:
            object.__setattr__(self, "power", 1)

    @property
    def diagonal(self) -> bool:
        return self.kind in DIAGONAL

    @property
    def t_power(self) -> int | None:
        """Phase gates as T powers; None for anything else."""
        if self.kind == "T":
            return self.power
        return T_EQUIV.get(self.kind)

    def to_json(self) -> dict:
        d = {"kind": self.kind, "targets": list(self.targets)}
        if self.kind == "T":
            d["power"] = self.power
        return d

    def __str__(self):
        p = f"^{self.power}" if self.kind == "T" and self.power != 1 else ""
        return f"{self.kind}{p}({','.join(map(str, self.targets))})"


def T(q: int, d: int = 1) -> Gate:
    return Gate("T", (q,), d)


def CZ(a: int, b: int) -> Gate:
    return Gate("CZ", (a, b))


@dataclass(frozen=True)
class Circuit:
    qubits: tuple[Qubit, ...]
    body: tuple[Gate, ...] = ()
    sandwich: bool = True
    postselect: Mapping[int, int] = field(default_factory=dict)
    inputs: tuple[int, ...] = ()
    outputs: tuple[int, ...] = ()
    # Outcome bits that are recorded inverted (an X just before measurement).
    flips: tuple[int, ...] = ()

    def __post_init__(self):
        qs = tuple(self.qubits)
        object.__setattr__(self, "qubits", qs)
        object.__setattr__(self, "body", tuple(self.body))
        for pos, q in enumerate(qs):
            if q.index != pos:
                raise InputShapeError(f"qubit indices must be 0..n-1 in order; got {q.index} at {pos}")
        n = len(qs)
        for g in self.body:
            for t in g.targets:
                if not 0 <= t < n:
                    raise InputShapeError(f"gate {g} touches missing qubit {t}")
        ps = {int(k): int(v) for k, v in dict(self.postselect).items()}
        for k, v in ps.items():
            if not 0 <= k < n or v not in (0, 1):
                raise InputShapeError(f"bad postselection entry {k}: {v}")
        object.__setattr__(self, "postselect", ps)
        for name in ("inputs", "outputs", "flips"):
            vals = tuple(int(i) for i in getattr(self, name))
            if any(not 0 <= i < n for i in vals) or len(set(vals)) != len(vals):
                raise InputShapeError(f"{name} must list distinct qubit indices")
            object.__setattr__(self, name, vals)
        if set(self.outputs) & set(ps):
            raise InputShapeError("an output-register qubit cannot also be postselected")

    @property
    def n(self) -> int:
        return len(self.qubits)

    @property
    def n_white(self) -> int:
        return sum(q.color == WHITE for q in self.qubits)

    @property
    def n_black(self) -> int:
        return self.n - self.n_white

    @property
    def prep(self) -> tuple[int, ...]:
        return tuple(q.prep for q in self.qubits)

    @property
    def output_register(self) -> tuple[int, ...]:
        """Measured register reported in distributions (all unpostselected qubits by default)."""
        if self.outputs:
            return self.outputs
        return tuple(i for i in range(self.n) if i not in self.postselect)

    def color(self, i: int) -> str:
        return self.qubits[i].color

    def replace(self, **kw) -> "Circuit":
        d = dict(
            qubits=self.qubits,
            body=self.body,
            sandwich=self.sandwich,
            postselect=self.postselect,
            inputs=self.inputs,
            outputs=self.outputs,
            flips=self.flips,
        )
        d.update(kw)
        return Circuit(**d)

    def with_preps(self, preps: Mapping[int, int]) -> "Circuit":
        qs = [Qubit(q.index, q.color, preps.get(q.index, q.prep), q.role) for q in self.qubits]
        return self.replace(qubits=tuple(qs))

    # -- serialization -------------------------------------------------

    def to_json(self) -> dict:
        return {
            "n_white": self.n_white,
            "n_black": self.n_black,
            "qubits": [
                {"index": q.index, "color": q.color, "prep": q.prep, "role": q.role} for q in self.qubits
            ],
            "sandwich": self.sandwich,
            "body": [g.to_json() for g in self.body],
            "postselect": {str(k): v for k, v in sorted(self.postselect.items())},
            "inputs": list(self.inputs),
            "outputs": list(self.outputs),
            "flips": list(self.flips),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":")) + "\n"

    @classmethod
    def from_json(cls, d: dict) -> "Circuit":
        try:
            qubits = tuple(
                Qubit(int(q["index"]), q["color"], int(q.get("prep", 0)), q.get("role", "none"))
                for q in d["qubits"]
            )
            body = tuple(Gate(g["kind"], tuple(g["targets"]), int(g.get("power", 1))) for g in d.get("body", []))
            c = cls(
                qubits,
                body,
                bool(d.get("sandwich", True)),
                {int(k): int(v) for k, v in d.get("postselect", {}).items()},
                tuple(d.get("inputs", ())),
                tuple(d.get("outputs", ())),
                tuple(d.get("flips", ())),
            )
        except (KeyError, TypeError) as exc:
            raise InputShapeError(f"malformed circuit JSON: {exc}") from None
        if "n_white" in d and (d["n_white"], d.get("n_black")) != (c.n_white, c.n_black):
            raise InputShapeError("n_white/n_black disagree with the qubit list")
        return c

    @classmethod
    def loads(cls, text: str) -> "Circuit":
        try:
            return cls.from_json(json.loads(text))
        except json.JSONDecodeError as exc:
            raise InputShapeError(f"circuit file is not JSON: {exc}") from None


def make_circuit(
    colors: str | Iterable[str],
    body: Iterable[Gate] = (),
    preps: Mapping[int, int] | None = None,
    **kw,
) -> Circuit:
    """Shorthand: ``make_circuit("wwb", [CZ(0, 2), T(2)])``."""
    names = {"w": WHITE, "b": BLACK}
    cols = [names.get(c, c) for c in colors]
    preps = preps or {}
    outs = set(kw.get("outputs", ()))
    ins = set(kw.get("inputs", ()))
    qubits = []
    for i, col in enumerate(cols):
        if i in outs:
            role = "output"
        elif i in ins:
            role = "input"
        elif col == BLACK or i in kw.get("postselect", {}):
            role = "ancilla"
        else:
            role = "none"
        qubits.append(Qubit(i, col, preps.get(i, 0), role))
    return Circuit(tuple(qubits), tuple(body), **kw)


# -- validation ----------------------------------------------------------


@dataclass
class Violation:
    code: str
    locus: str
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation]
    cz_degree: dict[int, int]

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def codes(self) -> list[str]:
        return [v.code for v in self.violations]

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "violations": [{"code": v.code, "locus": v.locus, "message": v.message} for v in self.violations],
            "cz_degree": {str(k): v for k, v in sorted(self.cz_degree.items())},
        }


def _validate(c: Circuit, star: bool) -> ValidationReport:
    out: list[Violation] = []

    def bad(code, locus, msg):
        out.append(Violation(code, locus, msg))

    if not c.sandwich:
        bad("NOT_SANDWICH", "circuit", "body must sit between Hadamard layers")
    registers = set(c.inputs) | set(c.outputs)
    for q in c.qubits:
        if q.color == BLACK and q.prep != 0:
            bad("BLACK_PREP", f"qubit {q.index}", "black qubits start in |0>")
        if q.color == BLACK and (q.role in ("input", "output") or q.index in registers):
            bad("REGISTER_COLOR", f"qubit {q.index}", "register qubit is black")

    degree = {q.index: 0 for q in c.qubits if q.color == BLACK}
    for pos, g in enumerate(c.body):
        locus = f"gate {pos} {g}"
        cols = [c.color(t) for t in g.targets]
        if not g.diagonal:
            bad("NON_DIAGONAL", locus, f"{g.kind} is not diagonal in the Z basis")
        elif g.kind == "CZ":
            if cols[0] == cols[1]:
                bad("CZ_MONOCHROME", locus, f"CZ joins two {cols[0]} qubits")
            for t in g.targets:
                if t in degree:
                    degree[t] += 1
        elif g.kind == "CCZ":
            if not (star and all(col == WHITE for col in cols)):
                bad("CCZ_FORBIDDEN", locus, "CCZ allowed only on three white qubits under ADIQP*")
        elif cols[0] == WHITE:
            bad("WHITE_PHASE", locus, "phase gates act only on black qubits")
    for b, k in degree.items():
        if k > 2:
            bad("BLACK_DEGREE", f"qubit {b}", f"black qubit carries {k} CZ gates (max 2)")
    return ValidationReport(out, degree)


def validate_adiqp(c: Circuit) -> ValidationReport:
    return _validate(c, star=False)


def validate_adiqp_star(c: Circuit) -> ValidationReport:
    """As ``validate_adiqp`` but all-white CCZ gates are allowed in the body."""
    return _validate(c, star=True)


def cz_degree(c: Circuit, black: int) -> int:
    if not 0 <= black < c.n or c.color(black) != BLACK:
        raise ArgumentError(f"qubit {black} is not a black qubit")
    return sum(g.kind == "CZ" and black in g.targets for g in c.body)


def graph_of(c: Circuit) -> tuple[list[tuple[int, int]], dict[int, int]]:
    """CZ edges of the body and the white(0)/black(1) coloring that witnesses bipartiteness."""
    coloring = {q.index: int(q.color == BLACK) for q in c.qubits}
    # CZ is an involution, so only odd multiplicities leave an edge.
    count: Counter = Counter()
    for g in c.body:
        if g.kind == "CZ":
            a, b = sorted(g.targets)
            if coloring[a] == coloring[b]:
                raise ConsistencyError(f"edge {a}-{b} joins two qubits of the same color")
            count[a, b] += 1
    return sorted(e for e, k in count.items() if k % 2), coloring
