import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adiqp.circuit import (
    BLACK,
    WHITE,
    Circuit,
    Gate,
    Qubit,
    CZ,
    T,
    cz_degree,
    graph_of,
    make_circuit,
    validate_adiqp,
    validate_adiqp_star,
)
from adiqp.errors import ArgumentError, ConsistencyError, InputShapeError
from adiqp.gadgets import GadgetKind, gadget_circuit

from _factories import VIOLATION_CORPUS, random_adiqp


def wb(colors, body, **kw):
    return make_circuit(colors, body, **kw)


class TestConstruction:
    def test_gate_arity(self):
        with pytest.raises(InputShapeError):
            Gate("CZ", (0,))

    def test_gate_distinct_targets(self):
        with pytest.raises(InputShapeError):
            Gate("CCZ", (0, 1, 1))

    def test_unknown_gate(self):
        with pytest.raises(InputShapeError):
            Gate("SWAP", (0, 1))

    def test_t_power_mod_8(self):
        assert T(0, 11).power == 3

    def test_gate_out_of_range(self):
        with pytest.raises(InputShapeError):
            wb("wb", [CZ(0, 2)])

    def test_bad_prep(self):
        with pytest.raises(InputShapeError):
            Qubit(0, WHITE, 2)

    def test_output_cannot_be_postselected(self):
        with pytest.raises(InputShapeError):
            Circuit((Qubit(0),), (), True, {0: 0}, (), (0,))

    def test_json_round_trip(self):
        c = gadget_circuit(GadgetKind.WhiteHTH).replace(flips=(0,))
        assert Circuit.loads(c.dumps()) == c
        assert c.dumps() == Circuit.loads(c.dumps()).dumps()


VIOLATIONS = VIOLATION_CORPUS + [("WHITE_PHASE", wb("wb", [Gate("S", (0,))]))]


class TestValidate:
    @pytest.mark.parametrize("code,circuit", VIOLATIONS, ids=[f"{i}-{c}" for i, (c, _) in enumerate(VIOLATIONS)])
    def test_violation_corpus(self, code, circuit):
        report = validate_adiqp(circuit)
        assert not report.ok
        assert report.codes == [code]

    def test_empty_body(self):
        assert validate_adiqp(wb("wwb", [])).ok

    def test_star_allows_white_ccz(self):
        c = wb("www", [Gate("CCZ", (0, 1, 2))])
        assert validate_adiqp_star(c).ok
        assert validate_adiqp(c).codes == ["CCZ_FORBIDDEN"]

    def test_star_rejects_mixed_ccz(self):
        assert validate_adiqp_star(wb("wwb", [Gate("CCZ", (0, 1, 2))])).codes == ["CCZ_FORBIDDEN"]

    def test_reports_every_violation(self):
        c = wb("wwb", [CZ(0, 1), T(0, 1)])
        assert sorted(validate_adiqp(c).codes) == ["CZ_MONOCHROME", "WHITE_PHASE"]

    def test_gadgets_are_valid(self):
        for kind in (GadgetKind.Bridge, GadgetKind.SRemoval, GadgetKind.TGadgetADQC, GadgetKind.WhiteCZ, GadgetKind.WhiteH, GadgetKind.WhiteHTH):
            assert validate_adiqp(gadget_circuit(kind)).ok, kind
        assert "CZ_MONOCHROME" in validate_adiqp(gadget_circuit(GadgetKind.HadamardGadget)).codes

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_monotone_and_subset(self, seed):
        rng = np.random.default_rng(seed)
        c = random_adiqp(rng, int(rng.integers(1, 5)), int(rng.integers(0, 5)))
        assert validate_adiqp(c).ok
        assert validate_adiqp_star(c).ok
        if c.body:
            drop = int(rng.integers(len(c.body)))
            smaller = c.replace(body=c.body[:drop] + c.body[drop + 1 :])
            assert validate_adiqp(smaller).ok


class TestGraph:
    def test_single_edge(self):
        edges, coloring = graph_of(wb("wb", [CZ(0, 1)]))
        assert edges == [(0, 1)]
        assert coloring == {0: 0, 1: 1}

    def test_star_is_path(self):
        edges, _ = graph_of(wb("bwb", [CZ(1, 0), CZ(1, 2)]))
        assert edges == [(0, 1), (1, 2)]

    def test_empty(self):
        assert graph_of(wb("wb", []))[0] == []

    def test_monochrome_edge_raises(self):
        with pytest.raises(ConsistencyError):
            graph_of(wb("ww", [CZ(0, 1)]))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_bipartite_when_valid(self, seed):
        rng = np.random.default_rng(seed)
        c = random_adiqp(rng, 3, 4)
        edges, coloring = graph_of(c)
        assert all(coloring[a] != coloring[b] for a, b in edges)


class TestCzDegree:
    def test_no_cz(self):
        assert cz_degree(wb("wb", [T(1, 3)]), 1) == 0

    def test_two(self):
        assert cz_degree(wb("wwb", [CZ(0, 2), CZ(1, 2)]), 2) == 2

    def test_white_character_rejected(self):
        with pytest.raises(ArgumentError):
            cz_degree(wb("wb", []), 0)

    def test_white_cz_gadget(self):
        c = gadget_circuit(GadgetKind.WhiteCZ)
        assert [cz_degree(c, b) for b in (2, 3, 4)] == [2, 1, 1]
