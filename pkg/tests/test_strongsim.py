import time

import numpy as np
import pytest

from adiqp.circuit import BLACK, WHITE, Circuit, Qubit, CZ, T, make_circuit
from adiqp.densesim import run_dense
from adiqp.distribution import total_variation
from adiqp.errors import ArgumentError, ResourceLimitError, UnsupportedCircuitError
from adiqp.gadgets import GadgetKind, gadget_circuit
from adiqp.strongsim import (
    iqp_not_circuit,
    not_family_circuit,
    not_infeasibility_search,
    pendant_kraus,
    strong_simulate,
    white_blocks,
)

from _factories import pendant_instance


class TestStrongSimulate:
    def test_disconnected_whites(self):
        c = make_circuit("wwb", [T(2, 3)], preps={1: 1}, outputs=(0, 1))
        pd = strong_simulate(c)
        assert np.allclose(pd.p1, [0, 1])

    @pytest.mark.parametrize("d", range(8))
    def test_single_pendant(self, d):
        c = Circuit((Qubit(0, WHITE, 0, "output"), Qubit(1, BLACK)), (CZ(0, 1), T(1, d)), True, {}, (), (0,))
        P = run_dense(c)
        assert strong_simulate(c).p1[0] == pytest.approx(P["1"], abs=1e-12)

    def test_twelve_qubits(self):
        rng = np.random.default_rng(12)
        c = pendant_instance(rng, 12)
        while len(c.output_register) > 10:
            c = pendant_instance(rng, 12)
        P = run_dense(c)
        pd = strong_simulate(c)
        assert total_variation(P, pd.to_distribution()) <= 1e-10
        assert pd.success_probability == pytest.approx(P.success_probability, rel=1e-10)

    def test_product_structure(self):
        rng = np.random.default_rng(4)
        c = pendant_instance(rng, 9, p_post=0)
        P = run_dense(c)
        pd = strong_simulate(c)
        # joint = product of marginals, checked against the dense joint table
        for y, p in P.probs.items():
            assert pd.probability(y) == pytest.approx(p, abs=1e-12)

    def test_rejects_degree_two(self):
        with pytest.raises(UnsupportedCircuitError):
            strong_simulate(gadget_circuit(GadgetKind.Bridge))

    def test_strict_rejects_degree_one(self):
        c = make_circuit("wb", [CZ(0, 1)], outputs=(0,))
        strong_simulate(c)
        with pytest.raises(UnsupportedCircuitError):
            strong_simulate(c, strict=True)

    def test_rejects_invalid(self):
        with pytest.raises(UnsupportedCircuitError):
            strong_simulate(make_circuit("ww", [CZ(0, 1)]))

    def test_blocks(self):
        c = make_circuit("wbwb", [CZ(0, 1), T(1, 3), CZ(2, 3)])
        blocks, isolated = white_blocks(c)
        assert blocks[0].attached == [(1, 3)]
        assert blocks[2].attached == [(3, 0)]
        assert isolated == []

    def test_kraus_completeness(self):
        for d in range(8):
            K0, K1 = pendant_kraus(d, 0), pendant_kraus(d, 1)
            assert np.allclose(K0.conj().T @ K0 + K1.conj().T @ K1, np.eye(2))

    def test_linear_scaling(self):
        rng = np.random.default_rng(0)
        times = {}
        for n in (100, 1000, 10000):
            c = pendant_instance(rng, n, p_post=0)
            start = time.perf_counter()
            strong_simulate(c)
            times[n] = time.perf_counter() - start
        # a 100x bigger instance should cost far less than 100^2 times more
        assert times[10000] / max(times[100], 1e-4) < 1000


class TestNotSearch:
    def test_empty_body_never_negates(self):
        for x in (0, 1):
            c = not_family_circuit([0], [], x)
            assert run_dense(c)[str(x ^ 1)] == pytest.approx(0, abs=1e-12)

    def test_iqp_control(self):
        for x in (0, 1):
            assert run_dense(iqp_not_circuit(x))[str(x ^ 1)] == pytest.approx(1)

    def test_small_sweep(self):
        r = not_infeasibility_search(1, 1)
        assert r["same_register"]["exhaustive"]
        assert r["max_success"] < 1 - 1e-6

    def test_argmax_reproduces(self):
        r = not_infeasibility_search(2, 1)
        a = r["same_register"]["argmax"]
        succ = min(run_dense(not_family_circuit(a["white_preps"], a["blacks"], x))[str(x ^ 1)] for x in (0, 1))
        assert succ == pytest.approx(r["same_register"]["max_success"], abs=1e-12)

    def test_resource_limit(self):
        with pytest.raises(ResourceLimitError):
            not_infeasibility_search(5, 6)

    def test_negative_sizes(self):
        with pytest.raises(ArgumentError):
            not_infeasibility_search(-1, 0)
