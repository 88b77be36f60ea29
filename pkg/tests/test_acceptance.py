"""End-to-end acceptance checks, one test per criterion, each at its stated tolerance and time budget.

A summary line per criterion is printed at the end of the pytest run (see conftest.py).
"""

import json
import time

import numpy as np
import pytest

from adiqp.circuit import validate_adiqp, validate_adiqp_star
from adiqp.cli import main
from adiqp.compiler import (
    amplitude_identity,
    build_cf,
    ccz_decompose,
    gate_census,
    logical_unitary,
    lower_adiqp_star,
    lower_to_adiqp,
    lower_universal,
)
from adiqp.densesim import amplitude, run_dense, unitary
from adiqp.distribution import total_variation
from adiqp.errors import DegeneratePostselectionError
from adiqp.f2poly import all_polys, anticoncentration_gaps, gap, gap_naive, random_poly
from adiqp.gadgets import TEMPLATES, GadgetKind, byproduct_residual, phase_aligned_residual, success_probabilities, verify_gadget
from adiqp.strongsim import not_infeasibility_search, strong_simulate
from adiqp.verifier import (
    GraphState,
    NoiseModel,
    StabilizerTableau,
    apply_clifford_dense,
    exact_fidelity,
    generator_failure_probabilities,
    graph_state_vector,
    pauli_matrix,
    stabilizer_test,
    tableau_expectation,
)

from _factories import VIOLATION_CORPUS, lowered_action, pendant_instance, plain, random_htcz

CCZ = np.diag([1, 1, 1, 1, 1, 1, 1, -1]).astype(complex)


class Budget:
    """Wall-clock stopwatch checked against a criterion's time limit."""

    def __init__(self, seconds):
        self.seconds = seconds
        self.start = time.perf_counter()

    @property
    def elapsed(self):
        return time.perf_counter() - self.start

    def check(self):
        assert self.elapsed < self.seconds, f"took {self.elapsed:.1f} s, budget {self.seconds} s"


@pytest.mark.criterion(1, "Gray-code gap equals naive enumeration")
def test_gap_oracle():
    clock = Budget(30)
    for f in all_polys(3):
        assert gap(f) == gap_naive(f), f.to_text()
    for s in range(500):
        f = random_poly(12, 10_000 + s)
        assert gap(f) == gap_naive(f), f.to_text()
    clock.check()


@pytest.mark.criterion(2, "dense <0|C_f|0> equals gap(f)/2^n")
def test_cf_amplitude_identity():
    clock = Budget(120)
    rng = np.random.default_rng(2)
    for s in range(100):
        n = int(rng.integers(1, 11))
        f = random_poly(n, 20_000 + s)
        amp = amplitude(build_cf(f), "0" * n)
        assert abs(amp - gap(f) / 2**n) <= 1e-10, (n, amp, gap(f))
    clock.check()


@pytest.mark.criterion(3, "gadget residuals, success branches and WhiteCZ byproducts")
def test_gadget_suite():
    clock = Budget(10)
    assert len(GadgetKind) == 7
    for kind in GadgetKind:
        assert verify_gadget(kind) <= 1e-12, kind
        expected = 2.0 ** -len(TEMPLATES[kind].measured)
        assert np.abs(success_probabilities(kind) - expected).max() <= 1e-12, kind
    patterns = [format(i, "03b") for i in range(1, 8)]
    assert all(byproduct_residual(p) <= 1e-12 for p in patterns)
    clock.check()


@pytest.mark.criterion(4, "CCZ decomposition census and product")
def test_ccz_decomposition():
    clock = Budget(1)
    gates = ccz_decompose()
    assert gate_census(gates) == {"CZ": 9, "H": 16, "T": 9, "Sdg": 3}
    assert phase_aligned_residual(unitary(plain(3, gates)), CCZ) <= 1e-12
    clock.check()


@pytest.mark.criterion(5, "lazy lowered amplitude equals |gap(f)|/2^(n+m/2)")
def test_lowered_amplitude_identity():
    clock = Budget(300)
    cases = list(all_polys(3)) + [random_poly(4, 30_000 + s) for s in range(30)]
    assert len(cases) == 128 + 30
    for f in cases:
        r = amplitude_identity(f, rtol=1e-9)
        assert r.m == {3: 139, 4: 538}[f.n]
        assert r.reconciled, f.to_text()
        assert r.ok, r
    clock.check()


@pytest.mark.criterion(6, "validator rejects the violation corpus and accepts compiler outputs")
def test_validator():
    assert len(VIOLATION_CORPUS) == 10
    # compiler outputs are built before the clock starts; the budget covers validation only
    outputs = []
    for s in range(3):
        f = random_poly(3, 40_000 + s)
        outputs.append((validate_adiqp, lower_to_adiqp(build_cf(f))[0]))
        outputs.append((validate_adiqp_star, lower_adiqp_star(build_cf(f))[0]))
    rng = np.random.default_rng(6)
    for _ in range(3):
        outputs.append((validate_adiqp, lower_universal(random_htcz(rng, 3, 8))[0]))
    clock = Budget(1)
    for code, c in VIOLATION_CORPUS:
        report = validate_adiqp(c)
        assert not report.ok
        assert report.codes == [code], (code, report.codes)
    for check, c in outputs:
        assert check(c).ok, check(c).codes
    clock.check()


def _median_time(c, repeats=3):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        strong_simulate(c)
        times.append(time.perf_counter() - start)
    return float(np.median(times))


@pytest.mark.criterion(7, "strong simulation exact on small instances and linear in size")
def test_strong_simulation():
    clock = Budget(120)
    rng = np.random.default_rng(7)
    checked = 0
    while checked < 200:
        c = pendant_instance(rng, int(rng.integers(2, 15)))
        try:
            P = run_dense(c)
        except DegeneratePostselectionError:  # no distribution to compare against
            continue
        Q = strong_simulate(c).to_distribution(limit=14)
        assert total_variation(P, Q) <= 1e-10
        checked += 1
    sizes = [100, 300, 1000, 3000, 10000]
    seconds = [_median_time(pendant_instance(np.random.default_rng(n), n, p_post=0)) for n in sizes]
    slope = np.polyfit(np.log(sizes), np.log(seconds), 1)[0]
    assert slope <= 1.2, f"log-log slope {slope:.2f}, times {seconds}"
    clock.check()


@pytest.mark.criterion(8, "anti-concentration fraction at n = 8 is at least 1/12")
def test_anticoncentration():
    clock = Budget(60)
    frac, _ = anticoncentration_gaps(8, 3000, seed=8)
    if frac < 1 / 12:
        frac, _ = anticoncentration_gaps(8, 3000, seed=80)
    assert frac >= 1 / 12, frac
    clock.check()


@pytest.mark.criterion(9, "lowered universal circuits act as their targets")
def test_universality():
    clock = Budget(60)
    rng = np.random.default_rng(9)
    for _ in range(20):
        target = random_htcz(rng, 3, 12)
        c2, trace = lower_universal(target)
        assert validate_adiqp(c2).ok
        assert phase_aligned_residual(lowered_action(c2, trace, 3), logical_unitary(target)) <= 1e-9
    clock.check()


@pytest.mark.criterion(10, "no small ADIQP circuit realizes a deterministic NOT")
def test_not_search():
    clock = Budget(300)
    r = not_infeasibility_search(max_blacks=3, max_white_ancillas=2)
    assert r["same_register"]["exhaustive"] and r["distinct_register"]["exhaustive"]
    assert r["max_success"] < 1 - 1e-6, r["max_success"]
    clock.check()


def _random_clifford_pair(rng, q):
    g = GraphState.random(q, rng)
    t = StabilizerTableau.from_graph(g)
    psi = graph_state_vector(g)
    for _ in range(30):
        r = rng.integers(4)
        if r < 2:
            a = int(rng.integers(q))
            gate = "h" if r == 0 else "s"
            getattr(t, gate)(a)
            psi = apply_clifford_dense(psi, q, gate, a)
        elif q > 1:
            a, b = (int(v) for v in rng.choice(q, 2, replace=False))
            gate = "cz" if r == 2 else "cnot"
            getattr(t, gate)(a, b)
            psi = apply_clifford_dense(psi, q, gate, a, b)
    return t, psi


@pytest.mark.criterion(11, "stabilizer test soundness and tableau/dense agreement")
def test_verifier_soundness():
    clock = Budget(180)
    rng = np.random.default_rng(11)
    for q in range(1, 11):
        for _ in range(3):
            out = stabilizer_test(GraphState.random(q, rng), None, k=1000, seed=int(rng.integers(2**31)))
            assert out.failures == 0 and out.fidelity_lower_bound == 1
    for _ in range(50):
        g = GraphState.random(int(rng.integers(1, 7)), rng)
        noise = NoiseModel("depolarizing", float(rng.uniform(0, 0.3)))
        out = stabilizer_test(g, noise, k=1000, seed=int(rng.integers(2**31)))
        p = float(np.mean(generator_failure_probabilities(g, noise, backend="dense")))
        se = g.q * np.sqrt(p * (1 - p) / out.tested)
        assert out.fidelity_lower_bound <= exact_fidelity(g, noise) + 3 * se
    letters = np.array(list("IXYZ"))
    for _ in range(40):
        q = int(rng.integers(1, 9))
        t, psi = _random_clifford_pair(rng, q)
        paulis = ["".join(letters[rng.integers(0, 4, q)]) for _ in range(20)] + t.rows()
        for s in paulis:
            dense = float(np.real(np.vdot(psi, pauli_matrix(s) @ psi)))
            assert abs(tableau_expectation(t, s) - dense) < 1e-9, s
    clock.check()


SEEDED_RUNS = [
    ["gen-poly", "--n", "7", "--seed", "12", "--out", "f.txt"],
    ["gen-poly", "--n", "5", "--out", "g.txt"],
    ["simulate", "--circuit", "coin.json", "--shots", "200", "--seed", "3", "--out", "shots.csv"],
    ["sample", "--circuit", "coin.json", "--shots", "100", "--out", "s.txt"],
    ["not-search", "--max-blacks", "1", "--max-whites", "1", "--seed", "4", "--out", "not.json"],
    ["anticoncentration", "--n", "6", "--samples", "200", "--seed", "5", "--out", "ac.json", "--plot", "ac.png"],
    ["verify", "--graph", "g.json", "--k", "200", "--noise", "depolarizing:0.1", "--seed", "6", "--out", "v.json"],
    ["lemma2-check", "--n", "3", "--samples", "3", "--seed", "7", "--out", "l2.csv"],
]


@pytest.mark.criterion(12, "seeded CLI runs reproduce byte-identical outputs from their manifests")
def test_cli_determinism(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("TOOL_SEED", raising=False)
    assert main(["gadgets", "dump", "--kind", "WhiteH", "--out", "coin.json"]) == 0
    (tmp_path / "g.json").write_text(json.dumps({"q": 4, "edges": [[0, 1], [1, 2], [2, 3]], "coloring": [0, 1, 0, 1]}))
    for i, argv in enumerate(SEEDED_RUNS):
        manifest = f"m{i}.json"
        assert main(["--manifest", manifest] + argv) == 0, argv
        outputs = json.loads((tmp_path / manifest).read_text())["outputs"]
        files = {p: (tmp_path / p).read_bytes() for p in outputs if p != "<stdout>"}
        assert files, argv
        capsys.readouterr()
        for _ in range(2):
            assert main(["rerun", "--manifest", manifest]) == 0, argv
            assert json.loads(capsys.readouterr().out)["mismatched"] == [], argv
            assert all((tmp_path / p).read_bytes() == data for p, data in files.items()), argv
