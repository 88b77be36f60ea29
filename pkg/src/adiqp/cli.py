"""Command line entry point.

Every run writes a manifest (to ``--manifest`` or as one JSON line on
stderr) recording the resolved argv, seeds, input and output digests, so
``adiqp rerun --manifest m.json`` can replay it and compare bytes.

Exit codes: 0 success, 1 domain error, 2 usage error, 3 resource limit.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import os
import secrets
import sys
import time
from contextlib import redirect_stdout
from pathlib import Path

import numpy as np

from . import __version__
from .circuit import Circuit, validate_adiqp, validate_adiqp_star
from .compiler import (
    amplitude_identity,
    apply_mask,
    build_cf,
    lower_adiqp_star,
    lower_to_adiqp,
    lower_universal,
)
from .densesim import run_dense, run_lazy, sample
from .distribution import Distribution, l1_distance, multiplicative_check
from .errors import AdiqpError, ArgumentError, ResourceLimitError
from .f2poly import PolyF2Deg3, all_polys, anticoncentration_gaps, gap, gap_naive, random_poly
from .gadgets import TEMPLATES, GadgetKind, byproduct_residual, gadget_circuit, success_probabilities, verify_gadget

COMMANDS = {
    "gen-poly", "gap", "compile", "validate", "simulate", "sample", "strongsim", "metrics",
    "not-search", "anticoncentration", "gadgets", "verify", "lemma2-check", "rerun",
}


class _Run:
    """Collects what the manifest needs while a command executes."""

    def __init__(self):
        self.inputs: dict[str, str] = {}
        self.outputs: dict[str, str] = {}
        self.seeds: dict[str, int] = {}

    def read(self, path) -> str:
        p = Path(path)
        try:
            data = p.read_bytes()
        except FileNotFoundError:
            raise ArgumentError(f"no such file: {path}") from None
        self.inputs[str(path)] = hashlib.sha256(data).hexdigest()
        return data.decode()

    def write(self, path, text: str) -> None:
        data = text.encode()
        Path(path).write_bytes(data)
        self.outputs[str(path)] = hashlib.sha256(data).hexdigest()

    def emit(self, text: str, path=None) -> None:
        """Write to ``path`` if given, else to stdout."""
        if path:
            self.write(path, text)
        else:
            sys.stdout.write(text)

    def figure(self, path) -> None:
        self.outputs[str(path)] = hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _load_circuit(run: _Run, path) -> Circuit:
    try:
        return Circuit.loads(run.read(path))
    except (json.JSONDecodeError, KeyError, TypeError) as e:
        raise ArgumentError(f"{path}: not a circuit file ({e})") from None


def _load_poly(run: _Run, path) -> PolyF2Deg3:
    return PolyF2Deg3.from_text(run.read(path))


def _load_dist(run: _Run, path) -> Distribution:
    return Distribution.from_csv(run.read(path))


# -- commands -------------------------------------------------------------


def cmd_gen_poly(a, run):
    run.emit(random_poly(a.n, a.seed).to_text(), a.out)


def cmd_gap(a, run):
    f = _load_poly(run, a.poly)
    value = gap_naive(f) if a.naive else gap(f)
    run.emit(f"{value}\n", a.out)


def cmd_compile(a, run):
    if a.target == "universal":
        if not a.circuit:
            raise ArgumentError("--target universal needs --circuit (a plain H/T/CZ gate list)")
        c2, trace = lower_universal(_load_circuit(run, a.circuit))
    else:
        if not a.poly:
            raise ArgumentError(f"--target {a.target} needs --poly")
        cf = build_cf(_load_poly(run, a.poly))
        if a.target == "iqp":
            c2, trace = cf, None
        elif a.target == "adiqp":
            c2, trace = lower_to_adiqp(cf)
        else:
            c2, trace = lower_adiqp_star(cf)
    if a.mask:
        c2 = apply_mask(c2, a.mask)
    run.emit(c2.dumps(), a.out)
    if a.trace:
        if trace is None:
            raise ArgumentError("--trace is only produced by lowering targets")
        run.write(a.trace, _dump(trace.to_json()))
    if trace is not None:
        t = trace.to_json()["totals"]
        print(f"qubits={c2.n} consumed={t['consumed']} padded={t['padded']} m={t['m']} reconciled={t['reconciled']}", file=sys.stderr)


def cmd_validate(a, run):
    c = _load_circuit(run, a.circuit)
    report = (validate_adiqp_star if a.star else validate_adiqp)(c)
    run.emit(_dump(report.to_json()), a.out)
    return 0 if report.ok else 1


def cmd_simulate(a, run):
    c = _load_circuit(run, a.circuit)
    if a.mode == "lazy":
        trace = json.loads(run.read(a.trace)) if a.trace else None
        amp = run_lazy(c, trace, a.outcome)
        d = amp.to_json()
        d["log2_abs"] = amp.log2_abs if amp.mantissa != 0 else None
        run.emit(_dump(d), a.out)
        return
    if a.shots:
        _emit_samples(run, sample(c, a.shots, a.seed), a.out)
        return
    dist = run_dense(c)
    run.emit(dist.to_csv(), a.out)
    print(f"success_probability={dist.success_probability:.17g}", file=sys.stderr)
    if a.plot:
        from .plotting import plot_distributions

        run.figure(plot_distributions({"dense": dist}, a.plot))


def _emit_samples(run, shots, out):
    counts: dict[str, int] = {}
    for y in shots:
        counts[y] = counts.get(y, 0) + 1
    buf = io.StringIO()
    buf.write("bitstring,count\n")
    for y in sorted(counts):
        buf.write(f"{y},{counts[y]}\n")
    run.emit(buf.getvalue(), out)


def cmd_sample(a, run):
    c = _load_circuit(run, a.circuit)
    _emit_samples(run, sample(c, a.shots, a.seed), a.out)


def cmd_strongsim(a, run):
    from .strongsim import strong_simulate

    c = _load_circuit(run, a.circuit)
    pd = strong_simulate(c, strict=a.strict)
    if a.marginals or pd.n_bits > a.max_bits:
        buf = io.StringIO()
        buf.write("qubit,p1\n")
        for q, p in zip(c.output_register, pd.p1):
            buf.write(f"{q},{p:.17g}\n")
        run.emit(buf.getvalue(), a.out)
    else:
        run.emit(pd.to_distribution().to_csv(), a.out)
    print(f"log2_success={pd.log2_success:.17g}", file=sys.stderr)


def cmd_metrics(a, run):
    P, Q = _load_dist(run, a.p), _load_dist(run, a.q)
    if a.report == "l1":
        run.emit(_dump({"l1": l1_distance(P, Q)}), a.out)
        return
    kind, _, arg = a.report.partition(":")
    if kind != "mult" or not arg:
        raise ArgumentError(f"--report must be l1 or mult:c, got {a.report!r}")
    try:
        c = float(arg)
    except ValueError:
        raise ArgumentError(f"bad multiplicative constant {arg!r}") from None
    ok, worst = multiplicative_check(P, Q, c)
    run.emit(_dump({"c": c, "ok": ok, "worst_outcome": worst, "l1": l1_distance(P, Q)}), a.out)
    return 0 if ok else 1


def cmd_not_search(a, run):
    from .strongsim import not_infeasibility_search

    report = not_infeasibility_search(a.max_blacks, a.max_whites, seed=a.seed)
    run.emit(_dump(report), a.out)
    return 0 if report["max_success"] < 1 - 1e-6 else 1


def cmd_anticoncentration(a, run):
    frac, gaps = anticoncentration_gaps(a.n, a.samples, a.seed)
    run.emit(_dump({"n": a.n, "samples": a.samples, "seed": a.seed, "fraction": frac, "bound": 1 / 12, "ok": frac >= 1 / 12}), a.out)
    if a.plot:
        from .plotting import plot_gap_histogram

        run.figure(plot_gap_histogram(gaps, a.n, a.plot))


def cmd_gadgets(a, run):
    if a.action == "dump":
        if not a.kind:
            raise ArgumentError("gadgets dump needs --kind")
        run.emit(gadget_circuit(GadgetKind(a.kind)).dumps(), a.out)
        return
    buf = io.StringIO()
    buf.write("gadget,ancillas,residual,success_min,success_max,expected\n")
    residuals = {}
    bad = False
    for kind in GadgetKind:
        r = verify_gadget(kind)
        s = success_probabilities(kind)
        expect = 2.0 ** -len(TEMPLATES[kind].measured)
        residuals[kind.value] = r
        bad |= r > 1e-12 or np.abs(s - expect).max() > 1e-12
        buf.write(f"{kind.value},{len(TEMPLATES[kind].measured)},{r:.3e},{s.min():.17g},{s.max():.17g},{expect:.17g}\n")
    for pattern in ("001", "010", "011", "100", "101", "110", "111"):
        r = byproduct_residual(pattern)
        bad |= r > 1e-12
        buf.write(f"WhiteCZ[{pattern}],3,{r:.3e},,,\n")
    run.emit(buf.getvalue(), a.out)
    if a.plot:
        from .plotting import plot_residuals

        run.figure(plot_residuals(residuals, a.plot))
    return 1 if bad else 0


def cmd_verify(a, run):
    from .verifier import GraphState, NoiseModel, circuit_to_graphstate, stabilizer_test

    if bool(a.circuit) == bool(a.graph):
        raise ArgumentError("give exactly one of --circuit or --graph")
    if a.circuit:
        g = circuit_to_graphstate(_load_circuit(run, a.circuit))
    else:
        d = json.loads(run.read(a.graph))
        g = GraphState(d["q"], tuple(tuple(e) for e in d["edges"]), tuple(d["coloring"]))
    outcome = stabilizer_test(g, NoiseModel.parse(a.noise), a.k, a.seed, backend=a.backend, jobs=a.jobs)
    d = outcome.to_json()
    d.update({"noise": str(NoiseModel.parse(a.noise)), "k": a.k, "seed": a.seed, "graph": g.to_json()})
    run.emit(_dump(d), a.out)
    if a.plot:
        from .plotting import plot_stabilizer_test

        run.figure(plot_stabilizer_test(outcome, a.plot))


def cmd_lemma2_check(a, run):
    if a.all:
        if a.n > 3:
            raise ResourceLimitError("--all enumerates 2^(C(n,1)+C(n,2)+C(n,3)) polynomials; use n <= 3")
        polys = list(all_polys(a.n))
    else:
        polys = [random_poly(a.n, int(s)) for s in np.random.SeedSequence(a.seed).generate_state(a.samples)]
    buf = io.StringIO()
    buf.write("poly,n,m,gap,observed,reconciled,ok\n")
    failed = 0
    for f in polys:
        r = amplitude_identity(f)
        failed += not r.ok
        buf.write(f"{r.poly},{r.n},{r.m},{r.gap},{r.observed:.17g},{r.reconciled},{r.ok}\n")
    run.emit(buf.getvalue(), a.out)
    print(f"checked={len(polys)} failed={failed}", file=sys.stderr)
    return 1 if failed else 0


def cmd_rerun(a, run):
    man = json.loads(run.read(a.replay))
    argv = man["resolved_argv"]
    code, new = _execute(argv, echo=False)
    mismatched = [p for p, h in man["outputs"].items() if new["outputs"].get(p) != h]
    result = {"argv": argv, "exit_code": code, "expected_exit_code": man["exit_code"], "mismatched": mismatched}
    sys.stdout.write(_dump(result))
    return 0 if not mismatched and code == man["exit_code"] else 1


# -- parser ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="adiqp", description="Compile, simulate and verify ancilla-driven IQP circuits.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--manifest", help="write the run manifest here (default: one JSON line on stderr)")
    p.add_argument("--jobs", type=int, default=1, help="cap on worker threads")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_, seeded=False):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(fn=fn)
        sp.add_argument("--out", help="output path (default: stdout)")
        if seeded:
            sp.add_argument("--seed", type=int, help="random seed (default: $TOOL_SEED, else generated and recorded)")
        return sp

    sp = add("gen-poly", cmd_gen_poly, "random degree-3 polynomial", seeded=True)
    sp.add_argument("--n", type=int, required=True)

    sp = add("gap", cmd_gap, "signed count |f^-1(0)| - |f^-1(1)|")
    sp.add_argument("--poly", required=True)
    sp.add_argument("--naive", action="store_true", help="plain enumeration instead of Gray code")

    sp = add("compile", cmd_compile, "build or lower a circuit")
    sp.add_argument("--poly")
    sp.add_argument("--circuit", help="plain H/T/CZ gate list for --target universal")
    sp.add_argument("--target", choices=["iqp", "adiqp", "adiqp-star", "universal"], default="adiqp")
    sp.add_argument("--trace", help="write the lowering trace here")
    sp.add_argument("--mask", help="bitstring x: relabel output outcomes by x")

    sp = add("validate", cmd_validate, "check the white/black wiring rules")
    sp.add_argument("--circuit", required=True)
    sp.add_argument("--star", action="store_true", help="allow CCZ among whites")

    sp = add("simulate", cmd_simulate, "dense distribution, samples, or lazy amplitude", seeded=True)
    sp.add_argument("--circuit", required=True)
    sp.add_argument("--mode", choices=["dense", "lazy"], default="dense")
    sp.add_argument("--trace", help="lowering trace for --mode lazy")
    sp.add_argument("--outcome", help="bitstring for --mode lazy (default: postselected values, else 0)")
    sp.add_argument("--shots", type=int, default=0)
    sp.add_argument("--plot", help="PNG of the distribution")

    sp = add("sample", cmd_sample, "draw samples from the dense distribution", seeded=True)
    sp.add_argument("--circuit", required=True)
    sp.add_argument("--shots", type=int, required=True)

    sp = add("strongsim", cmd_strongsim, "exact output distribution when every black has at most one CZ")
    sp.add_argument("--circuit", required=True)
    sp.add_argument("--strict", action="store_true", help="require blacks with no CZ at all")
    sp.add_argument("--marginals", action="store_true", help="write per-qubit Pr[1] instead of the joint table")
    sp.add_argument("--max-bits", type=int, default=16, help="above this, marginals are written")

    sp = add("metrics", cmd_metrics, "compare two distribution CSVs")
    sp.add_argument("--p", required=True)
    sp.add_argument("--q", required=True)
    sp.add_argument("--report", default="l1", help="l1 or mult:c")

    sp = add("not-search", cmd_not_search, "best deterministic NOT over small ADIQP circuits", seeded=True)
    sp.add_argument("--max-blacks", type=int, default=3)
    sp.add_argument("--max-whites", type=int, default=2)

    sp = add("anticoncentration", cmd_anticoncentration, "fraction of f with gap^2 >= 2^(n-1)", seeded=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--samples", type=int, default=1000)
    sp.add_argument("--plot", help="PNG histogram of gap^2 / 2^n")

    sp = add("gadgets", cmd_gadgets, "verify or dump the gadget library")
    sp.add_argument("action", choices=["verify", "dump"])
    sp.add_argument("--kind", choices=[k.value for k in GadgetKind])
    sp.add_argument("--plot", help="PNG of residuals")

    sp = add("verify", cmd_verify, "stabilizer test on the circuit's graph state", seeded=True)
    sp.add_argument("--circuit")
    sp.add_argument("--graph", help="JSON with q, edges, coloring")
    sp.add_argument("--k", type=int, default=1000)
    sp.add_argument("--noise", default="none", help="none, depolarizing:p or pauli:STRING")
    sp.add_argument("--backend", choices=["auto", "dense", "tableau"], default="auto")
    sp.add_argument("--plot", help="PNG of per-generator failure rates")

    sp = add("lemma2-check", cmd_lemma2_check, "check the lowered amplitude against gap(f)", seeded=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--all", action="store_true")
    sp.add_argument("--samples", type=int, default=10)

    sp = sub.add_parser("rerun", help="replay a manifest and compare output digests")
    sp.set_defaults(fn=cmd_rerun)
    sp.add_argument("--manifest", dest="replay", required=True)
    return p


def _resolve_seed(a, argv: list[str]) -> list[str]:
    if not hasattr(a, "seed") or a.seed is not None:
        return list(argv)
    env = os.environ.get("TOOL_SEED")
    if env is not None:
        try:
            a.seed = int(env)
        except ValueError:
            raise ArgumentError(f"TOOL_SEED must be an integer, got {env!r}") from None
    else:
        a.seed = secrets.randbits(32)
    return list(argv) + ["--seed", str(a.seed)]


def _strip_manifest(argv: list[str]) -> list[str]:
    """Drop the global --manifest option so a replay does not overwrite the original."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in COMMANDS:
            return out + argv[i:]
        if tok == "--manifest":
            i += 2
            continue
        if tok.startswith("--manifest="):
            i += 1
            continue
        out.append(tok)
        i += 1
    return out


def _execute(argv: list[str], echo: bool = True) -> tuple[int, dict]:
    """Parse and run; returns (exit code, manifest)."""
    a = build_parser().parse_args(argv)
    if a.jobs < 1:
        raise ArgumentError("--jobs must be at least 1")
    run = _Run()
    start = time.perf_counter()
    resolved = _resolve_seed(a, _strip_manifest(argv))
    if hasattr(a, "seed"):
        run.seeds["seed"] = a.seed
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = a.fn(a, run) or 0
    text = buf.getvalue()
    if echo:
        sys.stdout.write(text)
    if text:
        run.outputs["<stdout>"] = hashlib.sha256(text.encode()).hexdigest()
    manifest = {
        "command": a.command,
        "argv": list(argv),
        "resolved_argv": resolved,
        "flags": {k: v for k, v in sorted(vars(a).items()) if k != "fn"},
        "seeds": run.seeds,
        "inputs": run.inputs,
        "outputs": run.outputs,
        "exit_code": code,
        "version": __version__,
        "wall_time": time.perf_counter() - start,
    }
    if a.manifest:
        Path(a.manifest).write_text(json.dumps(manifest, sort_keys=True, default=str) + "\n")
    else:
        print(json.dumps(manifest, sort_keys=True, default=str), file=sys.stderr)
    return code, manifest


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        code, _ = _execute(argv)
    except SystemExit as e:  # argparse usage errors and --help
        return e.code if isinstance(e.code, int) else 2
    except AdiqpError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except MemoryError:
        print("error: out of memory", file=sys.stderr)
        return 3
    return code


if __name__ == "__main__":
    sys.exit(main())
