"""``ctcsim`` command line.

Exit codes: 0 pass, 1 verification/acceptance failure, 2 usage or I/O error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from ctcsim import kernel, loop, protocols, verify
from ctcsim.kernel import BELL_BASIS
from ctcsim.linalg import ContractViolation, equal_up_to_phase
from ctcsim.statespec import SpecError, parse_stages, parse_state
from ctcsim.stats import Histogram, max_sigma_deviation, tv_distance, within_binomial

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _csv_path(out: Path) -> Path:
    return out.with_suffix(".csv")


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from exc


def _emit(summary: dict, as_json: bool) -> None:
    if as_json:
        print(json.dumps(summary, indent=2, sort_keys=True, default=str))


def _hist_lines(name: str, hist: Histogram) -> str:
    cells = " ".join(f"{l}:{p:.4f}" for l, p in zip(hist.labels, hist.probabilities))
    return f"{name}: {cells}"


def _compare(observed: Histogram, expected) -> dict:
    return {
        "tv_distance": tv_distance(observed, expected),
        "max_sigma": max_sigma_deviation(observed, expected),
        "within_5sigma": within_binomial(observed, expected),
    }


def cmd_verify(args) -> int:
    sigma_fn = verify.faulty_sigma if args.inject_fault == "sigma" else kernel.sigma
    checks = verify.run_all(args.tolerance, args.seed, sigma_fn)
    for c in checks:
        print(c.line())
    report = verify.report_dict(checks)
    if args.out:
        _write(Path(args.out), json.dumps(report, indent=2) + "\n")
    _emit(report, args.json)
    print("verify:", "PASS" if report["passed"] else "FAIL")
    return EXIT_OK if report["passed"] else EXIT_FAIL


def _write_loop_run(run: loop.LoopRun, out: Path | None) -> Histogram:
    hist = run.histogram
    if out is not None:
        lines = (
            json.dumps({"trial_id": t, "outcome": list(l)}, separators=(",", ":"))
            for t, l in enumerate(run.outcomes)
        )
        _write(out, "".join(line + "\n" for line in lines))
        _write(_csv_path(out), hist.to_csv())
    return hist


def cmd_cnot_demo(args) -> int:
    alpha, beta = complex(args.alpha), complex(args.beta)
    run = loop.cnot_demo(alpha, beta, args.trials, args.seed)
    hist = _write_loop_run(run, _out(args))
    phi = np.array([alpha, beta]) / np.linalg.norm([alpha, beta])
    exact = loop.loop_outcome_distribution(loop.cnot_loop(), phi)
    forbidden = int(hist.counts[1] + hist.counts[3])
    consistent = all(
        equal_up_to_phase(state, kernel.basis_state("0" if l == kernel.PSI00 else "1"), 1e-10)
        for l, state in zip(run.outcomes, run.residuals)
    )
    cmp_ = _compare(hist, exact)
    passed = cmp_["within_5sigma"] and forbidden == 0 and consistent
    print(_hist_lines("observed", hist))
    print(_hist_lines("exact   ", exact))
    print(f"Psi01+Psi11 count: {forbidden}; residual |0> iff Psi00: {consistent}")
    print(f"tv={cmp_['tv_distance']:.3e} max_sigma={cmp_['max_sigma']:.2f} ->", "PASS" if passed else "FAIL")
    _emit({"observed": hist.probabilities.tolist(), "exact": exact.probabilities.tolist(),
           "forbidden_count": forbidden, "passed": passed, **cmp_}, args.json)
    return EXIT_OK if passed else EXIT_FAIL


def cmd_loop(args) -> int:
    gate = kernel.NAMED_GATES.get(args.gate.upper())
    if gate is None or gate.shape != (4, 4):
        raise UsageError(f"--gate must be a 2-qubit gate name (CNOT, SWAP), got {args.gate!r}")
    circuit = loop.LoopCircuit(gate, args.loop_qubit)
    psi = parse_state(args.state)
    run = loop.run_loop(circuit, psi, args.trials, args.seed)
    hist = _write_loop_run(run, _out(args))
    exact = loop.loop_outcome_distribution(circuit, psi)
    cmp_ = _compare(hist, exact)
    identity = loop.verify_loop_identity(circuit, args.tolerance)
    passed = cmp_["within_5sigma"] and identity
    print(_hist_lines("observed", hist))
    print(_hist_lines("exact   ", exact))
    print(f"loop identity: {identity}; tv={cmp_['tv_distance']:.3e} ->", "PASS" if passed else "FAIL")
    _emit({"observed": hist.probabilities.tolist(), "exact": exact.probabilities.tolist(),
           "loop_identity": identity, "passed": passed, **cmp_}, args.json)
    return EXIT_OK if passed else EXIT_FAIL


def _require_out(args) -> Path:
    if not args.out:
        raise UsageError("--out is required")
    return Path(args.out)


def _out(args) -> Path | None:
    return Path(args.out) if args.out else None


def cmd_encrypt_run(args) -> int:
    out = _require_out(args)
    phi = parse_state(args.state)
    if phi.shape != (4,):
        raise UsageError("--state must describe a 2-qubit state")
    sub = None
    if args.substitute_at is not None:
        if not args.substitute_state:
            raise UsageError("--substitute-at needs --substitute-state")
        sub = (args.substitute_at, parse_state(args.substitute_state))
    records = protocols.run_encrypted_measurement(phi, args.trials, args.seed, sub)
    protocols.write_records(records, out)

    decoded, hist = protocols.decode_trials(records)
    _write(_csv_path(out), hist.to_csv())
    cipher = protocols.ciphertext_uselessness_check(records)
    summary: dict = {"records": str(out), "histogram": str(_csv_path(out))}
    segments = [("all", decoded, phi)] if sub is None else [
        ("before", decoded[: sub[0]], phi), ("after", decoded[sub[0]:], sub[1])
    ]
    passed = cipher.useless_alone
    for name, recs, state in segments:
        if not recs:
            continue
        h = Histogram.from_samples(protocols.LABEL_STRS, (str(r.decoded) for r in recs))
        exact = kernel.born_distribution(state, BELL_BASIS, [0, 1])
        cmp_ = _compare(h, exact)
        passed = passed and cmp_["within_5sigma"]
        summary[name] = {"decoded": h.probabilities.tolist(), "exact": exact.probabilities.tolist(), **cmp_}
        print(_hist_lines(f"decoded[{name}]", h))
        print(_hist_lines(f"exact  [{name}]", exact))
        print(f"  tv={cmp_['tv_distance']:.3e} max_sigma={cmp_['max_sigma']:.2f}")
    print(_hist_lines("ciphertext", cipher.today))
    print(f"ciphertext tv-to-uniform={cipher.tv_to_uniform:.3e}; today uniform: {cipher.today_uniform};"
          f" keys uniform: {cipher.keys_uniform}")
    summary.update(ciphertext_tv_to_uniform=cipher.tv_to_uniform, today_uniform=cipher.today_uniform,
                   keys_uniform=cipher.keys_uniform, passed=passed)
    print("encrypt-run:", "PASS" if passed else "FAIL")
    _emit(summary, args.json)
    return EXIT_OK if passed else EXIT_FAIL


def cmd_decode(args) -> int:
    src = Path(args.input)
    out = _require_out(args)
    try:
        records = protocols.read_records(src)
    except OSError as exc:
        raise UsageError(f"cannot read {src}: {exc}") from exc
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"malformed record file {src}: {exc}") from exc
    decoded, hist = protocols.decode_trials(records)
    protocols.write_records(decoded, out)
    _write(_csv_path(out), hist.to_csv())
    print(_hist_lines("decoded", hist))
    summary: dict = {"n_records": len(decoded), "decoded": hist.probabilities.tolist()}
    passed = True
    if args.expect_state:
        exact = kernel.born_distribution(parse_state(args.expect_state), BELL_BASIS, [0, 1])
        cmp_ = _compare(hist, exact)
        passed = cmp_["within_5sigma"]
        summary.update(exact=exact.probabilities.tolist(), **cmp_)
        print(_hist_lines("expected", exact))
        print(f"tv={cmp_['tv_distance']:.3e} ->", "PASS" if passed else "FAIL")
    summary["passed"] = passed
    _emit(summary, args.json)
    return EXIT_OK if passed else EXIT_FAIL


def cmd_multistage(args) -> int:
    stages = parse_stages(args.stages)
    psi = parse_state(args.state)
    if psi.shape != (2,):
        raise UsageError("--state must describe a 1-qubit state")
    trials = args.trials or protocols.multistage_trials_for(len(stages))
    report = protocols.run_multistage(stages, psi, trials, args.seed)
    target = protocols.composed_unitary(stages) @ psi
    outputs_ok = all(equal_up_to_phase(s, target, args.tolerance) for s in report.conditional_final_states.values())
    rate_ok = protocols.success_within_binomial(report)
    out = _out(args)
    if out is not None:
        lines = (
            json.dumps({"trial_id": t, "outcomes": [list(l) for l in o],
                        "success": all(l == kernel.PSI00 for l in o)}, separators=(",", ":"))
            for t, o in enumerate(report.outcomes)
        )
        _write(out, "".join(line + "\n" for line in lines))
        fails = report.n_trials - report.success_count
        hist = Histogram(("success", "failure"), np.array([report.success_count, fails]) / report.n_trials,
                         np.array([report.success_count, fails]))
        _write(_csv_path(out), hist.to_csv())
    passed = rate_ok and outputs_ok
    expected = 4.0 ** -len(stages)
    print(f"stages={len(stages)} trials={trials} successes={report.success_count}"
          f" rate={report.success_rate:.5f} expected={expected:.5f}")
    print(f"success rate within 5 sigma: {rate_ok}; outputs = U_k..U_1 psi up to phase: {outputs_ok}")
    print("multistage:", "PASS" if passed else "FAIL")
    _emit({"stages": len(stages), "trials": trials, "success_count": report.success_count,
           "success_rate": report.success_rate, "expected_rate": expected,
           "rate_within_5sigma": rate_ok, "outputs_match": outputs_ok, "passed": passed}, args.json)
    return EXIT_OK if passed else EXIT_FAIL


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed (64-bit)")
    common.add_argument("--json", action="store_true", help="also print a JSON summary")

    p = argparse.ArgumentParser(prog="ctcsim", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", parents=[common], help="run the algebraic identity suite")
    v.add_argument("--tolerance", type=_positive_float, default=None,
                   help="override every check's tolerance (defaults 1e-12 / 1e-10)")
    v.add_argument("--out", help="write the JSON report here")
    v.add_argument("--inject-fault", choices=["sigma"], help=argparse.SUPPRESS)
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("cnot-demo", parents=[common], help="CNOT loop outcome statistics")
    c.add_argument("--alpha", type=float, default=0.6)
    c.add_argument("--beta", type=float, default=0.8)
    c.add_argument("--trials", type=_positive_int, default=100_000)
    c.add_argument("--out")
    c.set_defaults(func=cmd_cnot_demo)

    lp = sub.add_parser("loop", parents=[common], help="teleportation loop over a 2-qubit gate")
    lp.add_argument("--gate", default="CNOT")
    lp.add_argument("--loop-qubit", type=int, default=1)
    lp.add_argument("--state", default="comp:0", help="open-wire input state")
    lp.add_argument("--trials", type=_positive_int, default=100_000)
    lp.add_argument("--tolerance", type=_positive_float, default=1e-10)
    lp.add_argument("--out")
    lp.set_defaults(func=cmd_loop)

    e = sub.add_parser("encrypt-run", parents=[common], help="encrypted joint measurement run")
    e.add_argument("--state", required=True, help="tomorrow's 2-qubit state")
    e.add_argument("--trials", type=_positive_int, default=100_000)
    e.add_argument("--out", required=True, help="trial record JSONL (histogram CSV alongside)")
    e.add_argument("--substitute-at", type=int)
    e.add_argument("--substitute-state")
    e.set_defaults(func=cmd_encrypt_run)

    d = sub.add_parser("decode", parents=[common], help="decode a trial record file with its keys")
    d.add_argument("--in", dest="input", required=True)
    d.add_argument("--out", required=True)
    d.add_argument("--expect-state", help="compare against this state's exact Bell distribution")
    d.set_defaults(func=cmd_decode)

    m = sub.add_parser("multistage", parents=[common], help="pipeline single-qubit stages")
    m.add_argument("--stages", required=True, help="e.g. 'H,X,[0,0;1,0;1,0;0,0]'")
    m.add_argument("--state", default="comp:0")
    m.add_argument("--trials", type=_positive_int, default=None,
                   help="default max(1e5, 100 * 4^k)")
    m.add_argument("--tolerance", type=_positive_float, default=1e-10)
    m.add_argument("--out")
    m.set_defaults(func=cmd_multistage)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, SpecError, ContractViolation, OSError) as exc:
        print(f"ctcsim {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
