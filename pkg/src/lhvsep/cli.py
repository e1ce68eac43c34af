"""Command-line interface: ``lhvsep <subcommand> ...``.

Exit codes: 0 success, 1 input or parse error, 2 invariant violation,
3 locality verdict Undetermined.
"""

import argparse
import os
import sys

from . import io
from .exceptions import InconsistentModelError, InvariantError, LhvSepError, PositivityError
from .lhv import check_admissible, check_consistency
from .montecarlo import (
    SIGNIFICANCE,
    OutcomeRecord,
    compare_records,
    compare_statistics,
    lhv_probabilities,
    outcome_probabilities,
    sample_lhv,
    sample_quantum,
)
from .povm import NAMED_POVMS, discover_constraints, named_povm
from .reconstruction import (
    ProductEnsemble,
    assemble_mixture,
    default_frame,
    extract_ensemble,
    frame_responses,
    gleason_fit,
    qubit_state,
)
from .separability import DECOMPOSITION_TOL, UNDETERMINED, lhv_from_separable, locality_verdict
from .states import NAMED_STATES, random_ensemble

EXIT_OK, EXIT_INPUT, EXIT_INVARIANT, EXIT_UNDETERMINED = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _emit(obj, output, **refs):
    text = io.serialize(obj, **refs)
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _named_ensemble(args):
    if args.fixture == "maximally-mixed":
        half = qubit_state([0, 0, 0])
        return ProductEnsemble([(1.0, half, half)])
    if args.fixture == "classical":
        up, down = qubit_state([0, 0, 1]), qubit_state([0, 0, -1])
        return ProductEnsemble([(0.5, up, up), (0.5, down, down)])
    return random_ensemble(args.k, args.seed, pure=args.pure)


def cmd_gen(args):
    if args.what == "state":
        if args.fixture not in NAMED_STATES:
            raise LhvSepError(f"unknown state fixture {args.fixture!r}; choose from {sorted(NAMED_STATES)}")
        _emit(NAMED_STATES[args.fixture](p=args.p, seed=args.seed), args.output)
    elif args.what == "povm":
        _emit(named_povm(args.fixture), args.output)
    elif args.what == "ensemble":
        if args.fixture not in ("maximally-mixed", "classical", "random"):
            raise LhvSepError(f"unknown ensemble fixture {args.fixture!r}")
        _emit(_named_ensemble(args), args.output)
    elif args.what == "frame":
        _emit(default_frame(args.dim), args.output)
    elif args.what == "responses":
        if len(args.inputs) != 2:
            raise LhvSepError("gen responses needs <frame-file> <state-file>")
        frame = io.load(args.inputs[0], expect="frame")
        rho = io.load(args.inputs[1], expect="state")
        _emit(io.Responses(frame_responses(frame, rho)), args.output)
    return EXIT_OK


def cmd_constraints(args):
    _emit(discover_constraints(io.load(args.povm, expect="povm")), args.output)
    return EXIT_OK


def cmd_check_lhv(args):
    model = io.load(args.model, expect="lhv-model")
    report = check_admissible(model).extend(check_consistency(model))
    _emit(report, args.output)
    if not report.ok:
        print(report.summary(), file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_reconstruct(args):
    model = io.load(args.model, expect="lhv-model")
    try:
        ensemble = extract_ensemble(model)
    except (PositivityError, InconsistentModelError) as err:
        print(f"error: {err}", file=sys.stderr)
        if getattr(err, "report", None) is not None and not err.report.ok:
            print(err.report.summary(), file=sys.stderr)
        return EXIT_INVARIANT
    _emit(ensemble, args.output)
    state = assemble_mixture(ensemble)
    if args.state_out:
        _emit(state, args.state_out)
    return EXIT_OK


def _ref(povm_path, output):
    if output is None:
        return os.path.abspath(povm_path)
    return os.path.relpath(os.path.abspath(povm_path), os.path.dirname(os.path.abspath(output)))


def cmd_build_lhv(args):
    ensemble = io.load(args.ensemble, expect="ensemble")
    pa = io.load(args.povm_a, expect="povm")
    pb = io.load(args.povm_b, expect="povm")
    model = lhv_from_separable(ensemble, pa, pb)
    _emit(model, args.output, povm_a_ref=_ref(args.povm_a, args.output), povm_b_ref=_ref(args.povm_b, args.output))
    return EXIT_OK


def cmd_verdict(args):
    rho = io.load(args.state, expect="state")
    verdict = locality_verdict(rho, restarts=args.restarts, seed=args.seed, tol=args.tol, n_jobs=args.jobs)
    _emit(verdict, args.output)
    line = verdict.kind
    if verdict.certificate is not None:
        line += f" (PT eigenvalue {verdict.certificate[0]:.12g})"
    elif "residual" in verdict.diagnostics:
        line += f" (residual {verdict.diagnostics['residual']:.3e})"
    print(line, file=sys.stderr)
    return EXIT_UNDETERMINED if verdict.kind == UNDETERMINED else EXIT_OK


def cmd_simulate(args):
    if args.source == "quantum":
        if len(args.inputs) != 3:
            raise LhvSepError("simulate quantum needs <state-file> <povmA-file> <povmB-file>")
        rho = io.load(args.inputs[0], expect="state")
        pa = io.load(args.inputs[1], expect="povm")
        pb = io.load(args.inputs[2], expect="povm")
        if args.exact:
            _emit(io.Distribution(outcome_probabilities(rho, pa, pb)), args.output)
        else:
            _emit(sample_quantum(rho, pa, pb, args.n, args.seed, workers=args.jobs), args.output)
    else:
        if len(args.inputs) != 1:
            raise LhvSepError("simulate lhv needs <model-file>")
        model = io.load(args.inputs[0], expect="lhv-model")
        if args.exact:
            _emit(io.Distribution(lhv_probabilities(model)), args.output)
        else:
            _emit(sample_lhv(model, args.n, args.seed, workers=args.jobs), args.output)
    return EXIT_OK


def cmd_compare(args):
    record = io.load(args.outcomes, expect="outcomes")
    expected = io.load(args.expected, expect=("distribution", "outcomes"))
    if isinstance(expected, OutcomeRecord):
        report = compare_records(record, expected, args.significance)
    else:
        report = compare_statistics(record, expected.probabilities, args.significance)
    _emit(report, args.output)
    print("pass" if report.passed else "fail", f"(chi2 = {report.statistic:.4g}, dof = {report.dof}, "
          f"p = {report.p_value:.4g})", file=sys.stderr)
    return EXIT_OK


def cmd_gleason_fit(args):
    frame = io.load(args.frame, expect="frame")
    responses = io.load(args.responses, expect="responses")
    _emit(gleason_fit(frame, responses.values), args.output)
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="lhvsep", description="Consistent LHV models and product-state decompositions.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def out(p):
        p.add_argument("-o", "--output", help="write the document here instead of stdout")
        return p

    p = out(sub.add_parser("gen", help="generate fixture documents"))
    p.add_argument("what", choices=["state", "povm", "ensemble", "frame", "responses"])
    p.add_argument("fixture", nargs="?", default=None,
                   help=f"state: {', '.join(NAMED_STATES)}; povm: {', '.join(NAMED_POVMS)}; "
                        "ensemble: maximally-mixed, classical, random")
    p.add_argument("inputs", nargs="*", help="for 'responses': <frame-file> <state-file>")
    p.add_argument("--p", type=float, default=0.5, help="Werner mixing parameter")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, default=3, help="terms in a random ensemble")
    p.add_argument("--pure", action="store_true", help="random ensemble with pure factors")
    p.add_argument("--dim", type=int, default=3, help="frame dimension")
    p.set_defaults(func=cmd_gen)

    p = out(sub.add_parser("constraints", help="linear constraints among a POVM's weighted effects"))
    p.add_argument("povm")
    p.set_defaults(func=cmd_constraints)

    p = out(sub.add_parser("check-lhv", help="admissibility and consistency report"))
    p.add_argument("model")
    p.set_defaults(func=cmd_check_lhv)

    p = out(sub.add_parser("reconstruct", help="product ensemble from a consistent model"))
    p.add_argument("model")
    p.add_argument("--state-out", help="also write the assembled mixture here")
    p.set_defaults(func=cmd_reconstruct)

    p = out(sub.add_parser("build-lhv", help="LHV model from a product ensemble"))
    p.add_argument("ensemble")
    p.add_argument("povm_a")
    p.add_argument("povm_b")
    p.set_defaults(func=cmd_build_lhv)

    p = out(sub.add_parser("verdict", help="Separable / Entangled / Undetermined"))
    p.add_argument("state")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=32)
    p.add_argument("--tol", type=float, default=DECOMPOSITION_TOL)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_verdict)

    p = out(sub.add_parser("simulate", help="sample joint outcomes"))
    p.add_argument("source", choices=["quantum", "lhv"])
    p.add_argument("inputs", nargs="+")
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--exact", action="store_true", help="emit the exact distribution instead of samples")
    p.set_defaults(func=cmd_simulate)

    p = out(sub.add_parser("compare", help="chi-square test of outcomes vs a distribution or outcomes"))
    p.add_argument("outcomes")
    p.add_argument("expected")
    p.add_argument("--significance", type=float, default=SIGNIFICANCE)
    p.set_defaults(func=cmd_compare)

    p = out(sub.add_parser("gleason-fit", help="density operator from projector-frame responses"))
    p.add_argument("frame")
    p.add_argument("responses")
    p.set_defaults(func=cmd_gleason_fit)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "gen" and args.fixture is None and args.what in ("state", "povm", "ensemble"):
        parser.error(f"gen {args.what} needs a fixture name")
    if args.command == "gen" and args.what == "responses" and args.fixture is not None:
        args.inputs = [args.fixture, *args.inputs]
    try:
        return args.func(args)
    except InvariantError as err:
        print(f"invariant violation: {err}", file=sys.stderr)
        return EXIT_INVARIANT
    except (LhvSepError, OSError, KeyError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
