"""Command-line experiment runner.

Every subcommand needs a seed (flag or config file) and validates all of
its inputs before any random numbers are drawn.  ``--format rows`` prints a
header line followed by comma-separated numeric rows; ``--format report``
prints a readable summary where each checked number is tagged with the
claim it tests.

Exit status: 0 success, 1 usage/config/file errors, 2 domain failures
(incomplete or non-commuting projector sets, ties, and statistical bound
violations when ``--assert`` is given).
"""

from __future__ import annotations

import argparse
import io
import math
import sys
from pathlib import Path

import numpy as np

from localborn import atomphoton, branching, cascade, fock, scattering
from localborn.errors import IncompleteSet, LocalBornError
from localborn.io import FormatError, load_fock_fixture, load_process, load_projector_set, read_json
from localborn.statistics import binomial_sigma, within_sigmas

SIGMAS = 4.0
P_THRESHOLD = 1e-3
U64_MAX = 2**64 - 1


class UsageError(Exception):
    pass


class BoundViolation(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _num(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


class Output:
    def __init__(self, fmt: str):
        self.fmt = fmt
        self.buf = io.StringIO()

    def rows(self, header, rows):
        if self.fmt != "rows":
            return
        self.buf.write(",".join(header) + "\n")
        for r in rows:
            self.buf.write(",".join(_num(v) for v in r) + "\n")

    def line(self, text=""):
        if self.fmt == "report":
            self.buf.write(text + "\n")

    def raw(self, text):
        self.buf.write(text)


def _complex_list(text: str) -> list[complex]:
    try:
        return [complex(tok.strip().replace(" ", "")) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise UsageError(f"cannot parse complex list {text!r}: {exc}") from None


def _qubit(args) -> scattering.QubitState:
    if args.qubit:
        vals = _complex_list(args.qubit)
        if len(vals) != 2:
            raise UsageError("--qubit needs exactly two amplitudes 'a,b'")
        try:
            return scattering.QubitState(*vals)
        except ValueError as exc:
            raise UsageError(f"--qubit: {exc}") from None
    if args.a2 is None:
        raise UsageError("give --a2 or --qubit")
    if not 0.0 <= args.a2 <= 1.0:
        raise UsageError(f"--a2 must lie in [0, 1], got {args.a2}")
    return scattering.QubitState.from_probability(args.a2)


def _positive(name, value):
    if value is None or value < 1:
        raise UsageError(f"--{name} must be >= 1")
    return value


# -- subcommands -------------------------------------------------------------


def cmd_scatter(args, out: Output) -> None:
    if args.table:
        proc = load_process(args.table)
    elif args.process:
        proc = scattering.builtin_process(args.process)
    else:
        raise UsageError("give a process name or --table")
    qubit = _qubit(args)
    n = _positive("trials", args.trials)

    stats = scattering.run_trials(proc, qubit, n, args.seed)
    p0, _ = scattering.born_probabilities(qubit)
    a2, b2 = abs(qubit.a) ** 2, abs(qubit.b) ** 2
    expected = {
        "uniform": (0.5, "uniform process: outcomes equally likely"),
        "maximum": (
            (1.0 if a2 > b2 else 0.0) if a2 != b2 else math.nan,
            "maximum process: deterministic projection onto larger component",
        ),
        "born": (p0, "born process: p0 = |a|^2 / (|a|^2 + |b|^2)"),
    }.get(proc.name, (math.nan, "custom process table (no analytic expectation)"))
    e0, claim = expected
    f0 = stats.frequencies[0]
    se = binomial_sigma(e0, stats.n_valid) if not math.isnan(e0) else math.nan
    ok = math.isnan(e0) or (stats.n_valid > 0 and within_sigmas(f0, e0, stats.n_valid, SIGMAS))

    out.rows(
        ["outcome", "count", "frequency", "expected", "std_error", "ci_low", "ci_high"],
        [
            [k, stats.counts[k], stats.frequencies[k], e, se, e - SIGMAS * se, e + SIGMAS * se]
            for k, e in ((0, e0), (1, 1.0 - e0))
        ]
        + [[-1, stats.ties, stats.ties / n, 0.0, 0.0, 0.0, 0.0]],
    )
    out.line(f"process            {proc.name}")
    out.line(f"qubit              a={qubit.a:.6g} b={qubit.b:.6g}")
    out.line(f"trials             {n} (ties excluded: {stats.ties})   seed {args.seed}")
    out.line(f"counts             0: {stats.counts[0]}   1: {stats.counts[1]}")
    out.line(f"freq(0)            {f0:.6f}")
    out.line(f"expected(0)        {e0:.6f}   [claim: {claim}]")
    out.line(f"{SIGMAS:g}-sigma interval   [{e0 - SIGMAS * se:.6f}, {e0 + SIGMAS * se:.6f}]")
    out.line(f"verdict            {'PASS' if ok else 'FAIL'}")
    if args.assert_ and not ok:
        raise BoundViolation(f"freq(0)={f0:.6f} outside {SIGMAS:g} sigma of {e0:.6f}")


def cmd_cascade(args, out: Output) -> None:
    if not args.projectors:
        raise UsageError("--projectors is required")
    if not args.psi:
        raise UsageError("--psi is required")
    pset = load_projector_set(args.projectors)
    psi = np.array(_complex_list(args.psi))
    if psi.size != pset.dim:
        raise UsageError(f"--psi has {psi.size} amplitudes, projector set has dim {pset.dim}")
    if np.vdot(psi, psi).real <= 0:
        raise UsageError("--psi must not vanish")
    n = _positive("runs", args.runs)
    report = cascade.validate(pset)
    if not report.complete:
        raise IncompleteSet(
            "projector set is not complete; joint eigenspace ranks "
            f"{report.eigenspace_ranks}, witness patterns "
            f"{[(sorted(i1), sorted(i2)) for i1, i2 in report.witness]}",
            report,
        )
    order = None
    if args.order:
        order = [int(x) for x in args.order.split(",")]
        if sorted(order) != list(range(len(pset))):
            raise UsageError(f"--order must be a permutation of 0..{len(pset) - 1}")

    dist = cascade.cascade_distribution(pset, psi, n, args.seed, order=order)
    ok = dist.p_value > P_THRESHOLD
    out.rows(
        ["k", "pattern", "count", "frequency", "expected"],
        [
            [k, int("".join(map(str, report.pattern(k))), 2), dist.counts[k], dist.frequencies[k], dist.expected[k]]
            for k in range(len(dist.counts))
        ],
    )
    out.line(f"projector set      dim {pset.dim}, {len(pset)} projectors, complete={report.complete}, "
             f"independent={report.independent}")
    out.line(f"stage order        {list(dist.order)}")
    out.line(f"runs               {n} (ties excluded: {dist.ties})   seed {args.seed}")
    out.line("k  pattern  frequency   expected |<k|psi>|^2/<psi|psi>")
    for k in range(len(dist.counts)):
        pat = "".join(map(str, report.pattern(k)))
        out.line(f"{k:<2} {pat:<8} {dist.frequencies[k]:.6f}    {dist.expected[k]:.6f}")
    out.line(f"chi-square         {dist.chi_square:.4f}  p={dist.p_value:.4g}   "
             "[claim: cascade yields Born rule in special basis]")
    out.line(f"verdict            {'PASS' if ok else 'FAIL'}")
    if args.assert_ and not ok:
        raise BoundViolation(f"chi-square p-value {dist.p_value:.3g} <= {P_THRESHOLD:g}")


def cmd_branches(args, out: Output) -> None:
    qubit = _qubit(args)
    events = _positive("events", args.events)
    if events > branching.MAX_EVENTS:
        raise UsageError(f"--events is capped at {branching.MAX_EVENTS}")
    runs = _positive("runs", args.runs)

    hist = branching.run_history_experiment(qubit, events, runs, args.seed, mode=args.mode)
    ok = hist.p_value > P_THRESHOLD
    if out.fmt == "json":
        out.raw(hist.to_json() + "\n")
    out.rows(
        ["record_index", "record_bits", "count", "frequency", "expected"],
        [
            [i, int("".join(map(str, r)), 2), hist.counts[i], hist.frequencies[i], hist.expected[i]]
            for i, r in enumerate(hist.records)
        ],
    )
    out.line(f"preparation        a={qubit.a:.6g} b={qubit.b:.6g}   mode {hist.mode}")
    out.line(f"events x runs      {events} x {runs} (ties: {hist.ties})   seed {args.seed}")
    out.line("record   frequency   expected")
    for i, r in enumerate(hist.records):
        out.line(f"{''.join(map(str, r)):<8} {hist.frequencies[i]:.6f}    {hist.expected[i]:.6f}")
    out.line(f"chi-square         {hist.chi_square:.4f}  p={hist.p_value:.4g}   "
             "[claim: remembered history agrees with Born rule]")
    out.line("switch rate/event  " + " ".join(f"{x:.4f}" for x in hist.switch_rate)
             + "   [claim: branch switches rewrite remembered history]")
    out.line(f"verdict            {'PASS' if ok else 'FAIL'}")
    if args.assert_ and not ok:
        raise BoundViolation(f"chi-square p-value {hist.p_value:.3g} <= {P_THRESHOLD:g}")


def cmd_atom(args, out: Output) -> None:
    if not 0.0 < args.amp < 1.0:
        raise UsageError("--amp must lie in (0, 1)")
    grid = [float(x) for x in args.grid.split(",")] if args.grid else list(atomphoton.DEFAULT_GRID)
    if any(not 0.0 <= g <= 1.0 for g in grid):
        raise UsageError("--grid values must lie in [0, 1]")
    n = _positive("trials", args.trials)
    proc = atomphoton.build_atom_photon(args.amp)

    cert = atomphoton.certify_born_equivalence(proc, grid, n, args.seed)
    out.rows(
        ["p0", "frequency", "sigma", "deviation_sigmas", "passed"],
        [[p.p0, p.frequency, p.sigma, p.deviation, int(p.passed(SIGMAS))] for p in cert.points],
    )
    out.line(f"branch amplitude   {args.amp:.6g}   trials/point {n}   seed {args.seed}")
    out.line("|a|^2    frequency   deviation/sigma")
    for p in cert.points:
        out.line(f"{p.p0:<8.4f} {p.frequency:.6f}    {p.deviation:+.2f}")
    out.line(f"verdict            {'PASS' if cert.passed else 'FAIL'}   "
             "[claim: atom-photon interaction realizes Born scattering]")
    if args.assert_ and not cert.passed:
        raise BoundViolation(f"{len(cert.failures)} grid points outside {SIGMAS:g} sigma")


def cmd_oracle(args, out: Output) -> None:
    ratios = args.ratio or [0.1, 0.5, 1.0, 2.0, 10.0]
    if any(not (math.isfinite(r) and r > 0) for r in ratios):
        raise UsageError("--ratio values must be finite and positive")
    rows = []
    for r in ratios:
        q = scattering.rayleigh_oracle(r)
        closed = r * r / (1 + r * r)
        rows.append([r, q, closed, abs(q - closed)])
    ok = all(row[3] <= 1e-7 for row in rows)
    out.rows(["ratio", "quadrature", "closed_form", "abs_diff"], rows)
    out.line("ratio |a|/|b|   quadrature          r^2/(1+r^2)         |diff|")
    for r, q, c, d in rows:
        out.line(f"{r:<15g} {q:.15f}   {c:.15f}   {d:.2e}")
    out.line(f"verdict            {'PASS' if ok else 'FAIL'}   "
             "[claim: Rayleigh integral equals Born probability]")
    if args.assert_ and not ok:
        raise BoundViolation("quadrature disagrees with closed form beyond 1e-7")


def _occ_label(occ) -> str:
    return "|" + ",".join(map(str, occ)) + ">"


def cmd_strip(args, out: Output) -> None:
    if not args.fixture:
        raise UsageError("--fixture is required")
    psi = load_fock_fixture(args.fixture)
    stripped = fock.strip(psi)
    mat = stripped.operator.entries
    nz = [(i, j) for i in range(mat.shape[0]) for j in range(mat.shape[1]) if abs(mat[i, j]) > 1e-15]
    out.rows(["row", "col", "re", "im"], [[i, j, mat[i, j].real, mat[i, j].imag] for i, j in nz])
    vac = (0,) * len(psi.space.partition.accessible)
    vac_proj = len(nz) == 1 and stripped.basis[nz[0][0]] == vac and nz[0][0] == nz[0][1]
    out.line(f"fixture            {args.fixture}")
    out.line(f"modes              {psi.space.single_particle_dim} "
             f"(accessible {list(psi.space.partition.accessible_modes)}), max_total {psi.space.max_total}")
    out.line(f"<Psi|Psi>          {psi.norm_sq:.12g}")
    out.line(f"tr(stripped)       {stripped.trace:.12g}   [claim: stripping preserves total weight]")
    out.line("nonzero entries of the stripped operator (accessible occupations):")
    for i, j in nz:
        out.line(f"  {_occ_label(stripped.basis[i])}<{','.join(map(str, stripped.basis[j]))}|  "
                 f"{mat[i, j].real:+.12g}{mat[i, j].imag:+.12g}i")
    if vac_proj:
        out.line("result             vacuum projector   [claim: inaccessible states map to the vacuum]")
    if args.normalized:
        vec = fock.strip_normalized(psi)
        out.line("dominant pure state:")
        for occ, amp in zip(stripped.basis, vec.amplitudes):
            if abs(amp) > 1e-12:
                out.line(f"  {_occ_label(occ)}  {amp.real:+.12g}{amp.imag:+.12g}i")


COMMANDS = {
    "scatter": cmd_scatter,
    "cascade": cmd_cascade,
    "branches": cmd_branches,
    "atom": cmd_atom,
    "oracle": cmd_oracle,
    "strip": cmd_strip,
}


def build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON file whose keys mirror the long flags")
    common.add_argument("--seed", type=int, help="unsigned 64-bit seed (required)")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--format", choices=("rows", "report", "json"), default="report")
    common.add_argument("--assert", dest="assert_", action="store_true",
                        help="exit 2 when a statistical bound is violated")

    parser = _Parser(prog="localborn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("scatter", parents=[common], help="single-qubit scattering statistics")
    p.add_argument("process", nargs="?", choices=[k.value for k in scattering.ProcessKind])
    p.add_argument("--table", help="process-table JSON file instead of a builtin")
    p.add_argument("--a2", type=float, help="|a|^2 of a real qubit")
    p.add_argument("--qubit", help="complex amplitudes 'a,b'")
    p.add_argument("--trials", type=int, default=100_000)

    p = sub.add_parser("cascade", parents=[common], help="projector-cascade measurement statistics")
    p.add_argument("--projectors", help="projector-set JSON file")
    p.add_argument("--psi", help="complex amplitudes, comma separated")
    p.add_argument("--runs", type=int, default=100_000)
    p.add_argument("--order", help="stage order as a permutation, e.g. '1,0'")

    p = sub.add_parser("branches", parents=[common], help="remembered-history statistics")
    p.add_argument("--a2", type=float)
    p.add_argument("--qubit")
    p.add_argument("--events", type=int, default=3)
    p.add_argument("--runs", type=int, default=10_000)
    p.add_argument("--mode", choices=branching.MODES, default="fresh")

    p = sub.add_parser("atom", parents=[common], help="atom-photon Born certification")
    p.add_argument("--amp", type=float, default=1 / math.sqrt(2))
    p.add_argument("--grid", help="comma-separated |a|^2 values")
    p.add_argument("--trials", type=int, default=100_000)

    p = sub.add_parser("oracle", parents=[common], help="Rayleigh quadrature vs closed form")
    p.add_argument("--ratio", type=float, action="append")

    p = sub.add_parser("strip", parents=[common], help="strip a Fock-state fixture")
    p.add_argument("--fixture")
    p.add_argument("--normalized", action="store_true")
    return parser


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        cfg = read_json(args.config)
        if not isinstance(cfg, dict):
            raise FormatError(f"{args.config}: top level must be an object")
        kind = cfg.pop("experiment", args.command)
        if kind != args.command:
            raise UsageError(f"{args.config}: experiment {kind!r} does not match subcommand {args.command!r}")
        known = set(vars(args)) - {"command", "config"}
        unknown = set(cfg) - known
        if unknown:
            raise FormatError(f"{args.config}: unknown field(s) {sorted(unknown)}")
        # explicit flags win over the config file
        sub = parser._subparsers._group_actions[0].choices[args.command]
        sub.set_defaults(**cfg)
        args = parser.parse_args(argv)
    if args.format == "json" and args.command != "branches":
        raise UsageError("--format json is only available for 'branches'")
    if args.seed is None:
        raise UsageError("a seed is required (--seed or 'seed' in --config)")
    if not 0 <= args.seed <= U64_MAX:
        raise UsageError("--seed must be an unsigned 64-bit integer")
    return args


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = parse_args(argv)
        out = Output(args.format)
        status = 0
        try:
            COMMANDS[args.command](args, out)
        except BoundViolation as exc:
            print(f"bound violation: {exc}", file=sys.stderr)
            status = 2
        text = out.buf.getvalue()
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
        return status
    except (UsageError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except IncompleteSet as exc:
        print(f"IncompleteSet: {exc}", file=sys.stderr)
        return 2
    except LocalBornError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
