"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Sequence

from . import constants as K
from .classical import normal_error_bound, two_prop_pooled_se
from .describe import (
    Cutoffs,
    FunctionalSpec,
    _golden_max,
    functional_range,
    grade,
    normal_mean_range,
    range_1d,
)
from .errors import DataError, GTProbError, NumericalError
from .families import Dataset, FamilySpec, Kind, ParamPoint, binomial_log_ratio, check_theta, log_lr, mle, read_csv
from .kelly import Competitor, compete, kelly_payoff
from .ledger import Ledger, Table, aggregate
from .sim import SimConfig, ville_frequency

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")

    def exit(self, status=0, message=None):
        if status:
            raise UsageError(message or "")
        raise _HelpExit(message or "")


class _HelpExit(Exception):
    pass


@dataclass
class Block:
    """One rendered table: ``columns`` are (key, header, format spec)."""

    title: str
    columns: list[tuple[str, str, str]]
    rows: list[dict]
    notes: list[str] = field(default_factory=list)

    @staticmethod
    def cell(value, spec: str) -> str:
        if value is None:
            return "-"
        if isinstance(value, bool):
            return "yes" if value else "no"
        if isinstance(value, float) and spec:
            return format(value, spec)
        return str(value)

    def text(self) -> str:
        heads = [h for _, h, _ in self.columns]
        body = [[self.cell(r.get(k), spec) for k, _, spec in self.columns] for r in self.rows]
        widths = [max(len(x) for x in col) for col in zip(heads, *body)]
        lines = [self.title, "  ".join(h.ljust(w) for h, w in zip(heads, widths))]
        lines.append("  ".join("-" * w for w in widths))
        lines += ["  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in body]
        lines += [f"note: {n}" for n in self.notes]
        return "\n".join(lines)

    def records(self) -> list[dict]:
        out = [{"table": self.title, **{k: r.get(k) for k, _, _ in self.columns}} for r in self.rows]
        out += [{"table": self.title, "note": n} for n in self.notes]
        return out


@dataclass
class CommandResult:
    code: int
    stdout: str = ""
    stderr: str = ""
    records: list[dict] = field(default_factory=list)


# ---------------------------------------------------------------- parsing helpers

def _floats(text: str, what: str) -> list[float]:
    try:
        out = []
        for p in text.split(","):
            num, _, den = p.strip().partition("/")
            out.append(float(num) / float(den) if den else float(num))
        return out
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"{what}: expected comma-separated numbers, got {text!r}") from None


def _labels(args) -> tuple[str, ...] | None:
    return tuple(x.strip() for x in args.labels.split(",")) if getattr(args, "labels", None) else None


def _csv_labels(path: str, column: str) -> tuple[str, ...]:
    seen: dict[str, None] = {}
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                if row.get(column):
                    seen.setdefault(row[column].strip(), None)
    except OSError as exc:
        raise DataError(str(exc)) from None
    return tuple(seen)


def _family(args) -> FamilySpec:
    kind = Kind(args.family)
    labels = _labels(args)
    if kind in (Kind.CELLS, Kind.DISCRETE) and labels is None:
        if getattr(args, "counts", None):
            labels = tuple(p.split("=")[0].strip() for p in args.counts.split(","))
        elif getattr(args, "data", None):
            labels = _csv_labels(args.data, "label" if kind is Kind.CELLS else "y")
        else:
            raise UsageError(f"--labels is required for the {kind.value} family")
    return FamilySpec(kind, labels or ())


def _dataset(args, family: FamilySpec) -> Dataset:
    given = [x for x in ("data", "summary", "binomial", "counts") if getattr(args, x, None)]
    if len(given) != 1:
        raise UsageError("give exactly one of --data, --summary, --binomial, --counts")
    if args.data:
        return read_csv(args.data, family)
    if args.summary:
        v = _floats(args.summary, "--summary")
        if len(v) != 3 or not float(v[0]).is_integer():
            raise UsageError("--summary expects N,mean,sd")
        return Dataset.normal_summary(int(v[0]), v[1], v[2])
    if args.binomial:
        v = _floats(args.binomial, "--binomial")
        if len(v) != 2 or not all(float(x).is_integer() for x in v):
            raise UsageError("--binomial expects n,successes")
        return Dataset.binomial(int(v[0]), int(v[1]))
    counts = {}
    for part in args.counts.split(","):
        lab, _, frac = part.partition("=")
        k, _, n = frac.partition("/")
        try:
            counts[lab.strip()] = (int(k), int(n))
        except ValueError:
            raise UsageError(f"--counts expects label=k/n entries, got {part!r}") from None
    return Dataset.from_cell_counts(counts)


def _theta(family: FamilySpec, text: str) -> ParamPoint:
    return check_theta(family, _floats(text, "theta"), closed=True)


# ---------------------------------------------------------------- commands

RANGE_COLS = [("grade", "range", ""), ("C", "C", ".4g"), ("lo", "lo", ".4f"), ("hi", "hi", ".4f"),
              ("method", "method", ""), ("lo_at_boundary", "lo@edge", ""), ("hi_at_boundary", "hi@edge", "")]


def cmd_describe(args) -> list[Block]:
    family = _family(args)
    data = _dataset(args, family)
    cutoffs = Cutoffs.parse(args.cutoffs) if args.cutoffs else Cutoffs()
    best = mle(family, data)
    rows, cols, notes = [], list(RANGE_COLS), []
    for label, C in cutoffs.levels():
        if family.kind is Kind.NORMAL:
            r = normal_mean_range(data.summary or _normal_summary(family, data), C, args.mode)
        elif family.kind is Kind.BERNOULLI or (family.kind is Kind.CELLS and family.dim == 1 and not args.functional):
            r = range_1d(family, data, C)
        else:
            if not args.functional:
                raise UsageError("--functional is required for multi-parameter families")
            r = functional_range(family, data, FunctionalSpec.parse(args.functional), C)
        rows.append({"grade": label, "C": C, "lo": r.lo, "hi": r.hi, "method": r.method,
                     "lo_at_boundary": r.lo_at_boundary, "hi_at_boundary": r.hi_at_boundary,
                     "target": r.target, "estimate": r.estimate})
    if best.boundary:
        notes.append("maximizer lies on the boundary of the parameter space")
    title = f"description ranges for {rows[0]['target']} (estimate {rows[0]['estimate']:.4f})"
    if family.kind is Kind.NORMAL:
        title += f", formula mode {args.mode}"
    return [Block(title, cols, rows, notes)]


def _normal_summary(family, data):
    from .families import NormalSummary, sufficient_stats

    n, mean, var = sufficient_stats(family, data)
    return NormalSummary(n, mean, math.sqrt(var))


def cmd_compete(args) -> list[Block]:
    family = _family(args)
    data = _dataset(args, family)
    den = Competitor(family, _theta(family, args.den))
    num = Competitor(family, _theta(family, args.num), args.fraction)
    res = compete(den, num, data)
    row = {"final_capital": res.final_capital, "log_capital": res.log_capital, "overflow": res.overflow}
    cols = [("final_capital", "final capital", ".6g"), ("log_capital", "log capital", ".6f"), ("overflow", "overflow", "")]
    return [Block(f"Kelly competition: {args.num} betting against {args.den} (fraction {args.fraction:g})", cols, [row])]


REPORT_COLS = [("session", "session", ""), ("status", "status", ""), ("rounds", "rounds", ""),
               ("evidence", "evidence", ".6g"), ("running_max", "running max", ".6g"),
               ("dynamic_p", "dynamic p", ".6g")]


def _report_row(s) -> dict:
    r = s.report()
    return {"session": s.id, "status": r.status.value, "rounds": r.rounds, "evidence": r.evidence,
            "running_max": r.running_max, "dynamic_p": r.dynamic_p}


def cmd_ledger(args) -> list[Block]:
    ledger = Ledger.load(args.ledger)
    if args.action == "open":
        s = ledger.open_session(args.id)
    elif args.action == "bet":
        s = ledger[args.id]
        if args.event is not None:
            if args.happened is None:
                raise UsageError("--event needs --happened yes|no")
            s.bet_event(args.event, args.happened in ("yes", "1", "true"))
        elif args.table is not None:
            if args.forecast is None or args.outcome is None:
                raise UsageError("--table needs --forecast and --outcome")
            try:
                s.bet_payoff(json.loads(args.forecast), Table(json.loads(args.table)), args.outcome)
            except json.JSONDecodeError as exc:
                raise UsageError(f"bad JSON: {exc}") from None
        elif args.num is not None:
            if args.den is None or args.outcome is None:
                raise UsageError("--num needs --den and --outcome")
            family = _family(args)
            pay = kelly_payoff(Competitor(family, _theta(family, args.den)),
                               Competitor(family, _theta(family, args.num), args.fraction))
            outcome = float(args.outcome) if family.kind is Kind.NORMAL else args.outcome
            s.bet_payoff(None, pay, outcome)
        else:
            raise UsageError("bet needs one of --event, --table, --num")
        reloaded = Ledger.load(args.ledger)[args.id]
        if reloaded.capital_path != s.capital_path:
            raise DataError("ledger file is not replay-consistent after append")
    elif args.action == "report":
        s = ledger[args.id]
    elif args.action == "close":
        s = ledger[args.id]
        s.close()
    else:
        ids = args.ids or list(ledger.sessions)
        value = aggregate(ledger[i] for i in ids)
        cols = [("sessions", "sessions", ""), ("aggregate", "aggregate score", ".6g")]
        return [Block("aggregate of closed sessions (sum of finals / sum of initials)", cols,
                      [{"sessions": ",".join(ids), "aggregate": value}])]
    return [Block(f"ledger {args.ledger}", REPORT_COLS, [_report_row(s)])]


def cmd_ville(args) -> list[Block]:
    family = _family(args)
    cfg = SimConfig(family, _theta(family, args.truth),
                    Competitor(family, _theta(family, args.bettor), args.fraction),
                    args.horizon, args.threshold, args.paths, args.seed)
    r = ville_frequency(cfg)
    row = {"frequency": r.frequency, "standard_error": r.standard_error, "bound": 1.0 / args.threshold,
           "mean_final": r.mean_final, "sd_final": r.sd_final, "paths": r.paths}
    cols = [("frequency", "P(max >= threshold)", ".5f"), ("standard_error", "std err", ".5f"),
            ("bound", "1/threshold", ".5f"), ("mean_final", "mean final", ".5g"),
            ("sd_final", "sd final", ".5g"), ("paths", "paths", "")]
    return [Block(f"Ville check: truth {args.truth}, bettor {args.bettor}, T={args.horizon}, "
                  f"threshold {args.threshold:g}, seed {args.seed}", cols, [row])]


# ---------------------------------------------------------------- reproduce

def reproduce_binomial() -> list[Block]:
    family = FamilySpec.bernoulli()
    data = Dataset.binomial(K.BINOMIAL_TRIALS, K.BINOMIAL_SUCCESSES)
    rows = []
    for label, C in Cutoffs().levels():
        r = range_1d(family, data, C)
        plo, phi = K.BINOMIAL_PUBLISHED[label]
        rows.append({"grade": label, "C": C, "lo": r.lo, "hi": r.hi, "published_lo": plo, "published_hi": phi,
                     "within_0.015": abs(r.lo - plo) <= 0.015 and abs(r.hi - phi) <= 0.015})
    cols = [("grade", "range", ""), ("C", "C", ".4g"), ("lo", "solver lo", ".4f"), ("hi", "solver hi", ".4f"),
            ("published_lo", "published lo", ".2f"), ("published_hi", "published hi", ".2f"),
            ("within_0.015", "within 0.015", "")]
    half = log_lr(family, 0.5, data)
    note = f"theta = 0.5: L = {half.L:.4g} ({grade(half.L).value})"
    return [Block(f"constant forecasts, {K.BINOMIAL_SUCCESSES} successes in {K.BINOMIAL_TRIALS} trials",
                  cols, rows, [note])]


def reproduce_fourier_table1() -> list[Block]:
    rows = []
    for p, published in K.FOURIER_ERRORS_MONTHS.items():
        b = normal_error_bound(p, K.FOURIER_SD, K.FOURIER_N)
        lo, hi = K.FOURIER_MEAN - b.bound, K.FOURIER_MEAN + b.bound
        rows.append({"probability": f"1/{round(1 / p)}", "z": b.z, "bound_years": b.bound, "months": b.months,
                     "published_months": published, "rel_diff": abs(b.months - published) / published,
                     "level": f"{100 * (1 - p):g}%", "lo": lo, "hi": hi})
    cols = [("probability", "probability", ""), ("z", "z", ".4f"), ("bound_years", "error (years)", ".4f"),
            ("months", "error (months)", ".4f"), ("published_months", "published", ".4f"),
            ("rel_diff", "rel diff", ".2e"), ("level", "level", ""), ("lo", "lo", ".1f"), ("hi", "hi", ".1f")]
    return [Block(f"normal error bounds for a mean of {K.FOURIER_N} cases, s = {K.FOURIER_SD} years", cols, rows)]


def reproduce_fourier_table2(mode: str) -> list[Block]:
    rows = []
    summary = Dataset.normal_summary(K.FOURIER_N, K.FOURIER_MEAN, K.FOURIER_SD).summary
    for (label, C), (plo, phi) in zip(Cutoffs().levels(), K.FOURIER_RANGES_PUBLISHED.values()):
        r = normal_mean_range(summary, C, mode)
        rows.append({"C": C, "grade": label, "lo": r.lo, "hi": r.hi, "lo_1dp": round(r.lo, 1),
                     "hi_1dp": round(r.hi, 1), "published_lo": plo, "published_hi": phi})
    cols = [("C", "C", ".4g"), ("grade", "range", ""), ("lo", "lo", ".4f"), ("hi", "hi", ".4f"),
            ("lo_1dp", "lo (1 dp)", ".1f"), ("hi_1dp", "hi (1 dp)", ".1f"),
            ("published_lo", "published lo", ".1f"), ("published_hi", "published hi", ".1f")]
    notes = []
    if mode == "derived":
        notes.append("derived mode solves the profile log-ratio exactly; the published table used "
                     "(2C)^(1/N), which agrees only at C = 2")
    return [Block(f"description ranges for the mean generation length (mode {mode})", cols, rows, notes)]


def reproduce_survey() -> list[Block]:
    family = FamilySpec.cells(K.SURVEY_CELLS)
    data = Dataset.from_cell_counts(K.SURVEY_COUNTS)
    best = mle(family, data)
    mle_block = Block("best forecaster per cell", [("cell", "cell", ""), ("count", "yes/n", ""), ("theta", "theta", ".4f")],
                      [{"cell": c, "count": "%d/%d" % K.SURVEY_COUNTS[c], "theta": t} for c, t in zip(K.SURVEY_CELLS, best)])
    (k1, n1), (k2, n2) = K.SURVEY_COUNTS["bm"], K.SURVEY_COUNTS["bf"]
    se = two_prop_pooled_se(k1, n1, k2, n2)
    se_block = Block("pooled standard error, BIPOC female vs male", [("se", "se", ".4f"), ("published", "published", ".2f")],
                     [{"se": se, "published": K.SURVEY_SE_PUBLISHED}])
    h = FunctionalSpec("difference", "bf", "bm")
    rows = []
    for label, C in Cutoffs().levels():
        r = functional_range(family, data, h, C)
        rows.append({"grade": label, "C": C, "grid_lo": r.grid_lo, "grid_hi": r.grid_hi, "lo": r.lo, "hi": r.hi})
    (kf, nf), (km, nm) = K.SURVEY_COUNTS["bf"], K.SURVEY_COUNTS["bm"]

    def equal(x: float) -> float:
        return float(binomial_log_ratio(kf, nf, x)) + float(binomial_log_ratio(km, nm, x))

    x = _golden_max(equal, 1e-9, 1.0 - 1e-9)
    notes = [
        f"published description of the Good range: '{K.SURVEY_DIFF_CLAIM}'",
        f"measured Good lower endpoint {rows[0]['lo']:.4f}; forecasters equal for both groups reach "
        f"L = {math.exp(equal(x)):.3f} at {x:.4f}, so a difference of 0 is itself Good",
    ]
    cols = [("grade", "range", ""), ("C", "C", ".4g"), ("grid_lo", "grid lo", ".3f"), ("grid_hi", "grid hi", ".3f"),
            ("lo", "refined lo", ".4f"), ("hi", "refined hi", ".4f")]
    return [mle_block, se_block, Block("range of theta[bf] - theta[bm]", cols, rows, notes)]


def cmd_reproduce(args) -> list[Block]:
    if args.example == "binomial":
        return reproduce_binomial()
    if args.example == "fourier-table1":
        return reproduce_fourier_table1()
    if args.example == "fourier-table2":
        return reproduce_fourier_table2(args.mode)
    return reproduce_survey()


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--emit", choices=["text", "records"], default="text")

    data = _Parser(add_help=False)
    data.add_argument("--family", choices=[k.value for k in Kind], default="bernoulli")
    data.add_argument("--labels", help="comma-separated cell or outcome labels")
    data.add_argument("--data", help="CSV file with header 'label,y' or 'y'")
    data.add_argument("--summary", help="normal summary N,mean,sd")
    data.add_argument("--binomial", help="binomial summary n,successes")
    data.add_argument("--counts", help="cell counts label=k/n,...")

    p = _Parser(prog="gtprob", description="Testing by betting and Kelly description ranges.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("describe", parents=[common, data], help="description ranges")
    d.add_argument("--cutoffs", help="three L cutoffs, e.g. 1/2,1/5,1/15")
    d.add_argument("--mode", choices=["paper", "derived"], default="derived")
    d.add_argument("--functional", help="diff:i,j | component:i | oddsratio:i,j")
    d.set_defaults(func=cmd_describe)

    c = sub.add_parser("compete", parents=[common, data], help="Kelly competition between two forecasters")
    c.add_argument("--den", required=True, help="forecaster bet against")
    c.add_argument("--num", required=True, help="betting forecaster")
    c.add_argument("--fraction", type=float, default=1.0)
    c.set_defaults(func=cmd_compete)

    lg = sub.add_parser("ledger", help="betting-score ledger")
    lsub = lg.add_subparsers(dest="action", required=True, parser_class=_Parser)
    lfile = _Parser(add_help=False)
    lfile.add_argument("--ledger", required=True, help="ledger file (JSON lines)")
    for name in ("open", "report", "close"):
        a = lsub.add_parser(name, parents=[common, lfile])
        a.add_argument("--id", required=True)
        a.set_defaults(func=cmd_ledger)
    b = lsub.add_parser("bet", parents=[common, lfile, data])
    b.add_argument("--id", required=True)
    b.add_argument("--event", type=float, help="all-in bet on an event of this probability")
    b.add_argument("--happened", choices=["yes", "no", "1", "0", "true", "false"])
    b.add_argument("--forecast", help='JSON {"outcome": probability}')
    b.add_argument("--table", help='JSON {"outcome": payoff factor}')
    b.add_argument("--den", help="forecaster bet against (Kelly bet)")
    b.add_argument("--num", help="betting forecaster (Kelly bet)")
    b.add_argument("--fraction", type=float, default=1.0)
    b.add_argument("--outcome")
    b.set_defaults(func=cmd_ledger)
    ag = lsub.add_parser("aggregate", parents=[common, lfile])
    ag.add_argument("--id", dest="ids", action="append")
    ag.set_defaults(func=cmd_ledger)

    v = sub.add_parser("ville-sim", parents=[common], help="Monte Carlo check of Ville's inequality")
    v.add_argument("--family", choices=["bernoulli", "normal", "discrete"], default="bernoulli")
    v.add_argument("--labels")
    v.add_argument("--truth", required=True)
    v.add_argument("--bettor", required=True)
    v.add_argument("--fraction", type=float, default=1.0)
    v.add_argument("--horizon", type=int, default=200)
    v.add_argument("--threshold", type=float, default=20.0)
    v.add_argument("--paths", type=int, default=20000)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_ville)

    r = sub.add_parser("reproduce", parents=[common], help="reproduce the worked examples")
    r.add_argument("example", choices=["binomial", "fourier-table1", "fourier-table2", "survey"])
    r.add_argument("--mode", choices=["paper", "derived"], default="paper")
    r.set_defaults(func=cmd_reproduce)
    return p


def run_cli(argv: Sequence[str]) -> CommandResult:
    try:
        args = build_parser().parse_args(list(argv))
        blocks = args.func(args)
    except _HelpExit as exc:
        return CommandResult(EXIT_OK, str(exc))
    except UsageError as exc:
        return CommandResult(EXIT_USAGE, stderr=str(exc) + "\n")
    except NumericalError as exc:
        return CommandResult(EXIT_NUMERIC, stderr=f"numerical error: {exc}\n")
    except (DataError, OSError) as exc:
        return CommandResult(EXIT_DATA, stderr=f"data error: {exc}\n")
    except GTProbError as exc:
        return CommandResult(EXIT_DATA, stderr=f"error: {exc}\n")
    records = [rec for blk in blocks for rec in blk.records()]
    if args.emit == "records":
        out = "".join(json.dumps(rec, allow_nan=False) + "\n" for rec in records)
    else:
        out = "\n\n".join(blk.text() for blk in blocks) + "\n"
    return CommandResult(EXIT_OK, out, records=records)


def main(argv: Sequence[str] | None = None) -> int:
    res = run_cli(sys.argv[1:] if argv is None else argv)
    if res.stdout:
        sys.stdout.write(res.stdout)
    if res.stderr:
        sys.stderr.write(res.stderr)
    return res.code


if __name__ == "__main__":
    sys.exit(main())
