"""Command-line front end.

Subcommands::

    multibell analyze --state w:n=3 --criteria standard,cN
    multibell sweep --sweep "ghz:n=3,alpha={}" --from 0 --to 0.7853981634 --points 64 --criteria c442
    multibell bound --family fN --n 4

State specifications follow the grammar documented in :mod:`multibell.qstate`.
In a sweep template, ``{}`` is replaced by each grid value printed with 12
significant digits (so integral values such as 3.0 become ``3``).

Exit codes: 0 success, 2 unparseable input, 3 party-count mismatch,
4 enumeration too large.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass
from importlib import resources

import numpy as np

from . import __version__
from .bellineq import InequalitySpec
from .corrtensor import compute_tensor
from .criteria import CRITERION_IDS, OptimizerConfig, evaluate
from .errors import ArityError, EnumerationSizeError, MultibellError, ValidationError
from .lhv_oracle import classical_bound
from .qstate import parse_state_spec

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_ARITY = 3
EXIT_SIZE = 4

SIG_DIGITS = 12


def _num(x: float) -> float:
    """Round to the printed precision so JSON and CSV agree byte for byte."""
    return float(f"{x:.{SIG_DIGITS}g}")


def _fmt(x: float) -> str:
    return f"{x:.{SIG_DIGITS}g}"


@dataclass(frozen=True)
class ReportRow:
    state_spec: str
    criterion_id: str
    max_value: float
    violation_factor: float
    threshold: float
    method: str
    restarts_used: int
    spread: float

    def as_json(self) -> dict:
        out = asdict(self)
        for key in ("max_value", "violation_factor", "threshold", "spread"):
            out[key] = _num(out[key])
        return out


def load_schema() -> dict:
    return json.loads(resources.files("multibell").joinpath("report.schema.json").read_text())


def _parse_criteria(text: str) -> list[str]:
    ids = [c.strip() for c in text.split(",") if c.strip()]
    if not ids:
        raise ValidationError("no criteria given")
    unknown = [c for c in ids if c not in CRITERION_IDS]
    if unknown:
        raise ValidationError(f"unknown criteria {unknown}; choose from {', '.join(CRITERION_IDS)}")
    return ids


def analyze_rows(state_spec: str, criteria: list[str], config: OptimizerConfig) -> list[ReportRow]:
    t = compute_tensor(parse_state_spec(state_spec))
    rows = []
    for cid in criteria:
        res = evaluate(t, cid, config)
        rows.append(ReportRow(state_spec, cid, res.max_value, res.violation_factor, res.threshold,
                              res.method, res.restarts_used, res.spread))
    return rows


def sweep_grid(start: float, stop: float, points: int) -> np.ndarray:
    if points < 0:
        raise ValidationError("--points must be non-negative")
    return np.linspace(start, stop, points)


def cmd_analyze(args) -> str:
    config = OptimizerConfig(restarts=args.restarts, seed=args.seed)
    rows = analyze_rows(args.state, _parse_criteria(args.criteria), config)
    if args.format == "csv":
        fields = ["state_spec", "criterion_id", "max_value", "violation_factor", "threshold", "method"]
        return _csv(fields, [[r.state_spec, r.criterion_id, _fmt(r.max_value), _fmt(r.violation_factor),
                              _fmt(r.threshold), r.method] for r in rows])
    return _json({"command": "analyze", "version": __version__, "seed": args.seed,
                  "restarts": args.restarts, "state_spec": args.state,
                  "rows": [r.as_json() for r in rows]})


def cmd_sweep(args) -> str:
    if "{}" not in args.sweep:
        raise ValidationError("--sweep template must contain '{}' where the parameter goes")
    criteria = _parse_criteria(args.criteria)
    config = OptimizerConfig(restarts=args.restarts, seed=args.seed)
    csv_rows, json_rows = [], []
    for p in sweep_grid(args.start, args.stop, args.points):
        spec = args.sweep.replace("{}", _fmt(p))
        for row in analyze_rows(spec, criteria, config):
            many = len(criteria) > 1
            csv_rows.append([_fmt(p)] + ([row.criterion_id] if many else [])
                            + [_fmt(row.max_value), _fmt(row.violation_factor), _fmt(row.threshold)])
            json_rows.append({"param": _num(p), **row.as_json()})
    if args.format == "json":
        return _json({"command": "sweep", "version": __version__, "seed": args.seed,
                      "restarts": args.restarts, "template": args.sweep, "rows": json_rows})
    header = ["param"] + (["criterion_id"] if len(criteria) > 1 else []) + ["max_value", "factor", "threshold"]
    return _csv(header, csv_rows)


def cmd_bound(args) -> str:
    spec = InequalitySpec.of(args.family, args.n)
    value = classical_bound(spec)
    if args.format == "csv":
        return _csv(["family", "n_parties", "classical_bound"], [[spec.family, spec.n_parties, _fmt(value)]])
    return _json({"command": "bound", "version": __version__, "family": spec.family,
                  "n_parties": spec.n_parties, "settings_per_party": list(spec.settings_per_party),
                  "classical_bound": value})


def _json(obj: dict) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="multibell", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, default_format="json"):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--restarts", type=int, default=32)
        p.add_argument("--format", choices=("json", "csv"), default=default_format)
        p.add_argument("--out", help="write the report here instead of stdout")

    p = sub.add_parser("analyze", help="evaluate criteria for one state")
    p.add_argument("--state", required=True)
    p.add_argument("--criteria", default="c442",
                   help=f"comma-separated subset of {', '.join(CRITERION_IDS)}")
    common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep", help="evaluate criteria along a one-parameter family")
    p.add_argument("--sweep", required=True, help="state template with '{}' for the parameter")
    p.add_argument("--from", dest="start", type=float, required=True)
    p.add_argument("--to", dest="stop", type=float, required=True)
    p.add_argument("--points", type=int, default=64)
    p.add_argument("--criteria", default="c442")
    common(p, default_format="csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bound", help="exact classical bound by exhaustive enumeration")
    p.add_argument("--family", required=True, choices=("f442", "f332", "fN", "standard"))
    p.add_argument("--n", type=int, default=None, help="number of parties (default 3)")
    common(p)
    p.set_defaults(func=cmd_bound)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = args.func(args)
    except ArityError as exc:
        print(f"multibell: {exc}", file=sys.stderr)
        return EXIT_ARITY
    except EnumerationSizeError as exc:
        print(f"multibell: {exc}", file=sys.stderr)
        return EXIT_SIZE
    except (ValidationError, MultibellError) as exc:
        print(f"multibell: {exc}", file=sys.stderr)
        return EXIT_PARSE
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
