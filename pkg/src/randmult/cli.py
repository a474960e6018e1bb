"""Command line front end: ``randmult {solve,lowrank,probe,experiment}``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import fixtures
from . import multipliers as mult
from . import testbed
from .structured import CirculantMatrix


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    p.add_argument("--trials", type=int, default=None,
                   help="number of trials (default 100, 1000 with --full)")
    p.add_argument("--full", action="store_true",
                   help="paper-scale run: n = 1024 and 1000 trials unless overridden")
    p.add_argument("--format", choices=testbed.FORMATS, default="table")
    p.add_argument("--out", type=Path, default=None, help="write the report here instead of stdout")
    p.add_argument("--per-trial", action="store_true", help="include per-trial values")
    p.add_argument("--workers", type=int, default=1, help="threads for the trial loop")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="randmult",
        description="Randomized multipliers for pivot-free elimination and low-rank sketching.")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common()

    s = sub.add_parser("solve", parents=[common], help="solve A x = b with GENP after preprocessing")
    s.add_argument("--matrix", default="hard-block",
                   help=f"generator ({', '.join(testbed.MATRIX_GENERATORS)}) or a fixture path")
    s.add_argument("--n", type=int, default=None)
    s.add_argument("--pre", default=None, help="left multiplier token, e.g. 'gaussian'")
    s.add_argument("--post", default=None, help="right multiplier token, e.g. 'circulant'")
    s.add_argument("--refine", type=int, default=0, help="iterative refinement steps")
    s.add_argument("--method", choices=("genp", "gepp"), default="genp")

    lr = sub.add_parser("lowrank", parents=[common], help="randomized range finder on low-rank inputs")
    lr.add_argument("--n", type=int, default=None)
    lr.add_argument("--rank", type=int, default=8)
    lr.add_argument("--oversample", type=int, default=0)
    lr.add_argument("--power", type=int, default=0)
    lr.add_argument("--multiplier", default="gaussian")

    pr = sub.add_parser("probe", parents=[common], help="norm and condition statistics of multipliers")
    pr.add_argument("--multiplier", default="gaussian")
    pr.add_argument("--n", type=int, default=None)
    pr.add_argument("--cols", type=int, default=None)

    ex = sub.add_parser("experiment", parents=[common], help="run a named preset")
    ex.add_argument("preset", choices=sorted(testbed.PRESETS))
    ex.add_argument("--n", type=int, default=None)
    ex.add_argument("--check", action="store_true", help="exit 2 if the preset's checks fail")
    return parser


def _trials(args) -> int:
    if args.trials is not None:
        return args.trials
    return 1000 if args.full else 100


def _size(args, desk: int) -> int:
    if args.n is not None:
        return args.n
    return 1024 if args.full else desk


def _fixture_matrix(path: Path):
    obj = fixtures.load(path)
    a = obj.dense() if isinstance(obj, CirculantMatrix) else obj
    return a, lambda n, rng: a


def _solve_config(args) -> testbed.ExperimentConfig:
    if args.matrix in testbed.MATRIX_GENERATORS:
        n = _size(args, 256 if args.matrix == "dft" else 64)
        matrix_fn = None
    else:
        a, matrix_fn = _fixture_matrix(Path(args.matrix))
        n = a.shape[0]
    for token in (args.pre, args.post):
        if token is not None:
            mult.MultiplierSpec.from_token(token, n)
    trial = testbed.solve_trial(args.matrix, n, args.pre, args.post, args.refine, args.method,
                                matrix_fn)
    label = f"solve:{args.matrix}"
    return testbed.ExperimentConfig(
        label, trial, _trials(args), args.seed,
        metadata={"matrix": args.matrix, "n": n, "pre": args.pre or "none",
                  "post": args.post or "none", "refine": args.refine, "method": args.method},
        failed=testbed.residual_failed, workers=args.workers)


def _lowrank_config(args) -> testbed.ExperimentConfig:
    n = _size(args, 64)
    mult.MultiplierSpec.from_token(args.multiplier, n, args.rank + args.oversample)
    trial = testbed.lowrank_trial(n, args.rank, args.multiplier, args.oversample, args.power)
    return testbed.ExperimentConfig(
        f"lowrank:{args.multiplier}", trial, _trials(args), args.seed,
        metadata={"multiplier": args.multiplier, "n": n, "r": args.rank,
                  "p": args.oversample, "power": args.power},
        workers=args.workers)


def _probe_config(args) -> testbed.ExperimentConfig:
    n = _size(args, 64)
    mult.MultiplierSpec.from_token(args.multiplier, n, args.cols)
    return testbed.ExperimentConfig(
        f"probe:{args.multiplier}", testbed.probe_trial(args.multiplier, n, args.cols),
        _trials(args), args.seed,
        metadata={"multiplier": args.multiplier, "n": n, "cols": args.cols or n},
        workers=args.workers)


def _write(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    violations: list[str] = []
    try:
        if args.command == "experiment":
            report, violations = testbed.run_preset(
                args.preset, _trials(args), args.seed, args.full, args.n, args.workers)
        else:
            build = {"solve": _solve_config, "lowrank": _lowrank_config,
                     "probe": _probe_config}[args.command]
            report = testbed.run_experiment(build(args))
    except (ValueError, OSError) as exc:
        parser.error(str(exc))
    with np.errstate(all="ignore"):
        _write(testbed.emit_report(report, args.format, args.per_trial), args.out)
    if args.command == "experiment" and args.check and violations:
        for msg in violations:
            print(f"check failed: {msg}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
