"""Experiment inputs, the seeded trial loop, report emission and named presets.

Trial ``t`` of an experiment labelled ``L`` draws everything (input matrix,
right-hand side, multipliers) from ``stream(seed, label_key(L), t)``, so a
report depends only on its configuration, not on worker count or order.
"""
from __future__ import annotations

import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, NamedTuple

import numpy as np
import scipy.linalg

from . import elimination as elim
from . import lowrank
from . import multipliers as mult
from .errors import NumericalFailure
from .linalg import SvdResult, TruncatedSVD, ctranspose, orth, singular_values, spectral_norm
from .rng import as_generator, label_key, stream
from .stats import StatRecord
from .structured import dft_dense

REPORT_SCHEMA = "randmult.report/1"
FORMATS = ("table", "csv", "json")
NULLITY = 4


# --------------------------------------------------------------------------
# inputs


def _unit_toeplitz(rng, rows, cols):
    col = rng.standard_normal(rows)
    row = rng.standard_normal(cols)
    row[0] = col[0]
    t = scipy.linalg.toeplitz(col, row)
    return t / spectral_norm(t)


def gen_hard_block(n: int, seed) -> np.ndarray:
    """``[[A_k, B], [C, D]]`` with ``k = n/2`` and a leading block of nullity 4.

    ``A_k = U diag(1, ..., 1, 0, 0, 0, 0) V^T`` with ``U, V`` orthogonal
    factors of Gaussian matrices; ``B, C, D`` are Gaussian Toeplitz matrices
    scaled to unit spectral norm.
    """
    if n < 8 or n % 2:
        raise ValueError(f"hard-block inputs need an even n >= 8, got {n}")
    rng = as_generator(seed)
    k = n // 2
    u = orth(rng.standard_normal((k, k)))
    v = orth(rng.standard_normal((k, k)))
    sigma = np.ones(k)
    sigma[k - NULLITY:] = 0.0
    a_k = (u * sigma) @ v.T
    b = _unit_toeplitz(rng, k, k)
    c = _unit_toeplitz(rng, k, k)
    d = _unit_toeplitz(rng, k, k)
    return np.block([[a_k, b], [c, d]])


def gen_dft_input(n: int) -> np.ndarray:
    return dft_dense(n)


class LowNumRankInput(NamedTuple):
    a: np.ndarray
    truth: TruncatedSVD
    svd: SvdResult


def gen_lownumrank(n: int, r: int, seed, floor: float = 1e-10) -> LowNumRankInput:
    """``A = S diag(sigma) T^T`` with ``sigma_j = 1/j`` for ``j <= r`` and ``floor`` beyond."""
    if not 1 <= r < n:
        raise ValueError(f"need 1 <= r < n, got r={r}, n={n}")
    rng = as_generator(seed)
    s = orth(rng.standard_normal((n, n)))
    t = orth(rng.standard_normal((n, n)))
    sigma = np.full(n, floor)
    sigma[:r] = 1.0 / np.arange(1, r + 1)
    a = (s * sigma) @ t.T
    truth = TruncatedSVD(s[:, :r], sigma[:r], t[:, :r], sigma[r:])
    return LowNumRankInput(a, truth, SvdResult(s, sigma, t))


def gen_gaussian_input(n: int, seed) -> np.ndarray:
    return as_generator(seed).standard_normal((n, n))


MATRIX_GENERATORS: dict[str, Callable] = {
    "hard-block": gen_hard_block,
    "dft": lambda n, seed: gen_dft_input(n),
    "gaussian": gen_gaussian_input,
}


# --------------------------------------------------------------------------
# experiment engine


@dataclass(frozen=True)
class ExperimentConfig:
    """``trial(rng)`` returns a mapping of metric name to value for one trial.

    A trial that raises :class:`NumericalFailure` (or numpy's ``LinAlgError``)
    counts as a failure with no values; ``failed(metrics)`` may additionally
    flag completed trials as failures while keeping their values.
    """

    label: str
    trial: Callable[[np.random.Generator], Mapping[str, float]]
    trials: int = 100
    seed: int = 0
    columns: tuple[str, ...] = ()
    metadata: Mapping = field(default_factory=dict)
    failed: Callable[[Mapping[str, float]], bool] | None = None
    workers: int = 1


@dataclass(frozen=True)
class ExperimentReport:
    label: str
    trials: int
    failures: int
    columns: dict[str, StatRecord]
    values: dict[str, list]
    metadata: dict = field(default_factory=dict)

    @property
    def successes(self) -> int:
        return self.trials - self.failures

    def failure_rate(self) -> float:
        return self.failures / self.trials


def _run_one(config: ExperimentConfig, t: int):
    rng = stream(config.seed, label_key(config.label), t)
    try:
        metrics = dict(config.trial(rng))
    except (NumericalFailure, np.linalg.LinAlgError):
        return None, True
    bad = bool(config.failed(metrics)) if config.failed is not None else False
    return metrics, bad


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    if config.trials < 1:
        raise ValueError("trials must be positive")
    indices = range(config.trials)
    if config.workers > 1:
        with ThreadPoolExecutor(config.workers) as pool:
            outcomes = list(pool.map(lambda t: _run_one(config, t), indices))
    else:
        outcomes = [_run_one(config, t) for t in indices]
    names = list(config.columns)
    for metrics, _ in outcomes:
        for key in metrics or ():
            if key not in names:
                names.append(key)
    values = {name: [None if m is None else m.get(name) for m, _ in outcomes] for name in names}
    values = {k: [None if v is None else float(v) for v in vs] for k, vs in values.items()}
    columns = {name: StatRecord.from_values(vs) for name, vs in values.items()}
    failures = sum(bad for _, bad in outcomes)
    meta = {"seed": config.seed, **dict(config.metadata)}
    return ExperimentReport(config.label, config.trials, failures, columns, values, meta)


# --------------------------------------------------------------------------
# emission

CSV_HEADER = ("label", "trials", "stat", "mean", "max", "min", "std")


def _num(x) -> str:
    return repr(float(x))


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return x


def _from_json_number(x):
    if x is None:
        return math.nan
    if x == "inf":
        return math.inf
    if x == "-inf":
        return -math.inf
    return float(x)


def emit_report(report: ExperimentReport, fmt: str = "table", per_trial: bool = False) -> str:
    """Render a report as ``table``, ``csv`` or versioned ``json``.

    The csv body has the fixed columns ``label,trials,stat,mean,max,min,std``
    plus a ``failures`` row; ``per_trial`` appends a ``trial,<stats...>``
    block after a blank line.  json always carries the per-trial values.
    """
    if fmt == "json":
        doc = {
            "schema": REPORT_SCHEMA,
            "label": report.label,
            "trials": report.trials,
            "failures": report.failures,
            "metadata": report.metadata,
            "columns": {k: {f: _jsonable(v) for f, v in rec.as_dict().items()}
                        for k, rec in report.columns.items()},
            "values": {k: [_jsonable(v) for v in vs] for k, vs in report.values.items()},
        }
        return json.dumps(doc, indent=2) + "\n"
    if fmt == "csv":
        out = io.StringIO()
        out.write(",".join(CSV_HEADER) + "\n")
        for name, rec in report.columns.items():
            row = (report.label, str(report.trials), name,
                   _num(rec.mean), _num(rec.max), _num(rec.min), _num(rec.std))
            out.write(",".join(row) + "\n")
        f = _num(report.failures)
        out.write(",".join((report.label, str(report.trials), "failures", f, f, f, "0.0")) + "\n")
        if per_trial:
            out.write("\n" + ",".join(["trial", *report.values]) + "\n")
            for t in range(report.trials):
                cells = ["" if vs[t] is None else _num(vs[t]) for vs in report.values.values()]
                out.write(",".join([str(t), *cells]) + "\n")
        return out.getvalue()
    if fmt == "table":
        return _emit_table(report, per_trial)
    raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")


def _sci(x) -> str:
    return f"{x:.2e}" if math.isfinite(x) else str(x)


def _emit_table(report, per_trial):
    meta = ", ".join(f"{k}={v}" for k, v in report.metadata.items())
    lines = [f"{report.label}  ({meta})",
             f"trials {report.trials}, failures {report.failures}"]
    width = max([len("stat"), *(len(k) for k in report.columns)])
    head = f"| {'stat':<{width}} | {'mean':>9} | {'max':>9} | {'min':>9} | {'std':>9} |"
    rule = "+" + "-" * (len(head) - 2) + "+"
    lines += [rule, head, rule]
    for name, rec in report.columns.items():
        lines.append(f"| {name:<{width}} | {_sci(rec.mean):>9} | {_sci(rec.max):>9} | "
                     f"{_sci(rec.min):>9} | {_sci(rec.std):>9} |")
    lines.append(rule)
    if per_trial:
        names = list(report.values)
        lines.append("trial  " + "  ".join(f"{n:>12}" for n in names))
        for t in range(report.trials):
            cells = ["failed" if report.values[n][t] is None else _sci(report.values[n][t])
                     for n in names]
            lines.append(f"{t:>5}  " + "  ".join(f"{c:>12}" for c in cells))
    return "\n".join(lines) + "\n"


def report_from_json(text: str) -> ExperimentReport:
    doc = json.loads(text)
    if doc.get("schema") != REPORT_SCHEMA:
        raise ValueError(f"unsupported report schema {doc.get('schema')!r}")
    columns = {}
    for name, rec in doc["columns"].items():
        columns[name] = StatRecord(*(_from_json_number(rec[f]) for f in ("mean", "max", "min", "std")),
                                   int(rec["count"]))
    values = {k: [None if v is None else _from_json_number(v) for v in vs]
              for k, vs in doc["values"].items()}
    return ExperimentReport(doc["label"], int(doc["trials"]), int(doc["failures"]),
                            columns, values, dict(doc["metadata"]))


# --------------------------------------------------------------------------
# trial builders


def solve_trial(matrix: str, n: int, pre: str | None = None, post: str | None = None,
                refine: int = 0, method: str = "genp", matrix_fn=None):
    """Trial closure: draw ``A`` (or use ``matrix_fn``), a Gaussian ``b`` and the
    multipliers, then report the relative residual after each refinement step."""
    make = matrix_fn or MATRIX_GENERATORS[matrix]

    def trial(rng):
        a = make(n, rng)
        b = rng.standard_normal(n)
        f = None if pre is None else mult.generate(mult.MultiplierSpec.from_token(pre, n), rng)
        h = None if post is None else mult.generate(mult.MultiplierSpec.from_token(post, n), rng)
        res = elim.preprocess_solve(a, b, f, h, refine_steps=refine, method=method)
        hist = res.residual_history
        return {f"residual_{i}": hist[min(i, len(hist) - 1)] for i in range(refine + 1)}

    return trial


def residual_failed(metrics) -> bool:
    last = list(metrics.values())[-1]
    return not last <= elim.FAILURE_RESIDUAL


def lowrank_trial(n: int, r: int, multiplier: str = "gaussian", p: int = 0, power: int = 0):
    def trial(rng):
        inp = gen_lownumrank(n, r, rng)
        spec = mult.MultiplierSpec.from_token(multiplier, n, r + p)
        res = lowrank.range_find(inp.a, r, p, spec, power_steps=power, rng=rng)
        rn1, rn2 = lowrank.subspace_residual(inp.a, res, inp.truth)
        out = {"rn1": rn1, "rn2": rn2}
        if power == 0:
            bounds = lowrank.error_bounds(inp.svd, res.h, r)
            out.update(delta_plus=bounds.delta_plus, delta_plus_prime=bounds.delta_plus_prime,
                       ratio1=rn1 / bounds.delta_plus, ratio2=rn2 / bounds.delta_plus_prime)
        return out

    return trial


def inverse_ratio_trial(n: int, r: int, multiplier: str = "gaussian"):
    """``||(T_r^T H)^{-1}|| / ||(H_{r,r})^{-1}||`` for an ``n x r`` multiplier."""

    def trial(rng):
        inp = gen_lownumrank(n, r, rng)
        h = mult.as_dense(lowrank.sketch_multiplier(
            mult.MultiplierSpec.from_token(multiplier, n, r), n, r, rng))
        th = ctranspose(inp.svd.right[:, :r]) @ h
        return {"ratio": singular_values(h[:r, :r])[-1] / singular_values(th)[-1]}

    return trial


def srft_trial(n: int, r: int, variant: str = "srft"):
    def trial(rng):
        inp = gen_lownumrank(n, r, rng)
        chk = lowrank.srft_sketch_check(inp.a, r, rng, variant)
        return {"residual": chk.residual, "bound": chk.bound, "ratio": chk.residual / chk.bound}

    return trial


def posterior_trial(n: int, r: int, probes: int = 5):
    def trial(rng):
        inp = gen_lownumrank(n, r, rng)
        res = lowrank.range_find(inp.a, r, 0, mult.MultiplierSpec(mult.Kind.GAUSSIAN, n, r), rng=rng)
        truth = spectral_norm(inp.a - res.approx(inp.a))
        est = lowrank.posterior_estimate(inp.a, res, probes, rng)
        return {"estimate": est, "true": truth, "ratio": est / truth}

    return trial


def probe_trial(token: str, n: int, cols: int | None = None):
    spec = mult.MultiplierSpec.from_token(token, n, cols)

    def trial(rng):
        s = singular_values(mult.as_dense(mult.generate(spec, rng)))
        pinv = 1.0 / s[-1] if s[-1] > 0 else math.inf
        return {"norm": s[0], "pinv_norm": pinv, "cond": s[0] * pinv}

    return trial


def inverse_norm_trial(n: int):
    def trial(rng):
        return {"inverse_norm": 1.0 / singular_values(gen_hard_block(n, rng))[-1]}

    return trial


# --------------------------------------------------------------------------
# presets


@dataclass(frozen=True)
class Preset:
    description: str
    build: Callable[..., ExperimentConfig]
    check: Callable[[ExperimentReport], list[str]] = lambda report: []
    desk_n: int = 64
    full_n: int = 1024


def _cfg(label, trial, trials, seed, failed=None, **meta):
    return ExperimentConfig(label, trial, trials, seed, metadata=meta, failed=failed)


def _solve_preset(label, description, matrix, post, checks, desk_n=64):
    def build(n, trials, seed):
        return _cfg(label, solve_trial(matrix, n, post=post, refine=1), trials, seed,
                    residual_failed, matrix=matrix, n=n, post=post or "none", refine=1)

    def check(report):
        return [msg for ok, msg in (c(report) for c in checks) if not ok]

    return Preset(description, build, check, desk_n)


def _mean_at_most(col, limit):
    return lambda rep: (rep.columns[col].mean <= limit,
                        f"mean {col} {rep.columns[col].mean:.3e} > {limit:.1e}")


def _max_at_most(col, limit):
    return lambda rep: (rep.columns[col].max <= limit,
                        f"max {col} {rep.columns[col].max:.3e} > {limit:.1e}")


def _fraction_at_most(col, limit, frac):
    def chk(rep):
        vals = rep.values[col]
        ok = sum(v is not None and v <= limit for v in vals) / len(vals)
        return ok >= frac, f"only {ok:.1%} of {col} <= {limit:.1e} (need {frac:.0%})"
    return chk


def _no_failures(rep):
    return rep.failures == 0, f"{rep.failures} failed trials"


def _build_gepp(n, trials, seed):
    return _cfg("table2", solve_trial("hard-block", n, method="gepp"), trials, seed,
                residual_failed, matrix="hard-block", n=n, method="gepp")


def _lowrank_preset(label, description, multiplier, r=8):
    def build(n, trials, seed):
        return _cfg(label, lowrank_trial(n, r, multiplier), trials, seed,
                    multiplier=multiplier, n=n, r=r, p=0)

    def check(rep):
        out = []
        if not rep.columns["rn2"].mean <= 1e-6:
            out.append(f"mean rn2 {rep.columns['rn2'].mean:.3e} > 1e-6")
        for col in ("ratio1", "ratio2"):
            vals = [v for v in rep.values[col] if v is not None]
            frac = sum(v <= 1 for v in vals) / rep.trials
            if frac < 0.99:
                out.append(f"{col} <= 1 in only {frac:.1%} of trials")
        return out

    return Preset(description, build, check)


def _probe_preset(label, description, token):
    def build(n, trials, seed):
        return _cfg(label, probe_trial(token, n), trials, seed, multiplier=token, n=n)

    return Preset(description, build)


PRESETS: dict[str, Preset] = {
    "table1": Preset(
        "norm of the inverse of hard-block inputs",
        lambda n, trials, seed: _cfg("table1", inverse_norm_trial(n), trials, seed,
                                     matrix="hard-block", n=n),
        lambda rep: [] if 1e1 <= rep.columns["inverse_norm"].min
        and rep.columns["inverse_norm"].max <= 1e7 else ["inverse norms outside [1e1, 1e7]"]),
    "table2": Preset("GEPP on hard-block inputs", _build_gepp,
                     lambda rep: [m for ok, m in [_mean_at_most("residual_0", 1e-11)(rep)] if not ok]),
    "table3": _solve_preset("table3", "GENP with Gaussian multipliers", "hard-block", "gaussian",
                            [_max_at_most("residual_0", 1e-4), _mean_at_most("residual_0", 1e-6),
                             _mean_at_most("residual_1", 1e-11)]),
    "table4": _solve_preset("table4", "GENP with real circulant multipliers", "hard-block",
                            "circulant", [_mean_at_most("residual_0", 1e-8)]),
    "table5": _solve_preset("table5", "GENP with unitary circulant multipliers", "hard-block",
                            "unitary-circulant", [_mean_at_most("residual_0", 1e-8)]),
    "table5a": _solve_preset("table5a", "GENP on the DFT matrix with Gaussian multipliers", "dft",
                             "gaussian", [_fraction_at_most("residual_0", 1e-4, 0.95)], desk_n=256),
    "table6": _lowrank_preset("table6", "rn1 and rn2 with Gaussian multipliers", "gaussian"),
    "table7": _lowrank_preset("table7", "rn1 and rn2 with Gaussian multipliers", "gaussian"),
    "table8": _lowrank_preset("table8", "rn1 and rn2 with real Toeplitz multipliers",
                              "toeplitz:variant=real"),
    "table9": _lowrank_preset("table9", "rn1 and rn2 with unitary Toeplitz multipliers",
                              "toeplitz:variant=unitary"),
    "table10": Preset(
        "ratio of ||(T_r^T H)^-1|| to ||(H_rr)^-1|| for Gaussian H",
        lambda n, trials, seed: _cfg("table10", inverse_ratio_trial(n, 8), trials, seed,
                                     multiplier="gaussian", n=n, r=8)),
    "table11": Preset(
        "SRFT sketch residual against its bound",
        lambda n, trials, seed: _cfg("table11", srft_trial(n, 8), trials, seed,
                                     lambda m: m["residual"] > m["bound"], multiplier="srft",
                                     n=n, r=8),
        lambda rep: [] if rep.failure_rate() <= 0.01 else
        [f"residual above bound in {rep.failure_rate():.1%} of trials"]),
    "table12": Preset(
        "posterior error estimate with 5 probes",
        lambda n, trials, seed: _cfg("table12", posterior_trial(n, 8), trials, seed,
                                     lambda m: m["estimate"] < m["true"], n=n, r=8, probes=5),
        lambda rep: [] if rep.failure_rate() <= 0.01 else
        [f"estimate below the true error in {rep.failure_rate():.1%} of trials"]),
    "table13": _probe_preset("table13", "condition numbers of Gaussian matrices", "gaussian"),
    "table14": _probe_preset("table14", "condition numbers of real circulant matrices", "circulant"),
}


def run_preset(name: str, trials: int = 100, seed: int = 0, full: bool = False,
               n: int | None = None, workers: int = 1) -> tuple[ExperimentReport, list[str]]:
    """Run a named preset and return its report and the list of check violations."""
    try:
        preset = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; expected one of {', '.join(PRESETS)}") from None
    size = n if n is not None else (preset.full_n if full else preset.desk_n)
    config = preset.build(size, trials, seed)
    config = ExperimentConfig(config.label, config.trial, config.trials, config.seed,
                              config.columns, config.metadata, config.failed, workers)
    report = run_experiment(config)
    return report, preset.check(report)
