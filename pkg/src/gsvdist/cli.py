"""Command-line front end.

Subcommands: ``dims`` (structural parameters), ``pdf`` / ``cdf`` (marginal
law tables), ``sample`` (raw sampler dumps), and ``verify`` (named
statistical experiments).  Output is CSV (single header row) or JSON (a
``meta`` object plus a ``data`` object; the timestamp and elapsed time in
``meta`` are the only nondeterministic fields).

Exit codes: 0 success / statistical pass, 1 statistical fail, 2 usage or
regime error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .engine import (
    ProblemDims,
    ReducedDims,
    Regime,
    compute_structure,
    expected_q_power,
    reduced_dims,
)
from .ensembles import RngStream
from .errors import GsvdistError
from .laws import law_params, marginal_cdf, marginal_pdf
from .montecarlo import (
    Experiment,
    SamplerId,
    run_experiment,
    sample_alpha_haar,
    sample_q_power,
    sample_w_fmatrix,
    sample_w_gsvd,
)

OUT_DIR_ENV = "GSVDIST_OUT_DIR"
DEFAULT_GRID = (1e-3, 1e3, 200)


def _fmt(x) -> str:
    """Round-trippable text for numbers; plain str otherwise."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _resolve_out(path: str | None):
    if path is None:
        return None
    base = os.environ.get(OUT_DIR_ENV)
    if base and not os.path.isabs(path):
        return os.path.join(base, path)
    return path


def _emit(text: str, out_path: str | None) -> None:
    target = _resolve_out(out_path)
    if target is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(target, "w", encoding="utf-8") as fh:
            fh.write(text)


def _json_payload(command: str, meta_extra: dict, data) -> str:
    meta = {
        "command": command,
        "version": __version__,
        "generated_at": datetime.now(timezone.utc).isoformat(),
    }
    meta.update(meta_extra)
    return json.dumps({"meta": meta, "data": data}, sort_keys=True, indent=2)


def _csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def _pair_dims(args) -> ProblemDims:
    return ProblemDims(m=args.m, q=args.q, n=args.n)


def _reduced(args) -> ReducedDims:
    return ReducedDims(m_prime=args.mp, p=args.p, n_prime=args.np)


def _grid(args) -> np.ndarray:
    lo, hi, points = args.grid if args.grid else DEFAULT_GRID
    points = int(points)
    if lo <= 0 or hi <= 0:
        raise GsvdistError("grid bounds must be positive")
    if points == 1:
        if lo != hi:
            raise GsvdistError("a single-point grid needs min == max")
        return np.array([lo])
    if points < 2 or lo >= hi:
        raise GsvdistError("grid needs min < max and at least 2 points")
    return np.geomspace(lo, hi, points)


def cmd_dims(args) -> int:
    dims = _pair_dims(args)
    st = compute_structure(dims)
    rd = reduced_dims(dims)
    try:
        power = expected_q_power(dims)
    except GsvdistError:
        power = None
    record = {
        "m": dims.m,
        "q": dims.q,
        "n": dims.n,
        "k": st.k,
        "r": st.r,
        "s": st.s,
        "regime": st.regime.value,
        "m_prime": rd.m_prime if rd else None,
        "p": rd.p if rd else None,
        "n_prime": rd.n_prime if rd else None,
        "expected_q_power": power,
    }
    if args.format == "json":
        _emit(_json_payload("dims", {}, record), args.out)
    else:
        header = list(record)
        row = [record[h] if record[h] is not None else "" for h in header]
        row[-1] = _fmt(power) if power is not None else "undefined (m+q = n)"
        _emit(_csv_text(header, [row]), args.out)
    return 0


def _law_table(args, func, column: str) -> int:
    params = law_params(args.mp, args.p, args.np)
    grid = _grid(args)
    values = func(params, grid)
    if args.format == "json":
        data = {
            "params": {
                "m_prime": params.m_prime,
                "p": params.p,
                "n_prime": params.n_prime,
                "l": params.l,
                "t1": params.t1,
                "t2": params.t2,
                "t1_reciprocal": params.t1_reciprocal,
                "log_m": params.log_m,
            },
            "w": [float(x) for x in grid],
            column: [float(x) for x in values],
        }
        _emit(_json_payload(column, {}, data), args.out)
    else:
        _emit(_csv_text(["w", column], zip(grid, values)), args.out)
    return 0


def cmd_pdf(args) -> int:
    return _law_table(args, marginal_pdf, "pdf")


def cmd_cdf(args) -> int:
    return _law_table(args, marginal_cdf, "cdf")


def cmd_sample(args) -> int:
    rng = RngStream(args.seed)
    sampler = SamplerId(args.sampler)
    if sampler is SamplerId.F_MATRIX:
        if args.mp is None or args.p is None or args.np is None:
            raise GsvdistError("sampler fmatrix needs --mp/--p/--np")
        batch = sample_w_fmatrix(_reduced(args), args.samples, rng, args.workers)
    else:
        if args.m is None or args.q is None or args.n is None:
            raise GsvdistError(f"sampler {sampler.value} needs --m/--q/--n")
        dims = _pair_dims(args)
        if sampler is SamplerId.GSVD:
            batch = sample_w_gsvd(dims, args.samples, rng, args.workers)
        elif sampler is SamplerId.HAAR_BLOCK:
            batch = sample_alpha_haar(dims, args.samples, rng, args.workers)
        else:
            batch = sample_q_power(dims, args.samples, rng, args.workers)

    meta = {
        "sampler": batch.sampler_id.value,
        "dims": list(batch.dims),
        "seed": batch.seed,
        "workers": args.workers,
        "count": batch.count,
        "arity": batch.arity,
        "failures": batch.failures,
    }
    if args.format == "json":
        data = dict(meta)
        data["values"] = [[float(v) for v in row] for row in batch.values]
        _emit(_json_payload("sample", {"seed": args.seed}, data), args.out)
    else:
        lines = [
            f"# sampler={meta['sampler']} dims={'x'.join(str(d) for d in batch.dims)} "
            f"seed={batch.seed} count={batch.count} arity={batch.arity}"
        ]
        rows = (
            (draw, index, batch.values[draw, index])
            for draw in range(batch.count)
            for index in range(batch.arity)
        )
        lines.append(_csv_text(["draw", "index", "value"], rows))
        _emit("\n".join(lines), args.out)
    return 0


def cmd_verify(args) -> int:
    experiment = Experiment(args.experiment)
    kwargs = dict(
        samples=args.samples,
        seed=args.seed,
        workers=args.workers,
        alpha_level=args.alpha,
    )
    if experiment is Experiment.NORMALIZATION:
        if args.mp is None or args.p is None or args.np is None:
            raise GsvdistError("verify normalization needs --mp/--p/--np")
        report = run_experiment(experiment, reduced=_reduced(args), **kwargs)
    else:
        if args.m is None or args.q is None or args.n is None:
            raise GsvdistError(f"verify {experiment.value} needs --m/--q/--n")
        report = run_experiment(experiment, dims=_pair_dims(args), **kwargs)

    if args.format == "json":
        payload = report.to_dict(include_timing=False)
        meta_extra = {
            "seed": report.seed,
            "workers": report.workers,
            "elapsed_seconds": report.elapsed_seconds,
        }
        _emit(_json_payload("verify", meta_extra, payload), args.out)
    else:
        rows = []
        for name, check in report.checks:
            rows.append(
                [
                    name,
                    check["kind"],
                    check.get("statistic", check.get("value", check.get("estimate"))),
                    check.get("critical_value", check.get("target")),
                    check["passed"],
                ]
            )
        rows.append(["overall", "verdict", "", "", report.passed])
        _emit(_csv_text(["check", "kind", "statistic", "reference", "passed"], rows), args.out)
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gsvdist",
        description="generalized-SVD spectral laws: structure, densities, "
        "samplers, and statistical verification",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, fmt_default):
        p.add_argument("--format", choices=["csv", "json"], default=fmt_default)
        p.add_argument("--out", default=None, help="write to a file instead of stdout")

    def add_pair(p, required):
        p.add_argument("--m", type=int, required=required)
        p.add_argument("--q", type=int, required=required)
        p.add_argument("--n", type=int, required=required)

    def add_reduced(p, required):
        p.add_argument("--mp", type=int, required=required, help="rows m'")
        p.add_argument("--p", type=int, required=required, help="numerator columns p")
        p.add_argument("--np", type=int, required=required, help="denominator columns n'")

    p_dims = sub.add_parser("dims", help="structural parameters of a pair")
    add_pair(p_dims, required=True)
    add_common(p_dims, "json")
    p_dims.set_defaults(func=cmd_dims)

    for name, fn, help_text in (
        ("pdf", cmd_pdf, "tabulate the marginal density"),
        ("cdf", cmd_cdf, "tabulate the marginal distribution function"),
    ):
        p = sub.add_parser(name, help=help_text)
        add_reduced(p, required=True)
        p.add_argument(
            "--grid",
            nargs=3,
            type=float,
            metavar=("MIN", "MAX", "POINTS"),
            help="log-spaced evaluation grid (default 1e-3 1e3 200); outside "
            "the grid the density behaves like w^t1 at 0 and w^(t1-t2) at "
            "infinity",
        )
        add_common(p, "csv")
        p.set_defaults(func=fn)

    p_sample = sub.add_parser("sample", help="dump raw sampler draws")
    p_sample.add_argument(
        "--sampler",
        choices=[s.value for s in SamplerId],
        required=True,
    )
    add_pair(p_sample, required=False)
    add_reduced(p_sample, required=False)
    p_sample.add_argument("--samples", type=int, default=20000)
    p_sample.add_argument("--seed", type=int, default=0)
    p_sample.add_argument("--workers", type=int, default=1)
    add_common(p_sample, "csv")
    p_sample.set_defaults(func=cmd_sample)

    p_verify = sub.add_parser("verify", help="run a named verification experiment")
    p_verify.add_argument(
        "experiment",
        choices=[e.value for e in Experiment],
    )
    add_pair(p_verify, required=False)
    add_reduced(p_verify, required=False)
    p_verify.add_argument("--samples", type=int, default=20000)
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.add_argument("--workers", type=int, default=1)
    p_verify.add_argument("--alpha", type=float, default=0.01)
    add_common(p_verify, "json")
    p_verify.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except GsvdistError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
