"""Command-line interface: ``bsi {enumerate,generate,infer,sample,converge,density}``.

Exit codes: 0 success, 2 usage error, 3 no accepting topology, 4 malformed input.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import re
import sys
from pathlib import Path

import numpy as np

from . import bayes, enumeration, processes, sampler
from .machine import as_series

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NO_ACCEPTING = 3
EXIT_MALFORMED = 4


class MalformedInput(Exception):
    pass


class UsageError(Exception):
    pass


def parse_state_range(text: str) -> tuple[int, int]:
    m = re.fullmatch(r"\s*(\d+)\s*(?:\.\.\s*(\d+))?\s*", text)
    if not m:
        raise UsageError(f"bad state range {text!r}; expected A..B")
    lo = int(m.group(1))
    hi = int(m.group(2)) if m.group(2) else lo
    if lo < 1 or hi < lo:
        raise UsageError(f"state range {text!r} must satisfy 1 <= A <= B")
    return lo, hi


def _parse_length(token: str) -> int:
    token = token.strip()
    m = re.fullmatch(r"(\d+)\^(\d+)", token)
    if m:
        return int(m.group(1)) ** int(m.group(2))
    if token.isdigit():
        return int(token)
    raise UsageError(f"bad length {token!r}")


def parse_lengths(text: str) -> list[int]:
    """``2^a..2^b`` (every power of two between) or a comma list."""
    m = re.fullmatch(r"\s*2\^(\d+)\s*\.\.\s*2\^(\d+)\s*", text)
    if m:
        a, b = int(m.group(1)), int(m.group(2))
        if b < a:
            raise UsageError(f"empty length range {text!r}")
        return [2 ** i for i in range(a, b + 1)]
    return [_parse_length(t) for t in text.split(",") if t.strip()]


def read_data(path, alphabet_size: int) -> np.ndarray:
    try:
        text = Path(path).read_text(encoding="ascii")
    except (OSError, UnicodeDecodeError) as exc:
        raise MalformedInput(f"cannot read data file {path}: {exc}") from exc
    try:
        return as_series(text, alphabet_size)
    except ValueError as exc:
        raise MalformedInput(f"{path}: {exc}") from exc


def _load_library(path) -> enumeration.MachineLibrary:
    if path is None:
        return enumeration.shipped_library()
    try:
        return enumeration.load_library(path)
    except (OSError, ValueError, KeyError) as exc:
        raise MalformedInput(f"cannot load library {path}: {exc}") from exc


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    return max(1, int(os.environ.get("BSI_THREADS", "1")))


def _digest(series: np.ndarray) -> str:
    return hashlib.sha256(series.tobytes()).hexdigest()


def _write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


def build_report(table: bayes.PosteriorTable, series: np.ndarray, top: int,
                 seed: int | None = None) -> dict:
    """Serialize a posterior table; the tail mass covers accepted rows past ``top``."""
    order = [i for i in table.order() if table.accepted[i]]
    shown = order[:top]
    rest = order[top:]
    report = {
        "data": {"length": int(series.size), "alphabet_size": table.library.alphabet_size,
                 "sha256": _digest(series)},
        "config": {"alpha": table.alpha, "beta": table.beta, "seed": seed},
        "library": {"size": len(table.library), "census": table.library.census},
        "accepting_count": table.accepting_count,
        "rows": [table.row(i) for i in shown],
        "tail_mass": float(table.posterior[rest].sum()) if rest else 0.0,
    }
    if order:
        best = table.row(order[0])
        report["map"] = {"id": best["id"], "n_states": best["n_states"],
                         "posterior": best["posterior"]}
    else:
        report["map"] = None
    return report


def cmd_enumerate(args) -> int:
    lo, hi = parse_state_range(args.states)
    if args.alphabet < 2:
        raise UsageError("alphabet size must be at least 2")
    lib = enumeration.build_library(lo, hi, args.alphabet, workers=_threads(args))
    enumeration.save_library(lib, args.out)
    for n in range(lo, hi + 1):
        print(f"n={n} k={args.alphabet}: {lib.census[n - 1]}")
    print(f"total: {len(lib)}")
    return EXIT_OK


def cmd_generate(args) -> int:
    if args.length < 0:
        raise UsageError("length must be nonnegative")
    if args.process.startswith("file:"):
        try:
            hmm = processes.load_generator(args.process[5:])
        except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
            raise MalformedInput(f"cannot load generator: {exc}") from exc
    else:
        try:
            hmm = processes.builtin(args.process)
        except KeyError as exc:
            raise UsageError(str(exc.args[0])) from exc
    series = processes.generate_series(hmm, args.length, args.seed, start=args.start)
    Path(args.out).write_text("".join(map(str, series.tolist())) + "\n", encoding="ascii")
    return EXIT_OK


def _priors(args):
    return bayes.DirichletPrior(args.alpha), bayes.ModelPriorSpec(args.beta)


def cmd_infer(args) -> int:
    lib = _load_library(args.library)
    series = read_data(args.data, lib.alphabet_size)
    prior, spec = _priors(args)
    table = bayes.topology_posterior(lib, series, prior, spec, threads=_threads(args))
    report = build_report(table, series, args.top)
    _write_json(report, args.out)
    if not table.accepted.any():
        print("no topology accepts the data", file=sys.stderr)
        return EXIT_NO_ACCEPTING
    m = report["map"]
    print(f"accepting: {report['accepting_count']}  MAP: {m['id']} "
          f"(n={m['n_states']}, posterior {m['posterior']:.6g})")
    return EXIT_OK


def _summary_dict(samples) -> dict:
    out = {"n_samples": len(samples)}
    for name in ("h_mu", "c_mu"):
        vals = [getattr(s, name) for s in samples]
        if vals:
            st = sampler.summarize(vals)
            out[name] = {"mean": st.mean, "ci_low": st.ci_low, "ci_high": st.ci_high}
        else:
            out[name] = None
    return out


def cmd_sample(args) -> int:
    lib = _load_library(args.library)
    series = read_data(args.data, lib.alphabet_size)
    prior, spec = _priors(args)
    table = bayes.topology_posterior(lib, series, prior, spec, threads=_threads(args))
    if not table.accepted.any():
        print("no topology accepts the data", file=sys.stderr)
        return EXIT_NO_ACCEPTING
    config = sampler.SamplerConfig(args.samples, args.seed, args.mode)
    samples = sampler.sample_posterior(table, config, workers=_threads(args))
    sampler.write_samples_csv(samples, args.out)
    if args.summary:
        summary = _summary_dict(samples)
        summary.update({"mode": config.mode.value, "seed": args.seed,
                        "map_id": bayes.map_topology(table),
                        "map_posterior": float(table.posterior.max())})
        _write_json(summary, args.summary)
    return EXIT_OK


CONVERGE_COLUMNS = ("L", "accepting", "map_id", "map_n_states", "map_posterior",
                    "h_mu_mean", "h_mu_ci_low", "h_mu_ci_high",
                    "c_mu_mean", "c_mu_ci_low", "c_mu_ci_high")


def cmd_converge(args) -> int:
    lib = _load_library(args.library)
    series = read_data(args.data, lib.alphabet_size)
    lengths = parse_lengths(args.lengths)
    too_long = [L for L in lengths if L > series.size]
    if too_long:
        raise UsageError(f"lengths {too_long} exceed the data length {series.size}")
    prior, spec = _priors(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    status = EXIT_OK
    for L in lengths:
        prefix = series[:L]
        table = bayes.topology_posterior(lib, prefix, prior, spec, threads=_threads(args))
        report = build_report(table, prefix, args.top, seed=args.seed)
        if not table.accepted.any():
            _write_json(report, out / f"report_L{L}.json")
            rows.append({"L": L, "accepting": 0})
            status = EXIT_NO_ACCEPTING
            continue
        config = sampler.SamplerConfig(args.samples, args.seed, args.mode)
        samples = sampler.sample_posterior(table, config, workers=_threads(args))
        report["summary"] = _summary_dict(samples)
        report["summary"]["mode"] = config.mode.value
        _write_json(report, out / f"report_L{L}.json")
        row = {"L": L, "accepting": table.accepting_count, "map_id": report["map"]["id"],
               "map_n_states": report["map"]["n_states"],
               "map_posterior": report["map"]["posterior"]}
        for name in ("h_mu", "c_mu"):
            st = report["summary"][name]
            if st is not None:
                row[f"{name}_mean"] = st["mean"]
                row[f"{name}_ci_low"] = st["ci_low"]
                row[f"{name}_ci_high"] = st["ci_high"]
        rows.append(row)
        print(f"L={L}: accepting {row['accepting']}, MAP {row['map_id']} "
              f"({row['map_posterior']:.4g})")
    with open(out / "summary.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=CONVERGE_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(float(v)) if isinstance(v, float) else v) for k, v in row.items()})
    return status


def cmd_density(args) -> int:
    try:
        values = sampler.read_sample_column(args.input, args.column)
    except OSError as exc:
        raise MalformedInput(f"cannot read {args.input}: {exc}") from exc
    except KeyError as exc:
        raise MalformedInput(str(exc.args[0])) from exc
    except ValueError as exc:
        raise MalformedInput(f"{args.input}: {exc}") from exc
    if values.size == 0:
        raise MalformedInput(f"{args.input} has no samples")
    bw = args.bandwidth
    if bw != "silverman":
        try:
            bw = float(bw)
        except ValueError as exc:
            raise UsageError("bandwidth must be 'silverman' or a positive number") from exc
    est = sampler.gaussian_kde(values, n_grid=args.grid, bandwidth=bw)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        if est.degenerate:
            fh.write(f"# degenerate: all samples equal {est.value!r}; no density\n")
            print(f"degenerate distribution (all samples equal {est.value!r}); no density written")
            return EXIT_OK
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "density"])
        for x, d in zip(est.grid, est.density):
            w.writerow([repr(float(x)), repr(float(d))])
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bsi", description=__doc__.splitlines()[0])
    parser.add_argument("--threads", type=int, default=None,
                        help="worker count (default $BSI_THREADS or 1); never changes outputs")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("enumerate", help="build a topological epsilon-machine library")
    p.add_argument("--states", required=True, help="state range A..B")
    p.add_argument("--alphabet", type=int, default=2)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("generate", help="simulate a data series")
    p.add_argument("--process", required=True, help="golden-mean, even, sns or file:PATH")
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--start", type=int, default=None, help="pin the start state")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    def inference_flags(p):
        p.add_argument("--library", default=None, help="library file (default: bundled 1-5 states, k=2)")
        p.add_argument("--data", required=True)
        p.add_argument("--alpha", type=float, default=1.0)
        p.add_argument("--beta", type=float, default=4.0)

    p = sub.add_parser("infer", help="posterior over the library")
    inference_flags(p)
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("sample", help="posterior samples of h_mu and C_mu")
    inference_flags(p)
    p.add_argument("--samples", type=int, default=50_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=["full", "map"], default="full")
    p.add_argument("--out", required=True)
    p.add_argument("--summary", default=None)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("converge", help="inference on prefixes of one series")
    inference_flags(p)
    p.add_argument("--lengths", default="2^0..2^17")
    p.add_argument("--samples", type=int, default=50_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=["full", "map"], default="full")
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("density", help="Gaussian KDE of a sample column")
    p.add_argument("--input", required=True)
    p.add_argument("--column", required=True, help="h_mu / hmu or c_mu / cmu")
    p.add_argument("--grid", type=int, default=512)
    p.add_argument("--bandwidth", default="silverman")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_density)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "samples", 0) is not None and getattr(args, "samples", 0) < 0:
            raise UsageError("--samples must be nonnegative")
        return args.func(args)
    except UsageError as exc:
        print(f"bsi: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MalformedInput as exc:
        print(f"bsi: malformed input: {exc}", file=sys.stderr)
        return EXIT_MALFORMED


if __name__ == "__main__":
    sys.exit(main())
