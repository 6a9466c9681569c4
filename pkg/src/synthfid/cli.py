"""Command line interface.

Verbs: ``fit`` (CSV dataset -> model archive), ``sample`` (model archive ->
synthetic fidelity CSV + report), ``bounds`` (live intervals for a partial
correlation vector), ``bench`` (built-in pair end to end), ``validate``
(check a dataset file). Exit codes: 0 success, 2 usage or parse errors,
3 numerical failures. Every command honors ``--seed`` (default from
``SYNTHFID_SEED``); outputs are byte-identical across repeated runs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import archive, benchmarks, corrbounds, sampler
from .data import format_float, read_csv, write_csv
from .errors import NumericalError, SynthfidError
from .mogp import FitConfig, fit

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

REPORT_SCHEMA_VERSION = 1


def _default_seed():
    try:
        return int(os.environ.get("SYNTHFID_SEED", "0"))
    except ValueError:
        return 0


def _add_fit_args(p):
    p.add_argument("--kernel", choices=["spectral_mixture", "rbf"],
                   default="spectral_mixture")
    p.add_argument("--mixtures", type=int, default=4,
                   help="spectral mixture components (default 4)")
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--noise", default="shared",
                   help="'shared', 'per_fidelity', or a fixed variance value")
    p.add_argument("--gradient", choices=["numeric", "analytic"],
                   default="numeric")


def _add_sample_args(p):
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--correlations",
                      help="comma-separated targets; the entry for the prior "
                           "draw may be omitted (it is completed automatically)")
    mode.add_argument("--random", type=int, metavar="N",
                      help="draw N random valid correlation vectors")
    mode.add_argument("--interactive", action="store_true",
                      help="prompt for each entry with live bounds (TTY only)")
    p.add_argument("--prior-draw", choices=["matrix", "cholesky"],
                   default="matrix")
    p.add_argument("--prior-sign", choices=["+", "-"], default="+",
                   help="endpoint used when completing the prior-draw entry")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="synthfid",
        description="Fit multi-output GPs and generate synthetic fidelities "
                    "with exactly targeted Pearson correlations.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=_default_seed(),
                        help="global seed (default: $SYNTHFID_SEED or 0)")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=lambda **kw: argparse.ArgumentParser(
                                    parents=[common], **kw))

    p = sub.add_parser("fit", help="fit a model to a dataset CSV")
    p.add_argument("data", help="dataset CSV (header x0,...,fidelity,y)")
    p.add_argument("--out", default="model.json", help="model archive path")
    _add_fit_args(p)

    p = sub.add_parser("sample", help="generate synthetic fidelity samples")
    p.add_argument("model", help="model archive from 'fit'")
    p.add_argument("--out-dir", default=".", help="output directory")
    _add_sample_args(p)

    p = sub.add_parser("bounds", help="show live bounds for a partial vector")
    p.add_argument("model", help="model archive from 'fit'")
    p.add_argument("--partial", default="",
                   help="comma-separated already-chosen entries")
    p.add_argument("--prior-draw", choices=["matrix", "cholesky"],
                   default="matrix")

    p = sub.add_parser("bench", help="run a built-in pair end to end")
    p.add_argument("benchmark", help=f"one of: {', '.join(benchmarks.PAIR_NAMES)}")
    p.add_argument("--points", type=int, default=None,
                   help="grid points per dimension (default 50 for 1-d, 20 else)")
    p.add_argument("--out-dir", default=".", help="output directory")
    p.add_argument("--samples", type=int, default=6,
                   help="number of random synthetic samples (default 6)")
    p.add_argument("--correlations", default=None,
                   help="explicit targets instead of random samples")
    _add_fit_args(p)
    p.add_argument("--prior-draw", choices=["matrix", "cholesky"],
                   default="matrix")
    p.add_argument("--prior-sign", choices=["+", "-"], default="+")

    p = sub.add_parser("validate", help="check a dataset CSV")
    p.add_argument("data")
    return parser


def _fit_config(args):
    noise = args.noise
    if noise not in ("shared", "per_fidelity"):
        noise = float(noise)
    return FitConfig(
        kernel=args.kernel,
        mixtures=args.mixtures,
        restarts=args.restarts,
        max_iter=args.max_iter,
        seed=args.seed,
        noise=noise,
        gradient=args.gradient,
    )


def _json_dump(payload, path):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _parse_values(text):
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise SynthfidError(f"bad correlation list {text!r}: {exc}") from exc


def complete_spec(session, values, prior_sign="+"):
    """Apply explicit values to a session and auto-complete the rest.

    Collapsed intermediate entries (zero-width bounds) are filled with
    their midpoint; the final entry, if not given, is placed at the
    endpoint selected by ``prior_sign``.
    """
    values = list(values)
    if len(values) > session.size:
        raise SynthfidError(
            f"{len(values)} correlation values given; at most {session.size} allowed"
        )
    for v in values:
        session.choose(v)
    while session.remaining:
        lower, upper = session.bounds_for_next()
        if session.remaining == 1:
            session.choose(upper if prior_sign == "+" else lower)
        elif upper - lower <= 1e-9:
            session.choose(0.5 * (lower + upper))
        else:
            raise SynthfidError(
                f"correlation entry {session.position} is unconstrained: "
                f"give a value in [{lower:.6f}, {upper:.6f}]"
            )
    return session.finalize()


def interactive_spec(session, labels, input_fn=input, print_fn=print):
    """Prompt for every entry, showing live bounds; re-asks on bad input."""
    while session.remaining:
        lower, upper = session.bounds_for_next()
        label = labels[session.position]
        prompt = (
            f"correlation to {label} in [{lower:.6f}, {upper:.6f}]: "
        )
        try:
            raw = input_fn(prompt)
        except EOFError:
            raise SynthfidError("input closed before the vector was complete") from None
        try:
            value = float(raw)
        except ValueError:
            print_fn(f"not a number: {raw!r}")
            continue
        if not (lower - 1e-12 <= value <= upper + 1e-12):
            print_fn(
                f"out of range; the valid interval is [{lower:.6f}, {upper:.6f}]"
            )
            continue
        session.choose(value)
    return session.finalize()


def _sample_report(sample, spec):
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "seed": sample.seed,
        "prior_draw": sample.basis.prior_draw,
        "labels": list(sample.basis.labels),
        "requested": sample.requested.tolist(),
        "achieved": sample.achieved.tolist(),
        "coefficients": sample.coefficients.tolist(),
        "implied_task_covariances": sample.task_covariances.tolist(),
        "heuristic_weights": sample.heuristic_weights.tolist(),
        "heuristic_variance": sample.heuristic_variance,
        "realized_variance": sample.realized_variance,
        "boundary_gap": spec.boundary_gap,
    }


def _write_sample(model, sample, spec, out_dir, tag, label):
    augmented = model.dataset.with_column(sample.values, label)
    csv_path = out_dir / f"sample_{tag}.csv"
    write_csv(augmented, csv_path)
    _json_dump(_sample_report(sample, spec), out_dir / f"report_{tag}.json")
    return csv_path


def _print_sample_line(tag, sample):
    req = ", ".join(f"{v:+.6f}" for v in sample.requested)
    ach = ", ".join(f"{v:+.6f}" for v in sample.achieved)
    print(f"{tag}: requested [{req}]")
    print(f"{tag}:  achieved [{ach}]")


def _generate_samples(model, args, out_dir):
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if args.correlations is not None:
        values = _parse_values(args.correlations)
        basis = sampler.build_basis(model, args.seed, prior_draw=args.prior_draw)
        session = corrbounds.begin(basis.correlation)
        spec = complete_spec(session, values, prior_sign=args.prior_sign)
        sample = sampler.draw_from_basis(model, basis, spec)
        written.append(_write_sample(model, sample, spec, out_dir, "explicit", "synthetic"))
        _print_sample_line("explicit", sample)
    elif getattr(args, "interactive", False):
        if not sys.stdin.isatty():
            raise SynthfidError(
                "interactive mode needs a terminal; use --correlations or --random"
            )
        basis = sampler.build_basis(model, args.seed, prior_draw=args.prior_draw)
        session = corrbounds.begin(basis.correlation)
        spec = interactive_spec(session, basis.labels)
        sample = sampler.draw_from_basis(model, basis, spec)
        written.append(_write_sample(model, sample, spec, out_dir, "interactive", "synthetic"))
        _print_sample_line("interactive", sample)
    else:
        count = args.random if getattr(args, "random", None) else getattr(args, "samples", 6)
        for i in range(count):
            seed = args.seed + i
            basis = sampler.build_basis(model, seed, prior_draw=args.prior_draw)
            session = corrbounds.begin(basis.correlation)
            spec = corrbounds.sample_random(session, seed)
            sample = sampler.draw_from_basis(model, basis, spec)
            tag = f"s{seed}"
            written.append(_write_sample(model, sample, spec, out_dir, tag, f"synthetic_{tag}"))
            _print_sample_line(tag, sample)
    return written


def cmd_fit(args):
    dataset = read_csv(args.data)
    model = fit(dataset, _fit_config(args))
    archive.save_model(model, args.out)
    d = model.diagnostics
    print(f"fitted {args.kernel} model on {dataset.n_points} points x "
          f"{dataset.n_fidelities} fidelities")
    print(f"final LML: {d.lml:.6f} (best of {len(d.restarts)} restarts)")
    print(f"archive: {args.out}")
    return EXIT_OK


def cmd_sample(args):
    model = archive.load_model(args.model)
    _generate_samples(model, args, Path(args.out_dir))
    return EXIT_OK


def cmd_bounds(args):
    model = archive.load_model(args.model)
    basis = sampler.build_basis(model, args.seed, prior_draw=args.prior_draw)
    session = corrbounds.begin(basis.correlation)
    for value in _parse_values(args.partial) if args.partial else []:
        lower, upper = session.bounds_for_next()
        label = basis.labels[session.position]
        session.choose(value)
        print(f"{label}: chose {value:.6f} from [{lower:.6f}, {upper:.6f}]")
    if session.remaining:
        lower, upper = session.bounds_for_next()
        label = basis.labels[session.position]
        print(f"next ({label}): [{lower:.6f}, {upper:.6f}]")
    else:
        spec = session.finalize()
        print(f"vector complete; boundary gap {spec.boundary_gap:.6e}")
    return EXIT_OK


def cmd_bench(args):
    try:
        pair = benchmarks.get_pair(args.benchmark)
    except KeyError as exc:
        raise SynthfidError(str(exc)) from exc
    points = args.points or (50 if pair.n_dims == 1 else 20)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    dataset = benchmarks.grid(pair, points)
    write_csv(dataset, out_dir / "dataset.csv")
    print(f"{pair.name}: {dataset.n_points} points, {dataset.n_fidelities} fidelities")

    model = fit(dataset, _fit_config(args))
    archive.save_model(model, out_dir / "model.json")
    print(f"final LML: {model.diagnostics.lml:.6f}")

    written = _generate_samples(model, args, out_dir)

    # wide plot-data table: coordinates, both fidelities, every sample
    samples = []
    for path in written:
        tag = path.stem.replace("sample_", "")
        values = read_csv(path).y[:, -1]
        samples.append((tag, values))
    with open(out_dir / "plot_data.csv", "w") as fh:
        cols = [f"x{d}" for d in range(dataset.n_dims)]
        cols += list(dataset.labels) + [tag for tag, _ in samples]
        fh.write(",".join(cols) + "\n")
        for i in range(dataset.n_points):
            row = [format_float(v) for v in dataset.x[i]]
            row += [format_float(v) for v in dataset.y[i]]
            row += [format_float(vals[i]) for _, vals in samples]
            fh.write(",".join(row) + "\n")
    print(f"plot data: {out_dir / 'plot_data.csv'}")
    return EXIT_OK


def cmd_validate(args):
    dataset = read_csv(args.data)
    print(f"valid dataset: {dataset.n_points} points, {dataset.n_dims} "
          f"dimensions, {dataset.n_fidelities} fidelities "
          f"({', '.join(dataset.labels)})")
    return EXIT_OK


_COMMANDS = {
    "fit": cmd_fit,
    "sample": cmd_sample,
    "bounds": cmd_bounds,
    "bench": cmd_bench,
    "validate": cmd_validate,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (SynthfidError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
