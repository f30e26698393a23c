"""Command-line interface.

Standard output carries machine-readable payloads only (JSON or CSV);
progress notes and summaries go to standard error.  Exit codes: 0 on
success, 1 for bad arguments or malformed input files, 2 for numeric
failures (singular fits, out-of-domain evaluations), 3 for I/O and
bundle-format problems.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import sys
from dataclasses import replace

from . import __version__
from .accounting import COUNT_KINDS, TransformerShape, count_all, itemized_breakdown
from .dataio import (
    CoefficientBundle,
    RunDataset,
    dataset_sha256,
    load_coefficients,
    load_runs,
    save_coefficients,
    save_runs,
    split_dataset,
    write_runs,
)
from .errors import BundleFormatError, NumericError, ValidationError
from .optimizer import (
    HyperVector,
    constrained_descent,
    gradient_field,
    round_to_lattice,
)
from .regress import calibration_line
from .scaling import (
    TOKEN_MODES,
    TrainBudget,
    estimate_data,
    fit_law_coefficients,
    predict_loss_from_shape,
)
from .synth import SweepSpec, generate_runs
from .throughput import FIT_MODES, fit_time_coefficients, predict_step_time

DEFAULT_BUDGET_SECONDS = 10800.0


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; this tool reserves 2
    # for numeric failures, so all argument problems exit 1 instead.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


def _emit_json(doc) -> None:
    print(json.dumps(doc, indent=2))


def _add_shape_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--d", type=int, required=True, help="embedding width")
    p.add_argument("--n", type=int, required=True, help="number of layers")
    p.add_argument("--s", type=int, required=True, help="sequence length")
    p.add_argument("--v", type=int, required=True, help="vocabulary size")
    p.add_argument("--w", type=int, required=True, help="MLP hidden width")
    p.add_argument("--h", type=int, required=True, help="number of attention heads")


def _shape_from_args(args) -> TransformerShape:
    return TransformerShape(d=args.d, n=args.n, s=args.s, v=args.v, w=args.w, h=args.h)


def _add_budget_args(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--train-seconds",
        "--T",
        dest="T",
        type=float,
        default=None,
        help=f"wall-clock training budget in seconds (default {DEFAULT_BUDGET_SECONDS:g})",
    )
    p.add_argument("--batch", type=int, default=None, help="batch size (default 1)")
    p.add_argument(
        "--token-mode",
        choices=TOKEN_MODES,
        default=None,
        help="data axis units: optimizer steps or tokens (default steps)",
    )


def _resolve_budget(args, bundle: CoefficientBundle | None) -> TrainBudget:
    base = bundle.budget if bundle is not None and bundle.budget is not None else None
    t_defaulted = False
    t = args.T if args.T is not None else (base.T if base else None)
    if t is None:
        t = DEFAULT_BUDGET_SECONDS
        t_defaulted = True
    batch = args.batch if args.batch is not None else (base.batch if base else 1)
    mode = args.token_mode if args.token_mode is not None else (base.token_mode if base else "steps")
    budget = TrainBudget(T=t, batch=batch, token_mode=mode)
    _note(
        f"budget: T={budget.T:g} s{' (default)' if t_defaulted else ''}, "
        f"batch={budget.batch}, token_mode={budget.token_mode}"
    )
    return budget


def _load_bundle(path: str) -> CoefficientBundle:
    return load_coefficients(path)


def _require_time(bundle: CoefficientBundle, path: str):
    if bundle.time is None:
        raise BundleFormatError(f"{path}: bundle has no step-time coefficients")
    return bundle.time


def _require_law(bundle: CoefficientBundle, path: str):
    if bundle.law is None:
        raise BundleFormatError(f"{path}: bundle has no loss-law coefficients")
    return bundle.law


def _parse_assignments(text: str, what: str) -> dict[str, float]:
    out: dict[str, float] = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ValidationError(f"{what}: expected name=value, got {part!r}")
        name, _, val = part.partition("=")
        try:
            out[name.strip()] = float(val)
        except ValueError:
            raise ValidationError(f"{what}: {val!r} is not a number") from None
    return out


def _parse_grid_axis(text: str) -> tuple[float, float, int]:
    bits = text.split(":")
    if len(bits) != 3:
        raise ValidationError(f"grid axis must be lo:hi:count, got {text!r}")
    try:
        return float(bits[0]), float(bits[1]), int(bits[2])
    except ValueError:
        raise ValidationError(f"grid axis must be lo:hi:count, got {text!r}") from None


def _fit_report_doc(report):
    if report is None:
        return None
    return {
        "slope": report.slope,
        "intercept": report.intercept,
        "r2_pearson": report.r2_pearson,
        "r2_raw": report.r2_raw,
    }


def _provenance(runs_path: str, extra: dict) -> dict:
    doc = {
        "dataset": str(runs_path),
        "dataset_sha256": dataset_sha256(runs_path),
        "fitted_at": datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
        "tool": f"traintime {__version__}",
    }
    doc.update(extra)
    return doc


def cmd_count(args) -> int:
    counts = count_all(_shape_from_args(args))
    if args.json:
        _emit_json(counts)
    else:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(["params", "memcpys", "flops"])
        writer.writerow([counts["params"], counts["memcpys"], counts["flops"]])
    return 0


def cmd_breakdown(args) -> int:
    table = itemized_breakdown(_shape_from_args(args), args.kind)
    if args.json:
        _emit_json(
            {
                "kind": table.kind,
                "components": [[label, value] for label, value in table.components],
                "total": table.total,
            }
        )
    else:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(["component", "count"])
        for label, value in table.components:
            writer.writerow([label, value])
        writer.writerow(["total", table.total])
    return 0


def _maybe_split(dataset, args):
    if args.holdout is not None:
        dataset = split_dataset(dataset, args.holdout, args.seed)
        _note(
            f"split: {len(dataset.subset('train'))} train, "
            f"{len(dataset.subset('holdout'))} holdout (seed {args.seed})"
        )
    return dataset


def cmd_fit_time(args) -> int:
    dataset = _maybe_split(load_runs(args.runs), args)
    coeffs = fit_time_coefficients(dataset, mode=args.mode)
    _note(f"fit {len(dataset)} runs: c1={coeffs.c1:.6e} c2={coeffs.c2:.6e} c3={coeffs.c3:.6e}")
    for note in coeffs.notes:
        _note(f"note: {note}")
    doc = {
        "c1": coeffs.c1,
        "c2": coeffs.c2,
        "c3": coeffs.c3,
        "mode": coeffs.mode,
        "fit_r2": _fit_report_doc(coeffs.fit_r2),
        "notes": list(coeffs.notes),
    }
    _emit_json(doc)
    if args.out:
        base = load_coefficients(args.base) if args.base else CoefficientBundle()
        bundle = replace(
            base,
            time=coeffs,
            provenance=_provenance(args.runs, {"fit": "time", "mode": args.mode}),
        )
        save_coefficients(bundle, args.out)
        _note(f"wrote bundle: {args.out}")
    return 0


def cmd_fit_loss(args) -> int:
    dataset = _maybe_split(load_runs(args.runs), args)
    law = fit_law_coefficients(dataset, alpha=args.alpha, beta=args.beta)
    _note(f"fit {len(dataset)} runs: A={law.A:.6f} B={law.B:.6f} E={law.E:.6f}")
    for note in law.notes:
        _note(f"note: {note}")
    doc = {
        "A": law.A,
        "B": law.B,
        "E": law.E,
        "alpha": law.alpha,
        "beta": law.beta,
        "fit_r2": _fit_report_doc(law.fit_r2),
        "notes": list(law.notes),
    }
    _emit_json(doc)
    if args.out:
        base = load_coefficients(args.base) if args.base else CoefficientBundle()
        bundle = replace(
            base,
            law=law,
            provenance=_provenance(
                args.runs, {"fit": "loss", "alpha": args.alpha, "beta": args.beta}
            ),
        )
        save_coefficients(bundle, args.out)
        _note(f"wrote bundle: {args.out}")
    return 0


def cmd_predict(args) -> int:
    bundle = _load_bundle(args.coeffs)
    time = _require_time(bundle, args.coeffs)
    law = _require_law(bundle, args.coeffs)
    budget = _resolve_budget(args, bundle)
    shape = _shape_from_args(args)
    t = predict_step_time(shape, time)
    data = estimate_data(shape, time, budget)
    loss = predict_loss_from_shape(shape, time, law, budget)
    counts = count_all(shape)
    _emit_json(
        {
            "loss": loss,
            "params": counts["params"],
            "step_seconds": t,
            "data": data,
            "token_mode": budget.token_mode,
            "T": budget.T,
            "batch": budget.batch,
        }
    )
    return 0


def cmd_estimate_data(args) -> int:
    bundle = _load_bundle(args.coeffs)
    time = _require_time(bundle, args.coeffs)
    budget = _resolve_budget(args, bundle)
    shape = _shape_from_args(args)
    t = predict_step_time(shape, time)
    steps = budget.T / t
    doc = {
        "data": estimate_data(shape, time, budget),
        "token_mode": budget.token_mode,
        "steps": steps,
        "tokens": steps * budget.batch * shape.s,
        "step_seconds": t,
    }
    _emit_json(doc)
    return 0


def cmd_grad_field(args) -> int:
    bundle = _load_bundle(args.coeffs)
    time = _require_time(bundle, args.coeffs)
    law = _require_law(bundle, args.coeffs)
    budget = _resolve_budget(args, bundle)
    axes = tuple(a.strip() for a in args.axes.split(","))
    if len(axes) != 2:
        raise ValidationError(f"--axes needs two comma-separated names, got {args.axes!r}")
    grid_bits = args.grid.split(",")
    if len(grid_bits) != 2:
        raise ValidationError(f"--grid needs two lo:hi:count specs, got {args.grid!r}")
    grid = (_parse_grid_axis(grid_bits[0]), _parse_grid_axis(grid_bits[1]))
    fixed = _parse_assignments(args.fixed, "--fixed")
    samples = gradient_field(axes, grid, fixed, time, law, budget)

    print(f"# projected descent field at constant parameter count; axes: {axes[0]},{axes[1]}")
    fixed_desc = " ".join(f"{k}={v:g}" for k, v in sorted(fixed.items()))
    print(f"# fixed: {fixed_desc}; T={budget.T:g} batch={budget.batch} token_mode={budget.token_mode}")
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["axis1", "axis2", "arrow1", "arrow2", "loss", "params"])
    failures = 0
    for smp in samples:
        writer.writerow(
            [
                repr(smp.coord1),
                repr(smp.coord2),
                repr(smp.arrow1),
                repr(smp.arrow2),
                repr(smp.loss),
                repr(smp.params),
            ]
        )
        if smp.error is not None:
            failures += 1
    if failures:
        _note(f"{failures} of {len(samples)} grid points failed to evaluate")
    return 0


def cmd_optimize(args) -> int:
    bundle = _load_bundle(args.coeffs)
    time = _require_time(bundle, args.coeffs)
    law = _require_law(bundle, args.coeffs)
    budget = _resolve_budget(args, bundle)
    start = _parse_assignments(args.start, "--start")
    missing = {"d", "n", "w", "h", "s", "v"} - start.keys()
    if missing:
        raise ValidationError(f"--start missing components: {', '.join(sorted(missing))}")
    x0 = HyperVector(**{k: start[k] for k in ("d", "n", "w", "h", "s", "v")})
    trajectory = constrained_descent(x0, time, law, budget, step=args.step, iters=args.iters)
    rounded = round_to_lattice(trajectory[-1].point, time, law, budget)
    _note(
        f"descent: {len(trajectory) - 1} accepted steps, loss "
        f"{trajectory[0].loss:.6f} -> {trajectory[-1].loss:.6f}"
    )
    d, n, s, v, w, h = rounded.shape.astuple()
    _emit_json(
        {
            "trajectory": [
                {
                    "d": p.point.d,
                    "n": p.point.n,
                    "w": p.point.w,
                    "h": p.point.h,
                    "loss": p.loss,
                    "params": p.params,
                }
                for p in trajectory
            ],
            "rounded": {
                "d": d,
                "n": n,
                "s": s,
                "v": v,
                "w": w,
                "h": h,
                "loss": rounded.loss,
                "params": rounded.params,
            },
        }
    )
    return 0


def cmd_simulate(args) -> int:
    bundle = _load_bundle(args.coeffs)
    time = _require_time(bundle, args.coeffs)
    law = _require_law(bundle, args.coeffs)
    if bundle.budget is None:
        raise BundleFormatError(f"{args.coeffs}: bundle has no training budget")
    spec = SweepSpec(
        samples=args.samples,
        seed=args.seed,
        noise_sigma=args.sigma,
        true_time=time,
        true_law=law,
        budget=bundle.budget,
        s=args.s,
        v=args.v,
    )
    dataset = generate_runs(spec)
    if args.out:
        save_runs(dataset, args.out)
        _emit_json({"written": str(args.out), "records": len(dataset)})
    else:
        write_runs(dataset, sys.stdout)
    return 0


def cmd_eval(args) -> int:
    bundle = _load_bundle(args.coeffs)
    time = _require_time(bundle, args.coeffs)
    law = _require_law(bundle, args.coeffs)
    budget = _resolve_budget(args, bundle)
    dataset = load_runs(args.runs)
    predicted = []
    actual = []
    for record in dataset.records:
        if record.final_loss is None:
            continue
        predicted.append(predict_loss_from_shape(record.shape, time, law, budget))
        actual.append(record.final_loss)
    if len(predicted) < 2:
        raise ValidationError(
            f"need at least 2 runs with final_loss to evaluate, got {len(predicted)}"
        )
    report = calibration_line(predicted, actual)
    _note(f"evaluated {len(predicted)} runs from {args.runs}")
    _emit_json(
        {
            "n_runs": len(predicted),
            "slope": report.slope,
            "intercept": report.intercept,
            "r2_pearson": report.r2_pearson,
            "r2_raw": report.r2_raw,
        }
    )
    return 0


def cmd_split(args) -> int:
    dataset = split_dataset(load_runs(args.runs), args.fraction, args.seed)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["run_id", "split"])
    for record, tag in zip(dataset.records, dataset.split):
        writer.writerow([record.run_id, tag])
    if args.out_train:
        save_runs(RunDataset(records=dataset.subset("train")), args.out_train)
        _note(f"wrote train runs: {args.out_train}")
    if args.out_holdout:
        save_runs(RunDataset(records=dataset.subset("holdout")), args.out_holdout)
        _note(f"wrote holdout runs: {args.out_holdout}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(
        prog="traintime",
        description="Cost accounting and wall-clock loss prediction for decoder-only transformers.",
    )
    parser.add_argument("--version", action="version", version=f"traintime {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("count", help="print params, memcpys and flops for one shape")
    _add_shape_args(p)
    p.add_argument("--json", action="store_true", help="emit JSON instead of CSV")
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("breakdown", help="itemized component table for one count")
    _add_shape_args(p)
    p.add_argument("--kind", choices=COUNT_KINDS, required=True)
    p.add_argument("--json", action="store_true", help="emit JSON instead of CSV")
    p.set_defaults(func=cmd_breakdown)

    p = sub.add_parser("fit-time", help="fit the step-time model from a run CSV")
    p.add_argument("--runs", required=True, help="run CSV path")
    p.add_argument("--mode", choices=FIT_MODES, default="both")
    p.add_argument("--holdout", type=float, default=None, help="holdout fraction for scoring")
    p.add_argument("--seed", type=int, default=0, help="split seed")
    p.add_argument("--out", default=None, help="write a coefficient bundle here")
    p.add_argument("--base", default=None, help="existing bundle to extend")
    p.set_defaults(func=cmd_fit_time)

    p = sub.add_parser("fit-loss", help="fit the loss law from a run CSV")
    p.add_argument("--runs", required=True, help="run CSV path")
    p.add_argument("--alpha", type=float, required=True, help="parameter exponent (configuration)")
    p.add_argument("--beta", type=float, required=True, help="data exponent (configuration)")
    p.add_argument("--holdout", type=float, default=None, help="holdout fraction for scoring")
    p.add_argument("--seed", type=int, default=0, help="split seed")
    p.add_argument("--out", default=None, help="write a coefficient bundle here")
    p.add_argument("--base", default=None, help="existing bundle to extend")
    p.set_defaults(func=cmd_fit_loss)

    p = sub.add_parser("predict", help="predict final loss for a shape under a time budget")
    _add_shape_args(p)
    p.add_argument("--coeffs", required=True, help="coefficient bundle path")
    _add_budget_args(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("estimate-data", help="steps and tokens reachable within the budget")
    _add_shape_args(p)
    p.add_argument("--coeffs", required=True, help="coefficient bundle path")
    _add_budget_args(p)
    p.set_defaults(func=cmd_estimate_data)

    p = sub.add_parser("grad-field", help="projected descent arrows over a 2-D grid")
    p.add_argument("--axes", required=True, help="two free axes, e.g. n,w")
    p.add_argument("--grid", required=True, help="two lo:hi:count specs, e.g. 1:8:8,256:8192:16")
    p.add_argument("--fixed", required=True, help="remaining components, e.g. d=256,h=4,s=512,v=8000")
    p.add_argument("--coeffs", required=True, help="coefficient bundle path")
    _add_budget_args(p)
    p.set_defaults(func=cmd_grad_field)

    p = sub.add_parser("optimize", help="constant-params descent from a starting point")
    p.add_argument("--start", required=True, help="all six components, e.g. d=256,n=4,w=1024,h=4,s=512,v=8000")
    p.add_argument("--step", type=float, default=1.0, help="descent step size")
    p.add_argument("--iters", type=int, default=20, help="max descent iterations")
    p.add_argument("--coeffs", required=True, help="coefficient bundle path")
    _add_budget_args(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("simulate", help="generate a synthetic run CSV from a truth bundle")
    p.add_argument("--coeffs", required=True, help="bundle with time, law and budget (the truth)")
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--sigma", type=float, default=0.0, help="lognormal noise scale")
    p.add_argument("--s", type=int, default=512, help="sequence length")
    p.add_argument("--v", type=int, default=8000, help="vocabulary size")
    p.add_argument("--out", default=None, help="write CSV here instead of stdout")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("eval", help="calibration of predicted vs measured loss on a run CSV")
    p.add_argument("--runs", required=True, help="run CSV path")
    p.add_argument("--coeffs", required=True, help="coefficient bundle path")
    _add_budget_args(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("split", help="deterministic train/holdout assignment")
    p.add_argument("--runs", required=True, help="run CSV path")
    p.add_argument("--fraction", type=float, required=True, help="holdout fraction in (0,1)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-train", default=None, help="write the train subset here")
    p.add_argument("--out-holdout", default=None, help="write the holdout subset here")
    p.set_defaults(func=cmd_split)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BundleFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
