"""Command-line front end for the age-schedule component model pipeline.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import cluster as cluster_mod
from . import io, linalg, measures, regress, schedule
from .errors import DataError, NumericalError


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _require_inputs(paths, concat):
    if concat and len(paths) != 2:
        raise _UsageError("--concat-sexes needs exactly two inputs (female male)")
    if not concat and len(paths) != 1:
        raise _UsageError("expected one input file (or two with --concat-sexes)")
    for p in paths:
        if not Path(p).exists():
            raise DataError(f"input file not found: {p}")


def _load_matrix(paths, log, concat) -> schedule.ScheduleMatrix:
    _require_inputs(paths, concat)
    matrices = [io.load_schedule_csv(p, log=log) for p in paths]
    if concat:
        return schedule.concat_sexes(matrices[0], matrices[1])
    return matrices[0]


def _components_arg(args, matrix, default=None) -> int:
    if getattr(args, "full", False):
        return linalg.svd(matrix.data).rank
    c = args.components if args.components is not None else default
    if c is None:
        raise _UsageError("--components is required (or --full where supported)")
    if c < 1:
        raise _UsageError("--components must be >= 1")
    return c


def _cmd_decompose(args):
    matrix = _load_matrix(args.inputs, args.log, args.concat_sexes)
    c = _components_arg(args, matrix, default=2)
    basis = schedule.build_basis(matrix, c, source_id=args.source_id)
    Path(args.out).write_text(io.basis_to_json(basis), encoding="utf-8")
    if args.weights:
        io.write_weights_csv(
            matrix.schedule_labels, schedule.svd_weights(matrix, c), args.weights
        )
    shares = linalg.explained_share(linalg.svd(matrix.data))[:c]
    print(
        f"decomposed {matrix.data.shape[0]}x{matrix.data.shape[1]} matrix; "
        f"kept {c} components explaining {100 * shares.sum():.4f}% of squared magnitude"
    )


def _cmd_reconstruct(args):
    basis = io.basis_from_json(Path(args.basis).read_text(encoding="utf-8"))
    labels, weights = io.load_weights_csv(args.weights)
    if weights.shape[1] != basis.c:
        raise DataError(
            f"weights have {weights.shape[1]} components, basis has {basis.c}"
        )
    data = np.column_stack(
        [schedule.reconstruct(basis, weights[i]).values for i in range(len(labels))]
    )
    out = schedule.ScheduleMatrix(basis.group_labels, labels, data, basis.scale)
    io.write_schedule_csv(out, args.out)


def _cmd_smooth(args):
    matrix = _load_matrix(args.inputs, args.log, args.concat_sexes)
    c = _components_arg(args, matrix)
    io.write_schedule_csv(schedule.smooth_matrix(matrix, c), args.out)


def _cmd_fit(args):
    matrix = _load_matrix(args.inputs, args.log, args.concat_sexes)
    basis = io.basis_from_json(Path(args.basis).read_text(encoding="utf-8"))
    fits = [
        schedule.fit_weights(matrix.column(label), basis)
        for label in matrix.schedule_labels
    ]
    weights = np.vstack([f.betas for f in fits])
    io.write_weights_csv(
        matrix.schedule_labels,
        weights,
        args.out,
        residual_norms=[f.residual_norm for f in fits],
    )


def _cmd_regress(args):
    labels, weights = io.load_weights_csv(args.weights)
    covariates = io.load_covariates_csv(args.covariates)
    if tuple(labels) != covariates.labels:
        raise DataError("weight labels and covariate labels do not match")
    predictors = [p.strip() for p in args.predictors.split(",") if p.strip()]
    if not predictors:
        raise _UsageError("--predictors must name at least one covariate column")
    models = regress.fit_weight_models(weights, covariates, predictors)
    Path(args.out).write_text(io.models_to_json(models), encoding="utf-8")
    for i, model in enumerate(models):
        terms = ", ".join(
            f"{name}={coef:.6g}"
            for name, coef in zip(
                ("intercept", *model.predictor_names), model.coefficients
            )
        )
        print(f"v{i + 1}: {terms}; R^2={model.r_squared:.4f}")


def _cmd_predict(args):
    basis = io.basis_from_json(Path(args.basis).read_text(encoding="utf-8"))
    models = io.models_from_json(Path(args.models).read_text(encoding="utf-8"))
    covariates = io.load_covariates_csv(args.covariates)
    needs_delta = any("delta" in m.predictor_names for m in models)
    if needs_delta:
        covariates = covariates.with_delta()
    columns = [
        regress.predict_schedule(basis, models, covariates.row(label)).values
        for label in covariates.labels
    ]
    out = schedule.ScheduleMatrix(
        basis.group_labels, covariates.labels, np.column_stack(columns), basis.scale
    )
    io.write_schedule_csv(out, args.out)


def _parse_k_range(text):
    try:
        if ":" in text:
            lo, hi = text.split(":")
            ks = range(int(lo), int(hi) + 1)
        else:
            ks = [int(text)]
    except ValueError:
        raise _UsageError(f"bad --k-range {text!r}, expected K or LO:HI") from None
    if not ks or min(ks) < 1:
        raise _UsageError("--k-range must cover k >= 1")
    return ks


def _cmd_cluster(args):
    labels, weights = io.load_weights_csv(args.weights)
    families = cluster_mod.FAMILIES if args.family == "all" else (args.family,)
    model = cluster_mod.select_by_bic(
        weights, _parse_k_range(args.k_range), families, seed=args.seed
    )
    assignment = cluster_mod.assign(model, weights)
    payload = {
        "family": model.family,
        "k": model.k,
        "bic": io.fmt_number(model.bic),
        "log_likelihood": io.fmt_number(model.log_likelihood),
        "mixing_weights": [io.fmt_number(w) for w in model.mixing_weights],
        "means": [[io.fmt_number(v) for v in row] for row in model.means],
        "labels": {label: int(lab) for label, lab in zip(labels, assignment.labels)},
    }
    if args.format == "json":
        Path(args.out).write_text(json.dumps(payload, indent=2), encoding="utf-8")
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("schedule,cluster\n")
            for label, lab in zip(labels, assignment.labels):
                fh.write(f"{label},{int(lab)}\n")
    print(f"selected {model.family} mixture with k={model.k} (BIC {model.bic:.2f})")


def _cmd_metrics(args):
    predicted = io.load_schedule_csv(args.predicted)
    observed = io.load_schedule_csv(args.observed, log=args.log)
    if predicted.scale != observed.scale:
        predicted = schedule.ScheduleMatrix(
            predicted.group_labels, predicted.schedule_labels,
            predicted.data, observed.scale,
        )
    m = schedule.error_metrics(predicted, observed)
    if args.format == "json":
        text = json.dumps(
            {
                "mae": io.fmt_number(m.mae),
                "quantiles": {
                    f"p{int(100 * p)}": io.fmt_number(q) for p, q in zip(m.probs, m.quantiles)
                },
            },
            indent=2,
        )
    else:
        header = "mae," + ",".join(f"p{int(100 * p)}" for p in m.probs)
        text = header + "\n" + ",".join([io.fmt_number(m.mae), *(io.fmt_number(q) for q in m.quantiles)])
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def image_rank_approx(in_path, k: int, out_path) -> None:
    """Truncate each RGB channel of a PPM image to rank k."""
    pixels, magic = io.read_ppm(in_path)
    out = np.empty_like(pixels)
    for ch in range(3):
        f = linalg.svd(pixels[:, :, ch])
        out[:, :, ch] = linalg.reconstruct_rank(f, min(k, f.rank))
    io.write_ppm(out, out_path, magic)


def _cmd_image(args):
    if not Path(args.input).exists():
        raise DataError(f"input file not found: {args.input}")
    if args.components < 1:
        raise _UsageError("--components must be >= 1")
    image_rank_approx(args.input, args.components, args.out)


def _parse_age_start(label: str) -> float:
    text = label.strip().rstrip("+")
    text = text.split("-")[0]
    try:
        return float(text)
    except ValueError:
        raise DataError(f"cannot parse age-group label {label!r}") from None


def _cmd_lifetable(args):
    matrix = io.load_schedule_csv(args.input)
    label = args.column if args.column else matrix.schedule_labels[0]
    mx = matrix.column(label)
    starts = [_parse_age_start(g) for g in matrix.group_labels]
    lt = measures.life_table_from_mx(mx, starts)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("age,mx,ax,qx,lx,Lx,Tx,ex\n")
        for i, g in enumerate(matrix.group_labels):
            cells = [g] + [
                io.fmt_number(v[i])
                for v in (lt.mx, lt.ax, lt.qx, lt.lx, lt.Lx, lt.Tx, lt.ex)
            ]
            fh.write(",".join(cells) + "\n")
    print(f"life expectancy at birth for {label!r}: {lt.e0:.2f} years")


def _cmd_plot(args):
    rows = io._read_rows(args.input)
    x = np.array([io._parse_cell(args.input, rows, r, 0) for r in range(1, len(rows))])
    series = []
    for c, name in enumerate(rows[0][1:], start=1):
        y = np.array([io._parse_cell(args.input, rows, r, c) for r in range(1, len(rows))])
        series.append((name.strip(), x, y))
    svg = io.render_plot(series, kind=args.kind, x_label=rows[0][0], y_label="")
    Path(args.out).write_text(svg, encoding="utf-8")


def _build_parser() -> _Parser:
    parser = _Parser(prog="agecomp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def matrix_input(p, multi=True):
        p.add_argument("inputs", nargs="+" if multi else 1, help="schedule CSV file(s)")
        p.add_argument("--log", action="store_true", help="log-transform on load")
        p.add_argument(
            "--concat-sexes", action="store_true",
            help="stack two inputs (female male) into one matrix",
        )

    p = sub.add_parser("decompose", help="build a component basis from schedules")
    matrix_input(p)
    p.add_argument("--components", "-c", type=int, help="component count (default 2)")
    p.add_argument("--full", action="store_true", help="keep all components")
    p.add_argument("--source-id", default="")
    p.add_argument("--out", required=True, help="basis JSON path")
    p.add_argument("--weights", help="also write the per-schedule weight CSV here")
    p.set_defaults(func=_cmd_decompose)

    p = sub.add_parser("reconstruct", help="rebuild schedules from basis + weights")
    p.add_argument("--basis", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser("smooth", help="replace schedules by low-rank reconstructions")
    matrix_input(p)
    p.add_argument("--components", "-c", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_smooth)

    p = sub.add_parser("fit", help="fit basis weights to observed schedules")
    matrix_input(p)
    p.add_argument("--basis", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("regress", help="model weight series on covariates")
    p.add_argument("--weights", required=True)
    p.add_argument("--covariates", required=True)
    p.add_argument("--predictors", required=True, help="comma-separated column names")
    p.add_argument("--out", required=True, help="models JSON path")
    p.set_defaults(func=_cmd_regress)

    p = sub.add_parser("predict", help="predict schedules from covariates")
    p.add_argument("--basis", required=True)
    p.add_argument("--models", required=True)
    p.add_argument("--covariates", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("cluster", help="cluster schedules by their weights")
    p.add_argument("--weights", required=True)
    p.add_argument("--k-range", default="1:6")
    p.add_argument("--family", default="all", choices=("all", *cluster_mod.FAMILIES))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--format", default="json", choices=("json", "csv"))
    p.set_defaults(func=_cmd_cluster)

    p = sub.add_parser("metrics", help="absolute-error summary of two matrices")
    p.add_argument("predicted")
    p.add_argument("observed")
    p.add_argument("--log", action="store_true", help="log-transform the observed file")
    p.add_argument("--format", default="json", choices=("json", "csv"))
    p.add_argument("--out")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("image", help="rank-k approximation of a PPM image")
    p.add_argument("input")
    p.add_argument("--components", "-c", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_image)

    p = sub.add_parser("lifetable", help="abridged life table from mortality rates")
    p.add_argument("input")
    p.add_argument("--column", help="schedule label to use (default: first)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_lifetable)

    p = sub.add_parser("plot", help="render a CSV of series to SVG")
    p.add_argument("input")
    p.add_argument("--kind", default="line", choices=("line", "scatter"))
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_plot)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
