import json
import logging
from contextlib import contextmanager
from dataclasses import replace

from django.core.management.base import BaseCommand, CommandError

from curvecast.charts import render_report
from curvecast.curve_model import CurveParams
from curvecast.exceptions import (
    BootstrapFailureError,
    CurvecastError,
    FlatCurveError,
    ObservationParseError,
    UnreachableTargetError,
)
from curvecast.experiments import (
    AVERAGE_TOTAL,
    aggregate,
    materialize_weights,
    parse_observations,
    to_csv,
)
from curvecast.predictor import (
    bootstrap,
    fit_report,
    required_size,
    validate_holdout,
    with_interval,
)
from curvecast.synthlab import SynthSpec, generate
from curvecast.utils import (
    check_readable,
    check_writable,
    get_bootstrap_workers,
    get_fit_options,
    is_color_disabled,
    parse_number_list,
)
from curvecast.weights import get_weight_scheme
from curvecast.wnls_fit import fit

logger = logging.getLogger(__name__)

EXIT_INPUT = 2
EXIT_NOT_CONVERGED = 3
EXIT_UNREACHABLE = 4

MAX_SEED = 2**64 - 1


@contextmanager
def handle_model_errors():
    """Convert curvecast library exceptions into CommandErrors with exit codes."""
    try:
        yield
    except ObservationParseError as e:
        raise CommandError(
            f"Invalid observations file, {e}", returncode=EXIT_INPUT
        ) from e
    except (UnreachableTargetError, FlatCurveError) as e:
        raise CommandError(str(e), returncode=EXIT_UNREACHABLE) from e
    except BootstrapFailureError as e:
        raise CommandError(str(e), returncode=EXIT_NOT_CONVERGED) from e
    except CurvecastError as e:
        raise CommandError(str(e), returncode=EXIT_INPUT) from e


def _seed(value):
    try:
        seed = int(value)
    except ValueError:
        raise CommandError(
            f"--seed expects an unsigned 64-bit integer, got '{value}'.",
            returncode=EXIT_INPUT,
        ) from None
    if not 0 <= seed <= MAX_SEED:
        raise CommandError(
            f"--seed expects an unsigned 64-bit integer, got {seed}.",
            returncode=EXIT_INPUT,
        )
    return seed


def _holdout_pair(value):
    size, sep, accuracy = value.partition(":")
    try:
        if not sep:
            raise ValueError(value)
        return float(size), float(accuracy)
    except ValueError:
        raise CommandError(
            f"--holdout expects SIZE:ACCURACY, got '{value}'.", returncode=EXIT_INPUT
        ) from None


class Command(BaseCommand):
    help = (
        "Fit learning curves to classifier accuracy measurements, predict the "
        "training size needed for a target accuracy, and simulate experiments."
    )

    def add_arguments(self, parser):
        subparsers = parser.add_subparsers(
            dest="subcommand", required=True, metavar="SUBCOMMAND"
        )

        fit_parser = subparsers.add_parser(
            "fit", help="Fit the learning curve and print parameters and residuals."
        )
        self._add_model_arguments(fit_parser)
        fit_parser.add_argument(
            "--all-classes",
            action="store_true",
            help="Fit every class and the pooled AverageTotal view separately.",
        )

        predict_parser = subparsers.add_parser(
            "predict",
            help="Predict accuracy at given sizes or the size for a target accuracy.",
        )
        self._add_model_arguments(predict_parser)
        self._add_prediction_arguments(predict_parser)
        predict_parser.add_argument(
            "--holdout",
            action="append",
            default=[],
            metavar="SIZE:ACCURACY",
            help="Compare the prediction with an accuracy measured at a held-out "
            "size. Can be used multiple times.",
        )

        report_parser = subparsers.add_parser(
            "report", help="Write an SVG plot of the fit and print the JSON report."
        )
        self._add_model_arguments(report_parser)
        self._add_prediction_arguments(report_parser)
        report_parser.add_argument(
            "--svg", required=True, metavar="PATH", help="Path of the SVG plot."
        )
        report_parser.add_argument("--title", help="Title drawn above the plot.")

        summarize_parser = subparsers.add_parser(
            "summarize",
            help="Print per-size class means, overall mean and replicate spread.",
        )
        summarize_parser.add_argument("input", help="Observations CSV file.")
        self._add_format_argument(summarize_parser)

        simulate_parser = subparsers.add_parser(
            "simulate", help="Generate synthetic replicated observations as CSV."
        )
        simulate_parser.add_argument("--b1", type=float, required=True)
        simulate_parser.add_argument("--b2", type=float, required=True)
        simulate_parser.add_argument(
            "--sizes",
            required=True,
            help="Comma-separated training sizes per class, e.g. 5,10,20,50.",
        )
        simulate_parser.add_argument(
            "--reps", type=int, default=10, help="Replicates per size (default: 10)."
        )
        simulate_parser.add_argument(
            "--noise-a",
            type=float,
            default=0.0,
            help="Noise scale a in sigma(x) = a * x^-c, in percent (default: 0).",
        )
        simulate_parser.add_argument(
            "--noise-c",
            type=float,
            default=0.0,
            help="Noise exponent c in sigma(x) = a * x^-c (default: 0).",
        )
        simulate_parser.add_argument("--seed", default="0")
        simulate_parser.add_argument(
            "--output", metavar="PATH", help="Write the CSV here instead of stdout."
        )

    def _add_model_arguments(self, parser):
        parser.add_argument("input", help="Observations CSV file.")
        parser.add_argument(
            "--class",
            dest="class_label",
            metavar="LABEL",
            help=f"Class to fit (default: {AVERAGE_TOTAL}, the pooled view).",
        )
        parser.add_argument(
            "--weights",
            help="'uniform', 'inverse-variance' or one weight per size in "
            "ascending size order, e.g. 1,1,1,1,100,150.",
        )
        parser.add_argument(
            "--variance-floor",
            type=float,
            help="Variance floor for inverse-variance weights.",
        )
        parser.add_argument(
            "--per-replicate",
            action="store_true",
            help="Fit one point per replicate instead of one per size mean.",
        )
        parser.add_argument("--max-iterations", type=int)
        parser.add_argument("--tolerance", type=float, help="Relative SSE tolerance.")
        self._add_format_argument(parser)

    def _add_prediction_arguments(self, parser):
        parser.add_argument(
            "--at",
            action="append",
            default=[],
            metavar="SIZES",
            help="Size(s) at which to predict accuracy, comma-separated. "
            "Can be used multiple times.",
        )
        parser.add_argument(
            "--target", type=float, help="Target accuracy in percent, below 100."
        )
        parser.add_argument(
            "--bootstrap",
            type=int,
            metavar="B",
            help="Add percentile intervals from B bootstrap refits.",
        )
        parser.add_argument("--seed", default="0", help="Bootstrap seed (default: 0).")

    def _add_format_argument(self, parser):
        parser.add_argument(
            "--format",
            choices=["json", "table"],
            default="json",
            help="Output format (default: json).",
        )

    def execute(self, *args, **options):
        if is_color_disabled():
            options["no_color"] = True
        return super().execute(*args, **options)

    def handle(self, *args, **options):
        if options["verbosity"] >= 3:
            logging.getLogger("curvecast").setLevel(logging.DEBUG)

        self._report = None
        subcommand = options["subcommand"]
        logger.debug("Running curvecast %s", subcommand)
        handler = getattr(self, f"handle_{subcommand}")
        handler(options)

    # Subcommands

    def handle_fit(self, options):
        observations = self._load(options)
        if options["all_classes"]:
            labels = [label for label in observations.classes if label is not None]
            if len(labels) > 1:
                labels.append(AVERAGE_TOTAL)
            elif not labels:
                labels = [AVERAGE_TOTAL]
            reports = {}
            for label in labels:
                _, scheme, result = self._fit(observations, label, options)
                reports[label] = fit_report(result, class_label=label, scheme=scheme)
            self._report = reports
            self._emit_many(reports, options)
            self._check_converged(reports.values())
            return

        series, scheme, result = self._fit(
            observations, options["class_label"], options
        )
        report = fit_report(
            result, class_label=self._label(series, options), scheme=scheme
        )
        self._report = report
        self._emit(report, options)
        self._check_converged([report])

    def handle_predict(self, options):
        if not options["at"] and options["target"] is None:
            raise CommandError(
                "predict needs --at SIZES and/or --target ACCURACY.",
                returncode=EXIT_INPUT,
            )
        observations = self._load(options)
        series, scheme, result = self._fit(
            observations, options["class_label"], options
        )
        report = self._predict_report(series, scheme, result, options)
        if options["holdout"]:
            pairs = [_holdout_pair(value) for value in options["holdout"]]
            with handle_model_errors():
                report["holdout"] = [
                    check.as_dict() for check in validate_holdout(result, pairs)
                ]
        self._report = report
        self._emit(report, options)
        self._check_converged([report])

    def handle_report(self, options):
        svg_path = check_writable(options["svg"])
        observations = self._load(options)
        series, scheme, result = self._fit(
            observations, options["class_label"], options
        )
        report = self._predict_report(series, scheme, result, options)
        size_prediction = self._size_prediction
        with handle_model_errors():
            svg = render_report(
                series, result, size_prediction=size_prediction, title=options["title"]
            )
        svg_path.write_text(svg, encoding="utf-8", newline="\n")
        report["svg"] = str(svg_path)
        self._report = report
        self._emit(report, options)
        if options["format"] == "table":
            self.stdout.write(self.style.SUCCESS(f"Wrote plot to {svg_path}"))
        self._check_converged([report])

    def handle_summarize(self, options):
        observations = self._load(options)
        with handle_model_errors():
            table = aggregate(observations)
        self._report = table.as_dict()
        if options["format"] == "json":
            self.stdout.write(json.dumps(self._report, indent=2))
            return

        labels = [label for label in observations.classes if label is not None]
        header = ["size", *labels, AVERAGE_TOTAL, "std", "n"]
        rows = [
            [
                str(row.size),
                *(
                    f"{row.class_means[label]:.2f}" if label in row.class_means else "-"
                    for label in labels
                ),
                f"{row.overall_mean:.2f}",
                f"{row.std:.2f}",
                str(row.replicate_count),
            ]
            for row in table.rows
        ]
        self._write_table(header, rows)

    def handle_simulate(self, options):
        output = check_writable(options["output"]) if options["output"] else None
        sizes = parse_number_list(options["sizes"], "--sizes", cast=int)
        seed = _seed(options["seed"])
        with handle_model_errors():
            spec = SynthSpec(
                truth=CurveParams(options["b1"], options["b2"]),
                sizes=tuple(sizes),
                replicates_per_size=options["reps"],
                noise_scale=options["noise_a"],
                noise_exponent=options["noise_c"],
                seed=seed,
            )
            observations = generate(spec)
        text = to_csv(observations)
        self._report = {"csv": text}

        if output is None:
            self.stdout.write(text, ending="")
            return
        output.write_text(text, encoding="utf-8", newline="\n")
        count = sum(len(group.replicates) for group in observations.groups)
        self.stdout.write(
            self.style.SUCCESS(f"Wrote {count} observations to {output}")
        )

    # Helpers

    def _load(self, options):
        path = check_readable(options["input"])
        try:
            text = path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as e:
            raise CommandError(
                f"Could not read {path}: {e}", returncode=EXIT_INPUT
            ) from e
        with handle_model_errors():
            return parse_observations(text)

    def _fit_options(self, options):
        with handle_model_errors():
            fit_options = get_fit_options()
            overrides = {}
            if options["max_iterations"] is not None:
                overrides["max_iterations"] = options["max_iterations"]
            if options["tolerance"] is not None:
                overrides["relative_sse_tolerance"] = options["tolerance"]
            if overrides:
                fit_options = replace(fit_options, **overrides)
        return fit_options

    def _fit(self, observations, label, options):
        fit_options = self._fit_options(options)
        with handle_model_errors():
            series = observations.series(label or AVERAGE_TOTAL)
            scheme = get_weight_scheme(
                options["weights"], series, floor=options["variance_floor"]
            )
            weights = materialize_weights(
                series, scheme, per_replicate=options["per_replicate"]
            )
            x, t = series.pairs(per_replicate=options["per_replicate"])
            result = fit(x, t, weights, fit_options)
        if options["verbosity"] >= 2:
            self.stderr.write(
                f"Fitted {len(x)} points with {scheme.name} weights "
                f"in {result.iterations_used} iterations"
            )
        self._fit_options_used = fit_options
        return series, scheme, result

    def _label(self, series, options):
        return options["class_label"] or series.classes[0]

    def _predict_report(self, series, scheme, result, options):
        at = []
        for value in options["at"]:
            at.extend(parse_number_list(value, "--at"))
        seed = _seed(options["seed"])

        self._size_prediction = None
        bootstrap_report = None
        with handle_model_errors():
            if options["target"] is not None:
                self._size_prediction = required_size(result, options["target"])
            if options["bootstrap"] is not None:
                bootstrap_report = bootstrap(
                    series,
                    scheme,
                    self._fit_options_used,
                    target=options["target"],
                    replicates=options["bootstrap"],
                    seed=seed,
                    per_replicate=options["per_replicate"],
                    workers=get_bootstrap_workers(),
                )
                if self._size_prediction is not None:
                    self._size_prediction = with_interval(
                        self._size_prediction, bootstrap_report
                    )
            return fit_report(
                result,
                class_label=self._label(series, options),
                scheme=scheme,
                predictions=at,
                size_prediction=self._size_prediction,
                bootstrap_report=bootstrap_report,
            )

    def _check_converged(self, reports):
        failed = [report for report in reports if not report["converged"]]
        if failed:
            labels = ", ".join(
                str(report["class"] or AVERAGE_TOTAL) for report in failed
            )
            raise CommandError(
                f"Fit did not converge for {labels}; the report above holds the "
                "last accepted parameters. Try --max-iterations or --tolerance.",
                returncode=EXIT_NOT_CONVERGED,
            )

    # Output

    def _emit(self, report, options):
        if options["format"] == "json":
            self.stdout.write(json.dumps(report, indent=2))
        else:
            self._write_report_table(report)

    def _emit_many(self, reports, options):
        if options["format"] == "json":
            self.stdout.write(json.dumps(reports, indent=2))
            return
        for index, report in enumerate(reports.values()):
            if index:
                self.stdout.write("")
            self._write_report_table(report)

    def _write_table(self, header, rows):
        columns = zip(header, *rows, strict=True)
        widths = [max(len(cell) for cell in column) for column in columns]

        def line(cells):
            pairs = zip(cells, widths, strict=True)
            return "  ".join(cell.rjust(width) for cell, width in pairs)

        self.stdout.write(self.style.MIGRATE_HEADING(line(header)))
        for row in rows:
            self.stdout.write(line(row))

    def _write_report_table(self, report):
        params = report["params"]
        if report["class"]:
            self.stdout.write(self.style.NOTICE(f"Class: {report['class']}"))
        self.stdout.write(f"Weights: {report['weights']['scheme']}")
        self.stdout.write(f"b1 = {params['b1']:.6f}   b2 = {params['b2']:.6f}")
        self.stdout.write(f"Weighted SSE: {report['weighted_sse']:.6f}")
        if report["converged"]:
            self.stdout.write(
                self.style.SUCCESS(f"Converged in {report['iterations']} iterations")
            )
        else:
            self.stdout.write(
                self.style.ERROR(
                    f"Not converged after {report['iterations']} iterations"
                )
            )
        if report["condition_warning"]:
            self.stdout.write(
                self.style.WARNING("Near-singular normal equations were encountered")
            )

        self.stdout.write("")
        rows = [
            [
                f"{size:g}",
                f"{observed:.2f}",
                f"{observed - residual:.2f}",
                f"{residual:+.3f}",
                f"{weight:g}",
            ]
            for size, observed, residual, weight in zip(
                report["sizes"],
                report["observed"],
                report["residuals"],
                report["weights"]["values"],
                strict=True,
            )
        ]
        self._write_table(["size", "observed", "fitted", "residual", "weight"], rows)

        if report["predictions"]:
            self.stdout.write("")
            self._write_table(
                ["size", "predicted"],
                [
                    [f"{p['x']:g}", f"{p['accuracy']:.2f}"]
                    for p in report["predictions"]
                ],
            )

        size = report["required_size"]
        if size is not None:
            self.stdout.write("")
            line = (
                f"Required size for {size['target']:g}%: {size['int']:,} "
                f"({size['real']:.2f})"
            )
            if "interval" in size:
                low, high = size["interval"]
                line += f", 95% interval {low:,} to {high:,}"
            self.stdout.write(self.style.SUCCESS(line))
            if size["status"] != "ok":
                self.stdout.write(
                    self.style.WARNING("The required size is below one sample")
                )

        if "bootstrap" in report:
            boot = report["bootstrap"]
            b1_low, b1_high = boot["intervals"]["b1"]
            b2_low, b2_high = boot["intervals"]["b2"]
            self.stdout.write(
                f"Bootstrap (B={boot['B']}, seed={boot['seed']}): "
                f"b1 [{b1_low:.4f}, {b1_high:.4f}], b2 [{b2_low:.4f}, {b2_high:.4f}]"
            )
            if boot["failed_refits"]:
                self.stdout.write(
                    self.style.WARNING(f"{boot['failed_refits']} refits failed")
                )

        if "holdout" in report:
            self.stdout.write("")
            self._write_table(
                ["size", "observed", "predicted", "error"],
                [
                    [
                        f"{check['x']:g}",
                        f"{check['observed']:.2f}",
                        f"{check['predicted']:.2f}",
                        f"{check['error']:+.2f}",
                    ]
                    for check in report["holdout"]
                ],
            )
