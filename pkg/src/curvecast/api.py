import dataclasses
from io import StringIO

from django.core.management import call_command

from curvecast.management.commands.curvecast import Command as CurvecastCommand


@dataclasses.dataclass
class ForecastResult:
    """Outcome of :func:`forecast`.

    Attributes:
        b1: Fitted learning-rate parameter (<= 0).
        b2: Fitted decay-rate parameter (< 0).
        weighted_sse: Weighted sum of squared residuals at the fit.
        converged: Whether the solver met its stopping rule.
        predictions: Mapping of training size to predicted accuracy.
        required_size: Whole samples per class needed for *target*, if given.
        required_size_real: Unrounded required size, if *target* was given.
        size_interval: Bootstrap (low, high) interval of the required size.
        report: The full JSON report as a dict.
    """

    b1: float
    b2: float
    weighted_sse: float
    converged: bool
    predictions: dict[float, float] = dataclasses.field(default_factory=dict)
    required_size: int | None = None
    required_size_real: float | None = None
    size_interval: tuple[int, int] | None = None
    report: dict = dataclasses.field(default_factory=dict)


def forecast(
    path,
    *,
    target=None,
    at=None,
    weights=None,
    class_label=None,
    per_replicate=False,
    bootstrap=None,
    seed=0,
):
    """Fit a learning curve from an observations CSV and extrapolate it.

    This is the public Python API for curvecast. It runs the same code path as
    ``curvecast predict`` (or ``curvecast fit`` when neither *target* nor *at*
    is given) and returns the parsed report.

    Args:
        path: Observations CSV (``size,accuracy[,class][,repetition]``).
        target: Target accuracy in percent; adds the required training size.
        at: Size or list of sizes at which to predict accuracy.
        weights: ``"uniform"``, ``"inverse-variance"`` or a list of per-size
            weights in ascending size order. Defaults to
            ``settings.CURVECAST_WEIGHT_SCHEME``, then to inverse-variance when
            the file has replicates and uniform otherwise.
        class_label: Class to fit; defaults to the pooled ``AverageTotal``.
        per_replicate: Fit one point per replicate instead of per-size means.
        bootstrap: Number of bootstrap refits for percentile intervals.
        seed: Bootstrap seed.

    Returns:
        ForecastResult

    Raises:
        django.core.management.base.CommandError: On invalid input, an
            unreachable target or a fit that did not converge, with the CLI's
            exit code in ``returncode``.

    Examples::

        from curvecast import forecast

        result = forecast("accuracy.csv", target=99.5, at=[1000])
        print(f"Need {result.required_size} images per class")
    """
    args = [str(path)]
    if weights is not None:
        if isinstance(weights, (list, tuple)):
            weights = ",".join(repr(float(w)) for w in weights)
        args += ["--weights", str(weights)]
    if class_label is not None:
        args += ["--class", class_label]
    if per_replicate:
        args.append("--per-replicate")

    if at is not None and not isinstance(at, (list, tuple)):
        at = [at]
    predicting = target is not None or bool(at)
    if predicting:
        if at:
            args += ["--at", ",".join(repr(float(x)) for x in at)]
        if target is not None:
            args += ["--target", repr(float(target))]
        if bootstrap is not None:
            args += ["--bootstrap", str(bootstrap), "--seed", str(seed)]
    elif bootstrap is not None:
        raise ValueError("bootstrap needs a target or at least one size in at.")

    cmd = CurvecastCommand()
    call_command(
        cmd, "predict" if predicting else "fit", *args, stdout=StringIO()
    )
    report = cmd._report
    size = report.get("required_size") or {}
    interval = size.get("interval")
    return ForecastResult(
        b1=report["params"]["b1"],
        b2=report["params"]["b2"],
        weighted_sse=report["weighted_sse"],
        converged=report["converged"],
        predictions={p["x"]: p["accuracy"] for p in report["predictions"]},
        required_size=size.get("int"),
        required_size_real=size.get("real"),
        size_interval=tuple(interval) if interval else None,
        report=report,
    )
