"""Command-line interface.

Commands: threshold, search, witness, nondisturb, mc-check. Reports are JSON
(12 significant digits, sorted keys, so identical flags and seed give byte
identical output) or CSV with '.' decimals; exit codes are 0 success, 2 input
error, 3 solver failure, 4 enumeration guard. All randomness derives from the
--seed flag through named substreams; randomized commands refuse to run
without it. CLASSICALITY_THREADS caps strategy-enumeration parallelism.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import (
    linalg,
    measurements,
    models,
    nondisturbance,
    thresholds,
    witness,
)
from .errors import SolverFailure, StrategyOverflowError, ValidationError
from .rng import substream


def _round12(x):
    if isinstance(x, float):
        return float(f"{x:.12g}")
    if isinstance(x, dict):
        return {k: _round12(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_round12(v) for v in x]
    return x


def _emit(report: dict, path: str | None) -> None:
    text = json.dumps(_round12(report), indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_csv(header, rows, path: str | None) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(f"{v:.12g}" for v in row) for row in rows)
    text = "\n".join(lines) + "\n"
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _parse_grid(spec: str) -> np.ndarray:
    try:
        start, stop, step = (float(p) for p in spec.split(":"))
    except ValueError as exc:
        raise ValidationError(f"curve grid must be start:stop:step, got {spec!r}") from exc
    if step <= 0 or stop < start:
        raise ValidationError(f"bad curve grid {spec!r}")
    return np.arange(start, stop + step / 2, step)


def _load_set(args) -> measurements.MeasurementSet:
    if args.input:
        return measurements.load_measurement_set(args.input)
    family = args.family
    if family == "mub":
        if args.d is None or args.count is None:
            raise ValidationError("--family mub requires --d and --count")
        return measurements.mub_set(args.d, args.count)
    if family == "sic5":
        return measurements.sic_five_tetrahedra()
    if family == "sic":
        return measurements.qubit_sic()
    if family == "trine":
        return measurements.MeasurementSet([measurements.trine().outcomes])
    raise ValidationError("provide --input FILE or --family {mub,sic5,sic,trine}")


def _build_ensemble(args, mset) -> list:
    if args.n_lambda > 0 and args.seed is None:
        raise ValidationError("--seed is required when --n-lambda > 0")
    rng = substream(args.seed, "ensemble") if args.seed is not None else None
    return models.default_ensemble(mset, args.n_lambda, rng)


def cmd_threshold(args) -> int:
    v_star = thresholds.classicality_threshold(args.d)
    if args.curve is None:
        if args.format == "json":
            _emit({"d": args.d, "v_star": v_star}, args.output)
        else:
            out = f"v*(d={args.d}) = {v_star:.12g}\n"
            if args.output:
                with open(args.output, "w", encoding="utf-8") as fh:
                    fh.write(out)
            else:
                sys.stdout.write(out)
        return 0
    points = thresholds.loss_noise_curve(args.d, _parse_grid(args.curve))
    if args.plot:
        from . import plotting

        plotting.save_loss_noise_figure(points, args.plot, args.d)
    if args.format == "json":
        _emit(
            {
                "d": args.d,
                "v_star": v_star,
                "curve": [
                    {"t": p.t, "v": p.visibility, "eta": p.efficiency} for p in points
                ],
            },
            args.output,
        )
    else:
        _emit_csv(("t", "v", "eta"), [(p.t, p.visibility, p.efficiency) for p in points], args.output)
    return 0


def cmd_search(args) -> int:
    mset = _load_set(args)
    ensemble = _build_ensemble(args, mset)
    v_star, model = models.search_classical_model(mset, ensemble)
    residual = models.reconstruction_residual(model, mset)
    report = {
        "v_star": v_star,
        "residual": residual,
        "n_lambda": args.n_lambda,
        "devices_kept": len(model.unitaries),
        "model_path": args.model_out,
    }
    if args.model_out:
        models.save_model(model, args.model_out)
    _emit(report, args.output)
    return 0


def cmd_witness(args) -> int:
    mset = _load_set(args)
    if args.spec:
        with open(args.spec, "r", encoding="utf-8") as fh:
            spec = witness.witness_spec_from_json(json.load(fh), mset)
    else:
        spec = witness.state_discrimination_spec(mset)
    value = witness.witness_value(spec, mset)
    scores = witness.score_operators(spec)
    beta, _ = witness.classical_bound(scores)
    v_crit, violated = witness.critical_visibility(spec, mset, beta)
    report = {
        "witness_value": value,
        "classical_bound": beta,
        "bound_kind": "exact-qubit" if mset.dim == 2 else "sdp-relaxation",
        "critical_visibility": v_crit,
        "violated": violated,
        "verdict": "VIOLATED" if violated else "NOT VIOLATED",
    }
    _emit(report, args.output)
    return 0


def cmd_nondisturb(args) -> int:
    mset = _load_set(args)
    if args.x_b is None:
        args.x_b = 2 if mset.n_settings >= 2 else 1
    x_a, x_b = args.x_a - 1, args.x_b - 1
    if not (0 <= x_a < mset.n_settings and 0 <= x_b < mset.n_settings):
        raise ValidationError(
            f"settings must be in [1, {mset.n_settings}], got {args.x_a}, {args.x_b}"
        )
    report: dict = {"setting_first": args.x_a, "setting_second": args.x_b}
    verdicts = []

    if args.direct:
        first = list(mset.table[x_a])
        second = list(mset.table[x_b])
        scenario = nondisturbance.SequentialScenario(
            weights=np.array([1.0]),
            first_devices=[first],
            second_devices=[second],
            target_first=first,
            target_second=second,
        )
        report["classical_model_found"] = False
        model = None
    else:
        if args.model:
            model = models.load_model(args.model)
            v_star = model.visibility
        else:
            ensemble = _build_ensemble(args, mset)
            v_star, model = models.search_classical_model(mset, ensemble)
        report["classical_model_found"] = True
        report["v_star"] = v_star
        scenario = nondisturbance.scenario_from_model(model, x_a, x_b)

    residual = nondisturbance.luders_residual(scenario)
    report["luders_residual"] = residual
    if residual > nondisturbance.LUDERS_DISTURBANCE_THRESHOLD:
        verdicts.append("Lüders-disturbing")
    else:
        verdicts.append("Lüders-non-disturbing (verified numerically)")

    if model is not None:
        _, marg = nondisturbance.jm_parent(model, mset)
        report["jm_marginal_residual"] = float(marg.max())
        verdicts.append("jointly measurable via parent POVM")

    if args.extend:
        povm = mset.setting(x_a)
        report["extended_residual"] = nondisturbance.extended_instrument_residual(povm)
        report["extended_dim"] = len(povm) + povm.dim
        verdicts.append("direct-sum extension exactly non-disturbing")

    report["verdicts"] = verdicts
    _emit(report, args.output)
    return 0


def cmd_mc_check(args) -> int:
    rng = substream(args.seed, "monte-carlo")
    mean, stderr = linalg.max_component_statistic(args.d, args.samples, rng)
    expected = thresholds.harmonic_number(args.d) / args.d
    z = 0.0 if stderr == 0.0 else (mean - expected) / stderr
    _emit(
        {
            "d": args.d,
            "samples": args.samples,
            "mean": mean,
            "stderr": stderr,
            "expected": expected,
            "z": z,
        },
        args.output,
    )
    return 0


def _add_set_source(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", help="measurement-set JSON file")
    p.add_argument(
        "--family", choices=("mub", "sic5", "sic", "trine"), help="builtin family"
    )
    p.add_argument("--d", type=int, help="dimension (mub family)")
    p.add_argument("--count", type=int, help="number of bases (mub family)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="classim",
        description="Classical simulability of quantum measurement sets.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("threshold", help="all-projective classicality threshold and loss curve")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--curve", help="t grid as start:stop:step")
    p.add_argument("--plot", help="also render the curve to this image file")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output")
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("search", help="LP search for a classical model")
    _add_set_source(p)
    p.add_argument("--n-lambda", type=int, default=0, help="random devices to add")
    p.add_argument("--seed", type=int)
    p.add_argument("--model-out", help="write the model JSON here")
    p.add_argument("--output")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("witness", help="witness value, classical bound, critical visibility")
    _add_set_source(p)
    p.add_argument("--spec", help="witness spec JSON (default: state discrimination)")
    p.add_argument("--output")
    p.set_defaults(func=cmd_witness)

    p = sub.add_parser("nondisturb", help="Lüders and joint-measurability report")
    _add_set_source(p)
    p.add_argument("--x-a", type=int, default=1, help="first setting (1-based)")
    p.add_argument(
        "--x-b", type=int, help="second setting (1-based; default 2, or 1 if only one setting)"
    )
    p.add_argument("--model", help="load a model JSON instead of searching")
    p.add_argument("--n-lambda", type=int, default=0)
    p.add_argument("--seed", type=int)
    p.add_argument(
        "--direct",
        action="store_true",
        help="evaluate the targets as a single-device scenario (no shared randomness)",
    )
    p.add_argument("--extend", action="store_true", help="also test the direct-sum extension")
    p.add_argument("--output")
    p.set_defaults(func=cmd_nondisturb)

    p = sub.add_parser("mc-check", help="Haar Monte-Carlo check of the harmonic statistic")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--output")
    p.set_defaults(func=cmd_mc_check)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except StrategyOverflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except SolverFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValidationError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
