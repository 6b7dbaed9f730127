"""Command-line front end.

Subcommands
-----------
estimate
    Hill tail-index estimate from a column of positive numbers.
ci
    Confidence interval (adaptive, wald, or score) on user data.
simulate
    Coverage/size study driven by a config file; writes csv/json/text.
power
    Rejection-frequency study against perturbed alternatives.

Data files carry one positive real per line; blank lines are ignored and
a ``.gz`` suffix triggers transparent decompression.  Negative inputs are
rejected unless ``--abs`` asks for the absolute-value transform.

Config files are ``key = value`` lines with ``#`` comments.  Experiment
keys: ``dist`` (e.g. ``pareto tau=1.0``), ``n``, ``replications``,
``alpha``, ``methods`` (comma-separated), ``b``, ``B``, ``xi``,
``cprime`` (number or ``heuristic``), ``seed``, ``beta_oracle`` (number
or ``inf``), ``convention`` (``last_reject`` or ``one_past``).
Power-study keys: ``tau``, ``beta0``, ``beta1``,
``cprime``, ``ns``, ``strengths``, ``replications``, ``alpha``,
``rho_mode``, ``seed``.  A missing ``seed`` falls back to the
``TAILADAPT_SEED`` environment variable, then 0.

Exit codes: 0 success, 2 data error, 64 usage error, 65 config error.
"""

from __future__ import annotations

import argparse
import gzip
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .adaptive import adaptive_ci, build_grid, estimate_beta, successive_tests
from .baselines import score_interval, wald_interval
from .distributions import PerturbedPareto, Pareto, make_distribution
from .empirics import TailSample, hill_inverse_index, sample_fraction
from .experiments import (
    METHODS,
    ExperimentConfig,
    PowerStudyConfig,
    emit_table,
    power_table,
    run_experiment,
    run_power_study,
)

EXIT_OK = 0
EXIT_DATA = 2
EXIT_USAGE = 64
EXIT_CONFIG = 65

_SEED_ENV = "TAILADAPT_SEED"


class DataError(Exception):
    pass


class ConfigError(Exception):
    pass


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # route argparse failures through our exit-code policy
    def error(self, message):
        raise _UsageError(message)


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not value > 0.0:
        raise argparse.ArgumentTypeError(f"must be positive, got {value}")
    return value


def _probability(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"must lie strictly in (0, 1), got {value}")
    return value


def _deviation_mode(text: str) -> float | None:
    if text.strip().lower() == "heuristic":
        return None
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected a positive number or 'heuristic', got {text!r}"
        )
    if not value > 0.0:
        raise argparse.ArgumentTypeError(f"deviation must be positive, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tailadapt", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="Hill tail-index estimate")
    est.add_argument("data", help="file with one positive number per line")
    pick = est.add_mutually_exclusive_group(required=True)
    pick.add_argument("--k", type=_positive_int, help="tail fraction to use")
    pick.add_argument(
        "--beta",
        type=_positive_float,
        help="second-order exponent mapped to the rate-optimal fraction",
    )
    est.add_argument(
        "--target",
        choices=("tau", "inverse-tau"),
        default="inverse-tau",
        help="which estimate the json 'estimate' field reports",
    )
    est.add_argument("--abs", action="store_true", help="absolute-value transform")
    est.add_argument("--json", action="store_true", help="machine-readable output")
    est.set_defaults(func=cmd_estimate)

    ci = sub.add_parser("ci", help="confidence interval on data")
    ci.add_argument("data")
    ci.add_argument(
        "--method", choices=("adaptive", "wald", "score"), default="adaptive"
    )
    ci.add_argument("--alpha", type=_probability, default=0.05)
    ci.add_argument("--b", type=_positive_float, default=0.5, help="grid bottom")
    ci.add_argument("--B", type=_positive_float, default=10.0, help="grid top")
    ci.add_argument(
        "--xi", type=_positive_float, default=None, help="grid spacing (default log(n)/95)"
    )
    ci.add_argument(
        "--cprime",
        type=_deviation_mode,
        default=None,
        help="deviation budget: positive number or 'heuristic' (default)",
    )
    ci.add_argument(
        "--target", choices=("tau", "inverse-tau"), default="inverse-tau"
    )
    ci.add_argument(
        "--convention",
        choices=("one-past", "last-reject"),
        default=None,
        help="adaptive level rule: one past the selected test (default), "
        "or the last rejecting level itself",
    )
    ci.add_argument("--abs", action="store_true")
    ci.add_argument("--json", action="store_true")
    ci.set_defaults(func=cmd_ci)

    sim = sub.add_parser("simulate", help="coverage/size study from a config file")
    sim.add_argument("config")
    sim.add_argument("--out", default=".", help="output directory")
    sim.add_argument(
        "--workers", type=_positive_int, default=1, help="executor width"
    )
    sim.set_defaults(func=cmd_simulate)

    pow_ = sub.add_parser("power", help="rejection-frequency study")
    pow_.add_argument("config")
    pow_.add_argument("--out", default=None, help="optional csv output path")
    pow_.set_defaults(func=cmd_power)

    return parser


def _read_sample(path: str, absolute: bool) -> TailSample:
    opener = gzip.open if path.endswith(".gz") else open
    values: list[float] = []
    try:
        with opener(path, "rt") as fh:
            for lineno, raw in enumerate(fh, start=1):
                text = raw.strip()
                if not text:
                    continue
                try:
                    value = float(text)
                except ValueError:
                    raise DataError(f"{path}:{lineno}: not a number: {text!r}")
                if absolute:
                    value = abs(value)
                if not math.isfinite(value) or value <= 0.0:
                    raise DataError(
                        f"{path}:{lineno}: observations must be positive and "
                        f"finite, got {text}"
                    )
                values.append(value)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}")
    if not values:
        raise DataError(f"{path}: no observations")
    return TailSample(np.asarray(values))


def cmd_estimate(ns) -> int:
    sample = _read_sample(ns.data, ns.abs)
    if ns.k is not None:
        if ns.k > sample.n - 1:
            raise DataError(
                f"--k {ns.k} needs at least {ns.k + 1} observations, have {sample.n}"
            )
        k = ns.k
    else:
        k = sample_fraction(sample.n, ns.beta)
    inv = hill_inverse_index(sample, k)
    tau = 1.0 / inv if inv > 0.0 else math.inf
    if ns.json:
        print(
            json.dumps(
                {
                    "n": sample.n,
                    "k": k,
                    "inverse_tau": inv,
                    "tau": tau,
                    "estimate": tau if ns.target == "tau" else inv,
                    "target": ns.target.replace("-", "_"),
                }
            )
        )
    else:
        print(f"n            = {sample.n}")
        print(f"k            = {k}")
        print(f"1/tau        = {inv:.6g}")
        print(f"tau          = {tau:.6g}")
    return EXIT_OK


def _default_xi(n: int) -> float:
    return math.log(n) / 95.0


def cmd_ci(ns) -> int:
    if ns.method != "adaptive":
        # wald/score report inverse-tau only; refuse rather than mislabel
        if ns.target != "inverse-tau":
            raise _UsageError(
                f"--target tau is only available with --method adaptive; "
                f"{ns.method} intervals report inverse-tau"
            )
        if ns.convention is not None:
            raise _UsageError("--convention only applies to --method adaptive")
    sample = _read_sample(ns.data, ns.abs)
    n = sample.n
    xi = ns.xi if ns.xi is not None else _default_xi(n)
    try:
        grid = build_grid(ns.b, ns.B, xi, n)
        if ns.method == "adaptive":
            convention = ns.convention if ns.convention is not None else "one-past"
            interval = adaptive_ci(
                sample,
                grid,
                ns.alpha,
                deviation=ns.cprime,
                target=ns.target.replace("-", "_"),
                convention=convention.replace("-", "_"),
            )
        else:
            outcomes = successive_tests(sample, grid, ns.alpha, ns.cprime)
            beta_hat = estimate_beta(outcomes, grid).beta
            k = sample_fraction(n, beta_hat)
            maker = wald_interval if ns.method == "wald" else score_interval
            interval = maker(sample, k, ns.alpha)
    except ValueError as exc:
        raise DataError(str(exc))
    if ns.json:
        print(
            json.dumps(
                {
                    "method": interval.method,
                    "target": interval.target,
                    "lower": interval.lower,
                    "upper": interval.upper,
                    "center": interval.center,
                    "half_width": interval.half_width,
                    "grid_index": interval.grid_index,
                    "degenerate": interval.degenerate,
                    "unbounded": interval.unbounded,
                }
            )
        )
    else:
        print(f"method       = {interval.method}")
        print(f"target       = {interval.target}")
        print(f"interval     = [{interval.lower:.6g}, {interval.upper:.6g}]")
        print(f"center       = {interval.center:.6g}")
        print(f"half width   = {interval.half_width:.6g}")
        if interval.grid_index is not None:
            print(f"grid index   = {interval.grid_index}")
        if interval.degenerate:
            print("warning      = degenerate estimates; interval unreliable")
        if interval.unbounded:
            print("warning      = unbounded above")
    return EXIT_OK


def _parse_kv_lines(path: str) -> dict[str, tuple[int, str]]:
    entries: dict[str, tuple[int, str]] = {}
    try:
        with open(path, "rt") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
                key, _, value = line.partition("=")
                key = key.strip()  # keys are case-sensitive: 'b' and 'B' differ
                value = value.strip()
                if not key or not value:
                    raise ConfigError(f"{path}:{lineno}: empty key or value")
                if key in entries:
                    raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
                entries[key] = (lineno, value)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}")
    return entries


def _config_float(path, key, entries, default=None, positive=True):
    if key not in entries:
        return default
    lineno, text = entries.pop(key)
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"{path}:{lineno}: field {key!r}: not a number: {text!r}")
    if positive and not value > 0.0:
        raise ConfigError(f"{path}:{lineno}: field {key!r}: must be positive")
    return value


def _config_int(path, key, entries, default=None):
    if key not in entries:
        return default
    lineno, text = entries.pop(key)
    try:
        value = int(text)
    except ValueError:
        raise ConfigError(f"{path}:{lineno}: field {key!r}: not an integer: {text!r}")
    return value


def _default_seed() -> int:
    raw = os.environ.get(_SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"environment {_SEED_ENV} is not an integer: {raw!r}")


_DIST_PARAM_TYPES = {
    "tau": float,
    "nu": int,
    "beta1": float,
    "deviation": float,
    "cprime": float,
    "anchor_n": int,
    "strength": float,
}

_DIST_PARAM_NAMES = {"nu": "df", "cprime": "deviation"}


def parse_distribution(text: str, default_anchor: int | None = None):
    """Build a distribution from 'family key=value ...' notation."""
    tokens = text.split()
    if not tokens:
        raise ValueError("empty distribution specification")
    family = tokens[0].lower()
    params: dict[str, object] = {}
    for token in tokens[1:]:
        if "=" not in token:
            raise ValueError(f"expected key=value, got {token!r}")
        key, _, raw = token.partition("=")
        key = key.strip().lower()
        if key not in _DIST_PARAM_TYPES:
            raise ValueError(f"unknown distribution parameter {key!r}")
        try:
            value = _DIST_PARAM_TYPES[key](raw)
        except ValueError:
            raise ValueError(f"bad value for {key!r}: {raw!r}")
        params[_DIST_PARAM_NAMES.get(key, key)] = value
    if family == "perturbed_pareto" and "anchor_n" not in params:
        if default_anchor is None:
            raise ValueError("perturbed_pareto needs anchor_n")
        params["anchor_n"] = default_anchor
    return make_distribution(family, **params)


def _parse_experiment_config(path: str) -> ExperimentConfig:
    entries = _parse_kv_lines(path)
    if "n" not in entries:
        raise ConfigError(f"{path}: missing required field 'n'")
    n = _config_int(path, "n", entries)
    if "dist" not in entries:
        raise ConfigError(f"{path}: missing required field 'dist'")
    lineno, dist_text = entries.pop("dist")
    try:
        dist = parse_distribution(dist_text, default_anchor=n)
    except ValueError as exc:
        raise ConfigError(f"{path}:{lineno}: field 'dist': {exc}")

    methods = METHODS
    if "methods" in entries:
        lineno, text = entries.pop("methods")
        methods = tuple(m.strip() for m in text.split(",") if m.strip())
        unknown = [m for m in methods if m not in METHODS]
        if unknown:
            raise ConfigError(
                f"{path}:{lineno}: field 'methods': unknown {unknown}; "
                f"known: {list(METHODS)}"
            )

    deviation = None
    if "cprime" in entries:
        lineno, text = entries.pop("cprime")
        if text.lower() != "heuristic":
            try:
                deviation = float(text)
            except ValueError:
                raise ConfigError(
                    f"{path}:{lineno}: field 'cprime': expected number or "
                    f"'heuristic', got {text!r}"
                )
            if deviation <= 0.0:
                raise ConfigError(f"{path}:{lineno}: field 'cprime': must be positive")

    beta_oracle = None
    if "beta_oracle" in entries:
        lineno, text = entries.pop("beta_oracle")
        if text.lower() in ("inf", "infinity"):
            beta_oracle = math.inf
        else:
            try:
                beta_oracle = float(text)
            except ValueError:
                raise ConfigError(
                    f"{path}:{lineno}: field 'beta_oracle': expected number or 'inf'"
                )

    convention = "last_reject"
    if "convention" in entries:
        lineno, text = entries.pop("convention")
        if text not in ("one_past", "last_reject"):
            raise ConfigError(
                f"{path}:{lineno}: field 'convention': unknown {text!r}"
            )
        convention = text

    seed = _config_int(path, "seed", entries, default=_default_seed())
    config = dict(
        distribution=dist,
        n=n,
        replications=_config_int(path, "replications", entries, default=100),
        alpha=_config_float(path, "alpha", entries, default=0.05),
        methods=methods,
        grid_bottom=_config_float(path, "b", entries, default=0.5),
        grid_top=_config_float(path, "B", entries, default=10.0),
        grid_xi=_config_float(path, "xi", entries, default=None),
        deviation=deviation,
        master_seed=seed,
        beta_oracle=beta_oracle,
        convention=convention,
    )
    if entries:
        key = next(iter(entries))
        lineno, _ = entries[key]
        raise ConfigError(f"{path}:{lineno}: unknown field {key!r}")
    try:
        return ExperimentConfig(**config)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}")


def cmd_simulate(ns) -> int:
    config = _parse_experiment_config(ns.config)
    try:
        result = run_experiment(config, workers=ns.workers)
    except RuntimeError as exc:
        raise DataError(str(exc))
    except ValueError as exc:
        # config values that only prove infeasible once the run starts
        raise ConfigError(f"{ns.config}: {exc}")
    out_dir = Path(ns.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(ns.config).stem
    files = {}
    for fmt, suffix in (("csv", ".csv"), ("json", ".json"), ("aligned-text", ".txt")):
        target = out_dir / f"{stem}_results{suffix}"
        target.write_text(emit_table([result], fmt))
        files[fmt] = target
    print(emit_table([result], "aligned-text"), end="")
    for fmt, target in files.items():
        print(f"wrote {target}")
    return EXIT_OK


def _parse_power_config(path: str) -> tuple[Pareto, PerturbedPareto, PowerStudyConfig]:
    entries = _parse_kv_lines(path)

    def _list(key, cast, default):
        if key not in entries:
            return default
        lineno, text = entries.pop(key)
        try:
            return tuple(cast(part.strip()) for part in text.split(",") if part.strip())
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: field {key!r}: bad list: {text!r}")

    tau = _config_float(path, "tau", entries, default=1.0)
    beta0 = _config_float(path, "beta0", entries, default=2.0)
    beta1 = _config_float(path, "beta1", entries, default=0.5)
    deviation = _config_float(path, "cprime", entries, default=0.5)
    sizes = _list("ns", int, (10_000,))
    strengths = _list("strengths", float, (0.0, 0.5, 1.0))
    reps = _config_int(path, "replications", entries, default=100)
    alpha = _config_float(path, "alpha", entries, default=0.05)
    rho_mode = "theoretical"
    if "rho_mode" in entries:
        lineno, text = entries.pop("rho_mode")
        if text not in ("theoretical", "practical"):
            raise ConfigError(f"{path}:{lineno}: field 'rho_mode': unknown {text!r}")
        rho_mode = text
    seed = _config_int(path, "seed", entries, default=_default_seed())
    if entries:
        key = next(iter(entries))
        lineno, _ = entries[key]
        raise ConfigError(f"{path}:{lineno}: unknown field {key!r}")

    try:
        study = PowerStudyConfig(
            sample_sizes=sizes,
            strengths=strengths,
            replications=reps,
            alpha=alpha,
            beta0=beta0,
            beta1=beta1,
            deviation=deviation,
            rho_mode=rho_mode,
            master_seed=seed,
        )
        template_strength = max((s for s in strengths if s > 0.0), default=1.0)
        template = PerturbedPareto(
            tau=tau,
            beta1=beta1,
            deviation=deviation,
            anchor_n=max(sizes),
            strength=template_strength,
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}")
    return Pareto(tau), template, study


def cmd_power(ns) -> int:
    null_dist, template, study = _parse_power_config(ns.config)
    try:
        cells = run_power_study(null_dist, template, study)
    except ValueError as exc:
        raise ConfigError(f"{ns.config}: {exc}")
    print(power_table(cells), end="")
    if ns.out:
        lines = ["n,strength,test,null_rejection,alt_rejection"]
        for c in cells:
            lines.append(
                f"{c.n},{c.strength!r},{c.test},{c.null_rejection!r},{c.alt_rejection!r}"
            )
        Path(ns.out).write_text("\n".join(lines) + "\n")
        print(f"wrote {ns.out}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        return ns.func(ns)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
