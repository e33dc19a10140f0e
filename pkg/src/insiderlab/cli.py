"""``insiderlab`` command line.

Every command writes its tables plus ``manifest.json`` into the output
directory (``--out``, else ``$INSIDERLAB_OUT/<command>``, else
``out/<command>``).  Flags may also come from a TOML file given with
``--config``: top-level keys apply to every command and a ``[<command>]``
table overrides them.  Command-line flags win over both.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - Python 3.10
    import tomli as tomllib

from . import __version__
from .experiments import histogram_experiment, weighted_value_curve
from .market_data import DataError, EstimatedParams, backtest, estimate_params, load_csv
from .multiasset import (
    ConvergenceError,
    MultiAssetParams,
    Scheme,
    mapo_partial_info,
    mapo_pi_bridge_or_forward,
    mapo_pi_skorokhod,
    mapo_value,
    numeric_maximize_J,
)
from .paths import BridgeSpec, TimeGrid, paths_to_csv, sample_paths
from .strategies import Constraint, MarketParams, ParamCurves, StrategyKind, StrategySpec
from .valuation import (
    SignalDistribution,
    value_bb_or_forward_det,
    value_curve,
    value_forward_adapted_truncated,
    value_forward_noshort,
    value_honest_noshort,
    value_skorokhod,
)
from .wealth import MCConfig, mc_expected_log_utility

SCHEMA_VERSION = 1
OUT_ENV = "INSIDERLAB_OUT"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _market_flags(p, defaults=(0.03, 0.02, 0.3, 1.0)):
    mu, r, sigma, T = defaults
    p.add_argument("--mu", type=float, default=mu, help="drift per unit time")
    p.add_argument("--r", "--rf", dest="r", type=float, default=r, help="risk-free rate")
    p.add_argument("--sigma", type=float, default=sigma, help="volatility")
    p.add_argument("--T", dest="T", type=float, default=T, help="horizon")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="insiderlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--config", type=Path, help="TOML file with flag values")
        p.add_argument("--out", type=Path, help="output directory")
        return p

    p = command("bridge", "sample Brownian bridge paths")
    p.add_argument("--b", type=float, default=0.0)
    p.add_argument("--T", dest="T", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=64)
    p.add_argument("--paths", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--method", choices=("sequential", "brownian"), default="sequential")

    p = command("value-curve", "tabulate the values against b")
    _market_flags(p)
    p.add_argument("--bmin", type=float, help="default -theta T")
    p.add_argument("--bmax", type=float, help="default -theta T + sigma T")
    p.add_argument("--n", type=int, default=101)

    p = command("histogram", "values of the problem for b ~ N(e, var)")
    _market_flags(p, (0.03, 0.0027, 0.3, 64.0))
    p.add_argument("--e", type=float, default=0.0)
    p.add_argument("--var", type=float, default=64.0)
    p.add_argument("--draws", type=int, default=5000)
    p.add_argument("--steps", type=int, default=64)
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--S0", dest="S0", type=float, default=100.0)
    p.add_argument("--seed", type=int, default=0)

    p = command("weighted-value", "V(b) times the signal density and its integral")
    _market_flags(p)
    p.add_argument("--e", type=float, default=0.0)
    p.add_argument("--var", type=float, default=1.0)
    p.add_argument("--n", type=int, default=401)

    p = command("mc", "Monte Carlo expected log-wealth of one strategy")
    _market_flags(p)
    p.add_argument("--strategy", choices=[k.value for k in StrategyKind], default="honest")
    p.add_argument("--constraint", choices=[c.value for c in Constraint])
    p.add_argument("--b", type=float, default=0.0)
    p.add_argument("--steps", type=int, default=256)
    p.add_argument("--paths", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stop-time", type=float, help="evaluate log-wealth at this grid time")
    p.add_argument("--update", choices=("exact", "discrete"), default="exact")
    p.add_argument("--richardson", action="store_true")
    p.add_argument("--workers", type=int, default=1)

    p = command("backtest", "three-strategy backtest on a price CSV")
    p.add_argument("--csv", type=Path, required=True)
    p.add_argument("--horizon", type=int, help="steps to trade (default: whole series)")
    p.add_argument("--start", type=int, default=0)
    p.add_argument("--sigma-window", choices=("daily", "monthly"), default="daily")
    p.add_argument("--r", type=float, help="per-step rate (default: mean of the rate column)")
    p.add_argument("--mu", type=float, help="per-step drift (default: estimated)")
    p.add_argument("--sigma", type=float, help="per-step volatility (default: estimated)")
    p.add_argument("--rolling-window", type=int)
    p.add_argument(
        "--strategies", default="honest,forward,skorokhod", help="comma-separated subset"
    )

    p = command("mapo", "multi-asset portfolios from a JSON parameter file")
    p.add_argument("--params-json", type=Path, required=True)
    p.add_argument("--scheme", choices=[s.value for s in Scheme], default="bridge-forward")

    p = command("rerun", "repeat the run recorded in a manifest")
    p.add_argument("manifest", type=Path)
    return parser


# -- plumbing ---------------------------------------------------------------


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _out_dir(args) -> Path:
    if args.out is not None:
        return args.out
    base = os.environ.get(OUT_ENV)
    return Path(base if base else "out") / args.command


def _params_of(args) -> dict:
    skip = {"config", "out", "command", "expected_outputs"}
    return {
        k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items() if k not in skip
    }


def write_manifest(args, out: Path, outputs: list[str]) -> Path:
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "command": args.command,
        "params": _params_of(args),
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "outputs": {name: _sha256(out / name) for name in outputs},
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, allow_nan=True) + "\n")


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def _market(args) -> MarketParams:
    return MarketParams(args.mu, args.r, args.sigma, args.T)


def _load_config(path: Path, command: str) -> dict:
    try:
        data = tomllib.loads(path.read_text())
    except FileNotFoundError:
        raise DataError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise DataError(f"config file {path}: {exc}") from None
    merged = {k: v for k, v in data.items() if not isinstance(v, dict)}
    merged.update(data.get(command, {}))
    return {k.replace("-", "_"): v for k, v in merged.items()}


# -- commands ---------------------------------------------------------------


def cmd_bridge(args, out: Path) -> list[str]:
    grid = TimeGrid(args.T, args.steps)
    if args.paths < 1:
        raise UsageError("--paths must be positive")
    paths = sample_paths(grid, args.paths, args.seed, BridgeSpec(args.b, args.T), args.method)
    paths_to_csv(grid, paths, out / "bridge_paths.csv")
    return ["bridge_paths.csv"]


def cmd_value_curve(args, out: Path) -> list[str]:
    p = _market(args)
    lo = -p.theta * p.T if args.bmin is None else args.bmin
    hi = -p.theta * p.T + p.sigma * p.T if args.bmax is None else args.bmax
    if not lo < hi:
        raise UsageError(f"--bmin ({lo}) must be below --bmax ({hi})")
    if args.n < 1:
        raise UsageError("--n must be positive")
    b = np.linspace(lo, hi, args.n) if args.n > 1 else np.array([lo])
    value_curve(p, b).to_csv(out / "value_curve.csv")
    return ["value_curve.csv"]


def cmd_histogram(args, out: Path) -> list[str]:
    if not args.var > 0:
        raise UsageError(f"--var must be positive, got {args.var}")
    res = histogram_experiment(_market(args), args.e, args.var, args.draws, args.seed, args.steps, args.S0)
    _write_rows(
        out / "histogram_draws.csv",
        ("b", "v_forward", "v_skorokhod", "log_wealth_forward", "log_wealth_skorokhod"),
        zip(res.b, res.v_forward, res.v_skorokhod, res.log_wealth_forward, res.log_wealth_skorokhod),
    )
    edges, cf, cs = res.histogram(args.bins)
    _write_rows(
        out / "histogram_bins.csv",
        ("bin_left", "bin_right", "count_forward", "count_skorokhod"),
        zip(edges[:-1], edges[1:], cf, cs),
    )
    _write_json(out / "histogram_summary.json", {"schema_version": SCHEMA_VERSION, **res.summary()})
    return ["histogram_draws.csv", "histogram_bins.csv", "histogram_summary.json"]


def cmd_weighted_value(args, out: Path) -> list[str]:
    if not args.var > 0:
        raise UsageError(f"--var must be positive, got {args.var}")
    table, summary = weighted_value_curve(_market(args), SignalDistribution(args.e, args.var), args.n)
    _write_rows(out / "weighted_value.csv", ("b", "pdf", "weighted_forward", "weighted_skorokhod"), table)
    _write_json(out / "weighted_value_summary.json", {"schema_version": SCHEMA_VERSION, **summary})
    return ["weighted_value.csv", "weighted_value_summary.json"]


def _closed_form(spec: StrategySpec, p: MarketParams, b: float, stop_time):
    kind = spec.kind
    if kind is StrategyKind.HONEST:
        if spec.constraint is Constraint.NO_SHORT:
            return value_honest_noshort(p).total
        return p.r * p.T + 0.5 * p.theta**2 * p.T
    if kind is StrategyKind.SKOROKHOD_INSIDER:
        return value_skorokhod(p, b).total
    if kind is StrategyKind.FORWARD_ADAPTED:
        return value_forward_adapted_truncated(p, b, p.T - stop_time)
    if spec.constraint is Constraint.NO_SHORT:
        return value_forward_noshort(p, b).total
    return value_bb_or_forward_det(ParamCurves.constant(p), b)


def cmd_mc(args, out: Path) -> list[str]:
    p = _market(args)
    spec = StrategySpec.from_name(args.strategy, args.constraint)
    cfg = MCConfig(args.paths, args.seed, TimeGrid(p.T, args.steps))
    est = mc_expected_log_utility(
        spec, p, args.b, cfg, args.stop_time, args.update, args.workers, richardson=args.richardson
    )
    result = {"schema_version": SCHEMA_VERSION, **est.to_dict(), "update": args.update}
    closed = None
    if args.update == "exact" and (args.stop_time is None or spec.kind is StrategyKind.FORWARD_ADAPTED):
        closed = _closed_form(spec, p, args.b, args.stop_time)
    result["closed_form"] = closed
    if closed is not None and est.std_error > 0:
        result["z_score"] = (est.mean - closed) / est.std_error
    _write_json(out / "mc.json", result)
    return ["mc.json"]


def cmd_backtest(args, out: Path) -> list[str]:
    series = load_csv(args.csv)
    if args.mu is not None and args.sigma is not None and args.r is not None:
        est = EstimatedParams(MarketParams(args.mu, args.r, args.sigma, 1.0), len(series) - 1, "given")
    else:
        est = estimate_params(series, r=args.r, sigma_window=args.sigma_window)
        p = est.params
        mu = p.mu if args.mu is None else args.mu
        sigma = p.sigma if args.sigma is None else args.sigma
        est = EstimatedParams(MarketParams(mu, p.r, sigma, p.T), est.n_returns, est.sigma_window)
    names = tuple(s.strip() for s in args.strategies.split(",") if s.strip())
    res = backtest(
        series, est, names, horizon=args.horizon, start=args.start, rolling_window=args.rolling_window
    )
    outputs = res.write(out)
    summary = json.loads((out / "backtest_summary.json").read_text())
    summary = {"schema_version": SCHEMA_VERSION, "estimate": est.to_dict(), **summary}
    _write_json(out / "backtest_summary.json", summary)
    return outputs


def cmd_mapo(args, out: Path) -> list[str]:
    try:
        m = MultiAssetParams.from_json(args.params_json)
    except FileNotFoundError:
        raise DataError(f"no such file: {args.params_json}") from None
    except (KeyError, json.JSONDecodeError) as exc:
        raise DataError(f"{args.params_json}: bad parameter file ({exc})") from None
    scheme = Scheme(args.scheme)
    partial = not bool(np.all(m.insider_mask))
    if partial:
        pv, value = mapo_partial_info(m, scheme)
        constraint = "none" if scheme is Scheme.BRIDGE_OR_FORWARD else "insider-box"
    else:
        pv = mapo_pi_bridge_or_forward(m) if scheme is Scheme.BRIDGE_OR_FORWARD else mapo_pi_skorokhod(m)
        value = mapo_value(m, scheme)
        constraint = "none" if scheme is Scheme.BRIDGE_OR_FORWARD else "box"
    result = {
        "schema_version": SCHEMA_VERSION,
        "scheme": scheme.value,
        "partial_information": partial,
        "pi": pv.pi.tolist(),
        "value": value,
        "satisfies_no_short": pv.satisfies_no_short,
        "condition_number": m.condition_number,
        "notes": list(pv.notes),
    }
    try:
        oracle = numeric_maximize_J(m, scheme, constraint, use_mask=partial)
        result["oracle"] = {
            "pi": oracle.pi.tolist(),
            "residual": oracle.residual,
            "max_abs_diff": float(np.max(np.abs(oracle.pi - pv.pi))),
        }
    except ConvergenceError as exc:
        result["oracle"] = {"error": str(exc), "residual": exc.residual}
    _write_json(out / "mapo.json", result)
    return ["mapo.json"]


COMMANDS = {
    "bridge": cmd_bridge,
    "value-curve": cmd_value_curve,
    "histogram": cmd_histogram,
    "weighted-value": cmd_weighted_value,
    "mc": cmd_mc,
    "backtest": cmd_backtest,
    "mapo": cmd_mapo,
}


def _config_path(argv) -> Path | None:
    for k, tok in enumerate(argv):
        if tok == "--config" and k + 1 < len(argv):
            return Path(argv[k + 1])
        if tok.startswith("--config="):
            return Path(tok.split("=", 1)[1])
    return None


def _parse(argv):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    subparsers = parser._subparsers._group_actions[0].choices
    command = next((tok for tok in argv if not tok.startswith("-")), None)
    config = _config_path(argv)
    if command in subparsers and command != "rerun" and config is not None:
        # config values become defaults, so they can also satisfy required flags
        sub = subparsers[command]
        values = _load_config(config, command)
        known = {a.dest for a in sub._actions}
        unknown = sorted(set(values) - known)
        if unknown:
            raise UsageError(f"unknown config keys for {command}: {', '.join(unknown)}")
        for key in ("csv", "params_json", "out"):
            if key in values:
                values[key] = Path(values[key])
        sub.set_defaults(**values)
        for action in sub._actions:
            if action.dest in values:
                action.required = False
    args = parser.parse_args(argv)
    if args.command == "rerun":
        return _args_from_manifest(args.manifest, parser)
    return args


def _args_from_manifest(path: Path, parser) -> argparse.Namespace:
    try:
        manifest = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise DataError(f"no such manifest: {path}") from None
    command = manifest["command"]
    sub = parser._subparsers._group_actions[0].choices[command]
    ns = sub.parse_args([a for a in _required_argv(sub, manifest["params"])])
    for k, v in manifest["params"].items():
        setattr(ns, k, Path(v) if k in ("csv", "params_json") and v is not None else v)
    ns.command = command
    ns.out = Path(path).parent
    ns.config = None
    ns.expected_outputs = manifest.get("outputs", {})
    return ns


def _required_argv(sub, params):
    argv = []
    for action in sub._actions:
        if action.required and action.option_strings:
            argv += [action.option_strings[0], str(params[action.dest])]
    return argv


def main(argv=None) -> int:
    try:
        args = _parse(argv)
        out = _out_dir(args)
        out.mkdir(parents=True, exist_ok=True)
        outputs = COMMANDS[args.command](args, out)
        write_manifest(args, out, outputs)
        expected = getattr(args, "expected_outputs", None)
        if expected is not None:
            changed = [n for n in outputs if expected.get(n) != _sha256(out / n)]
            if changed:
                raise DataError(f"rerun differs from the manifest in: {', '.join(changed)}")
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (DataError, ValueError, ConvergenceError, OSError) as exc:
        print(f"insiderlab: data error: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
