"""Command-line front end: fit on user data, run the simulation tables and
risk-ratio curves, and print oracle diagnostics for coefficient profiles.

Exit codes: 0 on success, 1 on numerical failure, 2 on usage or config
errors. The environment variable MMA_LAB_SEED overrides the seed of any
config file; config files are JSON or TOML with the same schema.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import candidates, risk, sim
from .seqmodel import RankDeficientError, RegressionData, orthogonalize
from .variance import cp_select, sigma2_lsq, sigma2_rice
from .weights import (
    gamma_from_w,
    mma_criterion,
    solve_discrete,
    solve_nested,
    w_from_gamma,
)

__all__ = ["main", "ConfigError"]


class ConfigError(ValueError):
    """Bad usage, unreadable input, or malformed config."""


def _read_csv_matrix(path: str, header: bool) -> np.ndarray:
    rows = []
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            for lineno, rec in enumerate(reader, start=1):
                if header and lineno == 1:
                    continue
                if not rec:
                    continue
                try:
                    rows.append([float(v) for v in rec])
                except ValueError as bad:
                    raise ConfigError(f"{path}:{lineno}: {bad}") from None
    except OSError as err:
        raise ConfigError(f"cannot read {path}: {err}") from None
    if not rows:
        raise ConfigError(f"{path}: no numeric rows")
    width = len(rows[0])
    for i, rec in enumerate(rows, start=1):
        if len(rec) != width:
            raise ConfigError(f"{path}:{i + (1 if header else 0)}: ragged row")
    return np.asarray(rows)


def _load_config(path: str) -> dict:
    try:
        if path.endswith(".toml"):
            with open(path, "rb") as fh:
                doc = tomllib.load(fh)
        else:
            with open(path) as fh:
                doc = json.load(fh)
    except OSError as err:
        raise ConfigError(f"cannot read {path}: {err}") from None
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as err:
        raise ConfigError(f"{path}: {err}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: config must be a table/object")
    env_seed = os.environ.get("MMA_LAB_SEED")
    if env_seed is not None:
        try:
            doc["seed"] = int(env_seed)
        except ValueError:
            raise ConfigError(f"MMA_LAB_SEED={env_seed!r} is not an integer") from None
    return doc


def _write_text(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _kv_csv(pairs) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(["name", "value"])
    for name, value in pairs:
        writer.writerow([name, repr(float(value))])
    return buf.getvalue()


def _parse_sigma2_flag(text: str):
    kind, _, arg = text.partition(":")
    if kind == "known":
        try:
            return ("known", float(arg))
        except ValueError:
            raise ConfigError(f"--sigma2 known needs a number, got {arg!r}") from None
    if kind == "lsq":
        if not arg:
            return ("lsq", None)
        try:
            kappa = float(arg)
        except ValueError:
            raise ConfigError(f"--sigma2 lsq fraction must be a number, got {arg!r}") from None
        if not 0.0 < kappa < 1.0:
            raise ConfigError("--sigma2 lsq fraction must be in (0, 1)")
        return ("lsq", kappa)
    if kind == "rice":
        if not arg:
            return ("rice", None)
        try:
            return ("rice", int(arg))
        except ValueError:
            raise ConfigError(f"--sigma2 rice column must be an integer, got {arg!r}") from None
    raise ConfigError(f"unknown --sigma2 form {text!r}")


def _fit_sigma2(view, data, spec) -> float:
    kind, arg = spec
    if kind == "known":
        return arg
    if kind == "lsq":
        m = None if arg is None else min(int(arg * view.n), view.p)
        return sigma2_lsq(view, m).value
    col = 1 if arg is None else arg
    if not 1 <= col <= view.p:
        raise ConfigError(f"--sigma2 rice column {col} outside 1..{view.p}")
    order = np.argsort(data.X[:, col - 1], kind="stable")
    return sigma2_rice(data.y[order]).value


def _parse_candidates_flag(text: str, view, sigma2_hat: float):
    if text == "all":
        return candidates.all_nested(view.p)
    if text == "g1":
        return candidates.grouped_geometric(view.p, n=view.n)
    if text == "g2":
        return candidates.grouped_equal(view.p, n=view.n)
    if text.startswith("ms:"):
        parts = text[3:].split(",")
        if len(parts) != 2:
            raise ConfigError("--candidates ms takes two factors: ms:<kl>,<ku>")
        try:
            kl, ku = float(parts[0]), float(parts[1])
        except ValueError:
            raise ConfigError(f"bad ms window factors {text!r}") from None
        m_hat = min(max(1, cp_select(view, sigma2_hat)), view.p)
        return candidates.ms_centered(m_hat, kl, ku, view.p)
    if text.startswith("sizes:"):
        try:
            sizes = tuple(int(v) for v in text[6:].split(","))
        except ValueError:
            raise ConfigError(f"bad size list {text!r}") from None
        return candidates.CandidateSet(kind="nested", p=view.p, sizes=sizes)
    raise ConfigError(f"unknown --candidates form {text!r}")


def cmd_fit(args) -> int:
    X = _read_csv_matrix(args.design, args.header)
    y = _read_csv_matrix(args.response, args.header)
    if y.shape[1] != 1:
        raise ConfigError(f"{args.response}: response must be a single column")
    sigma2_spec = _parse_sigma2_flag(args.sigma2)
    known = sigma2_spec[1] if sigma2_spec[0] == "known" else None
    try:
        data = RegressionData(X=X, y=y[:, 0], sigma2=known)
    except RankDeficientError:
        raise  # numerical problem, not a usage one: exit 1, not 2
    except ValueError as err:
        raise ConfigError(str(err)) from None
    view = orthogonalize(data)
    sigma2_hat = _fit_sigma2(view, data, sigma2_spec)
    try:
        cset = _parse_candidates_flag(args.candidates, view, sigma2_hat)
    except ValueError as err:
        raise ConfigError(str(err)) from None
    if args.discrete is not None:
        if args.discrete < 1:
            raise ConfigError("--discrete must be >= 1")
        gamma = solve_discrete(view, cset, sigma2_hat, args.discrete)
    else:
        gamma = solve_nested(view, cset, sigma2_hat)
    w = w_from_gamma(gamma)
    criterion = mma_criterion(view, cset, gamma, sigma2_hat)
    lo, hi = candidates.group_slices(cset)
    shrink = np.zeros(view.p)
    shrink[: hi[-1]] = np.repeat(gamma, hi - lo)
    fitted = math.sqrt(view.n) * (view.phi @ (shrink * view.theta_hat))

    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "weights.json"), "w") as fh:
        json.dump(list(w), fh)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(["fitted"])
    for v in fitted:
        writer.writerow([repr(float(v))])
    with open(os.path.join(args.out, "fitted.csv"), "w", newline="") as fh:
        fh.write(buf.getvalue())
    report = {
        "schema": "mma-lab/fit-report/v1",
        "n": view.n,
        "p": view.p,
        "candidates": cset.to_json_dict(),
        "sigma2": sigma2_hat,
        "criterion": criterion,
        "weights": list(w),
        "gamma": list(gamma),
    }
    with open(os.path.join(args.out, "report.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
    print(
        f"fit: n={view.n} p={view.p} models={len(cset)} "
        f"criterion={criterion!r} sigma2={sigma2_hat!r} -> {args.out}/"
    )
    return 0


def _emit_report(report: sim.RiskReport, args) -> int:
    text = report.to_json() if args.format == "json" else report.to_csv()
    _write_text(text, args.out)
    return 0


def cmd_simulate(args) -> int:
    doc = _load_config(args.config)
    try:
        cells = sim.cells_from_config(doc)
    except ValueError as err:
        raise ConfigError(f"{args.config}: {err}") from None
    return _emit_report(sim.table2(cells, jobs=args.jobs), args)


def cmd_table2(args) -> int:
    return cmd_simulate(args)


def cmd_riskratio(args) -> int:
    doc = _load_config(args.config)
    if "case" not in doc and doc.get("cases"):
        doc = {**doc, **doc["cases"][0]}
    for key in ("case", "alpha", "n", "reps", "seed"):
        if key not in doc:
            raise ConfigError(f"{args.config}: config missing key {key!r}")
    n_grid = doc["n"] if isinstance(doc["n"], list) else [doc["n"]]
    try:
        base = sim.ScenarioConfig(
            case=doc["case"],
            alpha=float(doc["alpha"]),
            n=int(n_grid[0]),
            reps=int(doc["reps"]),
            master_seed=int(doc["seed"]),
            methods=(sim.BASELINE, sim.ORACLE),
            snr=float(doc.get("snr", 1.0)),
            sigma2_mode=doc.get("sigma2_mode", "known"),
            redraw_design=bool(doc.get("redraw_design", True)),
        )
    except ValueError as err:
        raise ConfigError(f"{args.config}: {err}") from None
    return _emit_report(sim.risk_ratio_curve(base, n_grid, jobs=args.jobs), args)


def _parse_theta(args) -> risk.CoefficientProfile:
    text = args.theta
    n = args.n
    if text.startswith("file:"):
        theta = _read_csv_matrix(text[5:], header=False)[:, 0]
    else:
        kind, _, arg = text.partition(":")
        try:
            alpha = float(arg)
        except ValueError:
            raise ConfigError(f"bad decay rate in {text!r}") from None
        p = args.p if args.p is not None else n
        if kind == "poly":
            theta = np.arange(1, p + 1, dtype=float) ** -alpha
        elif kind == "exp":
            theta = np.exp(-(np.arange(1, p + 1, dtype=float) ** alpha))
        else:
            raise ConfigError(f"unknown profile {text!r}")
    try:
        return risk.CoefficientProfile(theta=theta, sigma2=args.sigma2, n=n)
    except ValueError as err:
        raise ConfigError(str(err)) from None


def _profile_sets(profile: risk.CoefficientProfile, names) -> dict:
    out = {}
    for name in names:
        if name == "all":
            out[name] = candidates.all_nested(profile.p)
        elif name == "g1":
            out[name] = candidates.grouped_geometric(profile.p, n=profile.n)
        elif name == "g2":
            out[name] = candidates.grouped_equal(profile.p, n=profile.n)
        elif name.startswith("sizes:"):
            sizes = tuple(int(v) for v in name[6:].split(","))
            out[name] = candidates.CandidateSet(kind="nested", p=profile.p, sizes=sizes)
        else:
            raise ConfigError(f"unknown candidate set {name!r}")
    return out


def cmd_oracle(args) -> int:
    profile = _parse_theta(args)
    m_star, ms_best = risk.best_ms(profile)
    _, nested = risk.oracle_nested(profile)
    _, discrete = risk.oracle_discrete(
        profile, candidates.all_nested(profile.p), args.discrete
    )
    values = {
        "best_ms_m": float(m_star),
        "best_ms_risk": ms_best,
        "oracle_nested_risk": nested,
        f"oracle_discrete_{args.discrete}_risk": discrete,
        "ideal_subset_ms_risk": risk.ideal_subset_ms_risk(profile),
        "ideal_subset_ma_risk": risk.ideal_subset_ma_risk(profile),
    }
    for name, cset in _profile_sets(profile, args.sets.split(",")).items():
        values[f"psi_{name}"] = risk.psi(profile, cset)
    if args.format == "json":
        doc = {
            "schema": "mma-lab/oracle-report/v1",
            "profile": {"theta": args.theta, "n": profile.n, "p": profile.p, "sigma2": profile.sigma2},
            "values": values,
        }
        _write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", args.out)
    else:
        _write_text(_kv_csv(sorted(values.items())), args.out)
    return 0


def cmd_psi(args) -> int:
    profile = _parse_theta(args)
    cset = _profile_sets(profile, [args.set])[args.set]
    value = risk.psi(profile, cset)
    if args.format == "json":
        doc = {
            "schema": "mma-lab/oracle-report/v1",
            "profile": {"theta": args.theta, "n": profile.n, "p": profile.p, "sigma2": profile.sigma2},
            "values": {f"psi_{args.set}": value},
        }
        _write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", args.out)
    else:
        _write_text(_kv_csv([(f"psi_{args.set}", value)]), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mma-lab",
        description="Mallows model averaging: fitting, simulation tables, oracle risks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit averaging weights on CSV data")
    fit.add_argument("--design", required=True, help="CSV of regressors, one row per case")
    fit.add_argument("--response", required=True, help="single-column CSV")
    fit.add_argument("--header", action="store_true", help="inputs carry a header row")
    fit.add_argument("--candidates", default="all", help="all | g1 | g2 | ms:<kl>,<ku> | sizes:<list>")
    fit.add_argument("--sigma2", default="lsq", help="known:<val> | lsq[:<frac>] | rice[:<col>]")
    fit.add_argument("--discrete", type=int, default=None, help="restrict weights to multiples of 1/N")
    fit.add_argument("--out", default=".", help="output directory")
    fit.set_defaults(func=cmd_fit)

    for name, func, blurb in (
        ("simulate", cmd_simulate, "run the cells of a config file"),
        ("table2", cmd_table2, "relative-loss table for a config file"),
        ("riskratio", cmd_riskratio, "oracle risk-ratio curve over a sample-size grid"),
    ):
        cmd = sub.add_parser(name, help=blurb)
        cmd.add_argument("--config", required=True, help="JSON or TOML config")
        cmd.add_argument("--jobs", type=int, default=1, help="worker processes")
        cmd.add_argument("--out", default=None, help="output path (default stdout)")
        cmd.add_argument("--format", choices=("csv", "json"), default="csv")
        cmd.set_defaults(func=func)

    oracle = sub.add_parser("oracle", help="closed-form oracle risks for a profile")
    psi_cmd = sub.add_parser("psi", help="candidate-set complexity for a profile")
    for cmd in (oracle, psi_cmd):
        cmd.add_argument("--theta", required=True, help="poly:<a> | exp:<a> | file:<csv>")
        cmd.add_argument("--n", type=int, required=True, help="sample size")
        cmd.add_argument("--p", type=int, default=None, help="profile length (default n)")
        cmd.add_argument("--sigma2", type=float, required=True, help="noise variance")
        cmd.add_argument("--out", default=None, help="output path (default stdout)")
        cmd.add_argument("--format", choices=("csv", "json"), default="json")
    oracle.add_argument("--discrete", type=int, default=2, help="grid denominator for the discrete oracle")
    oracle.add_argument("--sets", default="all", help="comma list: all, g1, g2, sizes:<list>")
    oracle.set_defaults(func=cmd_oracle)
    psi_cmd.add_argument("--set", default="all", help="all | g1 | g2 | sizes:<list>")
    psi_cmd.set_defaults(func=cmd_psi)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"mma-lab: {err}", file=sys.stderr)
        return 2
    except (RankDeficientError, RuntimeError, ArithmeticError, np.linalg.LinAlgError) as err:
        print(f"mma-lab: numerical failure: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
