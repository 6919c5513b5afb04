"""Command-line front end.

Subcommands: ``fit`` (estimators on CSV data), ``check`` (assumption
verdicts), ``bound`` (risk-bound evaluation), ``simulate`` (Monte Carlo
scenarios with CSV results and optional SVG line charts).

Configuration precedence: command-line flags override values from an
optional JSON config file (``--config``), which in turn override the
built-in scenario presets.  The environment variable KRYLOV_PLS_SEED
supplies the default seed.

Exit codes: 0 ok, 1 input error, 2 numerical/singularity, 3 internal.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .bounds import (
    AssumptionViolationError,
    bound_th1,
    bound_th2,
    check_assumptions,
    plugin_population,
)
from .data import CsvFormatError, gram_summary, read_csv
from .estimators import SingularKrylovError, fit_pls_krylov, fit_pls_ridge, ridge_schedule
from .krylov import PopulationDegenerateError, build_population_krylov
from .linalg import SymMatrix
from .simulate import (
    ESTIMATORS,
    BetaRule,
    ScenarioSpec,
    bias_variance_curve,
    curve_csv_text,
    read_curve_rows,
    run_scenario,
    scenario,
)

_ENV_SEED = "KRYLOV_PLS_SEED"

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERICAL = 2
EXIT_INTERNAL = 3


def _emit(payload: dict, path: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ValueError("config file must hold a JSON object")
    return cfg


def _resolve(args, cfg: dict, key: str, default=None):
    val = getattr(args, key, None)
    if val is not None:
        return val
    if key in cfg:
        return cfg[key]
    return default


def _default_seed() -> int:
    return int(os.environ.get(_ENV_SEED, "0"))


def _parse_overrides(text):
    if text is None:
        return None
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in text.split(",") if v.strip()]


# ---------------------------------------------------------------------------
# SVG line charts (static output only; axes, ticks, polylines, legend)

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b")
_W, _H = 720, 480
_ML, _MR, _MT, _MB = 70, 20, 30, 50


def _ticks_linear(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    span = hi - lo
    step = 10.0 ** np.floor(np.log10(span / n))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if span / (step * mult) <= n:
            step *= mult
            break
    first = np.ceil(lo / step) * step
    return [float(first + i * step) for i in range(int((hi - first) / step) + 1)]


def _ticks_log(lo: float, hi: float) -> list[float]:
    lo_e = int(np.floor(np.log10(lo)))
    hi_e = int(np.ceil(np.log10(hi)))
    return [10.0**e for e in range(lo_e, hi_e + 1)]


def svg_line_chart(
    series: list[tuple[str, list[float], list[float]]],
    log_x: bool = False,
    log_y: bool = False,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
) -> str:
    """Render polyline series into a standalone SVG string.

    A pure function of its arguments (fixed canvas, deterministic float
    formatting), so re-plotting identical data yields identical bytes.
    """
    pts = []
    for _, xs, ys in series:
        for x, y in zip(xs, ys):
            if not (np.isfinite(x) and np.isfinite(y)):
                continue
            if (log_x and x <= 0) or (log_y and y <= 0):
                continue
            pts.append((x, y))
    if not pts:
        raise ValueError("no plottable points")
    xv = [p[0] for p in pts]
    yv = [p[1] for p in pts]
    x_lo, x_hi = min(xv), max(xv)
    y_lo, y_hi = min(yv), max(yv)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + (abs(y_lo) if y_lo else 1.0)

    def sx(x: float) -> float:
        if log_x:
            f = (np.log10(x) - np.log10(x_lo)) / (np.log10(x_hi) - np.log10(x_lo))
        else:
            f = (x - x_lo) / (x_hi - x_lo)
        return _ML + f * (_W - _ML - _MR)

    def sy(y: float) -> float:
        if log_y:
            f = (np.log10(y) - np.log10(y_lo)) / (np.log10(y_hi) - np.log10(y_lo))
        else:
            f = (y - y_lo) / (y_hi - y_lo)
        return _H - _MB - f * (_H - _MT - _MB)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.1f}" y="18" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{title}</text>',
    ]
    axis = (
        f'<line x1="{_ML}" y1="{_H - _MB}" x2="{_W - _MR}" y2="{_H - _MB}" '
        f'stroke="black"/>'
        f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_H - _MB}" stroke="black"/>'
    )
    out.append(axis)
    x_pad = 1e-9 * (x_hi - x_lo)
    x_ticks = _ticks_log(x_lo, x_hi) if log_x else _ticks_linear(x_lo, x_hi)
    for t in x_ticks:
        if t < x_lo - x_pad or t > x_hi + x_pad:
            continue
        px = sx(t)
        out.append(
            f'<line x1="{px:.2f}" y1="{_H - _MB}" x2="{px:.2f}" '
            f'y2="{_H - _MB + 5}" stroke="black"/>'
            f'<text x="{px:.2f}" y="{_H - _MB + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{t:g}</text>'
        )
    y_pad = 1e-9 * (y_hi - y_lo)
    y_ticks = _ticks_log(y_lo, y_hi) if log_y else _ticks_linear(y_lo, y_hi)
    for t in y_ticks:
        if t < y_lo - y_pad or t > y_hi + y_pad:
            continue
        py = sy(t)
        out.append(
            f'<line x1="{_ML - 5}" y1="{py:.2f}" x2="{_ML}" y2="{py:.2f}" '
            f'stroke="black"/>'
            f'<text x="{_ML - 8}" y="{py + 4:.2f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{t:g}</text>'
        )
    out.append(
        f'<text x="{(_ML + _W - _MR) / 2:.1f}" y="{_H - 12}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">{xlabel}</text>'
        f'<text x="16" y="{(_MT + _H - _MB) / 2:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {(_MT + _H - _MB) / 2:.1f})">{ylabel}</text>'
    )
    for idx, (label, xs, ys) in enumerate(series):
        color = _COLORS[idx % len(_COLORS)]
        coords = [
            f"{sx(x):.2f},{sy(y):.2f}"
            for x, y in zip(xs, ys)
            if np.isfinite(x)
            and np.isfinite(y)
            and not (log_x and x <= 0)
            and not (log_y and y <= 0)
        ]
        if coords:
            out.append(
                f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                f'points="{" ".join(coords)}"/>'
            )
        ly = _MT + 16 * idx
        out.append(
            f'<line x1="{_W - _MR - 130}" y1="{ly + 10}" x2="{_W - _MR - 105}" '
            f'y2="{ly + 10}" stroke="{color}" stroke-width="1.5"/>'
            f'<text x="{_W - _MR - 100}" y="{ly + 14}" font-family="sans-serif" '
            f'font-size="11">{label}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def svg_from_rows(rows: list[dict]) -> str:
    """Build the scenario chart from result rows (pure; replot-stable).

    For eta scenarios: one risk polyline per estimator on log-log axes.
    For the nu path: risk, bias, and variance of the PLS fit on linear
    axes.
    """
    if not rows:
        raise ValueError("no result rows")
    param = rows[0]["param_name"]
    title = f"scenario {rows[0]['scenario']}"
    if param == "nu":
        pls = [r for r in rows if r["estimator"] == "pls"]
        xs = [r["param_value"] for r in pls]
        series = [
            ("risk", xs, [r["mse"] for r in pls]),
            ("bias", xs, [r["bias"] for r in pls]),
            ("variance", xs, [r["variance"] for r in pls]),
        ]
        return svg_line_chart(
            series, log_x=False, log_y=False, title=title, xlabel="nu", ylabel="MSE"
        )
    series = []
    for est in ESTIMATORS:
        sel = [r for r in rows if r["estimator"] == est]
        if sel:
            series.append(
                (est, [r["param_value"] for r in sel], [r["mse"] for r in sel])
            )
    return svg_line_chart(
        series, log_x=True, log_y=True, title=title, xlabel="eta", ylabel="MSE"
    )


# ---------------------------------------------------------------------------
# population resolution shared by check/bound


def _population_from_args(args, cfg):
    delta = float(_resolve(args, cfg, "delta", 0.05))
    tau2 = float(_resolve(args, cfg, "tau2", 1.0))
    k = int(_resolve(args, cfg, "k", 2))
    if getattr(args, "plugin", False):
        path = _resolve(args, cfg, "input")
        if not path:
            raise ValueError("--plugin requires --input")
        gs = gram_summary(read_csv(path))
        pop, beta = plugin_population(gs, k)
        meta = {
            "mode": "plugin",
            "note": "sigma_hat substituted for sigma; not covered by the theory",
        }
        return pop, gs.sigma_mat, beta, tau2, gs.n, delta, k, meta
    sid = _resolve(args, cfg, "scenario")
    if not sid:
        raise ValueError("supply --scenario or --plugin with --input")
    spec = scenario(sid)
    if spec.param_name == "eta":
        param = _resolve(args, cfg, "eta")
        if param is None:
            raise ValueError("this scenario is parameterized by --eta")
    else:
        param = _resolve(args, cfg, "nu")
        if param is None:
            raise ValueError("this scenario is parameterized by --nu")
    param = float(param)
    n = int(_resolve(args, cfg, "n", spec.n))
    beta = spec.beta_rule.beta(param, spec.p)
    sigma = SymMatrix(np.diag(spec.spectrum))
    pop = build_population_krylov(sigma, beta, k)
    meta = {"mode": "scenario", "scenario": sid, spec.param_name: param}
    return pop, sigma, beta, tau2, n, delta, k, meta


# ---------------------------------------------------------------------------
# commands


def cmd_fit(args) -> int:
    cfg = _load_config(args.config)
    path = _resolve(args, cfg, "input")
    if not path:
        raise ValueError("fit requires --input")
    k = int(_resolve(args, cfg, "k", 2))
    delta = float(_resolve(args, cfg, "delta", 0.05))
    tau2 = float(_resolve(args, cfg, "tau2", 1.0))
    overrides = _parse_overrides(_resolve(args, cfg, "overrides"))
    d = read_csv(path)
    gs = gram_summary(d)
    try:
        if args.ridge or cfg.get("ridge"):
            schedule = ridge_schedule(gs, k, tau2, delta, overrides=overrides)
            fit = fit_pls_ridge(gs, k, schedule)
        else:
            fit = fit_pls_krylov(gs, k)
    except SingularKrylovError as err:
        _emit(
            {
                "error": "singular_krylov",
                "rcond": err.rcond,
                "suggestion": "retry with --ridge",
            },
            args.output,
        )
        return EXIT_NUMERICAL
    _emit(fit.to_record(), args.output)
    return EXIT_OK


def cmd_check(args) -> int:
    cfg = _load_config(args.config)
    pop, sigma, _beta, tau2, n, delta, _k, meta = _population_from_args(args, cfg)
    report = check_assumptions(pop, sigma, tau2, n, delta)
    payload = dict(meta, n=n, tau2=tau2, delta=delta, **report.to_record())
    _emit(payload, args.output)
    return EXIT_OK


def cmd_bound(args) -> int:
    cfg = _load_config(args.config)
    pop, sigma, beta, tau2, n, delta, _k, meta = _population_from_args(args, cfg)
    theorem = _resolve(args, cfg, "theorem", "th1")
    overrides = _parse_overrides(_resolve(args, cfg, "overrides"))
    # Default form: the plain bound as displayed (simplified), the ridge
    # bound in its precise form (its simplified constant is derived, not
    # given in closed form).
    if args.precise:
        precise = True
    elif args.simplified:
        precise = False
    else:
        precise = theorem == "th2"
    if theorem == "th1":
        report = bound_th1(pop, sigma, beta, tau2, n, delta, precise=precise)
    elif theorem == "th2":
        report = bound_th2(
            pop, sigma, beta, tau2, n, delta,
            precise=precise, overrides=overrides,
        )
    else:
        raise ValueError(f"unknown theorem {theorem!r}; expected th1 or th2")
    payload = dict(meta, n=n, tau2=tau2, delta=delta, **report.to_record())
    _emit(payload, args.output)
    return EXIT_OK


def _spec_from_args(args, cfg) -> ScenarioSpec:
    spec_file = _resolve(args, cfg, "spec_file")
    overrides: dict = {}
    for key, cast in (
        ("reps", int), ("seed", int), ("k", int), ("n", int), ("tau2", float),
    ):
        val = _resolve(args, cfg, key)
        if val is not None:
            overrides[key] = cast(val)
    grid = _resolve(args, cfg, "grid")
    if grid is not None:
        overrides["grid"] = np.asarray(_parse_overrides(grid), dtype=float)
    ridge_c = _parse_overrides(_resolve(args, cfg, "ridge_constants"))
    if ridge_c is not None:
        overrides["ridge_overrides"] = tuple(ridge_c)
    if getattr(args, "raw_design", False):
        overrides["exact_design"] = False
    if spec_file:
        with open(spec_file) as fh:
            raw = json.load(fh)
        rule = BetaRule(
            kind=raw["beta_rule"]["kind"],
            indices=tuple(raw["beta_rule"]["indices"]),
        )
        fields = {
            "id": raw.get("id", "custom"),
            "spectrum": np.asarray(raw["spectrum"], dtype=float),
            "beta_rule": rule,
        }
        for key in ("n", "reps", "tau2", "k", "seed"):
            if key in raw:
                fields[key] = raw[key]
        if "grid" in raw:
            fields["grid"] = np.asarray(raw["grid"], dtype=float)
        if "ridge_overrides" in raw and raw["ridge_overrides"] is not None:
            fields["ridge_overrides"] = tuple(raw["ridge_overrides"])
        fields.update(overrides)
        fields.setdefault("seed", _default_seed())
        return ScenarioSpec(**fields)
    sid = _resolve(args, cfg, "scenario")
    if not sid:
        raise ValueError("simulate requires --scenario or --spec-file")
    overrides.setdefault("seed", _default_seed())
    return scenario(sid, **overrides)


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    spec = _spec_from_args(args, cfg)
    estimators = _resolve(args, cfg, "estimators")
    if estimators is None:
        estimators = ("pls",) if spec.param_name == "nu" else ("pls", "ridge", "oracle")
    elif isinstance(estimators, str):
        estimators = tuple(e.strip() for e in estimators.split(",") if e.strip())
    threads = int(_resolve(args, cfg, "threads", 1))
    if spec.param_name == "nu" and tuple(estimators) == ("pls",):
        curve = bias_variance_curve(spec, threads=threads)
    else:
        curve = run_scenario(spec, estimators=estimators, threads=threads)
    text = curve_csv_text(curve)
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.plot:
        # Plot from the emitted CSV text so that re-reading the file and
        # re-plotting reproduces the byte stream exactly.
        import io as _io

        rows = read_curve_rows(_io.StringIO(text))
        with open(args.plot, "w") as fh:
            fh.write(svg_from_rows(rows))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="krylov-pls",
        description="PLS regression via its Krylov representation: fits, "
        "assumption checks, risk bounds, and Monte Carlo scenarios.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file (flags take precedence)")
        p.add_argument("--output", help="write JSON/CSV output here instead of stdout")

    p_fit = sub.add_parser("fit", help="fit a PLS estimator on CSV data")
    common(p_fit)
    p_fit.add_argument("--input", help="dataset CSV (header x1,...,xp,y)")
    p_fit.add_argument("--k", type=int, help="number of components (default 2)")
    p_fit.add_argument("--ridge", action="store_true", help="ridge-regularized variant")
    p_fit.add_argument("--delta", type=float, help="confidence level (default 0.05)")
    p_fit.add_argument("--tau2", type=float, help="noise variance (default 1.0)")
    p_fit.add_argument("--overrides", help="comma-separated ridge constants C1,...,CK")
    p_fit.set_defaults(func=cmd_fit)

    for name, fn, extra in (
        ("check", cmd_check, ()),
        ("bound", cmd_bound, ("theorem", "precise")),
    ):
        p = sub.add_parser(name, help=f"{name} assumptions/bounds for a population")
        common(p)
        p.add_argument("--scenario", help="built-in scenario id (exact population)")
        p.add_argument("--eta", type=float, help="signal scale for eta scenarios")
        p.add_argument("--nu", type=float, help="path parameter for the nu scenario")
        p.add_argument("--plugin", action="store_true",
                       help="plug sigma_hat in for sigma (non-paper), needs --input")
        p.add_argument("--input", help="dataset CSV for --plugin")
        p.add_argument("--k", type=int, help="number of components (default 2)")
        p.add_argument("--n", type=int, help="sample size for the bound (scenario default)")
        p.add_argument("--delta", type=float, help="confidence level (default 0.05)")
        p.add_argument("--tau2", type=float, help="noise variance (default 1.0)")
        if "theorem" in extra:
            p.add_argument("--theorem", choices=("th1", "th2"), help="which bound")
            p.add_argument("--precise", action="store_true",
                           help="use the precise multi-piece form")
            p.add_argument("--simplified", action="store_true",
                           help="use the simplified max-form")
            p.add_argument("--overrides", help="ridge constants C1,...,CK (th2)")
        p.set_defaults(func=fn)

    p_sim = sub.add_parser("simulate", help="run a Monte Carlo scenario")
    common(p_sim)
    p_sim.add_argument("--scenario", help="built-in scenario id")
    p_sim.add_argument("--spec-file", dest="spec_file", help="custom scenario JSON")
    p_sim.add_argument("--reps", type=int, help="replications (default 2000)")
    p_sim.add_argument("--seed", type=int, help=f"master seed (default ${_ENV_SEED} or 0)")
    p_sim.add_argument("--estimators", help="comma list from pls,ridge,oracle,iterative")
    p_sim.add_argument("--grid", help="comma-separated grid values")
    p_sim.add_argument("--k", type=int, help="components (default 2)")
    p_sim.add_argument("--n", type=int, help="sample size (default 200)")
    p_sim.add_argument("--tau2", type=float, help="noise variance (default 1.0)")
    p_sim.add_argument("--ridge-constants", dest="ridge_constants",
                       help="override ridge constants C1,...,CK")
    p_sim.add_argument("--raw-design", dest="raw_design", action="store_true",
                       help="skip the exact-spectrum orthogonalization pass")
    p_sim.add_argument("--threads", type=int, help="worker threads (results identical)")
    p_sim.add_argument("--plot", help="write an SVG line chart here")
    p_sim.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CsvFormatError as err:
        loc = f"row {err.row}" + (f", column {err.column}" if err.column else "")
        print(f"error: malformed CSV ({loc}): {err}", file=sys.stderr)
        return EXIT_INPUT
    except (SingularKrylovError, PopulationDegenerateError, AssumptionViolationError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (KeyError, ValueError, OSError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as err:  # pragma: no cover - defensive
        print(f"internal error: {err!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
