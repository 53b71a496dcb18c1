"""
Command-line front end of the Piltz divisor laboratory.

    python main.py delta --k 3 --x 1e6
    python main.py moment --k 3 --X 1e6 --m 2 --out tong.csv
"""
import argparse
import json
import logging
import math
import sys
from typing import Optional

import pandas as pd
from pydantic import ValidationError

from piltz_lab import config
from piltz_lab.analytic.constants import c2_closed_form, ck_direct, ck_euler, ck_value
from piltz_lab.analytic.main_term import main_term_coeffs
from piltz_lab.analytic.resonance import default_Y, qk_delta_compare
from piltz_lab.artifacts import render_csv, render_json, write_text_atomic
from piltz_lab.config import RunConfig
from piltz_lab.core.moments import (
    BoundParams,
    diff_mean_square,
    mult_diff_mean_square,
    power_moment,
    saffari_vaughan_check,
    sup_diff_mean_square,
)
from piltz_lab.delta import DeltaEvaluator, count_sign_changes, delta_extremes
from piltz_lab.detector import detect_intervals, interval_census, interval_length
from piltz_lab.divisor.checkpoints import ensure_checkpoints
from piltz_lab.errors import PiltzLabError, VerificationError
from piltz_lab.gap_count import lemma_ratio_sweep, log_uniform_alphas
from piltz_lab.numerics.zeta import MAX_DIGITS

logger = logging.getLogger("piltz_lab.cli")

# --- Exit codes ---
EXIT_OK = 0
EXIT_LAB_ERROR = 1
EXIT_USAGE = 2
EXIT_VERIFICATION = 3

_CONFIG_FIELDS = set(RunConfig.model_fields)


# --- Argument types ---
def number(text: str):
    """Accepts 1e7-style notation; integral values come back as int."""
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if math.isfinite(value) and value == math.floor(value) and abs(value) < 2**53:
        return int(value)
    return value


def integer(text: str) -> int:
    value = number(text)
    if not isinstance(value, int):
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    return value


# --- Handlers ---
def _evaluator(cfg: RunConfig, need) -> DeltaEvaluator:
    return DeltaEvaluator.covering(
        cfg.k, need, stride=cfg.stride, cache_dir=cfg.cache_dir, threads=cfg.threads,
        backend=cfg.backend, block_size=cfg.block_size,
    )


def cmd_sieve_cache(cfg: RunConfig):
    checkpoint = ensure_checkpoints(
        cfg.k, cfg.extra["limit"], stride=cfg.stride, cache_dir=cfg.cache_dir,
        threads=cfg.threads, backend=cfg.backend, block_size=cfg.block_size,
    )
    return render_json({"entries": len(checkpoint), **checkpoint.describe()}, cfg, checkpoint)


def cmd_delta(cfg: RunConfig):
    span = cfg.extra.get("span")
    if span:
        evaluator = _evaluator(cfg, cfg.x + span)
        result = delta_extremes(cfg.k, cfg.x, span, evaluator).model_dump()
        return render_json(result, cfg, evaluator.checkpoints)
    evaluator = _evaluator(cfg, cfg.x)
    side = cfg.extra["side"]
    frame = pd.DataFrame([{"x": cfg.x, "value": evaluator.value(cfg.x, side), "side": side}])
    return render_csv(frame, cfg, evaluator.checkpoints)


def cmd_constants(cfg: RunConfig):
    euler = ck_euler(cfg.k, prime_limit=cfg.extra["prime_limit"])
    result = {"euler": euler.model_dump()}
    if cfg.extra.get("N"):
        direct = ck_direct(cfg.k, cfg.extra["N"], block_size=cfg.block_size)
        low, high = direct.error_bracket
        result["direct"] = direct.model_dump()
        result["routes_agree"] = bool(low - euler.width <= euler.value <= high + euler.width)
    if cfg.k == 2:
        closed = float(c2_closed_form())
        result["closed_form"] = {
            "value": closed,
            "euler_matches": abs(euler.value - closed) <= 1e-8,
        }
    return render_json(result, cfg)


def cmd_qk_compare(cfg: RunConfig):
    Y = cfg.Y if cfg.Y is not None else default_Y(cfg.k, cfg.X)
    evaluator = _evaluator(cfg, 2 * cfg.X)
    report = qk_delta_compare(cfg.k, cfg.X, Y, cfg.samples, evaluator, seed=cfg.seed)
    summary = report.model_dump(exclude={"x", "delta", "qk"})
    return render_csv(report.frame(), cfg, evaluator.checkpoints, summary=summary)


def _moment_csv(report, cfg, evaluator):
    row = report.row()
    if not cfg.record_timing:
        row.pop("elapsed")
    return render_csv(pd.DataFrame([row]), cfg, evaluator.checkpoints)


def _moment_kwargs(cfg, evaluator):
    return {"samples": cfg.samples, "seed": cfg.seed, "evaluator": evaluator, "threads": cfg.threads}


def cmd_moment(cfg: RunConfig):
    evaluator = _evaluator(cfg, 2 * cfg.X)
    report = power_moment(cfg.k, cfg.X, cfg.m, cfg.mode, **_moment_kwargs(cfg, evaluator))
    return _moment_csv(report, cfg, evaluator)


def cmd_diff_moment(cfg: RunConfig):
    if (cfg.h is None) == (cfg.T is None):
        raise argparse.ArgumentTypeError("diff-moment needs exactly one of --h and --T")
    if cfg.h is not None:
        evaluator = _evaluator(cfg, 2 * cfg.X + cfg.h)
        report = diff_mean_square(cfg.k, cfg.X, cfg.h, cfg.mode, **_moment_kwargs(cfg, evaluator))
    else:
        evaluator = _evaluator(cfg, 2 * cfg.X * (1 + 1 / cfg.T))
        report = mult_diff_mean_square(cfg.k, cfg.X, cfg.T, cfg.mode, **_moment_kwargs(cfg, evaluator))
    return _moment_csv(report, cfg, evaluator)


def cmd_sup_moment(cfg: RunConfig):
    evaluator = _evaluator(cfg, 2 * cfg.X + cfg.H)
    report = sup_diff_mean_square(cfg.k, cfg.X, cfg.H, cfg.mode, **_moment_kwargs(cfg, evaluator))
    return _moment_csv(report, cfg, evaluator)


def cmd_sv_check(cfg: RunConfig):
    evaluator = _evaluator(cfg, cfg.X * (1 + 8 * cfg.h / cfg.X) + 1)
    check = saffari_vaughan_check(cfg.k, cfg.X, cfg.h, tol=cfg.extra["tol"], evaluator=evaluator)
    text = render_json(check.model_dump(), cfg, evaluator.checkpoints)
    if not check.ok:
        _emit(text, cfg)
        raise VerificationError(f"Saffari-Vaughan inequality failed: {check.lhs} > {check.rhs}")
    return text


def cmd_gapcount(cfg: RunConfig):
    alphas = cfg.extra.get("alpha")
    if not alphas:
        def alphas(W):
            return log_uniform_alphas(cfg.k, W, cfg.extra["draws"], cfg.seed)

    sweep = lemma_ratio_sweep(cfg.k, cfg.extra["W"], alphas, cfg.extra["rho"], threads=cfg.threads)
    return render_csv(sweep.frame(), cfg)


def _bound_params(cfg: RunConfig) -> BoundParams:
    fields = {"eta": cfg.eta_frac * ck_value(cfg.k)}
    if cfg.xi is not None:
        fields["xi"] = cfg.xi
    try:
        return BoundParams(**fields)
    except ValidationError as exc:
        raise argparse.ArgumentTypeError("; ".join(error["msg"] for error in exc.errors()))


def _resolve_H(cfg: RunConfig, params: BoundParams) -> float:
    if cfg.H is not None:
        return cfg.H
    if cfg.xi is None:
        raise argparse.ArgumentTypeError("detect needs --H or --xi")
    return math.ceil(interval_length(cfg.k, cfg.X, params.xi, cfg.extra["regime"]))


def cmd_detect(cfg: RunConfig):
    params = _bound_params(cfg)
    H = _resolve_H(cfg, params)
    eta = params.eta
    evaluator = _evaluator(cfg, 2 * cfg.X)
    stride = cfg.extra.get("scan_stride")
    if cfg.extra.get("census"):
        result = interval_census(cfg.k, cfg.X, H, eta, stride, evaluator, threads=cfg.threads).model_dump()
    else:
        records = detect_intervals(cfg.k, cfg.X, H, eta, stride, evaluator, threads=cfg.threads)
        result = [r.model_dump() for r in records]
    return render_json(result, cfg, evaluator.checkpoints)


def cmd_signchanges(cfg: RunConfig):
    lo, hi = cfg.extra["lo"], cfg.extra["hi"]
    evaluator = _evaluator(cfg, hi)
    changes = count_sign_changes(cfg.k, lo, hi, evaluator)
    return render_json({"k": cfg.k, "lo": lo, "hi": hi, "sign_changes": changes}, cfg, evaluator.checkpoints)


def cmd_main_term(cfg: RunConfig):
    return render_json(main_term_coeffs(cfg.k).to_json(cfg.extra["digits"]), cfg)


# --- Parser ---
def _common(parser):
    parser.add_argument("--k", type=integer, required=True)
    parser.add_argument("--cache-dir", default=config.CACHE_DIR)
    parser.add_argument("--stride", type=integer, default=config.CHECKPOINT_STRIDE)
    parser.add_argument("--block-size", type=integer, default=config.BLOCK_SIZE)
    parser.add_argument("--threads", type=integer, default=1)
    parser.add_argument("--backend", choices=["local", "celery"], default="local")
    parser.add_argument("--seed", type=integer, default=0)
    parser.add_argument("--out")
    parser.add_argument("--record-timing", action="store_true")


def _sampling(parser):
    parser.add_argument("--mode", choices=["exact", "sample"], default="exact")
    parser.add_argument("--samples", type=integer, default=1000)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="piltz-lab", description="Numerical laboratory for Piltz divisor error terms.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sieve-cache", help="build or reuse a summatory checkpoint")
    _common(p)
    p.add_argument("--limit", type=integer, required=True)
    p.set_defaults(handler=cmd_sieve_cache)

    p = sub.add_parser("delta", help="Δ_k at a point, or its extremes over [x, x+span]")
    _common(p)
    p.add_argument("--x", type=number, required=True)
    p.add_argument("--side", choices=["right", "left", "midpoint"], default="right")
    p.add_argument("--span", type=number)
    p.set_defaults(handler=cmd_delta)

    p = sub.add_parser("constants", help="C_k by Euler product and optionally by direct sum")
    _common(p)
    p.add_argument("--prime-limit", type=integer, default=10**5)
    p.add_argument("--N", type=integer)
    p.set_defaults(handler=cmd_constants)

    p = sub.add_parser("qk-compare", help="Δ_k against the truncated resonance sum")
    _common(p)
    p.add_argument("--X", type=number, required=True)
    p.add_argument("--Y", type=number)
    p.add_argument("--samples", type=integer, default=200)
    p.set_defaults(handler=cmd_qk_compare)

    p = sub.add_parser("moment", help="(1/X)∫_X^{2X} Δ_k^m")
    _common(p)
    _sampling(p)
    p.add_argument("--X", type=number, required=True)
    p.add_argument("--m", type=integer, required=True)
    p.set_defaults(handler=cmd_moment)

    p = sub.add_parser("diff-moment", help="additive (--h) or multiplicative (--T) shift mean square")
    _common(p)
    _sampling(p)
    p.add_argument("--X", type=number, required=True)
    p.add_argument("--h", type=number)
    p.add_argument("--T", type=number)
    p.set_defaults(handler=cmd_diff_moment)

    p = sub.add_parser("sup-moment", help="mean square of the sup over shifts up to H")
    _common(p)
    _sampling(p)
    p.add_argument("--X", type=number, required=True)
    p.add_argument("--H", type=number, required=True)
    p.set_defaults(handler=cmd_sup_moment)

    p = sub.add_parser("sv-check", help="Saffari-Vaughan inequality with f = Δ_k")
    _common(p)
    p.add_argument("--X", type=number, required=True)
    p.add_argument("--h", type=number, required=True)
    p.add_argument("--tol", type=number, default=0.01)
    p.set_defaults(handler=cmd_sv_check)

    p = sub.add_parser("gapcount", help="near-integer counts against their bound")
    _common(p)
    p.add_argument("--W", type=integer, nargs="+", required=True)
    p.add_argument("--alpha", type=number, nargs="*")
    p.add_argument("--rho", type=number, nargs="+", default=[1e-3, 1e-2])
    p.add_argument("--draws", type=integer, default=16)
    p.set_defaults(handler=cmd_gapcount)

    p = sub.add_parser("detect", help="intervals where Δ_k keeps its sign")
    _common(p)
    p.add_argument("--X", type=number, required=True)
    p.add_argument("--H", type=number)
    p.add_argument("--xi", type=number)
    p.add_argument("--regime", choices=["unconditional", "lindelof"], default="unconditional")
    p.add_argument("--eta-frac", type=number, default=0.1)
    p.add_argument("--scan-stride", type=number)
    p.add_argument("--census", action="store_true")
    p.set_defaults(handler=cmd_detect)

    p = sub.add_parser("signchanges", help="exact sign changes of Δ_k on [lo, hi]")
    _common(p)
    p.add_argument("--lo", type=number, required=True)
    p.add_argument("--hi", type=number, required=True)
    p.set_defaults(handler=cmd_signchanges)

    p = sub.add_parser("main-term", help="P_k coefficients and Stieltjes constants")
    _common(p)
    p.add_argument("--digits", type=integer, default=MAX_DIGITS)
    p.set_defaults(handler=cmd_main_term)
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values = {key.replace("-", "_"): value for key, value in vars(args).items() if key != "handler"}
    known = {key: value for key, value in values.items() if key in _CONFIG_FIELDS and value is not None}
    extra = {key: value for key, value in values.items() if key not in _CONFIG_FIELDS}
    return RunConfig(**known, extra=json.loads(json.dumps(extra)))


def _emit(text: str, cfg: RunConfig):
    if cfg.out:
        write_text_atomic(cfg.out, text)
    else:
        sys.stdout.write(text)


def configure_logging(level: Optional[str] = None):
    logging.basicConfig(
        level=getattr(logging, (level or config.LOG_LEVEL).upper(), logging.INFO),
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        cfg = resolve_config(args)
        text = args.handler(cfg)
        _emit(text, cfg)
    except argparse.ArgumentTypeError as exc:
        parser.print_usage(sys.stderr)
        logger.error("%s", exc)
        return EXIT_USAGE
    except VerificationError as exc:
        logger.error("Verification failed: %s", exc)
        return EXIT_VERIFICATION
    except PiltzLabError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return EXIT_LAB_ERROR
    return EXIT_OK


if __name__ == "__main__":
    configure_logging()
    sys.exit(run())
