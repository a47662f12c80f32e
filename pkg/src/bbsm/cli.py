"""Command-line front end.

Commands: price, simulate, curve, forward, futures, perpetual, calibrate,
tree-dump.  Model coefficients come from a flat ``key = value`` config file;
all randomness flows from the single ``--seed`` flag, so identical
(config, flags, input files) produce byte-identical primary output.

Exit codes: 0 success, 2 bad configuration or input files, 3 model or
numerical failure (the error class name goes to stderr).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Optional

from . import closed_form, mc_pricer, term_structure
from .binomial import TreeSpec, tree_nodes, tree_price
from .calibration import (
    calibrate_drift,
    calibrate_riskless,
    calibrate_vol,
    estimate_pn,
    load_price_series,
    load_quote_sheet,
)
from .contracts import MCConfig, OptionSpec, PriceResult
from .errors import ConfigError, ModelError
from .model import simulate_paths
from .params import load_config
from .perpetual import PerpetualSpec, perpetual_value

CSV_COMMANDS = ("curve", "tree-dump", "simulate")


def _render_json(payload) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _render_text(payload) -> str:
    if isinstance(payload, list):
        return "".join(_render_text(item) for item in payload)
    lines = [f"{key} = {payload[key]}" for key in sorted(payload)]
    return "\n".join(lines) + "\n"


def _result_payload(result: PriceResult) -> dict:
    return {
        "price": result.price,
        "std_error": result.std_error,
        "method": result.method,
        "n_paths": result.n_paths,
        "n_steps": result.n_steps,
        "seed": result.seed,
        "psi_violations": result.diagnostics.psi_violations,
        "negative_price": result.diagnostics.negative_price,
    }


def _emit(args, payload, csv_text: Optional[str] = None) -> None:
    if args.format == "csv":
        if csv_text is None:
            raise ConfigError(
                f"csv output is only available for: {', '.join(CSV_COMMANDS)}"
            )
        text = csv_text
    elif args.format == "text":
        text = _render_text(payload)
    else:
        text = _render_json(payload)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _params(args):
    if not args.config:
        raise ConfigError("--config is required for this command")
    return load_config(args.config)


def _mc_config(args) -> MCConfig:
    return MCConfig(n_paths=args.paths, n_steps=args.steps, seed=args.seed)


def _option_spec(args, params) -> OptionSpec:
    if args.kind == "unit":
        return OptionSpec(
            kind="custom",
            maturity=args.maturity,
            payoff=lambda x: x * 0.0 + 1.0,
            dividend_yield=args.dividend,
        )
    if args.strike is None:
        raise ConfigError("--strike is required for call/put payoffs")
    return OptionSpec(
        kind=args.kind,
        maturity=args.maturity,
        strike=args.strike,
        dividend_yield=args.dividend,
    )


def _cmd_price(args) -> None:
    params = _params(args)
    method = args.method
    if method == "closed-bsm":
        if args.kind == "unit":
            raise ConfigError("closed-form methods price call/put payoffs only")
        fn = closed_form.bsm_call if args.kind == "call" else closed_form.bsm_put
        if args.strike is None:
            raise ConfigError("--strike is required for call/put payoffs")
        price = fn(
            params.a0, args.strike, params.r, params.sigma, args.maturity, args.dividend
        )
        result = PriceResult(price=price, std_error=0.0, method=method, seed=args.seed)
    elif method == "closed-mb":
        if args.kind == "unit":
            raise ConfigError("closed-form methods price call/put payoffs only")
        if args.strike is None:
            raise ConfigError("--strike is required for call/put payoffs")
        call = closed_form.mb_call(
            closed_form.MbCallInputs(
                a0=params.a0,
                k=args.strike,
                t_mat=args.maturity,
                v=params.v,
                rho=params.rho,
            )
        )
        price = call
        if args.kind == "put":
            discount = term_structure.zcb_price(params, 0.0, args.maturity)
            price = call - params.a0 + args.strike * discount
        result = PriceResult(price=price, std_error=0.0, method=method, seed=args.seed)
    elif method == "quasi-bbsm":
        cfg = _mc_config(args)
        if args.kind == "unit":
            discount = term_structure.zcb_price(params, 0.0, args.maturity)
            result = PriceResult(
                price=discount, std_error=0.0, method=method, seed=args.seed
            )
        else:
            if args.strike is None:
                raise ConfigError("--strike is required for call/put payoffs")
            quasi = closed_form.bbsm_call_quasi(
                params,
                args.strike,
                args.maturity,
                n_paths=cfg.n_paths,
                n_steps=cfg.steps_for(args.maturity),
                seed=cfg.seed,
            )
            price = quasi.price
            if args.kind == "put":
                discount = term_structure.zcb_price(params, 0.0, args.maturity)
                price = quasi.price - params.a0 + args.strike * discount
            result = PriceResult(
                price=price,
                std_error=quasi.std_error,
                method=method,
                n_paths=quasi.n_paths,
                n_steps=quasi.n_steps,
                seed=quasi.seed,
                diagnostics=quasi.diagnostics,
            )
    elif method in ("mc-q1", "mc-q2"):
        spec = _option_spec(args, params)
        pricer = mc_pricer.price_q1 if method == "mc-q1" else mc_pricer.price_q2_bank
        result = pricer(params, spec, _mc_config(args))
    elif method == "tree":
        spec = _option_spec(args, params)
        tree = TreeSpec(
            n=args.tree_steps, t_mat=args.maturity, params=params, p_n=args.p
        )
        price = tree_price(tree, spec, mode=args.tree_mode)
        result = PriceResult(price=price, std_error=0.0, method=method, seed=args.seed)
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigError(f"unknown method {method!r}")
    _emit(args, _result_payload(result))


def _cmd_simulate(args) -> None:
    params = _params(args)
    paths = simulate_paths(
        params,
        args.measure,
        t_mat=args.maturity,
        n_paths=args.paths,
        n_steps=args.steps,
        seed=args.seed,
        dividend_yield=args.dividend,
    )
    terminal = paths.terminal
    payload = {
        "measure": args.measure,
        "n_paths": int(terminal.size),
        "n_steps": int(paths.times.size - 1),
        "seed": args.seed,
        "terminal_mean": float(terminal.mean()),
        "terminal_std": float(terminal.std(ddof=1)) if terminal.size > 1 else 0.0,
        "psi_violations": paths.psi_violations,
    }
    lines = ["time,mean,std"]
    means = paths.paths.mean(axis=0)
    stds = paths.paths.std(axis=0, ddof=1) if terminal.size > 1 else means * 0.0
    for t, m, s in zip(paths.times, means, stds):
        lines.append(f"{t!r},{m!r},{s!r}")
    _emit(args, payload, csv_text="\n".join(lines) + "\n")


def _cmd_curve(args) -> None:
    params = _params(args)
    try:
        maturities = [float(tok) for tok in args.maturities.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"bad maturity list {args.maturities!r}") from None
    if not maturities:
        raise ConfigError("--maturities must list at least one maturity")
    points = term_structure.discount_curve(params, maturities)
    payload = [{"maturity": pt.maturity, "discount": pt.discount} for pt in points]
    lines = ["maturity,discount"]
    lines += [f"{pt.maturity!r},{pt.discount!r}" for pt in points]
    _emit(args, payload, csv_text="\n".join(lines) + "\n")


def _cmd_forward(args) -> None:
    params = _params(args)
    spot = params.a0 if args.spot is None else args.spot
    spec = term_structure.ForwardSpec(
        t=args.valuation_time, t_mat=args.maturity, v0=args.contract_value
    )
    discount = term_structure.zcb_price(params, spec.t, spec.t_mat)
    payload = {
        "forward_price": term_structure.forward_price(params, spec, spot),
        "discount": discount,
        "spot": spot,
        "contract_value": spec.v0,
        "valuation_time": spec.t,
        "maturity": spec.t_mat,
    }
    _emit(args, payload)


def _cmd_futures(args) -> None:
    params = _params(args)
    result = term_structure.futures_price(
        params,
        args.valuation_time,
        args.maturity,
        mc_config=_mc_config(args),
        a_t=args.spot,
    )
    _emit(args, _result_payload(result))


def _cmd_perpetual(args) -> None:
    params = _params(args)
    spec = PerpetualSpec(gamma=args.gamma, w0=args.w0, h0=args.h0, params=params)
    payload = {
        "value": float(perpetual_value(spec, args.x, args.t)),
        "gamma": args.gamma,
        "x": args.x,
        "t": args.t,
    }
    _emit(args, payload)


def _cmd_calibrate(args) -> None:
    if not args.series:
        raise ConfigError("--series is required")
    series = load_price_series(args.series)
    stages = (
        ["drift", "vol", "pn", "riskless"] if args.stage == "all" else [args.stage]
    )
    payload = {}
    drift = vol = None
    if "drift" in stages or "riskless" in stages:
        drift = calibrate_drift(series, window=args.window)
        if "drift" in stages:
            payload["drift"] = {
                **drift.params,
                "objective": drift.objective,
                "iterations": drift.iterations,
            }
    if "vol" in stages or "riskless" in stages:
        vol = calibrate_vol(series, window=args.window)
        if "vol" in stages:
            payload["vol"] = {
                **vol.params,
                "objective": vol.objective,
                "iterations": vol.iterations,
            }
    if "pn" in stages or "riskless" in stages:
        p_n = estimate_pn(series)
        if "pn" in stages:
            payload["pn"] = p_n
    if "riskless" in stages:
        if not args.quotes:
            raise ConfigError("stage 'riskless' requires --quotes")
        if args.spot is None:
            raise ConfigError("stage 'riskless' requires --spot")
        sheet = load_quote_sheet(args.quotes, spot=args.spot)
        fixed = (
            drift.params["a"],
            drift.params["mu"],
            vol.params["v"],
            vol.params["sigma"],
            p_n,
        )
        riskless = calibrate_riskless(sheet, fixed, tree_n=args.tree_steps)
        payload["riskless"] = {
            **riskless.params,
            "objective": riskless.objective,
            "iterations": riskless.iterations,
            "constraint_active": riskless.constraint_active,
        }
    _emit(args, payload)


def _cmd_tree_dump(args) -> None:
    params = _params(args)
    spec = TreeSpec(n=args.tree_steps, t_mat=args.maturity, params=params, p_n=args.p)
    rows = tree_nodes(spec)

    def _opt(value):
        # terminal nodes carry no branch probability or discount
        return None if math.isnan(value) else value

    payload = [
        {"step": n.k, "node_id": n.node_id, "asset": n.a, "q": _opt(n.q),
         "discount": _opt(n.disc)}
        for n in rows
    ]
    lines = ["step,node_id,asset,q,discount"]
    lines += [f"{n.k},{n.node_id},{n.a!r},{n.q!r},{n.disc!r}" for n in rows]
    _emit(args, payload, csv_text="\n".join(lines) + "\n")


_COMMANDS = {
    "price": _cmd_price,
    "simulate": _cmd_simulate,
    "curve": _cmd_curve,
    "forward": _cmd_forward,
    "futures": _cmd_futures,
    "perpetual": _cmd_perpetual,
    "calibrate": _cmd_calibrate,
    "tree-dump": _cmd_tree_dump,
}


def _add_shared(parser: argparse.ArgumentParser, config: bool = True) -> None:
    if config:
        parser.add_argument("--config", required=True, help="model config file")
    parser.add_argument("--seed", type=int, default=0, help="RNG seed (uint64)")
    parser.add_argument(
        "--format", choices=("json", "csv", "text"), default="json"
    )
    parser.add_argument("--out", default=None, help="write output to this path")


def _add_mc(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--paths", type=int, default=100_000)
    parser.add_argument("--steps", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bbsm", description="Unified diffusion-market pricing toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("price", help="price a European claim")
    _add_shared(p)
    _add_mc(p)
    p.add_argument(
        "--method",
        required=True,
        choices=("closed-bsm", "closed-mb", "quasi-bbsm", "mc-q1", "mc-q2", "tree"),
    )
    p.add_argument("--kind", choices=("call", "put", "unit"), default="call")
    p.add_argument("--strike", type=float, default=None)
    p.add_argument("--maturity", type=float, required=True)
    p.add_argument("--dividend", type=float, default=0.0)
    p.add_argument("--tree-steps", type=int, default=200)
    p.add_argument(
        "--tree-mode",
        choices=("auto", "recombining", "exact", "bucketed"),
        default="auto",
    )
    p.add_argument("--p", type=float, default=0.5, help="natural up-probability")

    p = sub.add_parser("simulate", help="simulate asset paths")
    _add_shared(p)
    _add_mc(p)
    p.add_argument("--measure", choices=("natural", "q1", "q2"), default="natural")
    p.add_argument("--maturity", type=float, required=True)
    p.add_argument("--dividend", type=float, default=0.0)

    p = sub.add_parser("curve", help="discount curve over maturities")
    _add_shared(p)
    p.add_argument("--maturities", required=True, help="comma-separated years")

    p = sub.add_parser("forward", help="forward price of the asset")
    _add_shared(p)
    p.add_argument("--maturity", type=float, required=True)
    p.add_argument("--valuation-time", type=float, default=0.0)
    p.add_argument("--spot", type=float, default=None)
    p.add_argument("--contract-value", type=float, default=0.0)

    p = sub.add_parser("futures", help="futures price of the asset")
    _add_shared(p)
    _add_mc(p)
    p.add_argument("--maturity", type=float, required=True)
    p.add_argument("--valuation-time", type=float, default=0.0)
    p.add_argument("--spot", type=float, default=None)

    p = sub.add_parser("perpetual", help="separable perpetual claim value")
    _add_shared(p)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--w0", type=float, default=0.0)
    p.add_argument("--h0", type=float, default=1.0)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--t", type=float, default=0.0)

    p = sub.add_parser("calibrate", help="fit model parameters from data")
    _add_shared(p, config=False)
    p.add_argument(
        "--stage", choices=("drift", "vol", "pn", "riskless", "all"), default="all"
    )
    p.add_argument("--series", default=None, help="date,price CSV")
    p.add_argument("--quotes", default=None, help="maturity_years,strike,price,kind CSV")
    p.add_argument("--spot", type=float, default=None)
    p.add_argument("--window", type=int, default=10)
    p.add_argument("--tree-steps", type=int, default=10)

    p = sub.add_parser("tree-dump", help="dump lattice nodes")
    _add_shared(p)
    p.add_argument("--maturity", type=float, required=True)
    p.add_argument("--tree-steps", type=int, default=6)
    p.add_argument("--p", type=float, default=0.5)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    handler = _COMMANDS[args.command]
    try:
        handler(args)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ModelError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    return 0


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
