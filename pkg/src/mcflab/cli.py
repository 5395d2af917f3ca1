"""Command-line entry point.

Exit status: 0 when every audit passes, 1 on an audit failure or a module
error, 2 on a usage or configuration error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import apply_overrides, defaults, parse_config
from .errors import ConfigError, McfLabError, SeedNotCovered
from .estimates import audit_barrier, audit_interior, audit_pinching_preservation, audit_umbilic
from .flow import FlowHistory, run_flow
from .geometry import pinching_constant
from .presets import (PRESETS, Context, Outcome, classify_outcome, execute, make_flow_config,
                      make_profile, resolve, write_json, write_table)
from .spacetime import check_pick, pick_point, point_at

ESTIMATE_PRESETS = {"umbilic": "umbilic-audit", "interior": "interior-audit",
                    "pinching": "pinch-preserve", "barrier": "barrier-audit"}


def _globals() -> argparse.ArgumentParser:
    g = argparse.ArgumentParser(add_help=False)
    s = argparse.SUPPRESS
    g.add_argument("--out", default=s, help="output directory (default: runs/<command>)")
    g.add_argument("--config", default=s, help="INI configuration file")
    g.add_argument("--threads", type=int, default=s, help="worker threads for independent runs")
    g.add_argument("--seed", type=int, default=s, help="seed for randomized inputs")
    g.add_argument("--set", action="append", default=s, metavar="SECTION.KEY=VALUE",
                   help="override one configuration value (repeatable)")
    return g


def build_parser() -> argparse.ArgumentParser:
    g = _globals()
    ap = argparse.ArgumentParser(prog="mcflab", parents=[g],
                                 description="Mean curvature flow laboratory")
    sub = ap.add_subparsers(dest="command", required=True)

    f = sub.add_parser("flow", parents=[g], help="evolve a closed profile and save its history")
    f.add_argument("--shape", choices=("sphere", "ellipsoid", "capsule"))
    f.add_argument("--n", type=int)
    f.add_argument("--nodes", type=int)
    f.add_argument("--t-end", type=float)
    f.add_argument("--snapshot-every", type=int)
    f.add_argument("--record-times")

    s = sub.add_parser("soliton", parents=[g], help="shoot a translator or expander and audit it")
    s.add_argument("--kind", choices=("translator", "expander"), default="translator")
    s.add_argument("--n", type=int)
    s.add_argument("--rho-max", type=float)
    s.add_argument("--step", type=float)
    s.add_argument("--tip-height", type=float)
    s.add_argument("--alpha-list")

    v = sub.add_parser("verify", parents=[g], help="audit a curvature estimate")
    v.add_argument("--estimate", required=True, choices=tuple(ESTIMATE_PRESETS))
    v.add_argument("--history", help="saved flow history; without it the flows are run")
    v.add_argument("--n", type=int)
    v.add_argument("--L", dest="L")
    v.add_argument("--alpha", type=float)
    v.add_argument("--eps-list")
    v.add_argument("--r")
    v.add_argument("--tol", type=float)
    v.add_argument("--p", type=float, help="axial coordinate of the barrier base point")
    v.add_argument("--e", help="barrier direction as e_axis,e_perp")

    p = sub.add_parser("pick", parents=[g], help="curvature point-picking with a certificate")
    p.add_argument("--history", help="saved flow history; without it random fields are used")
    p.add_argument("--delta", type=float)
    p.add_argument("--seed-snapshot", type=int)
    p.add_argument("--seed-node", type=int)
    p.add_argument("--trials", type=int)

    c = sub.add_parser("classify", parents=[g], help="singularity type evidence for a flow")
    c.add_argument("--history", help="saved flow history; without it the configured flow is run")
    c.add_argument("--horizons")

    e = sub.add_parser("existence", parents=[g], help="truncate, mollify and flow an unbounded body")
    e.add_argument("--body", choices=("paraboloid", "cone", "sphere"))
    e.add_argument("--n", type=int)
    e.add_argument("--heights")
    e.add_argument("--epss")
    e.add_argument("--delta", type=float)

    r = sub.add_parser("preset", parents=[g], help="run a registered experiment")
    r.add_argument("name", choices=sorted(PRESETS))
    return ap


def _flag_overrides(args) -> list:
    """Map subcommand flags onto configuration keys."""
    cmd = args.command
    table = {
        "flow": {"shape": "flow.shape", "n": "general.n", "nodes": "flow.nodes",
                 "t_end": "flow.t_end", "snapshot_every": "flow.snapshot_every",
                 "record_times": "flow.record_times"},
        "soliton": {"kind": "soliton.kind", "n": "general.n", "rho_max": "soliton.rho_max",
                    "step": "soliton.step", "tip_height": "soliton.tip_height",
                    "alpha_list": "soliton.alpha_list"},
        "pick": {"delta": "pick.delta", "seed_snapshot": "pick.seed_snapshot",
                 "seed_node": "pick.seed_node", "trials": "pick.trials"},
        "classify": {"horizons": "classify.horizons"},
        "existence": {"body": "existence.body", "n": "general.n", "heights": "existence.heights",
                      "epss": "existence.epss", "delta": "existence.delta"},
        "verify": {"n": "general.n", "p": "barrier.p_z"},
    }.get(cmd, {})
    out = [(key, getattr(args, attr)) for attr, key in table.items()
           if getattr(args, attr, None) is not None]
    if cmd == "verify":
        est = args.estimate
        sec = {"pinching": "pinching", "umbilic": "umbilic", "interior": "interior"}.get(est)
        if args.L is not None:
            out.append((f"{'interior' if est == 'interior' else 'umbilic'}.L", args.L))
        if args.alpha is not None:
            out.append((f"{'pinching' if est == 'pinching' else 'umbilic'}.alpha", args.alpha))
        if args.eps_list is not None:
            out.append(("umbilic.eps_list", args.eps_list))
        if args.r is not None:
            out.append(("interior.r", args.r))
        if args.tol is not None and sec is not None:
            out.append((f"{sec}.{'tol' if sec == 'pinching' else 'stability_tol'}", args.tol))
        if args.e is not None:
            parts = args.e.split(",")
            if len(parts) != 2:
                raise ConfigError("--e needs two comma-separated components", "barrier.e")
            out += [("barrier.e_axis", parts[0]), ("barrier.e_perp", parts[1])]
    return out


def _overrides(args) -> list:
    out = []
    for item in getattr(args, "set", None) or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects SECTION.KEY=VALUE, got {item!r}", key)
        out.append((key.strip(), val.strip()))
    if getattr(args, "seed", None) is not None:
        out.append(("general.seed", args.seed))
    if getattr(args, "threads", None) is not None:
        out.append(("general.threads", args.threads))
    return out + _flag_overrides(args)


def _resolve(args, preset=None) -> dict:
    text = ""
    if getattr(args, "config", None):
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read configuration: {exc}", "--config") from None
    if preset is not None:
        return resolve(preset, text, _overrides(args))
    return apply_overrides(parse_config(text, defaults()), _overrides(args))


def _load(path) -> FlowHistory:
    try:
        return FlowHistory.load(path)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot load history from {path}: {exc}", "--history") from None


# -- subcommands operating on a saved history -----------------------------
def _flow(ctx: Context) -> Outcome:
    cfg = ctx.cfg
    hist = run_flow(make_profile(cfg), make_flow_config(cfg))
    hist.save(ctx.out / "history")
    write_table(ctx.out / "max_H.csv", ("t", "max_H"), zip(hist.times, hist.max_H()))
    summary = {"termination": hist.termination.value, "t_last": hist[-1].t,
               "snapshots": len(hist), "steps": hist.meta.get("steps")}
    print(f"flow: {summary['termination']} at t={summary['t_last']:.9g} "
          f"({summary['snapshots']} snapshots)")
    return Outcome(hist.termination.value != "Degenerate", summary)


def _verify_history(est: str, hist: FlowHistory):
    def run(ctx: Context) -> Outcome:
        cfg = ctx.cfg
        if est == "pinching":
            P = cfg["pinching"]
            alpha = P["alpha"] if P["alpha"] is not None else pinching_constant(hist[0].field, "H")
            reps = [audit_pinching_preservation(hist, alpha, P["tol"])]
        elif est == "umbilic":
            U = cfg["umbilic"]
            alpha = U["alpha"] if U["alpha"] is not None else \
                0.99 * pinching_constant(hist[0].field, "H")
            reps = [audit_umbilic(hist, U["L"], alpha, U["eps_list"],
                                  stability_tol=U["stability_tol"])]
        elif est == "interior":
            I = cfg["interior"]
            zc = I["center_z"] if I["center_z"] is not None else hist[0].profile.origin
            reps = [audit_interior(hist, (zc, 0.0), r, L) for r in I["r"] for L in I["L"]]
        else:
            B = cfg["barrier"]
            reps = [audit_barrier(hist, (B["p_z"], 0.0), (B["e_axis"], B["e_perp"]))]
        for rep in reps:
            print(rep.summary())
        write_json(ctx.out / f"{est}.json", [r.to_dict() for r in reps])
        return Outcome(all(r.passed for r in reps), {"reports": [r.summary() for r in reps]})
    return run


def _pick_history(hist: FlowHistory):
    def run(ctx: Context) -> Outcome:
        P = ctx.cfg["pick"]
        seed = point_at(hist, P["seed_snapshot"], P["seed_node"])
        try:
            Y, cert = pick_point(hist, seed, P["delta"])
        except SeedNotCovered as exc:
            write_json(ctx.out / "certificate.json", {"error": "SeedNotCovered", "message": str(exc)})
            print(f"pick: seed not covered ({exc})")
            return Outcome(False, {"error": "SeedNotCovered"})
        chain = [point_at(hist, c["snapshot"], c["node"]) for c in cert["chain"]]
        chk = check_pick(hist, seed, Y, P["delta"], chain)
        write_json(ctx.out / "certificate.json", {"certificate": cert, "check": chk})
        print(f"pick: {'PASS' if chk['pass'] else 'FAIL'} (chain length {cert['chain_length']}, "
              f"H(Y)={cert['result']['H']:.6g})")
        return Outcome(chk["pass"], {"result": cert["result"], "check": chk})
    return run


def dispatch(args) -> int:
    cmd = args.command
    default_out = Path("runs") / (args.name if cmd == "preset" else cmd)
    out = Path(getattr(args, "out", None) or default_out)
    runner, name, extra = None, cmd, {"command": cmd}
    history = getattr(args, "history", None)
    if cmd == "preset":
        name = args.name
        cfg = _resolve(args, name)
    elif cmd == "flow":
        cfg = _resolve(args)
        runner = _flow
    elif cmd == "soliton":
        name = "bowl-scan" if args.kind == "translator" else "expander-scan"
        cfg = _resolve(args, name)
    elif cmd == "existence":
        name = "existence-construction"
        cfg = _resolve(args, name)
    elif cmd == "verify":
        name = ESTIMATE_PRESETS[args.estimate]
        cfg = _resolve(args, name)
        if history:
            runner, extra["history"] = _verify_history(args.estimate, _load(history)), history
    elif cmd == "pick":
        name = "point-pick-demo"
        cfg = _resolve(args, name)
        if history:
            runner, extra["history"] = _pick_history(_load(history)), history
    else:  # classify
        name = "type-classify"
        cfg = _resolve(args, name)
        if history:
            hist = _load(history)
            runner, extra["history"] = (lambda ctx: classify_outcome(ctx, hist)), history
    outcome = execute(name, cfg, out, runner, extra)
    print(f"{name}: {'PASS' if outcome.passed else 'FAIL'} -> {out}")
    return 0 if outcome.passed else 1


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return dispatch(args)
    except ConfigError as exc:
        key = f" [{exc.key}]" if exc.key else ""
        print(f"config error{key}: {exc}", file=sys.stderr)
        return 2
    except (McfLabError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
