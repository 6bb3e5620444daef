"""Command-line front end.

Exit status: 0 success, 1 a ``verify`` check failed, 2 the input does not
match its schema, 3 the scenario or bids cannot cover the demand, 4 the
mechanism refused the input (non-regular distribution, path-dependent XOR
payment, inconsistent curve).
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import io, verify
from .auction import MECHANISMS, make_mechanism
from .dist import is_regular
from .errors import AuctionError, InfeasibleError
from .model import validate_scenario
from .steps import DEFAULT_SCAN_STEPS
from .xor import XOR_SCAN_STEPS, ocax_payments, region_partition, regions_csv, solve_ocax

EXIT_OK, EXIT_CHECK_FAILED, EXIT_SCHEMA, EXIT_INFEASIBLE, EXIT_REFUSED = 0, 1, 2, 3, 4


def _table(headers, rows) -> str:
    cells = [[str(h) for h in headers]] + [[_fmt(v) for v in r] for r in rows]
    widths = [max(len(r[k]) for r in cells) for k in range(len(headers))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _fmt(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.6g}"
    return "-" if v is None else str(v)


def _emit(doc, out: Optional[str]) -> None:
    if out:
        io.write_json(doc, out)
        print(f"wrote {out}")


def _load_scenario(path):
    scenario = io.load_scenario(path)
    report = validate_scenario(scenario)
    if not report.ok:
        infeasible = [p for p in report.problems if p.startswith("infeasible")]
        if infeasible:
            raise InfeasibleError("; ".join(infeasible))
        raise io.SchemaError("; ".join(report.problems))
    return scenario


def _json_safe(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    if isinstance(v, np.generic):
        return _json_safe(v.item())
    return v


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_run(args) -> int:
    scenario = _load_scenario(args.scenario)
    bids = io.load_bids(args.bids, scenario)
    kwargs = {} if args.mechanism == "kth-price" else {"scan_steps": args.scan_steps}
    mech = make_mechanism(args.mechanism, **kwargs)
    outcome = mech.run(scenario, bids)
    doc = io.outcome_to_dict(outcome)
    doc["mechanism"] = args.mechanism
    rows = []
    for b in bids:
        i = b.seller_id
        h = None if outcome.virtual_costs is None else outcome.virtual_costs[i - 1]
        rows.append((i, b.reported_cost, b.reported_capacity, h, outcome.quantity(i), outcome.payment(i)))
    print(_table(("seller", "cost", "capacity", "score", "quantity", "payment"), rows))
    print(f"objective {outcome.objective:.6g}   total payment {sum(outcome.payments):.6g}")
    _emit(doc, args.output)
    return EXIT_OK


def cmd_xor_run(args) -> int:
    bidders, items = io.load_xor(args.scenario)
    sel = solve_ocax(bidders, items)
    pays = ocax_payments(bidders, items, scan_steps=args.scan_steps, check_path=not args.no_path_check)
    doc = {
        "selection": [{"bidder": b.id, "bundle": c or None,
                       "items": sorted(b.bundle(c)) if c else []} for b, c in zip(bidders, sel.choices)],
        "objective": sel.objective,
        "payments": [{"bidder": b.id, "amount": p.payment, "utility_at_bid": p.utility, "path_gap": p.path_gap}
                     for b, p in zip(bidders, pays)],
    }
    print(_table(("bidder", "bid1", "bid2", "wins", "payment", "path gap"),
                 [(b.id, b.bid1, b.bid2, c or None, p.payment, p.path_gap)
                  for b, c, p in zip(bidders, sel.choices, pays)]))
    print(f"objective {sel.objective:.6g}")
    _emit(doc, args.output)
    return EXIT_OK


def cmd_xor_regions(args) -> int:
    bidders, items = io.load_xor(args.scenario)
    ids = [b.id for b in bidders]
    if args.bidder not in ids:
        raise io.SchemaError(f"unknown bidder {args.bidder}", "bidders")
    report = region_partition(bidders, items, ids.index(args.bidder), grid=args.grid)
    text = regions_csv(report)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
        print(f"wrote {args.output}")
    else:
        sys.stdout.write(text)
    counts = {k: int(np.sum(report.labels == k)) for k in (1, 2, 3)}
    print(_table(("region", "points"), [(f"R{k}", v) for k, v in counts.items()]))
    for v in report.violations:
        print("violation:", v)
    return EXIT_OK if report.ok else EXIT_CHECK_FAILED


def _verify_setup(args, scenario):
    """Opponent profiles, mode and per-seller true types."""
    if args.bids:
        bids = io.load_bids(args.bids, scenario)
        truth = [(b.reported_cost, b.reported_capacity) for b in bids]
        return [truth], "dsic", truth
    rng = np.random.default_rng(args.seed)
    if args.mode == "dsic":
        profiles = [verify.draw_types(scenario, rng) for _ in range(args.profiles)]
        return profiles, "dsic", profiles[0]
    truth = verify.draw_types(scenario, rng)
    return None, "bic", truth


def cmd_verify(args) -> int:
    scenario = _load_scenario(args.scenario)
    kwargs = {} if args.mechanism == "kth-price" else {"scan_steps": args.scan_steps}
    mech = make_mechanism(args.mechanism, **kwargs)
    profiles, mode, truth = _verify_setup(args, scenario)
    sellers = [args.seller] if args.seller else [s.id for s in scenario.sellers]
    common = dict(profiles=profiles, n_draws=args.draws, seed=args.seed + 1,
                  cost_points=args.cost_points, capacity_points=args.capacity_points)

    per_seller, rows = [], []
    agg = {k: {"passed": True, "worst": 0.0, "where": None, "seller": None} for k in ("1", "2", "3")}
    gap_best = {"value": 0.0, "seller": None, "bid": None}
    skipped = 0
    for sid in sellers:
        rep = verify.check_incentive_conditions(mech, scenario, sid, scan_steps=args.harness_scan_steps, **common)
        br = verify.best_response_gap(mech, scenario, sid, truth[sid - 1], **common)
        skipped += rep.skipped_infeasible + br.skipped_infeasible
        conds = (rep.condition1, rep.condition2, rep.condition3)
        for k, c in zip(("1", "2", "3"), conds):
            a = agg[k]
            a["passed"] = a["passed"] and c.passed
            if not (c.worst <= a["worst"]):
                a.update(worst=c.worst, where=c.where, seller=sid)
        if not math.isnan(br.gap) and br.gap > gap_best["value"]:
            gap_best.update(value=br.gap, seller=sid, bid=br.best_bid)
        per_seller.append({
            "seller": sid,
            "true_type": list(truth[sid - 1]),
            **{f"condition{k}": {"passed": c.passed, "worst": c.worst, "where": c.where, "note": c.note}
               for k, c in zip(("1", "2", "3"), conds)},
            "best_response_gap": br.gap,
            "best_bid": br.best_bid,
            "truthful_utility": br.truthful_utility,
        })
        rows.append((sid, *("pass" if c.passed else "FAIL" for c in conds), br.gap, br.best_bid))
    gap_ok = gap_best["value"] <= verify.DETERMINISTIC_TOL
    passed = all(a["passed"] for a in agg.values()) and gap_ok
    doc = {
        "mechanism": args.mechanism,
        "mode": mode,
        "passed": passed,
        **{f"condition{k}": a for k, a in agg.items()},
        "best_response_gap": {**gap_best, "passed": gap_ok},
        "details": {
            "sellers": per_seller,
            "tolerance": verify.DETERMINISTIC_TOL,
            "se_multiplier": verify.SE_MULTIPLIER,
            "cost_points": args.cost_points,
            "capacity_points": args.capacity_points,
            "seed": args.seed,
            "skipped_infeasible": skipped,
        },
    }
    doc = _deep_json_safe(doc)
    print(_table(("seller", "cond1", "cond2", "cond3", "br gap", "best bid"), rows))
    print(f"{mode} verification of {args.mechanism}: {'PASS' if passed else 'FAIL'}")
    _emit(doc, args.output)
    return EXIT_OK if passed else EXIT_CHECK_FAILED


def _deep_json_safe(v):
    if isinstance(v, dict):
        return {k: _deep_json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_deep_json_safe(x) for x in v]
    return _json_safe(v)


def cmd_compare(args) -> int:
    scenario = _load_scenario(args.scenario)
    names = args.mechanisms.split(",")
    for n in names:
        if n not in MECHANISMS:
            raise io.SchemaError(f"unknown mechanism {n!r}", "--mechanisms")
    mechs = {n: make_mechanism(n) if n == "kth-price" else make_mechanism(n, scan_steps=args.scan_steps)
             for n in names}
    base = names[0]
    results, rows = [], []
    for n in names:
        est = verify.expected_cost(mechs[n], scenario, args.samples, seed=args.seed)
        entry = {"mechanism": n, "mean_cost": est.mean, "se": est.se, "samples": est.samples}
        if n != base:
            cmp = verify.compare_costs(mechs[base], mechs[n], scenario, args.samples, seed=args.seed)
            entry["paired_difference"] = {"mean": cmp.difference.mean, "se": cmp.difference.se,
                                          "baseline_not_worse": cmp.baseline_not_worse}
        results.append(entry)
        rows.append((n, est.mean, est.se, entry.get("paired_difference", {}).get("mean")))
    print(_table(("mechanism", "mean cost", "se", f"{base} - this"), rows))
    _emit(_deep_json_safe({"baseline": base, "seed": args.seed, "results": results}), args.output)
    return EXIT_OK


def cmd_regularity(args) -> int:
    scenario = _load_scenario(args.scenario)
    rows, out = [], []
    for s in scenario.sellers:
        r = is_regular(s.distribution, args.grid)
        out.append({"seller": s.id, "regular": r.regular, "counterexample": r.counterexample, "reason": r.reason})
        rows.append((s.id, type(s.distribution).__name__, "yes" if r.regular else "NO", r.reason or None))
    print(_table(("seller", "distribution", "regular", "reason"), rows))
    doc = _deep_json_safe({"grid": args.grid, "all_regular": all(o["regular"] for o in out), "sellers": out})
    _emit(doc, args.output)
    return EXIT_OK if doc["all_regular"] else EXIT_CHECK_FAILED


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    p = argparse.ArgumentParser(prog="optauction", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)
    mech_names = sorted(MECHANISMS)

    def common(sp):
        sp.add_argument("-o", "--output", help="output file (JSON, or CSV for region grids)")
        sp.add_argument("--seed", type=int, default=0, help="seed for every random draw")

    r = sub.add_parser("run", help="run a single-minded mechanism on bids", formatter_class=fmt)
    r.add_argument("scenario")
    r.add_argument("bids")
    r.add_argument("--mechanism", choices=mech_names, default="optimal")
    r.add_argument("--scan-steps", type=int, default=DEFAULT_SCAN_STEPS, help="coarse scan before bisection")
    common(r)
    r.set_defaults(func=cmd_run)

    x = sub.add_parser("xor", help="XOR-bidder unit-demand auction")
    xs = x.add_subparsers(dest="xor_command", required=True)
    xr = xs.add_parser("run", help="selection and payments", formatter_class=fmt)
    xr.add_argument("scenario")
    xr.add_argument("--scan-steps", type=int, default=XOR_SCAN_STEPS)
    xr.add_argument("--no-path-check", action="store_true", help="skip the second axis order")
    common(xr)
    xr.set_defaults(func=cmd_xor_run)
    xg = xs.add_parser("regions", help="label grid over one bidder's cost square", formatter_class=fmt)
    xg.add_argument("scenario")
    xg.add_argument("--bidder", type=int, required=True, help="bidder id")
    xg.add_argument("--grid", type=int, default=64, help="lattice points per axis")
    common(xg)
    xg.set_defaults(func=cmd_xor_regions)

    v = sub.add_parser("verify", help="empirical IC/IR certification", formatter_class=fmt)
    v.add_argument("scenario")
    v.add_argument("--mechanism", choices=mech_names, required=True)
    v.add_argument("--bids", help="truthful profile to test against (DSIC with one fixed profile)")
    v.add_argument("--seller", type=int, help="check one seller only")
    v.add_argument("--mode", choices=("dsic", "bic"), default="dsic",
                   help="fixed drawn profiles or Monte Carlo opponents (ignored with --bids)")
    v.add_argument("--profiles", type=int, default=1, help="fixed profiles in dsic mode")
    v.add_argument("--draws", type=int, default=32, help="Monte Carlo draws in bic mode")
    v.add_argument("--cost-points", type=int, default=verify.COST_POINTS)
    v.add_argument("--capacity-points", type=int, default=verify.CAPACITY_POINTS)
    v.add_argument("--scan-steps", type=int, default=DEFAULT_SCAN_STEPS, help="mechanism curve scan")
    v.add_argument("--harness-scan-steps", type=int, default=verify.HARNESS_SCAN_STEPS,
                   help="independent curve scan used for the integral identity")
    common(v)
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("compare", help="Monte Carlo expected procurement cost", formatter_class=fmt)
    c.add_argument("scenario")
    c.add_argument("--mechanisms", default="optimal,efficient,posted-price",
                   help="comma-separated; the first is the baseline")
    c.add_argument("--samples", type=int, default=200)
    c.add_argument("--scan-steps", type=int, default=64)
    common(c)
    c.set_defaults(func=cmd_compare)

    g = sub.add_parser("regularity", help="check every seller's virtual cost monotonicity", formatter_class=fmt)
    g.add_argument("scenario")
    g.add_argument("--grid", type=int, default=32, help="lattice points per axis")
    common(g)
    g.set_defaults(func=cmd_regularity)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except io.SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except AuctionError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())
