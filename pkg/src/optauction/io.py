"""JSON input and output.

Documents are checked against the bundled JSON Schemas first, then against
the semantic rules that a schema cannot express (distribution parameters,
bundle references).  Every failure raises :class:`SchemaError` naming the
offending field as a dotted path such as ``sellers[2].cost_range``.

Floats are written with ``repr`` precision, so a dump followed by a load
reproduces every number exactly.
"""
from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any, Union

import jsonschema

from .dist import (CapacityLinkedUniform, Histogram1D, IndependentUniform, TabulatedGrid,
                   Uniform1D)
from .errors import AuctionError
from .model import Item, Outcome, Scenario, SellerBid, SellerSpec
from .xor import XorBidder

PathLike = Union[str, Path]


class SchemaError(AuctionError, ValueError):
    """Input document does not match its schema; ``path`` locates the field."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path or '<root>'}: {message}")
        self.path = path


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    text = resources.files("optauction").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def _path(parts) -> str:
    out = ""
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out


def validate(doc: Any, schema_name: str) -> None:
    """Raise :class:`SchemaError` for the first violation in document order."""
    validator = jsonschema.Draft202012Validator(load_schema(schema_name))
    errors = sorted(validator.iter_errors(doc), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if errors:
        err = errors[0]
        raise SchemaError(err.message, _path(err.absolute_path))


def read_json(path: PathLike) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON ({exc.msg} at line {exc.lineno})") from exc


def dumps(doc: Any) -> str:
    return json.dumps(doc, indent=2, sort_keys=False, allow_nan=False) + "\n"


def write_json(doc: Any, path: PathLike) -> None:
    Path(path).write_text(dumps(doc), encoding="utf-8")


# ---------------------------------------------------------------------------
# single-minded scenarios and bids
# ---------------------------------------------------------------------------


def _distribution(doc: dict, cost_range, capacity_range, where: str):
    family = doc["family"]
    params = doc.get("params", {})
    c_lo, c_hi = cost_range
    q_lo, q_hi = capacity_range
    try:
        if family == "independent_uniform":
            return IndependentUniform(c_lo, c_hi, q_lo, q_hi)
        if family == "capacity_linked_uniform":
            if "slope" not in params:
                raise SchemaError("'slope' is a required property", f"{where}.params")
            return CapacityLinkedUniform(c_lo, c_hi, q_lo, q_hi, float(params["slope"]))
        # tabulated_grid
        if "mass" not in params:
            raise SchemaError("'mass' is a required property", f"{where}.params")
        mass = params["mass"]
        if not mass or not all(isinstance(r, list) and r for r in mass):
            raise SchemaError("mass must be a non-empty list of non-empty rows", f"{where}.params.mass")
        grid = TabulatedGrid.uniform_cells(cost_range, capacity_range, mass)
        if "cost_edges" in params or "capacity_edges" in params:
            grid = TabulatedGrid(tuple(params.get("cost_edges") or grid.cost_edges),
                                 tuple(params.get("capacity_edges") or grid.capacity_edges), mass)
        if (abs(grid.cost_edges[0] - c_lo) > 1e-12 or abs(grid.cost_edges[-1] - c_hi) > 1e-12
                or abs(grid.capacity_edges[0] - q_lo) > 1e-12 or abs(grid.capacity_edges[-1] - q_hi) > 1e-12):
            raise SchemaError("grid edges must span the seller's cost and capacity ranges", f"{where}.params")
        return grid
    except SchemaError:
        raise
    except (ValueError, TypeError, IndexError) as exc:
        raise SchemaError(str(exc), f"{where}.params") from exc


def _distribution_doc(dist) -> dict:
    if isinstance(dist, IndependentUniform):
        return {"family": "independent_uniform", "params": {}}
    if isinstance(dist, CapacityLinkedUniform):
        return {"family": "capacity_linked_uniform", "params": {"slope": dist.slope}}
    if isinstance(dist, TabulatedGrid):
        return {"family": "tabulated_grid", "params": {
            "cost_edges": list(dist.cost_edges),
            "capacity_edges": list(dist.capacity_edges),
            "mass": [list(r) for r in dist.mass],
        }}
    raise TypeError(f"cannot serialise distribution {type(dist).__name__}")


def scenario_from_dict(doc: dict) -> Scenario:
    validate(doc, "scenario")
    items = tuple(Item(it["id"], float(it["demand"])) for it in doc["items"])
    known = {it.id for it in items}
    sellers = []
    for k, s in enumerate(doc["sellers"]):
        where = f"sellers[{k}]"
        if s["id"] != k + 1:
            raise SchemaError(f"seller ids must be 1..n in order (expected {k + 1})", f"{where}.id")
        unknown = sorted(set(s["bundle"]) - known)
        if unknown:
            raise SchemaError(f"unknown items {unknown}", f"{where}.bundle")
        cr = tuple(float(v) for v in s["cost_range"])
        qr = tuple(float(v) for v in s["capacity_range"])
        if not cr[0] < cr[1]:
            raise SchemaError("cost range must satisfy lo < hi", f"{where}.cost_range")
        if not 0 <= qr[0] <= qr[1]:
            raise SchemaError("capacity range must satisfy 0 <= lo <= hi", f"{where}.capacity_range")
        dist = _distribution(s["distribution"], cr, qr, f"{where}.distribution")
        sellers.append(SellerSpec(s["id"], frozenset(s["bundle"]), cr, qr, dist))
    return Scenario(items, tuple(sellers))


def scenario_to_dict(scenario: Scenario) -> dict:
    return {
        "items": [{"id": it.id, "demand": it.demand} for it in scenario.items],
        "sellers": [{
            "id": s.id,
            "bundle": sorted(s.bundle),
            "cost_range": list(s.cost_range),
            "capacity_range": list(s.capacity_range),
            "distribution": _distribution_doc(s.distribution),
        } for s in scenario.sellers],
    }


def bids_from_dict(doc: dict, scenario: Scenario) -> list[SellerBid]:
    """Bids ordered by seller id; every seller must bid exactly once."""
    validate(doc, "bids")
    by_id = {}
    for k, b in enumerate(doc["bids"]):
        where = f"bids[{k}]"
        sid = b["seller"]
        if sid in by_id:
            raise SchemaError(f"duplicate bid for seller {sid}", f"{where}.seller")
        if not 1 <= sid <= scenario.n_sellers:
            raise SchemaError(f"unknown seller {sid}", f"{where}.seller")
        spec = scenario.seller(sid)
        c, q = float(b["cost"]), float(b["capacity"])
        if not spec.cost_lo <= c <= spec.cost_hi:
            raise SchemaError(f"cost {c} outside [{spec.cost_lo}, {spec.cost_hi}]", f"{where}.cost")
        if not spec.capacity_lo <= q <= spec.capacity_hi:
            raise SchemaError(f"capacity {q} outside [{spec.capacity_lo}, {spec.capacity_hi}]", f"{where}.capacity")
        by_id[sid] = SellerBid(sid, c, q)
    missing = [i for i in range(1, scenario.n_sellers + 1) if i not in by_id]
    if missing:
        raise SchemaError(f"missing bids for sellers {missing}", "bids")
    return [by_id[i] for i in range(1, scenario.n_sellers + 1)]


def bids_to_dict(bids) -> dict:
    return {"bids": [{"seller": b.seller_id, "cost": b.reported_cost, "capacity": b.reported_capacity}
                     for b in bids]}


def outcome_to_dict(outcome: Outcome) -> dict:
    """``{allocation, payments, objective, virtual_costs}`` plus scalar details."""
    n = len(outcome.payments)
    doc = {
        "allocation": [{"seller": i, "quantity": outcome.quantity(i)} for i in range(1, n + 1)],
        "payments": [{"seller": i, "amount": outcome.payment(i)} for i in range(1, n + 1)],
        "objective": outcome.objective,
        "virtual_costs": None if outcome.virtual_costs is None else [float(v) for v in outcome.virtual_costs],
    }
    for k, v in outcome.details.items():
        if isinstance(v, (int, float, str, bool)) or v is None:
            doc[k] = v
    return doc


def load_scenario(path: PathLike) -> Scenario:
    return scenario_from_dict(read_json(path))


def load_bids(path: PathLike, scenario: Scenario) -> list[SellerBid]:
    return bids_from_dict(read_json(path), scenario)


# ---------------------------------------------------------------------------
# XOR scenarios
# ---------------------------------------------------------------------------


def _xor_dist(doc, cost_range, where):
    if doc is None or doc["family"] == "uniform":
        return Uniform1D(*cost_range)
    params = doc.get("params", {})
    if "mass" not in params:
        raise SchemaError("'mass' is a required property", f"{where}.params")
    mass = params["mass"]
    edges = params.get("edges")
    try:
        if edges is None:
            step = (cost_range[1] - cost_range[0]) / len(mass)
            edges = [cost_range[0] + k * step for k in range(len(mass))] + [cost_range[1]]
        dist = Histogram1D(tuple(edges), tuple(mass))
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise SchemaError(str(exc), f"{where}.params") from exc
    if abs(dist.lo - cost_range[0]) > 1e-12 or abs(dist.hi - cost_range[1]) > 1e-12:
        raise SchemaError("histogram edges must span the cost range", f"{where}.params.edges")
    return dist


def xor_from_dict(doc: dict) -> tuple[list[XorBidder], list[str]]:
    validate(doc, "xor_scenario")
    items = list(doc["items"])
    known = set(items)
    bidders = []
    for k, b in enumerate(doc["bidders"]):
        where = f"bidders[{k}]"
        if b["id"] != k + 1:
            raise SchemaError(f"bidder ids must be 1..n in order (expected {k + 1})", f"{where}.id")
        for key in ("bundle1", "bundle2"):
            unknown = sorted(set(b[key]) - known)
            if unknown:
                raise SchemaError(f"unknown items {unknown}", f"{where}.{key}")
        cr = tuple(float(v) for v in b["cost_range"])
        if not cr[0] < cr[1]:
            raise SchemaError("cost range must satisfy lo < hi", f"{where}.cost_range")
        dists = b.get("distributions", [None, None])
        d1 = _xor_dist(dists[0], cr, f"{where}.distributions[0]")
        d2 = _xor_dist(dists[1], cr, f"{where}.distributions[1]")
        for j, c in enumerate(b["bids"]):
            if not cr[0] <= c <= cr[1]:
                raise SchemaError(f"bid {c} outside [{cr[0]}, {cr[1]}]", f"{where}.bids[{j}]")
        try:
            bidders.append(XorBidder(b["id"], b["bundle1"], b["bundle2"], cr, d1, d2,
                                     float(b["bids"][0]), float(b["bids"][1])))
        except ValueError as exc:
            raise SchemaError(str(exc), where) from exc
    return bidders, items


def _xor_dist_doc(dist) -> dict:
    if isinstance(dist, Uniform1D):
        return {"family": "uniform"}
    return {"family": "histogram", "params": {"edges": list(dist.edges), "mass": list(dist.mass)}}


def xor_to_dict(bidders, items) -> dict:
    return {
        "items": list(items),
        "bidders": [{
            "id": b.id,
            "bundle1": sorted(b.bundle1),
            "bundle2": sorted(b.bundle2),
            "cost_range": list(b.cost_range),
            "distributions": [_xor_dist_doc(b.dist1), _xor_dist_doc(b.dist2)],
            "bids": [b.bid1, b.bid2],
        } for b in bidders],
    }


def load_xor(path: PathLike):
    return xor_from_dict(read_json(path))
