"""JSON instance and policy files.

Instance::

    {"T": 10, "source": [{"t": 0, "e": 5}, {"t": 5, "e": 5}],
     "relay": [{"t": 0, "e": 5}, {"t": 8, "e": 5}],
     "rate": {"kind": "shannon"}, "gains": {"hs": 1, "hr": 1}}

``rate`` and ``gains`` are optional.  Policy::

    {"segments": [{"node": "source", "p": 1.0, "d": 5.0}, ...]}
"""
from __future__ import annotations

import json
from pathlib import Path

from .core import SHANNON, EnergyProfile, Instance, Policy, RateFunctionSpec, Segment
from .exceptions import InvalidInstanceError


class FileFormatError(InvalidInstanceError):
    """A file could not be parsed into an instance or a policy."""


def _profile(items, name) -> EnergyProfile:
    if not isinstance(items, list):
        raise FileFormatError(f"'{name}' must be a list of {{t, e}} objects")
    try:
        return EnergyProfile(tuple((float(a["t"]), float(a["e"])) for a in items))
    except (KeyError, TypeError, ValueError) as exc:
        raise FileFormatError(f"bad arrival in '{name}': {exc}") from exc


def instance_from_dict(d: dict) -> Instance:
    if not isinstance(d, dict):
        raise FileFormatError("instance must be a JSON object")
    for key in ("T", "source", "relay"):
        if key not in d:
            raise FileFormatError(f"missing key '{key}'")
    rate = SHANNON
    if "rate" in d:
        r = d["rate"]
        try:
            rate = RateFunctionSpec(r.get("kind", "shannon"),
                                    tuple(tuple(p) for p in r.get("points", ())))
        except (AttributeError, TypeError, ValueError) as exc:
            raise FileFormatError(f"bad rate spec: {exc}") from exc
    g = d.get("gains") or {}
    try:
        gains = (float(g.get("hs", 1.0)), float(g.get("hr", 1.0)))
        T = float(d["T"])
    except (AttributeError, TypeError, ValueError) as exc:
        raise FileFormatError(f"bad number: {exc}") from exc
    return Instance(T, _profile(d["source"], "source"), _profile(d["relay"], "relay"),
                    rate, gains)


def instance_to_dict(inst: Instance) -> dict:
    return {
        "T": inst.T,
        "source": [{"t": t, "e": e} for t, e in inst.source.arrivals],
        "relay": [{"t": t, "e": e} for t, e in inst.relay.arrivals],
        "rate": inst.rate.to_json(),
        "gains": {"hs": inst.gains[0], "hr": inst.gains[1]},
    }


def policy_from_dict(d: dict) -> Policy:
    try:
        segs = d["segments"]
        return Policy(tuple(Segment(s["node"], float(s["p"]), float(s["d"])) for s in segs))
    except (KeyError, TypeError, ValueError) as exc:
        raise FileFormatError(f"bad policy: {exc}") from exc


def policy_to_dict(policy: Policy) -> dict:
    return policy.to_json()


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{path}: invalid JSON ({exc})") from exc


def load_instance(path) -> Instance:
    return instance_from_dict(_read_json(path))


def load_policy(path) -> Policy:
    return policy_from_dict(_read_json(path))


def dump_json(obj: dict, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2) + "\n")
