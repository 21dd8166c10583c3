"""Closed API registries: the action and constraint vocabulary of a domain.

A registry is what the parser type-checks against and what synthesis prompts
document verbatim. Param kinds: entity, number, point (literal coordinate or
Sample(...)), string, operator, name, or choice:<a|b|c>.
"""
from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class ApiSig:
    name: str
    kind: str             # action | constraint
    params: tuple[str, ...]
    doc: str


@dataclass(frozen=True)
class ApiRegistry:
    id: str
    actions: dict[str, ApiSig] = field(default_factory=dict)
    constraints: dict[str, ApiSig] = field(default_factory=dict)

    def __post_init__(self) -> None:
        overlap = set(self.actions) & set(self.constraints)
        if overlap:
            raise ValueError(f"names shared by actions and constraints: {sorted(overlap)}")

    def action(self, name: str) -> ApiSig | None:
        return self.actions.get(name)

    def constraint(self, name: str) -> ApiSig | None:
        return self.constraints.get(name)

    def entries(self) -> list[ApiSig]:
        return list(self.actions.values()) + list(self.constraints.values())


def _registry(rid: str, sigs: list[ApiSig]) -> ApiRegistry:
    return ApiRegistry(
        id=rid,
        actions={s.name: s for s in sigs if s.kind == "action"},
        constraints={s.name: s for s in sigs if s.kind == "constraint"},
    )


def soccer_registry() -> ApiRegistry:
    return _registry("soccer", [
        ApiSig("MoveTo", "action", ("point",),
               "MoveTo(destination): move or dribble to the destination point; "
               "completes on arrival within the arrival tolerance."),
        ApiSig("Pass", "action", ("entity",),
               "Pass(receiver): kick the ball to the receiver; completes when "
               "the ball arrives."),
        ApiSig("Shoot", "action", ("name",),
               "Shoot(goal): shoot toward the named goal region's center; "
               "completes when the ball arrives or leaves play."),
        ApiSig("TriggerTeammatePass", "action", (),
               "TriggerTeammatePass(): ask the ball-holding teammate to pass "
               "to you; completes when you receive the ball."),
        ApiSig("HasPossession", "constraint", ("entity",),
               "HasPossession(player): true while the player holds the ball. "
               "Boolean only."),
        ApiSig("DistanceTo", "constraint", ("entity", "entity", "number", "operator"),
               "DistanceTo(obj, ref, d, operator): true if obj is at distance "
               "d from ref under the operator; as a field, where obj could "
               "stand to satisfy it."),
        ApiSig("SideOf", "constraint",
               ("entity", "entity", "choice:horizontal|vertical",
                "choice:left|right|above|below"),
               "SideOf(obj, ref, axis, side): true if obj is on the given side "
               "of ref along the axis; as a field, the half-plane."),
        ApiSig("PassingLane", "constraint", ("entity", "entity", "number"),
               "PassingLane(passer, receiver, width): true if no opponent "
               "blocks the corridor of that width between them; as a field, "
               "receiver placements outside every opponent's shadow."),
        ApiSig("NearPoint", "constraint", ("entity", "point", "number"),
               "NearPoint(obj, point, sigma): true within 2*sigma of the "
               "point; as a field, a Gaussian bump around it."),
    ])


def manufacturing_registry() -> ApiRegistry:
    """Retargeted domain: a helper robot restocking a human worker's parts."""
    return _registry("manufacturing", [
        ApiSig("goTo", "action", ("name",),
               "goTo(location): drive to the named station."),
        ApiSig("pick", "action", ("name", "name"),
               "pick(item, from): pick the item up at the named station."),
        ApiSig("swapBuckets", "action", ("name", "name", "name"),
               "swapBuckets(new_bucket, old_bucket, station): exchange the "
               "buckets at the station."),
        ApiSig("BelowThreshold", "constraint", ("name", "number"),
               "BelowThreshold(bucket, n): true when the measured part count "
               "in the bucket is below n. Boolean only."),
        ApiSig("HumanReady", "constraint", ("name",),
               "HumanReady(worker): true when the worker signals it is safe "
               "to proceed. Boolean only."),
    ])


def registry_to_dict(reg: ApiRegistry) -> dict:
    return {
        "id": reg.id,
        "actions": [
            {"name": s.name, "params": list(s.params), "doc": s.doc}
            for s in reg.actions.values()
        ],
        "constraints": [
            {"name": s.name, "params": list(s.params), "doc": s.doc}
            for s in reg.constraints.values()
        ],
    }


def registry_from_dict(d: dict) -> ApiRegistry:
    sigs = [ApiSig(a["name"], "action", tuple(a["params"]), a["doc"]) for a in d["actions"]]
    sigs += [ApiSig(c["name"], "constraint", tuple(c["params"]), c["doc"])
             for c in d["constraints"]]
    return _registry(d["id"], sigs)


def builtin_registry(rid: str) -> ApiRegistry:
    if rid == "soccer":
        return soccer_registry()
    if rid == "manufacturing":
        return manufacturing_registry()
    raise KeyError(f"no builtin registry {rid!r}")
