"""Hybrid-cloud component placement: put software components on private or
public VMs, minimizing (cost, latency).

A genome is a boolean matrix of shape (components, vms); ``genome[c, v]``
means component ``c`` has a replica on VM ``v``. Every row has at least one
True entry.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .core import OperatorHandle
from .errors import ConfigError, UsageError
from .indicators import ObjectiveBounds

PRIVATE = "private"
PUBLIC = "public"


@dataclass(frozen=True)
class VmSpec:
    id: str
    location: str
    base_latency_ms: float


@dataclass(frozen=True)
class ComponentSpec:
    id: str


@dataclass(frozen=True)
class CloudInstance:
    vms: tuple[VmSpec, ...]
    components: tuple[ComponentSpec, ...]
    cost_private: float = 1.0
    cost_public: float = 0.4
    remote_penalty: float = 40.0

    def __post_init__(self):
        object.__setattr__(self, "vms", tuple(self.vms))
        object.__setattr__(self, "components", tuple(self.components))
        if not self.vms or not self.components:
            raise ConfigError("an instance needs at least one VM and one component")
        if self.cost_private < 0 or self.cost_public < 0 or self.remote_penalty < 0:
            raise ConfigError("costs and remote penalty must be non-negative")
        for vm in self.vms:
            if vm.location not in (PRIVATE, PUBLIC):
                raise ConfigError(f"VM {vm.id}: location must be 'private' or 'public', got {vm.location!r}")
            if not vm.base_latency_ms >= 0:
                raise ConfigError(f"VM {vm.id}: base_latency_ms must be >= 0")
        for kind, items in (("VM", self.vms), ("component", self.components)):
            ids = [x.id for x in items]
            if len(set(ids)) != len(ids):
                raise ConfigError(f"duplicate {kind} ids")
        public = np.array([vm.location == PUBLIC for vm in self.vms])
        object.__setattr__(self, "public_mask", public)
        object.__setattr__(self, "vm_cost", np.where(public, self.cost_public, self.cost_private))
        base = np.array([vm.base_latency_ms for vm in self.vms], dtype=np.float64)
        object.__setattr__(self, "vm_latency", base + np.where(public, self.remote_penalty, 0.0))
        for arr in (self.public_mask, self.vm_cost, self.vm_latency):
            arr.setflags(write=False)

    @property
    def n_vms(self) -> int:
        return len(self.vms)

    @property
    def n_components(self) -> int:
        return len(self.components)

    def to_dict(self) -> dict:
        return {
            "vms": [{"id": vm.id, "location": vm.location, "base_latency_ms": vm.base_latency_ms}
                    for vm in self.vms],
            "components": [{"id": c.id} for c in self.components],
            "cost_private": self.cost_private,
            "cost_public": self.cost_public,
            "remote_penalty_ms": self.remote_penalty,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CloudInstance":
        try:
            vms = tuple(VmSpec(str(v["id"]), str(v["location"]), float(v["base_latency_ms"]))
                        for v in data["vms"])
            comps = tuple(ComponentSpec(str(c["id"])) for c in data["components"])
            return cls(vms, comps, float(data.get("cost_private", 1.0)),
                       float(data.get("cost_public", 0.4)),
                       float(data.get("remote_penalty_ms", 40.0)))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"malformed instance: {exc!r}") from exc


def load_instance(path) -> CloudInstance:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read instance file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    try:
        return CloudInstance.from_dict(data)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def save_instance(inst: CloudInstance, path) -> None:
    Path(path).write_text(json.dumps(inst.to_dict(), indent=2) + "\n", encoding="utf-8")


def random_instance(n_vms: int, n_components: int, public_fraction: float = 0.5, seed=0, *,
                    cost_private: float = 1.0, cost_public: float = 0.4,
                    remote_penalty: float = 40.0,
                    latency_range: tuple[float, float] = (1.0, 20.0)) -> CloudInstance:
    """Generate a placement instance. The last ``floor(public_fraction * n_vms)``
    VMs are public; base latencies are uniform over ``latency_range``."""
    if n_vms < 1 or n_components < 1:
        raise ConfigError("n_vms and n_components must be >= 1")
    if not 0.0 <= public_fraction <= 1.0:
        raise ConfigError(f"public_fraction must lie in [0, 1], got {public_fraction}")
    rng = np.random.default_rng(seed)
    n_public = math.floor(public_fraction * n_vms)
    lat = rng.uniform(latency_range[0], latency_range[1], size=n_vms)
    vms = tuple(VmSpec(f"vm{i}", PUBLIC if i >= n_vms - n_public else PRIVATE, float(lat[i]))
                for i in range(n_vms))
    comps = tuple(ComponentSpec(f"c{j}") for j in range(n_components))
    return CloudInstance(vms, comps, cost_private, cost_public, remote_penalty)


# --- genomes and objectives -----------------------------------------------------


def validate_genome(genome, inst: CloudInstance) -> np.ndarray:
    g = np.asarray(genome)
    if g.dtype != bool or g.shape != (inst.n_components, inst.n_vms):
        raise UsageError(f"genome must be a bool array of shape {(inst.n_components, inst.n_vms)}, "
                         f"got {g.dtype} {g.shape}")
    empty = ~g.any(axis=1)
    if empty.any():
        raise UsageError(f"component {inst.components[int(np.argmax(empty))].id} has no replica")
    return g


def cost(genome, inst: CloudInstance) -> float:
    """Summed price of every VM hosting at least one component."""
    g = validate_genome(genome, inst)
    return float(inst.vm_cost[g.any(axis=0)].sum())


def latency(genome, inst: CloudInstance) -> float:
    """Mean over components of the best effective latency among replicas."""
    g = validate_genome(genome, inst)
    return float(np.where(g, inst.vm_latency, np.inf).min(axis=1).mean())


def random_genome(inst: CloudInstance, rng) -> np.ndarray:
    """One replica per component on a uniformly chosen VM."""
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    g = np.zeros((inst.n_components, inst.n_vms), dtype=bool)
    g[np.arange(inst.n_components), rng.integers(inst.n_vms, size=inst.n_components)] = True
    return g


def crossover(a: np.ndarray, b: np.ndarray, rng: np.random.Generator,
              mask: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Uniform crossover exchanging whole replica sets per component."""
    if a.shape != b.shape:
        raise UsageError(f"genome shapes differ: {a.shape} vs {b.shape}")
    if mask is None:
        mask = rng.random(a.shape[0]) < 0.5
    swap = np.asarray(mask, dtype=bool)[:, None]
    return np.where(swap, b, a), np.where(swap, a, b)


def genome_to_dict(genome, inst: CloudInstance) -> dict:
    g = validate_genome(genome, inst)
    return {"placements": {c.id: [inst.vms[v].id for v in np.flatnonzero(g[j])]
                           for j, c in enumerate(inst.components)}}


def genome_from_dict(data: dict, inst: CloudInstance) -> np.ndarray:
    vm_index = {vm.id: i for i, vm in enumerate(inst.vms)}
    g = np.zeros((inst.n_components, inst.n_vms), dtype=bool)
    placements = data.get("placements") if isinstance(data, dict) else None
    if not isinstance(placements, dict):
        raise UsageError("genome document needs a 'placements' object")
    for j, c in enumerate(inst.components):
        if c.id not in placements:
            raise UsageError(f"component {c.id} is missing from placements")
        for vm_id in placements[c.id]:
            if vm_id not in vm_index:
                raise UsageError(f"unknown VM id {vm_id!r} for component {c.id}")
            g[j, vm_index[vm_id]] = True
    return validate_genome(g, inst)


# --- mutation operators ------------------------------------------------------------
# Each returns a fresh genome; inapplicable operators return an unchanged copy.


def _pick(rng, items):
    return items[int(rng.integers(len(items)))]


def add_replica(g, inst, rng):
    free_rows = np.flatnonzero(~g.all(axis=1))
    out = g.copy()
    if free_rows.size == 0:
        return out
    c = _pick(rng, free_rows)
    out[c, _pick(rng, np.flatnonzero(~g[c]))] = True
    return out


def remove_replica(g, inst, rng):
    multi = np.flatnonzero(g.sum(axis=1) >= 2)
    out = g.copy()
    if multi.size == 0:
        return out
    c = _pick(rng, multi)
    out[c, _pick(rng, np.flatnonzero(g[c]))] = False
    return out


def move_component(g, inst, rng):
    movable = np.flatnonzero(~g.all(axis=1))
    out = g.copy()
    if movable.size == 0:
        return out
    c = _pick(rng, movable)
    out[c, _pick(rng, np.flatnonzero(g[c]))] = False
    out[c, _pick(rng, np.flatnonzero(~g[c]))] = True
    return out


def _migrate(g, inst, rng, source_public: bool):
    src_cols = inst.public_mask if source_public else ~inst.public_mask
    dst_cols = ~src_cols
    out = g.copy()
    if not src_cols.any() or not dst_cols.any():
        return out
    # replicas on a source-side VM whose component still has a free destination VM
    has_target = (~g & dst_cols).any(axis=1)
    cand = np.argwhere(g & src_cols & has_target[:, None])
    if cand.size == 0:
        return out
    c, v = _pick(rng, cand)
    out[c, v] = False
    out[c, _pick(rng, np.flatnonzero(~g[c] & dst_cols))] = True
    return out


def migrate_to_public(g, inst, rng):
    return _migrate(g, inst, rng, source_public=False)


def migrate_to_private(g, inst, rng):
    return _migrate(g, inst, rng, source_public=True)


def consolidate_vm(g, inst, rng):
    """Empty the active VM hosting the fewest components onto other active VMs."""
    load = g.sum(axis=0)
    active = np.flatnonzero(load > 0)
    out = g.copy()
    if active.size < 2:
        return out
    lightest = active[load[active] == load[active].min()]
    v = _pick(rng, lightest)
    others = active[active != v]
    for c in np.flatnonzero(g[:, v]):
        out[c, v] = False
        if not out[c].any():
            out[c, _pick(rng, others)] = True
    return out


OPERATORS = {
    "AddReplica": add_replica,
    "RemoveReplica": remove_replica,
    "MoveComponent": move_component,
    "MigrateToPublic": migrate_to_public,
    "MigrateToPrivate": migrate_to_private,
    "ConsolidateVM": consolidate_vm,
}


def operator_set(inst: CloudInstance) -> list[OperatorHandle]:
    """The six elementary placement mutations, bound to ``inst``."""
    def bind(fn):
        return lambda genome, rng: fn(genome, inst, rng)
    return [OperatorHandle(name, bind(fn)) for name, fn in OPERATORS.items()]


class CloudProblem:
    """Engine adapter for a CloudInstance; objectives are (cost, latency)."""

    n_objectives = 2
    objective_names = ("cost", "latency")

    def __init__(self, inst: CloudInstance):
        self.instance = inst
        self.operators = operator_set(inst)

    def random_genome(self, rng):
        return random_genome(self.instance, rng)

    def crossover(self, a, b, rng):
        return crossover(a, b, rng)

    def evaluate(self, genomes) -> np.ndarray:
        masks = genomes[0][None] if len(genomes) == 1 else np.stack(genomes)
        c, lat = kernels.evaluate_placements(masks, self.instance.vm_cost, self.instance.vm_latency)
        out = np.empty((len(c), 2))
        out[:, 0] = c
        out[:, 1] = lat
        return out

    def objective_bounds(self) -> ObjectiveBounds:
        """The exact range of each objective over all valid genomes."""
        inst = self.instance
        return ObjectiveBounds([inst.vm_cost.min(), inst.vm_latency.min()],
                               [inst.vm_cost.sum(), inst.vm_latency.max()])
