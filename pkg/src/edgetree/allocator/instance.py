"""Fog allocation instances, solutions and the objective."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class AllocationError(ValueError):
    pass


class InvalidInstance(AllocationError):
    pass


class Infeasible(AllocationError):
    pass


class ConstraintViolated(AllocationError):
    def __init__(self, constraint: str, detail: str = ""):
        super().__init__(f"{constraint}: {detail}" if detail else constraint)
        self.constraint = constraint


class BudgetExceeded(AllocationError):
    pass


@dataclass
class AllocationInstance:
    devices: list[str]
    fogs: list[str]
    c: np.ndarray          # |D| x |F| device-to-fog cost
    u: np.ndarray          # |F| x |F| shadow update cost; diagonal is a sentinel
    f: np.ndarray          # fixed activation cost per fog
    cap: np.ndarray        # device capacity per fog

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.u = np.asarray(self.u, dtype=float)
        self.f = np.asarray(self.f, dtype=float)
        self.cap = np.asarray(self.cap, dtype=np.int64)
        nd, nf = len(self.devices), len(self.fogs)
        if self.c.size == 0:
            self.c = self.c.reshape(nd, nf) if nd * nf == 0 else self.c
        if self.c.shape != (nd, nf):
            raise InvalidInstance(f"c must be {nd}x{nf}, got {self.c.shape}")
        if self.u.shape != (nf, nf):
            raise InvalidInstance(f"u must be {nf}x{nf}, got {self.u.shape}")
        if self.f.shape != (nf,) or self.cap.shape != (nf,):
            raise InvalidInstance("f and cap need one entry per fog")
        if len(set(self.devices)) != nd or len(set(self.fogs)) != nf:
            raise InvalidInstance("device and fog ids must be unique")
        for name, arr in (("c", self.c), ("u", self.u), ("f", self.f)):
            if not np.all(np.isfinite(arr)):
                raise InvalidInstance(f"{name} has missing entries")
            if np.any(arr < 0):
                raise InvalidInstance(f"{name} has negative costs")
        if nf and np.any(self.cap < 1):
            raise InvalidInstance("every fog needs capacity >= 1")
        if int(self.cap.sum()) < nd:
            raise Infeasible(f"total capacity {int(self.cap.sum())} < {nd} devices")

    @property
    def n_devices(self) -> int:
        return len(self.devices)

    @property
    def n_fogs(self) -> int:
        return len(self.fogs)

    @property
    def shadow_count(self) -> int:
        return min(2, self.n_fogs - 1)

    def shadow_choice(self, j: int) -> tuple[int, ...]:
        """The cheapest ``shadow_count`` fogs other than ``j``; ties go to the lower index."""
        others = sorted((self.u[j, k], k) for k in range(self.n_fogs) if k != j)
        return tuple(sorted(k for _, k in others[: self.shadow_count]))

    def shadow_cost(self, j: int) -> float:
        return float(sum(self.u[j, k] for k in self.shadow_choice(j)))

    def scaled(self, factor: float) -> "AllocationInstance":
        return AllocationInstance(list(self.devices), list(self.fogs), self.c * factor,
                                  self.u * factor, self.f * factor, self.cap.copy())

    def to_dict(self) -> dict:
        return {
            "devices": list(self.devices),
            "fogs": [{"id": fid, "fixed_cost": float(self.f[j]), "capacity": int(self.cap[j])}
                     for j, fid in enumerate(self.fogs)],
            "c": self.c.tolist(),
            "u": self.u.tolist(),
        }


def load_instance(doc) -> AllocationInstance:
    """Instance from a dict, a JSON string or a path to a JSON file."""
    if isinstance(doc, (str, Path)) and not str(doc).lstrip().startswith("{"):
        doc = json.loads(Path(doc).read_text())
    elif isinstance(doc, str):
        doc = json.loads(doc)
    try:
        fogs = doc["fogs"]
        devices = [str(d) for d in doc["devices"]]
        c, u = doc["c"], doc["u"]
    except KeyError as e:
        raise InvalidInstance(f"missing key {e.args[0]!r}") from None
    nf = len(fogs)
    for name, rows, width in (("c", c, nf), ("u", u, nf)):
        if any(len(r) != width for r in rows):
            raise InvalidInstance(f"{name} is not rectangular")
        if any(v is None for r in rows for v in r):
            raise InvalidInstance(f"{name} has missing entries")
    return AllocationInstance(
        devices,
        [str(fg["id"]) for fg in fogs],
        np.array(c, dtype=float).reshape(len(devices), nf),
        np.array(u, dtype=float).reshape(nf, nf),
        [fg.get("fixed_cost", 0.0) for fg in fogs],
        [fg.get("capacity", 1) for fg in fogs],
    )


def _read_table(text: str) -> tuple[list[str], list[str], list[list[float]]]:
    rows = [r for r in csv.reader(io.StringIO(text)) if any(cell.strip() for cell in r)]
    if not rows:
        raise InvalidInstance("empty table")
    cols = [h.strip() for h in rows[0][1:]]
    labels, body = [], []
    for r in rows[1:]:
        if len(r) - 1 != len(cols):
            raise InvalidInstance(f"row {r[0]!r} has {len(r) - 1} entries, expected {len(cols)}")
        labels.append(r[0].strip())
        try:
            body.append([float(v) for v in r[1:]])
        except ValueError:
            raise InvalidInstance(f"row {r[0]!r} has missing or non-numeric entries") from None
    return labels, cols, body


def load_csv_instance(device_fog_csv: str, fog_fog_csv: str, *, fixed_cost: float = 400.0,
                      capacity: int = 3) -> AllocationInstance:
    """Two tables with a header row of fog names and one labelled row per device / fog."""
    devices, fogs, c = _read_table(device_fog_csv)
    fog_rows, fog_cols, u = _read_table(fog_fog_csv)
    if fog_cols != fogs or fog_rows != fogs:
        raise InvalidInstance("fog-to-fog table must list the same fogs in the same order")
    return AllocationInstance(devices, fogs, c, u, [fixed_cost] * len(fogs), [capacity] * len(fogs))


@dataclass
class Allocation:
    x: np.ndarray   # |D| x |F|
    y: np.ndarray   # |F| x |F|
    a: np.ndarray   # |F|
    z: float
    stats: dict = field(default_factory=dict)

    def assignment(self, inst: AllocationInstance) -> dict[str, str]:
        return {inst.devices[i]: inst.fogs[int(np.argmax(self.x[i]))] for i in range(inst.n_devices)}

    def groups(self, inst: AllocationInstance) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {}
        for d, fg in self.assignment(inst).items():
            out.setdefault(fg, []).append(d)
        return out

    def active(self, inst: AllocationInstance) -> list[str]:
        return [inst.fogs[j] for j in range(inst.n_fogs) if self.a[j]]

    def shadows(self, inst: AllocationInstance) -> dict[str, list[str]]:
        return {inst.fogs[j]: [inst.fogs[k] for k in range(inst.n_fogs) if self.y[j, k]]
                for j in range(inst.n_fogs) if self.y[j].any()}

    def key(self) -> tuple:
        """Tie-break key: active ids, then per-device fog index, then shadow sets."""
        act = tuple(int(j) for j in np.flatnonzero(self.a))
        asg = tuple(int(np.argmax(row)) for row in self.x)
        shd = tuple(tuple(int(k) for k in np.flatnonzero(row)) for row in self.y)
        return act, asg, shd

    def to_dict(self, inst: AllocationInstance) -> dict:
        return {
            "assignment": self.assignment(inst),
            "active": self.active(inst),
            "shadows": self.shadows(inst),
            "z": self.z,
            "stats": self.stats,
        }


def build_allocation(inst: AllocationInstance, active, assignment, z: float | None = None,
                     stats: dict | None = None) -> Allocation:
    """Allocation from fog indices: active set and one fog index per device."""
    nd, nf = inst.n_devices, inst.n_fogs
    x = np.zeros((nd, nf), dtype=np.int8)
    for i, j in enumerate(assignment):
        x[i, j] = 1
    a = np.zeros(nf, dtype=np.int8)
    y = np.zeros((nf, nf), dtype=np.int8)
    for j in sorted(active):
        a[j] = 1
        for k in inst.shadow_choice(j):
            y[j, k] = 1
    alloc = Allocation(x, y, a, 0.0, dict(stats or {}))
    alloc.z = objective(inst, alloc) if z is None else float(z)
    return alloc


def check_constraints(inst: AllocationInstance, alloc: Allocation):
    x, y, a = np.asarray(alloc.x), np.asarray(alloc.y), np.asarray(alloc.a)
    nd, nf = inst.n_devices, inst.n_fogs
    if x.shape != (nd, nf) or y.shape != (nf, nf) or a.shape != (nf,):
        raise ConstraintViolated("shape", "decision arrays do not match the instance")
    for name, arr in (("x", x), ("y", y), ("a", a)):
        if not np.isin(arr, (0, 1)).all():
            raise ConstraintViolated("binary", f"{name} has non-binary entries")
    for i in range(nd):
        if x[i].sum() != 1:
            raise ConstraintViolated("assign-once", f"device {inst.devices[i]} assigned {int(x[i].sum())} times")
    for j in range(nf):
        load = int(x[:, j].sum())
        if load > inst.cap[j] * a[j]:
            raise ConstraintViolated("capacity", f"fog {inst.fogs[j]} holds {load} > {int(inst.cap[j] * a[j])}")
        if y[j, j]:
            raise ConstraintViolated("no-self-shadow", f"fog {inst.fogs[j]} shadows itself")
        want = inst.shadow_count * int(a[j])
        if int(y[j].sum()) != want:
            raise ConstraintViolated("shadow-count", f"fog {inst.fogs[j]} has {int(y[j].sum())} shadows, expected {want}")


def objective(inst: AllocationInstance, alloc: Allocation) -> float:
    """Fixed plus shadow plus device cost; raises on any constraint violation."""
    check_constraints(inst, alloc)
    x, y, a = np.asarray(alloc.x), np.asarray(alloc.y), np.asarray(alloc.a)
    off = ~np.eye(inst.n_fogs, dtype=bool)
    fixed = float(inst.f @ a)
    shadow = float((inst.u * y * off).sum())
    device = float((inst.c * x).sum())
    return fixed + shadow + device


def objective_terms(inst: AllocationInstance, alloc: Allocation) -> tuple[float, float, float]:
    check_constraints(inst, alloc)
    off = ~np.eye(inst.n_fogs, dtype=bool)
    return (float(inst.f @ alloc.a), float((inst.u * alloc.y * off).sum()), float((inst.c * alloc.x).sum()))
