"""Time-ordered flow snapshots and their on-disk layout.

A saved history is a directory holding ``manifest.json`` and one CSV per
snapshot in the curvature-field schema (see ``geometry.CSV_COLUMNS``).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np

from .. import __version__
from ..geometry import CurvatureField, Profile, ProfileKind, compute_curvatures


class Termination(str, Enum):
    REACHED_T_END = "ReachedTEnd"
    CURVATURE_BLOWUP = "CurvatureBlowup"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class Snapshot:
    t: float
    profile: Profile
    field: CurvatureField

    @classmethod
    def of(cls, t: float, profile: Profile) -> "Snapshot":
        return cls(float(t), profile, compute_curvatures(profile))


@dataclass
class FlowHistory:
    snapshots: list = field(default_factory=list)
    termination: Optional[Termination] = None
    config: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        snaps, self.snapshots = list(self.snapshots), []
        for s in snaps:
            self.append(s)
        if self.termination is not None:
            self.termination = Termination(self.termination)

    def append(self, snap: Snapshot) -> None:
        if self.snapshots and not snap.t > self.snapshots[-1].t:
            raise ValueError("snapshot times must be strictly increasing")
        if self.snapshots and snap.field.n != self.n:
            raise ValueError("all snapshots must share the dimension n")
        self.snapshots.append(snap)

    def __len__(self):
        return len(self.snapshots)

    def __getitem__(self, k) -> Snapshot:
        return self.snapshots[k]

    def __iter__(self):
        return iter(self.snapshots)

    @property
    def n(self) -> int:
        return self.snapshots[0].field.n

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])

    def max_H(self) -> np.ndarray:
        return np.array([float(np.max(s.field.H)) for s in self.snapshots])

    # -- persistence -----------------------------------------------------
    def save(self, directory) -> Path:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        entries = []
        with open(d / "profiles.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("snapshot", "node", "value"))
            for k, s in enumerate(self.snapshots):
                name = f"snapshot_{k:05d}.csv"
                s.field.to_csv(d / name)
                entries.append({"t": s.t, "file": name, "kind": s.profile.kind.value,
                                "origin": s.profile.origin})
                w.writerows((k, i, repr(float(v))) for i, v in enumerate(s.profile.value))
        manifest = {
            "tool": "mcflab", "version": __version__, "n": self.n,
            "termination": self.termination.value if self.termination else None,
            "config": self.config, "meta": self.meta,
            "times": [s.t for s in self.snapshots], "snapshots": entries,
        }
        (d / "manifest.json").write_text(json.dumps(manifest, indent=2, default=_jsonable))
        return d

    @classmethod
    def load(cls, directory) -> "FlowHistory":
        d = Path(directory)
        manifest = json.loads((d / "manifest.json").read_text())
        n = int(manifest["n"])
        stored = {}
        if (d / "profiles.csv").exists():
            with open(d / "profiles.csv", newline="") as fh:
                for row in csv.DictReader(fh):
                    stored.setdefault(int(row["snapshot"]), []).append(float(row["value"]))
        snaps = []
        for k, e in enumerate(manifest["snapshots"]):
            cf = CurvatureField.from_csv(d / e["file"], n)
            kind = ProfileKind(e["kind"])
            if k in stored:
                value = np.array(stored[k])
            elif kind is ProfileKind.POLAR:
                value = np.hypot(cf.z - e["origin"], cf.r)
            else:
                value = cf.r
            prof = Profile(kind, n, cf.param, value, e["origin"])
            snaps.append(Snapshot(float(e["t"]), prof, cf))
        return cls(snaps, manifest.get("termination"), manifest.get("config", {}),
                   manifest.get("meta", {}))


def _jsonable(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Enum):
        return o.value
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")
