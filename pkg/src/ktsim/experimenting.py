"""Experimenting stage: knowledge-informed design, biased sampling, provenance.

A design picks which variables to measure (preferring variables the team
believes are mutually dependent), optionally attaches a selection condition
(rows are kept only when one chosen variable reads 1 before noise), and fixes
a symmetric bit-flip noise rate applied to every recorded bit. The executed
design is echoed verbatim into a machine-readable datasheet so downstream
stages can undo or flag exactly what happened here.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigError
from .knowledge import GroundTruth, KnowledgeBase, Polarity

#: Upper bound on rejection-sampling rounds; unreachable for valid designs
#: because a selection on a marginally fair bit accepts about half of draws.
_MAX_REJECTION_ROUNDS = 10_000


@dataclass(frozen=True)
class Selection:
    variable: int
    value: int

    def __post_init__(self) -> None:
        if self.value not in (0, 1):
            raise ConfigError(f"selection value must be 0 or 1, got {self.value}")

    def to_json(self) -> dict:
        return {"variable": self.variable, "value": self.value}


@dataclass(frozen=True)
class ExperimentDesign:
    measured: tuple[int, ...]
    selection: Optional[Selection]
    noise_rate: float
    samples: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "measured", tuple(int(v) for v in self.measured))
        if len(self.measured) < 2:
            raise ConfigError("a design must measure at least two variables")
        if len(set(self.measured)) != len(self.measured):
            raise ConfigError("measured variables must be distinct")
        if self.selection is not None and self.selection.variable not in self.measured:
            raise ConfigError(
                f"selection variable {self.selection.variable} is not among the measured set"
            )
        if not (0.0 <= self.noise_rate < 0.5):
            raise ConfigError(f"noise_rate must lie in [0, 0.5), got {self.noise_rate}")
        if self.samples < 1:
            raise ConfigError(f"sample count must be >= 1, got {self.samples}")

    def to_json(self) -> dict:
        return {
            "measured": list(self.measured),
            "selection": self.selection.to_json() if self.selection else None,
            "noise_rate": self.noise_rate,
            "samples": self.samples,
        }


class Dataset:
    """Rectangular 0/1 measurements; one column per measured variable."""

    __slots__ = ("columns", "rows", "_index")

    def __init__(self, columns, rows):
        rows = np.ascontiguousarray(rows, dtype=np.uint8)
        if rows.ndim != 2 or rows.shape[1] != len(columns):
            raise ConfigError("dataset rows must be rectangular with one column per variable")
        if rows.size and rows.max() > 1:
            raise ConfigError("dataset entries must be 0 or 1")
        rows.setflags(write=False)
        self.columns: tuple[int, ...] = tuple(int(c) for c in columns)
        self.rows = rows
        self._index = {c: i for i, c in enumerate(self.columns)}

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def width(self) -> int:
        return self.rows.shape[1]

    def column(self, variable: int) -> np.ndarray:
        try:
            return self.rows[:, self._index[variable]]
        except KeyError:
            raise ConfigError(f"variable {variable} is not measured in this dataset") from None

    def sha256(self) -> str:
        header = ",".join(str(c) for c in self.columns).encode()
        return hashlib.sha256(header + b"\n" + self.rows.tobytes()).hexdigest()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.columns == other.columns and np.array_equal(self.rows, other.rows)


@dataclass(frozen=True)
class Datasheet:
    """Provenance record of the design as actually executed."""

    team_id: int
    measured: tuple[int, ...]
    selection: Optional[Selection]
    noise_rate: float
    samples: int
    seed_fingerprint: str
    knowledge_snapshot: Optional[KnowledgeBase] = None

    def to_json(self) -> dict:
        return {
            "team_id": self.team_id,
            "measured": list(self.measured),
            "selection": self.selection.to_json() if self.selection else None,
            "noise_rate": self.noise_rate,
            "samples": self.samples,
            "seed_fingerprint": self.seed_fingerprint,
            "knowledge_snapshot": (
                self.knowledge_snapshot.to_json() if self.knowledge_snapshot is not None else None
            ),
        }


def design_experiment(
    team_kb: KnowledgeBase,
    m: int,
    target_width: int,
    selection_prob: float,
    noise_rate: float,
    samples: int,
    rng: np.random.Generator,
) -> ExperimentDesign:
    """Pick a measured set of exactly ``target_width`` variables.

    Variables appearing in the team's Dependent claims come first, grown as
    connected clusters of the claim graph (measure what you believe belongs
    together); any shortfall is padded with uniformly random other variables.
    With probability ``selection_prob`` a selection condition (value 1) is
    attached to a uniformly chosen measured variable.
    """
    if not (2 <= target_width <= m):
        raise ConfigError(f"target_width must lie in [2, m={m}], got {target_width}")
    if not (0.0 <= selection_prob <= 1.0):
        raise ConfigError(f"selection_prob must lie in [0, 1], got {selection_prob}")

    neighbors: dict[int, set[int]] = {}
    for wc in team_kb:
        if wc.claim.polarity is not Polarity.DEPENDENT:
            continue
        u, v = wc.claim.pair
        neighbors.setdefault(u, set()).add(v)
        neighbors.setdefault(v, set()).add(u)

    measured: list[int] = []
    chosen = set()
    unvisited = sorted(neighbors)
    while len(measured) < target_width and unvisited:
        seed_var = unvisited[int(rng.integers(len(unvisited)))]
        queue = [seed_var]
        while queue and len(measured) < target_width:
            var = queue.pop(0)
            if var in chosen:
                continue
            chosen.add(var)
            measured.append(var)
            queue.extend(sorted(neighbors.get(var, ()) - chosen))
        unvisited = [v for v in unvisited if v not in chosen]

    if len(measured) < target_width:
        pool = [v for v in range(m) if v not in chosen]
        extra = rng.choice(len(pool), size=target_width - len(measured), replace=False)
        measured.extend(pool[int(i)] for i in extra)

    measured_t = tuple(sorted(measured))
    selection = None
    if float(rng.random()) < selection_prob:
        selection = Selection(measured_t[int(rng.integers(len(measured_t)))], 1)
    return ExperimentDesign(measured_t, selection, noise_rate, samples)


def _rng_fingerprint(rng: np.random.Generator) -> str:
    blob = json.dumps(rng.bit_generator.state, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _sample_full_rows(gt: GroundTruth, count: int, rng: np.random.Generator) -> np.ndarray:
    rows = np.zeros((count, gt.m), dtype=np.uint8)
    flip_prob = 1.0 - gt.p_stay
    for v in gt.topo_order:
        parent = gt.parents[v]
        if parent is None:
            rows[:, v] = rng.integers(0, 2, size=count, dtype=np.uint8)
        else:
            flips = rng.random(count) < flip_prob
            rows[:, v] = rows[:, parent] ^ flips.astype(np.uint8)
    return rows


def sample_dataset(
    gt: GroundTruth,
    design: ExperimentDesign,
    rng: np.random.Generator,
    *,
    team_id: int = 0,
) -> tuple[Dataset, Datasheet]:
    """Draw ``design.samples`` rows from the ground-truth model.

    Full rows are generated tree by tree, rejection-resampled until the
    selection condition holds (when present), then every recorded bit is
    flipped independently with probability ``noise_rate`` and the row is
    projected onto the measured columns.
    """
    for v in design.measured:
        if not (0 <= v < gt.m):
            raise ConfigError(f"measured variable {v} is outside the range [0, {gt.m})")
    fingerprint = _rng_fingerprint(rng)
    selection = design.selection
    need = design.samples
    parts: list[np.ndarray] = []
    rounds = 0
    while need > 0:
        rounds += 1
        if rounds > _MAX_REJECTION_ROUNDS:
            raise RuntimeError("selection rejection sampling failed to converge")
        batch = need if selection is None else max(64, int(need * 2.2) + 8)
        full = _sample_full_rows(gt, batch, rng)
        if selection is not None:
            full = full[full[:, selection.variable] == selection.value]
        if full.shape[0] > need:
            full = full[:need]
        if full.shape[0]:
            parts.append(full)
            need -= full.shape[0]
    accepted = parts[0] if len(parts) == 1 else np.concatenate(parts)
    if design.noise_rate > 0.0:
        flips = rng.random(accepted.shape) < design.noise_rate
        accepted = accepted ^ flips.astype(np.uint8)
    data = accepted[:, list(design.measured)]
    dataset = Dataset(design.measured, data)
    sheet = Datasheet(
        team_id=team_id,
        measured=design.measured,
        selection=selection,
        noise_rate=design.noise_rate,
        samples=design.samples,
        seed_fingerprint=fingerprint,
    )
    return dataset, sheet


def export_dataset(dataset: Dataset, datasheet: Datasheet, path: Path | str) -> Path:
    """Write the dataset as CSV plus a JSON datasheet sidecar next to it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(dataset.columns)
        writer.writerows(dataset.rows.tolist())
    sidecar = path.with_suffix(".datasheet.json")
    sidecar.write_text(json.dumps(datasheet.to_json(), indent=2, sort_keys=True) + "\n")
    return sidecar
