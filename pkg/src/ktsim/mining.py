"""Mining stage: exhaustive pairwise association patterns with provenance care.

Every unordered pair of measured variables yields one pattern carrying the
phi coefficient of its 2x2 contingency table. When the upstream datasheet was
delivered, two corrections become possible: dividing phi by (1 - 2*delta)^2
undoes symmetric bit-flip noise, and a recorded selection condition marks all
patterns not involving the selected variable as conditioned (their apparent
independence may be an artifact of the selection). Prior knowledge never
alters a statistic; it only tags patterns as disputed so the conflict stays
auditable downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

from .errors import ConfigError
from .experimenting import Dataset, Datasheet
from .knowledge import KnowledgeBase, Polarity

TAG_NOISE_CORRECTED = "noise_corrected"
TAG_SELECTION_CONDITIONED = "selection_conditioned"
TAG_DEGENERATE = "degenerate"
TAG_DISPUTED = "disputed"

DEFAULT_DEP_THRESHOLD = 0.3
DEFAULT_IND_THRESHOLD = 0.05


@dataclass(frozen=True)
class MiningParams:
    report_all: bool = True
    veto_confidence: float = 0.9
    dep_threshold: float = DEFAULT_DEP_THRESHOLD
    ind_threshold: float = DEFAULT_IND_THRESHOLD

    def __post_init__(self) -> None:
        if not (0.0 < self.veto_confidence <= 1.0):
            raise ConfigError(f"veto_confidence must lie in (0, 1], got {self.veto_confidence}")
        if not (0.0 <= self.ind_threshold < self.dep_threshold <= 1.0):
            raise ConfigError(
                "thresholds must satisfy 0 <= ind_threshold < dep_threshold <= 1, "
                f"got ind={self.ind_threshold} dep={self.dep_threshold}"
            )

    def to_json(self) -> dict:
        return {
            "report_all": self.report_all,
            "veto_confidence": self.veto_confidence,
            "dep_threshold": self.dep_threshold,
            "ind_threshold": self.ind_threshold,
        }


@dataclass(frozen=True)
class Pattern:
    pair: tuple[int, int]
    phi: float
    support: int
    tags: frozenset[str]

    def __post_init__(self) -> None:
        object.__setattr__(self, "pair", (int(self.pair[0]), int(self.pair[1])))
        object.__setattr__(self, "tags", frozenset(self.tags))
        if abs(self.phi) > 1.0:
            raise ConfigError(f"|phi| must not exceed 1, got {self.phi}")

    def implied_polarity(self, dep_threshold: float, ind_threshold: float) -> Optional[Polarity]:
        """Polarity this pattern suggests, or None in the abstention band."""
        if TAG_DEGENERATE in self.tags:
            return None
        if abs(self.phi) >= dep_threshold:
            return Polarity.DEPENDENT
        if abs(self.phi) <= ind_threshold:
            return Polarity.INDEPENDENT
        return None

    def to_json(self) -> dict:
        return {
            "u": self.pair[0],
            "v": self.pair[1],
            "phi": self.phi,
            "support": self.support,
            "tags": sorted(self.tags),
        }


@dataclass(frozen=True)
class InfoSheet:
    team_id: int
    params: MiningParams
    corrections_applied: frozenset[str]
    upstream_datasheet: Optional[Datasheet]
    knowledge_snapshot: Optional[KnowledgeBase] = None

    def to_json(self) -> dict:
        return {
            "team_id": self.team_id,
            "params": self.params.to_json(),
            "corrections_applied": sorted(self.corrections_applied),
            "upstream_datasheet": (
                self.upstream_datasheet.to_json() if self.upstream_datasheet is not None else None
            ),
            "knowledge_snapshot": (
                self.knowledge_snapshot.to_json() if self.knowledge_snapshot is not None else None
            ),
        }


@dataclass(frozen=True)
class Information:
    patterns: tuple[Pattern, ...]
    info_sheet: InfoSheet

    def to_json(self) -> dict:
        return {
            "patterns": [p.to_json() for p in self.patterns],
            "info_sheet": self.info_sheet.to_json(),
        }


def phi_coefficient(ds: Dataset, u: int, v: int) -> Optional[float]:
    """2x2 association coefficient (ad - bc) / sqrt of the margin product.

    Returns None when any margin is zero (a constant column); callers tag the
    corresponding pattern degenerate instead of aborting.
    """
    x = ds.column(u)
    y = ds.column(v)
    n = x.shape[0]
    a = int((x & y).sum())  # 11
    row1 = int(x.sum())
    col1 = int(y.sum())
    b = row1 - a  # 10
    c = col1 - a  # 01
    d = n - row1 - col1 + a  # 00
    denom = (a + b) * (c + d) * (a + c) * (b + d)
    if denom == 0:
        return None
    return (a * d - b * c) / math.sqrt(denom)


def correct_attenuation(phi: float, noise_rate: float) -> float:
    """Invert symmetric bit-flip attenuation; result clamped to [-1, 1]."""
    if not (0.0 <= noise_rate < 0.5):
        raise ConfigError(f"noise_rate must lie in [0, 0.5), got {noise_rate}")
    factor = (1.0 - 2.0 * noise_rate) ** 2
    return max(-1.0, min(1.0, phi / factor))


def _disputed(
    pattern: Pattern,
    bases: Sequence[KnowledgeBase],
    params: MiningParams,
) -> bool:
    implied = pattern.implied_polarity(params.dep_threshold, params.ind_threshold)
    if implied is None:
        return False
    for base in bases:
        wc = base.get(*pattern.pair)
        if wc is not None and wc.confidence >= params.veto_confidence and wc.claim.polarity is not implied:
            return True
    return False


def mine(
    ds: Dataset,
    miner_kb: KnowledgeBase,
    delivered: Optional[Datasheet],
    peer_kbs: Sequence[KnowledgeBase],
    params: MiningParams,
    *,
    team_id: int = 0,
) -> Information:
    """Extract one pattern per measured pair, correcting only what the
    delivered datasheet proves: noise inversion when delta > 0 was recorded,
    selection tags when a selection condition was recorded. Without the
    datasheet the raw statistics pass through untouched.
    """
    apply_noise = delivered is not None and delivered.noise_rate > 0.0
    selection = delivered.selection if delivered is not None else None
    prior_bases = [miner_kb, *peer_kbs]
    patterns = []
    cols = ds.columns
    for i in range(len(cols)):
        for j in range(i + 1, len(cols)):
            u, v = cols[i], cols[j]
            if u > v:
                u, v = v, u
            raw = phi_coefficient(ds, u, v)
            tags = set()
            if raw is None:
                value = 0.0
                tags.add(TAG_DEGENERATE)
            else:
                value = raw
                if apply_noise:
                    value = correct_attenuation(value, delivered.noise_rate)
                    tags.add(TAG_NOISE_CORRECTED)
            if selection is not None and selection.variable not in (u, v):
                tags.add(TAG_SELECTION_CONDITIONED)
            pattern = Pattern((u, v), value, ds.n, frozenset(tags))
            if _disputed(pattern, prior_bases, params):
                pattern = replace(pattern, tags=pattern.tags | {TAG_DISPUTED})
            patterns.append(pattern)
    sheet = InfoSheet(
        team_id=team_id,
        params=params,
        corrections_applied=frozenset({TAG_NOISE_CORRECTED} if apply_noise else ()),
        upstream_datasheet=delivered,
    )
    return Information(tuple(patterns), sheet)
