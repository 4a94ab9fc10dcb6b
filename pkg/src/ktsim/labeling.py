"""Labeling stage: reinterpretation under an effective prior, then claim emission.

The labeler first merges every knowledge base it was granted into a single
effective prior (own knowledge outranks the miner's, which outranks the
experimenter's, which outranks peers). Reinterpretation then applies any
correction the miner missed, provided a datasheet reached this stage by some
channel, and drops patterns that contradict a confidently held prior claim.

Labeling itself is built to keep two growth properties by construction: a new
true prior claim on a fresh pair can only add a true labeled claim or replace
a false one, and dually for false claims. High-confidence prior claims pass
through into the output and take precedence over pattern-derived labels on
the same pair; ambiguous, degenerate, disputed, or selection-compromised
patterns yield no claim at all.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

from .errors import ConfigError
from .experimenting import Datasheet
from .knowledge import Claim, KnowledgeBase, Polarity, negate
from .mining import (
    DEFAULT_DEP_THRESHOLD,
    DEFAULT_IND_THRESHOLD,
    TAG_DEGENERATE,
    TAG_DISPUTED,
    TAG_NOISE_CORRECTED,
    TAG_SELECTION_CONDITIONED,
    Information,
    Pattern,
    correct_attenuation,
)

ORIGIN_PATTERN = "pattern"
ORIGIN_PRIOR = "prior_passthrough"


@dataclass(frozen=True)
class LabelingParams:
    dep_threshold: float = DEFAULT_DEP_THRESHOLD
    ind_threshold: float = DEFAULT_IND_THRESHOLD
    veto_confidence: float = 0.9
    trust_confidence: float = 0.9
    #: Fault injection for the negative control of the monotonicity validator:
    #: pass-through emits the negation of each trusted prior claim.
    break_passthrough: bool = False

    def __post_init__(self) -> None:
        if not (0.0 <= self.ind_threshold < self.dep_threshold <= 1.0):
            raise ConfigError(
                "thresholds must satisfy 0 <= ind_threshold < dep_threshold <= 1, "
                f"got ind={self.ind_threshold} dep={self.dep_threshold}"
            )
        if not (0.0 < self.veto_confidence <= 1.0):
            raise ConfigError(f"veto_confidence must lie in (0, 1], got {self.veto_confidence}")
        if not (0.0 < self.trust_confidence <= 1.0):
            raise ConfigError(f"trust_confidence must lie in (0, 1], got {self.trust_confidence}")

    def to_json(self) -> dict:
        return {
            "dep_threshold": self.dep_threshold,
            "ind_threshold": self.ind_threshold,
            "veto_confidence": self.veto_confidence,
            "trust_confidence": self.trust_confidence,
            "break_passthrough": self.break_passthrough,
        }


@dataclass(frozen=True)
class EffectivePrior:
    """One claim per pair, already resolved across all granted sources."""

    claims: KnowledgeBase


@dataclass(frozen=True)
class LabeledClaim:
    claim: Claim
    origin: str

    def to_json(self) -> dict:
        return {
            "u": self.claim.u,
            "v": self.claim.v,
            "polarity": self.claim.polarity.value,
            "origin": self.origin,
        }


@dataclass(frozen=True)
class LabeledKnowledge:
    entries: tuple[LabeledClaim, ...]
    teams: tuple[int, int, int]

    def __post_init__(self) -> None:
        pairs = [e.claim.pair for e in self.entries]
        if len(pairs) != len(set(pairs)):
            raise ConfigError("labeled knowledge must hold at most one claim per pair")

    @property
    def claims(self) -> tuple[Claim, ...]:
        return tuple(e.claim for e in self.entries)

    def to_json(self) -> dict:
        return {
            "teams": list(self.teams),
            "claims": [e.to_json() for e in self.entries],
        }


def build_effective_prior(
    own: KnowledgeBase,
    delivered_miner: Optional[KnowledgeBase],
    delivered_exp: Optional[KnowledgeBase],
    peers: Sequence[KnowledgeBase] = (),
) -> EffectivePrior:
    """Union of every delivered base; per-pair conflicts go to the strongest
    source (labeler, then miner, then experimenter, then peers in list order).
    """
    merged: dict[tuple[int, int], object] = {}
    layers: list[KnowledgeBase] = [kb for kb in reversed(list(peers))]
    if delivered_exp is not None:
        layers.append(delivered_exp)
    if delivered_miner is not None:
        layers.append(delivered_miner)
    layers.append(own)
    for base in layers:
        for wc in base:
            merged[wc.claim.pair] = wc
    return EffectivePrior(KnowledgeBase(merged[k] for k in sorted(merged)))


def _veto_applies(pattern: Pattern, prior: EffectivePrior, params: LabelingParams) -> bool:
    implied = pattern.implied_polarity(params.dep_threshold, params.ind_threshold)
    if implied is None:
        return False
    wc = prior.claims.get(*pattern.pair)
    return (
        wc is not None
        and wc.confidence >= params.veto_confidence
        and wc.claim.polarity is not implied
    )


def reinterpret(
    info: Information,
    prior: EffectivePrior,
    delivered_exp_datasheet: Optional[Datasheet],
    params: LabelingParams,
) -> Information:
    """Re-read information with everything the labeler knows.

    If a datasheet is visible at this stage (delivered directly, or embedded
    in the info sheet because the miner had it) and the noise correction has
    not been applied yet, apply it here; the algebra is shared with the mining
    stage, so both routes produce identical values. Patterns whose implied
    polarity contradicts a prior claim held with confidence at or above the
    veto threshold are removed, except patterns the miner already marked
    disputed (that conflict is recorded; stripping the pattern as well would
    erase the audit trail and, when one team plays every role, make the
    reinterpretation diverge from the information it already produced).
    Selection tags are propagated when the datasheet reveals a condition the
    miner did not know about.
    """
    sheet = info.info_sheet
    datasheet = delivered_exp_datasheet if delivered_exp_datasheet is not None else sheet.upstream_datasheet
    patterns = list(info.patterns)
    corrections = set(sheet.corrections_applied)

    if datasheet is not None and datasheet.noise_rate > 0.0 and TAG_NOISE_CORRECTED not in corrections:
        fixed = []
        for p in patterns:
            if TAG_DEGENERATE in p.tags:
                fixed.append(p)
            else:
                fixed.append(
                    replace(
                        p,
                        phi=correct_attenuation(p.phi, datasheet.noise_rate),
                        tags=p.tags | {TAG_NOISE_CORRECTED},
                    )
                )
        patterns = fixed
        corrections.add(TAG_NOISE_CORRECTED)

    if datasheet is not None and datasheet.selection is not None:
        sel_var = datasheet.selection.variable
        patterns = [
            replace(p, tags=p.tags | {TAG_SELECTION_CONDITIONED})
            if sel_var not in p.pair and TAG_SELECTION_CONDITIONED not in p.tags
            else p
            for p in patterns
        ]

    kept = []
    for p in patterns:
        if TAG_DISPUTED not in p.tags and _veto_applies(p, prior, params):
            continue
        kept.append(p)
    return Information(tuple(kept), replace(sheet, corrections_applied=frozenset(corrections)))


def label(
    info: Information,
    prior: EffectivePrior,
    params: LabelingParams,
    *,
    teams: tuple[int, int, int] = (0, 0, 0),
) -> LabeledKnowledge:
    """Turn reinterpreted patterns plus trusted prior claims into new claims.

    Pattern rule: |phi| >= dep_threshold labels Dependent; |phi| <=
    ind_threshold labels Independent unless the pattern is selection
    conditioned (apparent independence may be masking); anything in between,
    degenerate, or disputed yields no claim. Prior claims at or above the
    trust threshold pass through afterwards and overwrite pattern labels on
    their pair.
    """
    chosen: dict[tuple[int, int], LabeledClaim] = {}
    for p in info.patterns:
        if TAG_DEGENERATE in p.tags or TAG_DISPUTED in p.tags:
            continue
        implied = p.implied_polarity(params.dep_threshold, params.ind_threshold)
        if implied is None:
            continue
        if implied is Polarity.INDEPENDENT and TAG_SELECTION_CONDITIONED in p.tags:
            continue
        u, v = p.pair
        chosen[p.pair] = LabeledClaim(Claim(u, v, implied), ORIGIN_PATTERN)
    for wc in prior.claims:
        if wc.confidence >= params.trust_confidence:
            claim = negate(wc.claim) if params.break_passthrough else wc.claim
            chosen[claim.pair] = LabeledClaim(claim, ORIGIN_PRIOR)
    entries = tuple(chosen[k] for k in sorted(chosen))
    return LabeledKnowledge(entries, teams)
