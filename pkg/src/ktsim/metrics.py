"""Scoring and validation: openness against ground truth, growth checks, oracles.

The openness score of a set of labelings is the number of distinct labeled
claims that are true minus the number that are false, computed over the union
of all producing triples' outputs. Opposite-polarity claims on the same pair
emitted by different triples both enter the union and each counts on its own
side. Only this module consults the exact membership oracle; agent-side code
never can.

The monotonicity validator stress-tests the labeling stage's two growth
properties on randomized pipeline states, and the correlation oracle provides
an implementation-independent Monte Carlo check of the chain correlation and
noise attenuation laws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import ScenarioConfig
from .errors import ConfigError
from .experimenting import design_experiment, sample_dataset
from .knowledge import (
    Claim,
    GroundTruth,
    Membership,
    Polarity,
    WeightedClaim,
    build_ground_truth,
    membership,
    negate,
    sample_agent_prior,
)
from .labeling import EffectivePrior, LabeledKnowledge, build_effective_prior, label, reinterpret
from .mining import mine


@dataclass(frozen=True)
class TripleReport:
    teams: tuple[int, int, int]
    union_size: int
    true_count: int
    false_count: int
    openness: int
    normalized: float

    def to_json(self) -> dict:
        return {
            "teams": list(self.teams),
            "union_size": self.union_size,
            "true_count": self.true_count,
            "false_count": self.false_count,
            "openness": self.openness,
            "normalized": self.normalized,
        }


@dataclass(frozen=True)
class OpennessReport:
    union_size: int
    true_count: int
    false_count: int
    openness: int
    normalized: float
    per_triple: tuple[TripleReport, ...]

    def to_json(self) -> dict:
        return {
            "union_size": self.union_size,
            "true_count": self.true_count,
            "false_count": self.false_count,
            "openness": self.openness,
            "normalized": self.normalized,
            "per_triple": [t.to_json() for t in self.per_triple],
        }


def _score(claims: set[Claim], gt: GroundTruth) -> tuple[int, int]:
    true_count = sum(1 for c in claims if membership(c, gt) is Membership.IN_K)
    return true_count, len(claims) - true_count


def openness(labelings: Sequence[LabeledKnowledge], gt: GroundTruth) -> OpennessReport:
    """True-minus-false count over the deduplicated union of all labelings."""
    union: set[Claim] = set()
    per_triple = []
    for lk in labelings:
        claims = set(lk.claims)
        union |= claims
        t, f = _score(claims, gt)
        per_triple.append(
            TripleReport(
                teams=lk.teams,
                union_size=len(claims),
                true_count=t,
                false_count=f,
                openness=t - f,
                normalized=(t - f) / len(claims) if claims else 0.0,
            )
        )
    t, f = _score(union, gt)
    return OpennessReport(
        union_size=len(union),
        true_count=t,
        false_count=f,
        openness=t - f,
        normalized=(t - f) / len(union) if union else 0.0,
        per_triple=tuple(per_triple),
    )


# ---------------------------------------------------------------------------
# Paired sign test
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SignTestResult:
    wins: int
    losses: int
    ties: int
    p_greater: float

    def to_json(self) -> dict:
        return {"wins": self.wins, "losses": self.losses, "ties": self.ties, "p_greater": self.p_greater}


def paired_sign_test(first: Sequence[float], second: Sequence[float]) -> SignTestResult:
    """One-sided sign test that ``first`` tends to exceed ``second``.

    Ties are dropped; the p-value is the exact binomial tail probability of
    at least the observed number of wins under a fair coin.
    """
    if len(first) != len(second):
        raise ConfigError("paired sign test needs sequences of equal length")
    wins = sum(1 for a, b in zip(first, second) if a > b)
    losses = sum(1 for a, b in zip(first, second) if a < b)
    n = wins + losses
    if n == 0:
        p = 1.0
    else:
        p = sum(math.comb(n, k) for k in range(wins, n + 1)) / 2.0 ** n
    return SignTestResult(wins, losses, len(first) - n, p)


# ---------------------------------------------------------------------------
# Monotonicity validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MonotonicityReport:
    trials: int
    violations: int
    transcripts: tuple[str, ...]

    def to_json(self) -> dict:
        return {
            "trials": self.trials,
            "violations": self.violations,
            "transcripts": list(self.transcripts),
        }


def _count_side(lk: LabeledKnowledge, gt: GroundTruth, side: Membership) -> int:
    return sum(1 for c in lk.claims if membership(c, gt) is side)


def validate_monotonicity(
    trials: int,
    scenario: ScenarioConfig,
    rng: np.random.Generator,
) -> MonotonicityReport:
    """Randomized check of the labeling stage's growth guarantees.

    Each trial builds a fresh pipeline state (ground truth, priors, a mined
    information product under a random channel situation), draws a claim on a
    pair the effective prior does not cover with confidence at or above both
    the veto and trust thresholds, and labels before and after adding it. A
    violation is a drop in the count of labeled claims on the added claim's
    own side of the truth (true side for a true claim, false side for a false
    one). The check runs whatever labeling parameters the scenario carries,
    including deliberately broken ones, and reports rather than hides what it
    finds.
    """
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    params = scenario.labeling
    floor = max(params.veto_confidence, params.trust_confidence)
    violations = 0
    transcripts = []
    for trial in range(trials):
        trial_rng = np.random.default_rng(rng.integers(0, 2**63, dtype=np.uint64))
        gt = build_ground_truth(scenario.m, scenario.tree_count, scenario.p_stay, trial_rng)
        exp_kb = sample_agent_prior(gt, scenario.agents.coverage, scenario.agents.accuracy, trial_rng)
        miner_kb = sample_agent_prior(gt, scenario.agents.coverage, scenario.agents.accuracy, trial_rng)
        own_kb = sample_agent_prior(gt, scenario.agents.coverage, scenario.agents.accuracy, trial_rng)
        design = design_experiment(
            exp_kb,
            scenario.m,
            scenario.experiment.target_width,
            scenario.experiment.selection_prob,
            scenario.experiment.noise_rate,
            scenario.experiment.samples,
            trial_rng,
        )
        dataset, datasheet = sample_dataset(gt, design, trial_rng)
        ch1, ch2, ch3 = (bool(trial_rng.integers(2)) for _ in range(3))
        info = mine(dataset, miner_kb, datasheet if ch1 else None, [], scenario.mining)
        prior = build_effective_prior(own_kb, miner_kb if ch2 else None, None)
        exp_sheet = datasheet if ch3 else None

        covered = prior.claims.pairs()
        pattern_pairs = [p.pair for p in info.patterns if p.pair not in covered]
        free_pairs = [pair for pair in gt.all_pairs() if pair not in covered]
        if not free_pairs:
            continue
        if pattern_pairs and trial_rng.random() < 0.5:
            pair = pattern_pairs[int(trial_rng.integers(len(pattern_pairs)))]
        else:
            pair = free_pairs[int(trial_rng.integers(len(free_pairs)))]
        true_pol = Polarity.DEPENDENT if gt.same_tree(*pair) else Polarity.INDEPENDENT
        claim = Claim(pair[0], pair[1], true_pol)
        if trial_rng.random() < 0.5:
            claim = negate(claim)
        confidence = float(trial_rng.uniform(floor, 1.0)) if floor < 1.0 else 1.0
        side = membership(claim, gt)

        before = label(reinterpret(info, prior, exp_sheet, params), prior, params)
        grown = EffectivePrior(prior.claims.extended(WeightedClaim(claim, confidence)))
        after = label(reinterpret(info, grown, exp_sheet, params), grown, params)

        n_before = _count_side(before, gt, side)
        n_after = _count_side(after, gt, side)
        if n_after < n_before:
            violations += 1
            if len(transcripts) < 20:
                transcripts.append(
                    f"trial {trial}: added {claim} (confidence {confidence:.3f}, "
                    f"{side.value}) and the {side.value} count fell {n_before} -> {n_after}"
                )
    return MonotonicityReport(trials, violations, tuple(transcripts))


# ---------------------------------------------------------------------------
# Chain correlation oracle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OracleReport:
    p_stay: float
    dist: int
    delta: float
    samples: int
    analytic: float
    empirical: float
    abs_diff: float

    def to_json(self) -> dict:
        return {
            "p_stay": self.p_stay,
            "dist": self.dist,
            "delta": self.delta,
            "samples": self.samples,
            "analytic": self.analytic,
            "empirical": self.empirical,
            "abs_diff": self.abs_diff,
        }


def correlation_oracle(
    p_stay: float,
    dist: int,
    delta: float,
    samples: int,
    rng: np.random.Generator,
) -> OracleReport:
    """Monte Carlo check of phi = (2p - 1)^d * (1 - 2*delta)^2 on a chain.

    Deliberately bypasses the production sampler and the contingency-table
    formula: the chain is walked directly and the coefficient comes from the
    Pearson correlation of the two endpoint columns.
    """
    if not (0.5 < p_stay < 1.0):
        raise ConfigError(f"p_stay must lie in (0.5, 1), got {p_stay}")
    if dist < 1:
        raise ConfigError(f"dist must be >= 1, got {dist}")
    if not (0.0 <= delta < 0.5):
        raise ConfigError(f"delta must lie in [0, 0.5), got {delta}")
    if samples < 2:
        raise ConfigError(f"samples must be >= 2, got {samples}")
    start = rng.integers(0, 2, size=samples, dtype=np.uint8)
    end = start.copy()
    for _ in range(dist):
        end = end ^ (rng.random(samples) < (1.0 - p_stay)).astype(np.uint8)
    if delta > 0.0:
        start = start ^ (rng.random(samples) < delta).astype(np.uint8)
        end = end ^ (rng.random(samples) < delta).astype(np.uint8)
    empirical = float(np.corrcoef(start.astype(float), end.astype(float))[0, 1])
    analytic = (2.0 * p_stay - 1.0) ** dist * (1.0 - 2.0 * delta) ** 2
    return OracleReport(p_stay, dist, delta, samples, analytic, empirical, abs(empirical - analytic))
