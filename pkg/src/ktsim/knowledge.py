"""Knowledge universe: dependence claims over a hidden forest of binary variables.

The simulated world is a set of ``m`` binary variables arranged in a forest.
Two variables are genuinely dependent exactly when they sit in the same tree,
so the full set of true claims is finite and enumerable: one claim per
unordered variable pair, polarity ``dep`` when the pair shares a tree and
``indep`` otherwise. False knowledge is the polarity complement of true
knowledge, which makes membership of any claim exactly decidable by the
simulator (and only by the simulator; agents never see the forest).

Agents hold weighted subsets of the claim universe as priors, and teams merge
member priors by strict majority vote (rectify).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property, lru_cache
from heapq import heapify, heappop, heappush
from itertools import combinations
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from .errors import ConfigError


class Polarity(Enum):
    DEPENDENT = "dep"
    INDEPENDENT = "indep"

    @property
    def flipped(self) -> "Polarity":
        if self is Polarity.DEPENDENT:
            return Polarity.INDEPENDENT
        return Polarity.DEPENDENT


@dataclass(frozen=True)
class Claim:
    """Polarity-tagged statement about one unordered variable pair.

    The pair is canonicalized to ``u < v`` on construction, so two claims over
    the same pair compare equal regardless of argument order.
    """

    u: int
    v: int
    polarity: Polarity

    def __post_init__(self) -> None:
        u, v = self.u, self.v
        if u == v:
            raise ConfigError(f"claim pair must use two distinct variables, got ({u}, {v})")
        if u < 0 or v < 0:
            raise ConfigError(f"variable ids must be non-negative, got ({u}, {v})")
        if u > v:
            object.__setattr__(self, "u", v)
            object.__setattr__(self, "v", u)

    @property
    def pair(self) -> tuple[int, int]:
        return (self.u, self.v)

    def sort_key(self) -> tuple[int, int, str]:
        return (self.u, self.v, self.polarity.value)

    def __str__(self) -> str:
        return f"{self.polarity.value}({self.u},{self.v})"


def dependent(u: int, v: int) -> Claim:
    return Claim(u, v, Polarity.DEPENDENT)


def independent(u: int, v: int) -> Claim:
    return Claim(u, v, Polarity.INDEPENDENT)


def negate(claim: Claim) -> Claim:
    """Polarity complement; involutive and maps true claims onto false ones."""
    return Claim(claim.u, claim.v, claim.polarity.flipped)


@dataclass(frozen=True)
class WeightedClaim:
    claim: Claim
    confidence: float

    def __post_init__(self) -> None:
        if not (0.0 < self.confidence <= 1.0):
            raise ConfigError(f"confidence must lie in (0, 1], got {self.confidence}")

    def to_json(self) -> dict:
        return {
            "u": self.claim.u,
            "v": self.claim.v,
            "polarity": self.claim.polarity.value,
            "confidence": self.confidence,
        }

    @staticmethod
    def from_json(obj: dict) -> "WeightedClaim":
        return WeightedClaim(
            Claim(int(obj["u"]), int(obj["v"]), Polarity(obj["polarity"])),
            float(obj["confidence"]),
        )


class KnowledgeBase:
    """Conflict-free collection of weighted claims, at most one per pair.

    Immutable after construction; iteration is sorted by pair so any
    serialization derived from a knowledge base is deterministic.
    """

    __slots__ = ("_by_pair",)

    def __init__(self, claims: Iterable[WeightedClaim] = ()):
        by_pair: dict[tuple[int, int], WeightedClaim] = {}
        for wc in claims:
            key = wc.claim.pair
            if key in by_pair:
                raise ConfigError(f"knowledge base holds more than one claim for pair {key}")
            by_pair[key] = wc
        self._by_pair = by_pair

    def __len__(self) -> int:
        return len(self._by_pair)

    def __iter__(self) -> Iterator[WeightedClaim]:
        for key in sorted(self._by_pair):
            yield self._by_pair[key]

    def __contains__(self, pair: tuple[int, int]) -> bool:
        return tuple(sorted(pair)) in self._by_pair

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KnowledgeBase):
            return NotImplemented
        return self._by_pair == other._by_pair

    def __repr__(self) -> str:
        return f"KnowledgeBase({len(self)} claims)"

    def get(self, u: int, v: int) -> Optional[WeightedClaim]:
        return self._by_pair.get((u, v) if u < v else (v, u))

    def pairs(self) -> set[tuple[int, int]]:
        return set(self._by_pair)

    def claims(self) -> tuple[Claim, ...]:
        return tuple(wc.claim for wc in self)

    def extended(self, wc: WeightedClaim) -> "KnowledgeBase":
        """New base with one extra claim; the pair must be free."""
        return KnowledgeBase([*self, wc])

    def to_json(self) -> list[dict]:
        return [wc.to_json() for wc in self]

    @staticmethod
    def from_json(items: Sequence[dict]) -> "KnowledgeBase":
        return KnowledgeBase(WeightedClaim.from_json(obj) for obj in items)


EMPTY_KNOWLEDGE = KnowledgeBase()


@dataclass(frozen=True)
class GroundTruth:
    """Forest-structured generative model over ``m`` binary variables.

    ``parents[v]`` is the parent of ``v`` or None for tree roots. Each tree
    root is a fair coin; every child copies its parent's bit with probability
    ``p_stay`` and flips it otherwise. ``p_stay`` must exceed 0.5 so every
    intra-tree pair is genuinely dependent.
    """

    m: int
    parents: tuple[Optional[int], ...]
    p_stay: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "parents", tuple(self.parents))
        if self.m < 1:
            raise ConfigError(f"variable count must be >= 1, got {self.m}")
        if len(self.parents) != self.m:
            raise ConfigError(f"parents has length {len(self.parents)}, expected m={self.m}")
        if not (0.5 < self.p_stay < 1.0):
            raise ConfigError(f"p_stay must lie in (0.5, 1), got {self.p_stay}")
        for v, p in enumerate(self.parents):
            if p is None:
                continue
            if not (0 <= p < self.m) or p == v:
                raise ConfigError(f"parent of variable {v} is invalid: {p}")
        if len(self.topo_order) != self.m:
            raise ConfigError("parent links contain a cycle; structure must be a forest")

    @cached_property
    def roots(self) -> tuple[int, ...]:
        return tuple(v for v, p in enumerate(self.parents) if p is None)

    @cached_property
    def children(self) -> tuple[tuple[int, ...], ...]:
        kids: list[list[int]] = [[] for _ in range(self.m)]
        for v, p in enumerate(self.parents):
            if p is not None:
                kids[p].append(v)
        return tuple(tuple(sorted(k)) for k in kids)

    @cached_property
    def topo_order(self) -> tuple[int, ...]:
        # Breadth-first from roots in ascending order; parents precede children.
        order: list[int] = []
        queue = list(self.roots)
        while queue:
            v = queue.pop(0)
            order.append(v)
            queue.extend(self.children[v])
        return tuple(order)

    @cached_property
    def tree_ids(self) -> tuple[int, ...]:
        ids = [-1] * self.m
        for tree_index, root in enumerate(self.roots):
            stack = [root]
            while stack:
                v = stack.pop()
                ids[v] = tree_index
                stack.extend(self.children[v])
        return tuple(ids)

    @property
    def tree_count(self) -> int:
        return len(self.roots)

    def same_tree(self, u: int, v: int) -> bool:
        return self.tree_ids[u] == self.tree_ids[v]

    def tree_distance(self, u: int, v: int) -> Optional[int]:
        """Edge count on the tree path between u and v; None across trees."""
        if not self.same_tree(u, v):
            return None
        if u == v:
            return 0
        # Walk both nodes up to the root, then diff the ancestor chains.
        def chain(x: int) -> list[int]:
            out = [x]
            while self.parents[out[-1]] is not None:
                out.append(self.parents[out[-1]])  # type: ignore[arg-type]
            return out

        cu, cv = chain(u), chain(v)
        depth = {node: i for i, node in enumerate(cu)}
        for j, node in enumerate(cv):
            if node in depth:
                return depth[node] + j
        return None  # unreachable for a shared tree

    def all_pairs(self) -> Iterator[tuple[int, int]]:
        return combinations(range(self.m), 2)

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "parents": [p for p in self.parents],
            "p_stay": self.p_stay,
            "tree_count": self.tree_count,
        }


class Membership(Enum):
    IN_K = "in_k"
    IN_KC = "in_kc"


class Role(Enum):
    EXPERIMENTING = "experimenting"
    MINING = "mining"
    LABELING = "labeling"


@dataclass(frozen=True)
class Team:
    id: int
    role: Role
    members: tuple[int, ...]
    knowledge: KnowledgeBase

    def __post_init__(self) -> None:
        if not self.members:
            raise ConfigError("a team needs at least one member")

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "role": self.role.value,
            "members": list(self.members),
            "knowledge": self.knowledge.to_json(),
        }


@dataclass(frozen=True)
class AgentPool:
    priors: tuple[KnowledgeBase, ...]

    def __post_init__(self) -> None:
        if len(self.priors) < 1:
            raise ConfigError("agent pool must hold at least one agent")

    @property
    def agent_count(self) -> int:
        return len(self.priors)


# ---------------------------------------------------------------------------
# Forest construction
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _tree_count_on(n: int) -> int:
    # Cayley: n^(n-2) labeled trees on n >= 2 vertices, one on a single vertex.
    return 1 if n <= 2 else n ** (n - 2)


@lru_cache(maxsize=None)
def _forest_count(n: int, k: int) -> int:
    """Number of labeled forests on n vertices with exactly k (unrooted) trees."""
    if k < 0 or k > n:
        return 0
    if n == 0:
        return 1
    total = 0
    # s = size of the component containing the lowest-labeled vertex
    for s in range(1, n - k + 2):
        total += math.comb(n - 1, s - 1) * _tree_count_on(s) * _forest_count(n - s, k - 1)
    return total


def _rand_below(rng: np.random.Generator, bound: int) -> int:
    """Uniform integer in [0, bound) for arbitrarily large bound."""
    if bound <= 0:
        raise ValueError("bound must be positive")
    nbits = bound.bit_length()
    nwords = (nbits + 31) // 32
    while True:
        words = rng.integers(0, 1 << 32, size=nwords, dtype=np.uint64)
        r = 0
        for w in words:
            r = (r << 32) | int(w)
        r >>= nwords * 32 - nbits
        if r < bound:
            return r


def _decode_pruefer(seq: Sequence[int], size: int) -> list[tuple[int, int]]:
    degree = [1] * size
    for x in seq:
        degree[x] += 1
    leaves = [i for i in range(size) if degree[i] == 1]
    heapify(leaves)
    edges = []
    for x in seq:
        leaf = heappop(leaves)
        edges.append((leaf, x))
        degree[x] -= 1
        if degree[x] == 1:
            heappush(leaves, x)
    edges.append((heappop(leaves), heappop(leaves)))
    return edges


def _random_tree_edges(labels: Sequence[int], rng: np.random.Generator) -> list[tuple[int, int]]:
    s = len(labels)
    if s == 1:
        return []
    if s == 2:
        return [(labels[0], labels[1])]
    seq = [int(x) for x in rng.integers(0, s, size=s - 2)]
    return [(labels[a], labels[b]) for a, b in _decode_pruefer(seq, s)]


def _sample_forest_parents(m: int, tree_count: int, rng: np.random.Generator) -> tuple[Optional[int], ...]:
    """Uniformly random labeled forest with exactly ``tree_count`` trees.

    Sequential decomposition over the component containing the lowest
    remaining label, with component sizes drawn proportionally to exact
    counts, members as a uniform subset, and the tree itself decoded from a
    uniform Pruefer sequence.
    """
    remaining = list(range(m))
    k = tree_count
    adjacency: list[list[int]] = [[] for _ in range(m)]
    while remaining:
        n = len(remaining)
        anchor = remaining[0]
        r = _rand_below(rng, _forest_count(n, k))
        acc = 0
        size = n - k + 1
        for s in range(1, n - k + 2):
            acc += math.comb(n - 1, s - 1) * _tree_count_on(s) * _forest_count(n - s, k - 1)
            if r < acc:
                size = s
                break
        others = remaining[1:]
        if size > 1:
            picked = rng.choice(len(others), size=size - 1, replace=False)
            members = sorted([anchor] + [others[int(i)] for i in picked])
        else:
            members = [anchor]
        for a, b in _random_tree_edges(members, rng):
            adjacency[a].append(b)
            adjacency[b].append(a)
        member_set = set(members)
        remaining = [v for v in remaining if v not in member_set]
        k -= 1

    # Root every component at its smallest vertex.
    parents: list[Optional[int]] = [None] * m
    seen = [False] * m
    for v in range(m):
        if seen[v]:
            continue
        seen[v] = True
        queue = [v]
        while queue:
            cur = queue.pop(0)
            for nxt in sorted(adjacency[cur]):
                if not seen[nxt]:
                    seen[nxt] = True
                    parents[nxt] = cur
                    queue.append(nxt)
    return tuple(parents)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def build_ground_truth(m: int, tree_count: int, p_stay: float, rng: np.random.Generator) -> GroundTruth:
    """Sample a uniformly random labeled forest spanning all m variables."""
    if m < 1:
        raise ConfigError(f"variable count must be >= 1, got {m}")
    if not (1 <= tree_count <= m):
        raise ConfigError(f"tree_count must lie in [1, m={m}], got {tree_count}")
    if not (0.5 < p_stay < 1.0):
        raise ConfigError(f"p_stay must lie in (0.5, 1), got {p_stay}")
    return GroundTruth(m, _sample_forest_parents(m, tree_count, rng), p_stay)


def true_knowledge(gt: GroundTruth) -> frozenset[Claim]:
    """The complete set of true claims: one per pair, polarity by shared tree."""
    out = []
    for u, v in gt.all_pairs():
        pol = Polarity.DEPENDENT if gt.same_tree(u, v) else Polarity.INDEPENDENT
        out.append(Claim(u, v, pol))
    return frozenset(out)


def membership(claim: Claim, gt: GroundTruth) -> Membership:
    """Exact truth oracle. Simulator-side only; agents never call this."""
    if claim.v >= gt.m:
        raise ConfigError(f"claim {claim} is outside the variable range [0, {gt.m})")
    truly_dependent = gt.same_tree(claim.u, claim.v)
    holds = (claim.polarity is Polarity.DEPENDENT) == truly_dependent
    return Membership.IN_K if holds else Membership.IN_KC


def sample_agent_prior(
    gt: GroundTruth,
    coverage: float,
    accuracy: float,
    rng: np.random.Generator,
) -> KnowledgeBase:
    """Random prior: each pair independently covered, each covered claim true
    with probability ``accuracy`` (else negated), confidence uniform [0.5, 1].
    """
    if not (0.0 <= coverage <= 1.0):
        raise ConfigError(f"coverage must lie in [0, 1], got {coverage}")
    if not (0.0 <= accuracy <= 1.0):
        raise ConfigError(f"accuracy must lie in [0, 1], got {accuracy}")
    pairs = list(gt.all_pairs())
    include = rng.random(len(pairs)) < coverage
    truthful = rng.random(len(pairs)) < accuracy
    confidence = rng.uniform(0.5, 1.0, len(pairs))
    claims = []
    for idx, (u, v) in enumerate(pairs):
        if not include[idx]:
            continue
        pol = Polarity.DEPENDENT if gt.same_tree(u, v) else Polarity.INDEPENDENT
        if not truthful[idx]:
            pol = pol.flipped
        claims.append(WeightedClaim(Claim(u, v, pol), float(confidence[idx])))
    return KnowledgeBase(claims)


def sample_agent_pool(
    gt: GroundTruth,
    count: int,
    coverage: float,
    accuracy: float,
    rng: np.random.Generator,
) -> AgentPool:
    if count < 1:
        raise ConfigError(f"agent count must be >= 1, got {count}")
    return AgentPool(tuple(sample_agent_prior(gt, coverage, accuracy, rng) for _ in range(count)))


def rectify(member_priors: Sequence[KnowledgeBase]) -> KnowledgeBase:
    """Merge member priors into one team knowledge base.

    Per pair, strict majority polarity wins with confidence equal to the mean
    confidence of the agreeing members; exact ties drop the pair entirely.
    """
    if not member_priors:
        raise ConfigError("rectify needs at least one knowledge base")
    all_pairs: set[tuple[int, int]] = set()
    for kb in member_priors:
        all_pairs |= kb.pairs()
    merged = []
    for pair in sorted(all_pairs):
        votes = [kb.get(*pair) for kb in member_priors]
        deps = [wc for wc in votes if wc is not None and wc.claim.polarity is Polarity.DEPENDENT]
        inds = [wc for wc in votes if wc is not None and wc.claim.polarity is Polarity.INDEPENDENT]
        if len(deps) == len(inds):
            continue
        winners = deps if len(deps) > len(inds) else inds
        confidence = sum(wc.confidence for wc in winners) / len(winners)
        merged.append(WeightedClaim(winners[0].claim, confidence))
    return KnowledgeBase(merged)
