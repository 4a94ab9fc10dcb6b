"""End-to-end runs: wire teams together, gate channels, execute paired sweeps.

A run is a single forward pass: build the hidden forest, sample agent priors,
form and rectify teams, let each experimenting team design and collect a
dataset, mine every wired (dataset, miner) pair, and label every wired
product. The channel policy decides only what provenance and knowledge gets
delivered; it never touches the upstream random draws, so two runs with the
same seed and different channels share identical datasets bit for bit.

A sweep exploits that: for each replicate one data-stage seed is derived from
the master seed, and all eight channel combinations are run against it. Any
difference inside a replicate is therefore attributable to the channels
alone.
"""

from __future__ import annotations

import csv
import json
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .config import ChannelPolicy, ScenarioConfig
from .errors import ConfigError
from .experimenting import Dataset, Datasheet, design_experiment, export_dataset, sample_dataset
from .knowledge import (
    AgentPool,
    GroundTruth,
    Role,
    Team,
    build_ground_truth,
    rectify,
    sample_agent_pool,
)
from .labeling import LabeledKnowledge, build_effective_prior, label, reinterpret
from .metrics import OpennessReport, SignTestResult, openness, paired_sign_test
from .mining import Information, mine

ALL_CHANNEL_MASKS = tuple(range(8))


def replicate_seed(master_seed: int, replicate: int) -> int:
    """Deterministic, well-mixed per-replicate seed for the data stage."""
    ss = np.random.SeedSequence([int(master_seed), int(replicate)])
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class DatasetRecord:
    team_id: int
    dataset: Dataset
    datasheet: Datasheet
    sha256: str

    def to_json(self) -> dict:
        return {
            "team_id": self.team_id,
            "rows": self.dataset.n,
            "sha256": self.sha256,
            "datasheet": self.datasheet.to_json(),
        }


@dataclass(frozen=True)
class RunResult:
    config: ScenarioConfig
    seed: int
    ground_truth: GroundTruth
    teams: tuple[Team, ...]
    datasets: tuple[DatasetRecord, ...]
    informations: tuple[tuple[tuple[int, int], Information], ...]
    labelings: tuple[LabeledKnowledge, ...]
    openness: OpennessReport

    def to_json(self) -> dict:
        return {
            "config": self.config.to_json(),
            "seed": self.seed,
            "ground_truth": self.ground_truth.to_json(),
            "teams": [t.to_json() for t in self.teams],
            "datasets": [d.to_json() for d in self.datasets],
            "informations": [
                {"experimenter": i, "miner": j, "information": info.to_json()}
                for (j, i), info in self.informations
            ],
            "labelings": [lk.to_json() for lk in self.labelings],
            "openness": self.openness.to_json(),
        }

    def to_json_text(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"


def _form_teams(cfg: ScenarioConfig, pool: AgentPool, rng: np.random.Generator) -> dict[Role, tuple[Team, ...]]:
    def draw(size: int) -> tuple[int, ...]:
        picked = rng.choice(pool.agent_count, size=size, replace=False)
        return tuple(sorted(int(a) for a in picked))

    teams: dict[Role, tuple[Team, ...]] = {}
    if cfg.self_driving:
        spec = cfg.teams.experimenting
        member_sets = [draw(spec.size) for _ in range(spec.count)]
        for role in Role:
            teams[role] = tuple(
                Team(t, role, members, rectify([pool.priors[a] for a in members]))
                for t, members in enumerate(member_sets)
            )
        return teams
    for role, spec in (
        (Role.EXPERIMENTING, cfg.teams.experimenting),
        (Role.MINING, cfg.teams.mining),
        (Role.LABELING, cfg.teams.labeling),
    ):
        built = []
        for t in range(spec.count):
            members = draw(spec.size)
            built.append(Team(t, role, members, rectify([pool.priors[a] for a in members])))
        teams[role] = tuple(built)
    return teams


def _mining_wiring(cfg: ScenarioConfig) -> tuple[tuple[int, int], ...]:
    if cfg.wiring.mining is not None:
        return tuple(sorted(cfg.wiring.mining))
    return tuple(
        (j, i)
        for j in range(cfg.teams.mining.count)
        for i in range(cfg.teams.experimenting.count)
    )


def _labeling_wiring(cfg: ScenarioConfig, mining_pairs: Sequence[tuple[int, int]]) -> tuple[tuple[int, int, int], ...]:
    if cfg.wiring.labeling is not None:
        return tuple(sorted(cfg.wiring.labeling))
    return tuple(
        (l, i, j)
        for l in range(cfg.teams.labeling.count)
        for (j, i) in mining_pairs
    )


def run(cfg: ScenarioConfig, seed: int) -> RunResult:
    """Execute one full translation pass under the configured channel policy."""
    root = np.random.SeedSequence(int(seed))
    ss_gt, ss_pool, ss_teams, ss_exp = root.spawn(4)

    gt = build_ground_truth(cfg.m, cfg.tree_count, cfg.p_stay, np.random.default_rng(ss_gt))
    pool = sample_agent_pool(
        gt, cfg.agents.count, cfg.agents.coverage, cfg.agents.accuracy, np.random.default_rng(ss_pool)
    )
    teams = _form_teams(cfg, pool, np.random.default_rng(ss_teams))
    exp_teams = teams[Role.EXPERIMENTING]
    mine_teams = teams[Role.MINING]
    label_teams = teams[Role.LABELING]

    records = []
    exp_children = ss_exp.spawn(len(exp_teams))
    for team, child in zip(exp_teams, exp_children):
        design_ss, sample_ss = child.spawn(2)
        design = design_experiment(
            team.knowledge,
            cfg.m,
            cfg.experiment.target_width,
            cfg.experiment.selection_prob,
            cfg.experiment.noise_rate,
            cfg.experiment.samples,
            np.random.default_rng(design_ss),
        )
        dataset, datasheet = sample_dataset(
            gt, design, np.random.default_rng(sample_ss), team_id=team.id
        )
        records.append(DatasetRecord(team.id, dataset, datasheet, dataset.sha256()))

    channels = cfg.channels
    miner_peers: dict[int, list] = {j: [] for j in range(len(mine_teams))}
    for consumer, source in cfg.peer_access.mining:
        miner_peers[consumer].append(mine_teams[source].knowledge)
    labeler_peers: dict[int, list] = {l: [] for l in range(len(label_teams))}
    for consumer, source in cfg.peer_access.labeling:
        labeler_peers[consumer].append(mine_teams[source].knowledge)

    mining_pairs = _mining_wiring(cfg)
    infos: dict[tuple[int, int], Information] = {}
    for j, i in mining_pairs:
        delivered = records[i].datasheet if channels.ch1 else None
        infos[(j, i)] = mine(
            records[i].dataset,
            mine_teams[j].knowledge,
            delivered,
            miner_peers[j],
            cfg.mining,
            team_id=j,
        )

    labelings = []
    for l, i, j in _labeling_wiring(cfg, mining_pairs):
        info = infos[(j, i)]
        if channels.ch2:
            info = replace(
                info, info_sheet=replace(info.info_sheet, knowledge_snapshot=mine_teams[j].knowledge)
            )
        exp_datasheet = None
        exp_knowledge = None
        if channels.ch3:
            exp_datasheet = replace(records[i].datasheet, knowledge_snapshot=exp_teams[i].knowledge)
            exp_knowledge = exp_teams[i].knowledge
        prior = build_effective_prior(
            label_teams[l].knowledge,
            mine_teams[j].knowledge if channels.ch2 else None,
            exp_knowledge,
            labeler_peers[l],
        )
        reread = reinterpret(info, prior, exp_datasheet, cfg.labeling)
        labelings.append(label(reread, prior, cfg.labeling, teams=(i, j, l)))

    report = openness(labelings, gt)
    ordered_teams = tuple(t for role in Role for t in teams[role])
    delivered_infos = tuple(
        ((j, i), infos[(j, i)]) for (j, i) in sorted(infos)
    )
    return RunResult(
        config=cfg,
        seed=int(seed),
        ground_truth=gt,
        teams=ordered_teams,
        datasets=tuple(records),
        informations=delivered_infos,
        labelings=tuple(labelings),
        openness=report,
    )


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    scenario: str
    combo_mask: int
    replicate: int
    seed: int
    union_size: int
    true_count: int
    false_count: int
    openness: int
    normalized: float

    def as_csv(self) -> list:
        return [
            self.scenario,
            self.combo_mask,
            self.replicate,
            self.seed,
            self.union_size,
            self.true_count,
            self.false_count,
            self.openness,
            self.normalized,
        ]


SWEEP_CSV_COLUMNS = (
    "scenario",
    "combo_mask",
    "replicate",
    "seed",
    "union_size",
    "true_count",
    "false_count",
    "openness",
    "normalized",
)


@dataclass(frozen=True)
class ComboSummary:
    combo_mask: int
    mean_openness: float
    stddev_openness: float
    mean_normalized: float
    mean_union_size: float

    def to_json(self) -> dict:
        return {
            "combo_mask": self.combo_mask,
            "mean_openness": self.mean_openness,
            "stddev_openness": self.stddev_openness,
            "mean_normalized": self.mean_normalized,
            "mean_union_size": self.mean_union_size,
        }


@dataclass(frozen=True)
class SweepResult:
    scenario: str
    replicates: int
    master_seed: int
    rows: tuple[SweepRow, ...]
    per_combo: tuple[ComboSummary, ...]
    sign_test_all_vs_none: SignTestResult

    def summary_json(self) -> dict:
        return {
            "scenario": self.scenario,
            "replicates": self.replicates,
            "master_seed": self.master_seed,
            "per_combo": [c.to_json() for c in self.per_combo],
            "sign_test_all_vs_none": self.sign_test_all_vs_none.to_json(),
        }


def _run_cell(cfg: ScenarioConfig, mask: int, rep: int, out_dir: Optional[str]) -> SweepRow:
    seed = replicate_seed(cfg.master_seed, rep)
    result = run(cfg.with_channels(ChannelPolicy.from_mask(mask)), seed)
    if out_dir is not None:
        target = Path(out_dir) / f"combo{mask}"
        target.mkdir(parents=True, exist_ok=True)
        (target / f"rep{rep}.json").write_text(result.to_json_text())
    rep_report = result.openness
    return SweepRow(
        scenario=cfg.name,
        combo_mask=mask,
        replicate=rep,
        seed=seed,
        union_size=rep_report.union_size,
        true_count=rep_report.true_count,
        false_count=rep_report.false_count,
        openness=rep_report.openness,
        normalized=rep_report.normalized,
    )


def sweep(
    cfg: ScenarioConfig,
    replicates: int,
    out_dir: Optional[Path | str] = None,
    jobs: int = 1,
) -> SweepResult:
    """All eight channel combinations, paired over ``replicates`` data seeds."""
    if replicates < 1:
        raise ConfigError(f"replicates must be >= 1, got {replicates}")
    if jobs < 1:
        raise ConfigError(f"jobs must be >= 1, got {jobs}")
    out_str = str(out_dir) if out_dir is not None else None
    cells = [(mask, rep) for mask in ALL_CHANNEL_MASKS for rep in range(replicates)]
    if jobs == 1:
        rows = [_run_cell(cfg, mask, rep, out_str) for mask, rep in cells]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(
                pool.map(
                    _run_cell,
                    [cfg] * len(cells),
                    [m for m, _ in cells],
                    [r for _, r in cells],
                    [out_str] * len(cells),
                    chunksize=max(1, len(cells) // (4 * jobs)),
                )
            )
    rows.sort(key=lambda r: (r.combo_mask, r.replicate))

    per_combo = []
    by_mask: dict[int, list[SweepRow]] = {}
    for row in rows:
        by_mask.setdefault(row.combo_mask, []).append(row)
    for mask in ALL_CHANNEL_MASKS:
        vals = [r.openness for r in by_mask.get(mask, [])]
        per_combo.append(
            ComboSummary(
                combo_mask=mask,
                mean_openness=statistics.fmean(vals),
                stddev_openness=statistics.stdev(vals) if len(vals) > 1 else 0.0,
                mean_normalized=statistics.fmean(r.normalized for r in by_mask[mask]),
                mean_union_size=statistics.fmean(r.union_size for r in by_mask[mask]),
            )
        )
    all_on = [r.openness for r in by_mask[7]]
    all_off = [r.openness for r in by_mask[0]]
    return SweepResult(
        scenario=cfg.name,
        replicates=replicates,
        master_seed=cfg.master_seed,
        rows=tuple(rows),
        per_combo=tuple(per_combo),
        sign_test_all_vs_none=paired_sign_test(all_on, all_off),
    )


def write_sweep_outputs(result: SweepResult, out_dir: Path | str) -> tuple[Path, Path]:
    """Emit sweep.csv and summary.json under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "sweep.csv"
    with csv_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_CSV_COLUMNS)
        for row in result.rows:
            writer.writerow(row.as_csv())
    summary_path = out / "summary.json"
    summary_path.write_text(json.dumps(result.summary_json(), indent=2, sort_keys=True) + "\n")
    return csv_path, summary_path


def write_run_outputs(result: RunResult, out_dir: Path | str) -> Path:
    """Write result.json plus dataset CSVs with datasheet sidecars."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result_path = out / "result.json"
    result_path.write_text(result.to_json_text())
    data_dir = out / "datasets"
    for record in result.datasets:
        export_dataset(record.dataset, record.datasheet, data_dir / f"team{record.team_id}.csv")
    return result_path
