"""Metrics and the comparison sweep.

Success rate, MPC stage cost, expert gap, demonstration efficiency and the
covariate-shift decomposition, plus :func:`run_comparison` which drives
every ``method x seed`` cell through collection, training and evaluation
in source and target domains.
"""

import concurrent.futures as _futures
import logging
import math as _math
import time as _time
from dataclasses import dataclass as _dataclass
from dataclasses import field as _field
from pathlib import Path as _Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as _np

from ..jobs import CellStore
from .errors import ExpertInfeasibleError, InvalidParameterError
from .il import IlConfig, TaskSpec, derive_seed, run_il
from .linmodel import CostWeights
from .quadsim import Episode, rollout

logger = logging.getLogger(__name__)

__all__ = [
    "DOMAINS",
    "NEAR_ZERO_ACTION",
    "GapStats",
    "ShiftGap",
    "LatencyStats",
    "ExperimentResult",
    "ComparisonTable",
    "domain_label",
    "stage_cost",
    "success_rate",
    "confidence_interval",
    "expert_gap",
    "covariate_shift_gap",
    "evaluate_controller",
    "evaluate_policy",
    "measure_latency",
    "run_comparison",
]

DOMAINS = ("source", "target")
NEAR_ZERO_ACTION = 1e-9
_Z95 = 1.959963984540054


def domain_label(task: TaskSpec, domain: str) -> str:
    """``source`` or ``target_<task>``."""
    if domain not in DOMAINS:
        raise InvalidParameterError(f"Unknown domain '{domain}'. Valid: {DOMAINS}")
    return "source" if domain == "source" else f"target_{task.name}"


# ---------------------------------------------------------------------------
# Per-episode metrics
# ---------------------------------------------------------------------------


def stage_cost(episode: Episode, weights: Union[CostWeights, Tuple]) -> float:
    """Sum of ``e' Q e + du' R du`` over the episode.

    ``e`` is the state minus the step-0 target of each window (missing
    target coordinates are zero), ``du`` the action minus the trim input.
    ``weights`` is a :class:`CostWeights` or a ``(Q, R)`` pair.
    """
    if isinstance(weights, CostWeights):
        Q, R = weights.Q, weights.R
    else:
        Q, R = (_np.atleast_2d(_np.asarray(w, dtype=float)) for w in weights)
    total = 0.0
    for t in range(episode.n_steps):
        e = _np.array(episode.states[t], dtype=float)
        ref = _np.asarray(episode.references[t], dtype=float)
        e[: ref.shape[0]] -= ref
        du = _np.asarray(episode.actions[t], dtype=float) - episode.u_trim
        total += float(e @ Q @ e + du @ R @ du)
    return total


def success_rate(episodes: Sequence[Episode]) -> float:
    """Fraction of episodes without a constraint violation."""
    if not episodes:
        raise InvalidParameterError("success_rate needs at least one episode")
    return sum(1 for ep in episodes if not ep.violated) / len(episodes)


def confidence_interval(rates: Sequence[float]) -> Tuple[float, float]:
    """95% normal-approximation interval of the mean, clipped to [0, 1]."""
    rates = _np.asarray(rates, dtype=float)
    mean = float(rates.mean())
    if rates.size < 2:
        return mean, mean
    half = _Z95 * float(rates.std(ddof=1)) / _math.sqrt(rates.size)
    return max(0.0, mean - half), min(1.0, mean + half)


# ---------------------------------------------------------------------------
# Expert-relative metrics
# ---------------------------------------------------------------------------


@_dataclass
class GapStats:
    """Expert gap in percent with step accounting."""

    percent: float
    steps: int
    skipped: int

    def to_dict(self) -> dict:
        return {"percent": self.percent, "steps": self.steps, "skipped": self.skipped}


@_dataclass
class ShiftGap:
    """Imitation losses on source and target trajectories.

    ``j_target == gap + j_source`` holds by construction.
    """

    j_source: float
    j_target: float
    gap: float

    @property
    def residual(self) -> float:
        return abs(self.j_target - (self.gap + self.j_source))

    def to_dict(self) -> dict:
        return {"j_source": self.j_source, "j_target": self.j_target, "gap": self.gap}


def _paired_actions(policy, expert, episodes: Sequence[Episode]):
    """Policy and expert actions on every visited state.

    Steps where the expert has no solution are skipped and counted.
    """
    pairs, infeasible = [], 0
    for ep in episodes:
        if hasattr(expert, "reset"):
            expert.reset()
        for t in range(ep.n_steps):
            state, window = ep.states[t], ep.windows[t]
            try:
                u_expert = _np.asarray(expert(state, window), dtype=float)
            except ExpertInfeasibleError:
                infeasible += 1
                continue
            pairs.append((_np.asarray(policy(state, window), dtype=float), u_expert))
    return pairs, infeasible


def expert_gap(policy, expert, episodes: Sequence[Episode]) -> GapStats:
    """Mean per-step relative action error in percent.

    Averages ``|pi(x) - pi*(x)| / |pi*(x)|`` over every step of
    ``episodes``, which should be rollouts of the policy itself. Steps with
    an expert action norm below 1e-9 or without expert solution are skipped.

    Raises:
        InvalidParameterError: no episodes or no usable step
    """
    if not episodes:
        raise InvalidParameterError("expert_gap needs at least one episode")
    pairs, skipped = _paired_actions(policy, expert, episodes)
    ratios = []
    for u_policy, u_expert in pairs:
        norm = float(_np.linalg.norm(u_expert))
        if norm < NEAR_ZERO_ACTION:
            skipped += 1
            continue
        ratios.append(float(_np.linalg.norm(u_policy - u_expert)) / norm)
    if skipped:
        logger.warning("Expert gap skipped %d steps", skipped)
    if not ratios:
        raise InvalidParameterError("No step with a usable expert action")
    return GapStats(percent=100.0 * float(_np.mean(ratios)), steps=len(ratios), skipped=skipped)


def _imitation_loss(policy, expert, episodes: Sequence[Episode]) -> float:
    pairs, _ = _paired_actions(policy, expert, episodes)
    if not pairs:
        raise InvalidParameterError("No step with an expert action")
    return float(_np.mean([_np.sum((up - ue) ** 2) for up, ue in pairs]))


def covariate_shift_gap(
    policy,
    expert,
    source_episodes: Sequence[Episode],
    target_episodes: Sequence[Episode],
) -> ShiftGap:
    """Split the target imitation loss into source loss plus transfer gap.

    The loss is the mean squared action error against the expert on the
    trajectories each episode set visited.
    """
    if not source_episodes or not target_episodes:
        raise InvalidParameterError("Both episode sets must be nonempty")
    j_source = _imitation_loss(policy, expert, source_episodes)
    j_target = _imitation_loss(policy, expert, target_episodes)
    return ShiftGap(j_source=j_source, j_target=j_target, gap=j_target - j_source)


@_dataclass
class LatencyStats:
    """Median wall time per call (ms) of policy and expert."""

    policy_median_ms: float
    expert_median_ms: float
    n_calls: int

    @property
    def ratio(self) -> float:
        return self.expert_median_ms / max(self.policy_median_ms, 1e-12)

    def to_dict(self) -> dict:
        return {
            "policy_median_ms": self.policy_median_ms,
            "expert_median_ms": self.expert_median_ms,
            "ratio": self.ratio,
            "n_calls": self.n_calls,
        }


def measure_latency(policy, expert, samples: Sequence[tuple], n_calls: int = 1000) -> LatencyStats:
    """Time ``n_calls`` paired calls cycling over ``(state, window)`` samples."""
    if not samples or n_calls < 1:
        raise InvalidParameterError("measure_latency needs samples and n_calls >= 1")
    policy_ms, expert_ms = [], []
    for i in range(n_calls):
        state, window = samples[i % len(samples)]
        t0 = _time.perf_counter()
        policy(state, window)
        t1 = _time.perf_counter()
        try:
            expert(state, window)
        except ExpertInfeasibleError:
            continue
        t2 = _time.perf_counter()
        policy_ms.append(1e3 * (t1 - t0))
        expert_ms.append(1e3 * (t2 - t1))
    if not expert_ms:
        raise InvalidParameterError("Expert was infeasible on every sample")
    return LatencyStats(float(_np.median(policy_ms)), float(_np.median(expert_ms)), len(expert_ms))


# ---------------------------------------------------------------------------
# Evaluation rollouts
# ---------------------------------------------------------------------------


def evaluate_controller(
    controller,
    task: TaskSpec,
    domain: str,
    n_episodes: int,
    seed: int,
    weights: Optional[CostWeights] = None,
) -> List[Episode]:
    """Roll ``controller`` out ``n_episodes`` times in ``domain``.

    Episode ``e`` uses the same reference, start state and disturbance
    stream for every controller evaluated with the same ``seed``.
    """
    if n_episodes < 1:
        raise InvalidParameterError(f"n_episodes must be >= 1, got {n_episodes}")
    if domain not in DOMAINS:
        raise InvalidParameterError(f"Unknown domain '{domain}'. Valid: {DOMAINS}")
    weights = weights or CostWeights.from_diagonals(task.q_diag, task.r_diag)
    episodes = []
    for e in range(n_episodes):
        rng = _np.random.default_rng(derive_seed(seed, 6, e))
        reference = task.reference(rng)
        x0 = task.initial_state(reference, rng)
        episodes.append(
            rollout(
                controller,
                reference,
                task.disturbance(domain, seed=derive_seed(seed, 7, e)),
                task.params,
                seed=derive_seed(seed, 8, e),
                weights=weights,
                horizon=task.horizon,
                initial_state=x0,
            )
        )
    return episodes


def evaluate_policy(
    controller,
    task: TaskSpec,
    domains: Sequence[str] = DOMAINS,
    n_episodes: int = 10,
    seed: int = 0,
    expert=None,
    method: str = "policy",
) -> Tuple[Dict[str, dict], Dict[str, List[Episode]]]:
    """Success rate, stage cost and (with ``expert``) gap per domain.

    Returns:
        (metrics keyed by domain label, episodes keyed by domain label)
    """
    weights = CostWeights.from_diagonals(task.q_diag, task.r_diag)
    metrics, all_episodes = {}, {}
    for domain in domains:
        label = domain_label(task, domain)
        episodes = evaluate_controller(controller, task, domain, n_episodes, seed, weights)
        entry = {
            "method": method,
            "domain": label,
            "episodes": n_episodes,
            "seed": seed,
            "success_rate": success_rate(episodes),
            "mean_stage_cost": float(_np.mean([stage_cost(ep, weights) for ep in episodes])),
            "mean_steps": float(_np.mean([ep.n_steps for ep in episodes])),
            "failures": [ep.failure_reason for ep in episodes if ep.violated],
        }
        if expert is not None and expert is not controller:
            try:
                entry["expert_gap"] = expert_gap(controller, expert, episodes).percent
            except InvalidParameterError as e:
                logger.warning("No expert gap for %s in %s: %s", method, label, e)
                entry["expert_gap"] = None
        metrics[label] = entry
        all_episodes[label] = episodes
        logger.info("%s in %s: success %.2f", method, label, entry["success_rate"])
    return metrics, all_episodes


# ---------------------------------------------------------------------------
# Comparison sweep
# ---------------------------------------------------------------------------


@_dataclass
class ExperimentResult:
    """Aggregated outcome of one method in one domain.

    ``success_rate[i]`` is the mean success over seeds and evaluation
    episodes after ``demo_counts[i]`` demonstrations.
    """

    method: str
    domain: str
    demo_counts: List[int]
    success_rate: List[float]
    success_ci: List[Tuple[float, float]]
    mean_stage_cost: List[float]
    expert_gap: Optional[float]
    seeds: List[int]
    collection_violations: int = 0
    failed_seeds: Dict[int, str] = _field(default_factory=dict)

    @property
    def demonstrations_to_full_success(self) -> Optional[int]:
        for count, rate in zip(self.demo_counts, self.success_rate):
            if rate >= 1.0:
                return count
        return None

    @property
    def status(self) -> str:
        if not self.failed_seeds:
            return "ok"
        return "failed" if len(self.failed_seeds) >= len(self.seeds) else "partial"

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "domain": self.domain,
            "demo_counts": list(self.demo_counts),
            "success_rate": list(self.success_rate),
            "success_ci": [list(ci) for ci in self.success_ci],
            "mean_stage_cost": list(self.mean_stage_cost),
            "expert_gap": self.expert_gap,
            "demonstrations_to_full_success": self.demonstrations_to_full_success,
            "seeds": list(self.seeds),
            "collection_violations": self.collection_violations,
            "failed_seeds": {str(k): v for k, v in self.failed_seeds.items()},
            "status": self.status,
        }


@_dataclass
class ComparisonTable:
    """All results of one sweep plus its provenance."""

    task: str
    results: List[ExperimentResult]
    config_hash: str = ""
    version: str = ""

    def rows(self) -> List[dict]:
        """Long format, one row per method x demo count x domain."""
        out = []
        for res in self.results:
            for i, count in enumerate(res.demo_counts):
                lo, hi = res.success_ci[i]
                out.append(
                    {
                        "task": self.task,
                        "method": res.method,
                        "domain": res.domain,
                        "demos": count,
                        "success_rate": res.success_rate[i],
                        "ci_low": lo,
                        "ci_high": hi,
                        "mean_stage_cost": res.mean_stage_cost[i],
                        "status": res.status,
                        "seeds": ";".join(str(s) for s in res.seeds),
                        "config_hash": self.config_hash,
                        "version": self.version,
                    }
                )
        return out

    def summary(self) -> dict:
        """Per method: final success, expert gap and demonstration efficiency per domain."""
        methods: Dict[str, dict] = {}
        for res in self.results:
            entry = methods.setdefault(
                res.method,
                {"method": res.method, "collection_violations": res.collection_violations, "status": res.status},
            )
            entry[res.domain] = {
                "success_rate": res.success_rate[-1] if res.success_rate else None,
                "expert_gap": res.expert_gap,
                "demonstrations_to_full_success": res.demonstrations_to_full_success,
            }
        return {
            "task": self.task,
            "config_hash": self.config_hash,
            "version": self.version,
            "methods": list(methods.values()),
            "results": [r.to_dict() for r in self.results],
        }


def cell_key(method: str, seed: int) -> str:
    return f"{method}@{seed}"


def run_cell(
    config: IlConfig,
    task: TaskSpec,
    n_demos: int,
    eval_episodes: int,
    domains: Sequence[str] = DOMAINS,
    tube=None,
    lqr=None,
) -> dict:
    """Train one method for one seed and evaluate every demo count.

    Returns a JSON-ready record: per demo count and domain the success
    rate and mean stage cost, plus the expert gap of the final policy.
    """
    expert = task.build_expert(tube=tube, lqr=lqr)
    run = run_il(config, n_demos, task, expert=expert)
    weights = CostWeights.from_diagonals(task.q_diag, task.r_diag)
    eval_seed = derive_seed(config.seed, 9)
    points = []
    final_episodes: Dict[str, List[Episode]] = {}
    for k, policy in enumerate(run.policies, start=1):
        for domain in domains:
            label = domain_label(task, domain)
            if policy is None:
                points.append({"demos": k, "domain": label, "success_rate": 0.0, "stage_costs": []})
                continue
            episodes = evaluate_controller(policy, task, domain, eval_episodes, eval_seed, weights)
            points.append(
                {
                    "demos": k,
                    "domain": label,
                    "success_rate": success_rate(episodes),
                    "stage_costs": [stage_cost(ep, weights) for ep in episodes],
                }
            )
            if k == n_demos:
                final_episodes[label] = episodes
    gaps = {}
    for label, episodes in final_episodes.items():
        try:
            gaps[label] = expert_gap(run.final_policy, expert, episodes).percent
        except InvalidParameterError as e:
            logger.warning("No expert gap for %s in %s: %s", config.name, label, e)
    logger.info("Cell %s finished", cell_key(config.name, config.seed))
    return {
        "method": config.name,
        "seed": config.seed,
        "points": points,
        "expert_gap": gaps,
        "collection_violations": run.collection_violations,
    }


def _cell_task(args: tuple) -> dict:
    return run_cell(*args)


def aggregate(
    method: str,
    records: Sequence[dict],
    seeds: Sequence[int],
    failures: Dict[int, str],
    task: TaskSpec,
    n_demos: int,
    domains: Sequence[str] = DOMAINS,
) -> List[ExperimentResult]:
    """Combine per-seed cell records into one result per domain.

    Records are sorted by seed, so the outcome does not depend on the
    order cells finished in.
    """
    records = sorted(records, key=lambda r: r["seed"])
    results = []
    for domain in domains:
        label = domain_label(task, domain)
        counts, rates, cis, costs = [], [], [], []
        for k in range(1, n_demos + 1):
            per_seed, pooled_costs = [], []
            for rec in records:
                for p in rec["points"]:
                    if p["demos"] == k and p["domain"] == label:
                        per_seed.append(p["success_rate"])
                        pooled_costs.extend(p["stage_costs"])
            if not per_seed:
                continue
            counts.append(k)
            rates.append(float(_np.mean(per_seed)))
            cis.append(confidence_interval(per_seed))
            costs.append(float(_np.mean(pooled_costs)) if pooled_costs else float("nan"))
        gaps = [rec["expert_gap"][label] for rec in records if label in rec["expert_gap"]]
        results.append(
            ExperimentResult(
                method=method,
                domain=label,
                demo_counts=counts,
                success_rate=rates,
                success_ci=cis,
                mean_stage_cost=costs,
                expert_gap=float(_np.mean(gaps)) if gaps else None,
                seeds=list(seeds),
                collection_violations=int(sum(rec["collection_violations"] for rec in records)),
                failed_seeds=dict(failures),
            )
        )
    return results


def run_comparison(
    task: TaskSpec,
    methods: Sequence[IlConfig],
    n_demos_max: int,
    n_seeds: int,
    eval_episodes: int,
    domains: Sequence[str] = DOMAINS,
    workers: int = 1,
    master_seed: int = 0,
    tube=None,
    lqr=None,
    job_dir: Optional[Union[str, _Path]] = None,
    config_hash: str = "",
    version: str = "",
    on_cell: Optional[Callable[[str, Optional[str]], None]] = None,
) -> ComparisonTable:
    """Evaluate every ``method x seed`` cell and aggregate per domain.

    Seeds are ``master_seed, master_seed + 1, ...``. A failing cell is
    recorded and never stops the sweep. With ``job_dir`` each finished
    cell is persisted and a rerun skips it.

    Args:
        task: Environment and reference setup
        methods: Learning configurations (their seeds are overridden)
        n_demos_max: Demonstrations per cell (>= 1)
        n_seeds: Seeds per method (>= 1)
        eval_episodes: Evaluation episodes per demo count and domain
        domains: Subset of ``("source", "target")``
        workers: Process pool size (1 runs in-process)
        tube, lqr: Precomputed expert artifacts shared by all cells
        job_dir: Directory for resumable cell records
        on_cell: Callback ``(cell_key, error_or_None)`` per finished cell

    Returns:
        ComparisonTable
    """
    if not methods:
        raise InvalidParameterError("run_comparison needs at least one method")
    if n_demos_max < 1:
        raise InvalidParameterError(f"n_demos_max must be >= 1, got {n_demos_max}")
    if n_seeds < 1 or eval_episodes < 1:
        raise InvalidParameterError("n_seeds and eval_episodes must be >= 1")
    if tube is None or lqr is None:
        expert = task.build_expert(tube=tube, lqr=lqr)
        tube, lqr = expert.tube, expert.lqr

    seeds = [master_seed + i for i in range(n_seeds)]
    cells = {
        cell_key(m.name, s): (m.with_seed(s), task, n_demos_max, eval_episodes, tuple(domains), tube, lqr)
        for m in methods
        for s in seeds
    }
    store = CellStore(job_dir, list(cells), config_hash=config_hash) if job_dir else None
    records: Dict[str, dict] = {}
    failures: Dict[str, str] = {}
    pending = list(cells)
    if store is not None:
        records.update(store.records())
        failures.update(store.job.failed)
        pending = store.job.pending

    def _finish(key: str, record: Optional[dict], error: Optional[str]) -> None:
        if error is None:
            records[key] = record
        else:
            failures[key] = error
            logger.warning("Cell %s failed: %s", key, error)
        if store is not None:
            store.record(key, record, error)
        if on_cell is not None:
            on_cell(key, error)

    if workers > 1 and len(pending) > 1:
        with _futures.ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_cell_task, cells[key]): key for key in pending}
            for fut in _futures.as_completed(futures):
                key = futures[fut]
                try:
                    _finish(key, fut.result(), None)
                except Exception as e:
                    _finish(key, None, f"{type(e).__name__}: {e}")
    else:
        for key in pending:
            try:
                _finish(key, _cell_task(cells[key]), None)
            except Exception as e:
                _finish(key, None, f"{type(e).__name__}: {e}")
    if store is not None:
        store.close()

    results = []
    for m in methods:
        keys = {s: cell_key(m.name, s) for s in seeds}
        method_records = [records[k] for k in keys.values() if k in records]
        method_failures = {s: failures[k] for s, k in keys.items() if k in failures}
        results.extend(aggregate(m.name, method_records, seeds, method_failures, task, n_demos_max, domains))
    return ComparisonTable(task=task.name, results=results, config_hash=config_hash, version=version)


# EOF
