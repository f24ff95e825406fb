"""The Bayesian-optimization outer loop and multi-seed experiment orchestration."""

import dataclasses
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from esp_optimizer.database.connection import DatabaseConnection
from esp_optimizer.harness.experiment import ExperimentConfig, Method
from esp_optimizer.harness.store import save_trace
from esp_optimizer.harness.traces import Trace, write_trace
from esp_optimizer.models.gp import History, Hyperparams, PosteriorState, fit_posterior, predict_batch
from esp_optimizer.models.hyper import WarmChain
from esp_optimizer.space import Box
from esp_optimizer.strategies.acquisition import Candidate, Expert, propose
from esp_optimizer.strategies.optimizer import OptimizerSettings, minimize_box
from esp_optimizer.strategies.portfolio import (
    HedgeState,
    SelectionLog,
    esp_select,
    hedge_rewards,
    hedge_select,
    hedge_update,
    random_portfolio_select,
)
from esp_optimizer.testbed.functions import Objective, get_objective, noisy
from esp_optimizer.utils.logger import get_logger
from esp_optimizer.utils.seeding import SeedStreams
from esp_optimizer.utils.workers import capped, worker_limit

logger = get_logger(__name__)


def recommend(
    history: History,
    hps: Sequence[Hyperparams],
    bounds: Box,
    rng: Optional[np.random.Generator] = None,
    settings: Optional[OptimizerSettings] = None,
    states: Optional[Sequence[PosteriorState]] = None,
) -> np.ndarray:
    """
    Minimizer over the box of the hyperparameter-averaged posterior mean.

    Args:
        history: Observation set with at least one point
        hps: Hyperparameter samples
        bounds: Search box
        rng: Random source for the inner optimizer
        settings: Inner optimizer settings
        states: Posteriors already fitted for hps

    Returns:
        Recommended point inside the box
    """
    if len(history) == 0:
        raise ValueError("Cannot recommend without observations")
    if len(hps) == 0:
        raise ValueError("Cannot recommend without hyperparameter samples")
    if states is None:
        states = [fit_posterior(history, hp) for hp in hps]
    rng = rng if rng is not None else np.random.default_rng(0)

    def averaged_mean(x: np.ndarray) -> np.ndarray:
        return np.mean([predict_batch(state, x)[0] for state in states], axis=0)

    point, _ = minimize_box(averaged_mean, bounds, rng, settings)
    return point


class _Loop:
    """Mutable state of one run: history, chain, Hedge gains and pending candidates."""

    def __init__(self, cfg: ExperimentConfig, bounds: Box, streams: SeedStreams):
        self.cfg = cfg
        self.bounds = bounds
        self.streams = streams
        self.experts: List[Expert] = cfg.experts()
        self.history = History.empty(bounds)
        self.chain = WarmChain(cfg.chain)
        self.hedge = HedgeState.initial(len(self.experts), cfg.eta) if cfg.method is Method.HEDGE else None
        self.pending: Optional[List[Candidate]] = None
        self.selections = SelectionLog([e.name for e in self.experts])
        self.needs_model = cfg.method is Method.HEDGE or any(e.needs_model for e in self.experts)

    def hyperparameters(self, t: int) -> Tuple[List[Hyperparams], List[PosteriorState]]:
        if not self.needs_model:
            return [], []
        chain = self.chain.refresh(self.history, self.bounds, self.streams.generator("mcmc", t))
        states = [fit_posterior(self.history, hp) for hp in chain.samples]
        return chain.samples, states

    def select(self, t: int) -> Tuple[np.ndarray, int]:
        cfg = self.cfg
        hps, states = self.hyperparameters(t)

        if self.hedge is not None and self.pending is not None:
            rewards = hedge_rewards(self.pending, self.history, hps, states)
            self.hedge = hedge_update(self.hedge, rewards)

        candidates = [
            propose(
                expert,
                self.history,
                hps,
                self.bounds,
                self.streams.generator("strategy", t, k),
                cfg.m_features,
                cfg.optimizer,
                states,
            )
            for k, expert in enumerate(self.experts)
        ]

        if not cfg.method.is_portfolio:
            index = 0
        elif cfg.method is Method.ESP:
            index = esp_select(
                candidates,
                self.history,
                hps,
                cfg.esp,
                self.streams.generator("esp", t),
                states=states,
                optimizer_settings=cfg.optimizer,
            )
        elif cfg.method is Method.HEDGE:
            index = hedge_select(self.hedge, self.streams.generator("select", t))
            self.pending = candidates
        else:
            index = random_portfolio_select(len(candidates), self.streams.generator("select", t))

        self.selections.record(index)
        logger.debug(f"t={t}: selected {candidates[index].source} at {np.round(candidates[index].point, 4)}")
        return candidates[index].point, index


def run_bo(cfg: ExperimentConfig, seed: int, objective: Optional[Objective] = None) -> Trace:
    """
    Run one Bayesian-optimization experiment.

    The first n_init queries are uniform random; every later query refreshes
    the hyperparameter chain, collects one candidate per expert and lets the
    meta-policy choose. Any failure while selecting, evaluating or
    recommending stops the run and marks the trace incomplete; the queries
    made so far are kept.

    Args:
        cfg: Experiment configuration
        seed: Master seed
        objective: Resolved objective (looked up from cfg when None)

    Returns:
        Trace with one record per query and the final recommendation
    """
    objective = objective or get_objective(cfg.objective)
    bounds = objective.bounds
    streams = SeedStreams(seed)
    black_box = noisy(objective, cfg.noise_sd_for(objective), streams.generator("noise"))
    init_rng = streams.generator("init")

    loop = _Loop(cfg, bounds, streams)
    trace = Trace(cfg.label, objective.name, seed, bounds.dim, true_min=objective.true_min)
    logger.info(f"Starting {cfg.label} on {objective.name}, seed {seed}, horizon {cfg.horizon}")

    for t in range(1, cfg.horizon + 1):
        started = time.perf_counter()
        try:
            if t <= cfg.n_init:
                x, expert, name = bounds.sample(init_rng), -1, "init"
            else:
                x, expert = loop.select(t)
                name = loop.experts[expert].name
        except Exception:
            logger.exception(f"Selection failed at t={t}, seed {seed}; trace marked incomplete")
            trace.complete = False
            break

        try:
            y, f = black_box.query(x)
        except Exception:
            logger.exception(f"Objective failed at t={t}, seed {seed}; trace marked incomplete")
            trace.complete = False
            break

        loop.history = loop.history.augment(x, y)
        record = trace.append(x, y, f, expert, name, time.perf_counter() - started)
        logger.debug(f"t={t}: y={y:.6g} best_true={record.best_true_value:.6g}")

    if trace.complete:
        try:
            hps, states = _final_hyperparameters(loop, cfg)
            trace.recommendation = recommend(
                loop.history, hps, bounds, streams.generator("recommend"), cfg.optimizer, states
            )
            trace.recommendation_value = objective(trace.recommendation)
        except Exception:
            logger.exception(f"Recommendation failed for seed {seed}; trace marked incomplete")
            trace.complete = False
            trace.recommendation = trace.recommendation_value = None

    final = trace.records[-1] if trace.records else None
    frequencies = ", ".join(
        f"{n}={p:.2f}" for n, p in zip(loop.selections.names, loop.selections.frequencies())
    )
    logger.info(
        f"Finished {cfg.label} seed {seed}: {len(trace)} queries, "
        f"best true value {final.best_true_value if final else float('nan'):.6g}, "
        f"recommendation value {trace.recommendation_value}, selections [{frequencies}]"
    )
    return trace


def _final_hyperparameters(loop: _Loop, cfg: ExperimentConfig) -> Tuple[List[Hyperparams], List[PosteriorState]]:
    chain = loop.chain.refresh(loop.history, loop.bounds, loop.streams.generator("mcmc", cfg.horizon + 1))
    return chain.samples, [fit_posterior(loop.history, hp) for hp in chain.samples]


def run_experiment(
    cfg: ExperimentConfig,
    out_dir: Optional[Union[str, Path]] = None,
    database_url: Optional[str] = None,
    max_workers: Optional[int] = None,
    objective: Optional[Objective] = None,
) -> List[Trace]:
    """
    Run every seed of an experiment, write the traces and optionally store them.

    Each trace is written as soon as its seed finishes. A seed that fails is
    kept as an incomplete trace and the other seeds still run.

    Args:
        cfg: Experiment configuration
        out_dir: Directory for trace CSV files (nothing written when None)
        database_url: Results store URL (nothing stored when None)
        max_workers: Concurrent seeds, at most ESP_OPT_THREADS (the default); ESP threads
            per seed are reduced so the total stays within ESP_OPT_THREADS
        objective: Resolved objective (looked up from cfg when None)

    Returns:
        Traces in seed order
    """
    objective = objective or get_objective(cfg.objective)
    limit = worker_limit()
    workers = min(capped(max_workers or limit, limit), len(cfg.seeds))
    # Seed threads and ESP threads share the cap
    esp_workers = capped(cfg.esp.max_workers, max(1, limit // workers))
    if esp_workers != cfg.esp.max_workers:
        cfg = dataclasses.replace(cfg, esp=dataclasses.replace(cfg.esp, max_workers=esp_workers))
    logger.info(
        f"Running {cfg.label} on {objective.name} for seeds {list(cfg.seeds)} "
        f"with {workers} seed worker(s) and {esp_workers} ESP worker(s) each"
    )

    def run_seed(seed: int) -> Trace:
        try:
            trace = run_bo(cfg, seed, objective)
        except Exception:
            logger.exception(f"Run {cfg.label} seed {seed} failed before its first query")
            trace = Trace(cfg.label, objective.name, seed, objective.dim, true_min=objective.true_min, complete=False)
        if out_dir is not None:
            write_trace(trace, out_dir, cfg.record_wall_time)
        return trace

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            traces = list(pool.map(run_seed, cfg.seeds))
    else:
        traces = [run_seed(seed) for seed in cfg.seeds]

    if database_url is not None:
        with DatabaseConnection(database_url) as db:
            with db.session_scope() as session:
                for trace in traces:
                    save_trace(session, trace, cfg, cfg.noise_sd_for(objective))
    return traces
