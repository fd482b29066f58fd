"""Training loop plumbing: run batches from a sampler through the embedder
and the contrastive loss, log one CSV row per step."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

from .embedder import EmbedderParams, init_params
from .ge2e import Ge2eParams, train_step

logger = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    steps: int = 200
    learning_rate: float = 0.1
    seed: int = 0
    dim_d: int = 40
    dim_h: int = 64
    dim_e: int = 64


@dataclass
class TrainResult:
    params: EmbedderParams
    g: Ge2eParams
    losses: list[float]


def run_training(
    sampler,
    features,
    cfg: TrainConfig,
    params: EmbedderParams | None = None,
    g: Ge2eParams | None = None,
    log_path: str | Path | None = None,
    log_every: int = 1,
) -> TrainResult:
    """Run ``cfg.steps`` gradient steps; returns the trained parameters and
    the per-step losses. ``features`` maps an utterance id to its (T, D)
    feature matrix. The CSV log columns are step,loss,source,w,b."""
    params = params if params is not None else init_params(cfg.seed, cfg.dim_d, cfg.dim_h, cfg.dim_e)
    g = g if g is not None else Ge2eParams()
    losses: list[float] = []

    log_fh = None
    writer = None
    if log_path is not None:
        log_fh = open(log_path, "w", newline="", encoding="utf-8")
        writer = csv.writer(log_fh)
        writer.writerow(["step", "loss", "source", "w", "b"])
    try:
        for step in range(cfg.steps):
            batch = sampler.sample().with_features(features)
            loss = train_step(params, g, batch, cfg.learning_rate)
            losses.append(loss)
            if writer is not None and step % log_every == 0:
                writer.writerow([step, repr(loss), batch.source, repr(g.w), repr(g.b)])
            if step and step % 100 == 0:
                logger.debug("step %d: loss %.4f (w=%.3f)", step, loss, g.w)
    finally:
        if log_fh is not None:
            log_fh.close()
    return TrainResult(params=params, g=g, losses=losses)
