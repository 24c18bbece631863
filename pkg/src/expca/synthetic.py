"""Synthetic designed experiments with known generative groups."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import ControlGroup, ExpressionMatrix, GlobalMean, StudyDesign


@dataclass(frozen=True)
class GroupedConfig:
    """Exchangeable variables: each is a shared group signal plus independent noise.

    Group signals come from a few latent factors of decreasing strength
    (``factor_weights``); variable j carries factor f with its own loading,
    so every variable sees the same group pattern. ``snr`` is the ratio of
    the group-effect SD to the replicate noise SD.
    """

    n_groups: int = 5
    replicates: int = 5
    m: int = 2000
    snr: float = 3.0
    factor_weights: tuple = (1.0, 0.5, 0.25)
    baseline_sd: float = 2.0
    seed: int = 0


@dataclass(frozen=True)
class ToxicologyConfig:
    """Six treatments plus a mock control, five replicates each.

    Odd treatments are "toxic" and share a common response signature on
    top of their own effect; even treatments carry only their own, weaker
    effect. ``snr`` is the RMS treatment effect over the noise SD.
    """

    replicates: int = 5
    m: int = 2000
    snr: float = 5.0
    shared_weight: float = 1.0
    own_weight: float = 0.5
    seed: int = 0

    toxic = ("G1", "G3", "G5")
    nontoxic = ("G2", "G4", "G6")
    control = "C"

    @property
    def groups(self) -> tuple:
        return ("G1", "G2", "G3", "G4", "G5", "G6", self.control)


@dataclass
class Synthetic:
    matrix: ExpressionMatrix
    design: StudyDesign
    effects: dict = field(default_factory=dict)   # group -> true effect vector


def _assemble(rng, groups, replicates, effects, noise_sd, baseline, policy) -> Synthetic:
    m = baseline.shape[0]
    obs, rows, assign = [], [], {}
    for g in groups:
        for r in range(replicates):
            oid = f"{g}_r{r + 1}"
            obs.append(oid)
            assign[oid] = g
            rows.append(baseline + effects[g] + rng.normal(0.0, noise_sd, m))
    var_ids = [f"gene{j + 1:05d}" for j in range(m)]
    values = np.vstack(rows)
    matrix = ExpressionMatrix(obs, var_ids, values, np.zeros(values.shape, dtype=bool))
    return Synthetic(matrix, StudyDesign(assign, policy), dict(effects))


def grouped(cfg: GroupedConfig = GroupedConfig()) -> Synthetic:
    rng = np.random.default_rng(cfg.seed)
    baseline = rng.normal(8.0, cfg.baseline_sd, cfg.m)
    groups = [f"g{i + 1}" for i in range(cfg.n_groups)]
    weights = np.asarray(cfg.factor_weights, dtype=float)
    # per-factor group signals, centred and unit-RMS across groups
    signal = rng.normal(0.0, 1.0, (cfg.n_groups, weights.size))
    signal -= signal.mean(axis=0)
    signal /= np.sqrt(np.mean(signal ** 2, axis=0))
    loadings = rng.normal(0.0, 1.0, (weights.size, cfg.m))
    effect = (signal * weights) @ loadings
    effect /= np.sqrt(np.mean(effect ** 2))
    effects = {g: effect[i] for i, g in enumerate(groups)}
    return _assemble(rng, groups, cfg.replicates, effects, 1.0 / cfg.snr, baseline, GlobalMean())


def toxicology(cfg: ToxicologyConfig = ToxicologyConfig()) -> Synthetic:
    rng = np.random.default_rng(cfg.seed)
    baseline = rng.normal(8.0, 2.0, cfg.m)
    shared = rng.normal(0.0, 1.0, cfg.m)
    effects = {}
    for g in cfg.groups:
        if g == cfg.control:
            effects[g] = np.zeros(cfg.m)
        elif g in cfg.toxic:
            effects[g] = cfg.shared_weight * shared + cfg.own_weight * rng.normal(0.0, 1.0, cfg.m)
        else:
            effects[g] = cfg.own_weight * rng.normal(0.0, 1.0, cfg.m)
    treated = np.concatenate([effects[g] for g in cfg.groups if g != cfg.control])
    noise_sd = float(np.sqrt(np.mean(treated ** 2))) / cfg.snr
    return _assemble(rng, cfg.groups, cfg.replicates, effects, noise_sd, baseline,
                     ControlGroup(cfg.control))
