"""Loss-adaptive augmentation policy engine.

Each epoch the engine receives one validation loss per strategy, turns the
losses into selection probabilities (normalized losses), turns the
epoch-over-epoch relative loss change into a per-strategy strength factor
through the regularized incomplete beta transform, and realizes seeded
per-sample augmentation plans for whichever variant is configured.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np

from .betainc import BetaParams, reg_inc_beta
from .errors import SpecPolicyError
from .features import N_STRATEGIES, SampleSeed, Strategy
from .kernels import AugmentationPlan, PlanStage, RealizedParams, realize_stage

ALL_STRATEGIES = frozenset(Strategy)


class Variant(Enum):
    """The runnable system configurations, weakest to strongest."""

    NONE = "NONE"
    SPEC_AUGMENT = "SPEC_AUGMENT"
    RANDOM = "RANDOM"
    PROB = "PROB"
    PROB_IBF = "PROB_IBF"
    PROB_IBF_PLUS_SPEC = "PROB_IBF_PLUS_SPEC"
    POLICY = "POLICY"


# variants whose selection needs probabilities from at least one loss report
_NEEDS_STATE = frozenset(
    {Variant.PROB, Variant.PROB_IBF, Variant.PROB_IBF_PLUS_SPEC, Variant.POLICY}
)


@dataclass(frozen=True)
class AugmentConfig:
    """Static strategy parameters plus policy hyper-parameters."""

    t_width: int = 40
    f_width: int = 30
    warp_base: int = 80
    fill: float = 0.0
    n_time_masks: int = 2
    n_freq_masks: int = 2
    default_rho0: float = 0.5
    a: float = 0.6
    b: float = 4.4
    variant: Variant = Variant.POLICY

    def default_params(self) -> RealizedParams:
        return RealizedParams(
            rho0=self.default_rho0,
            n_time_masks=self.n_time_masks,
            n_freq_masks=self.n_freq_masks,
            t_width=self.t_width,
            f_width=self.f_width,
            fill=self.fill,
            warp_base=self.warp_base,
        )


@dataclass(frozen=True)
class LossReport:
    """Per-strategy validation losses for one epoch."""

    epoch: int
    losses: Tuple[float, float, float]


@dataclass(frozen=True)
class PolicyState:
    """The engine's evolving brain: loss history and derived quantities.

    Epoch 0 is the bootstrap state: no report has arrived yet, sampling
    falls back to uniform random single-strategy, and the placeholder
    values (relative=1, lambda=0) are exactly what the first report will
    produce through the zero-previous-loss rule.
    """

    epoch: int = 0
    prev_losses: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    curr_losses: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    probabilities: Tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    relative: Tuple[float, float, float] = (1.0, 1.0, 1.0)
    lam: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    beta: BetaParams = field(default_factory=lambda: BetaParams(0.6, 4.4))
    variant: Variant = Variant.POLICY
    master_seed: int = 0


def fresh_state(config: AugmentConfig, master_seed: int = 0) -> PolicyState:
    return PolicyState(
        beta=BetaParams(config.a, config.b),
        variant=config.variant,
        master_seed=master_seed,
    )


def compute_probabilities(losses: Sequence[float]) -> Tuple[float, ...]:
    """Normalize per-strategy losses into a selection distribution."""
    if any(not (x > 0) for x in losses):
        raise SpecPolicyError("NON_POSITIVE_LOSS", f"losses must be positive, got {losses}")
    total = math.fsum(losses)
    if total <= 0:
        raise SpecPolicyError("ZERO_SUM", "loss sum is not positive")
    return tuple(x / total for x in losses)


def compute_relative_loss(prev: float, curr: float) -> float:
    """Normalized epoch-over-epoch loss change, always in [0, 1].

    A zero previous loss (the bootstrap epoch) lands in the second branch
    and yields exactly 1.
    """
    if not (curr > 0):
        raise SpecPolicyError("NON_POSITIVE_CURRENT", f"current loss must be positive, got {curr}")
    if prev < 0:
        raise SpecPolicyError("DOMAIN", f"previous loss must be non-negative, got {prev}")
    if curr < prev:
        return (prev - curr) / prev
    return (curr - prev) / curr


def compute_lambda(relative: float, beta: BetaParams) -> float:
    """Strength factor: 1 minus the regularized incomplete beta of the relative loss."""
    if not (0.0 <= relative <= 1.0):
        raise SpecPolicyError("DOMAIN", f"relative loss {relative} outside [0, 1]")
    return 1.0 - reg_inc_beta(relative, beta)


def map_parameters(lam: float, base: AugmentConfig) -> RealizedParams:
    """Map a strength factor onto concrete augmentation parameters.

    Warp strength covers [0.2, 0.6] and mask counts {2..6}; mask widths
    stay at their configured values.
    """
    if not (0.0 <= lam <= 1.0):
        raise SpecPolicyError("DOMAIN", f"lambda {lam} outside [0, 1]")
    n_masks = min(int(math.floor(2.0 + 4.0 * lam)), 6)
    return RealizedParams(
        rho0=min(0.2 + 0.4 * lam, 0.6),  # clamp the rounding spill at lam == 1
        n_time_masks=n_masks,
        n_freq_masks=n_masks,
        t_width=base.t_width,
        f_width=base.f_width,
        fill=base.fill,
        warp_base=base.warp_base,
    )


def map_parameters_per_strategy(
    lam: Sequence[float], base: AugmentConfig
) -> RealizedParams:
    """Each strategy takes its own strength: warp from lambda_TW, mask counts
    from lambda_TM / lambda_FM."""
    return RealizedParams(
        rho0=map_parameters(lam[Strategy.TIME_WARP], base).rho0,
        n_time_masks=map_parameters(lam[Strategy.TIME_MASK], base).n_time_masks,
        n_freq_masks=map_parameters(lam[Strategy.FREQ_MASK], base).n_freq_masks,
        t_width=base.t_width,
        f_width=base.f_width,
        fill=base.fill,
        warp_base=base.warp_base,
    )


def _categorical(rng: np.random.Generator, probs: Sequence[float]) -> Strategy:
    u = rng.random()
    acc = 0.0
    for s in Strategy:
        acc += probs[s]
        if u < acc:
            return s
    return Strategy.TIME_MASK


def _policy_select(rng: np.random.Generator, probs: Sequence[float]):
    """Independent on-off draw per strategy; returns (active, used_fallback).

    When every draw comes up off, one strategy is drawn from the same
    distribution so each sample is always augmented at least once.
    """
    active = frozenset(s for s in Strategy if rng.random() < probs[s])
    if active:
        return active, False
    return frozenset({_categorical(rng, probs)}), True


def _select(variant: Variant, state: PolicyState, rng: np.random.Generator) -> frozenset:
    if variant is Variant.NONE:
        return frozenset()
    if variant is Variant.SPEC_AUGMENT:
        return ALL_STRATEGIES
    if variant is Variant.RANDOM:
        return frozenset({Strategy(int(rng.integers(0, N_STRATEGIES)))})
    if variant in _NEEDS_STATE:
        if state.epoch < 1:
            raise SpecPolicyError(
                "STALE_STATE", f"{variant.value} needs a loss report; state is at epoch 0"
            )
        if variant is Variant.POLICY:
            active, _ = _policy_select(rng, state.probabilities)
            return active
        return frozenset({_categorical(rng, state.probabilities)})
    raise SpecPolicyError("DOMAIN", f"unknown variant {variant}")


def select_strategies(variant: Variant, state: PolicyState, seed: SampleSeed) -> frozenset:
    """Which strategies augment this sample, per the configured variant."""
    return _select(variant, state, seed.rng())


def advance_epoch(state: PolicyState, report: LossReport) -> PolicyState:
    """Consume one loss report: shift history, recompute probabilities,
    relative losses and strength factors, bump the epoch."""
    if report.epoch != state.epoch + 1:
        raise SpecPolicyError(
            "EPOCH_MISMATCH",
            f"report epoch {report.epoch}, expected {state.epoch + 1}",
        )
    if len(report.losses) != N_STRATEGIES:
        raise SpecPolicyError("DOMAIN", f"expected {N_STRATEGIES} losses")
    probs = compute_probabilities(report.losses)
    prev = state.curr_losses
    relative = tuple(compute_relative_loss(prev[i], report.losses[i]) for i in range(N_STRATEGIES))
    lam = tuple(compute_lambda(r, state.beta) for r in relative)
    return replace(
        state,
        epoch=report.epoch,
        prev_losses=prev,
        curr_losses=tuple(float(x) for x in report.losses),
        probabilities=probs,
        relative=relative,
        lam=lam,
    )


def make_plan(
    variant: Variant,
    state: PolicyState,
    seed: SampleSeed,
    matrix_shape: Tuple[int, int],
    config: AugmentConfig,
) -> AugmentationPlan:
    """Select strategies and realize every random draw for one sample.

    Deterministic in all inputs: selection and draws consume a single
    generator seeded from the sample seed. Before the first loss report,
    loss-driven variants run as uniform random single-strategy.
    """
    tau, nu = matrix_shape
    if tau < 1 or nu < 1:
        raise SpecPolicyError("EMPTY", f"degenerate shape {matrix_shape}")
    effective = variant
    if state.epoch < 1 and variant in _NEEDS_STATE:
        effective = Variant.RANDOM
    rng = seed.rng()
    stages: list[PlanStage] = []
    if effective is not Variant.NONE:
        active = _select(effective, state, rng)
        if effective in (Variant.PROB_IBF, Variant.PROB_IBF_PLUS_SPEC, Variant.POLICY):
            params = map_parameters_per_strategy(state.lam, config)
        else:
            params = config.default_params()
        stages.append(realize_stage(rng, tau, nu, params, active))
        if effective is Variant.PROB_IBF_PLUS_SPEC:
            # the sampled stage runs first, then a full fixed-strength pass
            stages.append(realize_stage(rng, tau, nu, config.default_params(), ALL_STRATEGIES))
    return AugmentationPlan(
        sample_index=seed.sample_index, seed=seed, tau=tau, nu=nu, stages=tuple(stages)
    )
