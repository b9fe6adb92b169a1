"""Augmentation kernels: time masking, frequency masking, time warping.

All kernels are pure: they take a feature matrix plus fully realized draw
parameters and return a new matrix of the same shape. Randomness lives in
realize_stage / realize_draws only, driven by a seeded generator, so the
whole pipeline is a deterministic function of (seed, input, params).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import SpecPolicyError
from .features import SampleSeed, Strategy, validate_matrix


@dataclass(frozen=True)
class MaskDraw:
    """One realized mask: [start, start + width) along an axis."""

    start: int
    width: int


@dataclass(frozen=True)
class WarpDraw:
    """One realized time warp: frame `center` moves `distance` frames."""

    center: int
    distance: int
    direction: str  # "left" | "right"
    budget: int


@dataclass(frozen=True)
class RealizedParams:
    """Concrete strategy parameters for one plan.

    rho0 is the warp strength in [0.2, 0.6]; the realized warp budget is
    round(rho0 * warp_base) frames, clamped for feasibility.
    """

    rho0: float
    n_time_masks: int
    n_freq_masks: int
    t_width: int
    f_width: int
    fill: float
    warp_base: int = 80


@dataclass(frozen=True)
class PlanStage:
    """One group of strategies applied with a shared parameter set."""

    active: frozenset
    params: RealizedParams
    warp: Optional[WarpDraw]
    freq_draws: tuple
    time_draws: tuple


@dataclass(frozen=True)
class AugmentationPlan:
    """Fully realized augmentation for one sample, ready to apply."""

    sample_index: int
    seed: SampleSeed
    tau: int
    nu: int
    stages: tuple

    @property
    def active(self) -> frozenset:
        out = frozenset()
        for stage in self.stages:
            out = out | stage.active
        return out


def time_mask(m: np.ndarray, draws: Sequence[MaskDraw], fill: float) -> np.ndarray:
    """Fill whole frames [start, start+width) with a constant, per draw."""
    m = validate_matrix(m)
    tau = m.shape[0]
    out = m.copy()
    for d in draws:
        if d.start < 0 or d.width < 0 or d.start + d.width > tau:
            raise SpecPolicyError("OUT_OF_RANGE", f"time mask {d} exceeds tau={tau}")
        out[d.start : d.start + d.width, :] = fill
    return out


def freq_mask(m: np.ndarray, draws: Sequence[MaskDraw], fill: float) -> np.ndarray:
    """Fill whole channels [start, start+width) with a constant, per draw."""
    m = validate_matrix(m)
    nu = m.shape[1]
    out = m.copy()
    for d in draws:
        if d.start < 0 or d.width < 0 or d.start + d.width > nu:
            raise SpecPolicyError("OUT_OF_RANGE", f"freq mask {d} exceeds nu={nu}")
        out[:, d.start : d.start + d.width] = fill
    return out


def warp_source_map(tau: int, d: WarpDraw) -> np.ndarray:
    """Monotone piecewise-linear source positions s(t) for each output frame.

    Knots: s(0)=0, s(c')=c, s(tau-1)=tau-1, where c is the drawn center and
    c' = c +/- distance (the frame the center content lands on).
    """
    if d.direction == "right":
        c_prime = d.center + d.distance
    elif d.direction == "left":
        c_prime = d.center - d.distance
    else:
        raise SpecPolicyError("INFEASIBLE", f"bad warp direction {d.direction!r}")
    if not (0 <= d.budget <= d.center <= tau - 1 - d.budget) or d.distance > d.budget:
        raise SpecPolicyError("INFEASIBLE", f"warp draw {d} infeasible for tau={tau}")
    t = np.arange(tau, dtype=np.float64)
    return np.interp(t, [0.0, float(c_prime), float(tau - 1)], [0.0, float(d.center), float(tau - 1)])


def time_warp(m: np.ndarray, d: WarpDraw) -> np.ndarray:
    """Remap the time axis along the warp source map with linear interpolation."""
    m = validate_matrix(m)
    tau = m.shape[0]
    if tau < 3:
        raise SpecPolicyError("INFEASIBLE", f"time warp needs tau >= 3, got {tau}")
    if d.distance == 0:
        return m.copy()
    s = warp_source_map(tau, d)
    lo = np.floor(s).astype(np.intp)
    np.clip(lo, 0, tau - 1, out=lo)
    hi = np.minimum(lo + 1, tau - 1)
    frac = s - lo
    low = m[lo].astype(np.float64)
    # lerp as base + frac*delta: exact for constant matrices and frac == 0
    out = (low + frac[:, None] * (m[hi].astype(np.float64) - low)).astype(m.dtype)
    exact = frac == 0.0
    out[exact] = m[lo[exact]]  # integer source frames copy bit-exactly
    return out


def realize_stage(
    rng: np.random.Generator,
    tau: int,
    nu: int,
    params: RealizedParams,
    active,
) -> PlanStage:
    """Draw all random parameters for one stage from a seeded generator.

    Draw order is fixed (warp, then freq masks, then time masks) so that
    results are reproducible regardless of application parallelism.
    """
    active = frozenset(active)
    warp = None
    freq_draws: list[MaskDraw] = []
    time_draws: list[MaskDraw] = []
    if Strategy.TIME_WARP in active:
        budget = int(math.floor(params.rho0 * params.warp_base + 0.5))
        budget = min(budget, max(0, (tau - 2) // 2))
        center = int(rng.integers(budget, tau - 1 - budget, endpoint=True))
        distance = int(rng.integers(0, budget, endpoint=True))
        direction = "right" if rng.integers(0, 2) == 1 else "left"
        warp = WarpDraw(center=center, distance=distance, direction=direction, budget=budget)
    if Strategy.FREQ_MASK in active:
        f_max = min(params.f_width, nu)
        for _ in range(params.n_freq_masks):
            width = int(rng.integers(0, f_max, endpoint=True))
            start = int(rng.integers(0, nu - width, endpoint=True))
            freq_draws.append(MaskDraw(start=start, width=width))
    if Strategy.TIME_MASK in active:
        t_max = min(params.t_width, tau)
        for _ in range(params.n_time_masks):
            width = int(rng.integers(0, t_max, endpoint=True))
            start = int(rng.integers(0, tau - width, endpoint=True))
            time_draws.append(MaskDraw(start=start, width=width))
    return PlanStage(
        active=active,
        params=params,
        warp=warp,
        freq_draws=tuple(freq_draws),
        time_draws=tuple(time_draws),
    )


def realize_draws(
    seed: SampleSeed,
    m: np.ndarray,
    params: RealizedParams,
    active,
) -> AugmentationPlan:
    """Realize a single-stage plan for one sample."""
    m = validate_matrix(m)
    tau, nu = m.shape
    stage = realize_stage(seed.rng(), tau, nu, params, active)
    return AugmentationPlan(
        sample_index=seed.sample_index, seed=seed, tau=tau, nu=nu, stages=(stage,)
    )


def apply_stage(m: np.ndarray, stage: PlanStage) -> np.ndarray:
    """Apply one stage in the fixed order warp -> freq mask -> time mask."""
    out = m
    if stage.warp is not None and stage.warp.distance > 0:
        out = time_warp(out, stage.warp)
    if stage.freq_draws:
        out = freq_mask(out, stage.freq_draws, stage.params.fill)
    if stage.time_draws:
        out = time_mask(out, stage.time_draws, stage.params.fill)
    return out


def apply_plan(m: np.ndarray, plan: AugmentationPlan) -> np.ndarray:
    """Apply every stage of a realized plan; always returns a fresh array."""
    m = validate_matrix(m)
    if m.shape != (plan.tau, plan.nu):
        raise SpecPolicyError(
            "SHAPE_MISMATCH",
            f"plan realized for ({plan.tau}, {plan.nu}), matrix is {m.shape}",
        )
    out = m.copy()
    for stage in plan.stages:
        out = apply_stage(out, stage)
    return out
