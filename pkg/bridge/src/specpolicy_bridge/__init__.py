"""In-process bindings for the augmentation engine.

Training pipelines call ``augment`` and ``PolicyHandle.policy_step``
directly instead of shelling out to the CLI; the results are defined to be
byte-identical to what the CLI would produce for the same inputs and
seeds. Only the stable surface is exposed: augment, policy stepping, and
state (de)serialization.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from specpolicy import (
    AugmentConfig,
    LossReport,
    PolicyState,
    SampleSeed,
    SpecPolicyError,
    Variant,
    advance_epoch,
    apply_plan,
    fresh_state,
    make_plan,
)
from specpolicy.formats import load_state, save_state

__all__ = ["BridgeError", "PolicyHandle", "augment"]


class BridgeError(Exception):
    """Boundary failure; carries the core error code when one exists."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


def _check_array(array) -> np.ndarray:
    if not isinstance(array, np.ndarray):
        raise BridgeError("DIMENSION_MISMATCH", f"expected a numpy array, got {type(array).__name__}")
    if array.ndim != 2:
        raise BridgeError("DIMENSION_MISMATCH", f"expected a 2-D array, got ndim={array.ndim}")
    if array.dtype != np.float32:
        raise BridgeError("NON_FINITE", f"expected float32, got {array.dtype}")
    if not np.all(np.isfinite(array)):
        raise BridgeError("NON_FINITE", "array contains NaN or Inf")
    return array


class PolicyHandle:
    """A policy state plus its config; not shareable across threads."""

    def __init__(self, state: PolicyState, config: Optional[AugmentConfig] = None):
        self._state = state
        self._config = config or AugmentConfig(
            a=state.beta.a, b=state.beta.b, variant=state.variant
        )

    @classmethod
    def fresh(
        cls,
        variant: Variant = Variant.POLICY,
        a: float = 0.6,
        b: float = 4.4,
        master_seed: int = 0,
    ) -> "PolicyHandle":
        config = AugmentConfig(a=a, b=b, variant=variant)
        return cls(fresh_state(config, master_seed=master_seed), config)

    @classmethod
    def load(cls, path: str) -> "PolicyHandle":
        try:
            return cls(load_state(path))
        except SpecPolicyError as exc:
            raise BridgeError(exc.code, str(exc)) from exc

    def save(self, path: str) -> None:
        save_state(path, self._state)

    def policy_step(self, losses: Sequence[float]) -> "PolicyHandle":
        """Feed one epoch's per-strategy validation losses; returns self."""
        try:
            report = LossReport(epoch=self._state.epoch + 1, losses=tuple(float(x) for x in losses))
            self._state = advance_epoch(self._state, report)
        except SpecPolicyError as exc:
            raise BridgeError(exc.code, str(exc)) from exc
        return self

    @property
    def epoch(self) -> int:
        return self._state.epoch

    @property
    def probabilities(self) -> tuple:
        return self._state.probabilities

    @property
    def relative_loss(self) -> tuple:
        return self._state.relative

    @property
    def strength(self) -> tuple:
        return self._state.lam

    @property
    def state(self) -> PolicyState:
        return self._state

    @property
    def config(self) -> AugmentConfig:
        return self._config


def augment(
    array: np.ndarray,
    variant: Variant,
    state: Optional[PolicyHandle] = None,
    seed: int = 0,
    sample_index: int = 0,
) -> np.ndarray:
    """Augment one (tau, nu) float32 array; never mutates the input.

    Matches the CLI byte for byte: the per-sample seed is derived from
    (seed, state epoch, sample_index) exactly as the augment command does.
    """
    _check_array(array)
    if isinstance(variant, str):
        variant = Variant(variant)
    if state is None:
        if variant in (Variant.PROB, Variant.PROB_IBF, Variant.PROB_IBF_PLUS_SPEC, Variant.POLICY):
            raise BridgeError("STALE_STATE", f"variant {variant.value} requires a policy handle")
        handle = PolicyHandle.fresh(variant=variant, master_seed=seed)
    else:
        handle = state
    try:
        sample_seed = SampleSeed(seed, handle.state.epoch, sample_index)
        plan = make_plan(variant, handle.state, sample_seed, array.shape, handle.config)
        return apply_plan(array, plan)
    except SpecPolicyError as exc:
        raise BridgeError(exc.code, str(exc)) from exc
