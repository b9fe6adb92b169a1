"""On-disk formats: binary feature files, policy state documents, plan
documents, loss reports. Every write is atomic (temp file + rename)."""

from __future__ import annotations

import json
import os
import struct
import tempfile
from typing import List

import numpy as np

from .betainc import BetaParams
from .errors import SpecPolicyError
from .features import SampleSeed, Strategy, validate_matrix
from .kernels import AugmentationPlan, MaskDraw, PlanStage, RealizedParams, WarpDraw
from .policy import LossReport, PolicyState, Variant

FEATURE_MAGIC = b"SPFA"
FEATURE_VERSION = 1
_HEADER = struct.Struct("<4sHHII")

STATE_VERSION = 1


def atomic_write_bytes(path: str, payload: bytes) -> None:
    """Write via a sibling temp file and rename, so readers never see a
    truncated file."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def feature_file_bytes(m: np.ndarray) -> bytes:
    m = validate_matrix(m)
    tau, nu = m.shape
    payload = np.ascontiguousarray(m, dtype="<f4").tobytes()
    return _HEADER.pack(FEATURE_MAGIC, FEATURE_VERSION, 0, tau, nu) + payload


def write_feature_file(path: str, m: np.ndarray) -> None:
    atomic_write_bytes(path, feature_file_bytes(m))


def read_feature_file(path: str) -> np.ndarray:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise SpecPolicyError("PARSE", f"cannot read {path}: {exc}") from exc
    if len(raw) < _HEADER.size:
        raise SpecPolicyError("PARSE", f"{path}: truncated header")
    magic, version, flags, tau, nu = _HEADER.unpack_from(raw)
    if magic != FEATURE_MAGIC:
        raise SpecPolicyError("PARSE", f"{path}: bad magic {magic!r}")
    if version != FEATURE_VERSION:
        raise SpecPolicyError("PARSE", f"{path}: unsupported version {version}")
    if flags != 0:
        raise SpecPolicyError("PARSE", f"{path}: unsupported flags {flags}")
    expected = 4 * tau * nu
    payload = raw[_HEADER.size :]
    if len(payload) != expected:
        raise SpecPolicyError(
            "PARSE", f"{path}: payload is {len(payload)} bytes, expected {expected}"
        )
    if tau < 1 or nu < 1:
        raise SpecPolicyError("PARSE", f"{path}: degenerate shape ({tau}, {nu})")
    return np.frombuffer(payload, dtype="<f4").reshape(tau, nu).copy()


def state_to_document(state: PolicyState) -> dict:
    return {
        "version": STATE_VERSION,
        "epoch": state.epoch,
        "a": state.beta.a,
        "b": state.beta.b,
        "variant": state.variant.value,
        "master_seed": state.master_seed,
        "prev_losses": list(state.prev_losses),
        "curr_losses": list(state.curr_losses),
        "probabilities": list(state.probabilities),
        "relative": list(state.relative),
        "lambda": list(state.lam),
    }


def state_from_document(doc: dict) -> PolicyState:
    try:
        if doc["version"] != STATE_VERSION:
            raise SpecPolicyError("PARSE", f"unsupported state version {doc['version']}")
        return PolicyState(
            epoch=int(doc["epoch"]),
            prev_losses=tuple(float(x) for x in doc["prev_losses"]),
            curr_losses=tuple(float(x) for x in doc["curr_losses"]),
            probabilities=tuple(float(x) for x in doc["probabilities"]),
            relative=tuple(float(x) for x in doc["relative"]),
            lam=tuple(float(x) for x in doc["lambda"]),
            beta=BetaParams(float(doc["a"]), float(doc["b"])),
            variant=Variant(doc["variant"]),
            master_seed=int(doc["master_seed"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecPolicyError("PARSE", f"malformed state document: {exc}") from exc


def save_state(path: str, state: PolicyState) -> None:
    text = json.dumps(state_to_document(state), indent=2, sort_keys=True) + "\n"
    atomic_write_bytes(path, text.encode("utf-8"))


def load_state(path: str) -> PolicyState:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecPolicyError("PARSE", f"cannot load state {path}: {exc}") from exc
    return state_from_document(doc)


def load_loss_report(path: str) -> LossReport:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        losses = tuple(float(x) for x in doc["losses"])
        if len(losses) != 3:
            raise ValueError(f"expected 3 losses, got {len(losses)}")
        return LossReport(epoch=int(doc["epoch"]), losses=losses)
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise SpecPolicyError("PARSE", f"cannot load loss report {path}: {exc}") from exc


def _stage_to_doc(stage: PlanStage) -> dict:
    doc = {
        "active": sorted(s.name for s in stage.active),
        "params": {
            "rho0": stage.params.rho0,
            "n_time_masks": stage.params.n_time_masks,
            "n_freq_masks": stage.params.n_freq_masks,
            "t_width": stage.params.t_width,
            "f_width": stage.params.f_width,
            "fill": stage.params.fill,
            "warp_base": stage.params.warp_base,
        },
        "warp": None,
        "freq_masks": [[d.start, d.width] for d in stage.freq_draws],
        "time_masks": [[d.start, d.width] for d in stage.time_draws],
    }
    if stage.warp is not None:
        doc["warp"] = {
            "center": stage.warp.center,
            "distance": stage.warp.distance,
            "direction": stage.warp.direction,
            "budget": stage.warp.budget,
        }
    return doc


def _stage_from_doc(doc: dict) -> PlanStage:
    warp = None
    if doc["warp"] is not None:
        w = doc["warp"]
        warp = WarpDraw(
            center=int(w["center"]),
            distance=int(w["distance"]),
            direction=w["direction"],
            budget=int(w["budget"]),
        )
    p = doc["params"]
    return PlanStage(
        active=frozenset(Strategy[name] for name in doc["active"]),
        params=RealizedParams(
            rho0=float(p["rho0"]),
            n_time_masks=int(p["n_time_masks"]),
            n_freq_masks=int(p["n_freq_masks"]),
            t_width=int(p["t_width"]),
            f_width=int(p["f_width"]),
            fill=float(p["fill"]),
            warp_base=int(p["warp_base"]),
        ),
        warp=warp,
        freq_draws=tuple(MaskDraw(int(s), int(w)) for s, w in doc["freq_masks"]),
        time_draws=tuple(MaskDraw(int(s), int(w)) for s, w in doc["time_masks"]),
    )


def plan_to_document(plan: AugmentationPlan) -> dict:
    return {
        "sample_index": plan.sample_index,
        "seed": {
            "master_seed": plan.seed.master_seed,
            "epoch": plan.seed.epoch,
            "sample_index": plan.seed.sample_index,
            "derived": plan.seed.derived,
        },
        "tau": plan.tau,
        "nu": plan.nu,
        "stages": [_stage_to_doc(s) for s in plan.stages],
    }


def plan_from_document(doc: dict) -> AugmentationPlan:
    try:
        seed = SampleSeed(
            master_seed=int(doc["seed"]["master_seed"]),
            epoch=int(doc["seed"]["epoch"]),
            sample_index=int(doc["seed"]["sample_index"]),
        )
        return AugmentationPlan(
            sample_index=int(doc["sample_index"]),
            seed=seed,
            tau=int(doc["tau"]),
            nu=int(doc["nu"]),
            stages=tuple(_stage_from_doc(s) for s in doc["stages"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecPolicyError("PARSE", f"malformed plan document: {exc}") from exc


def save_plans(path: str, plans: List[AugmentationPlan]) -> None:
    text = json.dumps([plan_to_document(p) for p in plans], indent=2) + "\n"
    atomic_write_bytes(path, text.encode("utf-8"))


def read_csv_matrix(path: str) -> np.ndarray:
    """Parse a plain comma-separated grid of numbers into a feature matrix."""
    try:
        m = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    except (OSError, ValueError) as exc:
        raise SpecPolicyError("PARSE", f"cannot parse CSV {path}: {exc}") from exc
    return validate_matrix(m.astype(np.float32))
