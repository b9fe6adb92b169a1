"""Command-line interface.

Exit codes are part of the contract: 0 ok, 2 parse/format error,
3 usage or state mismatch, 4 protocol (epoch) mismatch.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import formats
from .errors import SpecPolicyError
from .features import SampleSeed
from .harness import SimConfig, run_simulation
from .kernels import apply_plan
from .policy import AugmentConfig, Variant, advance_epoch, fresh_state, make_plan

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_USAGE = 3
EXIT_PROTOCOL = 4

_STATEFUL = {Variant.PROB, Variant.PROB_IBF, Variant.PROB_IBF_PLUS_SPEC, Variant.POLICY}


class CliError(Exception):
    def __init__(self, exit_code: int, message: str):
        super().__init__(message)
        self.exit_code = exit_code


def _thread_count() -> int:
    raw = os.environ.get("SPECPOLICY_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _load_augment_config(path: str | None) -> AugmentConfig:
    if path is None:
        return AugmentConfig()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        fields = {
            k: doc[k]
            for k in (
                "t_width",
                "f_width",
                "warp_base",
                "fill",
                "n_time_masks",
                "n_freq_masks",
                "default_rho0",
                "a",
                "b",
            )
            if k in doc
        }
        if "variant" in doc:
            fields["variant"] = Variant(doc["variant"])
        return AugmentConfig(**fields)
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise CliError(EXIT_PARSE, f"bad config {path}: {exc}") from exc


def cmd_augment(args) -> int:
    variant = Variant(args.variant)
    config = _load_augment_config(args.config)
    if args.state is not None:
        try:
            state = formats.load_state(args.state)
        except SpecPolicyError as exc:
            raise CliError(EXIT_PARSE, str(exc)) from exc
    else:
        if variant in _STATEFUL:
            raise CliError(
                EXIT_USAGE, f"variant {variant.value} requires --state (loss-driven selection)"
            )
        state = fresh_state(config, master_seed=args.seed)
    os.makedirs(args.out, exist_ok=True)

    def one(item):
        index, path = item
        try:
            m = formats.read_feature_file(path)
        except SpecPolicyError as exc:
            raise CliError(EXIT_PARSE, f"{path}: {exc}") from exc
        seed = SampleSeed(args.seed, state.epoch, index)
        plan = make_plan(variant, state, seed, m.shape, config)
        return formats.feature_file_bytes(apply_plan(m, plan)), plan

    items = list(enumerate(args.inputs))
    threads = _thread_count()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, items))
    else:
        results = [one(item) for item in items]
    plans = []
    for (payload, plan), (_, path) in zip(results, items):
        formats.atomic_write_bytes(os.path.join(args.out, os.path.basename(path)), payload)
        plans.append(plan)
    formats.save_plans(os.path.join(args.out, "plans.json"), plans)
    return EXIT_OK


def cmd_policy_step(args) -> int:
    try:
        state = formats.load_state(args.state)
        report = formats.load_loss_report(args.report)
    except SpecPolicyError as exc:
        raise CliError(EXIT_PARSE, str(exc)) from exc
    try:
        state = advance_epoch(state, report)
    except SpecPolicyError as exc:
        if exc.code == "EPOCH_MISMATCH":
            raise CliError(EXIT_PROTOCOL, str(exc)) from exc
        raise CliError(EXIT_USAGE, str(exc)) from exc
    formats.save_state(args.state, state)
    return EXIT_OK


def cmd_state_init(args) -> int:
    config = _load_augment_config(args.config)
    variant = Variant(args.variant) if args.variant else config.variant
    state = fresh_state(
        AugmentConfig(**{**config.__dict__, "variant": variant}), master_seed=args.seed
    )
    formats.save_state(args.state, state)
    return EXIT_OK


def _load_sim_config(path: str) -> SimConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        augment = AugmentConfig(
            **{
                k: doc[k]
                for k in ("t_width", "f_width", "warp_base", "fill", "a", "b")
                if k in doc
            }
        )
        return SimConfig(
            variant=Variant(doc.get("variant", "POLICY")),
            epochs=int(doc.get("epochs", 20)),
            n_train=int(doc.get("n_train", 500)),
            n_val=int(doc.get("n_val", 200)),
            tau=int(doc.get("tau", 100)),
            nu=int(doc.get("nu", 40)),
            classes=int(doc.get("classes", 4)),
            learning_rate=float(doc.get("learning_rate", 0.1)),
            batch_size=int(doc.get("batch_size", 32)),
            master_seed=int(doc.get("seed", 0)),
            augment=augment,
        )
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise CliError(EXIT_PARSE, f"bad simulation config {path}: {exc}") from exc


TRACE_HEADER = "epoch,strategy,val_loss,probability,relative_loss,lambda,train_acc,val_acc"


def cmd_simulate(args) -> int:
    config = _load_sim_config(args.config)
    traces = run_simulation(config)
    os.makedirs(args.out, exist_ok=True)
    lines = [TRACE_HEADER]
    strategy_names = ("TIME_WARP", "FREQ_MASK", "TIME_MASK")
    for row in traces:
        for i, name in enumerate(strategy_names):
            lines.append(
                f"{row.epoch},{name},{row.val_losses[i]!r},{row.probabilities[i]!r},"
                f"{row.relative[i]!r},{row.lam[i]!r},{row.train_accuracy!r},{row.val_accuracy!r}"
            )
    formats.atomic_write_bytes(
        os.path.join(args.out, "trace.csv"), ("\n".join(lines) + "\n").encode("utf-8")
    )
    last = traces[-1]
    summary = (
        f"variant={config.variant.value} epochs={config.epochs} "
        f"final_train_acc={last.train_accuracy!r} final_val_acc={last.val_accuracy!r} "
        f"gap={last.train_accuracy - last.val_accuracy!r}\n"
    )
    formats.atomic_write_bytes(os.path.join(args.out, "summary.txt"), summary.encode("utf-8"))
    sys.stdout.write(summary)
    return EXIT_OK


def cmd_ibf(args) -> int:
    from .betainc import BetaParams, reg_inc_beta

    try:
        params = BetaParams(args.a, args.b)
        if not (0.0 <= args.x <= 1.0):
            raise SpecPolicyError("DOMAIN", f"x={args.x} outside [0, 1]")
        value = reg_inc_beta(args.x, params)
    except SpecPolicyError as exc:
        raise CliError(EXIT_PARSE, str(exc)) from exc
    sys.stdout.write(f"{value:.12g}\n{1.0 - value:.12g}\n")
    return EXIT_OK


def cmd_import_csv(args) -> int:
    try:
        m = formats.read_csv_matrix(args.input)
    except SpecPolicyError as exc:
        raise CliError(EXIT_PARSE, str(exc)) from exc
    formats.write_feature_file(args.output, m)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="specpolicy")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("augment", help="augment feature files under a variant")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--variant", required=True, choices=[v.value for v in Variant])
    p.add_argument("--config", default=None)
    p.add_argument("--state", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("policy-step", help="advance a policy state with a loss report")
    p.add_argument("--state", required=True)
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_policy_step)

    p = sub.add_parser("state-init", help="write a fresh bootstrap policy state")
    p.add_argument("--state", required=True)
    p.add_argument("--variant", default=None, choices=[v.value for v in Variant])
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_state_init)

    p = sub.add_parser("simulate", help="run the closed-loop surrogate experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ibf", help="print the regularized incomplete beta value")
    p.add_argument("x", type=float)
    p.add_argument("a", type=float)
    p.add_argument("b", type=float)
    p.set_defaults(func=cmd_ibf)

    p = sub.add_parser("import-csv", help="convert a CSV grid to a feature file")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_import_csv)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        sys.stderr.write(f"specpolicy: {exc}\n")
        return exc.exit_code
    except SpecPolicyError as exc:
        sys.stderr.write(f"specpolicy: {exc}\n")
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
