import math

import numpy as np
import pytest

from specpolicy import AugmentConfig, BetaParams, SpecPolicyError, Variant, reg_inc_beta
from specpolicy.harness import (
    SimConfig,
    SurrogateModel,
    evaluate_strategy_losses,
    make_synthetic_dataset,
    run_simulation,
)

SMALL = dict(n_train=60, n_val=40, tau=40, nu=16, classes=4)


def small_config(variant, seed=0, epochs=8):
    return SimConfig(variant=variant, epochs=epochs, master_seed=seed, **SMALL)


class TestSyntheticDataset:
    def test_counts_and_balance(self):
        train, val = make_synthetic_dataset(1, 8, 4, 20, 16, 4)
        assert len(train.features) == 8 and len(val.features) == 4
        for ds in (train, val):
            counts = np.bincount(ds.labels, minlength=4)
            assert counts.max() - counts.min() <= 1

    def test_deterministic(self):
        a = make_synthetic_dataset(7, 6, 3, 15, 12, 3)
        b = make_synthetic_dataset(7, 6, 3, 15, 12, 3)
        for m1, m2 in zip(a[0].features + a[1].features, b[0].features + b[1].features):
            assert np.array_equal(m1, m2)

    def test_different_seeds_differ(self):
        a = make_synthetic_dataset(1, 4, 2, 15, 12, 3)
        b = make_synthetic_dataset(2, 4, 2, 15, 12, 3)
        assert not all(
            np.array_equal(m1, m2) for m1, m2 in zip(a[0].features, b[0].features)
        )

    def test_rejects_too_many_classes(self):
        with pytest.raises(SpecPolicyError) as err:
            make_synthetic_dataset(1, 4, 2, 15, 12, 8)
        assert err.value.code == "INVALID_SHAPE"

    def test_class_tone_is_present(self):
        train, _ = make_synthetic_dataset(3, 8, 4, 40, 16, 4)
        for m, label in zip(train.features, train.labels):
            band = m[:, label * 4 : label * 4 + 3]
            assert band.mean() > m.mean()  # added energy in the class band


class TestEvaluateStrategyLosses:
    def test_untrained_model_near_log_c(self):
        _, val = make_synthetic_dataset(1, 8, 40, 40, 16, 4)
        model = SurrogateModel.zeros(4, 16)
        report = evaluate_strategy_losses(model, val, AugmentConfig(), 0, 0)
        for loss in report.losses:
            assert loss == pytest.approx(math.log(4), abs=0.1)

    def test_deterministic(self):
        _, val = make_synthetic_dataset(1, 8, 20, 40, 16, 4)
        model = SurrogateModel.zeros(4, 16)
        r1 = evaluate_strategy_losses(model, val, AugmentConfig(), 3, 9)
        r2 = evaluate_strategy_losses(model, val, AugmentConfig(), 3, 9)
        assert r1 == r2

    def test_validation_set_never_mutated(self):
        _, val = make_synthetic_dataset(1, 8, 20, 40, 16, 4)
        before = [m.copy() for m in val.features]
        model = SurrogateModel.zeros(4, 16)
        evaluate_strategy_losses(model, val, AugmentConfig(), 1, 0)
        for m, snap in zip(val.features, before):
            assert np.array_equal(m, snap)


class TestRunSimulation:
    def test_trace_row_invariants_policy(self):
        traces = run_simulation(small_config(Variant.POLICY))
        assert len(traces) == 8
        for row in traces:
            assert abs(math.fsum(row.probabilities) - 1.0) <= 1e-9
            for lam, rel in zip(row.lam, row.relative):
                assert 0.0 <= lam <= 1.0
                assert 0.0 <= rel <= 1.0
            assert 0.0 <= row.train_accuracy <= 1.0
            assert 0.0 <= row.val_accuracy <= 1.0

    def test_first_policy_epoch_lambda_zero(self):
        traces = run_simulation(small_config(Variant.POLICY))
        assert traces[1].lam == (0.0, 0.0, 0.0)
        assert traces[1].relative == (1.0, 1.0, 1.0)

    def test_trace_consistency_with_formulas(self):
        cfg = small_config(Variant.POLICY)
        beta = BetaParams(cfg.augment.a, cfg.augment.b)
        for row in run_simulation(cfg)[1:]:
            total = math.fsum(row.val_losses)
            for i in range(3):
                assert row.probabilities[i] == pytest.approx(
                    row.val_losses[i] / total, abs=1e-12
                )
                assert row.lam[i] == pytest.approx(
                    1.0 - reg_inc_beta(row.relative[i], beta), abs=1e-10
                )

    def test_deterministic_per_seed(self):
        t1 = run_simulation(small_config(Variant.POLICY, seed=5))
        t2 = run_simulation(small_config(Variant.POLICY, seed=5))
        assert t1 == t2

    def test_none_variant_overfits(self):
        gaps = []
        for seed in range(5):
            traces = run_simulation(small_config(Variant.NONE, seed=seed, epochs=12))
            last = traces[-1]
            gaps.append(last.train_accuracy - last.val_accuracy)
        assert np.median(gaps) >= 0.0

    def test_learning_happens(self):
        traces = run_simulation(small_config(Variant.POLICY, epochs=12))
        assert traces[-1].val_accuracy >= 0.9
        assert traces[-1].val_losses[0] < traces[0].val_losses[0]
