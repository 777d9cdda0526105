import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gdpbench.errors import ConfigError, DivergenceError, ValidationError
from gdpbench.nn import gradient_check
from gdpbench.nn.graph import Graph
from gdpbench.panel import ZVector
from gdpbench.training import (
    CVConfig,
    LossConfig,
    TrainConfig,
    attach_loss,
    batch_weighted_loss,
    expand_grid,
    grid_search,
    kfold_split,
    load_checkpoint,
    save_checkpoint,
    train_model,
    validation_loss,
    weighted_multivariate_loss,
)


# ----- weighted multivariate loss ------------------------------------------------


def loop_oracle(pred, target, w):
    acc = 0.0
    for a, b in zip(pred[:-1], target[:-1]):
        acc += (a - b) * (a - b)
    return acc + w * (pred[-1] - target[-1]) * (pred[-1] - target[-1])


def test_weighted_loss_zero_at_match():
    z = ZVector(indicators=np.array([1.0, 2.0]), gdp=0.5)
    assert weighted_multivariate_loss(z, z, 4.0) == 0.0


def test_weighted_loss_hand_case():
    pred = ZVector(indicators=np.array([2.0, -1.0]), gdp=3.5)
    target = ZVector(indicators=np.array([1.0, 1.0]), gdp=0.5)
    # indicator errors (1, -2), gdp error 3, W=4 -> 1 + 4 + 36 = 41
    assert weighted_multivariate_loss(pred, target, 4.0) == 41.0


def test_weighted_loss_unit_weight_is_plain_sse():
    rng = np.random.default_rng(0)
    for _ in range(10):
        p = rng.normal(size=5)
        t = rng.normal(size=5)
        got = weighted_multivariate_loss(p, t, 1.0)
        want = loop_oracle(list(p), list(t), 1.0)
        assert got == want


def test_weighted_loss_exact_against_loop_oracle():
    rng = np.random.default_rng(1)
    for _ in range(20):
        n = int(rng.integers(1, 8))
        p = rng.normal(size=n + 1)
        t = rng.normal(size=n + 1)
        w = float(rng.uniform(0.1, 10))
        assert weighted_multivariate_loss(p, t, w) == loop_oracle(list(p), list(t), w)


def test_weighted_loss_monotone_in_w():
    pred = np.array([0.0, 1.0])
    target = np.array([0.0, 0.0])
    losses = [weighted_multivariate_loss(pred, target, w) for w in (0.5, 1.0, 2.0)]
    assert losses[0] < losses[1] < losses[2]


def test_weighted_loss_rejects_mismatch_and_bad_weight():
    with pytest.raises(ValidationError):
        weighted_multivariate_loss([1.0, 2.0], [1.0], 1.0)
    with pytest.raises(ValidationError):
        weighted_multivariate_loss([1.0], [1.0], 0.0)


def test_batch_weighted_loss_is_mean_of_samples():
    rng = np.random.default_rng(2)
    preds = rng.normal(size=(6, 4))
    targets = rng.normal(size=(6, 4))
    want = np.mean([weighted_multivariate_loss(p, t, 3.0)
                    for p, t in zip(preds, targets)])
    assert batch_weighted_loss(preds, targets, 3.0) == pytest.approx(want, rel=1e-12)


def test_loss_gradient_matches_finite_differences():
    rng = np.random.default_rng(3)
    g = Graph()
    pred = g.parameter("pred", rng.normal(size=(3, 4)))
    loss = attach_loss(g, pred, 3, 4, LossConfig(kind="weighted_multivariate", w_gdp=2.5))
    report = gradient_check(g, loss, {"y": rng.normal(size=(3, 4))}, eps=1e-5)
    assert report.max_rel_err < 1e-6


# ----- validation loss --------------------------------------------------------------


def test_validation_loss_gdp_only():
    preds = np.array([[9.0, 9.0, 1.0], [5.0, 5.0, 2.0]])
    targets = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 2.0]])
    assert validation_loss(preds, targets, "multi_indicator") == 0.0


def test_validation_loss_scalar():
    assert validation_loss([1.0, 2.0], [1.0, 4.0], "scalar") == 2.0


def test_validation_loss_single_exact():
    assert validation_loss([3.0], [3.0], "scalar") == 0.0


def test_validation_loss_empty_rejected():
    with pytest.raises(ValidationError):
        validation_loss([], [], "scalar")


# ----- k-fold assignment -------------------------------------------------------------


def test_kfold_even_sizes():
    folds = kfold_split(10, CVConfig(k=5, seed=0))
    assert [len(f) for f in folds] == [2] * 5


def test_kfold_uneven_sizes():
    folds = kfold_split(11, CVConfig(k=5, seed=0))
    assert sorted(len(f) for f in folds) == [2, 2, 2, 2, 3]


def test_kfold_deterministic():
    a = kfold_split(23, CVConfig(k=5, seed=7))
    b = kfold_split(23, CVConfig(k=5, seed=7))
    for fa, fb in zip(a, b):
        np.testing.assert_array_equal(fa, fb)


def test_kfold_too_few_samples():
    with pytest.raises(ValidationError):
        kfold_split(4, CVConfig(k=5, seed=0))


@settings(max_examples=40)
@given(n=st.integers(5, 200), k=st.integers(2, 8), seed=st.integers(0, 1000))
def test_kfold_partition_property(n, k, seed):
    if n < k:
        n = k
    folds = kfold_split(n, CVConfig(k=k, seed=seed))
    union = np.concatenate(folds)
    assert len(union) == n
    assert set(union.tolist()) == set(range(n))
    sizes = [len(f) for f in folds]
    assert max(sizes) - min(sizes) <= 1


# ----- train_model -------------------------------------------------------------------


def linear_data(n=40, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, 3))
    y = x @ np.array([1.0, -2.0, 0.5]) + 0.25
    return x, y


def test_train_linear_delegates_to_closed_form():
    x, y = linear_data()
    ckpt, curves = train_model("linear", {}, (x, y), LossConfig(), TrainConfig())
    assert ckpt.epochs_run == 0
    assert curves["train"] == []
    np.testing.assert_allclose(ckpt.predict(x).ravel(), y, atol=1e-8)


def test_train_mlp_reduces_loss():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(48, 2))
    y = (x[:, 0] * x[:, 1])[:, None]
    tc = TrainConfig(learning_rate=5e-3, batch_size=48, max_epochs=150, seed=1)
    ckpt, curves = train_model("mlp", {"input_dim": 2, "hidden": (16,)},
                               (x, y), LossConfig(), tc)
    assert curves["train"][-1] < curves["train"][0] * 0.5
    assert ckpt.epochs_run == 150


def test_train_divergence_is_an_error_not_a_crash():
    x, y = linear_data()
    tc = TrainConfig(learning_rate=1e3, batch_size=8, max_epochs=50, seed=0,
                     optimizer="sgd")
    with pytest.raises(DivergenceError) as err:
        train_model("mlp", {"input_dim": 3, "hidden": (8,)}, (x, y[:, None]),
                    LossConfig(), tc)
    assert err.value.last_finite_epoch >= -1


def test_train_early_stopping_stops():
    x, y = linear_data(n=60)
    tc = TrainConfig(learning_rate=1e-2, batch_size=16, max_epochs=500,
                     patience=5, seed=2)
    ckpt, curves = train_model("mlp", {"input_dim": 3, "hidden": (8,)},
                               (x, y[:, None]), LossConfig(), tc)
    assert ckpt.epochs_run <= 500
    assert len(curves["valid"]) == ckpt.epochs_run


def test_checkpoint_round_trip(tmp_path):
    x, y = linear_data()
    ckpt, _ = train_model("linear", {"ridge_eps": 1e-4}, (x, y),
                          LossConfig(), TrainConfig())
    prefix = tmp_path / "ck"
    save_checkpoint(prefix, ckpt, extra={"note": "test"})
    loaded = load_checkpoint(prefix)
    assert loaded.family == "linear"
    assert loaded.config == {"ridge_eps": 1e-4}
    np.testing.assert_array_equal(loaded.params["weights"], ckpt.params["weights"])
    np.testing.assert_allclose(loaded.predict(x).ravel(), ckpt.predict(x).ravel())


# ----- grid search ----------------------------------------------------------------


def test_expand_grid_order():
    grid = expand_grid({"a": [1, 2], "b": ["x", "y"]})
    assert grid == [{"a": 1, "b": "x"}, {"a": 1, "b": "y"},
                    {"a": 2, "b": "x"}, {"a": 2, "b": "y"}]
    with pytest.raises(ConfigError):
        expand_grid({})


def test_grid_search_single_point():
    x, y = linear_data()
    run = grid_search("linear", {}, {"ridge_eps": [1e-6]}, (x, y),
                      LossConfig(), TrainConfig(seed=0), CVConfig(k=5, seed=0))
    assert run.winner == 0
    assert run.best_fold == int(np.argmin(run.fold_losses[0]))
    assert run.final_checkpoint.train_sample_count == 40


def test_grid_search_ridge_grid_on_noiseless_data():
    x, y = linear_data(n=60, seed=5)
    run = grid_search("linear", {}, {"ridge_eps": [0.0, 1e-2, 1.0]}, (x, y),
                      LossConfig(), TrainConfig(seed=0), CVConfig(k=5, seed=0))
    assert run.winner == 0  # unregularized exact fit wins on noiseless data
    assert run.mean_losses[0] < run.mean_losses[1] < run.mean_losses[2]


def test_grid_search_dominance():
    x, y = linear_data(n=50, seed=6)
    run = grid_search("linear", {}, {"ridge_eps": [10.0, 1e-8]}, (x, y),
                      LossConfig(), TrainConfig(seed=0), CVConfig(k=5, seed=0))
    per_fold_better = [a > b for a, b in zip(run.fold_losses[0], run.fold_losses[1])]
    assert all(per_fold_better)
    assert run.winner == 1


def test_grid_search_protocol_invariants():
    x, y = linear_data(n=43, seed=7)
    run = grid_search("linear", {}, {"ridge_eps": [0.0, 1e-3]}, (x, y),
                      LossConfig(), TrainConfig(seed=3), CVConfig(k=5, seed=3))
    union = np.concatenate(run.folds)
    assert set(union.tolist()) == set(range(43))
    sizes = [len(f) for f in run.folds]
    assert max(sizes) - min(sizes) <= 1
    assert run.mean_losses[run.winner] == min(m for m in run.mean_losses if m is not None)
    assert run.fold_losses[run.winner][run.best_fold] == min(run.fold_losses[run.winner])
    assert run.final_checkpoint.train_sample_count == 43
    assert run.best_valid_checkpoint.train_sample_count < 43


def test_grid_search_deterministic_and_parallel_identical(tmp_path):
    rng = np.random.default_rng(8)
    x = rng.normal(size=(30, 2))
    y = (x @ np.array([1.0, 2.0]))[:, None]
    space = {"hidden": [(4,)], "learning_rate": [1e-2, 5e-3]}
    args = ("mlp", {"input_dim": 2}, space, (x, y), LossConfig(),
            TrainConfig(batch_size=10, max_epochs=12, seed=11), CVConfig(k=5, seed=11))
    run1 = grid_search(*args, jobs=1)
    run2 = grid_search(*args, jobs=4)
    assert run1.fold_losses == run2.fold_losses
    assert run1.winner == run2.winner
    for d in ("a", "b"):
        (tmp_path / d).mkdir()
    from gdpbench.training import save_cvrun
    save_cvrun(tmp_path / "a", run1, "run")
    save_cvrun(tmp_path / "b", run2, "run")
    for name in ("run_cvrun.json", "run_best.nnp", "run_best.json",
                 "run_final.nnp", "run_final.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_grid_search_all_points_diverge():
    rng = np.random.default_rng(9)
    x = rng.normal(size=(20, 2))
    y = rng.normal(size=(20, 1))
    with pytest.raises(DivergenceError):
        grid_search("mlp", {"input_dim": 2, "hidden": (8,)},
                    {"learning_rate": [1e4]}, (x, y), LossConfig(),
                    TrainConfig(batch_size=5, max_epochs=30, seed=0,
                                optimizer="sgd"),
                    CVConfig(k=5, seed=0))
