import numpy as np
import pytest

from mixmed import Contrast, elastic_net, ersma
from mixmed.data import standardize
from mixmed.ersma import (
    EnetFit,
    ErsModel,
    build_ers,
    build_feature_matrix,
    cv_tune,
    fit_ers_model,
    lambda1_max,
)
from mixmed.errors import ConfigError

from conftest import make_linear_dataset

SMALL_CV = {"n_lambda2": 8, "n_lambda1": 30}  # grid reduction for unit-test speed


def projected_gradient_enet(Z, y, lam1, lam2, pf, iters=40_000, tol=1e-12):
    """Independent FISTA solver for the same objective; oracle for tests."""
    yc = y - y.mean()
    G = Z.T @ Z
    L = 2.0 * np.linalg.eigvalsh(G).max() + 2.0 * lam2 * pf.max() + 1e-12
    beta = np.zeros(Z.shape[1])
    v = beta.copy()
    t_acc = 1.0
    prev_obj = np.inf
    for it in range(iters):
        grad = -2.0 * Z.T @ (yc - Z @ v) + 2.0 * lam2 * pf * v
        u = v - grad / L
        thresh = lam1 * pf / L
        beta_new = np.sign(u) * np.maximum(np.abs(u) - thresh, 0.0)
        t_new = 0.5 * (1 + np.sqrt(1 + 4 * t_acc**2))
        v = beta_new + (t_acc - 1) / t_new * (beta_new - beta)
        beta, t_acc = beta_new, t_new
        if it % 50 == 0:
            r = yc - Z @ beta
            obj = r @ r + lam1 * np.sum(pf * np.abs(beta)) + lam2 * np.sum(pf * beta**2)
            if abs(prev_obj - obj) < tol * max(1.0, abs(obj)):
                break
            prev_obj = obj
    return beta, float(y.mean())


def random_instance(seed, n=50, k=8, n_free=2):
    gen = np.random.default_rng(seed)
    Z = gen.standard_normal((n, k))
    Z, _, _ = standardize(Z)
    beta_true = gen.normal(size=k) * (gen.uniform(size=k) < 0.5)
    y = Z @ beta_true + gen.standard_normal(n)
    pf = np.ones(k)
    pf[:n_free] = 0.0
    return Z, y, pf


def test_elastic_net_matches_ols_when_unpenalized():
    Z, y, pf = random_instance(0)
    fit = elastic_net(Z, y, 0.0, 0.0, pf)
    design = np.column_stack([np.ones(len(y)), Z])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    np.testing.assert_allclose(fit.coef, coef[1:], atol=1e-6)
    assert fit.intercept == pytest.approx(coef[0], abs=1e-6)


def test_elastic_net_lambda_max_kills_all_penalized():
    Z, y, pf = random_instance(1)
    lmax = lambda1_max(Z, y, pf)
    fit = elastic_net(Z, y, lmax * 1.0001, 0.5, pf)
    assert np.all(fit.coef[pf > 0] == 0.0)
    # Just below the threshold something becomes active.
    fit2 = elastic_net(Z, y, lmax * 0.99, 0.5, pf)
    assert np.any(fit2.coef[pf > 0] != 0.0)


def test_elastic_net_objective_matches_projected_gradient_oracle():
    gen = np.random.default_rng(5)
    for seed in range(20):
        Z, y, pf = random_instance(100 + seed)
        lam1 = float(gen.uniform(0.5, 20.0))
        lam2 = float(gen.uniform(0.0, 5.0))
        fit = elastic_net(Z, y, lam1, lam2, pf)
        beta_pg, icpt = projected_gradient_enet(Z, y, lam1, lam2, pf)
        obj_cd = fit.objective(Z, y, lam1, lam2, pf)
        obj_pg = EnetFit(beta_pg, icpt, 0, 0.0).objective(Z, y, lam1, lam2, pf)
        assert obj_cd <= obj_pg * (1 + 1e-6) + 1e-9
        assert abs(obj_cd - obj_pg) <= 1e-6 * max(1.0, abs(obj_pg))
        assert fit.kkt_residual <= 1e-6


def test_elastic_net_sparsity_monotone_in_lambda1():
    Z, y, pf = random_instance(7)
    lmax = lambda1_max(Z, y, pf)
    path = np.geomspace(lmax, lmax * 1e-3, 25)
    counts = []
    for lam1 in path:
        fit = elastic_net(Z, y, lam1, 0.3, pf)
        counts.append(int(np.sum(fit.coef[pf > 0] != 0.0)))
    assert all(a <= b for a, b in zip(counts, counts[1:]))


def test_cv_tune_deterministic():
    Z, y, pf = random_instance(8, n=60)
    t1 = cv_tune(Z, y, pf, 42, **SMALL_CV)
    t2 = cv_tune(Z, y, pf, 42, **SMALL_CV)
    assert (t1.lambda1, t1.lambda2) == (t2.lambda1, t2.lambda2)
    t3 = cv_tune(Z, y, pf, 43, **SMALL_CV)
    assert t3.cv_mse.shape == t1.cv_mse.shape


def test_cv_tune_null_signal_keeps_model_near_empty():
    # Pure-noise responses: CV picks the exactly-empty model in most seeded
    # runs (7/10 at these seeds); when a near-top path point wins the CV
    # coin flip instead, the surviving coefficients are still negligible.
    wins = 0
    for seed in range(10):
        gen = np.random.default_rng(200 + seed)
        Z, _, _ = standardize(gen.standard_normal((200, 6)))
        y = gen.standard_normal(200)
        pf = np.ones(6)
        tune = cv_tune(Z, y, pf, seed)
        fit = elastic_net(Z, y, tune.lambda1, tune.lambda2, pf)
        wins += int(np.all(fit.coef == 0.0))
        assert np.abs(fit.coef).max() < 0.3
    assert wins >= 6


def test_cv_tune_planted_signal_survives():
    for seed in range(5):
        gen = np.random.default_rng(300 + seed)
        Z, _, _ = standardize(gen.standard_normal((500, 6)))
        y = 2.0 * Z[:, 3] + 0.5 * gen.standard_normal(500)
        pf = np.ones(6)
        tune = cv_tune(Z, y, pf, seed)
        fit = elastic_net(Z, y, tune.lambda1, tune.lambda2, pf)
        assert fit.coef[3] != 0.0


def test_build_feature_matrix_higher_order():
    X = np.array([[1.0, 2.0], [3.0, 4.0]])
    F, names, parents = build_feature_matrix(X, ("A", "B"), "main+interactions")
    assert names == ("A", "B", "A^2", "B^2", "A*B")
    np.testing.assert_allclose(F[:, 4], [2.0, 12.0])
    assert parents == ((0,), (1,), (0,), (1,), (0, 1))


def test_build_ers_single_coefficient():
    model = ErsModel(
        feature_spec="main",
        exposure_names=("X1", "X2"),
        feature_names=("X1", "X2"),
        feature_parents=((0,), (1,)),
        coef=np.array([0.5, 0.0]),
        intercept=0.0,
        feature_means=np.zeros(2),
        feature_sds=np.ones(2),
        lambda1=1.0,
        lambda2=1.0,
        n_confounders=0,
    )
    X = np.array([[1.0, 9.0], [2.0, 9.0], [-4.0, 9.0]])
    np.testing.assert_allclose(build_ers(model, X), [0.5, 1.0, -2.0])


def test_build_ers_interaction_only():
    model = ErsModel(
        feature_spec="main+interactions",
        exposure_names=("X1", "X2"),
        feature_names=("X1", "X2", "X1^2", "X2^2", "X1*X2"),
        feature_parents=((0,), (1,), (0,), (1,), (0, 1)),
        coef=np.array([0.0, 0.0, 0.0, 0.0, 1.0]),
        intercept=0.0,
        feature_means=np.zeros(5),
        feature_sds=np.ones(5),
        lambda1=1.0,
        lambda2=1.0,
        n_confounders=0,
    )
    X = np.array([[1.0, 2.0], [3.0, -1.0]])
    np.testing.assert_allclose(build_ers(model, X), [2.0, -3.0])


def test_build_ers_zero_coefficients():
    model = ErsModel(
        feature_spec="main",
        exposure_names=("X1",),
        feature_names=("X1",),
        feature_parents=((0,),),
        coef=np.array([0.0]),
        intercept=1.0,
        feature_means=np.zeros(1),
        feature_sds=np.ones(1),
        lambda1=1.0,
        lambda2=1.0,
        n_confounders=0,
    )
    np.testing.assert_array_equal(build_ers(model, np.ones((4, 1))), np.zeros(4))


def test_ers_model_json_roundtrip(tmp_path):
    data = make_linear_dataset(
        n=120, p=4, alpha=[0.5, 0.4, 0, 0], beta_x=[0.3, 0.2, 0.3, 0], seed=50
    )
    model = fit_ers_model(data, "main", 3, cv_kwargs=SMALL_CV)
    path = tmp_path / "ers.json"
    model.to_json(path)
    back = ErsModel.from_json(path)
    np.testing.assert_array_equal(back.coef, model.coef)
    assert back.feature_names == model.feature_names
    scores1 = build_ers(model, data.exposures)
    scores2 = build_ers(back, data.exposures)
    np.testing.assert_array_equal(scores1, scores2)


def test_ers_minimum_three_exposures():
    # Strong single signal: the tuned model would keep ~1 exposure, the
    # relaxation loop must bring in at least 3.
    data = make_linear_dataset(
        n=300, p=6, alpha=[0, 0, 0, 0, 0, 0], beta_x=[2.0, 0, 0, 0, 0, 0], seed=51
    )
    model = fit_ers_model(data, "main", 4, cv_kwargs=SMALL_CV)
    assert len(model.selected_exposures) >= 3


def test_ersma_end_to_end_and_split_hygiene():
    data = make_linear_dataset(
        n=400,
        p=5,
        alpha=[0.5, 0.4, 0.3, 0, 0],
        beta_x=[0.2, 0.2, 0.2, 0, 0],
        seed=52,
    )
    res = ersma(data, "main", rng=7, cv_kwargs=SMALL_CV)
    assert res.scores.shape[0] == data.n - data.n // 2
    assert res.effects.exposure == "ERS"
    assert res.effects.te.estimate == pytest.approx(
        res.effects.nde.estimate + res.effects.nie.estimate, abs=1e-10
    )
    # Default contrast is the 25th -> 75th percentile of the scores.
    q25, q75 = np.quantile(res.scores, [0.25, 0.75])
    assert res.contrast.reference[0] == pytest.approx(q25)
    assert res.contrast.comparative[0] == pytest.approx(q75)
    # Same seed reproduces everything bit for bit.
    res2 = ersma(data, "main", rng=7, cv_kwargs=SMALL_CV)
    np.testing.assert_array_equal(res.scores, res2.scores)
    assert res2.effects.nie.estimate == res.effects.nie.estimate


def test_build_ers_row_equivariance():
    # Scores depend on train-fit transforms only: permuting scoring rows
    # permutes the scores identically.
    data = make_linear_dataset(n=200, p=4, alpha=[0.5, 0.4, 0.3, 0], seed=55)
    model = fit_ers_model(data, "main", 5, cv_kwargs=SMALL_CV)
    X = data.exposures
    perm = np.random.default_rng(1).permutation(X.shape[0])
    np.testing.assert_array_equal(build_ers(model, X[perm]), build_ers(model, X)[perm])


def test_ersma_zero_contrast():
    data = make_linear_dataset(
        n=400, p=4, alpha=[0.5, 0.4, 0.3, 0], beta_x=[0.2, 0, 0, 0], seed=53
    )
    c = Contrast(np.array([0.0]), np.array([0.0]))
    res = ersma(data, "main", rng=3, contrast=c, cv_kwargs=SMALL_CV)
    assert res.effects.te.estimate == 0.0
    assert res.effects.nie.estimate == 0.0


def test_ersma_rejects_bad_spec():
    data = make_linear_dataset(n=100, p=3, seed=54)
    with pytest.raises(ConfigError):
        ersma(data, "quadratic", rng=1)
