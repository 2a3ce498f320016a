import numpy as np
import pytest

from mixmed import Contrast, difference_mediation, product_mediation, sema
from mixmed.mediate import mediation_from_arrays

from conftest import make_linear_dataset


def test_product_recovers_dgp_coefficients():
    # alpha=0.5, beta_m=0.4, beta_x=0.2 -> NIE ~ 0.20, NDE ~ 0.20 at n=1e5.
    data = make_linear_dataset(
        n=100_000, p=1, alpha=[0.5], beta_x=[0.2], beta_m=0.4, seed=10
    )
    eff = product_mediation(data, "X1", ("C1", "C2"))
    assert eff.nie.estimate == pytest.approx(0.20, abs=0.02)
    assert eff.nde.estimate == pytest.approx(0.20, abs=0.02)
    assert eff.te.estimate == pytest.approx(eff.nde.estimate + eff.nie.estimate, abs=1e-12)


def test_product_null_mediator_path():
    data = make_linear_dataset(n=100_000, p=1, alpha=[0.0], beta_x=[0.3], seed=11)
    eff = product_mediation(data, "X1", ("C1", "C2"))
    assert abs(eff.nie.estimate) <= 3 * eff.nie.se


def test_zero_contrast_gives_zero_effects(toy_dataset):
    c = Contrast(np.array([1.0]), np.array([1.0]))
    eff = product_mediation(toy_dataset, "X1", ("C1", "C2"), contrast=c)
    assert eff.te.estimate == 0.0
    assert eff.nde.estimate == 0.0
    assert eff.nie.estimate == 0.0


def test_product_difference_equivalence_random():
    # Algebraic identity of nested OLS fits, quantified over random datasets.
    gen = np.random.default_rng(99)
    for i in range(100):
        n = int(gen.integers(50, 200))
        p = int(gen.integers(1, 5))
        data = make_linear_dataset(
            n=n,
            p=p,
            alpha=gen.normal(size=p),
            beta_x=gen.normal(size=p),
            beta_m=gen.normal(),
            seed=1000 + i,
        )
        covs = ("C1", "C2")
        prod = product_mediation(data, "X1", covs)
        diff = difference_mediation(data, "X1", covs)
        assert diff.nie.estimate == pytest.approx(prod.nie.estimate, abs=1e-10)
        assert diff.nde.estimate == pytest.approx(prod.nde.estimate, abs=1e-10)


def test_confounder_shift_invariance(toy_dataset):
    eff1 = product_mediation(toy_dataset, "X1", ("C1", "C2"))
    shifted = make_shifted(toy_dataset, 1000.0)
    eff2 = product_mediation(shifted, "X1", ("C1", "C2"))
    assert eff2.nie.estimate == pytest.approx(eff1.nie.estimate, abs=1e-8)
    assert eff2.nde.estimate == pytest.approx(eff1.nde.estimate, abs=1e-8)


def make_shifted(data, shift):
    from mixmed import Dataset

    C = data.confounders.copy()
    C[:, 0] += shift
    return Dataset(
        exposures=data.exposures,
        mediator=data.mediator,
        outcome=data.outcome,
        confounders=C,
        exposure_names=data.exposure_names,
        confounder_names=data.confounder_names,
    )


def test_exposure_cannot_be_covariate(toy_dataset):
    with pytest.raises(ValueError):
        product_mediation(toy_dataset, "X1", ("X1", "C1"))


def test_mediation_from_arrays_scalar_contrast_only():
    gen = np.random.default_rng(3)
    with pytest.raises(ValueError):
        mediation_from_arrays(
            gen.standard_normal(50),
            gen.standard_normal(50),
            gen.standard_normal(50),
            contrast=Contrast(np.zeros(2), np.ones(2)),
        )


def test_sema_adjusted_equals_unadjusted_when_single_exposure():
    data = make_linear_dataset(n=400, p=1, alpha=[0.5], beta_x=[0.2], seed=21)
    res_u = sema(data, adjust_coexposures=False)
    res_a = sema(data, adjust_coexposures=True)
    assert res_u.effects[0].nie.estimate == pytest.approx(
        res_a.effects[0].nie.estimate, abs=1e-12
    )
    assert res_u.global_nie.estimate == pytest.approx(res_a.global_nie.estimate, abs=1e-12)


def test_sema_global_is_sum_of_per_exposure():
    data = make_linear_dataset(
        n=300, p=4, alpha=[0.5, 0.3, 0, 0], beta_x=[0.2, 0, 0, 0], seed=22
    )
    res = sema(data, adjust_coexposures=True)
    total = sum(e.nie.estimate for e in res.effects)
    assert res.global_nie.estimate == pytest.approx(total, abs=1e-12)
    assert res.nie_qvalues.shape == (4,)
    assert res.active.dtype == bool


def test_sema_fpr_under_global_null():
    # All alpha_x = 0 and beta_x = 0: FDR flags should fire at most at the
    # nominal rate (within Monte Carlo noise over 200 replicates).
    flags = 0
    total = 0
    for rep in range(200):
        data = make_linear_dataset(n=120, p=3, seed=5000 + rep)
        res = sema(data, adjust_coexposures=True, fdr_level=0.05)
        flags += int(res.active.sum())
        total += 3
    fpr = flags / total
    # Mean FDR flag rate under the complete null is at most fdr_level; the
    # binomial 2-sigma bound at 600 trials adds ~0.018.
    assert fpr <= 0.05 + 2 * np.sqrt(0.05 * 0.95 / total)


def test_unadjusted_regime_labeled_not_causal(toy_dataset):
    res = sema(toy_dataset, adjust_coexposures=False)
    assert not res.causally_interpretable
    res = sema(toy_dataset, adjust_coexposures=True)
    assert res.causally_interpretable
