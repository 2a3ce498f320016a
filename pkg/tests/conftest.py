import numpy as np
import pytest

from mixmed import Dataset


def make_linear_dataset(
    n=500,
    p=3,
    alpha=None,
    beta_x=None,
    beta_m=0.4,
    noise_m=1.0,
    noise_y=1.0,
    n_confounders=2,
    seed=0,
):
    """Dataset from a plain linear mediation DGP with independent exposures."""
    gen = np.random.default_rng(seed)
    alpha = np.zeros(p) if alpha is None else np.asarray(alpha, dtype=float)
    beta_x = np.zeros(p) if beta_x is None else np.asarray(beta_x, dtype=float)
    X = gen.standard_normal((n, p))
    C = gen.standard_normal((n, n_confounders))
    M = X @ alpha + C.sum(axis=1) + noise_m * gen.standard_normal(n)
    Y = beta_m * M + X @ beta_x + C.sum(axis=1) + noise_y * gen.standard_normal(n)
    return Dataset(
        exposures=X,
        mediator=M,
        outcome=Y,
        confounders=C,
        exposure_names=tuple(f"X{j + 1}" for j in range(p)),
        confounder_names=tuple(f"C{j + 1}" for j in range(n_confounders)),
    )


@pytest.fixture
def toy_dataset():
    return make_linear_dataset(n=200, p=2, alpha=[0.5, 0.0], beta_x=[0.2, 0.0], seed=42)
