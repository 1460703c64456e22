import numpy as np
import pytest

from hiaa.datapipe import OVERALL, make_scored_sample
from hiaa.model import ModelSizes, init_model, stage1_param_tree
from hiaa.taxonomy import CANONICAL_ORDER

TINY_SIZES = ModelSizes(n_features=5, emb_dim=3, hidden_dim=8, ffn_width=4, voter_hidden=4)


def randomize_tree(tree, rng, scale=0.5):
    for arr in tree.values():
        arr[...] = rng.normal(0.0, scale, size=arr.shape)


def make_tiny_model(seed, randomized=True):
    model = init_model(seed, TINY_SIZES)
    if randomized:
        randomize_tree(stage1_param_tree(model), np.random.default_rng(seed + 1))
    return model


def random_sample(rng, f, sample_id="s"):
    if f == 0:
        scores = {OVERALL: float(rng.uniform(0.05, 0.95))}
    else:
        scores = {d: float(rng.uniform(0.05, 0.95)) for d in CANONICAL_ORDER}
    return make_scored_sample(sample_id, "manual" if f else "source-a", f, scores,
                              feature_seed=int(rng.integers(0, 2**31)))


def finite_diff_grads(loss_fn, tree, step=1e-5):
    """Central finite differences of loss_fn with respect to every entry."""
    grads = {}
    for name, arr in tree.items():
        g = np.zeros_like(arr)
        it = np.nditer(arr, flags=["multi_index"], op_flags=["readwrite"])
        while not it.finished:
            idx = it.multi_index
            old = float(arr[idx])
            arr[idx] = old + step
            up = loss_fn()
            arr[idx] = old - step
            down = loss_fn()
            arr[idx] = old
            g[idx] = (up - down) / (2.0 * step)
            it.iternext()
        grads[name] = g
    return grads


def gradients_agree(analytic, numeric, rel_tol=1e-4, abs_tol=1e-9):
    """Per-entry: relative error < rel_tol, or both effectively zero."""
    for name, a in analytic.items():
        n = numeric[name]
        diff = np.abs(a - n)
        denom = np.maximum(np.abs(a), np.abs(n))
        ok = (diff <= abs_tol) | (diff / np.maximum(denom, 1e-300) < rel_tol)
        if not np.all(ok):
            worst = np.unravel_index(np.argmax(diff / np.maximum(denom, 1e-300)), a.shape)
            return False, f"{name}{list(worst)}: analytic={a[worst]:.3e} fd={n[worst]:.3e}"
    return True, ""


@pytest.fixture
def rng():
    return np.random.default_rng(20240617)
