"""Reference detector: PCA projection distance.

Fits principal components to the training day's feature rows and scores
a test day by the squared Frobenius distance between the two days'
frame-wise projections.  This is the classic approach the alignment
detector is measured against: it reacts to any spectral change, which
makes it loud on task changes, and its projection can discard exactly
the directions a novel fault lives in.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError


@dataclass
class PcaModel:
    """Principal subspace of the training features.

    components is K x p with orthonormal columns (descending variance),
    mean is the training column mean, explained_variance the per-component
    sample variances.
    """

    components: np.ndarray
    mean: np.ndarray
    explained_variance: np.ndarray

    @property
    def p(self):
        return self.components.shape[1]


def _as_matrix(x):
    data = getattr(x, "data", x)
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ParameterError("expected a 2-d feature matrix")
    if not np.all(np.isfinite(arr)):
        raise ParameterError("feature matrix contains non-finite entries")
    return arr


def _fix_column_signs(v):
    # deterministic orientation: the largest-magnitude entry of each column is positive
    for j in range(v.shape[1]):
        col = v[:, j]
        i = int(np.argmax(np.abs(col)))
        if col[i] < 0:
            v[:, j] = -col
    return v


def fit_pca(x, p):
    """Fit a p-component PCA model to training feature rows."""
    arr = _as_matrix(x)
    n, k = arr.shape
    if not 1 <= p <= min(n, k):
        raise ParameterError("p must satisfy 1 <= p <= min(N, K) = %d, got %r" % (min(n, k), p))
    mean = arr.mean(axis=0)
    centred = arr - mean
    _, s, vt = np.linalg.svd(centred, full_matrices=False)
    components = _fix_column_signs(vt[:p].T.copy())
    explained = (s[:p] ** 2) / max(n - 1, 1)
    return PcaModel(components=components, mean=mean, explained_variance=explained)


def components_for_energy(x, energy=0.95):
    """Smallest p whose leading components capture ``energy`` of the variance."""
    arr = _as_matrix(x)
    if not 0 < energy <= 1:
        raise ParameterError("energy must be in (0, 1], got %r" % (energy,))
    centred = arr - arr.mean(axis=0)
    s = np.linalg.svd(centred, compute_uv=False)
    power = s ** 2
    total = power.sum()
    if total == 0.0:
        return 1
    frac = np.cumsum(power) / total
    return int(np.searchsorted(frac, energy - 1e-12) + 1)


def pca_distance(x_source, x_target, model):
    """Squared Frobenius distance between projected source and target rows.

    Both matrices are centred with the training mean and projected onto
    the model's components; unequal row counts are truncated to the
    shorter day.
    """
    xs = _as_matrix(x_source)
    xt = _as_matrix(x_target)
    k = model.components.shape[0]
    if xs.shape[1] != k or xt.shape[1] != k:
        raise ParameterError(
            "feature width mismatch: model expects K=%d, got %d and %d"
            % (k, xs.shape[1], xt.shape[1]))
    n = min(xs.shape[0], xt.shape[0])
    ps = (xs[:n] - model.mean) @ model.components
    pt = (xt[:n] - model.mean) @ model.components
    diff = ps - pt
    return float(np.sum(diff * diff))


def pca_hypothesis_test(distance, epsilon):
    """Flag a day whose projection distance exceeds the threshold."""
    if not np.isfinite(distance) or distance < 0:
        raise ParameterError("distance must be finite and >= 0, got %r" % (distance,))
    if not np.isfinite(epsilon) or epsilon <= 0:
        raise ParameterError("epsilon must be finite and > 0, got %r" % (epsilon,))
    return "anomalous" if distance > epsilon else "healthy"


def model_to_dict(model):
    return {
        "components": model.components.tolist(),
        "mean": model.mean.tolist(),
        "explained_variance": model.explained_variance.tolist(),
    }


def model_from_dict(payload):
    try:
        return PcaModel(components=np.asarray(payload["components"], dtype=float),
                        mean=np.asarray(payload["mean"], dtype=float),
                        explained_variance=np.asarray(payload["explained_variance"], dtype=float))
    except KeyError as exc:
        raise ParameterError("model payload missing key %s" % exc)


def save_model(model, path):
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh)
        fh.write("\n")


def load_model(path):
    with open(path) as fh:
        return model_from_dict(json.load(fh))
