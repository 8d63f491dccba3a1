"""Joint low-rank embedding of a training day and a test day.

Each day's feature rows are summarized by the closed-form minimizer R of

    0.5 * ||X - R X||_F^2  +  lam * ||R||_*

which reconstructs every frame from the other frames of the same day.
R captures how the day's frames relate to each other, with magnitude
saturated away, so two days running different motion programs still get
similar R structure while a mechanical fault breaks it.  The two days
are then embedded jointly: eigenvectors of a cost that charges both for
violating each day's own R and for separating corresponding frames.
The Frobenius distance between the two halves of that embedding is the
anomaly score.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ._kernels import lowrank_prox_gradient
from .errors import ParameterError

# lam in the reconstruction objective; the closed form keeps singular
# values above sqrt(SINGULAR_VALUE_GATE), i.e. above 1 for the default.
SINGULAR_VALUE_GATE = 1.0

# eigenvalues closer than this are treated as one degenerate block
EIGEN_TIE_TOL = 1e-10

NORMALIZE_MODES = ("spectral", "zscore", "none")

# spectral mode puts the training day's top singular value here; must
# exceed sqrt(SINGULAR_VALUE_GATE) or nothing survives the gate
DEFAULT_SCALE_TARGET = 2.0

# requested embedding width before capping at the retained rank
DEFAULT_EMBED_DIM = 10


@dataclass
class ReconstructionCoeffs:
    """Self-reconstruction matrix of one day (N x N, symmetric, PSD)."""

    matrix: np.ndarray
    retained_rank: int


@dataclass
class JointEmbedding:
    """The d-dimensional joint embedding of a source/target day pair.

    source and target are the N x d halves of the stacked eigenvector
    matrix; eigenvalues are the corresponding d smallest cost
    eigenvalues in ascending order.
    """

    source: np.ndarray
    target: np.ndarray
    eigenvalues: np.ndarray
    mu: float
    embed_dim: int


def _as_matrix(x):
    data = getattr(x, "data", x)
    arr = np.ascontiguousarray(data, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ParameterError("expected a 2-d feature matrix")
    if not np.all(np.isfinite(arr)):
        raise ParameterError("feature matrix contains non-finite entries")
    return arr


def lre_coefficients(x, lam=SINGULAR_VALUE_GATE):
    """Closed-form low-rank self-reconstruction of the rows of x.

    With X = U S V^T, keep the singular directions with s > sqrt(lam)
    and set R = U_kept (I - lam S_kept^-2) U_kept^T.  R is N x N and
    free of the feature dimension; if no singular value clears the gate,
    R is the zero matrix.
    """
    arr = _as_matrix(x)
    if not np.isfinite(lam) or lam <= 0:
        raise ParameterError("lam must be finite and > 0, got %r" % (lam,))
    n = arr.shape[0]
    u, s, _ = np.linalg.svd(arr, full_matrices=False)
    keep = s > np.sqrt(lam)
    rank = int(np.count_nonzero(keep))
    if rank == 0:
        return ReconstructionCoeffs(matrix=np.zeros((n, n)), retained_rank=0)
    uk = u[:, keep]
    weights = 1.0 - lam / (s[keep] ** 2)
    r = (uk * weights) @ uk.T
    r = 0.5 * (r + r.T)
    return ReconstructionCoeffs(matrix=r, retained_rank=rank)


def lre_objective(x, r, lam=SINGULAR_VALUE_GATE):
    """Value of 0.5*||X - R X||_F^2 + lam*||R||_* at a candidate R."""
    arr = _as_matrix(x)
    r = np.asarray(r, dtype=float)
    resid = arr - r @ arr
    nuclear = float(np.sum(np.linalg.svd(r, compute_uv=False)))
    return float(0.5 * np.sum(resid * resid) + lam * nuclear)


def prox_gradient_reference(x, lam=SINGULAR_VALUE_GATE, n_iter=10000):
    """Best objective value from the iterative proximal-gradient solver.

    Slow reference used to cross-check the closed form; see _kernels.
    """
    arr = _as_matrix(x)
    if n_iter < 1:
        raise ParameterError("n_iter must be >= 1")
    best, _ = lowrank_prox_gradient(arr, float(lam), int(n_iter))
    return float(best)


def block_reconstruction(r_source, r_target):
    """Block-diagonal stack of the two days' reconstruction matrices."""
    rs = np.asarray(r_source, dtype=float)
    rt = np.asarray(r_target, dtype=float)
    if rs.ndim != 2 or rs.shape[0] != rs.shape[1]:
        raise ParameterError("r_source must be square")
    if rt.shape != rs.shape:
        raise ParameterError("r_source and r_target must have identical shapes, got %s and %s"
                             % (rs.shape, rt.shape))
    n = rs.shape[0]
    out = np.zeros((2 * n, 2 * n))
    out[:n, :n] = rs
    out[n:, n:] = rt
    return out


def correspondence_laplacian(n):
    """Graph Laplacian pairing frame j of the source with frame j of the
    target: [[I, -I], [-I, I]].  For stacked f = [f_s; f_t],
    f^T L f = ||f_s - f_t||^2."""
    if n < 1:
        raise ParameterError("n must be >= 1, got %r" % (n,))
    eye = np.eye(n)
    return np.block([[eye, -eye], [-eye, eye]])


def standardize_pair(x_source, x_target, std_floor=1e-2):
    """Column-standardize both days with the source (training) statistics.

    Columns whose training variance is exactly zero are forced to zero
    in both days.  Near-zero training deviations are floored at
    std_floor times the largest column deviation, otherwise noise-level
    columns blow up into huge z-scores that drown the real structure.
    """
    xs = _as_matrix(x_source)
    xt = _as_matrix(x_target)
    if xs.shape[1] != xt.shape[1]:
        raise ParameterError("source and target must share the feature dimension")
    if not 0 <= std_floor < 1:
        raise ParameterError("std_floor must be in [0, 1), got %r" % (std_floor,))
    mean = xs.mean(axis=0)
    std = xs.std(axis=0)
    top = std.max()
    if top == 0.0:
        return np.zeros_like(xs), np.zeros_like(xt)
    scale = np.maximum(std, std_floor * top)
    zs = (xs - mean) / scale
    zt = (xt - mean) / scale
    dead = std == 0.0
    if np.any(dead):
        zs[:, dead] = 0.0
        zt[:, dead] = 0.0
    return zs, zt


def normalize_pair(x_source, x_target, scale_target=DEFAULT_SCALE_TARGET):
    """Scale both days by one factor set from the training day's spectrum.

    The factor makes the source's top singular value equal scale_target,
    so with the default gate exactly the strongest shared direction
    survives into R and the embedding compares the two days by that
    direction alone.  Columns are left uncentered on purpose: the mean
    frame pattern is the stationary structure the comparison relies on,
    and z-scoring it away leaves only program-specific residue.  An
    all-zero source is returned unscaled.
    """
    xs = _as_matrix(x_source)
    xt = _as_matrix(x_target)
    if xs.shape[1] != xt.shape[1]:
        raise ParameterError("source and target must share the feature dimension")
    if not np.isfinite(scale_target) or scale_target <= 0:
        raise ParameterError("scale_target must be finite and > 0, got %r" % (scale_target,))
    top = float(np.linalg.svd(xs, compute_uv=False)[0])
    if top == 0.0:
        return xs.copy(), xt.copy()
    gain = scale_target / top
    return xs * gain, xt * gain


def _normalized_pair(xs, xt, normalize, std_floor, scale_target):
    if normalize == "spectral":
        return normalize_pair(xs, xt, scale_target=scale_target)
    if normalize == "zscore":
        return standardize_pair(xs, xt, std_floor=std_floor)
    if normalize == "none":
        return xs, xt
    raise ParameterError("normalize must be one of %s, got %r"
                         % (NORMALIZE_MODES, normalize))


def _cost_and_ranks(x_source, x_target, mu, lam, normalize, std_floor, scale_target):
    xs = _as_matrix(x_source)
    xt = _as_matrix(x_target)
    if xs.shape[1] != xt.shape[1]:
        raise ParameterError("source and target must share the feature dimension")
    if not np.isfinite(mu) or not 0.0 <= mu <= 1.0:
        raise ParameterError("mu must be in [0, 1], got %r" % (mu,))
    n = min(xs.shape[0], xt.shape[0])
    xs = xs[:n]
    xt = xt[:n]
    xs, xt = _normalized_pair(xs, xt, normalize, std_floor, scale_target)
    cs = lre_coefficients(xs, lam=lam)
    ct = lre_coefficients(xt, lam=lam)
    r = block_reconstruction(cs.matrix, ct.matrix)
    resid = np.eye(2 * n) - r
    lap = correspondence_laplacian(n)
    m = (1.0 - mu) * (resid.T @ resid) + 2.0 * mu * lap
    return 0.5 * (m + m.T), cs.retained_rank, ct.retained_rank


def alignment_cost_matrix(x_source, x_target, mu, lam=SINGULAR_VALUE_GATE,
                          normalize="spectral", std_floor=1e-2,
                          scale_target=DEFAULT_SCALE_TARGET):
    """The symmetric PSD cost whose low eigenvectors embed both days.

    M = (1 - mu) (I - R)^T (I - R) + 2 mu L with R the block-diagonal
    reconstruction stack and L the frame-correspondence Laplacian.
    Unequal frame counts are truncated to the shorter day.  normalize
    selects how the pair is conditioned first: "spectral" (shared gain
    from the source spectrum, the default), "zscore" (column
    standardization by source statistics), or "none".
    """
    m, _, _ = _cost_and_ranks(x_source, x_target, mu, lam, normalize,
                              std_floor, scale_target)
    return m


def _first_significant_row(col, tol=1e-8):
    idx = np.flatnonzero(np.abs(col) > tol)
    return int(idx[0]) if idx.size else col.shape[0]


def _fix_column_signs(v):
    for j in range(v.shape[1]):
        col = v[:, j]
        i = int(np.argmax(np.abs(col)))
        if col[i] < 0:
            v[:, j] = -col
    return v


def _canonical_eigenvectors(w, v, d, tie_tol=EIGEN_TIE_TOL):
    """Make the first d eigenvector columns deterministic.

    Eigenvalues closer than tie_tol form a degenerate block whose basis
    is solver-dependent; each block touching the first d columns is
    replaced by the pivoted-QR basis of its spectral projector, with
    columns ordered by their first significant row.  Signs are fixed so
    the largest-magnitude entry of every column is positive.
    """
    v = v.copy()
    n = w.shape[0]
    start = 0
    while start < min(d, n):
        end = start + 1
        while end < n and w[end] - w[end - 1] < tie_tol:
            end += 1
        if end - start > 1:
            block = v[:, start:end]
            projector = block @ block.T
            q = scipy.linalg.qr(projector, mode="economic", pivoting=True)[0]
            basis = q[:, :end - start]
            basis = _fix_column_signs(basis)
            order = sorted(range(basis.shape[1]),
                           key=lambda j: (_first_significant_row(basis[:, j]), j))
            v[:, start:end] = basis[:, order]
        start = end
    return _fix_column_signs(v[:, :d])


def joint_embed(x_source, x_target, mu=0.5, embed_dim=None, lam=SINGULAR_VALUE_GATE,
                normalize="spectral", std_floor=1e-2,
                scale_target=DEFAULT_SCALE_TARGET):
    """Embed both days with the embed_dim smallest cost eigenvectors.

    Returns a JointEmbedding whose stacked [source; target] columns are
    orthonormal.  An explicit embed_dim must lie in [1, 2N].  The
    default None asks for DEFAULT_EMBED_DIM capped three ways (never
    below 1): at both days' retained reconstruction rank, so the width
    tracks how much structure cleared the singular-value gate; and at
    the correspondence gap, keeping only eigenvalues within 4 mu of the
    smallest one.  4 mu is what one fully anti-matched direction costs,
    so modes at or past that level separate the days by construction
    and would pollute the distance; dropping them is also what makes
    two identical days embed at distance zero for every mu.  Degenerate
    eigenvalue blocks are canonicalized so repeated calls agree bitwise.
    """
    m, rank_s, rank_t = _cost_and_ranks(x_source, x_target, mu, lam, normalize,
                                        std_floor, scale_target)
    two_n = m.shape[0]
    w, v = np.linalg.eigh(m)
    if embed_dim is None:
        # the anti-matched twin of the floor mode sits exactly at
        # w[0] + 4 mu, so back the cutoff off by a relative slack
        cut = w[0] + 4.0 * mu - 1e-9 * max(1.0, float(w[-1]))
        within_gap = int(np.count_nonzero(w < cut)) if mu > 0 else 1
        embed_dim = max(1, min(DEFAULT_EMBED_DIM, rank_s, rank_t,
                               two_n // 2, within_gap))
    if not isinstance(embed_dim, (int, np.integer)) or not 1 <= embed_dim <= two_n:
        raise ParameterError("embed_dim must be an integer in [1, %d], got %r"
                             % (two_n, embed_dim))
    f = _canonical_eigenvectors(w, v, int(embed_dim))
    n = two_n // 2
    return JointEmbedding(source=f[:n], target=f[n:], eigenvalues=w[:embed_dim].copy(),
                          mu=float(mu), embed_dim=int(embed_dim))


def aligned_distance(embedding):
    """Frobenius distance between the source and target embedding halves."""
    diff = embedding.source - embedding.target
    return float(np.sqrt(np.sum(diff * diff)))


def write_embedding_csv(embedding, path):
    """Dump the embedding as CSV: domain tag column then e0..e{d-1}."""
    d = embedding.embed_dim
    header = "domain," + ",".join("e%d" % i for i in range(d))
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for tag, half in (("source", embedding.source), ("target", embedding.target)):
            for row in half:
                fh.write(tag + "," + ",".join(format(v, ".17g") for v in row) + "\n")
