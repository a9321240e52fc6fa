"""Principal-component factor analysis in the SPSS style.

Pipeline: Pearson correlations, KMO and Bartlett adequacy checks,
eigendecomposition (cyclic Jacobi), Kaiser retention, varimax rotation
with Kaiser normalization, and regression-method factor scores.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from .exceptions import (
    ConvergenceFailure,
    NoComponentsRetained,
    RotationNotConverged,
    SingularCorrelation,
    TooSmall,
    UndefinedKMO,
    UsageError,
    ZeroCommunalityRow,
    ZeroVarianceColumn,
)
from .linreg import chi_square_sf


@dataclass(frozen=True)
class CorrelationMatrix:
    variables: tuple
    values: np.ndarray

    @property
    def p(self) -> int:
        return len(self.variables)


@dataclass(frozen=True)
class BartlettResult:
    chi2: float
    df: int
    p_value: float


@dataclass(frozen=True)
class RotationResult:
    rotated_loadings: np.ndarray
    iterations: int
    converged: bool
    rotation_matrix: np.ndarray
    criterion_history: tuple


@dataclass(frozen=True)
class FactorCard:
    factor: int
    variables: tuple  # (name, loading) pairs, strongest first
    pct_variance: int


@dataclass(frozen=True)
class FactorSolution:
    variables: tuple
    eigenvalues: np.ndarray
    pct_variance: np.ndarray
    cumulative_pct: np.ndarray
    retained: int
    loadings: np.ndarray
    rotated_loadings: np.ndarray
    communalities: np.ndarray
    rotation_iterations: int
    rotation_converged: bool
    rotation_ssl: np.ndarray
    rotation_pct: np.ndarray
    rotation_cumulative_pct: np.ndarray
    kmo: float | None
    bartlett: BartlettResult | None
    cards: tuple
    correlation: np.ndarray | None = None
    rotated: bool = True
    n_obs: int | None = None
    warnings: tuple = field(default_factory=tuple)


def _as_corr(R) -> CorrelationMatrix:
    if isinstance(R, CorrelationMatrix):
        return R
    values = np.asarray(R, dtype=float)
    return CorrelationMatrix(tuple(f"V{j + 1}" for j in range(values.shape[0])), values)


def correlation_matrix(data, names=None) -> CorrelationMatrix:
    """Pearson correlations of the columns of an ``(n, p)`` data matrix."""
    data = np.asarray(data, dtype=float)
    if data.ndim != 2:
        raise UsageError("data must be a 2-d (observations x variables) array")
    n, p = data.shape
    names = tuple(names) if names is not None else tuple(f"V{j + 1}" for j in range(p))
    if len(names) != p:
        raise UsageError(f"{len(names)} names for {p} columns")
    if n < 3:
        raise TooSmall(f"need at least 3 observations, got {n}")
    centered = data - data.mean(axis=0)
    ss = np.sqrt((centered ** 2).sum(axis=0))
    zero = [names[j] for j in np.flatnonzero(ss <= 1e-14 * np.maximum(1.0, np.abs(data).max(axis=0)))]
    if zero:
        raise ZeroVarianceColumn(f"zero-variance column(s): {', '.join(zero)}")
    z = centered / ss
    R = np.clip(z.T @ z, -1.0, 1.0)
    R = 0.5 * (R + R.T)
    np.fill_diagonal(R, 1.0)
    return CorrelationMatrix(names, R)


def _check_invertible(R):
    eig = np.linalg.eigvalsh(R)
    if eig[0] <= 1e-12 * max(1.0, eig[-1]):
        raise SingularCorrelation(
            f"correlation matrix is singular (smallest eigenvalue {eig[0]:.3g})"
        )


def bartlett_sphericity(R, n: int) -> BartlettResult:
    """Bartlett's test that the population correlation matrix is the identity."""
    R = _as_corr(R)
    p = R.p
    if n <= p:
        raise TooSmall(f"Bartlett's test needs n > p (n={n}, p={p})")
    _check_invertible(R.values)
    _, logdet = np.linalg.slogdet(R.values)
    chi2 = -(n - 1 - (2 * p + 5) / 6.0) * logdet
    chi2 = max(chi2, 0.0)
    df = p * (p - 1) // 2
    return BartlettResult(float(chi2), df, float(chi_square_sf(chi2, df)))


def partial_correlations(R) -> np.ndarray:
    """Anti-image partial correlations ``-R^-1_ij / sqrt(R^-1_ii R^-1_jj)``."""
    R = _as_corr(R).values
    _check_invertible(R)
    inv = np.linalg.inv(R)
    d = np.sqrt(np.diag(inv))
    Q = -inv / np.outer(d, d)
    np.fill_diagonal(Q, 1.0)
    return Q


def kmo(R) -> float:
    """Kaiser-Meyer-Olkin measure of sampling adequacy."""
    R = _as_corr(R).values
    Q = partial_correlations(R)
    off = ~np.eye(R.shape[0], dtype=bool)
    r2 = float((R[off] ** 2).sum())
    q2 = float((Q[off] ** 2).sum())
    if r2 == 0.0:
        raise UndefinedKMO("all off-diagonal correlations are zero; KMO is 0/0")
    return r2 / (r2 + q2)


def _off_norm(a):
    return math.sqrt(2.0 * float((np.triu(a, 1) ** 2).sum()))


def jacobi_eigh(A, tol: float = 1e-14, max_sweeps: int = 100):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues descending and
    eigenvectors as columns.
    """
    a = np.array(A, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise UsageError("matrix must be square")
    if not np.allclose(a, a.T, atol=1e-12, rtol=0):
        raise UsageError("matrix must be symmetric")
    a = 0.5 * (a + a.T)
    p = a.shape[0]
    v = np.eye(p)
    scale = max(np.linalg.norm(a), np.finfo(float).tiny)
    for sweep in range(max_sweeps):
        off = _off_norm(a)
        if off <= tol * scale:
            break
        for i in range(p - 1):
            for j in range(i + 1, p):
                aij = a[i, j]
                g = 100.0 * abs(aij)
                # negligible next to both diagonal entries: drop it
                if sweep > 3 and abs(a[i, i]) + g == abs(a[i, i]) and abs(a[j, j]) + g == abs(a[j, j]):
                    a[i, j] = a[j, i] = 0.0
                    continue
                if aij == 0.0:
                    continue
                h = a[j, j] - a[i, i]
                if abs(h) + g == abs(h):
                    t = aij / h
                else:
                    tau = 0.5 * h / aij
                    t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                ai, aj = a[:, i].copy(), a[:, j].copy()
                a[:, i] = c * ai - s * aj
                a[:, j] = s * ai + c * aj
                ai, aj = a[i, :].copy(), a[j, :].copy()
                a[i, :] = c * ai - s * aj
                a[j, :] = s * ai + c * aj
                a[i, j] = a[j, i] = 0.0
                vi, vj = v[:, i].copy(), v[:, j].copy()
                v[:, i] = c * vi - s * vj
                v[:, j] = s * vi + c * vj
    else:
        off = _off_norm(a)
        if off > tol * scale:
            raise ConvergenceFailure(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps")
    w = np.diag(a).copy()
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def _fix_signs(M):
    M = M.copy()
    for f in range(M.shape[1]):
        if M[np.argmax(np.abs(M[:, f])), f] < 0:
            M[:, f] = -M[:, f]
    return M


def pca_extract(R):
    """Principal-component extraction.

    Returns
    -------
    eigenvalues : ndarray, descending
    eigenvectors : ndarray, columns
    loadings : ndarray
        Eigenvectors scaled by ``sqrt(eigenvalue)``, each column signed so
        its largest-magnitude entry is positive.
    """
    values = _as_corr(R).values
    eigenvalues, vectors = jacobi_eigh(values)
    vectors = _fix_signs(vectors)
    loadings = vectors * np.sqrt(np.clip(eigenvalues, 0.0, None))
    return eigenvalues, vectors, loadings


def variance_table(eigenvalues, p: int | None = None):
    """Percent of variance and cumulative percent for each eigenvalue."""
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    p = len(eigenvalues) if p is None else p
    pct = 100.0 * eigenvalues / p
    return pct, np.cumsum(pct)


def kaiser_retain(eigenvalues) -> int:
    """Number of eigenvalues strictly greater than one."""
    return int(np.sum(np.asarray(eigenvalues, dtype=float) > 1.0))


def varimax_criterion(loadings) -> float:
    """``sum_f [ sum_j b^4 / p - (sum_j b^2 / p)^2 ]``."""
    b2 = np.asarray(loadings, dtype=float) ** 2
    p = b2.shape[0]
    return float(((b2 ** 2).sum(axis=0) / p - (b2.sum(axis=0) / p) ** 2).sum())


def _pair_angle(x, y):
    # angle maximizing the varimax criterion in the (x, y) plane
    p = len(x)
    u = x * x - y * y
    v = 2.0 * x * y
    A, B = u.sum(), v.sum()
    C = (u * u - v * v).sum()
    D = 2.0 * (u * v).sum()
    return 0.25 * math.atan2(D - 2.0 * A * B / p, C - (A * A - B * B) / p)


def varimax_rotate(loadings, kaiser_normalize: bool = True, tol: float = 1e-5,
                   max_iter: int = 1000) -> RotationResult:
    """Orthogonal varimax rotation by sweeps of pairwise planar rotations.

    Each sweep rotates every pair of columns by the angle that maximizes
    the criterion in that plane. Sweeps stop once the relative change in
    the criterion falls below ``tol``; ``iterations`` counts sweeps. With
    ``kaiser_normalize`` rows are scaled to unit length before rotating
    and scaled back afterwards.
    """
    L = np.array(loadings, dtype=float)
    if L.ndim != 2 or L.shape[1] < 1:
        raise UsageError("loadings must be a p x m matrix with m >= 1")
    p, m = L.shape
    if kaiser_normalize:
        h = np.sqrt((L ** 2).sum(axis=1))
        if np.any(h <= 1e-12):
            raise ZeroCommunalityRow(
                f"rows {np.flatnonzero(h <= 1e-12).tolist()} have zero communality"
            )
    else:
        h = np.ones(p)
    B = L / h[:, None]
    T = np.eye(m)
    if m == 1:
        return RotationResult(L, 1, True, T, (varimax_criterion(B),))

    history = [varimax_criterion(B)]
    converged = False
    sweeps = 0
    while sweeps < max_iter:
        sweeps += 1
        for a in range(m - 1):
            for b in range(a + 1, m):
                phi = _pair_angle(B[:, a], B[:, b])
                c, s = math.cos(phi), math.sin(phi)
                ba, bb = B[:, a].copy(), B[:, b].copy()
                B[:, a] = c * ba + s * bb
                B[:, b] = -s * ba + c * bb
                ta, tb = T[:, a].copy(), T[:, b].copy()
                T[:, a] = c * ta + s * tb
                T[:, b] = -s * ta + c * tb
        history.append(varimax_criterion(B))
        prev, cur = history[-2], history[-1]
        if abs(cur - prev) <= tol * max(abs(cur), np.finfo(float).tiny):
            converged = True
            break
    if not converged:
        warnings.warn(f"varimax did not converge in {max_iter} iterations",
                      RotationNotConverged, stacklevel=2)
    return RotationResult(B * h[:, None], sweeps, converged, T, tuple(history))


def factor_cards(rotated_loadings, variables, pct_variance, cutoff: float = 0.6):
    """Group variables under the factor(s) they load on at ``|loading| >= cutoff``."""
    M = np.asarray(rotated_loadings, dtype=float)
    cards = []
    for f in range(M.shape[1]):
        picked = [(variables[j], float(M[j, f])) for j in range(M.shape[0]) if abs(M[j, f]) >= cutoff]
        picked.sort(key=lambda item: -abs(item[1]))
        cards.append(FactorCard(f + 1, tuple(picked), int(round(float(pct_variance[f])))))
    return tuple(cards)


def summarize_solution(R, eigenvalues, loadings, rotation: RotationResult | None = None, *,
                       n_obs=None, kmo_value=None, bartlett=None, cutoff: float = 0.6,
                       messages=()) -> FactorSolution:
    """Assemble the variance-explained blocks, communalities and factor cards."""
    R = _as_corr(R)
    p = R.p
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    pct, cum = variance_table(eigenvalues, p)
    loadings = np.asarray(loadings, dtype=float)
    m = loadings.shape[1]
    rotated = rotation.rotated_loadings if rotation is not None else loadings
    ssl = (rotated ** 2).sum(axis=0)
    rpct, rcum = variance_table(ssl, p)
    return FactorSolution(
        variables=R.variables,
        eigenvalues=eigenvalues,
        pct_variance=pct,
        cumulative_pct=cum,
        retained=m,
        loadings=loadings,
        rotated_loadings=rotated,
        communalities=(loadings ** 2).sum(axis=1),
        rotation_iterations=rotation.iterations if rotation is not None else 0,
        rotation_converged=rotation.converged if rotation is not None else True,
        rotation_ssl=ssl,
        rotation_pct=rpct,
        rotation_cumulative_pct=rcum,
        kmo=kmo_value,
        bartlett=bartlett,
        cards=factor_cards(rotated, R.variables, pct[:m], cutoff),
        correlation=R.values,
        rotated=rotation is not None,
        n_obs=n_obs,
        warnings=tuple(messages),
    )


def standardize(data, means, sds):
    return (np.asarray(data, dtype=float) - means) / sds


def factor_scores(data, solution: FactorSolution, means=None, sds=None) -> np.ndarray:
    """Regression-method scores ``Z R^-1 L`` with ``L`` the rotated loadings.

    ``Z`` standardizes ``data`` with ``means``/``sds`` (defaulting to the
    data's own mean and n-1 standard deviation); ``R`` is the correlation
    matrix the solution was extracted from.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[1] != len(solution.variables):
        raise UsageError(f"data must have {len(solution.variables)} columns")
    if data.shape[0] < 2:
        raise TooSmall("need at least 2 observations to score")
    means = data.mean(axis=0) if means is None else means
    sds = data.std(axis=0, ddof=1) if sds is None else sds
    _check_invertible(solution.correlation)
    return standardize(data, means, sds) @ np.linalg.solve(solution.correlation, solution.rotated_loadings)


def analyze(data, names=None, *, retain="kaiser", rotate: bool = True,
            kaiser_normalize: bool = True, tol: float = 1e-5, max_iter: int = 1000,
            cutoff: float = 0.6) -> FactorSolution:
    """Run the full pipeline on an ``(n, p)`` data matrix.

    ``retain`` is ``"kaiser"`` or a positive integer number of components.
    """
    data = np.asarray(data, dtype=float)
    R = correlation_matrix(data, names)
    n = data.shape[0]
    eig, _, load = pca_extract(R)
    if retain == "kaiser":
        m = kaiser_retain(eig)
    else:
        m = int(retain)
        if not 1 <= m <= R.p:
            raise UsageError(f"number of components must be in 1..{R.p}, got {m}")
    if m == 0:
        raise NoComponentsRetained("no components retained: no eigenvalue exceeds 1")
    msgs = []
    try:
        kmo_value = kmo(R)
    except (UndefinedKMO, SingularCorrelation) as exc:
        kmo_value = None
        msgs.append(f"KMO not available: {exc}")
    try:
        bart = bartlett_sphericity(R, n)
    except (SingularCorrelation, TooSmall) as exc:
        bart = None
        msgs.append(f"Bartlett's test not available: {exc}")
    rotation = None
    if rotate:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", RotationNotConverged)
            rotation = varimax_rotate(load[:, :m], kaiser_normalize, tol, max_iter)
        msgs.extend(str(w.message) for w in caught)
    return summarize_solution(R, eig, load[:, :m], rotation, n_obs=n, kmo_value=kmo_value,
                              bartlett=bart, cutoff=cutoff, messages=msgs)


class PCAFactorAnalysis(TransformerMixin, BaseEstimator):
    """Principal-component factor analysis with varimax rotation.

    Parameters
    ----------
    n_factors : "kaiser" or int
        Retention rule: eigenvalues greater than one, or a fixed count.
    rotation : {"varimax", None}
    kaiser_normalize : bool
    tol, max_iter :
        Varimax stopping rule (relative criterion change, sweep cap).
    loading_cutoff : float
        Minimum absolute rotated loading for a variable to join a factor card.

    Attributes
    ----------
    solution_ : FactorSolution
    loadings_ : ndarray
        Rotated (or unrotated when ``rotation=None``) loadings.
    mean_, scale_ : ndarray
        Standardization used by :meth:`transform`.
    """

    def __init__(self, n_factors="kaiser", rotation="varimax", kaiser_normalize=True,
                 tol=1e-5, max_iter=1000, loading_cutoff=0.6):
        self.n_factors = n_factors
        self.rotation = rotation
        self.kaiser_normalize = kaiser_normalize
        self.tol = tol
        self.max_iter = max_iter
        self.loading_cutoff = loading_cutoff

    def fit(self, X, y=None):
        X = validate_data(self, X, ensure_min_samples=3)
        if self.rotation not in ("varimax", None):
            raise UsageError(f"rotation must be 'varimax' or None, got {self.rotation!r}")
        names = getattr(self, "feature_names_in_", None)
        self.solution_ = analyze(
            X, None if names is None else list(names), retain=self.n_factors,
            rotate=self.rotation == "varimax", kaiser_normalize=self.kaiser_normalize,
            tol=self.tol, max_iter=self.max_iter, cutoff=self.loading_cutoff,
        )
        self.loadings_ = self.solution_.rotated_loadings
        self.mean_ = X.mean(axis=0)
        self.scale_ = X.std(axis=0, ddof=1)
        self.score_weights_ = np.linalg.solve(self.solution_.correlation, self.loadings_)
        return self

    def transform(self, X):
        check_is_fitted(self)
        X = validate_data(self, X, reset=False)
        return standardize(X, self.mean_, self.scale_) @ self.score_weights_
