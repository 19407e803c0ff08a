"""Phase-1 shape learning.

Each shape defines a scalar transform t(xi); the prediction set at size s is
the level set {xi : t(xi) <= s}.  Combinators take the min (union) or max
(intersection) of their component transforms, so a single calibrated size
covers the whole composite.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Union as TUnion

import numpy as np

from . import calibrate
from .calibrate import CalibResult
from .errors import (
    ClusterDegeneracyError,
    DegenerateDataError,
    DegeneratePolytopeError,
    InvalidArgumentError,
    TooFineGridError,
)

DEFAULT_RIDGE = 1e-8
_GRID_GUARD = 10**6


def _points_of(data) -> np.ndarray:
    pts = getattr(data, "points", data)
    pts = np.asarray(pts, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 1:
        raise InvalidArgumentError("need a 2-d point array with at least one row")
    if not np.all(np.isfinite(pts)):
        raise InvalidArgumentError("data must be finite")
    return pts


def _freeze(arr, ndim) -> np.ndarray:
    out = np.array(arr, dtype=float, copy=True)
    if out.ndim != ndim:
        raise InvalidArgumentError(f"expected {ndim}-d array, got shape {out.shape}")
    if not np.all(np.isfinite(out)):
        raise InvalidArgumentError("shape parameters must be finite")
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class Ellipsoid:
    """t(xi) = (xi - center)' sigma^{-1} (xi - center), sigma SPD."""

    center: np.ndarray
    sigma: np.ndarray

    variant = "ellipsoid"

    def __post_init__(self):
        center = _freeze(self.center, 1)
        sigma = _freeze(self.sigma, 2)
        m = center.size
        if sigma.shape != (m, m):
            raise InvalidArgumentError("sigma must be m x m")
        if not np.allclose(sigma, sigma.T, atol=1e-12):
            raise InvalidArgumentError("sigma must be symmetric")
        try:
            chol = np.linalg.cholesky(sigma)
        except np.linalg.LinAlgError as exc:
            raise DegenerateDataError("sigma is not positive definite") from exc
        chol.flags.writeable = False
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "_chol", chol)

    @property
    def dim(self) -> int:
        return self.center.size

    @property
    def chol(self) -> np.ndarray:
        """Lower-triangular L with sigma = L L'."""
        return self._chol


@dataclass(frozen=True, eq=False)
class DiagEllipsoid:
    """Axis-aligned ellipsoid: t(xi) = sum_j (xi_j - center_j)^2 / variances_j."""

    center: np.ndarray
    variances: np.ndarray

    variant = "diag_ellipsoid"

    def __post_init__(self):
        center = _freeze(self.center, 1)
        variances = _freeze(self.variances, 1)
        if variances.size != center.size:
            raise InvalidArgumentError("variances must match center length")
        if np.any(variances <= 0):
            raise DegenerateDataError("variances must be positive")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "variances", variances)

    @property
    def dim(self) -> int:
        return self.center.size


@dataclass(frozen=True, eq=False)
class Ball:
    """Isotropic squared distance: t(xi) = ||xi - center||^2."""

    center: np.ndarray

    variant = "ball"

    def __post_init__(self):
        object.__setattr__(self, "center", _freeze(self.center, 1))

    @property
    def dim(self) -> int:
        return self.center.size


@dataclass(frozen=True, eq=False)
class Polytope:
    """Half-space set {xi : rows xi <= offsets} with a strict interior point.

    t(xi) = max_i rows_i'(xi - interior) / (offsets_i - rows_i' interior); the
    level set at s = 1 is the polytope itself, smaller s shrinks it toward
    the interior point.
    """

    rows: np.ndarray
    offsets: np.ndarray
    interior: np.ndarray

    variant = "polytope"

    def __post_init__(self):
        rows = _freeze(self.rows, 2)
        offsets = _freeze(self.offsets, 1)
        interior = _freeze(self.interior, 1)
        if rows.shape[0] != offsets.size or rows.shape[0] < 1:
            raise InvalidArgumentError("rows and offsets must align")
        if rows.shape[1] != interior.size:
            raise InvalidArgumentError("interior point dimension mismatch")
        slack = offsets - rows @ interior
        if np.any(slack <= 0):
            raise InvalidArgumentError(
                "interior point must satisfy every half-space strictly"
            )
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "interior", interior)

    @property
    def dim(self) -> int:
        return self.rows.shape[1]


@dataclass(frozen=True, eq=False)
class PcaEllipsoid:
    """Ellipsoid in a projected subspace: t(xi) = (M xi - mu)' S^{-1} (M xi - mu)."""

    projection: np.ndarray
    center_reduced: np.ndarray
    sigma_reduced: np.ndarray

    variant = "pca_ellipsoid"

    def __post_init__(self):
        projection = _freeze(self.projection, 2)
        center = _freeze(self.center_reduced, 1)
        sigma = _freeze(self.sigma_reduced, 2)
        r = projection.shape[0]
        if center.size != r or sigma.shape != (r, r):
            raise InvalidArgumentError("reduced parameters must match projection rows")
        try:
            chol = np.linalg.cholesky(sigma)
        except np.linalg.LinAlgError as exc:
            raise DegenerateDataError("reduced sigma is not positive definite") from exc
        chol.flags.writeable = False
        object.__setattr__(self, "projection", projection)
        object.__setattr__(self, "center_reduced", center)
        object.__setattr__(self, "sigma_reduced", sigma)
        object.__setattr__(self, "_chol", chol)

    @property
    def dim(self) -> int:
        return self.projection.shape[1]

    @property
    def rank(self) -> int:
        return self.projection.shape[0]

    @property
    def chol(self) -> np.ndarray:
        return self._chol


@dataclass(frozen=True, eq=False)
class BoxGrid:
    """Union of axis-aligned cubes: t(xi) = min_i ||xi - centers_i||_inf / half_width."""

    centers: np.ndarray
    half_width: float

    variant = "box_grid"

    def __post_init__(self):
        centers = _freeze(self.centers, 2)
        hw = float(self.half_width)
        if not (hw > 0 and np.isfinite(hw)):
            raise InvalidArgumentError("half_width must be positive")
        if centers.shape[0] < 1:
            raise InvalidArgumentError("need at least one box")
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "half_width", hw)

    @property
    def dim(self) -> int:
        return self.centers.shape[1]


_BASIC = (Ellipsoid, DiagEllipsoid, Ball, Polytope, PcaEllipsoid, BoxGrid)


def _check_components(components):
    components = tuple(components)
    if not components:
        raise InvalidArgumentError("combinator needs at least one component")
    dims = set()
    for comp in components:
        if not isinstance(comp, _BASIC):
            raise InvalidArgumentError(
                "combinators accept basic shapes only (no nesting)"
            )
        dims.add(comp.dim)
    if len(dims) != 1:
        raise InvalidArgumentError("component dimensions differ")
    return components


@dataclass(frozen=True, eq=False)
class Union:
    """t(xi) = min over components; membership in any component level set."""

    components: tuple

    variant = "union"

    def __post_init__(self):
        object.__setattr__(self, "components", _check_components(self.components))

    @property
    def dim(self) -> int:
        return self.components[0].dim


@dataclass(frozen=True, eq=False)
class Intersection:
    """t(xi) = max over components; membership in every component level set.

    By default every component acts on the full vector.  With ``blocks``, the
    components act on disjoint coordinate groups instead: component i sees
    xi[blocks[i]], and the blocks together must cover every coordinate exactly
    once.  This is the max-map over a product of per-block sets, the form used
    to calibrate one shared size for constraint-wise uncertainty.
    """

    components: tuple
    blocks: Optional[tuple] = None

    variant = "intersection"

    def __post_init__(self):
        if self.blocks is None:
            object.__setattr__(self, "components", _check_components(self.components))
            return
        components = tuple(self.components)
        blocks = tuple(tuple(int(i) for i in blk) for blk in self.blocks)
        if len(blocks) != len(components) or not components:
            raise InvalidArgumentError("need one coordinate block per component")
        seen = []
        for comp, blk in zip(components, blocks):
            if not isinstance(comp, _BASIC):
                raise InvalidArgumentError(
                    "combinators accept basic shapes only (no nesting)"
                )
            if len(blk) == 0 or any(i < 0 for i in blk):
                raise InvalidArgumentError("coordinate blocks must be non-empty")
            if comp.dim != len(blk):
                raise InvalidArgumentError(
                    f"component dimension {comp.dim} != block length {len(blk)}"
                )
            seen.extend(blk)
        if len(set(seen)) != len(seen):
            raise InvalidArgumentError("coordinate blocks overlap")
        if sorted(seen) != list(range(len(seen))):
            raise InvalidArgumentError(
                "coordinate blocks must partition 0..m-1 with no gaps"
            )
        object.__setattr__(self, "components", components)
        object.__setattr__(self, "blocks", blocks)

    @property
    def dim(self) -> int:
        if self.blocks is None:
            return self.components[0].dim
        return sum(len(blk) for blk in self.blocks)


Shape = TUnion[Ellipsoid, DiagEllipsoid, Ball, Polytope, PcaEllipsoid, BoxGrid,
               Union, Intersection]


@dataclass(frozen=True, eq=False)
class PredictionSet:
    """A calibrated set {xi : t(xi) <= size}."""

    shape: Shape
    size: float
    calib: CalibResult

    @property
    def dim(self) -> int:
        return self.shape.dim

    def contains(self, xi) -> bool:
        return bool(transform_eval(self.shape, xi) <= self.size)


# ---------------------------------------------------------------------------
# transforms


def transform_values(shape: Shape, points) -> np.ndarray:
    """Vectorized transform over an (n, m) array of points."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise InvalidArgumentError("points must be a 2-d array")
    if pts.shape[1] != shape.dim:
        raise InvalidArgumentError(
            f"points have dimension {pts.shape[1]}, shape expects {shape.dim}"
        )
    if isinstance(shape, Ellipsoid):
        diff = pts - shape.center
        w = np.linalg.solve(shape.chol, diff.T)
        return np.sum(w * w, axis=0)
    if isinstance(shape, DiagEllipsoid):
        diff = pts - shape.center
        return np.sum(diff * diff / shape.variances, axis=1)
    if isinstance(shape, Ball):
        diff = pts - shape.center
        return np.sum(diff * diff, axis=1)
    if isinstance(shape, Polytope):
        slack = shape.offsets - shape.rows @ shape.interior
        vals = (pts - shape.interior) @ shape.rows.T / slack
        return np.max(vals, axis=1)
    if isinstance(shape, PcaEllipsoid):
        proj = pts @ shape.projection.T - shape.center_reduced
        w = np.linalg.solve(shape.chol, proj.T)
        return np.sum(w * w, axis=0)
    if isinstance(shape, BoxGrid):
        # chunk over boxes to keep the intermediate (n, K, m) array bounded
        best = np.full(pts.shape[0], np.inf)
        step = max(1, 10**7 // max(1, pts.shape[0] * pts.shape[1]))
        for lo in range(0, shape.centers.shape[0], step):
            block = shape.centers[lo : lo + step]
            dist = np.max(np.abs(pts[:, None, :] - block[None, :, :]), axis=2)
            best = np.minimum(best, dist.min(axis=1))
        return best / shape.half_width
    if isinstance(shape, Union):
        vals = [transform_values(comp, pts) for comp in shape.components]
        return np.min(vals, axis=0)
    if isinstance(shape, Intersection):
        if shape.blocks is None:
            vals = [transform_values(comp, pts) for comp in shape.components]
        else:
            vals = [
                transform_values(comp, pts[:, list(blk)])
                for comp, blk in zip(shape.components, shape.blocks)
            ]
        return np.max(vals, axis=0)
    raise InvalidArgumentError(f"unknown shape {shape!r}")


def transform_eval(shape: Shape, xi) -> float:
    xi = np.asarray(xi, dtype=float).reshape(-1)
    return float(transform_values(shape, xi[None, :])[0])


# ---------------------------------------------------------------------------
# fitting


def _regularize_spd(sigma: np.ndarray, ridge: float) -> np.ndarray:
    m = sigma.shape[0]
    tr = float(np.trace(sigma))
    if tr <= 0:
        raise DegenerateDataError("covariance has zero trace; data are a single point")
    level = ridge * tr / m
    lam_min = float(np.linalg.eigvalsh(sigma)[0])
    if lam_min <= level:
        sigma = sigma + level * np.eye(m)
    return sigma


def fit_ellipsoid(phase1, mode: str = "full", ridge: float = DEFAULT_RIDGE) -> Shape:
    """Fit an ellipsoidal shape: sample mean plus (regularized) covariance.

    mode "full" keeps the whole covariance matrix, "diag" its diagonal, and
    "ball" replaces it with the identity.
    """
    pts = _points_of(phase1)
    n, m = pts.shape
    mu = pts.mean(axis=0)
    if mode == "ball":
        return Ball(center=mu)
    if n > 1:
        cov = np.cov(pts, rowvar=False, ddof=1).reshape(m, m)
    else:
        cov = np.zeros((m, m))
    if mode == "full":
        return Ellipsoid(center=mu, sigma=_regularize_spd(cov, ridge))
    if mode == "diag":
        var = np.diag(cov).copy()
        tr = float(var.sum())
        if tr <= 0:
            raise DegenerateDataError("all coordinates have zero variance")
        level = ridge * tr / m
        var[var <= level] += level
        return DiagEllipsoid(center=mu, variances=var)
    raise InvalidArgumentError(f"unknown mode {mode!r}")


def fit_polytope_box(phase1) -> Polytope:
    """Axis-aligned bounding box of the data as 2m half-spaces."""
    pts = _points_of(phase1)
    n, m = pts.shape
    if n < 2:
        raise InvalidArgumentError("need at least two points for a box")
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    if np.any(hi - lo <= 0):
        raise DegenerateDataError("a coordinate has zero width")
    rows = np.vstack([np.eye(m), -np.eye(m)])
    offsets = np.concatenate([hi, -lo])
    return Polytope(rows=rows, offsets=offsets, interior=(lo + hi) / 2.0)


def chebyshev_center(rows_or_shape, offsets=None):
    """Center and radius of the largest inscribed ball of a polytope.

    Accepts either a Polytope shape or raw (rows, offsets) half-space data;
    the latter form also works for sets with no known interior point.
    """
    from . import conic

    if isinstance(rows_or_shape, Polytope):
        rows, offs = rows_or_shape.rows, rows_or_shape.offsets
    else:
        rows = np.asarray(rows_or_shape, dtype=float)
        offs = np.asarray(offsets, dtype=float).reshape(-1)
        if rows.ndim != 2 or rows.shape[0] != offs.size:
            raise InvalidArgumentError("rows and offsets must align")
    m = rows.shape[1]
    norms = np.linalg.norm(rows, axis=1)
    # max r  s.t.  rows z + r*||rows_i|| <= offsets
    c = np.zeros(m + 1)
    c[m] = -1.0
    A = np.hstack([rows, norms[:, None]])
    prog = conic.ConicProgram(c=c, A=A, b=offs, cones=(conic.Nonneg(offs.size),))
    sol = conic.solve(prog)
    if sol.status is conic.SolveStatus.UNBOUNDED:
        raise DegeneratePolytopeError("polytope is unbounded")
    if sol.status is not conic.SolveStatus.OPTIMAL:
        raise DegeneratePolytopeError(f"center LP ended with {sol.status.value}")
    radius = float(sol.x[m])
    if radius <= 0:
        raise DegeneratePolytopeError("polytope has empty interior")
    return sol.x[:m].copy(), radius


def polytope_from_halfspaces(rows, offsets) -> Polytope:
    """Build a Polytope from user half-spaces, locating an interior point."""
    center, _ = chebyshev_center(rows, offsets)
    return Polytope(rows=rows, offsets=offsets, interior=center)


def _kmeans(pts: np.ndarray, k: int, seed: int):
    n = pts.shape[0]
    rng = np.random.Generator(np.random.PCG64(seed))
    centers = np.empty((k, pts.shape[1]))
    centers[0] = pts[rng.integers(n)]
    d2 = np.sum((pts - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers[j] = pts[rng.integers(n)]
        else:
            centers[j] = pts[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, np.sum((pts - centers[j]) ** 2, axis=1))

    repaired = False
    labels = None
    for _ in range(100):
        dist = np.sum((pts[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        labels = np.argmin(dist, axis=1)
        counts = np.bincount(labels, minlength=k)
        if np.any(counts == 0):
            if repaired:
                raise ClusterDegeneracyError(
                    "empty cluster persists; use a smaller k"
                )
            repaired = True
            assigned = dist[np.arange(n), labels]
            for j in np.flatnonzero(counts == 0):
                far = int(np.argmax(assigned))
                centers[j] = pts[far]
                assigned[far] = -1.0
            continue
        new_centers = np.vstack(
            [pts[labels == j].mean(axis=0) for j in range(k)]
        )
        move = float(np.max(np.linalg.norm(new_centers - centers, axis=1)))
        centers = new_centers
        if move <= 1e-8:
            break
    return labels, centers


def cluster_union(phase1, k: int, mode: str = "full", seed: int = 0,
                  ridge: float = DEFAULT_RIDGE) -> Shape:
    """k-means the data and fit one ellipsoid per cluster; union of the fits."""
    pts = _points_of(phase1)
    if k < 1:
        raise InvalidArgumentError("k must be >= 1")
    if k == 1:
        return fit_ellipsoid(pts, mode=mode, ridge=ridge)
    if 2 * k > pts.shape[0]:
        raise ClusterDegeneracyError(
            f"{k} clusters cannot all hold >= 2 of {pts.shape[0]} points"
        )
    labels, _ = _kmeans(pts, k, seed)
    parts = []
    for j in range(k):
        cluster = pts[labels == j]
        if cluster.shape[0] < 2:
            raise ClusterDegeneracyError(
                f"cluster {j} has {cluster.shape[0]} point(s); use a smaller k"
            )
        parts.append(fit_ellipsoid(cluster, mode=mode, ridge=ridge))
    return Union(components=tuple(parts))


def pca_ellipsoid(phase1, variance_keep: float = 0.9999,
                  ridge: float = DEFAULT_RIDGE) -> PcaEllipsoid:
    """Project onto the leading principal components, ellipsoid in that space.

    The rank is the smallest r whose components capture at least
    variance_keep of the total variance.
    """
    pts = _points_of(phase1)
    n, m = pts.shape
    if n < 2:
        raise InvalidArgumentError("need at least two points")
    if not (0 < variance_keep <= 1):
        raise InvalidArgumentError("variance_keep must be in (0, 1]")
    mu = pts.mean(axis=0)
    cov = np.cov(pts, rowvar=False, ddof=1).reshape(m, m)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals = np.maximum(evals[order], 0.0)
    evecs = evecs[:, order]
    total = float(evals.sum())
    if total <= 0:
        raise DegenerateDataError("covariance has zero trace")
    cum = np.cumsum(evals) / total
    r = int(np.argmax(cum >= variance_keep * (1 - 1e-12))) + 1
    M = evecs[:, :r].T
    # fix eigenvector signs for reproducibility
    for i in range(r):
        j = int(np.argmax(np.abs(M[i])))
        if M[i, j] < 0:
            M[i] = -M[i]
    sigma_red = _regularize_spd(np.diag(evals[:r]), ridge)
    return PcaEllipsoid(projection=M, center_reduced=M @ mu, sigma_reduced=sigma_red)


def ball_basis(phase1) -> Union:
    """One ball per data point; the transform is the squared distance to the
    nearest point."""
    pts = _points_of(phase1)
    return Union(components=tuple(Ball(center=p) for p in pts))


def grid_histogram(phase1, width: float) -> BoxGrid:
    """Boxes of a regular grid (anchored at the data minimum) that contain
    at least one point."""
    pts = _points_of(phase1)
    if not (width > 0 and np.isfinite(width)):
        raise InvalidArgumentError("width must be positive")
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = np.floor((hi - lo) / width).astype(int) + 1
    if float(np.prod(span.astype(float))) > _GRID_GUARD:
        raise TooFineGridError(
            f"grid would span {np.prod(span.astype(float)):.3g} boxes (limit {_GRID_GUARD})"
        )
    idx = np.floor((pts - lo) / width).astype(int)
    occupied = np.unique(idx, axis=0)
    centers = lo + (occupied + 0.5) * width
    return BoxGrid(centers=centers, half_width=width / 2.0)


def build_prediction_set(shape: Shape, phase2, epsilon: float,
                         delta: float) -> PredictionSet:
    """Calibrate the level-set size on held-out data."""
    pts = _points_of(phase2)
    values = transform_values(shape, pts)
    calib = calibrate.calibrate_size(values, epsilon, delta)
    return PredictionSet(shape=shape, size=calib.s, calib=calib)


# ---------------------------------------------------------------------------
# serialization


def _shape_params(shape: Shape) -> dict:
    if isinstance(shape, Ellipsoid):
        return {"center": shape.center.tolist(), "sigma": shape.sigma.tolist()}
    if isinstance(shape, DiagEllipsoid):
        return {"center": shape.center.tolist(),
                "variances": shape.variances.tolist()}
    if isinstance(shape, Ball):
        return {"center": shape.center.tolist()}
    if isinstance(shape, Polytope):
        return {"rows": shape.rows.tolist(), "offsets": shape.offsets.tolist(),
                "interior": shape.interior.tolist()}
    if isinstance(shape, PcaEllipsoid):
        return {"projection": shape.projection.tolist(),
                "center_reduced": shape.center_reduced.tolist(),
                "sigma_reduced": shape.sigma_reduced.tolist()}
    if isinstance(shape, BoxGrid):
        return {"centers": shape.centers.tolist(), "half_width": shape.half_width}
    if isinstance(shape, Union):
        return {"components": [shape_to_obj(c) for c in shape.components]}
    if isinstance(shape, Intersection):
        out = {"components": [shape_to_obj(c) for c in shape.components]}
        if shape.blocks is not None:
            out["blocks"] = [list(blk) for blk in shape.blocks]
        return out
    raise InvalidArgumentError(f"unknown shape {shape!r}")


def shape_to_obj(shape: Shape) -> dict:
    return {"variant": shape.variant, "parameters": _shape_params(shape)}


def shape_to_json(shape: Shape) -> str:
    return json.dumps(shape_to_obj(shape), indent=2, sort_keys=True)


def shape_from_obj(obj: dict) -> Shape:
    try:
        variant = obj["variant"]
        par = obj["parameters"]
    except (KeyError, TypeError) as exc:
        raise InvalidArgumentError("shape document needs variant and parameters") from exc
    try:
        if variant == "ellipsoid":
            return Ellipsoid(center=np.array(par["center"], dtype=float),
                             sigma=np.array(par["sigma"], dtype=float))
        if variant == "diag_ellipsoid":
            return DiagEllipsoid(center=np.array(par["center"], dtype=float),
                                 variances=np.array(par["variances"], dtype=float))
        if variant == "ball":
            return Ball(center=np.array(par["center"], dtype=float))
        if variant == "polytope":
            return Polytope(rows=np.array(par["rows"], dtype=float),
                            offsets=np.array(par["offsets"], dtype=float),
                            interior=np.array(par["interior"], dtype=float))
        if variant == "pca_ellipsoid":
            return PcaEllipsoid(
                projection=np.array(par["projection"], dtype=float),
                center_reduced=np.array(par["center_reduced"], dtype=float),
                sigma_reduced=np.array(par["sigma_reduced"], dtype=float))
        if variant == "box_grid":
            return BoxGrid(centers=np.array(par["centers"], dtype=float),
                           half_width=float(par["half_width"]))
        if variant == "union":
            return Union(components=tuple(shape_from_obj(c)
                                          for c in par["components"]))
        if variant == "intersection":
            blocks = par.get("blocks")
            if blocks is not None:
                blocks = tuple(tuple(int(i) for i in blk) for blk in blocks)
            return Intersection(components=tuple(shape_from_obj(c)
                                                 for c in par["components"]),
                                blocks=blocks)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidArgumentError(f"malformed {variant} parameters") from exc
    raise InvalidArgumentError(f"unknown shape variant {variant!r}")


def shape_from_json(text: str) -> Shape:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidArgumentError(f"invalid shape JSON: {exc}") from exc
    return shape_from_obj(obj)


def prediction_set_to_obj(pset: PredictionSet) -> dict:
    c = pset.calib
    return {
        "shape": shape_to_obj(pset.shape),
        "size": pset.size,
        "calib": {
            "i_star": c.i_star,
            "s": c.s,
            "n2": c.n2,
            "epsilon": c.epsilon,
            "delta": c.delta,
            "tie_warning": c.tie_warning,
        },
    }


def prediction_set_to_json(pset: PredictionSet) -> str:
    return json.dumps(prediction_set_to_obj(pset), indent=2, sort_keys=True)


def prediction_set_from_obj(obj: dict) -> PredictionSet:
    try:
        shape = shape_from_obj(obj["shape"])
        cal = obj["calib"]
        calib = CalibResult(i_star=int(cal["i_star"]), s=float(cal["s"]),
                            n2=int(cal["n2"]), epsilon=float(cal["epsilon"]),
                            delta=float(cal["delta"]),
                            tie_warning=bool(cal["tie_warning"]))
        return PredictionSet(shape=shape, size=float(obj["size"]), calib=calib)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidArgumentError("malformed prediction-set document") from exc


def prediction_set_from_json(text: str) -> PredictionSet:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidArgumentError(f"invalid prediction-set JSON: {exc}") from exc
    return prediction_set_from_obj(obj)
