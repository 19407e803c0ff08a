"""Robust counterparts: calibrated prediction set + CCP -> conic program.

Each rc_* operation turns "constraint holds for every xi in the set" into
explicit conic rows over the decision vector x plus, where needed, auxiliary
variables (polytope duals, norm auxiliaries, LMI slacks).  Level sets of
squared transforms (ellipsoid family, PCA sets) enter with radius sqrt(size);
half-space transforms (polytopes, box grids) scale linearly in the size.
That conversion happens here and nowhere else.

Conic row convention throughout: a block contributes rows
``offsets - rows_x @ x - rows_aux @ aux`` that must land in its cones.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import conic, model, shapes
from .calibrate import calibrate_size
from .errors import (
    DegenerateShapeError,
    InvalidArgumentError,
    InvalidScaleError,
    UnsupportedCombinationError,
)

__all__ = [
    "Span",
    "Block",
    "RobustProgram",
    "rc_linear_ellipsoid",
    "rc_linear_polytope",
    "rc_linear_vecnorm",
    "rc_quadratic_ellipsoid",
    "rc_sdp_normbounded",
    "rc_pca",
    "rc_union",
    "rc_partition",
    "build_reconstruction_set",
    "assemble_ro",
    "polytope_level_offsets",
]

SUPPORTED_PAIRS = (
    "single_linear/joint_linear x {ellipsoid, diag_ellipsoid, ball, polytope, "
    "pca_ellipsoid, box_grid, union, intersection(blocks)}; "
    "quadratic x {ellipsoid, diag_ellipsoid, ball}; semidefinite x {ball}"
)


@dataclass(frozen=True)
class Span:
    """Half-open index range [start, stop) with a role tag."""

    role: str
    label: str
    start: int
    stop: int


@dataclass(frozen=True, eq=False)
class Block:
    """A bundle of conic rows over (x, aux).

    Semantics: offsets - rows_x @ x - rows_aux @ aux must lie in the product
    of ``cones`` (row counts match in order).  ``aux_spans`` names the
    auxiliary columns; they are block-local and get shifted on assembly.
    """

    rows_x: np.ndarray
    rows_aux: np.ndarray
    offsets: np.ndarray
    cones: tuple
    aux_spans: tuple = ()

    def __post_init__(self):
        rx = np.atleast_2d(np.asarray(self.rows_x, dtype=float))
        ra = np.atleast_2d(np.asarray(self.rows_aux, dtype=float))
        off = np.asarray(self.offsets, dtype=float).reshape(-1)
        k = off.size
        if rx.shape[0] != k or ra.shape[0] != k:
            raise InvalidArgumentError("block row counts disagree")
        if sum(c.rows for c in self.cones) != k:
            raise InvalidArgumentError("cone rows do not cover the block")
        covered = 0
        for sp in self.aux_spans:
            if sp.start != covered or sp.stop <= sp.start:
                raise InvalidArgumentError("aux spans must tile the aux columns")
            covered = sp.stop
        if covered != ra.shape[1]:
            raise InvalidArgumentError("aux spans do not cover the aux columns")
        for arr in (rx, ra, off):
            if not np.all(np.isfinite(arr)):
                raise InvalidArgumentError("block contains non-finite entries")
        rx = rx.copy()
        ra = ra.copy()
        off = off.copy()
        rx.flags.writeable = False
        ra.flags.writeable = False
        off.flags.writeable = False
        object.__setattr__(self, "rows_x", rx)
        object.__setattr__(self, "rows_aux", ra)
        object.__setattr__(self, "offsets", off)
        object.__setattr__(self, "cones", tuple(self.cones))
        object.__setattr__(self, "aux_spans", tuple(self.aux_spans))

    @property
    def n_aux(self) -> int:
        return self.rows_aux.shape[1]

    @property
    def n_x(self) -> int:
        return self.rows_x.shape[1]


def _no_aux(k: int) -> np.ndarray:
    return np.zeros((k, 0))


def _rho_of_size(s: float) -> float:
    """Radius of the level set of a squared transform at size s."""
    return float(np.sqrt(max(float(s), 0.0)))


# ---------------------------------------------------------------------------
# linear-family robust counterparts


def rc_linear_ellipsoid(a0, delta, rho: float, b: float) -> Block:
    """Protect a0'x + worst ellipsoidal perturbation <= b.

    The uncertain row is a = a0 + rho * delta u with ||u|| <= 1, giving the
    second-order row a0'x + rho ||delta' x|| <= b.  With rho = 0 the row
    degenerates to the nominal half-space.
    """
    a0 = np.asarray(a0, dtype=float).reshape(-1)
    delta = np.atleast_2d(np.asarray(delta, dtype=float))
    d = a0.size
    if delta.shape[0] != d:
        raise InvalidArgumentError("delta must have one row per x coordinate")
    rho = float(rho)
    if not (rho >= 0 and np.isfinite(rho)):
        raise InvalidArgumentError("rho must be finite and >= 0")
    if rho == 0.0:
        return Block(rows_x=a0[None, :], rows_aux=_no_aux(1),
                     offsets=[float(b)], cones=(conic.Nonneg(1),))
    t = delta.shape[1]
    rows_x = np.vstack([a0[None, :], -rho * delta.T])
    offsets = np.zeros(1 + t)
    offsets[0] = float(b)
    return Block(rows_x=rows_x, rows_aux=_no_aux(1 + t), offsets=offsets,
                 cones=(conic.SecondOrder(1 + t),))


def rc_linear_polytope(halfspace_rows, halfspace_offsets, b: float, *,
                       x_dim: int | None = None, x_offset: int = 0) -> Block:
    """Protect sup{xi'x_emb : D xi <= e} <= b via the dual variables p >= 0.

    Feasibility of (x, p) with e'p <= b, D'p = x_emb, p >= 0 certifies the
    worst case; x_emb places x at ambient coordinates
    [x_offset, x_offset + x_dim) and zero elsewhere.
    """
    rows = np.atleast_2d(np.asarray(halfspace_rows, dtype=float))
    offs = np.asarray(halfspace_offsets, dtype=float).reshape(-1)
    r, m = rows.shape
    if offs.size != r:
        raise InvalidArgumentError("halfspace rows and offsets must align")
    if x_dim is None:
        x_dim = m
    if x_offset < 0 or x_offset + x_dim > m:
        raise InvalidArgumentError("x embedding exceeds the ambient dimension")
    embed = np.zeros((m, x_dim))
    embed[x_offset: x_offset + x_dim] = np.eye(x_dim)
    rows_x = np.vstack([np.zeros((1, x_dim)), embed, np.zeros((r, x_dim))])
    rows_aux = np.vstack([offs[None, :], -rows.T, -np.eye(r)])
    offsets = np.zeros(1 + m + r)
    offsets[0] = float(b)
    return Block(
        rows_x=rows_x,
        rows_aux=rows_aux,
        offsets=offsets,
        cones=(conic.Nonneg(1), conic.Zero(m), conic.Nonneg(r)),
        aux_spans=(Span("polytope-dual", "p", 0, r),),
    )


def _vecnorm_blocks(abar: np.ndarray, tails: np.ndarray, rho: float,
                    b: np.ndarray) -> Block:
    """Joint rows a_i'x + rho ||tails[:, block_i] @ x|| <= b_i.

    ``tails`` is the (m, m) matrix whose columns at block i produce the
    worst-case direction for row i; all-zero tail rows are dropped since they
    do not change the norm.
    """
    l, d = abar.shape
    m = l * d
    if tails.shape != (m, m):
        raise InvalidArgumentError("tail factor must be m x m over vec(A)")
    rows_x = []
    offsets = []
    cones = []
    for i in range(l):
        cols = tails[:, i * d: (i + 1) * d]
        keep = np.any(cols != 0.0, axis=1)
        tail = rho * cols[keep]
        if rho == 0.0 or tail.shape[0] == 0:
            rows_x.append(abar[i][None, :])
            offsets.append([float(b[i])])
            cones.append(conic.Nonneg(1))
            continue
        rows_x.append(np.vstack([abar[i][None, :], -tail]))
        off = np.zeros(1 + tail.shape[0])
        off[0] = float(b[i])
        offsets.append(off)
        cones.append(conic.SecondOrder(1 + tail.shape[0]))
    rows_x = np.vstack(rows_x)
    offsets = np.concatenate(offsets)
    return Block(rows_x=rows_x, rows_aux=_no_aux(offsets.size),
                 offsets=offsets, cones=tuple(cones))


def rc_linear_vecnorm(abar, m_factor, rho: float, b) -> Block:
    """Joint linear rows under ||M(vec(A) - vec(Abar))||_2 <= rho.

    Row i becomes abar_i'x + rho ||(M')^{-1} x_i||_2 <= b_i with x_i the
    zero-padded embedding of x at block i.  Only the L2 norm (self-dual) is
    supported.
    """
    abar = np.atleast_2d(np.asarray(abar, dtype=float))
    b = np.asarray(b, dtype=float).reshape(-1)
    l, d = abar.shape
    m = l * d
    if b.size != l:
        raise InvalidArgumentError("need one rhs entry per constraint row")
    m_factor = np.atleast_2d(np.asarray(m_factor, dtype=float))
    if m_factor.shape != (m, m):
        raise InvalidArgumentError("M must be square over vec(A)")
    rho = float(rho)
    if not (rho >= 0 and np.isfinite(rho)):
        raise InvalidArgumentError("rho must be finite and >= 0")
    try:
        tails = np.linalg.solve(m_factor.T, np.eye(m))
    except np.linalg.LinAlgError as exc:
        raise DegenerateShapeError("factor M is singular") from exc
    resid = float(np.max(np.abs(m_factor.T @ tails - np.eye(m))))
    if not np.isfinite(resid) or resid > 1e-6:
        raise DegenerateShapeError("factor M is numerically singular")
    return _vecnorm_blocks(abar, tails, rho, b)


def rc_pca(shape: shapes.PcaEllipsoid, rho: float, b: float, *,
           x_dim: int | None = None, x_offset: int = 0) -> Block:
    """Protect a row against the lifted PCA ellipsoid of squared radius rho^2.

    New variables u in R^r and lambda, with rows
      mu' S^{-1/2} u + rho * lambda <= b,
      M' S^{-1/2} u = x_emb,
      ||u||_2 <= lambda,
    where S^{-1/2} is the symmetric inverse square root of the reduced
    covariance.  The equality rows force x_emb into the row space of the
    projection; outside it the worst case is unbounded and the program is
    rightly infeasible.
    """
    if not isinstance(shape, shapes.PcaEllipsoid):
        raise InvalidArgumentError("rc_pca needs a PcaEllipsoid shape")
    m = shape.dim
    r = shape.rank
    if x_dim is None:
        x_dim = m
    if x_offset < 0 or x_offset + x_dim > m:
        raise InvalidArgumentError("x embedding exceeds the ambient dimension")
    rho = float(rho)
    if not (rho >= 0 and np.isfinite(rho)):
        raise InvalidArgumentError("rho must be finite and >= 0")
    evals, evecs = np.linalg.eigh(shape.sigma_reduced)
    if evals[0] <= 0 or evals[0] <= 1e-14 * evals[-1]:
        raise DegenerateShapeError("reduced covariance is rank deficient")
    s_isqrt = (evecs / np.sqrt(evals)) @ evecs.T
    lift = shape.projection.T @ s_isqrt           # (m, r)
    w = s_isqrt @ shape.center_reduced            # (r,)

    embed = np.zeros((m, x_dim))
    embed[x_offset: x_offset + x_dim] = np.eye(x_dim)
    k = 1 + m + (1 + r)
    rows_x = np.zeros((k, x_dim))
    rows_aux = np.zeros((k, r + 1))
    offsets = np.zeros(k)
    # b - w'u - rho*lambda >= 0
    offsets[0] = float(b)
    rows_aux[0, :r] = w
    rows_aux[0, r] = rho
    # x_emb - lift u = 0
    rows_x[1: 1 + m] = embed
    rows_aux[1: 1 + m, :r] = -lift
    # (lambda, u) in the second-order cone
    rows_aux[1 + m, r] = -1.0
    rows_aux[2 + m:, :r] = -np.eye(r)
    return Block(
        rows_x=rows_x,
        rows_aux=rows_aux,
        offsets=offsets,
        cones=(conic.Nonneg(1), conic.Zero(m), conic.SecondOrder(1 + r)),
        aux_spans=(Span("norm-aux", "u", 0, r), Span("norm-aux", "lambda", r, r + 1)),
    )


# ---------------------------------------------------------------------------
# LMI robust counterparts (export only)


def _psd_block(const_mat, x_mats, aux_mats, aux_spans) -> Block:
    """Affine LMI const + sum x_j X_j + sum aux_t T_t >= 0 as a PSD block."""
    side = const_mat.shape[0]
    offsets = conic.triu_from_mat(const_mat)
    rows_x = np.column_stack([-conic.triu_from_mat(mat) for mat in x_mats]) \
        if x_mats else _no_aux(offsets.size)
    rows_aux = np.column_stack([-conic.triu_from_mat(mat) for mat in aux_mats]) \
        if aux_mats else _no_aux(offsets.size)
    return Block(rows_x=rows_x, rows_aux=rows_aux, offsets=offsets,
                 cones=(conic.PsdExportOnly(side),), aux_spans=aux_spans)


def rc_quadratic_ellipsoid(nominal, directions, q: float = 0.0) -> Block:
    """LMI certificate for x'A(u)'A(u)x - b(u)'x - c(u) <= q over ||u|| <= 1.

    (A, b, c)(u) = nominal + sum_j u_j * directions[j]; the sqrt-size scaling
    is expected to be folded into the directions already.  For k >= 1 the
    block introduces the slack tau; k = 0 needs none.  The certificate matrix
    (order: the homogenizing coordinate, then u, then the identity block)

        [ c0+q+b0'x-tau   (c_j+b_j'x)/2   (A0 x)' ]
        [      .             tau I        rows A_j x ]
        [      .               .             I    ]

    is PSD for some tau iff the worst-case quadratic stays <= q.
    """
    a0, b0, c0 = nominal
    a0 = np.atleast_2d(np.asarray(a0, dtype=float))
    b0 = np.asarray(b0, dtype=float).reshape(-1)
    c0 = float(c0)
    p, d = a0.shape
    if b0.size != d:
        raise InvalidArgumentError("nominal b must have d entries")
    dirs = []
    for aj, bj, cj in directions:
        aj = np.atleast_2d(np.asarray(aj, dtype=float))
        bj = np.asarray(bj, dtype=float).reshape(-1)
        if aj.shape != (p, d) or bj.size != d:
            raise InvalidArgumentError("direction dimensions must match the nominal")
        dirs.append((aj, bj, float(cj)))
    k = len(dirs)
    side = 1 + k + p

    const = np.zeros((side, side))
    const[0, 0] = c0 + float(q)
    for j, (_, _, cj) in enumerate(dirs):
        const[0, 1 + j] = const[1 + j, 0] = cj / 2.0
    const[1 + k:, 1 + k:] = np.eye(p)

    x_mats = []
    for t in range(d):
        mat = np.zeros((side, side))
        mat[0, 0] = b0[t]
        for j, (aj, bj, _) in enumerate(dirs):
            mat[0, 1 + j] = mat[1 + j, 0] = bj[t] / 2.0
            mat[1 + k:, 1 + j] = aj[:, t]
            mat[1 + j, 1 + k:] = aj[:, t]
        mat[1 + k:, 0] = a0[:, t]
        mat[0, 1 + k:] = a0[:, t]
        x_mats.append(mat)

    if k == 0:
        return _psd_block(const, x_mats, [], ())
    tau_mat = np.zeros((side, side))
    tau_mat[0, 0] = -1.0
    for j in range(k):
        tau_mat[1 + j, 1 + j] = 1.0
    return _psd_block(const, x_mats, [tau_mat],
                      (Span("lmi-slack", "tau", 0, 1),))


def rc_sdp_normbounded(abar_blocks, b_mat, rho: float) -> Block:
    """LMI certificate for B + sum_j xi_j x_j >= 0 under a norm-bounded xi.

    The stacked perturbation zeta = [xi_1; ...; xi_d] - [Abar_1; ...] obeys
    ||zeta||_{2,2} <= rho.  With L'(x) = [x_1 I_p, ..., x_d I_p] the block

        [ lambda I_{dp}      rho L(x)        ]
        [ rho L'(x)      A0(x) - lambda I_p  ]

    (A0(x) = B + sum_j x_j Abar_j) is PSD for some lambda iff the uncertain
    matrix stays PSD for every admissible zeta.
    """
    mats = [np.atleast_2d(np.asarray(mat, dtype=float)) for mat in abar_blocks]
    b_mat = np.atleast_2d(np.asarray(b_mat, dtype=float))
    d = len(mats)
    if d < 1:
        raise InvalidArgumentError("need at least one coefficient block")
    p = b_mat.shape[0]
    if b_mat.shape != (p, p):
        raise InvalidArgumentError("B must be square")
    for mat in mats:
        if mat.shape != (p, p):
            raise InvalidArgumentError("coefficient blocks must match B's shape")
    scale = max(1.0, float(np.max(np.abs(b_mat))),
                *(float(np.max(np.abs(m))) for m in mats))
    for mat in mats + [b_mat]:
        if float(np.max(np.abs(mat - mat.T))) > 1e-8 * scale:
            raise InvalidArgumentError("coefficient matrices must be symmetric")
    mats = [(mat + mat.T) / 2.0 for mat in mats]
    b_mat = (b_mat + b_mat.T) / 2.0
    rho = float(rho)
    if not (rho >= 0 and np.isfinite(rho)):
        raise InvalidArgumentError("rho must be finite and >= 0")

    side = d * p + p
    const = np.zeros((side, side))
    const[d * p:, d * p:] = b_mat

    x_mats = []
    for j in range(d):
        mat = np.zeros((side, side))
        mat[j * p: (j + 1) * p, d * p:] = rho * np.eye(p)
        mat[d * p:, j * p: (j + 1) * p] = rho * np.eye(p)
        mat[d * p:, d * p:] += mats[j]
        x_mats.append(mat)

    lam_mat = np.zeros((side, side))
    lam_mat[: d * p, : d * p] = np.eye(d * p)
    lam_mat[d * p:, d * p:] = -np.eye(p)
    return _psd_block(const, x_mats, [lam_mat],
                      (Span("lmi-slack", "lambda", 0, 1),))


# ---------------------------------------------------------------------------
# shape dispatch for linear families


def polytope_level_offsets(shape: shapes.Polytope, s: float) -> np.ndarray:
    """Offsets of the polytope's level set at size s (linear in s)."""
    anchor = shape.rows @ shape.interior
    return anchor + float(s) * (shape.offsets - anchor)


def _basic_linear_blocks(comp, s: float, rhs: np.ndarray, l: int, d: int) -> list:
    """RC blocks protecting all l rows against one basic shape at size s."""
    m = l * d
    if comp.dim != m:
        raise InvalidArgumentError(
            f"shape dimension {comp.dim} does not match the data dimension {m}"
        )
    rho = _rho_of_size(s)
    if isinstance(comp, (shapes.Ellipsoid, shapes.DiagEllipsoid, shapes.Ball)):
        if isinstance(comp, shapes.Ellipsoid):
            factor = comp.chol
        elif isinstance(comp, shapes.DiagEllipsoid):
            factor = np.diag(np.sqrt(comp.variances))
        else:
            factor = np.eye(m)
        if l == 1:
            return [rc_linear_ellipsoid(comp.center, factor, rho, float(rhs[0]))]
        abar = comp.center.reshape(l, d)
        return [_vecnorm_blocks(abar, factor.T, rho, rhs)]
    if isinstance(comp, shapes.Polytope):
        offs = polytope_level_offsets(comp, s)
        return [
            rc_linear_polytope(comp.rows, offs, float(rhs[i]),
                               x_dim=d, x_offset=i * d)
            for i in range(l)
        ]
    if isinstance(comp, shapes.PcaEllipsoid):
        return [
            rc_pca(comp, rho, float(rhs[i]), x_dim=d, x_offset=i * d)
            for i in range(l)
        ]
    if isinstance(comp, shapes.BoxGrid):
        half = comp.half_width * float(s)
        eye = np.eye(m)
        box_rows = np.vstack([eye, -eye])
        out = []
        for center in comp.centers:
            offs = np.concatenate([center + half, -center + half])
            out.extend(
                rc_linear_polytope(box_rows, offs, float(rhs[i]),
                                   x_dim=d, x_offset=i * d)
                for i in range(l)
            )
        return out
    raise UnsupportedCombinationError(
        f"no linear robust counterpart for shape {comp.variant!r}; "
        f"supported pairs: {SUPPORTED_PAIRS}"
    )


def rc_union(shape: shapes.Union, s: float, rhs, d: int) -> list:
    """Protect against a union: replicate the rows once per component."""
    if not isinstance(shape, shapes.Union):
        raise InvalidArgumentError("rc_union needs a Union shape")
    rhs = np.asarray(rhs, dtype=float).reshape(-1)
    l = rhs.size
    out = []
    for comp in shape.components:
        if isinstance(comp, (shapes.Union, shapes.Intersection)):
            raise InvalidArgumentError("nested unions are not supported")
        out.extend(_basic_linear_blocks(comp, s, rhs, l, d))
    return out


def rc_partition(shape: shapes.Intersection, s: float, rhs, d: int) -> list:
    """Constraint-wise sets: component i protects row i at the shared size.

    The intersection must carry coordinate blocks aligned with the rows:
    block i covers exactly the coordinates of row i's uncertain vector.
    """
    if not isinstance(shape, shapes.Intersection):
        raise InvalidArgumentError("rc_partition needs an Intersection shape")
    if shape.blocks is None:
        raise UnsupportedCombinationError(
            "a same-space intersection has no exact linear robust counterpart; "
            "use an Intersection with coordinate blocks (one per constraint row)"
        )
    rhs = np.asarray(rhs, dtype=float).reshape(-1)
    l = rhs.size
    if len(shape.components) != l:
        raise InvalidArgumentError(
            f"partition has {len(shape.components)} blocks but the family has {l} rows"
        )
    out = []
    for i, (comp, blk) in enumerate(zip(shape.components, shape.blocks)):
        if blk != tuple(range(i * d, (i + 1) * d)):
            raise InvalidArgumentError(
                "partition blocks must align with the constraint rows "
                f"(block {i} must cover coordinates {i * d}..{(i + 1) * d - 1})"
            )
        out.extend(_basic_linear_blocks(comp, s, rhs[i: i + 1], 1, d))
    return out


# ---------------------------------------------------------------------------
# reconstruction


def build_reconstruction_set(x_hat, spec: model.CcpSpec, scale, phase2,
                             epsilon: float, delta: float) -> shapes.PredictionSet:
    """Recalibrate around a candidate solution x_hat (linear families only).

    The Phase-2 transform is t(A) = max_j (a_j'x_hat - b_j) / k_j with the
    positive scale vector k; the returned set is the polytope
    {xi : a_j'x_hat <= b_j + s k_j for all j} at size 1, with the calibrated
    s recorded in the calibration result (s <= 0 certifies that x_hat itself
    stays feasible for the reconstructed program).  Only deterministic
    right-hand sides are supported.
    """
    if not isinstance(spec.family, (model.SingleLinear, model.JointLinear)):
        raise UnsupportedCombinationError(
            "reconstruction supports the linear constraint families only"
        )
    x_hat = np.asarray(x_hat, dtype=float).reshape(-1)
    d = spec.d
    l = spec.family.n_rows()
    if x_hat.size != d:
        raise InvalidArgumentError(f"x_hat must have {d} entries")
    norm2 = float(x_hat @ x_hat)
    if norm2 <= 0:
        raise InvalidArgumentError("x_hat must be nonzero")
    k = np.asarray(scale, dtype=float).reshape(-1)
    if k.size != l:
        raise InvalidScaleError(f"scale must have {l} entries, got {k.size}")
    if np.any(k <= 0) or not np.all(np.isfinite(k)):
        raise InvalidScaleError("every scale component must be positive")
    pts = shapes._points_of(phase2)
    if pts.shape[1] != l * d:
        raise InvalidArgumentError(
            f"phase2 points have dimension {pts.shape[1]}, expected {l * d}"
        )
    margins = (pts.reshape(pts.shape[0], l, d) @ x_hat - spec.rhs) / k
    values = margins.max(axis=1)
    calib = calibrate_size(values, epsilon, delta)
    s = calib.s

    rows = np.zeros((l, l * d))
    for j in range(l):
        rows[j, j * d: (j + 1) * d] = x_hat
    offsets = spec.rhs + s * k
    interior = np.zeros(l * d)
    for j in range(l):
        interior[j * d: (j + 1) * d] = ((offsets[j] - 1.0) / norm2) * x_hat
    shape = shapes.Polytope(rows=rows, offsets=offsets, interior=interior)
    return shapes.PredictionSet(shape=shape, size=1.0, calib=calib)


# ---------------------------------------------------------------------------
# assembly


@dataclass(frozen=True, eq=False)
class RobustProgram:
    """A reformulated CCP: the conic program plus variable/row bookkeeping.

    ``mapping`` tiles the conic variables with roles (original x, polytope
    duals, norm auxiliaries, LMI slacks); ``rows`` tags each row bundle as
    deterministic or robust.
    """

    spec: model.CcpSpec
    set: shapes.PredictionSet
    program: conic.ConicProgram
    mapping: tuple = ()
    rows: tuple = field(default=())

    def __post_init__(self):
        covered = 0
        for sp in self.mapping:
            if sp.start != covered or sp.stop <= sp.start:
                raise InvalidArgumentError("mapping spans must tile the variables")
            covered = sp.stop
        if covered != self.program.n_vars:
            raise InvalidArgumentError("mapping does not cover every variable")

    @property
    def is_export_only(self) -> bool:
        return self.program.is_export_only


def _shape_blocks(spec: model.CcpSpec, pset: shapes.PredictionSet) -> list:
    """Labeled RC blocks for the spec's protected constraints."""
    shape = pset.shape
    s = pset.size
    family = spec.family
    d = spec.d

    if isinstance(family, (model.SingleLinear, model.JointLinear)):
        l = family.n_rows()
        if isinstance(shape, shapes.Union):
            blocks = rc_union(shape, s, spec.rhs, d)
            return [(f"robust[u{i}]", blk) for i, blk in enumerate(blocks)]
        if isinstance(shape, shapes.Intersection):
            blocks = rc_partition(shape, s, spec.rhs, d)
            return [(f"robust[p{i}]", blk) for i, blk in enumerate(blocks)]
        blocks = _basic_linear_blocks(shape, s, spec.rhs, l, d)
        return [(f"robust[{i}]", blk) for i, blk in enumerate(blocks)]

    if isinstance(family, model.Quadratic):
        if not isinstance(shape, (shapes.Ellipsoid, shapes.DiagEllipsoid, shapes.Ball)):
            raise UnsupportedCombinationError(
                f"quadratic family with shape {shape.variant!r} is not supported; "
                f"supported pairs: {SUPPORTED_PAIRS}"
            )
        m = spec.data_dim
        if shape.dim != m:
            raise InvalidArgumentError("shape dimension does not match (vec A, b, c)")
        if isinstance(shape, shapes.Ellipsoid):
            factor = shape.chol
        elif isinstance(shape, shapes.DiagEllipsoid):
            factor = np.diag(np.sqrt(shape.variances))
        else:
            factor = np.eye(m)
        rho = _rho_of_size(s)
        nominal = model.split_quadratic_point(shape.center, family.q, d)
        directions = [
            model.split_quadratic_point(rho * factor[:, j], family.q, d)
            for j in range(m)
        ]
        blk = rc_quadratic_ellipsoid(nominal, directions, q=float(spec.rhs[0]))
        return [("robust[lmi]", blk)]

    if isinstance(family, model.Semidefinite):
        if not isinstance(shape, shapes.Ball):
            raise UnsupportedCombinationError(
                f"semidefinite family with shape {shape.variant!r} is not supported; "
                f"supported pairs: {SUPPORTED_PAIRS}"
            )
        if shape.dim != spec.data_dim:
            raise InvalidArgumentError("shape dimension does not match vec(xi)")
        abar = model.split_semidefinite_point(shape.center, d, family.p)
        b_mat = model.semidefinite_rhs_matrix(spec)
        blk = rc_sdp_normbounded(abar, b_mat, _rho_of_size(s))
        return [("robust[lmi]", blk)]

    raise UnsupportedCombinationError(
        f"unknown constraint family {family.kind!r}; supported pairs: {SUPPORTED_PAIRS}"
    )


def assemble_ro(spec: model.CcpSpec, pset: shapes.PredictionSet) -> RobustProgram:
    """Assemble min c'x subject to deterministic rows plus all RC blocks.

    Returns the program together with the variable mapping; programs with an
    LMI block are export-only and refuse the internal solver.
    """
    if pset.dim != spec.data_dim:
        raise InvalidArgumentError(
            f"prediction set dimension {pset.dim} does not match "
            f"the family's data dimension {spec.data_dim}"
        )
    d = spec.d
    labeled = []
    if spec.det is not None:
        det_block = Block(rows_x=spec.det.a_ub,
                          rows_aux=_no_aux(spec.det.b_ub.size),
                          offsets=spec.det.b_ub,
                          cones=(conic.Nonneg(spec.det.b_ub.size),))
        labeled.append(("det", det_block))
    labeled.extend(_shape_blocks(spec, pset))

    n_aux = sum(blk.n_aux for _, blk in labeled)
    n_rows = sum(blk.offsets.size for _, blk in labeled)
    n = d + n_aux
    A = np.zeros((n_rows, n))
    b = np.zeros(n_rows)
    cones = []
    mapping = [Span("x", "x", 0, d)]
    row_spans = []
    aux_base = d
    r0 = 0
    for label, blk in labeled:
        k = blk.offsets.size
        if blk.n_x != d:
            raise InvalidArgumentError("block x-width does not match the spec")
        A[r0: r0 + k, :d] = blk.rows_x
        if blk.n_aux:
            A[r0: r0 + k, aux_base: aux_base + blk.n_aux] = blk.rows_aux
            for sp in blk.aux_spans:
                mapping.append(Span(sp.role, f"{label}.{sp.label}",
                                    aux_base + sp.start, aux_base + sp.stop))
            aux_base += blk.n_aux
        b[r0: r0 + k] = blk.offsets
        cones.extend(blk.cones)
        role = "deterministic" if label == "det" else "robust"
        row_spans.append(Span(role, label, r0, r0 + k))
        r0 += k
    c = np.concatenate([spec.objective, np.zeros(n_aux)])
    program = conic.ConicProgram(c=c, A=A, b=b, cones=tuple(cones))
    return RobustProgram(spec=spec, set=pset, program=program,
                         mapping=tuple(mapping), rows=tuple(row_spans))
