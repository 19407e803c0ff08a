"""Core problem/data types shared across the package.

The data matrix convention is row-major observations: a Dataset holds n rows
of points in R^m. Matrix-valued uncertainty is vectorized by concatenating the
rows of A (C order), and this module owns the reshape in both directions so
every consumer agrees on orientation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError

__all__ = [
    "Dataset",
    "DataSplit",
    "SingleLinear",
    "JointLinear",
    "Quadratic",
    "Semidefinite",
    "DetConstraints",
    "CcpSpec",
    "split_data",
    "load_dataset_csv",
    "save_dataset_csv",
    "spec_to_json",
    "spec_from_json",
    "vectorize_matrix",
    "devectorize_matrix",
    "split_quadratic_point",
    "split_semidefinite_point",
    "semidefinite_rhs_matrix",
]


def _as_float_matrix(points, what: str) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise InvalidArgumentError(f"{what} must be a 2-d array, got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidArgumentError(f"{what} must have at least one row and one column")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{what} contains non-finite entries")
    return arr


@dataclass(frozen=True, eq=False)
class Dataset:
    """n observations of xi in R^m, one observation per row."""

    points: np.ndarray

    def __post_init__(self):
        arr = _as_float_matrix(self.points, "Dataset.points")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "points", arr)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def m(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class DataSplit:
    phase1: Dataset
    phase2: Dataset
    seed: int


def split_data(data: Dataset, n1: int, seed: int) -> DataSplit:
    """Partition rows into a shape-learning part (n1 rows) and a calibration part.

    The partition is a uniformly random subset draw controlled entirely by
    ``seed`` (PCG64 bit stream); row order within each part is the source
    order, so identical inputs reproduce identical splits bit for bit.

    Either part may be empty at the boundaries n1 = 0 or n1 = n.
    """
    n1 = int(n1)
    if n1 < 0 or n1 > data.n:
        raise InvalidArgumentError(f"n1 must lie in [0, {data.n}], got {n1}")
    rng = np.random.Generator(np.random.PCG64(seed))
    perm = rng.permutation(data.n)
    idx1 = np.sort(perm[:n1])
    idx2 = np.sort(perm[n1:])
    # a 0-row slice is not a valid Dataset; keep a 0 x m placeholder via a
    # dedicated empty marker: Dataset requires n >= 1, so carry the slice raw
    p1 = data.points[idx1]
    p2 = data.points[idx2]
    return DataSplit(
        phase1=_maybe_empty(p1, data.m),
        phase2=_maybe_empty(p2, data.m),
        seed=int(seed),
    )


class _EmptyDataset(Dataset):
    """Zero-row stand-in used only by split_data boundary cases."""

    def __init__(self, m: int):
        arr = np.empty((0, m), dtype=float)
        arr.flags.writeable = False
        object.__setattr__(self, "points", arr)


def _maybe_empty(rows: np.ndarray, m: int) -> Dataset:
    if rows.shape[0] == 0:
        return _EmptyDataset(m)
    return Dataset(rows)


# ---------------------------------------------------------------------------
# Constraint families

@dataclass(frozen=True)
class SingleLinear:
    """xi'x <= b with xi in R^d."""

    kind = "single_linear"

    def data_dim(self, d: int) -> int:
        return d

    def n_rows(self) -> int:
        return 1

    def rhs_size(self) -> int:
        return 1


@dataclass(frozen=True)
class JointLinear:
    """Ax <= b with A in R^{l x d}; xi = vec(A) (row concatenation)."""

    l: int
    kind = "joint_linear"

    def __post_init__(self):
        if self.l < 1:
            raise InvalidArgumentError("JointLinear needs l >= 1 rows")

    def data_dim(self, d: int) -> int:
        return self.l * d

    def n_rows(self) -> int:
        return self.l

    def rhs_size(self) -> int:
        return self.l


@dataclass(frozen=True)
class Quadratic:
    """x'A'Ax - b'x - c <= rhs with stochastic (A, b, c), A in R^{q x d}.

    A data point is (vec(A), b, c) laid out as q*d + d + 1 reals.
    """

    q: int
    kind = "quadratic"

    def __post_init__(self):
        if self.q < 1:
            raise InvalidArgumentError("Quadratic needs q >= 1 rows in A")

    def data_dim(self, d: int) -> int:
        return self.q * d + d + 1

    def n_rows(self) -> int:
        return 1

    def rhs_size(self) -> int:
        return 1


@dataclass(frozen=True)
class Semidefinite:
    """B + sum_j xi_j x_j >= 0 (PSD) with xi_j in R^{p x p}.

    A data point stacks the d coefficient matrices vertically:
    vec([xi_1; ...; xi_d]) with d*p*p reals.  The rhs vector of the CcpSpec
    carries the constant matrix B, row-major (p*p entries).
    """

    p: int
    kind = "semidefinite"

    def __post_init__(self):
        if self.p < 1:
            raise InvalidArgumentError("Semidefinite needs side p >= 1")

    def data_dim(self, d: int) -> int:
        return d * self.p * self.p

    def n_rows(self) -> int:
        return 1

    def rhs_size(self) -> int:
        return self.p * self.p


_FAMILY_KINDS = {
    "single_linear": SingleLinear,
    "joint_linear": JointLinear,
    "quadratic": Quadratic,
    "semidefinite": Semidefinite,
}


@dataclass(frozen=True, eq=False)
class DetConstraints:
    """Deterministic linear constraints A_ub x <= b_ub."""

    a_ub: np.ndarray
    b_ub: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a_ub, dtype=float)
        b = np.asarray(self.b_ub, dtype=float).reshape(-1)
        if a.ndim != 2 or a.shape[0] != b.shape[0]:
            raise InvalidArgumentError("det constraints: A_ub rows must match b_ub length")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise InvalidArgumentError("det constraints contain non-finite entries")
        a = a.copy()
        b = b.copy()
        a.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "a_ub", a)
        object.__setattr__(self, "b_ub", b)


@dataclass(frozen=True, eq=False)
class CcpSpec:
    """A chance-constrained program: min c'x s.t. P(safety) >= 1 - epsilon."""

    objective: np.ndarray
    family: SingleLinear | JointLinear | Quadratic | Semidefinite
    rhs: np.ndarray            # per-row right-hand side; see family docstrings
    epsilon: float
    delta: float
    det: DetConstraints | None = None

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float).reshape(-1)
        if c.size < 1 or not np.all(np.isfinite(c)):
            raise InvalidArgumentError("objective must be a finite vector with d >= 1")
        if not (0.0 < self.epsilon < 1.0):
            raise InvalidArgumentError(f"epsilon must be in (0,1), got {self.epsilon}")
        if not (0.0 < self.delta < 1.0):
            raise InvalidArgumentError(f"delta must be in (0,1), got {self.delta}")
        rhs = np.asarray(self.rhs, dtype=float).reshape(-1)
        want = self.family.rhs_size()
        if rhs.size != want:
            raise InvalidArgumentError(
                f"rhs must have {want} entries for family {self.family.kind}, got {rhs.size}"
            )
        if not np.all(np.isfinite(rhs)):
            raise InvalidArgumentError("rhs contains non-finite entries")
        if self.det is not None and self.det.a_ub.shape[1] != c.size:
            raise InvalidArgumentError("det constraints column count must equal d")
        c = c.copy()
        rhs = rhs.copy()
        c.flags.writeable = False
        rhs.flags.writeable = False
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "rhs", rhs)

    @property
    def d(self) -> int:
        return self.objective.size

    @property
    def data_dim(self) -> int:
        """Dimension m of one uncertainty observation xi."""
        return self.family.data_dim(self.d)


# ---------------------------------------------------------------------------
# Matrix/vector layout owned here so all modules agree

def vectorize_matrix(a: np.ndarray) -> np.ndarray:
    """vec(A) = concatenation of the rows of A."""
    return np.asarray(a, dtype=float).reshape(-1)


def devectorize_matrix(v: np.ndarray, rows: int, cols: int) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size != rows * cols:
        raise InvalidArgumentError(f"cannot reshape {v.size} entries to {rows}x{cols}")
    return v.reshape(rows, cols)


def split_quadratic_point(v: np.ndarray, q: int, d: int):
    """(vec(A), b, c) layout -> (A: q x d, b: R^d, c: scalar)."""
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size != q * d + d + 1:
        raise InvalidArgumentError(f"quadratic point needs {q*d+d+1} entries, got {v.size}")
    a = v[: q * d].reshape(q, d)
    b = v[q * d : q * d + d]
    c = float(v[-1])
    return a, b, c


def split_semidefinite_point(v: np.ndarray, d: int, p: int) -> list[np.ndarray]:
    """Stacked coefficient layout -> list of d matrices, each p x p."""
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size != d * p * p:
        raise InvalidArgumentError(f"semidefinite point needs {d*p*p} entries, got {v.size}")
    stacked = v.reshape(d * p, p)
    return [stacked[j * p : (j + 1) * p, :] for j in range(d)]


def semidefinite_rhs_matrix(spec: "CcpSpec") -> np.ndarray:
    """The constant matrix B stored row-major in a semidefinite spec's rhs."""
    if not isinstance(spec.family, Semidefinite):
        raise InvalidArgumentError("spec does not use the semidefinite family")
    p = spec.family.p
    return spec.rhs.reshape(p, p)


# ---------------------------------------------------------------------------
# I/O

def load_dataset_csv(path, skip_header: bool = False) -> Dataset:
    try:
        arr = np.loadtxt(path, delimiter=",", skiprows=1 if skip_header else 0, ndmin=2)
    except ValueError as exc:
        raise InvalidArgumentError(f"could not parse CSV dataset: {exc}") from exc
    return Dataset(arr)


def save_dataset_csv(data: Dataset, path) -> None:
    np.savetxt(path, data.points, delimiter=",", fmt="%.17g")


def _family_to_json(family) -> dict:
    out = {"kind": family.kind}
    if isinstance(family, JointLinear):
        out["l"] = family.l
    elif isinstance(family, Quadratic):
        out["q"] = family.q
    elif isinstance(family, Semidefinite):
        out["p"] = family.p
    return out


def _family_from_json(obj: dict):
    kind = obj.get("kind")
    if kind == "single_linear":
        return SingleLinear()
    if kind == "joint_linear":
        return JointLinear(l=int(obj["l"]))
    if kind == "quadratic":
        return Quadratic(q=int(obj["q"]))
    if kind == "semidefinite":
        return Semidefinite(p=int(obj["p"]))
    raise InvalidArgumentError(f"unknown constraint family kind: {kind!r}")


def spec_to_json(spec: CcpSpec) -> str:
    doc = {
        "objective": spec.objective.tolist(),
        "family": _family_to_json(spec.family),
        "rhs": spec.rhs.tolist(),
        "det_constraints": None
        if spec.det is None
        else {"A_ub": spec.det.a_ub.tolist(), "b_ub": spec.det.b_ub.tolist()},
        "epsilon": spec.epsilon,
        "delta": spec.delta,
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def spec_from_json(text: str) -> CcpSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidArgumentError(f"invalid CcpSpec JSON: {exc}") from exc
    for key in ("objective", "family", "rhs", "epsilon", "delta"):
        if key not in doc:
            raise InvalidArgumentError(f"CcpSpec JSON missing field {key!r}")
    det = None
    if doc.get("det_constraints") is not None:
        det = DetConstraints(
            a_ub=np.asarray(doc["det_constraints"]["A_ub"], dtype=float),
            b_ub=np.asarray(doc["det_constraints"]["b_ub"], dtype=float),
        )
    return CcpSpec(
        objective=np.asarray(doc["objective"], dtype=float),
        family=_family_from_json(doc["family"]),
        rhs=np.asarray(doc["rhs"], dtype=float),
        epsilon=float(doc["epsilon"]),
        delta=float(doc["delta"]),
        det=det,
    )
