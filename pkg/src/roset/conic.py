"""Cone-program intermediate representation and exporters.

Programs are stored in the standard embedding

    minimize c'x  subject to  b - A x in K,

where K is an ordered product of elementary cones.  Zero, nonnegative and
second-order blocks are solvable internally (see :mod:`roset.ipm`);
positive-semidefinite blocks are carried through for export only.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import (
    ExportOnlyProgramError,
    InvalidArgumentError,
    UnsupportedExportError,
)


@dataclass(frozen=True)
class Zero:
    """Equality rows: b - Ax = 0."""

    dim: int

    kind = "zero"

    @property
    def rows(self) -> int:
        return self.dim


@dataclass(frozen=True)
class Nonneg:
    """Componentwise rows: b - Ax >= 0."""

    dim: int

    kind = "nonneg"

    @property
    def rows(self) -> int:
        return self.dim


@dataclass(frozen=True)
class SecondOrder:
    """Rows (t, u) with t >= ||u||_2; dim counts t plus the entries of u."""

    dim: int

    kind = "soc"

    @property
    def rows(self) -> int:
        return self.dim


@dataclass(frozen=True)
class PsdExportOnly:
    """A symmetric side x side block required to be PSD.

    The block occupies side*(side+1)/2 consecutive rows holding its upper
    triangle in row-major order, unscaled.  Programs containing such a block
    cannot be solved internally, only exported.
    """

    side: int

    kind = "psd"

    @property
    def rows(self) -> int:
        return self.side * (self.side + 1) // 2


Cone = Union[Zero, Nonneg, SecondOrder, PsdExportOnly]

_CONE_KINDS = {"zero": Zero, "nonneg": Nonneg, "soc": SecondOrder, "psd": PsdExportOnly}


def psd_triu_indices(side: int) -> list[tuple[int, int]]:
    """Row-major upper-triangle index pairs used by the PSD row layout."""
    return [(i, j) for i in range(side) for j in range(i, side)]


def mat_from_triu(values: np.ndarray, side: int) -> np.ndarray:
    """Rebuild the symmetric matrix whose upper triangle (row-major) is given."""
    values = np.asarray(values, dtype=float)
    if values.shape != (side * (side + 1) // 2,):
        raise InvalidArgumentError(
            f"expected {side * (side + 1) // 2} entries for side {side}, "
            f"got {values.shape}"
        )
    out = np.zeros((side, side))
    for v, (i, j) in zip(values, psd_triu_indices(side)):
        out[i, j] = v
        out[j, i] = v
    return out


def triu_from_mat(mat: np.ndarray) -> np.ndarray:
    """Inverse of :func:`mat_from_triu` for a symmetric matrix."""
    mat = np.asarray(mat, dtype=float)
    side = mat.shape[0]
    return np.array([mat[i, j] for i, j in psd_triu_indices(side)])


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class ConicProgram:
    """Immutable conic program: minimize c'x subject to b - Ax in K."""

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    cones: tuple[Cone, ...]

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).reshape(-1)
        A = np.asarray(self.A, dtype=float)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if A.ndim != 2:
            raise InvalidArgumentError("constraint matrix must be 2-d")
        if c.size != A.shape[1]:
            raise InvalidArgumentError(
                f"objective has {c.size} entries but matrix has {A.shape[1]} columns"
            )
        if b.size != A.shape[0]:
            raise InvalidArgumentError(
                f"offset has {b.size} entries but matrix has {A.shape[0]} rows"
            )
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise InvalidArgumentError("program data must be finite")
        cones = tuple(self.cones)
        total = 0
        for cone in cones:
            if isinstance(cone, PsdExportOnly):
                if cone.side < 1:
                    raise InvalidArgumentError("psd cone side must be >= 1")
            elif isinstance(cone, (Zero, Nonneg, SecondOrder)):
                if cone.dim < 1:
                    raise InvalidArgumentError(f"{cone.kind} cone dim must be >= 1")
            else:
                raise InvalidArgumentError(f"unknown cone {cone!r}")
            total += cone.rows
        if total != A.shape[0]:
            raise InvalidArgumentError(
                f"cone rows sum to {total} but matrix has {A.shape[0]} rows"
            )
        object.__setattr__(self, "c", _freeze(c))
        object.__setattr__(self, "A", _freeze(A))
        object.__setattr__(self, "b", _freeze(b))
        object.__setattr__(self, "cones", cones)

    @property
    def n_vars(self) -> int:
        return self.c.size

    @property
    def n_rows(self) -> int:
        return self.b.size

    @property
    def is_export_only(self) -> bool:
        return any(isinstance(cone, PsdExportOnly) for cone in self.cones)

    def cone_slices(self) -> list[tuple[Cone, slice]]:
        """Each cone paired with its row slice, in order."""
        out = []
        start = 0
        for cone in self.cones:
            out.append((cone, slice(start, start + cone.rows)))
            start += cone.rows
        return out


class SolveStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITER_LIMIT = "iter-limit"
    EXPORT_ONLY = "export-only"


@dataclass(frozen=True, eq=False)
class Solution:
    """Solver output.

    For OPTIMAL the primal/dual points satisfy the advertised tolerances.
    For INFEASIBLE, (y, z) is a Farkas certificate with b'y + h'z = -1; for
    UNBOUNDED, x is a ray with c'x = -1.  cert_residual measures certificate
    quality; it is None for other statuses.
    """

    status: SolveStatus
    x: Optional[np.ndarray]
    y: Optional[np.ndarray]
    z: Optional[np.ndarray]
    s: Optional[np.ndarray]
    obj: Optional[float]
    gap: Optional[float]
    gap_abs: Optional[float]
    pres: Optional[float]
    dres: Optional[float]
    iterations: int
    cert_residual: Optional[float] = None
    trace: tuple = ()


def solve(prog: ConicProgram, gap_tol: float = 1e-8, feas_tol: float = 1e-8,
          max_iter: int = 200) -> Solution:
    """Solve an LP/SOC program with the interior-point method.

    Raises ExportOnlyProgramError if the program has a PSD block.
    """
    from . import ipm

    return ipm.solve(prog, gap_tol=gap_tol, feas_tol=feas_tol, max_iter=max_iter)


def export(prog: ConicProgram, format: str) -> str:
    """Serialize a program; format is "json" (lossless) or "sdpa" (sparse)."""
    if format == "json":
        return _export_json(prog)
    if format == "sdpa":
        return _export_sdpa(prog)
    raise InvalidArgumentError(f"unknown export format {format!r}")


def _cone_to_obj(cone: Cone) -> dict:
    if isinstance(cone, PsdExportOnly):
        return {"type": "psd", "side": cone.side}
    return {"type": cone.kind, "dim": cone.dim}


def _cone_from_obj(obj: dict) -> Cone:
    try:
        kind = obj["type"]
        cls = _CONE_KINDS[kind]
        if kind == "psd":
            return cls(side=int(obj["side"]))
        return cls(dim=int(obj["dim"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidArgumentError(f"bad cone entry {obj!r}") from exc


def _export_json(prog: ConicProgram) -> str:
    payload = {
        "format": "conic-program",
        "version": 1,
        "objective": prog.c.tolist(),
        "matrix": prog.A.tolist(),
        "offset": prog.b.tolist(),
        "cones": [_cone_to_obj(cone) for cone in prog.cones],
    }
    return json.dumps(payload, indent=2, sort_keys=True)


def parse_json(text: str) -> ConicProgram:
    """Inverse of export(prog, "json"); round-trips exactly."""
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidArgumentError(f"invalid program JSON: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("format") != "conic-program":
        raise InvalidArgumentError("not a conic program document")
    try:
        c = np.array(payload["objective"], dtype=float)
        A = np.array(payload["matrix"], dtype=float)
        b = np.array(payload["offset"], dtype=float)
        cones = tuple(_cone_from_obj(o) for o in payload["cones"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidArgumentError(f"malformed program document: {exc}") from exc
    if A.size == 0:
        A = A.reshape(b.size, c.size)
    return ConicProgram(c=c, A=A, b=b, cones=cones)


def _fmt(v: float) -> str:
    return repr(float(v))


def _export_sdpa(prog: ConicProgram) -> str:
    """SDPA sparse format (.dat-s).

    The target problem is minimize c'x s.t. sum_k x_k F_k - F_0 >= 0
    (block diagonal).  Nonneg rows become diagonal entries, Zero rows become
    paired +/- diagonal entries, and each PSD block becomes its own block
    with F_k = -mat(A e_k) and F_0 = -mat(b) so that
    sum x_k F_k - F_0 = mat(b - Ax).
    """
    for cone in prog.cones:
        if isinstance(cone, SecondOrder):
            raise UnsupportedExportError(
                "sdpa export supports zero, nonneg and psd cones only"
            )
    m = prog.n_vars
    sizes: list[int] = []
    # entries[k] holds (block, i, j, value) for matrix F_k; index 0 is F_0
    entries: list[list[tuple[int, int, int, float]]] = [[] for _ in range(m + 1)]
    blk = 0
    for cone, sl in prog.cone_slices():
        blk += 1
        rows = range(sl.start, sl.stop)
        if isinstance(cone, Zero):
            sizes.append(-2 * cone.dim)
            for local, r in enumerate(rows):
                for offset, sign in ((0, -1.0), (cone.dim, 1.0)):
                    i = local + offset + 1
                    if prog.b[r] != 0.0:
                        entries[0].append((blk, i, i, sign * prog.b[r]))
                    for k in range(m):
                        if prog.A[r, k] != 0.0:
                            entries[k + 1].append((blk, i, i, sign * prog.A[r, k]))
        elif isinstance(cone, Nonneg):
            sizes.append(-cone.dim)
            for local, r in enumerate(rows):
                i = local + 1
                if prog.b[r] != 0.0:
                    entries[0].append((blk, i, i, -prog.b[r]))
                for k in range(m):
                    if prog.A[r, k] != 0.0:
                        entries[k + 1].append((blk, i, i, -prog.A[r, k]))
        else:  # PsdExportOnly
            sizes.append(cone.side)
            pairs = psd_triu_indices(cone.side)
            for local, r in enumerate(rows):
                i, j = pairs[local]
                if prog.b[r] != 0.0:
                    entries[0].append((blk, i + 1, j + 1, -prog.b[r]))
                for k in range(m):
                    if prog.A[r, k] != 0.0:
                        entries[k + 1].append((blk, i + 1, j + 1, -prog.A[r, k]))
    lines = [str(m), str(len(sizes)), " ".join(str(s) for s in sizes),
             " ".join(_fmt(v) for v in prog.c)]
    for k in range(m + 1):
        for blk_i, i, j, v in entries[k]:
            lines.append(f"{k} {blk_i} {i} {j} {_fmt(v)}")
    return "\n".join(lines) + "\n"


def format_program(prog: ConicProgram) -> str:
    """Human-readable rendering of a program."""
    lines = [f"conic program: {prog.n_vars} variables, {prog.n_rows} rows"]
    terms = [f"{c:+.6g}*x{k}" for k, c in enumerate(prog.c) if c != 0.0]
    lines.append("minimize " + (" ".join(terms) if terms else "0"))
    names = {"zero": "= 0", "nonneg": ">= 0", "soc": "in Q", "psd": ">> 0 (psd)"}
    for idx, (cone, sl) in enumerate(prog.cone_slices()):
        if isinstance(cone, PsdExportOnly):
            head = f"block {idx}: Psd(side={cone.side})"
        else:
            head = f"block {idx}: {type(cone).__name__}({cone.dim})"
        lines.append(head + f"  rows {sl.start}..{sl.stop - 1}, b - Ax {names[cone.kind]}")
        for r in range(sl.start, sl.stop):
            coeffs = " ".join(f"{v:9.4g}" for v in prog.A[r])
            lines.append(f"  [{prog.b[r]:9.4g}] - [{coeffs}] x")
    return "\n".join(lines) + "\n"
