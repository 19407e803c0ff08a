"""Monte Carlo validation: violation metrics, replicated experiments,
and the set-reconstruction pipeline.

A replication draws a fresh dataset, runs one solution method end to end,
and scores the returned decision by its true (analytic or simulated)
constraint violation probability. Aggregates follow the usual two-level
reading: eps_hat is the mean violation probability of the returned
solutions, delta_hat the fraction of replications whose solution misses
the epsilon target.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import baselines, conic, model, reformulate, shapes
from .calibrate import CalibResult
from .errors import InvalidArgumentError, RosetError

__all__ = [
    "Sampler",
    "gaussian_sampler",
    "mixture_sampler",
    "scaled_beta_sampler",
    "quadratic_wishart_sampler",
    "sdp_wishart_sampler",
    "pca_synthetic_sampler",
    "sampler_to_obj",
    "sampler_from_obj",
    "gaussian_violation",
    "violation_rate",
    "mc_violation",
    "fit_shape",
    "SHAPE_KINDS",
    "ExperimentConfig",
    "ReplicationRecord",
    "ExperimentReport",
    "run_replications",
    "ReconstructionResult",
    "reconstruction_pipeline",
    "report_to_csv",
    "report_to_json",
]

# fixed odd stride so evaluation draws never reuse a replication's data stream
EVAL_SEED_STRIDE = 0x9E3779B97F4A7C15


def _rep_seed(master_seed: int, r: int) -> int:
    return int(master_seed) ^ int(r)


def _eval_seed(master_seed: int, r: int) -> int:
    return int(master_seed) ^ int(r) ^ EVAL_SEED_STRIDE


# ---------------------------------------------------------------------------
# data generators


@dataclass(frozen=True, eq=False)
class Sampler:
    """A named distribution over observations xi; draw(rng, n) -> (n, m)."""

    kind: str
    params: dict

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        n = int(n)
        if n < 0:
            raise InvalidArgumentError("draw count must be >= 0")
        p = self.params
        if self.kind == "gaussian":
            z = rng.normal(size=(n, p["mu"].size))
            return p["mu"] + z @ p["chol"].T
        if self.kind == "mixture":
            comp = rng.choice(p["weights"].size, size=n, p=p["weights"])
            z = rng.normal(size=(n, p["means"].shape[1]))
            out = np.empty_like(z)
            for j in range(p["weights"].size):
                mask = comp == j
                out[mask] = p["means"][j] + z[mask] @ p["chols"][j].T
            return out
        if self.kind == "scaled_beta":
            zeta = 2.0 * rng.beta(p["alpha"], p["beta"], size=(n, p["a_rows"].shape[0])) - 1.0
            return p["a0"] + zeta @ p["a_rows"]
        if self.kind == "quadratic_wishart":
            d, dof, q = p["d"], p["dof"], p["q"]
            out = np.empty((n, d * d + d + 1))
            for i in range(n):
                g = rng.normal(size=(d, dof))
                m_mat = g @ g.T
                mu = rng.uniform(p["mu_low"], p["mu_high"], size=d)
                evals, evecs = np.linalg.eigh(m_mat)
                root = (evecs * np.sqrt(np.maximum(evals, 0.0))) @ evecs.T
                out[i, : d * d] = root.reshape(-1)
                out[i, d * d : d * d + d] = 2.0 * m_mat @ mu
                out[i, -1] = q - mu @ m_mat @ mu
            return out
        if self.kind == "sdp_wishart":
            mats, dof = p["a_mats"], p["dof"]
            d, pp = mats.shape[0], mats.shape[1]
            out = np.empty((n, d * pp * pp))
            for i in range(n):
                point = np.empty((d, pp, pp))
                for j in range(d):
                    g = rng.normal(size=(pp, dof))
                    point[j] = mats[j] + g @ g.T
                out[i] = point.reshape(-1)
            return out
        if self.kind == "pca_synthetic":
            latent = p["mu"] + rng.normal(size=(n, p["mu"].size)) @ p["chol"].T
            noise = rng.uniform(-p["noise"], p["noise"],
                                size=(n, p["projection"].shape[0]))
            return latent @ p["projection"].T + noise
        raise InvalidArgumentError(f"unknown sampler kind {self.kind!r}")

    @property
    def dim(self) -> int:
        p = self.params
        if self.kind == "gaussian":
            return p["mu"].size
        if self.kind == "mixture":
            return p["means"].shape[1]
        if self.kind == "scaled_beta":
            return p["a0"].size
        if self.kind == "quadratic_wishart":
            return p["d"] * p["d"] + p["d"] + 1
        if self.kind == "sdp_wishart":
            return p["a_mats"].shape[0] * p["a_mats"].shape[1] ** 2
        if self.kind == "pca_synthetic":
            return p["projection"].shape[0]
        raise InvalidArgumentError(f"unknown sampler kind {self.kind!r}")


def _spd_chol(sigma, what: str) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=float)
    try:
        return np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise InvalidArgumentError(f"{what} must be symmetric positive definite") from exc


def gaussian_sampler(mu, sigma) -> Sampler:
    mu = np.asarray(mu, dtype=float).reshape(-1)
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (mu.size, mu.size):
        raise InvalidArgumentError("sigma must be square and match mu")
    return Sampler("gaussian", {"mu": mu, "sigma": sigma,
                                "chol": _spd_chol(sigma, "sigma")})


def mixture_sampler(weights, means, sigmas) -> Sampler:
    weights = np.asarray(weights, dtype=float).reshape(-1)
    means = np.asarray(means, dtype=float)
    sigmas = np.asarray(sigmas, dtype=float)
    if means.ndim != 2 or means.shape[0] != weights.size:
        raise InvalidArgumentError("means must be (k, m) aligned with weights")
    if sigmas.shape != (weights.size, means.shape[1], means.shape[1]):
        raise InvalidArgumentError("sigmas must be (k, m, m)")
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-9:
        raise InvalidArgumentError("weights must be a probability vector")
    chols = np.stack([_spd_chol(s, "mixture sigma") for s in sigmas])
    return Sampler("mixture", {"weights": weights, "means": means,
                               "sigmas": sigmas, "chols": chols})


def scaled_beta_sampler(a0, a_rows, alpha: float = 2.0, beta: float = 2.0) -> Sampler:
    a0 = np.asarray(a0, dtype=float).reshape(-1)
    a_rows = np.asarray(a_rows, dtype=float)
    if a_rows.ndim != 2 or a_rows.shape[1] != a0.size:
        raise InvalidArgumentError("a_rows must be (L, d) matching a0")
    if not (alpha > 0 and beta > 0):
        raise InvalidArgumentError("beta parameters must be positive")
    return Sampler("scaled_beta", {"a0": a0, "a_rows": a_rows,
                                   "alpha": float(alpha), "beta": float(beta)})


def quadratic_wishart_sampler(d: int, q: float, mu_low: float = 0.0,
                              mu_high: float = 5.0, dof: int | None = None) -> Sampler:
    d = int(d)
    if d < 1:
        raise InvalidArgumentError("dimension must be >= 1")
    dof = d if dof is None else int(dof)
    if dof < d:
        raise InvalidArgumentError("Wishart dof must be >= dimension")
    if not mu_low <= mu_high:
        raise InvalidArgumentError("need mu_low <= mu_high")
    return Sampler("quadratic_wishart", {"d": d, "dof": dof, "q": float(q),
                                         "mu_low": float(mu_low),
                                         "mu_high": float(mu_high)})


def sdp_wishart_sampler(a_mats, dof: int | None = None) -> Sampler:
    a_mats = np.asarray(a_mats, dtype=float)
    if a_mats.ndim != 3 or a_mats.shape[1] != a_mats.shape[2]:
        raise InvalidArgumentError("a_mats must be (d, p, p)")
    p = a_mats.shape[1]
    dof = p if dof is None else int(dof)
    if dof < p:
        raise InvalidArgumentError("Wishart dof must be >= matrix side")
    return Sampler("sdp_wishart", {"a_mats": a_mats, "dof": dof})


def pca_synthetic_sampler(mu, sigma, projection, noise: float = 0.0005) -> Sampler:
    mu = np.asarray(mu, dtype=float).reshape(-1)
    projection = np.asarray(projection, dtype=float)
    if projection.ndim != 2 or projection.shape[1] != mu.size:
        raise InvalidArgumentError("projection must be (m, k) matching mu")
    if noise < 0:
        raise InvalidArgumentError("noise half-width must be >= 0")
    return Sampler("pca_synthetic", {"mu": mu,
                                     "sigma": np.asarray(sigma, dtype=float),
                                     "chol": _spd_chol(sigma, "sigma"),
                                     "projection": projection,
                                     "noise": float(noise)})


_SAMPLER_FACTORIES = {
    "gaussian": lambda p: gaussian_sampler(p["mu"], p["sigma"]),
    "mixture": lambda p: mixture_sampler(p["weights"], p["means"], p["sigmas"]),
    "scaled_beta": lambda p: scaled_beta_sampler(
        p["a0"], p["a_rows"], p.get("alpha", 2.0), p.get("beta", 2.0)),
    "quadratic_wishart": lambda p: quadratic_wishart_sampler(
        p["d"], p["q"], p.get("mu_low", 0.0), p.get("mu_high", 5.0), p.get("dof")),
    "sdp_wishart": lambda p: sdp_wishart_sampler(p["a_mats"], p.get("dof")),
    "pca_synthetic": lambda p: pca_synthetic_sampler(
        p["mu"], p["sigma"], p["projection"], p.get("noise", 0.0005)),
}

# parameters worth serializing, per kind (derived arrays like chol excluded)
_SAMPLER_FIELDS = {
    "gaussian": ("mu", "sigma"),
    "mixture": ("weights", "means", "sigmas"),
    "scaled_beta": ("a0", "a_rows", "alpha", "beta"),
    "quadratic_wishart": ("d", "dof", "q", "mu_low", "mu_high"),
    "sdp_wishart": ("a_mats", "dof"),
    "pca_synthetic": ("mu", "sigma", "projection", "noise"),
}


def sampler_to_obj(sampler: Sampler) -> dict:
    out = {"kind": sampler.kind, "params": {}}
    for name in _SAMPLER_FIELDS[sampler.kind]:
        value = sampler.params[name]
        out["params"][name] = value.tolist() if isinstance(value, np.ndarray) else value
    return out


def sampler_from_obj(obj: dict) -> Sampler:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise InvalidArgumentError("sampler object needs a 'kind' field")
    kind = obj["kind"]
    factory = _SAMPLER_FACTORIES.get(kind)
    if factory is None:
        raise InvalidArgumentError(f"unknown sampler kind {kind!r}")
    raw = obj.get("params", {})
    if not isinstance(raw, dict):
        raise InvalidArgumentError("sampler params must be an object")
    params = {k: (np.asarray(v, dtype=float) if isinstance(v, list) else v)
              for k, v in raw.items()}
    try:
        return factory(params)
    except KeyError as exc:
        raise InvalidArgumentError(f"sampler params missing {exc}") from exc


# ---------------------------------------------------------------------------
# violation metrics


def gaussian_violation(x, mu, sigma, b: float) -> float:
    """P(xi'x > b) for xi ~ N(mu, sigma), evaluated in closed form."""
    x = np.asarray(x, dtype=float).reshape(-1)
    mu = np.asarray(mu, dtype=float).reshape(-1)
    sigma = np.asarray(sigma, dtype=float)
    if np.all(x == 0.0):
        return 0.0 if b >= 0 else 1.0
    var = float(x @ sigma @ x)
    if var <= 0.0:
        raise InvalidArgumentError("sigma must be positive definite")
    t = (float(b) - float(mu @ x)) / math.sqrt(var)
    return 0.5 * math.erfc(t / math.sqrt(2.0))


def violation_rate(spec: model.CcpSpec, x, points) -> float:
    """Fraction of observation rows whose constraint is violated at x."""
    x = np.asarray(x, dtype=float).reshape(-1)
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != spec.data_dim:
        raise InvalidArgumentError(
            f"points must be (n, {spec.data_dim}), got {pts.shape}")
    fam = spec.family
    if isinstance(fam, model.SingleLinear):
        return float(np.mean(pts @ x > spec.rhs[0]))
    if isinstance(fam, model.JointLinear):
        lhs = pts.reshape(pts.shape[0], fam.l, spec.d) @ x
        return float(np.mean(np.any(lhs > spec.rhs, axis=1)))
    if isinstance(fam, model.Quadratic):
        q, d = fam.q, spec.d
        a_part = pts[:, : q * d].reshape(-1, q, d)
        ax = a_part @ x
        quad = np.sum(ax * ax, axis=1)
        lin = pts[:, q * d : q * d + d] @ x
        return float(np.mean(quad - lin - pts[:, -1] > spec.rhs[0]))
    if isinstance(fam, model.Semidefinite):
        p = fam.p
        mats = pts.reshape(pts.shape[0], spec.d, p, p)
        lhs = np.einsum("ndpq,d->npq", mats, x) + model.semidefinite_rhs_matrix(spec)
        lhs = (lhs + lhs.transpose(0, 2, 1)) / 2.0
        eigs = np.linalg.eigvalsh(lhs)[:, 0]
        return float(np.mean(eigs < 0.0))
    raise InvalidArgumentError(f"unknown family {fam!r}")


def mc_violation(x, sampler: Sampler, spec: model.CcpSpec,
                 n_eval: int = 10_000, seed: int = 0) -> float:
    """Monte Carlo estimate of the violation probability at x."""
    if n_eval < 1:
        raise InvalidArgumentError("n_eval must be >= 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    pts = sampler.draw(rng, n_eval)
    return violation_rate(spec, x, pts)


# ---------------------------------------------------------------------------
# shape fitting by name


SHAPE_KINDS = ("ellipsoid", "diag_ellipsoid", "ball", "polytope_box", "pca",
               "cluster_union", "ball_basis", "box_grid")


def fit_shape(kind: str, phase1, options: dict | None = None):
    """Fit a Phase-1 shape by its registry name."""
    opts = dict(options or {})
    if kind == "ellipsoid":
        return shapes.fit_ellipsoid(phase1, mode="full")
    if kind == "diag_ellipsoid":
        return shapes.fit_ellipsoid(phase1, mode="diag")
    if kind == "ball":
        return shapes.fit_ellipsoid(phase1, mode="ball")
    if kind == "polytope_box":
        return shapes.fit_polytope_box(phase1)
    if kind == "pca":
        return shapes.pca_ellipsoid(phase1, **opts)
    if kind == "cluster_union":
        return shapes.cluster_union(phase1, k=int(opts.get("k", 2)),
                                    mode=opts.get("mode", "full"),
                                    seed=int(opts.get("seed", 0)))
    if kind == "ball_basis":
        return shapes.ball_basis(phase1)
    if kind == "box_grid":
        return shapes.grid_histogram(phase1, width=float(opts["width"]))
    raise InvalidArgumentError(
        f"unknown shape kind {kind!r}; known: {', '.join(SHAPE_KINDS)}")


# ---------------------------------------------------------------------------
# experiment configuration and report


_METHODS = ("ro", "ro_reconstructed", "sg", "safe_hoeffding", "safe_gaussian")


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """One experiment: a CCP, a data law, a method, and split sizes."""

    spec: model.CcpSpec
    sampler: Sampler
    method: str
    n: int
    n1: int = 0
    shape: str = "ellipsoid"
    shape_options: dict | None = None
    n_eval: int = 10_000
    violation: str = "auto"  # auto | mc | analytic
    perturbation: dict | None = None
    scale: str = "auto"      # reconstruction scale policy: auto | margin | std

    def __post_init__(self):
        if self.method not in _METHODS:
            raise InvalidArgumentError(
                f"method must be one of {', '.join(_METHODS)}")
        if self.shape not in SHAPE_KINDS:
            raise InvalidArgumentError(
                f"unknown shape kind {self.shape!r}; known: {', '.join(SHAPE_KINDS)}")
        if self.n < 1:
            raise InvalidArgumentError("n must be >= 1")
        if not (0 <= self.n1 <= self.n):
            raise InvalidArgumentError("need 0 <= n1 <= n")
        if self.violation not in ("auto", "mc", "analytic"):
            raise InvalidArgumentError("violation must be auto, mc, or analytic")
        if self.scale not in ("auto", "margin", "std"):
            raise InvalidArgumentError("scale must be auto, margin, or std")
        if self.sampler.dim != self.spec.data_dim:
            raise InvalidArgumentError(
                f"sampler draws dimension {self.sampler.dim} but the family "
                f"expects {self.spec.data_dim}")
        if not isinstance(self.spec.family,
                          (model.SingleLinear, model.JointLinear)):
            raise InvalidArgumentError(
                "replicated experiments need a linear constraint family; "
                "conic families build export-only programs")
        if self.method in ("safe_hoeffding", "safe_gaussian"):
            if not isinstance(self.spec.family, model.SingleLinear):
                raise InvalidArgumentError(
                    "safe approximations apply to the single linear family")
            pert = self.perturbation or {}
            need = {"a0", "a_rows"}
            if self.method == "safe_gaussian":
                need |= {"mu_minus", "mu_plus", "sigma"}
            missing = sorted(need - set(pert))
            if missing:
                raise InvalidArgumentError(
                    f"{self.method} needs perturbation fields: {', '.join(missing)}")

    @property
    def n2(self) -> int:
        return self.n - self.n1


@dataclass(frozen=True)
class ReplicationRecord:
    replication: int
    status: str
    objective: float | None
    violation_probability: float | None
    note: str = ""


@dataclass(frozen=True)
class ExperimentReport:
    records: tuple[ReplicationRecord, ...]
    mean_objective: float | None
    eps_hat: float | None
    delta_hat: float
    r: int
    failures: int
    config_echo: dict


def _violation_of(config: ExperimentConfig, x, master_seed: int, r: int) -> float:
    mode = config.violation
    analytic_ok = (config.sampler.kind == "gaussian"
                   and isinstance(config.spec.family, model.SingleLinear))
    if mode == "analytic" and not analytic_ok:
        raise InvalidArgumentError(
            "analytic violation needs a gaussian sampler and the single "
            "linear family")
    if mode == "analytic" or (mode == "auto" and analytic_ok):
        p = config.sampler.params
        return gaussian_violation(x, p["mu"], p["sigma"], float(config.spec.rhs[0]))
    return mc_violation(x, config.sampler, config.spec, config.n_eval,
                        seed=_eval_seed(master_seed, r))


def _solve_ro(config: ExperimentConfig, data_rows: np.ndarray, seed: int):
    split = model.split_data(model.Dataset(data_rows), config.n1, seed)
    shape = fit_shape(config.shape, split.phase1.points, config.shape_options)
    pset = shapes.build_prediction_set(shape, split.phase2.points,
                                       config.spec.epsilon, config.spec.delta)
    rp = reformulate.assemble_ro(config.spec, pset)
    sol = conic.solve(rp.program)
    return sol, sol.x[: config.spec.d] if sol.status is conic.SolveStatus.OPTIMAL else None


def _run_one(config: ExperimentConfig, master_seed: int, r: int) -> ReplicationRecord:
    seed = _rep_seed(master_seed, r)
    rng = np.random.Generator(np.random.PCG64(seed))
    note = ""
    try:
        data_rows = config.sampler.draw(rng, config.n)
        if config.method == "ro":
            sol, x = _solve_ro(config, data_rows, seed)
            status = sol.status.value
        elif config.method == "ro_reconstructed":
            rec = reconstruction_pipeline(data_rows, config.spec, config.n1,
                                          seed=seed, shape=config.shape,
                                          shape_options=config.shape_options,
                                          scale=config.scale)
            status = rec.status_reconstructed
            x = rec.x_tilde
            note = f"rho={rec.rho:.6g}" if rec.rho is not None else ""
        elif config.method == "sg":
            sol = baselines.sg_solve(config.spec, data_rows)
            status = sol.status.value
            x = sol.x[: config.spec.d] if sol.status is conic.SolveStatus.OPTIMAL else None
        elif config.method == "safe_hoeffding":
            pert = config.perturbation
            prog = baselines.safe_hoeffding(
                config.spec.objective, pert["a0"], pert["a_rows"],
                float(config.spec.rhs[0]), config.spec.epsilon,
                det=config.spec.det)
            sol = conic.solve(prog)
            status = sol.status.value
            x = sol.x[: config.spec.d] if sol.status is conic.SolveStatus.OPTIMAL else None
        else:  # safe_gaussian
            pert = config.perturbation
            prog = baselines.safe_gaussian(
                config.spec.objective, pert["a0"], pert["a_rows"],
                pert["mu_minus"], pert["mu_plus"], pert["sigma"],
                float(config.spec.rhs[0]), config.spec.epsilon,
                det=config.spec.det)
            sol = conic.solve(prog)
            status = sol.status.value
            x = sol.x[: config.spec.d] if sol.status is conic.SolveStatus.OPTIMAL else None
    except RosetError as exc:
        return ReplicationRecord(replication=r, status="error", objective=None,
                                 violation_probability=None,
                                 note=f"{type(exc).__name__}: {exc}")
    if x is None:
        return ReplicationRecord(replication=r, status=status, objective=None,
                                 violation_probability=None, note=note)
    objective = float(config.spec.objective @ x)
    viol = _violation_of(config, x, master_seed, r)
    return ReplicationRecord(replication=r, status=status, objective=objective,
                             violation_probability=viol, note=note)


def run_replications(config: ExperimentConfig, r_count: int, master_seed: int,
                     jobs: int = 1) -> ExperimentReport:
    """Run R independent replications; aggregation ignores execution order."""
    r_count = int(r_count)
    if r_count < 1:
        raise InvalidArgumentError("replication count must be >= 1")
    jobs = max(1, int(jobs))
    if jobs == 1:
        records = [_run_one(config, master_seed, r) for r in range(r_count)]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(lambda r: _run_one(config, master_seed, r),
                                    range(r_count)))
    records.sort(key=lambda rec: rec.replication)

    good = [rec for rec in records if rec.violation_probability is not None]
    failures = r_count - len(good)
    eps_hat = (float(np.mean([rec.violation_probability for rec in good]))
               if good else None)
    mean_obj = (float(np.mean([rec.objective for rec in good]))
                if good else None)
    # a failed replication has no feasible solution to certify: count it
    # against the method when scoring the confidence level
    over = sum(1 for rec in good
               if rec.violation_probability > config.spec.epsilon)
    delta_hat = (over + failures) / r_count
    echo = {
        "method": config.method,
        "shape": config.shape,
        "epsilon": config.spec.epsilon,
        "delta": config.spec.delta,
        "n": config.n,
        "n1": config.n1,
        "n2": config.n2,
        "seed": int(master_seed),
        "n_eval": config.n_eval,
        "violation": config.violation,
    }
    return ExperimentReport(records=tuple(records), mean_objective=mean_obj,
                            eps_hat=eps_hat, delta_hat=float(delta_hat),
                            r=r_count, failures=failures, config_echo=echo)


# ---------------------------------------------------------------------------
# reconstruction pipeline


@dataclass(frozen=True)
class ReconstructionResult:
    x_hat: np.ndarray | None
    x_tilde: np.ndarray | None
    obj_hat: float | None
    obj_tilde: float | None
    rho: float | None
    scale: np.ndarray | None
    scale_fallback_rows: tuple[int, ...]
    status_initial: str
    status_reconstructed: str

    @property
    def improved(self) -> bool | None:
        if self.obj_hat is None or self.obj_tilde is None:
            return None
        return bool(self.obj_tilde <= self.obj_hat + 1e-8)


def reconstruction_pipeline(data, spec: model.CcpSpec, n1: int, seed: int = 0,
                            shape: str = "ellipsoid",
                            shape_options: dict | None = None,
                            scale: str = "auto") -> ReconstructionResult:
    """Initial RO solve on a Phase-1 region, then margin-based reshaping.

    Phase 1 fits the shape and sizes it to cover ceil(n1(1-eps)) of its own
    points; solving that RO gives x_hat. The set is then rebuilt around
    x_hat's constraint margins and recalibrated on Phase 2, and the
    reconstructed RO is solved for x_tilde.
    """
    if scale not in ("auto", "margin", "std"):
        raise InvalidArgumentError("scale must be auto, margin, or std")
    pts = data.points if isinstance(data, model.Dataset) else np.asarray(data, dtype=float)
    split = model.split_data(model.Dataset(pts), int(n1), seed)
    ph1 = split.phase1.points
    ph2 = split.phase2.points
    if ph1.shape[0] < 1:
        raise InvalidArgumentError("reconstruction needs at least one Phase-1 row")

    fitted = fit_shape(shape, ph1, shape_options)
    values = np.sort(shapes.transform_values(fitted, ph1))
    cover = min(len(values), max(1, math.ceil(len(values) * (1.0 - spec.epsilon))))
    s0 = float(values[cover - 1])
    pset0 = shapes.PredictionSet(
        shape=fitted, size=s0,
        calib=CalibResult(i_star=cover, s=s0, n2=len(values),
                          epsilon=spec.epsilon, delta=spec.delta,
                          tie_warning=False))
    sol0 = conic.solve(reformulate.assemble_ro(spec, pset0).program)
    if sol0.status is not conic.SolveStatus.OPTIMAL:
        return ReconstructionResult(
            x_hat=None, x_tilde=None, obj_hat=None, obj_tilde=None, rho=None,
            scale=None, scale_fallback_rows=(),
            status_initial=sol0.status.value, status_reconstructed="skipped")
    x_hat = sol0.x[: spec.d]
    obj_hat = float(spec.objective @ x_hat)

    l = spec.family.n_rows()
    blocks = ph1.reshape(ph1.shape[0], l, spec.d)
    lhs_rows = blocks @ x_hat  # (n1, l)
    if scale == "std":
        k = lhs_rows.std(axis=0, ddof=0)
        fallback = tuple(range(l))
    else:
        mu_rows = blocks.mean(axis=0)
        k = spec.rhs - mu_rows @ x_hat
        bad = np.flatnonzero(k <= 0.0)
        if bad.size and scale == "margin":
            raise InvalidArgumentError(
                f"margin scale is nonpositive on rows {bad.tolist()}; "
                "use scale='auto' or 'std'")
        if bad.size:
            k = k.copy()
            k[bad] = lhs_rows[:, bad].std(axis=0, ddof=0)
            warnings.warn(
                f"margin scale was nonpositive on rows {bad.tolist()}; "
                "fell back to the per-row standard deviation",
                stacklevel=2)
        fallback = tuple(int(i) for i in bad)

    pset_rec = reformulate.build_reconstruction_set(
        x_hat, spec, k, ph2, spec.epsilon, spec.delta)
    rho = float(pset_rec.calib.s)
    sol1 = conic.solve(reformulate.assemble_ro(spec, pset_rec).program)
    if sol1.status is not conic.SolveStatus.OPTIMAL:
        return ReconstructionResult(
            x_hat=x_hat, x_tilde=None, obj_hat=obj_hat, obj_tilde=None,
            rho=rho, scale=k, scale_fallback_rows=fallback,
            status_initial="optimal", status_reconstructed=sol1.status.value)
    x_tilde = sol1.x[: spec.d]
    return ReconstructionResult(
        x_hat=x_hat, x_tilde=x_tilde, obj_hat=obj_hat,
        obj_tilde=float(spec.objective @ x_tilde), rho=rho, scale=k,
        scale_fallback_rows=fallback, status_initial="optimal",
        status_reconstructed="optimal")


# ---------------------------------------------------------------------------
# experiment configuration files


def config_to_obj(config: ExperimentConfig) -> dict:
    pert = None
    if config.perturbation is not None:
        pert = {k: (np.asarray(v, dtype=float).tolist())
                for k, v in config.perturbation.items()}
    return {
        "spec": json.loads(model.spec_to_json(config.spec)),
        "sampler": sampler_to_obj(config.sampler),
        "method": config.method,
        "n": config.n,
        "n1": config.n1,
        "shape": config.shape,
        "shape_options": config.shape_options,
        "n_eval": config.n_eval,
        "violation": config.violation,
        "perturbation": pert,
        "scale": config.scale,
    }


def config_from_obj(obj: dict) -> ExperimentConfig:
    if not isinstance(obj, dict):
        raise InvalidArgumentError("experiment config must be an object")
    for key in ("spec", "sampler", "method", "n"):
        if key not in obj:
            raise InvalidArgumentError(f"experiment config missing field {key!r}")
    pert = obj.get("perturbation")
    if pert is not None:
        pert = {k: np.asarray(v, dtype=float) for k, v in pert.items()}
    return ExperimentConfig(
        spec=model.spec_from_json(json.dumps(obj["spec"])),
        sampler=sampler_from_obj(obj["sampler"]),
        method=str(obj["method"]),
        n=int(obj["n"]),
        n1=int(obj.get("n1", 0)),
        shape=str(obj.get("shape", "ellipsoid")),
        shape_options=obj.get("shape_options"),
        n_eval=int(obj.get("n_eval", 10_000)),
        violation=str(obj.get("violation", "auto")),
        perturbation=pert,
        scale=str(obj.get("scale", "auto")),
    )


# ---------------------------------------------------------------------------
# report output


def report_to_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["replication", "status", "objective",
                     "violation_probability", "note"])
    for rec in report.records:
        writer.writerow([
            rec.replication,
            rec.status,
            "" if rec.objective is None else f"{rec.objective:.17g}",
            "" if rec.violation_probability is None
            else f"{rec.violation_probability:.17g}",
            rec.note,
        ])
    return buf.getvalue()


def report_to_json(report: ExperimentReport) -> str:
    doc = {
        "aggregates": {
            "mean_objective": report.mean_objective,
            "eps_hat": report.eps_hat,
            "delta_hat": report.delta_hat,
            "replications": report.r,
            "failures": report.failures,
        },
        "config": report.config_echo,
    }
    return json.dumps(doc, indent=2, sort_keys=True)
