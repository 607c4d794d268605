"""Homogeneous quadratic instances, their semidefinite relaxations, and solves.

An instance is

    min  or max   x* C x
    subject to    x* A_k x >= 1 (minimization) or <= 1 (maximization),
                  k = 0..m,  x in R^n or C^n,

and its relaxation replaces xx* by a PSD matrix variable.  Complex data is
solved through the real 2n x 2n embedding, whose traces are twice the
complex ones, so embedded right-hand sides are 2 and embedded objectives
are reported halved.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _ipm
from .matrices import HermMatrix, SymMatrix, frobenius_norm, herm_embed

MINIMIZE = "Minimize"
MAXIMIZE = "Maximize"
SENSES = (MINIMIZE, MAXIMIZE)

REAL = "Real"
COMPLEX = "Complex"
FIELDS = (REAL, COMPLEX)

PSD = "PSD"
INDEFINITE = "Indefinite"
NSD = "NSD"

OPTIMAL = "Optimal"
INFEASIBLE = "Infeasible"
UNBOUNDED = "Unbounded"
NUMERICAL_FAILURE = "NumericalFailure"
STATUSES = (OPTIMAL, INFEASIBLE, UNBOUNDED, NUMERICAL_FAILURE)

_TAG_TOL = 1e-9
_SLATER_TOL = 1e-9

_SENSE_JSON = {MINIMIZE: "min", MAXIMIZE: "max"}
_FIELD_JSON = {REAL: "real", COMPLEX: "complex"}
_STATUS_JSON = {
    OPTIMAL: "optimal",
    INFEASIBLE: "infeasible",
    UNBOUNDED: "unbounded",
    NUMERICAL_FAILURE: "numerical_failure",
}


def tag_matrix(mat: SymMatrix | HermMatrix) -> str:
    """Classify by spectrum: PSD iff min eig >= -1e-9 ||A||_F, NSD mirrored."""
    if isinstance(mat, HermMatrix):
        vals = np.linalg.eigvalsh(mat.to_complex())
    else:
        vals = np.linalg.eigvalsh(mat.a)
    tol = _TAG_TOL * frobenius_norm(mat)
    if vals[0] >= -tol:
        return PSD
    if vals[-1] <= tol:
        return NSD
    return INDEFINITE


@dataclass(frozen=True, eq=False)
class QcqpInstance:
    sense: str
    field: str
    objective: SymMatrix | HermMatrix
    constraints: tuple

    def __post_init__(self):
        if self.sense not in SENSES:
            raise ValueError(f"sense must be one of {SENSES}")
        if self.field not in FIELDS:
            raise ValueError(f"field must be one of {FIELDS}")
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if not self.constraints:
            raise ValueError("at least one constraint is required")
        want = HermMatrix if self.field == COMPLEX else SymMatrix
        for mat in (self.objective, *self.constraints):
            if not isinstance(mat, want):
                raise TypeError(f"{self.field} instances need {want.__name__} data")
            if mat.n != self.objective.n:
                raise ValueError("all matrices must share one dimension")

    @property
    def n(self) -> int:
        return self.objective.n

    @property
    def m(self) -> int:
        # constraints are indexed 0..m
        return len(self.constraints) - 1

    @cached_property
    def tags(self) -> tuple:
        return tuple(tag_matrix(a) for a in self.constraints)

    @property
    def psd_indices(self) -> tuple:
        return tuple(k for k, t in enumerate(self.tags) if t == PSD)

    @property
    def non_psd_indices(self) -> tuple:
        return tuple(k for k, t in enumerate(self.tags) if t != PSD)

    @property
    def indefinite_indices(self) -> tuple:
        return tuple(k for k, t in enumerate(self.tags) if t == INDEFINITE)

    def to_json_dict(self) -> dict:
        return {
            "sense": _SENSE_JSON[self.sense],
            "field": _FIELD_JSON[self.field],
            "C": json.loads(self.objective.to_json()),
            "A": [json.loads(a.to_json()) for a in self.constraints],
        }

    @staticmethod
    def from_json_dict(data: dict) -> "QcqpInstance":
        try:
            sense = {"min": MINIMIZE, "max": MAXIMIZE}[data["sense"]]
            fld = {"real": REAL, "complex": COMPLEX}[data["field"]]
            raw_c, raw_a = data["C"], data["A"]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed instance payload: {exc}") from exc
        loader = HermMatrix.from_json if fld == COMPLEX else SymMatrix.from_json
        objective = loader(json.dumps(raw_c))
        constraints = tuple(loader(json.dumps(a)) for a in raw_a)
        return QcqpInstance(sense, fld, objective, constraints)


def quad_value(mat: SymMatrix | HermMatrix, x: np.ndarray) -> float:
    """x* M x for a real vector, complex vector, or real 2n embedding."""
    x = np.asarray(x)
    if isinstance(mat, SymMatrix):
        return float(np.real(x @ (mat.a @ x)))
    if np.iscomplexobj(x):
        return float(np.real(np.conj(x) @ (mat.to_complex() @ x)))
    if x.shape[0] == 2 * mat.n:
        return float(x @ (herm_embed(mat).a @ x))
    raise ValueError("complex quadratic form needs a complex or embedded vector")


def constraint_values(inst: QcqpInstance, x: np.ndarray) -> np.ndarray:
    return np.array([quad_value(a, x) for a in inst.constraints])


def objective_value(inst: QcqpInstance, x: np.ndarray) -> float:
    return quad_value(inst.objective, x)


@dataclass(frozen=True, eq=False)
class SdpStandardForm:
    """Equality standard form handed to the interior-point core."""

    n: int
    C: np.ndarray
    A: tuple
    b: np.ndarray
    G: np.ndarray
    c_lin: np.ndarray
    maximize: bool
    report_scale: float
    field: str
    n_orig: int


def build_relaxation(inst: QcqpInstance) -> SdpStandardForm:
    """Relaxation with slack rows Tr(A_k X) -/+ s_k = rhs; complex data embedded.

    Embedded traces double, so complex right-hand sides become 2 and the
    embedded optimum is reported halved (report_scale).
    """
    if inst.field == COMPLEX:
        mats = tuple(herm_embed(a).a for a in inst.constraints)
        C = herm_embed(inst.objective).a
        rhs = 2.0
        scale = 0.5
    else:
        mats = tuple(a.a for a in inst.constraints)
        C = inst.objective.a
        rhs = 1.0
        scale = 1.0
    p = len(mats)
    sign = 1.0 if inst.sense == MAXIMIZE else -1.0
    return SdpStandardForm(
        n=C.shape[0],
        C=C,
        A=mats,
        b=np.full(p, rhs),
        G=sign * np.eye(p),
        c_lin=np.zeros(p),
        maximize=inst.sense == MAXIMIZE,
        report_scale=scale,
        field=inst.field,
        n_orig=inst.n,
    )


@dataclass(frozen=True, eq=False)
class SdpSolution:
    status: str
    X: SymMatrix | None
    objective_value: float
    dual_multipliers: tuple
    dual_slack: SymMatrix | None
    primal_residual: float
    dual_residual: float
    gap: float
    iterations: int
    ray: SymMatrix | None
    infeasibility_certificate: tuple | None
    field: str
    n_orig: int
    report_scale: float
    message: str

    def to_json_dict(self) -> dict:
        def num(v):
            if v is None or not np.isfinite(v):
                return None if v is None or v != v else ("inf" if v > 0 else "-inf")
            return float(v)

        return {
            "status": _STATUS_JSON[self.status],
            "objective_value": num(self.objective_value),
            "dual_multipliers": [float(v) for v in self.dual_multipliers],
            "X": json.loads(self.X.to_json()) if self.X is not None else None,
            "dual_slack": json.loads(self.dual_slack.to_json())
            if self.dual_slack is not None
            else None,
            "primal_residual": num(self.primal_residual),
            "dual_residual": num(self.dual_residual),
            "gap": num(self.gap),
            "iterations": self.iterations,
            "ray": json.loads(self.ray.to_json()) if self.ray is not None else None,
            "infeasibility_certificate": list(self.infeasibility_certificate)
            if self.infeasibility_certificate is not None
            else None,
            "field": _FIELD_JSON[self.field],
            "n": self.n_orig,
            "message": self.message,
        }


def solve(
    form: SdpStandardForm,
    *,
    gap_tol: float = 1e-8,
    feas_tol: float = 1e-9,
    max_iter: int = 200,
) -> SdpSolution:
    """Run the interior-point core and package the outcome per the contracts."""
    C_eff = -form.C if form.maximize else form.C
    res = _ipm.solve_conic(
        C_eff,
        form.A,
        form.b,
        form.G,
        form.c_lin,
        gap_tol=gap_tol,
        feas_tol=feas_tol,
        max_iter=max_iter,
    )
    flip = -1.0 if form.maximize else 1.0

    if res.status == "optimal":
        mult = np.maximum(flip * res.y, 0.0)
        status = OPTIMAL
        message = res.message
        if float(np.linalg.eigvalsh(res.X)[0]) < -1e-8:
            status, message = NUMERICAL_FAILURE, "returned iterate lost definiteness"
        return SdpSolution(
            status=status,
            X=SymMatrix(res.X),
            objective_value=form.report_scale * flip * res.objective,
            dual_multipliers=tuple(float(v) for v in mult),
            dual_slack=SymMatrix(flip * res.Z if form.maximize else res.Z),
            primal_residual=res.primal_residual,
            dual_residual=res.dual_residual,
            gap=res.rel_gap,
            iterations=res.iterations,
            ray=None,
            infeasibility_certificate=None,
            field=form.field,
            n_orig=form.n_orig,
            report_scale=form.report_scale,
            message=message,
        )

    if res.status == "unbounded":
        # improving ray, normalized so Tr(C D) = 1 (max) or -1 (min)
        ray = SymMatrix(res.ray[0])
        return SdpSolution(
            status=UNBOUNDED,
            X=None,
            objective_value=np.inf if form.maximize else -np.inf,
            dual_multipliers=(),
            dual_slack=None,
            primal_residual=res.primal_residual,
            dual_residual=np.nan,
            gap=np.nan,
            iterations=res.iterations,
            ray=ray,
            infeasibility_certificate=None,
            field=form.field,
            n_orig=form.n_orig,
            report_scale=form.report_scale,
            message=res.message,
        )

    if res.status == "infeasible":
        fy, fZ, _ = res.farkas
        return SdpSolution(
            status=INFEASIBLE,
            X=None,
            objective_value=np.inf if not form.maximize else -np.inf,
            dual_multipliers=tuple(float(v) for v in np.maximum(flip * fy, 0.0)),
            dual_slack=SymMatrix(fZ),
            primal_residual=np.nan,
            dual_residual=res.dual_residual,
            gap=np.nan,
            iterations=res.iterations,
            ray=None,
            infeasibility_certificate=tuple(float(v) for v in fy),
            field=form.field,
            n_orig=form.n_orig,
            report_scale=form.report_scale,
            message=res.message,
        )

    return SdpSolution(
        status=NUMERICAL_FAILURE,
        X=SymMatrix(res.X) if np.all(np.isfinite(res.X)) else None,
        objective_value=np.nan,
        dual_multipliers=(),
        dual_slack=None,
        primal_residual=res.primal_residual,
        dual_residual=res.dual_residual,
        gap=res.rel_gap,
        iterations=res.iterations,
        ray=None,
        infeasibility_certificate=None,
        field=form.field,
        n_orig=form.n_orig,
        report_scale=form.report_scale,
        message=res.message,
    )


def solve_instance(inst: QcqpInstance, **kwargs) -> SdpSolution:
    return solve(build_relaxation(inst), **kwargs)


@dataclass(frozen=True)
class SlaterReport:
    """Outcome of probing for mu >= 0, sum mu = 1 with sum mu_k A_k definite.

    Both signs are probed; ``dual_slater`` reflects the positive-definite
    combination, which is the one the rounding schemes rely on.  Verification
    is by direct eigenvalue computation on the recovered multipliers, so a
    True is never based on the solver's word alone.
    """

    dual_slater: bool
    certificate: tuple
    t: float
    definite_sign: str  # positive | negative | neither
    positive_t: float
    negative_t: float
    negative_certificate: tuple
    indeterminate: bool


def _embedded_constraints(inst: QcqpInstance) -> list:
    if inst.field == COMPLEX:
        return [herm_embed(a).a for a in inst.constraints]
    return [a.a for a in inst.constraints]


def _probe_definite(mats: list, sign: float, max_iter: int) -> tuple:
    """Best lambda_min(sign * sum mu_k A_k) over the multiplier simplex.

    Epigraph game form: minimize u subject to u >= Tr(sign*A_k X) for all k,
    Tr(X) = 1, X PSD; by duality the optimal u equals the best achievable
    lambda_min and the row multipliers recover mu.  The free epigraph level
    is shifted by R = 1 + max ||A_k||_F to keep it in the orthant.
    """
    n = mats[0].shape[0]
    p = len(mats)
    B = [sign * M for M in mats]
    R = 1.0 + max(float(np.linalg.norm(M)) for M in B)
    rows = [-M for M in B] + [np.eye(n)]
    q = p + 1  # u plus one surplus per epigraph row
    G = np.zeros((p + 1, q))
    G[:p, 0] = 1.0
    for k in range(p):
        G[k, 1 + k] = -1.0
    b = np.concatenate([np.full(p, R), [1.0]])
    c_lin = np.zeros(q)
    c_lin[0] = 1.0
    res = _ipm.solve_conic(
        np.zeros((n, n)), rows, b, G, c_lin, max_iter=max_iter
    )
    solver_ok = res.status == "optimal"
    mu_raw = np.maximum(res.y[:p], 0.0) if np.all(np.isfinite(res.y[:p])) else None
    if mu_raw is None or float(mu_raw.sum()) < 1e-9:
        return -np.inf, tuple(np.zeros(p)), solver_ok
    mu = mu_raw / mu_raw.sum()
    S = np.einsum("i,ijk->jk", mu, np.asarray(B))
    lam = float(np.linalg.eigvalsh(0.5 * (S + S.T))[0])
    return lam, tuple(float(v) for v in mu), solver_ok


def slater_check(inst: QcqpInstance, *, max_iter: int = 200) -> SlaterReport:
    mats = _embedded_constraints(inst)
    pos_t, pos_mu, pos_ok = _probe_definite(mats, 1.0, max_iter)
    neg_t, neg_mu, neg_ok = _probe_definite(mats, -1.0, max_iter)
    found_pos = pos_t > _SLATER_TOL
    found_neg = neg_t > _SLATER_TOL
    sign = "positive" if found_pos else ("negative" if found_neg else "neither")
    return SlaterReport(
        dual_slater=found_pos,
        certificate=pos_mu,
        t=pos_t,
        definite_sign=sign,
        positive_t=pos_t,
        negative_t=neg_t,
        negative_certificate=neg_mu,
        indeterminate=not found_pos and not pos_ok,
    )
