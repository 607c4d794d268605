"""Randomized rounding of SDP solutions and approximation-ratio certificates.

Three schemes extract feasible rank-one points from a solved relaxation:

* GaussianMin -- draw xi ~ N(0, X_reduced) and rescale by the smallest
  constraint value, for minimization problems;
* SignMax -- draw +-1 vectors through the factor that diagonalizes the
  objective, for maximization problems with a positive definite constraint
  aggregate;
* GaussianMax -- draw xi ~ N(0, X_hat) and rescale by the largest constraint
  value, for maximization problems with any number of indefinite constraints.

Every sample is rescaled by its own binding constraint value, which dominates
the accept/reject argument behind the worst-case ratios.  The fixed-threshold
joint events those arguments use are counted separately so the stated success
probabilities can be audited.  Complex instances are handled in the 2n real
embedding; a complex Gaussian coordinate has independent real and imaginary
parts of variance one half.

Sample i is generated from a stream seeded by (seed, i), so a prefix of the
sample sequence never depends on num_samples and parallel evaluation cannot
change results.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lowrank import LowRankSolution, factorize
from .matrices import SymMatrix, embed_factor, herm_embed, j_symmetrize, sym_eig, vec_embed
from .sdp import (
    COMPLEX,
    MAXIMIZE,
    MINIMIZE,
    OPTIMAL,
    QcqpInstance,
    SdpSolution,
    SlaterReport,
    constraint_values,
    objective_value,
    slater_check,
)

GAUSSIAN_MIN = "GaussianMin"
SIGN_MAX = "SignMax"
GAUSSIAN_MAX = "GaussianMax"
SCHEMES = (GAUSSIAN_MIN, SIGN_MAX, GAUSSIAN_MAX)

# |v_sdp| at or below this counts as zero when forming ratios
_ZERO_TOL = 1e-9
# relative slack when comparing an empirical ratio against its certificate
_CERT_SLACK = 1e-9
# samples evaluated per vectorized block; sample values do not depend on it
_SAMPLE_CHUNK = 2048


@dataclass(frozen=True)
class RoundingParams:
    """Knobs for one rounding run; gamma/mu/alpha default to the cited choices."""

    scheme: str
    num_samples: int = 100
    seed: int = 0
    gamma: float | None = None
    mu: float | None = None
    alpha: float | None = None

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if not isinstance(self.num_samples, int) or self.num_samples < 1:
            raise ValueError("num_samples must be a positive integer")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")
        if self.gamma is not None and not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")
        if self.mu is not None and self.mu <= 1.0:
            raise ValueError("mu must exceed 1")
        if self.alpha is not None and self.alpha <= 1.0:
            raise ValueError("alpha must exceed 1")


@dataclass(frozen=True, eq=False)
class RoundingReport:
    """Outcome of a rounding run.

    best_x is an n-vector for real instances and the 2n real embedding for
    complex ones.  empirical_ratio is best/v_sdp for minimization and
    v_sdp/best for maximization.  theoretical_bound is +inf when no bound is
    claimed (more than one indefinite constraint in a scheme that allows one).
    """

    scheme: str
    seed: int
    num_samples: int
    best_x: tuple | None
    best_objective: float
    v_sdp: float
    empirical_ratio: float
    samples_feasible: int
    samples_discarded: int
    joint_event_count: int
    theoretical_bound: float
    certificate_satisfied: bool
    bound_is_claimed: bool
    multi_indefinite_warning: bool
    failed: bool
    message: str

    def to_json_dict(self) -> dict:
        def num(v: float):
            if math.isnan(v):
                return None
            if math.isinf(v):
                return "inf" if v > 0 else "-inf"
            return float(v)

        return {
            "scheme": self.scheme,
            "seed": self.seed,
            "num_samples": self.num_samples,
            "best_x": None if self.best_x is None else [float(v) for v in self.best_x],
            "best_objective": num(self.best_objective),
            "v_sdp": num(self.v_sdp),
            "empirical_ratio": num(self.empirical_ratio),
            "samples_feasible": self.samples_feasible,
            "samples_discarded": self.samples_discarded,
            "joint_event_count": self.joint_event_count,
            "theoretical_bound": num(self.theoretical_bound),
            "certificate_satisfied": self.certificate_satisfied,
            "bound_is_claimed": self.bound_is_claimed,
            "multi_indefinite_warning": self.multi_indefinite_warning,
            "failed": self.failed,
            "message": self.message,
        }


def sample_rng(seed: int, index: int) -> np.random.Generator:
    """Generator for sample `index`, keyed by (seed, index) so prefixes are stable."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, index))))


def _gaussian_rows(seed: int, start: int, count: int, r: int, scale: float) -> np.ndarray:
    g = np.empty((count, r))
    for i in range(count):
        g[i] = sample_rng(seed, start + i).standard_normal(r)
    return g * scale


def _sign_rows(seed: int, start: int, count: int, r: int) -> np.ndarray:
    s = np.empty((count, r))
    for i in range(count):
        s[i] = sample_rng(seed, start + i).integers(0, 2, r)
    return s * 2.0 - 1.0


def _sampling_mats(inst: QcqpInstance) -> tuple[np.ndarray, list]:
    """Objective and constraint arrays in the coordinates samples live in."""
    if inst.field == COMPLEX:
        return herm_embed(inst.objective).a, [herm_embed(a).a for a in inst.constraints]
    return inst.objective.a, [a.a for a in inst.constraints]


def _batched_quadforms(Xi: np.ndarray, mats: list) -> np.ndarray:
    out = np.empty((Xi.shape[0], len(mats)))
    for j, a in enumerate(mats):
        out[:, j] = np.einsum("si,si->s", Xi @ a, Xi)
    return out


def bound_certificate_min(m: int, field: str) -> float:
    """Worst-case min-form ratio: 1e6 m^2/pi real, 2400 m complex (1 for m <= 3)."""
    if m < 1:
        raise ValueError("m must be at least 1")
    if field == COMPLEX:
        return 1.0 if m <= 3 else 2400.0 * m
    return 1.0e6 * m * m / math.pi


def per_constraint_tail_bound(gamma: float, r: int, field: str) -> float:
    """Bound on P{xi*A xi < gamma E(xi*A xi)} for one PSD constraint at rank r."""
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must lie in (0, 1]")
    if not isinstance(r, int) or r < 1:
        raise ValueError("r must be a positive integer")
    if field == COMPLEX:
        return max(4.0 * gamma / 3.0, 16.0 * (r - 1) ** 2 * gamma * gamma)
    return max(math.sqrt(gamma), 2.0 * (r - 1) * gamma / (math.pi - 2.0))


def sign_union_tail(m: int, mu: float, alpha: float) -> float:
    """Bound on P{max over PSD constraints of a sign-vector form > alpha}: 2 m mu e^(-alpha/2)."""
    if m < 0 or mu <= 0 or alpha <= 0:
        raise ValueError("need m >= 0, mu > 0, alpha > 0")
    return 2.0 * m * mu * math.exp(-alpha / 2.0)


def _product_frobenius(A, X, complex_field: bool) -> float:
    if complex_field:
        P = A.to_complex() @ X
        return float(math.sqrt(np.sum(np.abs(P) ** 2)))
    return float(np.linalg.norm(A.a @ X))


def bound_certificate_max(inst: QcqpInstance, X_hat: SymMatrix) -> dict:
    """Data-dependent max-form ratio certificate.

    Splits constraints into definite (D) and indefinite (I) by tag, measures
    s_k = ||A_k X_hat||_F, and evaluates

        alpha = 1 + max{ c0 + c1 log|D|,
                         min{ (c0 + c1 log|I|) max_I s_k, sqrt(c2 sum_I s_k^2) } }

    with (c0, c1, c2) = (20, 8, 200) real and (15, 4, 40) complex; an empty
    class drops its term from the max.  The ratio bound equals the chosen
    alpha.  per_constraint holds each constraint's exponential and Chebyshev
    tail bounds at that alpha, and success_floor is the union-bound lower
    estimate for the joint event probability.
    """
    complex_field = inst.field == COMPLEX
    if complex_field:
        from .matrices import complex_from_embedding

        X = complex_from_embedding(j_symmetrize(X_hat.a)).to_complex()
        c0, c1, c2 = 15.0, 4.0, 40.0
        exp_div, cheb_mult, floor = 4.0, 1.0, 0.05
    else:
        X = X_hat.a
        c0, c1, c2 = 20.0, 8.0, 200.0
        exp_div, cheb_mult, floor = 8.0, 2.0, 0.03

    tags = inst.tags
    indef = set(inst.indefinite_indices)
    norms = [_product_frobenius(A, X, complex_field) for A in inst.constraints]

    terms = []
    n_def = len(inst.constraints) - len(indef)
    if n_def >= 1:
        terms.append(c0 + c1 * math.log(n_def))
    if indef:
        max_norm = max(norms[k] for k in indef)
        sum_sq = sum(norms[k] ** 2 for k in indef)
        terms.append(min((c0 + c1 * math.log(len(indef))) * max_norm, math.sqrt(c2 * sum_sq)))
    alpha = 1.0 + max(terms)

    per_constraint = []
    slack = alpha - 1.0
    for k, A in enumerate(inst.constraints):
        s = norms[k]
        if s <= 1e-300:
            exp_tail = 0.0
            cheb_tail = 0.0
        else:
            exp_tail = math.exp(-min(slack / s, 1.0) * slack / (exp_div * s))
            cheb_tail = cheb_mult * s * s / (slack * slack)
        is_indef = k in indef
        per_constraint.append(
            {
                "index": k,
                "tag": tags[k],
                "frob_norm": s,
                "exp_tail": exp_tail,
                "chebyshev_tail": cheb_tail,
                "tail_bound": min(exp_tail, cheb_tail) if is_indef else exp_tail,
            }
        )
    success_floor = floor - sum(d["tail_bound"] for d in per_constraint)
    return {
        "alpha": alpha,
        "bound": alpha,
        "per_constraint": tuple(per_constraint),
        "success_floor": success_floor,
    }


def _ratio_min(best: float, v_sdp: float) -> float:
    if abs(v_sdp) <= _ZERO_TOL:
        return math.inf if best > _ZERO_TOL else 1.0
    return best / v_sdp

def _ratio_max(best: float, v_sdp: float) -> float:
    if abs(best) <= _ZERO_TOL:
        return math.inf if v_sdp > _ZERO_TOL else 1.0
    return v_sdp / best


def _certificate(ratio: float, bound: float, claimed: bool, failed: bool) -> bool:
    if failed or not claimed or math.isnan(ratio):
        return False
    return ratio <= bound * (1.0 + _CERT_SLACK) + _CERT_SLACK


def _failure(scheme, seed, num_samples, v_sdp, bound, claimed, warn, discarded, joint, message):
    return RoundingReport(
        scheme=scheme,
        seed=seed,
        num_samples=num_samples,
        best_x=None,
        best_objective=math.nan,
        v_sdp=v_sdp,
        empirical_ratio=math.nan,
        samples_feasible=0,
        samples_discarded=discarded,
        joint_event_count=joint,
        theoretical_bound=bound,
        certificate_satisfied=False,
        bound_is_claimed=claimed,
        multi_indefinite_warning=warn,
        failed=True,
        message=message,
    )


def gaussian_round_min(
    inst: QcqpInstance, lowrank: LowRankSolution, p: RoundingParams
) -> RoundingReport:
    """Round a minimization solution by Gaussian sampling from X_reduced.

    Each sample xi with min_k xi*A_k xi > 0 rescales to x = xi / sqrt(min_k),
    making its smallest constraint value exactly 1.  The joint event
    {min_k xi*A_k xi >= gamma, xi*C xi <= mu v_sdp} is counted at the cited
    gamma = pi/(1e4 m^2), mu = 100 (real) or gamma = 1/(40 m), mu = 60
    (complex) unless overridden.  With more than one indefinite constraint no
    worst-case bound exists and the report says so; with a single constraint
    the reduced solution is rank one and the bound is exactly 1.
    """
    if inst.sense != MINIMIZE:
        raise ValueError("gaussian_round_min needs a minimization instance")
    if p.scheme != GAUSSIAN_MIN:
        raise ValueError(f"params.scheme is {p.scheme!r}, expected {GAUSSIAN_MIN!r}")
    complex_field = inst.field == COMPLEX
    v_sdp = lowrank.objective_value
    m_eff = inst.m
    warn = len(inst.indefinite_indices) > 1

    if warn:
        bound, claimed = math.inf, False
    elif m_eff == 0:
        bound, claimed = 1.0, True
    else:
        bound, claimed = bound_certificate_min(m_eff, inst.field), True

    if p.gamma is not None:
        gamma = p.gamma
    elif m_eff == 0:
        gamma = 1.0
    elif complex_field:
        gamma = 1.0 / (40.0 * m_eff)
    else:
        gamma = math.pi / (1.0e4 * m_eff * m_eff)
    mu = p.mu if p.mu is not None else (60.0 if complex_field else 100.0)

    F = embed_factor(lowrank.U) if complex_field else lowrank.U
    g_scale = math.sqrt(0.5) if complex_field else 1.0

    obj_mat, cons_mats = _sampling_mats(inst)
    best_obj = math.inf
    best_x = None
    feasible = 0
    joint = 0
    for start in range(0, p.num_samples, _SAMPLE_CHUNK):
        count = min(_SAMPLE_CHUNK, p.num_samples - start)
        Xi = _gaussian_rows(p.seed, start, count, F.shape[1], g_scale) @ F.T
        vals = _batched_quadforms(Xi, cons_mats)
        raw = np.einsum("si,si->s", Xi @ obj_mat, Xi)
        min_vals = vals.min(axis=1)
        joint += int(np.count_nonzero((min_vals >= gamma) & (raw <= mu * v_sdp)))
        ok = min_vals > 0.0
        feasible += int(np.count_nonzero(ok))
        if np.any(ok):
            objs = raw[ok] / min_vals[ok]
            j = int(np.argmin(objs))
            if objs[j] < best_obj:
                best_obj = float(objs[j])
                s = int(np.flatnonzero(ok)[j])
                best_x = Xi[s] / math.sqrt(min_vals[s])

    if feasible == 0:
        return _failure(
            p.scheme, p.seed, p.num_samples, v_sdp, bound, claimed, warn, 0, joint,
            "no sample had all constraint values positive",
        )
    ratio = _ratio_min(best_obj, v_sdp)
    return RoundingReport(
        scheme=p.scheme,
        seed=p.seed,
        num_samples=p.num_samples,
        best_x=tuple(float(v) for v in best_x),
        best_objective=best_obj,
        v_sdp=v_sdp,
        empirical_ratio=ratio,
        samples_feasible=feasible,
        samples_discarded=0,
        joint_event_count=joint,
        theoretical_bound=bound,
        certificate_satisfied=_certificate(ratio, bound, claimed, False),
        bound_is_claimed=claimed,
        multi_indefinite_warning=warn,
        failed=False,
        message="",
    )


def _require_positive_aggregate(inst: QcqpInstance, slater: SlaterReport | None) -> SlaterReport:
    report = slater if slater is not None else slater_check(inst)
    if not report.dual_slater:
        raise ValueError(
            "no nonnegative combination of the constraints is positive definite; "
            "the rescaling denominator is not guaranteed positive"
        )
    return report


def _rank_of_product(A: SymMatrix, X: np.ndarray) -> int:
    return int(np.linalg.matrix_rank(A.a @ X))


def sign_round_max(
    inst: QcqpInstance,
    lowrank: LowRankSolution,
    p: RoundingParams,
    slater: SlaterReport | None = None,
) -> RoundingReport:
    """Round a real maximization solution with +-1 vectors through U Q.

    Q diagonalizes U^T C U, so every sign vector carries the full objective
    value Tr(C X_hat) and only the rescaling denominator max_k xi^T Ahat_k xi
    varies.  Denominators that are not positive are discarded with a counter
    (they signal a violated positivity assumption).  The claimed bound is
    2 log(174 m mu_eff) with mu_eff = min{m, max_k rank(A_k X_hat)}, provided
    at most one constraint is indefinite; the joint event counts samples with
    denominator at most alpha.
    """
    if inst.sense != MAXIMIZE:
        raise ValueError("sign_round_max needs a maximization instance")
    if p.scheme != SIGN_MAX:
        raise ValueError(f"params.scheme is {p.scheme!r}, expected {SIGN_MAX!r}")
    if inst.field == COMPLEX:
        raise ValueError("sign rounding is defined for real instances")
    _require_positive_aggregate(inst, slater)

    U = lowrank.U
    r = U.shape[1]
    v_sdp = lowrank.objective_value
    if r == 0:
        return _failure(p.scheme, p.seed, p.num_samples, v_sdp, math.inf, False, False, 0, 0, "zero-rank factor")
    Q = sym_eig(U.T @ inst.objective.a @ U).vectors
    B = U @ Q
    A_hats = [B.T @ A.a @ B for A in inst.constraints]

    X_hat = lowrank.reconstruct()
    m_eff = inst.m
    warn = len(inst.indefinite_indices) > 1
    mu_eff = max(1, min(m_eff, max(_rank_of_product(A, X_hat) for A in inst.constraints))) if m_eff >= 1 else 1
    if warn:
        bound, claimed = math.inf, False
    elif m_eff == 0:
        bound, claimed = 1.0, True
    else:
        bound, claimed = 2.0 * math.log(174.0 * m_eff * mu_eff), True
    alpha = p.alpha if p.alpha is not None else 2.0 * math.log(174.0 * max(1, m_eff) * mu_eff)

    best_obj = -math.inf
    best_x = None
    feasible = 0
    discarded = 0
    joint = 0
    for start in range(0, p.num_samples, _SAMPLE_CHUNK):
        count = min(_SAMPLE_CHUNK, p.num_samples - start)
        S = _sign_rows(p.seed, start, count, r)
        dens = _batched_quadforms(S, A_hats).max(axis=1)
        joint += int(np.count_nonzero(dens <= alpha))
        ok = dens > 0.0
        discarded += int(np.count_nonzero(~ok))
        feasible += int(np.count_nonzero(ok))
        if np.any(ok):
            Xc = (S[ok] @ B.T) / np.sqrt(dens[ok])[:, None]
            objs = np.einsum("si,si->s", Xc @ inst.objective.a, Xc)
            j = int(np.argmax(objs))
            if objs[j] > best_obj:
                best_obj = float(objs[j])
                best_x = Xc[j]

    if feasible == 0:
        return _failure(
            p.scheme, p.seed, p.num_samples, v_sdp, bound, claimed, warn, discarded, joint,
            "every sample had a nonpositive rescaling denominator",
        )
    ratio = _ratio_max(best_obj, v_sdp)
    return RoundingReport(
        scheme=p.scheme,
        seed=p.seed,
        num_samples=p.num_samples,
        best_x=tuple(float(v) for v in best_x),
        best_objective=best_obj,
        v_sdp=v_sdp,
        empirical_ratio=ratio,
        samples_feasible=feasible,
        samples_discarded=discarded,
        joint_event_count=joint,
        theoretical_bound=bound,
        certificate_satisfied=_certificate(ratio, bound, claimed, False),
        bound_is_claimed=claimed,
        multi_indefinite_warning=warn,
        failed=False,
        message="",
    )


def gaussian_round_max(
    inst: QcqpInstance,
    sol: SdpSolution,
    p: RoundingParams,
    slater: SlaterReport | None = None,
) -> RoundingReport:
    """Round a maximization solution by Gaussian sampling from the full X_hat.

    Works with any number of indefinite constraints; the claimed bound is the
    data-dependent certificate of bound_certificate_max.  The joint event
    counts samples with max_k xi*A_k xi <= alpha and xi*C xi >= v_sdp.
    """
    if inst.sense != MAXIMIZE:
        raise ValueError("gaussian_round_max needs a maximization instance")
    if p.scheme != GAUSSIAN_MAX:
        raise ValueError(f"params.scheme is {p.scheme!r}, expected {GAUSSIAN_MAX!r}")
    if sol.status != OPTIMAL:
        raise ValueError("gaussian_round_max needs an Optimal solution")
    _require_positive_aggregate(inst, slater)
    complex_field = inst.field == COMPLEX

    cert = bound_certificate_max(inst, sol.X)
    bound = cert["bound"]
    alpha = p.alpha if p.alpha is not None else cert["alpha"]
    v_sdp = sol.objective_value

    X_emb = j_symmetrize(sol.X.a) if complex_field else sol.X.a
    F = factorize(SymMatrix(X_emb), 1e-9)
    g_scale = math.sqrt(0.5) if complex_field else 1.0
    if F.shape[1] == 0:
        return _failure(p.scheme, p.seed, p.num_samples, v_sdp, bound, True, False, 0, 0, "X_hat is zero")

    obj_mat, cons_mats = _sampling_mats(inst)
    best_obj = -math.inf
    best_x = None
    feasible = 0
    discarded = 0
    joint = 0
    for start in range(0, p.num_samples, _SAMPLE_CHUNK):
        count = min(_SAMPLE_CHUNK, p.num_samples - start)
        Xi = _gaussian_rows(p.seed, start, count, F.shape[1], g_scale) @ F.T
        vals = _batched_quadforms(Xi, cons_mats)
        raw = np.einsum("si,si->s", Xi @ obj_mat, Xi)
        max_vals = vals.max(axis=1)
        joint += int(np.count_nonzero((max_vals <= alpha) & (raw >= v_sdp)))
        ok = max_vals > 0.0
        discarded += int(np.count_nonzero(~ok))
        feasible += int(np.count_nonzero(ok))
        if np.any(ok):
            objs = raw[ok] / max_vals[ok]
            j = int(np.argmax(objs))
            if objs[j] > best_obj:
                best_obj = float(objs[j])
                s = int(np.flatnonzero(ok)[j])
                best_x = Xi[s] / math.sqrt(max_vals[s])

    if feasible == 0:
        return _failure(
            p.scheme, p.seed, p.num_samples, v_sdp, bound, True, False, discarded, joint,
            "every sample had a nonpositive rescaling denominator",
        )
    ratio = _ratio_max(best_obj, v_sdp)
    return RoundingReport(
        scheme=p.scheme,
        seed=p.seed,
        num_samples=p.num_samples,
        best_x=tuple(float(v) for v in best_x),
        best_objective=best_obj,
        v_sdp=v_sdp,
        empirical_ratio=ratio,
        samples_feasible=feasible,
        samples_discarded=discarded,
        joint_event_count=joint,
        theoretical_bound=bound,
        certificate_satisfied=_certificate(ratio, bound, True, False),
        bound_is_claimed=True,
        multi_indefinite_warning=False,
        failed=False,
        message="",
    )


def _lorentz_row(H: np.ndarray) -> tuple[float, np.ndarray]:
    """Trace pairing of a 2x2 Hermitian H against W, in Lorentz coordinates.

    W = [[t + x1, x2 + i x3], [x2 - i x3, t - x1]] is PSD exactly when
    t >= ||x||, rank one exactly on the boundary t = ||x||, and
    Tr(H W) = f_t * t + f_x . x with the coefficients returned here.
    """
    f_t = float(H[0, 0].real + H[1, 1].real)
    f_x = np.array([H[0, 0].real - H[1, 1].real, 2.0 * H[0, 1].real, 2.0 * H[0, 1].imag])
    return f_t, f_x


def _sphere_grid(t_lo, t_hi, p_lo, p_hi, n_t, n_p):
    theta = np.linspace(t_lo, t_hi, n_t)
    phi = np.linspace(p_lo, p_hi, n_p)
    T, P = np.meshgrid(theta, phi, indexing="ij")
    U = np.stack([np.cos(T), np.sin(T) * np.cos(P), np.sin(T) * np.sin(P)])
    return T, P, U.reshape(3, -1)


def _rank_one_on_face(C_hat: np.ndarray, A_hats: list, v: float):
    """Rank-one W = w w* with Tr(C_hat W) = v and Tr(A_hat_k W) >= 1, or None.

    Rank-one PSD 2x2 matrices are the rays s (1, u) of the Lorentz-cone
    boundary, u on the unit sphere.  Fixing the objective pins s = v / den(u),
    so the search is two-dimensional: maximize the smallest constraint value
    over the sphere by a zooming grid.
    """
    c_t, c_x = _lorentz_row(C_hat)
    rows = [_lorentz_row(A) for A in A_hats]

    if abs(v) <= _ZERO_TOL:
        # objective value zero with C_hat PSD: w must lie in the kernel
        lam, vec = np.linalg.eigh(C_hat)
        for idx in range(len(lam)):
            if abs(lam[idx]) > 1e-9 * max(1.0, abs(lam[-1])):
                continue
            w = vec[:, idx]
            vals = [float(np.real(np.conj(w) @ A @ w)) for A in A_hats]
            if min(vals) > 1e-12:
                return w / math.sqrt(min(vals))
        return None
    if v < 0.0:
        return None

    def score(U):
        den = c_t + c_x @ U
        vals = np.stack([v * (a_t + a_x @ U) / np.where(den > 1e-14, den, np.nan) for a_t, a_x in rows])
        s = np.nanmin(vals, axis=0)
        s[~(den > 1e-14)] = -np.inf
        return np.where(np.isnan(s), -np.inf, s)

    t_lo, t_hi, p_lo, p_hi = 0.0, math.pi, 0.0, 2.0 * math.pi
    n_t, n_p = 384, 768
    best = None
    for level in range(6):
        T, P, U = _sphere_grid(t_lo, t_hi, p_lo, p_hi, n_t, n_p)
        s = score(U)
        k = int(np.argmax(s))
        if not math.isfinite(s[k]):
            return None
        best = (float(T.ravel()[k]), float(P.ravel()[k]), float(s[k]))
        span_t = (t_hi - t_lo) / n_t * 4.0
        span_p = (p_hi - p_lo) / n_p * 4.0
        t_lo, t_hi = best[0] - span_t, best[0] + span_t
        p_lo, p_hi = best[1] - span_p, best[1] + span_p
        n_t = n_p = 64
    theta, phi, val = best
    if val < 1.0 - 1e-7:
        return None
    u = np.array([math.cos(theta), math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi)])
    s_ray = v / (c_t + c_x @ u)
    W = s_ray * np.array(
        [[1.0 + u[0], u[1] + 1j * u[2]], [u[1] - 1j * u[2], 1.0 - u[0]]]
    )
    lam, vec = np.linalg.eigh(W)
    if lam[-1] <= 0.0:
        return None
    return math.sqrt(lam[-1]) * vec[:, -1]


def complex_exact_extraction(inst: QcqpInstance, lowrank: LowRankSolution) -> RoundingReport:
    """Extract a feasible point matching v_sdp for complex minimization, m <= 3.

    With at most four constraints the relaxation is tight: after rank
    reduction r <= 2, and a rank-one optimal point exists.  r = 1 reads the
    factor directly; r = 2 searches the rank-one boundary of the 2x2 optimal
    face.  Returns a report whose ratio is 1 up to numerical tolerance, or a
    flagged failure when no point is found.
    """
    if inst.field != COMPLEX or inst.sense != MINIMIZE:
        raise ValueError("exact extraction applies to complex minimization instances")
    if inst.m > 3:
        raise ValueError("exact extraction applies to instances with m <= 3")
    v_sdp = lowrank.objective_value
    r = lowrank.r

    def finish(x_c: np.ndarray):
        vals = constraint_values(inst, x_c)
        min_val = float(vals.min())
        if min_val <= 0.0:
            return None
        x = x_c / math.sqrt(min_val) if min_val < 1.0 else x_c
        obj = objective_value(inst, x)
        emb = vec_embed(x)
        ratio = _ratio_min(obj, v_sdp)
        return RoundingReport(
            scheme="ComplexExact",
            seed=0,
            num_samples=0,
            best_x=tuple(float(v) for v in emb),
            best_objective=obj,
            v_sdp=v_sdp,
            empirical_ratio=ratio,
            samples_feasible=1,
            samples_discarded=0,
            joint_event_count=0,
            theoretical_bound=1.0,
            certificate_satisfied=bool(ratio <= 1.0 + 1e-4),
            bound_is_claimed=True,
            multi_indefinite_warning=False,
            failed=False,
            message="",
        )

    if r == 1:
        report = finish(lowrank.U[:, 0])
        if report is not None:
            return report
        message = "rank-one factor is not feasible"
    elif r == 2:
        U = lowrank.U
        C_hat = np.conj(U.T) @ inst.objective.to_complex() @ U
        A_hats = [np.conj(U.T) @ A.to_complex() @ U for A in inst.constraints]
        w = _rank_one_on_face(C_hat, A_hats, v_sdp)
        if w is not None:
            report = finish(U @ w)
            if report is not None:
                return report
            message = "rank-one point is not feasible"
        else:
            message = "no rank-one point found on the optimal face"
    else:
        message = f"factor rank {r} exceeds 2"

    return _failure("ComplexExact", 0, 0, v_sdp, 1.0, True, False, 0, 0, message)
