"""Random instance families and canonical hard examples with known values.

Generation follows the published experiment recipe: constraint matrices are
rand * Q^T diag(d) Q with Q orthogonal from a QR factorization of a Gaussian
matrix, where d is abs(randn) entries (full-rank PSD), a single abs(randn)
entry padded with zeros (rank-one PSD), or randn entries (indefinite).  The
four canonical examples pin down worst-case behaviour of the relaxation:
an unbounded minimization gap, coupled indefinite pairs whose true optimum
grows like M^2, a maximization family with ratio growing like 0.382 M, and a
maximization instance whose relaxation is unbounded while the original
problem is not.
"""

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .matrices import HermMatrix, SymMatrix
from .sdp import (
    COMPLEX,
    INDEFINITE,
    INFEASIBLE,
    MAXIMIZE,
    MINIMIZE,
    PSD,
    REAL,
    QcqpInstance,
    solve_instance,
)

CASE_A = "A_OneIndef_RestPD"
CASE_B = "B_TenPctIndef_RestPD"
CASE_C = "C_OneIndef_RestRank1"
CASE_D = "D_TenPctIndef_RestRank1"
CASES = (CASE_A, CASE_B, CASE_C, CASE_D)

OBJECTIVE_IDENTITY = "Identity"
OBJECTIVE_INDEFINITE = "Indefinite"
OBJECTIVE_KINDS = (OBJECTIVE_IDENTITY, OBJECTIVE_INDEFINITE)

MIN_COUPLING = "min_coupling"
MIN_GAP_INFINITE = "min_gap_infinite"
MAX_COUPLING = "max_coupling"
MAX_UNBOUNDED_RELAXATION = "max_unbounded_relaxation"
CANONICAL_IDS = (MIN_COUPLING, MIN_GAP_INFINITE, MAX_COUPLING, MAX_UNBOUNDED_RELAXATION)

_SPECTRUM_TOL = 1e-9
_MAX_FEASIBILITY_RETRIES = 20


@dataclass(frozen=True)
class GeneratorSpec:
    """Recipe for one random instance; the same seed always yields the same instance."""

    n: int
    m: int
    case: str
    sense: str
    objective_kind: str
    seed: int
    field: str = REAL

    def __post_init__(self) -> None:
        if not isinstance(self.n, int) or self.n < 1:
            raise ValueError("n must be a positive integer")
        if not isinstance(self.m, int) or self.m < 0:
            raise ValueError("m must be a nonnegative integer")
        if self.case not in CASES:
            raise ValueError(f"unknown case {self.case!r}")
        if self.sense not in (MINIMIZE, MAXIMIZE):
            raise ValueError("sense must be Minimize or Maximize")
        if self.objective_kind not in OBJECTIVE_KINDS:
            raise ValueError(f"unknown objective kind {self.objective_kind!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")
        if self.field not in (REAL, COMPLEX):
            raise ValueError("field must be Real or Complex")

    @property
    def num_indefinite(self) -> int:
        if self.case in (CASE_A, CASE_C):
            return 1
        return math.ceil(0.1 * (self.m + 1))

    @property
    def psd_rank(self) -> int:
        return 1 if self.case in (CASE_C, CASE_D) else self.n

    def to_json_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True, eq=False)
class GenerationReport:
    """A generated instance plus the retry counters behind it."""

    instance: QcqpInstance
    spec: GeneratorSpec
    indefinite_regenerations: int
    feasibility_retries: int


@dataclass(frozen=True, eq=False)
class CanonicalExample:
    id: str
    M: float | None
    instance: QcqpInstance
    known_values: dict


def _generator_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def _orthogonal(rng: np.random.Generator, n: int, complex_field: bool) -> np.ndarray:
    g = rng.standard_normal((n, n))
    if complex_field:
        g = g + 1j * rng.standard_normal((n, n))
    q, _ = np.linalg.qr(g)
    return q


def _conjugated_diag(rng, n, d, complex_field):
    q = _orthogonal(rng, n, complex_field)
    mat = rng.uniform() * (np.conj(q.T) @ np.diag(d) @ q)
    if complex_field:
        return HermMatrix.from_complex(mat)
    return SymMatrix(mat)


def full_rank_psd(rng: np.random.Generator, n: int, complex_field: bool = False):
    return _conjugated_diag(rng, n, np.abs(rng.standard_normal(n)), complex_field)


def rank_one_psd(rng: np.random.Generator, n: int, complex_field: bool = False):
    d = np.zeros(n)
    d[0] = abs(rng.standard_normal())
    return _conjugated_diag(rng, n, d, complex_field)


def indefinite_matrix(rng: np.random.Generator, n: int, complex_field: bool = False):
    """Draw rand * Q^T diag(randn) Q, redrawing until both eigenvalue signs appear.

    Returns (matrix, regeneration_count); a redraw has probability ~2^(1-n)
    and is impossible at n = 1, which raises instead.
    """
    if n < 2:
        raise ValueError("an indefinite matrix needs dimension at least 2")
    regenerated = 0
    while True:
        mat = _conjugated_diag(rng, n, rng.standard_normal(n), complex_field)
        arr = mat.to_complex() if complex_field else mat.a
        vals = np.linalg.eigvalsh(arr)
        tol = _SPECTRUM_TOL * max(1.0, float(np.abs(vals).max()))
        if vals[0] < -tol and vals[-1] > tol:
            return mat, regenerated
        regenerated += 1


def _draw_instance(spec: GeneratorSpec, rng: np.random.Generator):
    complex_field = spec.field == COMPLEX
    kind = HermMatrix if complex_field else SymMatrix
    regenerated = 0

    constraints = []
    for _ in range(spec.num_indefinite):
        mat, redraws = indefinite_matrix(rng, spec.n, complex_field)
        regenerated += redraws
        constraints.append(mat)
    psd_draw = rank_one_psd if spec.psd_rank == 1 else full_rank_psd
    while len(constraints) < spec.m + 1:
        constraints.append(psd_draw(rng, spec.n, complex_field))

    if spec.objective_kind == OBJECTIVE_IDENTITY:
        eye = np.eye(spec.n, dtype=complex if complex_field else float)
        objective = kind.from_complex(eye) if complex_field else kind(eye)
    else:
        objective, redraws = indefinite_matrix(rng, spec.n, complex_field)
        regenerated += redraws

    inst = QcqpInstance(
        sense=spec.sense, field=spec.field, objective=objective, constraints=tuple(constraints)
    )
    return inst, regenerated


def _always_feasible(spec: GeneratorSpec) -> bool:
    # X = a vv^T + b I with v the top eigenvector of the single non-PSD
    # constraint meets every minimization constraint, so one indefinite
    # matrix can never make the relaxation infeasible
    return spec.sense == MAXIMIZE or spec.num_indefinite <= 1


def generate_report(spec: GeneratorSpec) -> GenerationReport:
    """Generate an instance, retrying infeasible multi-indefinite draws."""
    rng = _generator_rng(spec.seed)
    regenerated = 0
    for retry in range(_MAX_FEASIBILITY_RETRIES + 1):
        inst, redraws = _draw_instance(spec, rng)
        regenerated += redraws
        if _always_feasible(spec) or solve_instance(inst).status != INFEASIBLE:
            return GenerationReport(
                instance=inst,
                spec=spec,
                indefinite_regenerations=regenerated,
                feasibility_retries=retry,
            )
    raise RuntimeError(f"no feasible instance after {_MAX_FEASIBILITY_RETRIES} retries: {spec}")


def generate(spec: GeneratorSpec) -> QcqpInstance:
    return generate_report(spec).instance


def _sym(entries) -> SymMatrix:
    return SymMatrix(np.array(entries, dtype=float))


def canonical(example_id: str, M: float | None = None) -> CanonicalExample:
    """Build one of the four canonical examples with its known analytic values.

    min_coupling and max_coupling take a coupling strength M > 0; the other
    two ignore M.
    """
    if example_id in (MIN_COUPLING, MAX_COUPLING):
        if M is None or M <= 0:
            raise ValueError(f"{example_id} needs a coupling strength M > 0")
    if example_id == MIN_COUPLING:
        # min |x|^2 s.t. x2^2 >= 1, x1^2 + M x1 x2 >= 1, x1^2 - M x1 x2 >= 1.
        # The relaxation value is 2: the coupled pair forces X11 >= 1 + M |X12|
        # and the first constraint forces X22 >= 1, attained at X = I.  Any
        # feasible point has x2^2 >= 1 and x1^2 >= 1 + M |x1 x2|, so
        # |x1| >= (M + sqrt(M^2 + 4)) / 2 and the true optimum grows like M^2.
        inst = QcqpInstance(
            sense=MINIMIZE,
            field=REAL,
            objective=_sym(np.eye(2)),
            constraints=(
                _sym([[0.0, 0.0], [0.0, 1.0]]),
                _sym([[1.0, M / 2], [M / 2, 0.0]]),
                _sym([[1.0, -M / 2], [-M / 2, 0.0]]),
            ),
        )
        root = (M + math.sqrt(M * M + 4.0)) / 2.0
        known = {"v_sdp": 2.0, "v_qp_lower": 1.0 + root * root}
    elif example_id == MIN_GAP_INFINITE:
        # min x4^2 with two sign-coupled constraints and two hyperbolic ones;
        # the relaxation reaches 0 at X = diag(4, 4, 1, 0) while every
        # feasible point has x4^2 >= 3
        inst = QcqpInstance(
            sense=MINIMIZE,
            field=REAL,
            objective=_sym(np.diag([0.0, 0.0, 0.0, 1.0])),
            constraints=(
                _sym(
                    [
                        [0.0, 0.5, 0.0, 0.0],
                        [0.5, 0.0, 0.0, 0.0],
                        [0.0, 0.0, 1.0, 0.0],
                        [0.0, 0.0, 0.0, 1.0],
                    ]
                ),
                _sym(
                    [
                        [0.0, -0.5, 0.0, 0.0],
                        [-0.5, 0.0, 0.0, 0.0],
                        [0.0, 0.0, 1.0, 0.0],
                        [0.0, 0.0, 0.0, 1.0],
                    ]
                ),
                _sym(np.diag([0.5, 0.0, -1.0, 0.0])),
                _sym(np.diag([0.0, 0.5, -1.0, 0.0])),
            ),
        )
        known = {"v_sdp": 0.0, "v_qp_lower": 3.0}
    elif example_id == MAX_COUPLING:
        # max x1^2 + x2^2/M with coupled indefinite constraints; the
        # relaxation sits in [1 + 1/M, 1 + 2/M] while the true optimum decays
        # like 1/M, giving a ratio that grows like 0.382 M
        inst = QcqpInstance(
            sense=MAXIMIZE,
            field=REAL,
            objective=_sym(np.diag([1.0, 1.0 / M])),
            constraints=(
                _sym([[0.0, M / 2], [M / 2, 1.0]]),
                _sym([[0.0, -M / 2], [-M / 2, 1.0]]),
                _sym(np.diag([M, -M])),
            ),
        )
        known = {
            "v_qp_upper": 2.618 / M,
            "v_sdp_lower": 1.0 + 1.0 / M,
            "v_sdp_upper": 1.0 + 2.0 / M,
            "ratio_lower": 0.382 * M,
        }
    elif example_id == MAX_UNBOUNDED_RELAXATION:
        # max x1 x2 + x1^2 s.t. x1 x2 <= 1, x1^2 - x2^2 <= 1: the relaxation
        # is unbounded along X = t [[1, -1], [-1, 1]] while the original
        # optimum is (3 + sqrt(5))/2
        inst = QcqpInstance(
            sense=MAXIMIZE,
            field=REAL,
            objective=_sym([[1.0, 0.5], [0.5, 0.0]]),
            constraints=(
                _sym([[0.0, 0.5], [0.5, 0.0]]),
                _sym(np.diag([1.0, -1.0])),
            ),
        )
        known = {"v_qp": (3.0 + math.sqrt(5.0)) / 2.0, "sdp_status": "Unbounded"}
    else:
        raise ValueError(f"unknown canonical example {example_id!r}")
    return CanonicalExample(id=example_id, M=M, instance=inst, known_values=known)


@dataclass(frozen=True)
class BruteGrid:
    """Search box and resolution for the grid oracle."""

    radius: float = 6.0
    points: int = 41
    refine_rounds: int = 8
    direction_count: int = 4096
    starts: int = 8

    def __post_init__(self) -> None:
        if self.radius <= 0 or self.points < 5 or self.refine_rounds < 0 or self.starts < 1:
            raise ValueError("need radius > 0, points >= 5, refine_rounds >= 0, starts >= 1")


def _direction_grid(n: int, count: int) -> np.ndarray:
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        angles = np.linspace(0.0, 2.0 * math.pi, count, endpoint=False)
        return np.stack([np.cos(angles), np.sin(angles)], axis=1)
    # Fibonacci sphere
    i = np.arange(count) + 0.5
    phi = math.pi * (1.0 + math.sqrt(5.0)) * i
    z = 1.0 - 2.0 * i / count
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def _quad_batch(A: np.ndarray, P: np.ndarray) -> np.ndarray:
    return np.einsum("pi,ij,pj->p", P, A, P)


def brute_force_qcqp(inst: QcqpInstance, grid: BruteGrid | None = None) -> float:
    """Grid-with-refinement oracle for the true optimum of a small instance.

    Only real instances with n <= 3 are supported.  Returns +-inf when a
    feasible ray makes the objective unbounded (radial growth test), raises
    when no grid point is feasible at the final resolution.
    """
    if inst.field != REAL:
        raise ValueError("the grid oracle supports real instances only")
    n = inst.n
    if n > 3:
        raise ValueError("the grid oracle supports n <= 3 only")
    g = grid or BruteGrid()
    C = inst.objective.a
    As = [a.a for a in inst.constraints]
    maximize = inst.sense == MAXIMIZE

    dirs = _direction_grid(n, g.direction_count)
    cons_dir = np.stack([_quad_batch(A, dirs) for A in As])
    obj_dir = _quad_batch(C, dirs)
    if maximize:
        ray = (cons_dir.max(axis=0) <= 1e-12) & (obj_dir >= 1e-9)
        if bool(ray.any()):
            return math.inf
    else:
        ray = (cons_dir.min(axis=0) >= 1e-9) & (obj_dir <= -1e-9)
        if bool(ray.any()):
            return -math.inf

    def scan(center: np.ndarray, half: float):
        axes = [np.linspace(center[i] - half, center[i] + half, g.points) for i in range(n)]
        mesh = np.meshgrid(*axes, indexing="ij")
        P = np.stack([m.ravel() for m in mesh], axis=1)
        vals = np.stack([_quad_batch(A, P) for A in As])
        feas = (vals.max(axis=0) <= 1.0) if maximize else (vals.min(axis=0) >= 1.0)
        if not bool(feas.any()):
            return None, None
        obj = _quad_batch(C, P)
        obj = np.where(feas, obj, -math.inf if maximize else math.inf)
        order = np.argsort(-obj if maximize else obj)
        return P[order], obj[order]

    def refine(point: np.ndarray, start_half: float, start_val: float) -> float:
        # pan at constant width while the optimum sits on the box edge (a
        # coarse start may land far from its basin); shrink once interior
        best_val = start_val
        half = start_half
        shrinks = 0
        pans = 0
        while shrinks < g.refine_rounds:
            ranked, vals = scan(point, half)
            if ranked is None:
                break
            val_new = float(vals[0])
            better = val_new > best_val if maximize else val_new < best_val
            if better:
                best_val = val_new
            step = 2.0 * half / (g.points - 1)
            on_edge = bool(np.any(np.abs(ranked[0] - point) >= half - 1.5 * step))
            point = ranked[0]
            if on_edge and pans < 32:
                pans += 1
                continue
            half = 4.0 * half / (g.points - 1)
            shrinks += 1
        return best_val

    center = np.zeros(n)
    half = g.radius
    ranked = None
    for attempt in range(4):
        ranked, vals = scan(center, half)
        if ranked is not None:
            break
        half *= 2.0
    if ranked is None:
        raise ValueError("no feasible grid point found; widen the search box")

    # refine from several spatially separated starts: distinct local basins
    # can differ and the global grid alone cannot tell which one wins
    spacing = 2.0 * half / (g.points - 1)
    starts = []
    for idx in range(len(ranked)):
        if not math.isfinite(vals[idx]):
            break
        p = ranked[idx]
        if all(float(np.max(np.abs(p - q))) > 2.0 * spacing for q, _ in starts):
            starts.append((p, float(vals[idx])))
        if len(starts) >= g.starts:
            break
    best = -math.inf if maximize else math.inf
    for p, v in starts:
        out = refine(p, 4.0 * half / (g.points - 1), v)
        best = max(best, out) if maximize else min(best, out)
    return best
