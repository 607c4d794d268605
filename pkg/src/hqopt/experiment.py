"""Sweep runner: generate, solve, reduce, round, and tabulate ratio records.

One root seed drives the whole sweep.  For sweep position (case index c,
constraint count m, instance index i) the derivation is

    instance_seed, rounding_seed = SeedSequence((root_seed, c, m, i)).generate_state(2)

so any single record can be reproduced in isolation from the numbers in its
row.  Records are produced in deterministic order regardless of worker count
(results are gathered by index, never by completion order); the worker count
comes from the HQOPT_THREADS environment variable and defaults to 1.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .instances import CASES, GeneratorSpec, OBJECTIVE_IDENTITY, OBJECTIVE_INDEFINITE, generate
from .lowrank import reduce_rank
from .rounding import (
    GAUSSIAN_MAX,
    GAUSSIAN_MIN,
    SIGN_MAX,
    RoundingParams,
    complex_exact_extraction,
    gaussian_round_max,
    gaussian_round_min,
    sign_round_max,
)
from .sdp import COMPLEX, MAXIMIZE, MINIMIZE, OPTIMAL, REAL, solve_instance

CSV_HEADER = "case,m,instance_seed,status,v_sdp,v_hat_qp,ratio,bound"

_SUMMARY_STATUSES = ("SummaryMin", "SummaryMean", "SummaryMax")


@dataclass(frozen=True)
class ExperimentRecord:
    """One generated instance's outcome; v_hat_qp is the best rounded value."""

    case: str
    m: int
    instance_seed: int
    v_sdp: float
    v_hat_qp: float
    empirical_ratio: float
    theoretical_bound: float
    solve_status: str

    def csv_row(self) -> str:
        return ",".join(
            (
                self.case,
                str(self.m),
                str(self.instance_seed),
                self.solve_status,
                _fmt(self.v_sdp),
                _fmt(self.v_hat_qp),
                _fmt(self.empirical_ratio),
                _fmt(self.theoretical_bound),
            )
        )


@dataclass(frozen=True)
class SummaryRecord:
    """Aggregate over one (case, m) cell; count is the number of finite ratios."""

    case: str
    m: int
    count: int
    ratio_min: float
    ratio_mean: float
    ratio_max: float

    def csv_rows(self) -> list:
        stats = (self.ratio_min, self.ratio_mean, self.ratio_max)
        return [
            f"{self.case},{self.m},{self.count},{status},,,{_fmt(value)},"
            for status, value in zip(_SUMMARY_STATUSES, stats)
        ]


@dataclass(frozen=True)
class ExperimentConfig:
    cases: tuple = ("A_OneIndef_RestPD",)
    m_list: tuple = (5, 10, 15, 20, 25, 30)
    instances_per_m: int = 100
    samples: int = 100
    root_seed: int = 0
    n: int = 10
    scheme: str = GAUSSIAN_MIN
    field: str = REAL

    def __post_init__(self) -> None:
        if not self.cases or any(c not in CASES for c in self.cases):
            raise ValueError(f"cases must be drawn from {CASES}")
        if not self.m_list or any(not isinstance(m, int) or m < 1 for m in self.m_list):
            raise ValueError("m_list must hold positive integers")
        if self.instances_per_m < 0 or self.samples < 1 or self.n < 2:
            raise ValueError("need instances_per_m >= 0, samples >= 1, n >= 2")
        if self.scheme not in (GAUSSIAN_MIN, SIGN_MAX, GAUSSIAN_MAX):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.field == COMPLEX and self.scheme != GAUSSIAN_MIN:
            raise ValueError("complex sweeps support the GaussianMin scheme only")

    @property
    def sense(self) -> str:
        return MINIMIZE if self.scheme == GAUSSIAN_MIN else MAXIMIZE

    @property
    def objective_kind(self) -> str:
        return OBJECTIVE_IDENTITY if self.sense == MINIMIZE else OBJECTIVE_INDEFINITE


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    config: ExperimentConfig
    records: tuple
    summaries: tuple


def _fmt(v: float) -> str:
    if isinstance(v, str):
        return v
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(float(v))


def derive_seeds(root_seed: int, case_index: int, m: int, index: int) -> tuple[int, int]:
    state = np.random.SeedSequence((root_seed, case_index, m, index)).generate_state(2)
    return int(state[0]), int(state[1])


def run_single(config: ExperimentConfig, case: str, case_index: int, m: int, index: int) -> ExperimentRecord:
    """Generate, solve, and round one sweep instance; failures stay in-row."""
    instance_seed, rounding_seed = derive_seeds(config.root_seed, case_index, m, index)
    spec = GeneratorSpec(
        n=config.n,
        m=m,
        case=case,
        sense=config.sense,
        objective_kind=config.objective_kind,
        seed=instance_seed,
        field=config.field,
    )
    inst = generate(spec)
    sol = solve_instance(inst)
    if sol.status != OPTIMAL:
        return ExperimentRecord(
            case=case,
            m=m,
            instance_seed=instance_seed,
            v_sdp=sol.objective_value,
            v_hat_qp=math.nan,
            empirical_ratio=math.nan,
            theoretical_bound=math.nan,
            solve_status=sol.status,
        )

    params_kwargs = dict(num_samples=config.samples, seed=rounding_seed)
    if config.scheme == GAUSSIAN_MIN:
        low = reduce_rank(sol, inst)
        report = None
        if config.field == COMPLEX and inst.m <= 3:
            report = complex_exact_extraction(inst, low)
            if report.failed:
                report = None
        if report is None:
            report = gaussian_round_min(inst, low, RoundingParams(GAUSSIAN_MIN, **params_kwargs))
    elif config.scheme == SIGN_MAX:
        low = reduce_rank(sol, inst)
        report = sign_round_max(inst, low, RoundingParams(SIGN_MAX, **params_kwargs))
    else:
        report = gaussian_round_max(inst, sol, RoundingParams(GAUSSIAN_MAX, **params_kwargs))

    return ExperimentRecord(
        case=case,
        m=m,
        instance_seed=instance_seed,
        v_sdp=report.v_sdp,
        v_hat_qp=report.best_objective,
        empirical_ratio=report.empirical_ratio,
        theoretical_bound=report.theoretical_bound,
        solve_status=sol.status,
    )


def summarize(records) -> tuple:
    cells = {}
    for rec in records:
        cells.setdefault((rec.case, rec.m), []).append(rec.empirical_ratio)
    out = []
    for (case, m), ratios in cells.items():
        finite = [r for r in ratios if math.isfinite(r)]
        if finite:
            out.append(
                SummaryRecord(
                    case=case,
                    m=m,
                    count=len(finite),
                    ratio_min=min(finite),
                    ratio_mean=sum(finite) / len(finite),
                    ratio_max=max(finite),
                )
            )
        else:
            out.append(
                SummaryRecord(
                    case=case, m=m, count=0, ratio_min=math.nan, ratio_mean=math.nan, ratio_max=math.nan
                )
            )
    return tuple(out)


def worker_count() -> int:
    raw = os.environ.get("HQOPT_THREADS", "1")
    try:
        count = int(raw)
    except ValueError as exc:
        raise ValueError(f"HQOPT_THREADS must be an integer, got {raw!r}") from exc
    return max(1, count)


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    tasks = [
        (case, ci, m, i)
        for ci, case in enumerate(config.cases)
        for m in config.m_list
        for i in range(config.instances_per_m)
    ]
    workers = worker_count()
    if workers == 1:
        records = [run_single(config, *t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda t: run_single(config, *t), tasks))
    return ExperimentResult(config=config, records=tuple(records), summaries=summarize(records))


def write_csv(result: ExperimentResult, stream) -> None:
    """Emit the record table: root-seed comment, header, rows, summary rows.

    Summary rows reuse the fixed column layout with status SummaryMin /
    SummaryMean / SummaryMax, the finite-ratio count in the instance_seed
    column, and the statistic in the ratio column.
    """
    stream.write(f"# root_seed={result.config.root_seed}\n")
    stream.write(CSV_HEADER + "\n")
    for rec in result.records:
        stream.write(rec.csv_row() + "\n")
    for summary in result.summaries:
        for row in summary.csv_rows():
            stream.write(row + "\n")
