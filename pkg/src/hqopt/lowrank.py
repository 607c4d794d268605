"""Rank reduction of optimal SDP solutions to the Pataki bound.

Given an optimal X, repeatedly finds a symmetric direction D = U Delta U^T
inside range(X) that keeps every constraint trace and the objective trace
fixed, then steps to the cone boundary so an eigenvalue vanishes.  The
objective row is carried in the null-space system alongside all m+1
constraint rows: at an optimum it is a linear combination of them (through
the dual multipliers), so it never blocks a reduction that the constraint
count permits, and keeping it pins the objective value exactly rather than
to solver dust.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .matrices import HermMatrix, SymMatrix, embed_factor
from .sdp import COMPLEX, OPTIMAL, QcqpInstance, SdpSolution

_RANK_TOL = 1e-9
_VALUE_TOL = 1e-7


class NotPsdError(RuntimeError):
    """Raised when a factorization input has an eigenvalue below -tol."""


@dataclass(frozen=True, eq=False)
class LowRankSolution:
    """Factor U with X = U U* (complex conjugate-transpose when field Complex)."""

    U: np.ndarray
    r: int
    objective_value: float
    field: str
    meets_bound: bool
    steps: int

    def reconstruct(self) -> np.ndarray:
        return self.U @ np.conj(self.U.T)

    def factor_to_json(self) -> str:
        """Serialize the factor as {"n", "r", "entries"} with row-major entries.

        A complex factor is stored through its real embedding, so the payload
        always describes a real matrix whose outer product reconstructs the
        (possibly embedded) solution.
        """
        F = embed_factor(self.U) if self.field == COMPLEX else self.U
        return json.dumps(
            {"n": F.shape[0], "r": F.shape[1], "entries": [float(v) for v in F.ravel()]}
        )


def factor_from_json(payload: str) -> np.ndarray:
    d = json.loads(payload)
    entries = np.asarray(d["entries"], dtype=float)
    if entries.size != d["n"] * d["r"]:
        raise ValueError("entry count does not match declared shape")
    return entries.reshape(d["n"], d["r"])


def pataki_bound(num_constraints: int, field: str) -> int:
    """Largest admissible rank: r(r+1)/2 <= count (real), r^2 <= count (complex)."""
    if num_constraints < 1:
        raise ValueError("constraint count must be positive")
    if field == COMPLEX:
        return max(1, math.isqrt(num_constraints))
    return max(1, (math.isqrt(8 * num_constraints + 1) - 1) // 2)


def factorize(X, tol: float = 1e-9) -> np.ndarray:
    """U with columns sqrt(lam_i) q_i for eigenvalues above tol * lam_max.

    Accepts SymMatrix, HermMatrix, or a plain (possibly complex) ndarray.
    Raises NotPsdError when an eigenvalue sits below -tol.
    """
    if isinstance(X, SymMatrix):
        arr = X.a
    elif isinstance(X, HermMatrix):
        arr = X.to_complex()
    else:
        arr = np.asarray(X)
    vals, vecs = np.linalg.eigh(arr)
    if vals[0] < -tol:
        raise NotPsdError(f"matrix has eigenvalue {vals[0]:.3e} below -{tol:.1e}")
    lam_max = max(float(vals[-1]), 0.0)
    keep = vals > tol * lam_max if lam_max > 0 else np.zeros(len(vals), bool)
    return vecs[:, keep] * np.sqrt(vals[keep])


def _svec(S: np.ndarray) -> np.ndarray:
    # isometry: svec(A) . svec(B) = <A, B>
    r = S.shape[0]
    iu = np.triu_indices(r, 1)
    return np.concatenate([np.diag(S), math.sqrt(2.0) * S[iu]])


def _unsvec(v: np.ndarray, r: int) -> np.ndarray:
    S = np.diag(v[:r]).astype(float)
    iu = np.triu_indices(r, 1)
    S[iu] = v[r:] / math.sqrt(2.0)
    return S + np.triu(S, 1).T


def _hvec(H: np.ndarray) -> np.ndarray:
    r = H.shape[0]
    iu = np.triu_indices(r, 1)
    return np.concatenate(
        [np.real(np.diag(H)), math.sqrt(2.0) * np.real(H[iu]), math.sqrt(2.0) * np.imag(H[iu])]
    )


def _unhvec(v: np.ndarray, r: int) -> np.ndarray:
    k = r * (r - 1) // 2
    H = np.diag(v[:r]).astype(complex)
    iu = np.triu_indices(r, 1)
    H[iu] = (v[r : r + k] + 1j * v[r + k :]) / math.sqrt(2.0)
    return H + np.conj(np.triu(H, 1)).T


def _boundary_candidates(lam: np.ndarray):
    # step sizes that drive an eigenvalue of I + t*Delta to zero, shortest first
    out = []
    if lam[0] < -1e-14:
        out.append(-1.0 / lam[0])
    if lam[-1] > 1e-14:
        out.append(-1.0 / lam[-1])
    out.sort(key=abs)
    return out


def reduce_rank(
    sol: SdpSolution,
    inst: QcqpInstance,
    *,
    seed: int = 0,
    rank_tol: float = _RANK_TOL,
    value_tol: float = _VALUE_TOL,
    max_steps: int | None = None,
) -> LowRankSolution:
    """Reduce an Optimal solution's rank to the Pataki bound, values preserved.

    Deterministic for a fixed seed; the seed only matters when the principal
    null direction is rejected and a randomized recombination is attempted.
    If no admissible step exists before the bound is met, the best rank
    reached is returned with meets_bound False.
    """
    if sol.status != OPTIMAL:
        raise ValueError("rank reduction needs an Optimal solution")
    complex_field = inst.field == COMPLEX
    if complex_field:
        from .matrices import complex_from_embedding

        target = complex_from_embedding(sol.X.a).to_complex()
        mats = [a.to_complex() for a in inst.constraints]
        C = inst.objective.to_complex()
        vec, unvec = _hvec, _unhvec
    else:
        target = sol.X.a
        mats = [a.a for a in inst.constraints]
        C = inst.objective.a
        vec, unvec = _svec, _unsvec

    values = np.array([float(np.real(np.trace(A @ target))) for A in mats])
    obj_value = float(np.real(np.trace(C @ target)))
    bound = pataki_bound(len(mats), inst.field)
    U = factorize(target, rank_tol)
    r = U.shape[1]
    rng = np.random.default_rng(np.random.PCG64(seed))
    cap = max_steps if max_steps is not None else 2 * target.shape[0] + 10

    def drift(Unew):
        Xn = Unew @ np.conj(Unew.T)
        dv = max(
            abs(float(np.real(np.trace(A @ Xn))) - v) for A, v in zip(mats, values)
        )
        do = abs(float(np.real(np.trace(C @ Xn))) - obj_value)
        return max(dv, do)

    steps = 0
    while r > bound and steps < cap:
        Uh = np.conj(U.T)
        rows = [vec(Uh @ A @ U) for A in mats]
        rows.append(vec(Uh @ C @ U))
        system = np.vstack(rows)
        _, svals, Vh = np.linalg.svd(system, full_matrices=True)
        candidates = [Vh[-1]]
        null_dim = Vh.shape[0] - len(svals[svals > 1e-10])
        if null_dim > 1:
            mix = rng.standard_normal(null_dim)
            mixed = mix @ Vh[-null_dim:]
            candidates.append(mixed / np.linalg.norm(mixed))
        stepped = False
        for cand in candidates:
            Delta = unvec(cand, r)
            lam, V = np.linalg.eigh(Delta)
            for t in _boundary_candidates(lam):
                new_vals = 1.0 + t * lam
                keep = new_vals > rank_tol * max(float(new_vals.max()), 1e-300)
                if keep.sum() >= r:
                    continue
                Unew = (U @ V[:, keep]) * np.sqrt(new_vals[keep])
                if drift(Unew) <= value_tol:
                    U, r = Unew, int(keep.sum())
                    stepped = True
                    break
            if stepped:
                break
        if not stepped:
            break
        steps += 1

    final_obj = float(np.real(np.trace(C @ (U @ np.conj(U.T)))))
    return LowRankSolution(
        U=U,
        r=r,
        objective_value=final_obj,
        field=inst.field,
        meets_bound=r <= bound,
        steps=steps,
    )
