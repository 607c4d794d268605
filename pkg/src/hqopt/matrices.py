"""Dense symmetric and Hermitian matrix primitives.

Conventions used throughout the package:

* real symmetric matrices are stored as full dense ``float64`` arrays and
  are symmetrized ``(M + M.T) / 2`` on construction;
* Hermitian matrices are stored as a (real, imaginary) pair and are consumed
  by the optimization layers exclusively through the real ``2n x 2n``
  embedding ``[[Re, -Im], [Im, Re]]``;
* spectra report eigenvalues in descending order with matching orthonormal
  eigenvector columns.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "DecompositionError",
    "HermMatrix",
    "Spectrum",
    "SymMatrix",
    "complex_from_embedding",
    "embed_factor",
    "frobenius_norm",
    "herm_eig",
    "herm_embed",
    "j_symmetrize",
    "sym_eig",
    "trace_inner",
    "vec_embed",
    "vec_unembed",
]

# Construction-time tolerance: entry asymmetry beyond this raises in strict
# mode; below it the symmetric/antisymmetric projection is applied silently.
STRICT_TOL = 1e-8


class DecompositionError(RuntimeError):
    """Raised when an eigendecomposition fails; carries the residual."""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


def _as_square_float(a, name: str) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class SymMatrix:
    """Real symmetric matrix, symmetrized on construction.

    With ``strict=True`` an entry asymmetry larger than ``STRICT_TOL``
    raises instead of being projected away.
    """

    a: np.ndarray
    strict: bool = False

    def __post_init__(self):
        arr = _as_square_float(self.a, "SymMatrix")
        asym = float(np.max(np.abs(arr - arr.T), initial=0.0))
        if self.strict and asym > STRICT_TOL:
            raise ValueError(
                f"asymmetry {asym:.3e} exceeds strict tolerance {STRICT_TOL:.0e}"
            )
        object.__setattr__(self, "a", _freeze(0.5 * (arr + arr.T)))

    @property
    def n(self) -> int:
        return self.a.shape[0]

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "re": self.a.reshape(-1).tolist()})

    @staticmethod
    def from_json(text: str) -> "SymMatrix":
        data = _load_matrix_json(text)
        if data.get("im") is not None:
            raise ValueError("unexpected 'im' block for a real matrix")
        n = data["n"]
        return SymMatrix(np.array(data["re"], dtype=float).reshape(n, n))


@dataclass(frozen=True, eq=False)
class HermMatrix:
    """Hermitian matrix stored as a (symmetric, antisymmetric) real pair."""

    re: np.ndarray
    im: np.ndarray
    strict: bool = False

    def __post_init__(self):
        re = _as_square_float(self.re, "HermMatrix.re")
        im = _as_square_float(self.im, "HermMatrix.im")
        if re.shape != im.shape:
            raise ValueError("re/im shape mismatch")
        asym = max(
            float(np.max(np.abs(re - re.T), initial=0.0)),
            float(np.max(np.abs(im + im.T), initial=0.0)),
        )
        if self.strict and asym > STRICT_TOL:
            raise ValueError(
                f"hermiticity violation {asym:.3e} exceeds {STRICT_TOL:.0e}"
            )
        object.__setattr__(self, "re", _freeze(0.5 * (re + re.T)))
        object.__setattr__(self, "im", _freeze(0.5 * (im - im.T)))

    @staticmethod
    def from_complex(h, strict: bool = False) -> "HermMatrix":
        arr = np.asarray(h, dtype=complex)
        return HermMatrix(arr.real, arr.imag, strict=strict)

    @property
    def n(self) -> int:
        return self.re.shape[0]

    def to_complex(self) -> np.ndarray:
        return self.re + 1j * self.im

    def to_json(self) -> str:
        return json.dumps(
            {
                "n": self.n,
                "re": self.re.reshape(-1).tolist(),
                "im": self.im.reshape(-1).tolist(),
            }
        )

    @staticmethod
    def from_json(text: str) -> "HermMatrix":
        data = _load_matrix_json(text)
        n = data["n"]
        re = np.array(data["re"], dtype=float).reshape(n, n)
        im = data.get("im")
        if im is None:
            im = np.zeros((n, n))
        else:
            im = np.array(im, dtype=float).reshape(n, n)
        return HermMatrix(re, im)


AnyMatrix = Union[SymMatrix, HermMatrix]


def _load_matrix_json(text: str) -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed matrix JSON: {exc}") from exc
    if not isinstance(data, dict) or "n" not in data or "re" not in data:
        raise ValueError("matrix JSON must carry 'n' and row-major 're'")
    n = data["n"]
    if not isinstance(n, int) or n <= 0:
        raise ValueError(f"matrix dimension must be a positive integer, got {n!r}")
    for key in ("re", "im"):
        block = data.get(key)
        if block is None:
            continue
        if not isinstance(block, list) or len(block) != n * n:
            raise ValueError(f"'{key}' must hold exactly n*n = {n * n} entries")
    return data


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigenvalues in descending order with matching eigenvector columns."""

    eigenvalues: np.ndarray
    vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.eigenvalues) @ self.vectors.T


def sym_eig(m: SymMatrix | np.ndarray) -> Spectrum:
    """Full spectral decomposition of a real symmetric matrix.

    Eigenvalues come back in descending order. A LAPACK convergence failure
    is re-raised as :class:`DecompositionError` with the residual attached.
    """
    arr = m.a if isinstance(m, SymMatrix) else _as_square_float(m, "sym_eig input")
    arr = 0.5 * (arr + arr.T)
    try:
        vals, vecs = np.linalg.eigh(arr)
    except np.linalg.LinAlgError as exc:
        raise DecompositionError(f"eigendecomposition failed: {exc}") from exc
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    vecs = vecs[:, order]
    residual = float(np.linalg.norm((vecs * vals) @ vecs.T - arr, "fro"))
    if not np.isfinite(residual) or residual > 1e-8 * (1.0 + np.linalg.norm(arr, "fro")):
        raise DecompositionError(
            f"eigendecomposition residual {residual:.3e} out of tolerance", residual
        )
    return Spectrum(_freeze(vals), _freeze(vecs))


def herm_embed(h: HermMatrix) -> SymMatrix:
    """Real ``2n x 2n`` embedding ``[[Re, -Im], [Im, Re]]`` of a Hermitian matrix.

    The embedding doubles every eigenvalue's multiplicity and doubles traces:
    ``Tr(embed(H)) = 2 Tr(H)`` and ``Tr(embed(A) embed(B)) = 2 Tr(AB)``.
    """
    return SymMatrix(np.block([[h.re, -h.im], [h.im, h.re]]))


def j_symmetrize(x: np.ndarray) -> np.ndarray:
    """Project a ``2n x 2n`` symmetric matrix onto the embedded Hermitian space."""
    arr = _as_square_float(x, "j_symmetrize input")
    if arr.shape[0] % 2:
        raise ValueError("embedded matrices have even dimension")
    n = arr.shape[0] // 2
    a, b = arr[:n, :n], arr[:n, n:]
    c, d = arr[n:, :n], arr[n:, n:]
    re = 0.5 * (a + d)
    im = 0.5 * (c - b)
    re = 0.5 * (re + re.T)
    im = 0.5 * (im - im.T)
    return np.block([[re, -im], [im, re]])


def complex_from_embedding(x: np.ndarray) -> HermMatrix:
    """Read a Hermitian matrix back out of its (J-symmetrized) embedding."""
    arr = j_symmetrize(x)
    n = arr.shape[0] // 2
    return HermMatrix(arr[:n, :n], arr[n:, :n])


def vec_embed(z: np.ndarray) -> np.ndarray:
    """Complex n-vector -> real 2n-vector (Re; Im)."""
    z = np.asarray(z, dtype=complex).reshape(-1)
    return np.concatenate([z.real, z.imag])


def vec_unembed(v: np.ndarray) -> np.ndarray:
    """Real 2n-vector (Re; Im) -> complex n-vector."""
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size % 2:
        raise ValueError("embedded vectors have even length")
    n = v.size // 2
    return v[:n] + 1j * v[n:]


def embed_factor(u: np.ndarray) -> np.ndarray:
    """Complex ``n x r`` factor -> real ``2n x 2r`` factor of the embedding.

    If ``Z = U U*`` then ``embed(Z) = E E^T`` for the returned ``E``.
    """
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2:
        raise ValueError("factor must be 2-D")
    return np.block([[u.real, -u.imag], [u.imag, u.real]])


def herm_eig(h: HermMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Hermitian eigendecomposition computed through the real embedding.

    Returns ``(vals, U)`` with eigenvalues descending and complex orthonormal
    eigenvector columns. Each embedded eigenvalue appears with doubled
    multiplicity; the J-pairing ``(a; b) ~ a + ib``, ``J(a; b) ~ i(a + ib)``
    collapses every real 2d-dimensional eigenspace to d complex vectors.
    """
    n = h.n
    spec = sym_eig(herm_embed(h))
    vals_all, vecs_all = spec.eigenvalues, spec.vectors
    scale = max(1.0, float(np.max(np.abs(vals_all), initial=0.0)))
    out_vals: list[float] = []
    out_vecs: list[np.ndarray] = []
    i = 0
    while i < 2 * n:
        j = i + 1
        while j < 2 * n and vals_all[i] - vals_all[j] <= 1e-10 * scale:
            j += 1
        block = vecs_all[:, i:j]  # real eigenspace, dimension j - i (even)
        picked: list[np.ndarray] = []
        for col in range(block.shape[1]):
            w = block[:, col].copy()
            for v in picked:
                w -= (v @ w) * v
            norm = float(np.linalg.norm(w))
            if norm < 1e-8:
                continue
            w /= norm
            jw = np.concatenate([-w[n:], w[:n]])  # multiplication by i
            for v in picked:
                jw -= (v @ jw) * v
            jw /= np.linalg.norm(jw)
            picked.extend([w, jw])
            out_vals.append(float(vals_all[i]))
            out_vecs.append(w[:n] + 1j * w[n:])
        i = j
    if len(out_vals) != n:
        raise DecompositionError(
            f"embedding pairing produced {len(out_vals)} eigenvalues, expected {n}"
        )
    return np.array(out_vals), np.column_stack(out_vecs)


def trace_inner(a: AnyMatrix, b: AnyMatrix) -> float:
    """Trace inner product ``Tr(AB)`` of two symmetric or two Hermitian matrices."""
    if isinstance(a, SymMatrix) and isinstance(b, SymMatrix):
        if a.n != b.n:
            raise ValueError(f"dimension mismatch: {a.n} vs {b.n}")
        return float(np.tensordot(a.a, b.a, axes=2))
    if isinstance(a, HermMatrix) and isinstance(b, HermMatrix):
        if a.n != b.n:
            raise ValueError(f"dimension mismatch: {a.n} vs {b.n}")
        # Tr(AB) is real for Hermitian A, B: sum Re(A) Re(B) + Im(A) Im(B).
        return float(np.tensordot(a.re, b.re, axes=2) + np.tensordot(a.im, b.im, axes=2))
    raise ValueError("trace_inner requires two SymMatrix or two HermMatrix operands")


def frobenius_norm(a: AnyMatrix | np.ndarray) -> float:
    """Frobenius norm of a matrix (wrapper types or a plain ndarray)."""
    if isinstance(a, SymMatrix):
        return float(np.linalg.norm(a.a, "fro"))
    if isinstance(a, HermMatrix):
        return float(np.sqrt(np.sum(a.re**2) + np.sum(a.im**2)))
    arr = np.asarray(a, dtype=float)
    return float(np.linalg.norm(arr, "fro"))
