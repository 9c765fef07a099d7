"""Small dense real symmetric matrix kit.

Everything here works on plain ``numpy`` arrays; validation helpers raise
:class:`ValidationError` instead of silently symmetrizing bad input.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

SYMMETRY_TOL = 1e-10
KERNEL_EPS = 1e-10


class ValidationError(ValueError):
    """Raised when an input matrix, strategy or file violates its contract."""


class Spectrum(NamedTuple):
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # columns, orthonormal


def as_symmetric(m, tol: float = SYMMETRY_TOL, name: str = "matrix") -> np.ndarray:
    """Return ``m`` as a float array after checking it is square and symmetric."""
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"{name}: expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name}: non-finite entries")
    asym = np.max(np.abs(a - a.T)) if a.size else 0.0
    if asym > tol:
        raise ValidationError(f"{name}: not symmetric (max |M - M^T| = {asym:.3e})")
    return a


def _canonical_sign(v: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(v) > 1e-12)
    if nz.size and v[nz[0]] < 0:
        return -v
    return v


def eig_sym(m, tie_tol: float = 1e-12) -> Spectrum:
    """Symmetric eigendecomposition sorted by descending eigenvalue.

    Each eigenvector has its first nonzero component made positive; eigenvalues
    that agree within ``tie_tol`` are ordered by the lexicographic order of
    their eigenvectors so the output is reproducible.
    """
    a = as_symmetric(m)
    w, v = np.linalg.eigh(a)
    v = np.column_stack([_canonical_sign(v[:, i]) for i in range(v.shape[1])]) if a.size else v
    order = sorted(range(len(w)), key=lambda i: -w[i])
    # group near-equal eigenvalues, then sort each group lexicographically
    out: list[int] = []
    i = 0
    while i < len(order):
        j = i + 1
        while j < len(order) and abs(w[order[j]] - w[order[i]]) <= tie_tol:
            j += 1
        group = order[i:j]
        group.sort(key=lambda k: tuple(-v[:, k]))
        out.extend(group)
        i = j
    return Spectrum(w[out], v[:, out])


def positive_eigenspace_projector(m, eps: float = KERNEL_EPS) -> np.ndarray:
    """Projector onto the span of eigenvectors with eigenvalue > ``eps``.

    Near-zero eigenvalues (the kernel) are excluded, so the zero matrix maps to
    the zero projector.
    """
    a = as_symmetric(m)
    w, v = np.linalg.eigh(a)
    keep = v[:, w > eps]
    p = keep @ keep.T
    return 0.5 * (p + p.T)


def psd_margin(m) -> float:
    """Smallest eigenvalue; ``m`` is PSD iff this is >= -tolerance."""
    a = as_symmetric(m)
    return float(np.linalg.eigvalsh(a)[0])


def is_projector(m, tol: float = 1e-8) -> bool:
    try:
        a = as_symmetric(m, tol=tol)
    except ValidationError:
        return False
    if np.linalg.norm(a @ a - a) > tol:
        return False
    w = np.linalg.eigvalsh(a)
    return bool(np.all(np.minimum(np.abs(w), np.abs(w - 1.0)) <= tol))


def projector_defect(m) -> str | None:
    """Describe why ``m`` is not a projector at the strategy tolerances, or None."""
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return f"not square (shape {a.shape})"
    asym = np.max(np.abs(a - a.T)) if a.size else 0.0
    if asym > SYMMETRY_TOL:
        return f"not symmetric (max |M - M^T| = {asym:.3e})"
    err = np.linalg.norm(a @ a - a)
    if err > 1e-8:
        return f"not idempotent (||P^2 - P||_F = {err:.3e})"
    return None
