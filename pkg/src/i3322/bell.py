"""Strategies, correlators and the I3322 functional.

A strategy is a Schmidt-diagonal pure state ``sum_i lambda_i |ii>`` together
with three projectors per party. The two-party correlator is
``<A (x) B> = Tr(Lambda A^T Lambda B)`` with ``Lambda = diag(lambda)``; for
uniform weights this is ``Tr(A^T B) / d``. All operators are real symmetric,
so the transpose is a no-op and matrices are stored as given.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .symmat import ValidationError, projector_defect

SCHMIDT_TOL = 1e-10
LABELS = ("A1", "A2", "A3", "B1", "B2", "B3")

# (coefficient, alice setting or None, bob setting or None); None is the identity.
TERMS: tuple[tuple[int, int | None, int | None], ...] = (
    (-1, 1, None),
    (-1, None, 0),
    (-2, None, 1),
    (1, 0, 0),
    (1, 0, 1),
    (1, 1, 0),
    (1, 1, 1),
    (-1, 0, 2),
    (1, 1, 2),
    (-1, 2, 0),
    (1, 2, 1),
)


def term_label(term) -> str:
    coef, a, b = term
    parts = ([f"A{a + 1}"] if a is not None else []) + ([f"B{b + 1}"] if b is not None else [])
    sign = "-" if coef < 0 else "+"
    mag = f"{abs(coef)}" if abs(coef) != 1 else ""
    return f"{sign}{mag}<{' '.join(parts)}>"


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Strategy:
    """Six projectors of dimension ``dim`` and Schmidt weights (uniform by default)."""

    A: tuple[np.ndarray, np.ndarray, np.ndarray]
    B: tuple[np.ndarray, np.ndarray, np.ndarray]
    schmidt: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if len(self.A) != 3 or len(self.B) != 3:
            raise ValidationError("a strategy needs exactly three projectors per party")
        A = tuple(_frozen(m) for m in self.A)
        B = tuple(_frozen(m) for m in self.B)
        dim = A[0].shape[0] if A[0].ndim == 2 else -1
        for label, m in zip(LABELS, A + B):
            if m.shape != (dim, dim):
                raise ValidationError(f"{label}: expected shape ({dim}, {dim}), got {m.shape}")
            defect = projector_defect(m)
            if defect:
                raise ValidationError(f"{label}: {defect}")
        lam = np.full(dim, 1 / math.sqrt(dim)) if self.schmidt is None else self.schmidt
        lam = _frozen(lam)
        check_schmidt(lam, dim)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "schmidt", lam)

    @property
    def dim(self) -> int:
        return self.A[0].shape[0]

    @property
    def is_uniform(self) -> bool:
        return bool(np.allclose(self.schmidt, 1 / math.sqrt(self.dim), atol=1e-14, rtol=0))

    def operators(self) -> dict[str, np.ndarray]:
        return dict(zip(LABELS, self.A + self.B))

    def replace(self, **ops) -> "Strategy":
        """Copy with some operators (``A1=...``) or ``schmidt=...`` replaced."""
        cur = self.operators()
        schmidt = ops.pop("schmidt", self.schmidt)
        unknown = set(ops) - set(LABELS)
        if unknown:
            raise KeyError(f"unknown operator labels {sorted(unknown)}")
        cur.update(ops)
        return Strategy(tuple(cur[k] for k in LABELS[:3]), tuple(cur[k] for k in LABELS[3:]), schmidt)


def check_schmidt(lam: np.ndarray, dim: int) -> None:
    if lam.shape != (dim,):
        raise ValidationError(f"schmidt: expected {dim} weights, got shape {lam.shape}")
    if not np.all(np.isfinite(lam)) or np.any(lam < 0):
        raise ValidationError("schmidt: weights must be finite and non-negative")
    norm = float(np.sum(lam**2))
    if abs(norm - 1.0) > SCHMIDT_TOL:
        raise ValidationError(f"schmidt: sum of squares is {norm!r}, expected 1")


@dataclass(frozen=True)
class BellValue:
    value: float
    terms: tuple[float, ...]

    def breakdown(self) -> list[tuple[str, float]]:
        return [(term_label(t), v) for t, v in zip(TERMS, self.terms)]


def correlator(a, b, schmidt) -> float:
    """``<Psi| A (x) B |Psi>`` for the Schmidt-diagonal state with weights ``schmidt``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    lam = np.asarray(schmidt, dtype=float)
    if a.shape != b.shape or a.shape != (lam.size, lam.size):
        raise ValidationError(f"dimension mismatch: {a.shape}, {b.shape}, {lam.size} weights")
    # Tr(L A^T L B) = sum_ij lam_i lam_j A_ji B_ji
    return float(lam @ (a * b) @ lam)


def i3322_value(s: Strategy) -> BellValue:
    eye = np.eye(s.dim)
    vals = []
    for coef, a, b in TERMS:
        left = s.A[a] if a is not None else eye
        right = s.B[b] if b is not None else eye
        vals.append(coef * correlator(left, right, s.schmidt))
    return BellValue(math.fsum(vals), tuple(vals))


def scalar_value(a: tuple[int, int, int], b: tuple[int, int, int]) -> int:
    """Functional evaluated on a deterministic assignment (scalars substituted)."""
    total = 0
    for coef, i, j in TERMS:
        total += coef * (a[i] if i is not None else 1) * (b[j] if j is not None else 1)
    return total


def classical_max() -> tuple[int, list[tuple[tuple[int, ...], tuple[int, ...]]]]:
    """Maximum over the 64 deterministic strategies and every assignment attaining it."""
    scores = {}
    for bits in itertools.product((0, 1), repeat=6):
        scores[(bits[:3], bits[3:])] = scalar_value(bits[:3], bits[3:])
    best = max(scores.values())
    return best, [k for k, v in scores.items() if v == best]


def entanglement_entropy(schmidt) -> float:
    """Entropy of entanglement in bits, ``-sum lambda^2 log2 lambda^2``."""
    lam = np.asarray(schmidt, dtype=float)
    check_schmidt(lam, lam.size)
    p = lam**2
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p))) + 0.0


def direct_sum(*strategies: Strategy) -> Strategy:
    """Block-diagonal direct sum with uniform weights over the total dimension."""
    def blocks(mats):
        total = sum(m.shape[0] for m in mats)
        out = np.zeros((total, total))
        k = 0
        for m in mats:
            n = m.shape[0]
            out[k:k + n, k:k + n] = m
            k += n
        return out

    A = tuple(blocks([s.A[j] for s in strategies]) for j in range(3))
    B = tuple(blocks([s.B[j] for s in strategies]) for j in range(3))
    return Strategy(A, B)


# -- file format -----------------------------------------------------------

def _fmt(x: float) -> float:
    # 17 significant digits, parsed back so json writes the shortest exact repr
    return float(f"{x:.17g}")


def strategy_to_dict(s: Strategy) -> dict:
    d = {"dim": s.dim}
    if not np.array_equal(s.schmidt, np.full(s.dim, 1 / math.sqrt(s.dim))):
        d["schmidt"] = [_fmt(x) for x in s.schmidt]
    d["A"] = [[[_fmt(x) for x in row] for row in m] for m in s.A]
    d["B"] = [[[_fmt(x) for x in row] for row in m] for m in s.B]
    return d


def strategy_from_dict(d) -> Strategy:
    if not isinstance(d, dict):
        raise ValidationError("strategy file: top level must be a JSON object")
    for key in ("dim", "A", "B"):
        if key not in d:
            raise ValidationError(f"strategy file: missing field '{key}'")
    dim = d["dim"]
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise ValidationError("dim: must be a positive integer")
    mats = {}
    for side in ("A", "B"):
        ms = d[side]
        if not isinstance(ms, list) or len(ms) != 3:
            raise ValidationError(f"{side}: expected a list of three matrices")
        for j, m in enumerate(ms):
            label = f"{side}{j + 1}"
            try:
                arr = np.array(m, dtype=float)
            except (TypeError, ValueError) as exc:
                raise ValidationError(f"{label}: not a numeric matrix ({exc})") from None
            if arr.shape != (dim, dim):
                raise ValidationError(f"{label}: expected {dim}x{dim}, got shape {arr.shape}")
            mats[label] = arr
    schmidt = d.get("schmidt")
    if schmidt is not None:
        try:
            schmidt = np.array(schmidt, dtype=float)
        except (TypeError, ValueError):
            raise ValidationError("schmidt: not a numeric vector") from None
    return Strategy(
        tuple(mats[k] for k in LABELS[:3]), tuple(mats[k] for k in LABELS[3:]), schmidt
    )


def load_strategy(path) -> Strategy:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None
    return strategy_from_dict(data)


def save_strategy(s: Strategy, path) -> None:
    Path(path).write_text(json.dumps(strategy_to_dict(s), indent=1) + "\n", encoding="utf-8")
