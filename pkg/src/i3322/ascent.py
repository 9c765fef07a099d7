"""Best responses, seesaw ascent and coefficient search over normal forms.

The I3322 value is linear in each operator separately, so holding five of
them fixed the best choice for the sixth is the projector onto the positive
eigenspace of its effective operator. Cycling these updates is the seesaw.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .bell import LABELS, TERMS, Strategy, direct_sum, entanglement_entropy, i3322_value
from .structure import NormalFormSpec, build_normal_form
from .symmat import ValidationError, positive_eigenspace_projector

SWEEP_ORDER = LABELS
DEFAULT_TOL = 1e-10
DEFAULT_MAX_SWEEPS = 10_000


# -- best responses ----------------------------------------------------------

def _effective(ops: list[np.ndarray], k: int) -> np.ndarray:
    """Effective operator for the k-th label (before Schmidt scaling)."""
    a1, a2, a3, b1, b2, b3 = ops
    eye = np.eye(a1.shape[0])
    return [
        lambda: b1 + b2 - b3,
        lambda: b1 + b2 + b3 - eye,
        lambda: b2 - b1,
        lambda: a1 + a2 - a3 - eye,
        lambda: a1 + a2 + a3 - 2 * eye,
        lambda: a2 - a1,
    ][k]()


def _respond(ops: list[np.ndarray], k: int, lam: np.ndarray | None) -> np.ndarray:
    x = _effective(ops, k)
    if lam is not None:
        x = lam[:, None] * x * lam[None, :]
    return positive_eigenspace_projector(0.5 * (x + x.T))


def best_response(s: Strategy, which: str) -> np.ndarray:
    """Projector maximising the value when it replaces operator ``which``.

    With non-uniform weights the effective operator ``X`` becomes
    ``Lambda X Lambda``; uniform weights only rescale it, so ``X`` is used as is.
    """
    if which not in LABELS:
        raise ValidationError(f"unknown operator label {which!r}; expected one of {LABELS}")
    ops = list(s.A + s.B)
    return _respond(ops, LABELS.index(which), None if s.is_uniform else np.asarray(s.schmidt))


def _value(ops: list[np.ndarray], lam: np.ndarray) -> float:
    eye = None
    vals = []
    for coef, a, b in TERMS:
        if a is None or b is None:
            if eye is None:
                eye = np.eye(lam.size)
        left = ops[a] if a is not None else eye
        right = ops[3 + b] if b is not None else eye
        vals.append(coef * float(lam @ (left * right) @ lam))
    return math.fsum(vals)


# -- seesaw ------------------------------------------------------------------

@dataclass
class SeesawTrace:
    """Per-update record of a seesaw run: ``(step, label, value)`` triples."""

    steps: list[tuple[int, str, float]] = field(default_factory=list)
    initial_value: float = 0.0
    final_value: float = 0.0
    converged: bool = False
    sweeps: int = 0
    seed: int | None = None

    @property
    def values(self) -> list[float]:
        return [v for _, _, v in self.steps]

    def min_increment(self) -> float:
        """Smallest change of value over a single update (inf for an empty trace)."""
        prev = self.initial_value
        worst = math.inf
        for v in self.values:
            worst = min(worst, v - prev)
            prev = v
        return worst


def _sweep_loop(ops, lam, trace, max_sweeps, tol, weighted):
    value = _value(ops, lam)
    step = len(trace.steps)
    for _ in range(max_sweeps):
        before = value
        for k, label in enumerate(SWEEP_ORDER):
            ops[k] = _respond(ops, k, lam if weighted else None)
            value = _value(ops, lam)
            trace.steps.append((step, label, value))
            step += 1
        trace.sweeps += 1
        if value - before < tol:
            return value, True
    return value, False


def seesaw(initial: Strategy, max_sweeps: int = DEFAULT_MAX_SWEEPS, tol: float = DEFAULT_TOL,
           seed: int | None = None) -> tuple[Strategy, SeesawTrace]:
    """Cycle best responses over A1..B3 until a sweep gains less than ``tol``."""
    ops = [np.array(m) for m in initial.A + initial.B]
    lam = np.array(initial.schmidt)
    trace = SeesawTrace(seed=seed)
    trace.initial_value = _value(ops, lam)
    value, converged = _sweep_loop(ops, lam, trace, max_sweeps, tol, not initial.is_uniform)
    trace.final_value = value
    trace.converged = converged
    return Strategy(tuple(ops[:3]), tuple(ops[3:]), initial.schmidt), trace


def _random_projector(d: int, rng: np.random.Generator) -> np.ndarray:
    rank = int(rng.integers(0, 2)) if d == 1 else int(rng.integers(1, d))
    if rank == 0:
        return np.zeros((d, d))
    q, _ = np.linalg.qr(rng.standard_normal((d, rank)))
    p = q @ q.T
    return 0.5 * (p + p.T)


def random_strategy(dim: int, rng: np.random.Generator) -> Strategy:
    """Six random projectors (ranks uniform in 1..d-1) with uniform weights."""
    if dim < 1:
        raise ValidationError("dim must be at least 1")
    mats = [_random_projector(dim, rng) for _ in range(6)]
    return Strategy(tuple(mats[:3]), tuple(mats[3:]))


def restart_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


@dataclass
class RestartSummary:
    best: Strategy
    best_value: float
    best_index: int
    values: list[float]
    traces: list[SeesawTrace]

    @property
    def converged(self) -> int:
        return sum(t.converged for t in self.traces)


def run_restarts(dim: int, restarts: int, seed: int = 0, tol: float = DEFAULT_TOL,
                 max_sweeps: int = DEFAULT_MAX_SWEEPS) -> RestartSummary:
    """Uniform-weight seesaw from ``restarts`` seeded random strategies."""
    if restarts < 1:
        raise ValidationError("restarts must be at least 1")
    results = []
    for i in range(restarts):
        final, trace = seesaw(random_strategy(dim, restart_rng(seed, i)), max_sweeps, tol, seed=i)
        results.append((final, trace))
    values = [t.final_value for _, t in results]
    # max by value, ties to the smallest restart index
    best_index = max(range(restarts), key=lambda i: (values[i], -i))
    return RestartSummary(results[best_index][0], values[best_index], best_index, values,
                          [t for _, t in results])


# -- free Schmidt weights ----------------------------------------------------

def weight_form(ops: list[np.ndarray]) -> np.ndarray:
    """Matrix K with value = lambda^T K lambda for fixed operators."""
    d = ops[0].shape[0]
    eye = np.eye(d)
    k = np.zeros((d, d))
    for coef, a, b in TERMS:
        left = ops[a] if a is not None else eye
        right = ops[3 + b] if b is not None else eye
        k += coef * (left * right)
    return 0.5 * (k + k.T)


def _weight_step(ops: list[np.ndarray], lam: np.ndarray) -> np.ndarray:
    """Top eigenvector of the weight form, made non-negative.

    A negative entry is absorbed by flipping the matching basis vector on
    Alice's side (``A -> D A D``), which leaves every term unchanged, so the
    new value is exactly the top eigenvalue and never below the old one.
    """
    k = weight_form(ops)
    _, v = np.linalg.eigh(k)
    new = v[:, -1]
    if new @ k @ new <= lam @ k @ lam:
        return lam
    sign = np.where(new < 0, -1.0, 1.0)
    for j in range(3):
        ops[j] = sign[:, None] * ops[j] * sign[None, :]
    return np.abs(new)


@dataclass
class SchmidtResult:
    strategy: Strategy
    value: float
    entropy: float
    values: list[float]
    best_index: int


def epr_blocks(dim: int) -> Strategy:
    """Direct sum of one-EPR-pair strategies (plus a zero block for odd ``dim``)."""
    epr = build_normal_form(NormalFormSpec("cyclic", 2, (math.sqrt(3) / 2,)))
    z = np.zeros((1, 1))
    parts = [epr] * (dim // 2) + ([Strategy((z, z, z), (z, z, z))] if dim % 2 else [])
    s = parts[0]
    for p in parts[1:]:
        s = direct_sum(s, p)
    return s


def schmidt_seesaw(dim: int, restarts: int, seed: int = 0, tol: float = DEFAULT_TOL,
                   max_sweeps: int = DEFAULT_MAX_SWEEPS, warm_start: bool = True) -> SchmidtResult:
    """Seesaw over projectors and Schmidt weights together.

    Each restart first converges with uniform weights, then alternates a
    weight update with a sweep of weighted best responses. With
    ``warm_start`` restart 0 begins from :func:`epr_blocks`, a point worth
    1/4 under uniform weights, so the result never falls below it; the
    remaining restarts are seeded random starts.
    """
    if dim < 1 or restarts < 1:
        raise ValidationError("dim and restarts must be at least 1")
    finals = []
    for i in range(restarts):
        if warm_start and i == 0:
            start = epr_blocks(dim)
        else:
            start = random_strategy(dim, restart_rng(seed, i))
        ops = [np.array(m) for m in start.A + start.B]
        lam = np.array(start.schmidt)
        trace = SeesawTrace(seed=i)
        value, _ = _sweep_loop(ops, lam, trace, max_sweeps, tol, weighted=False)
        for _ in range(max_sweeps):
            before = value
            lam = _weight_step(ops, lam)
            lam = lam / np.linalg.norm(lam)
            value, _ = _sweep_loop(ops, lam, trace, 1, tol, weighted=True)
            if value - before < tol:
                break
        finals.append((value, ops, lam))
    values = [f[0] for f in finals]
    best_index = max(range(restarts), key=lambda i: (values[i], -i))
    _, ops, lam = finals[best_index]
    best = Strategy(tuple(ops[:3]), tuple(ops[3:]), lam)
    return SchmidtResult(best, i3322_value(best).value, entanglement_entropy(lam), values, best_index)


# -- coefficient search ------------------------------------------------------

def free_layout(branch: str, dim: int) -> tuple[int, list[tuple[float, float]]]:
    """Number of free interior coefficients and the boundary pairs to enumerate."""
    probe = {"cyclic": dim // 2, "chain-even": dim // 2 + 1, "chain-even-exchanged": dim // 2 + 1}
    n = probe.get(branch, (dim + 3) // 2)
    NormalFormSpec(branch, dim, [0.0] * n if branch == "cyclic" else [1.0] + [0.0] * (n - 2) + [1.0])
    if branch == "cyclic":
        return n, [()]
    return n - 2, list(itertools.product((-1.0, 1.0), repeat=2))


def _assemble(branch, dim, bounds, free):
    if branch == "cyclic":
        return NormalFormSpec(branch, dim, tuple(free))
    return NormalFormSpec(branch, dim, (bounds[0], *free, bounds[1]))


def normal_form_value(spec: NormalFormSpec) -> float:
    return i3322_value(build_normal_form(spec)).value


def _objective(branch: str):
    if branch.endswith("exchanged"):
        return normal_form_value
    from .bounds import omega_closed  # closed forms agree with the direct value to 1e-9

    return omega_closed


def optimize_omega(branch: str, dim: int, step: float = 0.1, iterations: int = 60,
                   seed: int = 0, max_points: int = 20_000, starts: int = 4):
    """Best normal-form spec for a branch and dimension.

    A coarse grid of spacing ``step`` over the free coefficients (boundary
    coefficients enumerated over +-1; grids larger than ``max_points`` are
    sampled with a seeded generator) seeds a coordinate-wise bounded Brent
    refinement from the ``starts`` best grid points. The returned value is
    the direct evaluation of the built strategy.
    """
    if step <= 0:
        raise ValidationError("step must be positive")
    n_free, boundary = free_layout(branch, dim)
    score = _objective(branch)
    axis = np.linspace(-1.0, 1.0, int(round(2 / step)) + 1)
    rng = np.random.default_rng(seed)

    candidates = []
    for bnd in boundary:
        total = axis.size ** n_free
        if total <= max_points:
            points = itertools.product(axis, repeat=n_free)
        else:
            points = (tuple(axis[rng.integers(0, axis.size, n_free)]) for _ in range(max_points))
        for free in points:
            spec = _assemble(branch, dim, bnd, free)
            candidates.append((score(spec), spec.coeffs, bnd, list(free)))
    candidates.sort(key=lambda t: (-t[0], t[1]))

    best = None
    for val, _, bnd, free in candidates[:starts]:
        for _ in range(iterations if n_free else 0):
            old = val
            for i in range(n_free):
                def neg(x, i=i):
                    trial = list(free)
                    trial[i] = x
                    return -score(_assemble(branch, dim, bnd, trial))

                lo, hi = max(-1.0, free[i] - step), min(1.0, free[i] + step)
                res = minimize_scalar(neg, bounds=(lo, hi), method="bounded",
                                      options={"xatol": 1e-12})
                if -res.fun > val:
                    free[i], val = float(res.x), float(-res.fun)
            if val - old < 1e-15:
                break
        spec = _assemble(branch, dim, bnd, free)
        key = (-val, spec.coeffs)
        if best is None or key < best[0]:
            best = (key, spec)
    spec = best[1]
    return spec, normal_form_value(spec)
