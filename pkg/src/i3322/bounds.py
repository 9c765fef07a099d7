"""Closed-form normal-form values and certified maxima of the bound function f.

Certified maxima are computed in angle coordinates ``x = cos(theta)``, which
removes the unbounded slope of ``sqrt(1 - x^2)`` at the ends of [-1, 1].
A best-first branch and bound splits boxes of angles; each box gets the
smaller of a Lipschitz bound and a second-order Taylor bound, both built from
interval bounds on the derivatives over the box, so the reported certified
maximum is a rigorous upper bound up to a fixed floating-point allowance.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .structure import NormalFormSpec
from .symmat import ValidationError

ROUNDING_ALLOWANCE = 1e-12
DOMAIN_TOL = 1e-12


# -- f and closed forms ------------------------------------------------------

def f_value(x: float, y: float) -> float:
    """``sqrt((x+y)^2 + 1) + sqrt(1-x^2)/2 + sqrt(1-y^2)/2 - 2`` on [-1, 1]^2."""
    for name, v in (("x", x), ("y", y)):
        if not (-1 - DOMAIN_TOL <= v <= 1 + DOMAIN_TOL):
            raise ValidationError(f"f_value: {name} = {v} lies outside [-1, 1]")
    x = min(1.0, max(-1.0, float(x)))
    y = min(1.0, max(-1.0, float(y)))
    # fsum is exactly rounded, so f(x, y) == f(y, x) bit for bit
    return math.fsum((math.sqrt((x + y) ** 2 + 1), 0.5 * math.sqrt(1 - x * x), 0.5 * math.sqrt(1 - y * y), -2.0))


def omega_closed(spec: NormalFormSpec) -> float:
    """Value of ``build_normal_form(spec)`` from the closed formulas."""
    if spec.exchanged:
        raise ValidationError(f"omega_closed: unsupported branch {spec.branch!r}")
    d, c = spec.dim, spec.coeffs
    if spec.branch == "cyclic":
        h = len(c)
        return math.fsum(f_value(c[k], c[(k + 1) % h]) for k in range(h)) / d
    if spec.branch == "chain-even":
        terms = [f_value(c[k], c[k + 1]) for k in range(len(c) - 1)]
        return math.fsum(terms) / d + (c[0] - c[-1]) / (2 * d)
    # chain-odd: (c_1, c_3, ..., c_d, c_{d+1})
    o, last = c[:-1], c[-1]
    cd = o[-1]
    terms = [f_value(o[k], o[k + 1]) for k in range(len(o) - 1)]
    terms += [cd * last, (o[0] - last) / 2, -1.0, 0.5 * math.sqrt(max(0.0, 1 - cd * cd))]
    return math.fsum(terms) / d


# -- certified maximisation --------------------------------------------------

@dataclass
class BoundReport:
    claim: str
    claimed_bound: float
    grid_max: float
    argmax: tuple[float, ...]
    slack: float
    certified_max: float
    step: float
    strict: bool = False
    cells: int = 0
    exhausted: bool = False  # refinement stopped by the cell budget

    @property
    def holds(self) -> bool:
        if self.strict:
            return self.certified_max < self.claimed_bound
        return self.certified_max <= self.claimed_bound

    @property
    def verdict(self) -> str:
        return "holds" if self.holds else "fails"

    def text(self) -> str:
        rel = "<" if self.strict else "<="
        arg = ", ".join(f"{v:.12f}" for v in self.argmax)
        lines = [
            f"claim: {self.claim} (max {rel} {self.claimed_bound:.12f})",
            f"grid max: {self.grid_max:.12f} at ({arg})",
            f"slack: {self.slack:.12f}",
            f"certified max: {self.certified_max:.12f}",
            f"step: {self.step:.12g}",
            f"cells: {self.cells}" + (" (budget exhausted)" if self.exhausted else ""),
            f"verdict: {self.verdict}",
        ]
        return "\n".join(lines)

    CSV_HEADER = "claim,grid_max,slack,certified_max,verdict,step,argmax"

    def csv_row(self) -> str:
        fields = [self.claim, f"{self.grid_max:.12f}", f"{self.slack:.12f}",
                  f"{self.certified_max:.12f}", self.verdict, f"{self.step:.12g}"]
        fields += [f"{v:.12f}" for v in self.argmax]
        return ",".join(fields)


@dataclass
class FSum:
    """``const + sum f(u, v)`` over pairs of angle variables or fixed values in [-1, 1]."""

    n: int
    pairs: list[tuple[object, object]]
    const: float = 0.0
    feasible: Callable[[Sequence[tuple[float, float]]], bool] | None = None
    # box-level test: given x-intervals, False means no feasible point inside
    feasible_point: Callable[[Sequence[float]], bool] | None = None

    def value(self, th: Sequence[float]) -> float:
        xs = [math.cos(t) for t in th]
        total = self.const
        for u, v in self.pairs:
            x = xs[u] if isinstance(u, int) else u
            y = xs[v] if isinstance(v, int) else v
            total += f_value(x, y)
        return total


def _g1(u: float) -> float:
    return abs(u) / math.sqrt(u * u + 1)


def _g2(u: float) -> float:
    return (u * u + 1) ** -1.5


def _trig_ranges(lo: float, hi: float) -> tuple[float, float, float, float]:
    """max sin, max |cos| and the cos interval over [lo, hi] within [0, pi]."""
    s = 1.0 if lo <= math.pi / 2 <= hi else max(math.sin(lo), math.sin(hi))
    c_hi, c_lo = math.cos(lo), math.cos(hi)  # cos decreasing on [0, pi]
    return s, max(abs(c_lo), abs(c_hi)), c_lo, c_hi


def _box_bound(obj: FSum, center: list[float], half: list[float], fc: float):
    """Upper bound on obj over the box ``center +- half``."""
    n = obj.n
    lo = [center[i] - half[i] for i in range(n)]
    hi = [center[i] + half[i] for i in range(n)]
    trig = [_trig_ranges(lo[i], hi[i]) for i in range(n)]
    grad = [0.0] * n  # derivative at the centre
    lip = [0.0] * n  # sup |d/dtheta| over the box
    hess = [[0.0] * n for _ in range(n)]  # sup |d2/dtheta dtheta| over the box
    xs_c = [math.cos(t) for t in center]
    sn_c = [math.sin(t) for t in center]

    def info(w):
        if isinstance(w, int):
            _, _, clo, chi = trig[w]
            return clo, chi, xs_c[w]
        return w, w, w

    for u, v in obj.pairs:
        ulo, uhi, uc = info(u)
        vlo, vhi, vc = info(v)
        slo, shi = ulo + vlo, uhi + vhi
        g1max = max(_g1(slo), _g1(shi))
        g2max = 1.0 if slo <= 0 <= shi else max(_g2(slo), _g2(shi))
        sc = uc + vc
        g1c = sc / math.sqrt(sc * sc + 1)
        for w in (u, v):
            if not isinstance(w, int):
                continue
            smax, cmax, _, _ = trig[w]
            grad[w] += -g1c * sn_c[w] + 0.5 * xs_c[w]
            lip[w] += g1max * smax + 0.5 * cmax
            hess[w][w] += g2max * smax * smax + g1max * cmax + 0.5 * smax
        if isinstance(u, int) and isinstance(v, int):
            cross = g2max * trig[u][0] * trig[v][0]
            if u == v:
                hess[u][u] += 2 * cross
            else:
                hess[u][v] += cross
                hess[v][u] += cross

    first = sum(lip[i] * half[i] for i in range(n))
    second = sum(abs(grad[i]) * half[i] for i in range(n)) + 0.5 * sum(
        hess[i][j] * half[i] * half[j] for i in range(n) for j in range(n)
    )
    return fc + min(first, second) + ROUNDING_ALLOWANCE


def certified_max(obj: FSum, claim: str, bound: float, step: float, strict: bool = False,
                  max_cells: int = 2_000_000, gap: float = 1e-7) -> BoundReport:
    """Best-first branch and bound of ``obj`` over angles in [0, pi]^n.

    Boxes are split along their largest dimension until the global upper
    bound is within ``gap`` of the best feasible centre value, or the box
    on top of the queue is already narrower than ``step`` in every angle, or
    ``max_cells`` boxes have been evaluated.
    """
    if not step > 0:
        raise ValidationError("step must be positive")
    n = obj.n
    best_val, best_pt = -math.inf, None
    cells = 0

    def consider(center, half):
        nonlocal best_val, best_pt, cells
        cells += 1
        if obj.feasible is not None:
            ivals = []
            for i in range(n):
                _, _, clo, chi = _trig_ranges(center[i] - half[i], center[i] + half[i])
                ivals.append((clo, chi))
            if not obj.feasible(ivals):
                return None
        fc = obj.value(center)
        xs = tuple(math.cos(t) for t in center)
        ok = obj.feasible_point is None or obj.feasible_point(xs)
        if ok and (fc > best_val or (fc == best_val and xs < best_pt)):
            best_val, best_pt = fc, xs
        return (-_box_bound(obj, center, half, fc), cells, center, half)

    heap = []
    if n == 0:
        v = obj.value([])
        return BoundReport(claim, bound, v, (), 0.0, v, step, strict, 1)
    root = consider([math.pi / 2] * n, [math.pi / 2] * n)
    if root is not None:
        heap.append(root)
    upper = -math.inf
    exhausted = False
    while heap:
        neg, _, center, half = heap[0]
        upper = -neg
        if upper - best_val <= gap:
            break
        if all(2 * h <= step for h in half):
            break
        if cells >= max_cells:
            exhausted = True
            break
        heapq.heappop(heap)
        k = max(range(n), key=lambda i: half[i])
        for sgn in (-1, 1):
            c2 = list(center)
            h2 = list(half)
            h2[k] = half[k] / 2
            c2[k] = center[k] + sgn * h2[k]
            child = consider(c2, h2)
            if child is not None:
                heapq.heappush(heap, child)
    if not heap:
        upper = best_val
    upper = max(upper, best_val)
    return BoundReport(claim, bound, best_val, best_pt or (), upper - best_val, upper, step,
                       strict, cells, exhausted)


# -- the numeric claims ------------------------------------------------------

def verify_f_cap(step: float = 1e-3, **kw) -> BoundReport:
    """f(x, y) <= 1/2 on the square."""
    return certified_max(FSum(2, [(0, 1)]), "f-cap", 0.5, step, **kw)


def _case1() -> FSum:
    # f(a, b) + f(b, c) with a + b >= 0 and b + c <= 0
    def box(iv):
        (alo, ahi), (blo, bhi), (clo, chi) = iv
        return ahi + bhi >= 0 and blo + clo <= 0

    def point(x):
        return x[0] + x[1] >= 0 and x[1] + x[2] <= 0

    return FSum(3, [(0, 1), (1, 2)], feasible=box, feasible_point=point)


def _case2() -> FSum:
    # f(1, b) + f(b, c) with b + c <= 0 (1 + b >= 0 always holds)
    def box(iv):
        (blo, _), (clo, _) = iv
        return blo + clo <= 0

    def point(x):
        return x[0] + x[1] <= 0

    return FSum(2, [(1.0, 0), (0, 1)], feasible=box, feasible_point=point)


CLAIMS = {
    "case1": (_case1, 0.244, False),
    "case2": (_case2, 0.103, False),
    "case3": (lambda: FSum(1, [(0, 1.0)]), 0.368, False),
    "d4": (lambda: FSum(1, [(1.0, 0), (0, -1.0)]), 0.0, True),
}


def claim_numerics(case: int, step: float = 1e-3, **kw) -> BoundReport:
    """Certified maximum for case 1, 2 or 3 of the numeric claim."""
    key = f"case{case}"
    if key not in CLAIMS:
        raise ValidationError(f"unknown case {case!r}; expected 1, 2 or 3")
    make, bound, strict = CLAIMS[key]
    return certified_max(make(), key, bound, step, strict, **kw)


def verify_d4(step: float = 1e-3, **kw) -> BoundReport:
    """f(1, c) + f(c, -1) < 0 for every c."""
    make, bound, strict = CLAIMS["d4"]
    return certified_max(make(), "d4", bound, step, strict, **kw)


def odd_auxiliary(c1: float, cd: float, clast: float) -> float:
    """The auxiliary odd-dimension expression compared against 1/4."""
    return cd * clast + (c1 - clast) / 2 - 1 + 0.5 * math.sqrt(max(0.0, 1 - cd * cd))


def odd_auxiliary_max() -> tuple[float, tuple[float, float, float]]:
    """Max over c1, c_{d+1} in {-1, 1} and c_d in [-1, 1].

    For fixed c_{d+1} = t the c_d-part ``t c + sqrt(1-c^2)/2`` peaks at
    ``c = 2t / sqrt(4t^2 + 1)`` with value ``sqrt(t^2 + 1/4)``.
    """
    best = None
    for c1 in (-1.0, 1.0):
        for t in (-1.0, 1.0):
            cd = 2 * t / math.sqrt(4 * t * t + 1)
            v = odd_auxiliary(c1, cd, t)
            if best is None or v > best[0]:
                best = (v, (c1, t, cd))
    return best


@dataclass
class AuditReport:
    d4: BoundReport
    chain: list[tuple[int, str, float, tuple[float, ...]]]
    auxiliary_max: float
    auxiliary_argmax: tuple[float, float, float]
    notes: list[str] = field(default_factory=list)

    @property
    def chain_ok(self) -> bool:
        return all(v <= 0.25 for _, _, v, _ in self.chain)

    @property
    def holds(self) -> bool:
        return self.d4.holds and self.chain_ok

    def text(self) -> str:
        out = ["d=4 sub-claim:", self.d4.text(), "chain maxima:"]
        for d, branch, v, coeffs in self.chain:
            flag = "ok" if v <= 0.25 else "EXCEEDS 1/4"
            out.append(f"  d={d} {branch}: {v:.12f} {flag} at {', '.join(f'{c:.6f}' for c in coeffs)}")
        c1, t, cd = self.auxiliary_argmax
        out.append(
            f"odd auxiliary expression max: {self.auxiliary_max:.12f} at "
            f"(c1, c_d+1, c_d) = ({c1:g}, {t:g}, {cd:.12f})"
        )
        out.extend(self.notes)
        return "\n".join(out)


def lemma_num2_audit(d_list: Sequence[int], step: float = 1e-3, opt_step: float = 0.1) -> AuditReport:
    """The d=4 sub-claim, chain maxima per dimension and the odd auxiliary expression."""
    from .ascent import optimize_omega

    chain = []
    for d in d_list:
        branch = "chain-even" if d % 2 == 0 else "chain-odd"
        spec, value = optimize_omega(branch, d, step=opt_step)
        chain.append((d, branch, value, spec.coeffs))
    aux, arg = odd_auxiliary_max()
    notes = []
    if aux > 0.25:
        notes.append(
            "note: the auxiliary expression exceeds 1/4; the odd-dimension maxima above are "
            "checked directly instead"
        )
    return AuditReport(verify_d4(step), chain, aux, arg, notes)
