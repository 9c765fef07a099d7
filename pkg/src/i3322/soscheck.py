"""Gram-matrix (sum of squares) certificates for constrained polynomial bounds.

A certificate claims ``t - p(v) >= 0`` on a constraint set where each
``v^T M_i v`` vanishes. It is valid when ``Q = T - M0 - sum t_i M_i`` is
positive semidefinite, ``T = diag(t, 0, ..., 0)`` sitting on the monomial
"1", and ``v^T Q v`` reproduces ``t - p`` on feasible points.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .symmat import ValidationError, as_symmetric, psd_margin

CASE3_ID = "i3322-case3"
RESIDUAL_TOL = 1e-10
DEFAULT_PSD_TOL = 1e-10
_FACTOR = re.compile(r"^([a-z]\w*)(?:\^(\d+))?$")


@dataclass(frozen=True)
class Certificate:
    monomials: tuple[str, ...]
    bound: float
    objective: np.ndarray
    constraints: tuple[tuple[np.ndarray, float], ...]
    psd_tolerance: float = DEFAULT_PSD_TOL
    problem: str | None = None  # names the feasible-point sampler, if known

    def __post_init__(self):
        n = len(self.monomials)
        if n == 0 or len(set(self.monomials)) != n:
            raise ValidationError("monomials: need a non-empty list of distinct labels")
        for label in self.monomials:
            _parse_monomial(label)
        obj = as_symmetric(self.objective, name="objective")
        if obj.shape != (n, n):
            raise ValidationError(f"objective: expected {n}x{n}, got {obj.shape}")
        cons = []
        for k, (m, t) in enumerate(self.constraints):
            m = as_symmetric(m, name=f"constraints[{k}].matrix")
            if m.shape != (n, n):
                raise ValidationError(f"constraints[{k}].matrix: expected {n}x{n}, got {m.shape}")
            if not math.isfinite(float(t)):
                raise ValidationError(f"constraints[{k}].multiplier: not a finite real")
            cons.append((m, float(t)))
        if not math.isfinite(float(self.bound)):
            raise ValidationError("bound: not a finite real")
        if not (self.psd_tolerance >= 0):
            raise ValidationError("psd_tolerance: must be non-negative")
        object.__setattr__(self, "objective", obj)
        object.__setattr__(self, "constraints", tuple(cons))
        object.__setattr__(self, "bound", float(self.bound))
        object.__setattr__(self, "monomials", tuple(self.monomials))

    @property
    def dim(self) -> int:
        return len(self.monomials)

    def with_bound(self, t: float) -> "Certificate":
        return Certificate(self.monomials, t, self.objective, self.constraints,
                           self.psd_tolerance, self.problem)

    def permuted(self, order) -> "Certificate":
        """Same certificate with monomials listed in ``order`` (indices into the current list)."""
        order = list(order)
        ix = np.ix_(order, order)
        return Certificate(
            tuple(self.monomials[i] for i in order), self.bound, self.objective[ix],
            tuple((m[ix], t) for m, t in self.constraints), self.psd_tolerance, self.problem,
        )


def _parse_monomial(label: str) -> list[tuple[str, int]]:
    if label == "1":
        return []
    out = []
    for factor in label.split("*"):
        m = _FACTOR.match(factor.strip())
        if not m:
            raise ValidationError(f"monomials: cannot parse {label!r}")
        out.append((m.group(1), int(m.group(2) or 1)))
    return out


def monomial_vector(monomials, point: dict[str, float]) -> np.ndarray:
    vals = []
    for label in monomials:
        v = 1.0
        for var, power in _parse_monomial(label):
            if var not in point:
                raise ValidationError(f"monomial {label!r} uses unknown variable {var!r}")
            v *= point[var] ** power
        vals.append(v)
    return np.array(vals)


def build_gram(c: Certificate) -> np.ndarray:
    """``Q = T - M0 - sum_i t_i M_i``."""
    if "1" not in c.monomials:
        raise ValidationError("monomials: the constant monomial '1' is required to place the bound")
    t = np.zeros((c.dim, c.dim))
    k = c.monomials.index("1")
    t[k, k] = c.bound
    q = t - c.objective
    for m, mult in c.constraints:
        q = q - mult * m
    return 0.5 * (q + q.T)


# -- feasible points ---------------------------------------------------------

def _case3_points(n: int, rng: np.random.Generator):
    """a in [-1, 1] with x = sqrt(a^2 + 2a + 2), z = sqrt(1 - a^2); objective x + z/2 - 2."""
    for a in rng.uniform(-1.0, 1.0, n):
        x = math.sqrt(a * a + 2 * a + 2)
        z = math.sqrt(max(0.0, 1 - a * a))
        yield {"x": x, "z": z, "a": float(a)}, x + 0.5 * z - 2


SAMPLERS = {CASE3_ID: _case3_points}


@dataclass
class Verdict:
    gram: np.ndarray
    psd_margin: float  # smallest eigenvalue of Q
    bound_slack: float | None  # largest decrease of t keeping Q PSD
    identity_residual: float  # max over samples; nan when not checked
    min_gap: float  # min over samples of t - objective; nan when not checked
    samples: int
    psd_tolerance: float
    reason: str = ""
    accepted: bool = field(init=False)

    def __post_init__(self):
        psd_ok = self.psd_margin >= -self.psd_tolerance
        ident_ok = self.identity_residual <= RESIDUAL_TOL  # False for nan
        self.accepted = bool(psd_ok and ident_ok)
        if not self.reason:
            if not psd_ok:
                self.reason = "Gram matrix is not positive semidefinite"
            elif not ident_ok:
                self.reason = "polynomial identity fails on feasible points"

    def text(self) -> str:
        lines = [
            f"psd margin (min eigenvalue): {self.psd_margin:.12e}",
            "bound slack: " + ("n/a" if self.bound_slack is None else f"{self.bound_slack:.12e}"),
        ]
        if math.isnan(self.identity_residual):
            lines.append("identity residual: not checked")
        else:
            lines.append(f"identity residual: {self.identity_residual:.3e} over {self.samples} samples")
            lines.append(f"min sampled t - objective: {self.min_gap:.12f}")
        lines.append("verdict: " + ("accepted" if self.accepted else f"rejected ({self.reason})"))
        return "\n".join(lines)


def _bound_slack(c: Certificate, q: np.ndarray) -> float | None:
    # Q - delta e e^T stays PSD up to the Schur complement 1 / (Q^-1)_ee
    k = c.monomials.index("1")
    w = np.linalg.eigvalsh(q)
    if w[0] <= 0:
        return None
    return float(1.0 / np.linalg.inv(q)[k, k])


def verify(c: Certificate, samples: int = 10_000, seed: int = 0) -> Verdict:
    """PSD test of the Gram matrix plus a sampled identity check on feasible points."""
    if samples < 0:
        raise ValidationError("samples must be non-negative")
    q = build_gram(c)
    margin = psd_margin(q)
    sampler = SAMPLERS.get(c.problem or "")
    if sampler is None:
        return Verdict(q, margin, _bound_slack(c, q), math.nan, math.nan, 0, c.psd_tolerance,
                       reason="no feasible-point sampler for this certificate; identity not checked")
    resid, gap = 0.0, math.inf
    rng = np.random.default_rng(seed)
    for point, objective in sampler(samples, rng):
        v = monomial_vector(c.monomials, point)
        resid = max(resid, abs(float(v @ q @ v) - (c.bound - objective)))
        gap = min(gap, c.bound - objective)
    return Verdict(q, margin, _bound_slack(c, q), resid, gap, samples, c.psd_tolerance)


# -- built-in certificate and file format ------------------------------------

def builtin_case3() -> Certificate:
    """The level-0 certificate for f(a, 1) <= 0.368 in monomials (1, x, z, a)."""
    m0 = np.array([[-2, 0.5, 0.25, 0], [0.5, 0, 0, 0], [0.25, 0, 0, 0], [0, 0, 0, 0]])
    m1 = np.diag([1.0, 0.0, -1.0, -1.0])  # 1 - a^2 - z^2
    m2 = np.array([[2, 0, 0, 1], [0, -1, 0, 0], [0, 0, 0, 0], [1, 0, 0, 1]], dtype=float)
    return Certificate(("1", "x", "z", "a"), 0.368, m0, ((m1, 0.51), (m2, 0.24)), problem=CASE3_ID)


def certificate_to_dict(c: Certificate) -> dict:
    d = {
        "monomials": list(c.monomials),
        "bound": c.bound,
        "objective": c.objective.tolist(),
        "constraints": [{"matrix": m.tolist(), "multiplier": t} for m, t in c.constraints],
        "psd_tolerance": c.psd_tolerance,
    }
    if c.problem:
        d["id"] = c.problem
    return d


def certificate_from_dict(d) -> Certificate:
    if not isinstance(d, dict):
        raise ValidationError("certificate: top level must be a JSON object")
    for key in ("monomials", "bound", "objective", "constraints"):
        if key not in d:
            raise ValidationError(f"certificate: missing field '{key}'")
    if not isinstance(d["monomials"], list) or not all(isinstance(m, str) for m in d["monomials"]):
        raise ValidationError("monomials: expected a list of strings")
    if not isinstance(d["constraints"], list):
        raise ValidationError("constraints: expected a list")

    def matrix(value, name):
        try:
            arr = np.array(value, dtype=float)
        except (TypeError, ValueError):
            raise ValidationError(f"{name}: not a numeric matrix") from None
        if arr.ndim != 2:
            raise ValidationError(f"{name}: not a matrix")
        return arr

    cons = []
    for k, item in enumerate(d["constraints"]):
        if not isinstance(item, dict) or "matrix" not in item or "multiplier" not in item:
            raise ValidationError(f"constraints[{k}]: expected an object with 'matrix' and 'multiplier'")
        mult = item["multiplier"]
        if not isinstance(mult, (int, float)) or isinstance(mult, bool):
            raise ValidationError(f"constraints[{k}].multiplier: expected a number")
        cons.append((matrix(item["matrix"], f"constraints[{k}].matrix"), float(mult)))
    bound = d["bound"]
    if not isinstance(bound, (int, float)) or isinstance(bound, bool):
        raise ValidationError("bound: expected a number")
    tol = d.get("psd_tolerance", DEFAULT_PSD_TOL)
    if not isinstance(tol, (int, float)) or isinstance(tol, bool):
        raise ValidationError("psd_tolerance: expected a number")
    problem = d.get("id")
    if problem is not None and not isinstance(problem, str):
        raise ValidationError("id: expected a string")
    return Certificate(tuple(d["monomials"]), float(bound), matrix(d["objective"], "objective"),
                       tuple(cons), float(tol), problem)


def load_certificate(path) -> Certificate:
    if str(path) == "builtin":
        return builtin_case3()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None
    return certificate_from_dict(data)


def save_certificate(c: Certificate, path) -> None:
    Path(path).write_text(json.dumps(certificate_to_dict(c), indent=1) + "\n", encoding="utf-8")


# -- cross check -------------------------------------------------------------

@dataclass
class CrossCheck:
    grid: object  # bounds.BoundReport
    verdict: Verdict
    bound: float

    @property
    def gap(self) -> float:
        return self.bound - self.grid.grid_max

    @property
    def accepted(self) -> bool:
        return self.grid.holds and self.verdict.accepted and self.grid.grid_max <= self.bound

    def text(self) -> str:
        return "\n".join([
            self.grid.text(),
            self.verdict.text(),
            f"gap t - grid max: {self.gap:.12f}",
            "cross check: " + ("both accept" if self.accepted else "FAILED"),
        ])


def cross_check_case3(step: float = 1e-4, samples: int = 10_000, seed: int = 0) -> CrossCheck:
    """Grid certification of case 3 next to the built-in certificate."""
    from .bounds import claim_numerics

    cert = builtin_case3()
    return CrossCheck(claim_numerics(3, step), verify(cert, samples, seed), cert.bound)
