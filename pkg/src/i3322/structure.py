"""Joint block structure of projector pairs and joint normal forms.

``cs_decompose`` puts a pair of projectors (P, Q) into the canonical CS form:
an orthonormal basis in which both are block diagonal, with 1-dim blocks
carrying 0/1 labels and 2-dim blocks of the shape

    P = 1/2 [[1-c, -s], [-s, 1+c]],   Q = 1/2 [[1-c, s], [s, 1+c]].

Normal forms are parametrised by the odd-indexed coefficients ``c_1, c_3, ...``
of the party whose blocks are shifted; the other party's 2-dim blocks take the
optimal even coefficient of their two neighbours, and the third projectors are
exact best responses.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.optimize import linear_sum_assignment

from .bell import Strategy, direct_sum, i3322_value
from .symmat import ValidationError, as_symmetric, is_projector, positive_eigenspace_projector

DEGENERATE_C = 1e-12
TIE_TOL = 1e-11
SQRT_HALF = math.sqrt(0.5)

BRANCHES = ("chain-even", "chain-odd", "chain-even-exchanged", "chain-odd-exchanged", "cyclic")


# -- CS decomposition --------------------------------------------------------

@dataclass(frozen=True)
class OneBlock:
    position: int
    label_p: int
    label_q: int


@dataclass(frozen=True)
class TwoBlock:
    positions: tuple[int, int]
    c: float
    sin: float | None = field(default=None, compare=False)  # kept when c rounds to 1

    @property
    def s(self) -> float:
        if self.sin is not None:
            return self.sin
        return math.sqrt(max(0.0, 1.0 - self.c * self.c))


Block = Union[OneBlock, TwoBlock]


@dataclass
class BlockDecomposition:
    basis: np.ndarray  # columns
    blocks: list[Block] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def model(self) -> tuple[np.ndarray, np.ndarray]:
        """Block-diagonal P and Q in the decomposition basis, from the declared blocks."""
        d = self.dim
        p = np.zeros((d, d))
        q = np.zeros((d, d))
        for b in self.blocks:
            if isinstance(b, OneBlock):
                p[b.position, b.position] = b.label_p
                q[b.position, b.position] = b.label_q
            else:
                i, j = b.positions
                c, s = b.c, b.s
                p[i, i] = q[i, i] = (1 - c) / 2
                p[j, j] = q[j, j] = (1 + c) / 2
                p[i, j] = p[j, i] = -s / 2
                q[i, j] = q[j, i] = s / 2
        return p, q

    def diagonal_sum(self) -> np.ndarray:
        """Diagonal of P + Q in the decomposition basis."""
        p, q = self.model()
        return np.diag(p + q).copy()

    def reconstruction_error(self, p, q) -> float:
        mp, mq = self.model()
        u = self.basis
        return max(
            float(np.linalg.norm(u.T @ np.asarray(p) @ u - mp)),
            float(np.linalg.norm(u.T @ np.asarray(q) @ u - mq)),
        )

    def trace_pq(self) -> float:
        """``Tr(PQ)`` predicted by the blocks: sum of c^2 plus the (1,1) blocks."""
        return sum(b.c**2 for b in self.blocks if isinstance(b, TwoBlock)) + sum(
            1 for b in self.blocks if isinstance(b, OneBlock) and b.label_p == b.label_q == 1
        )


def _first_positive(v: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(v) > 1e-12)
    return -v if nz.size and v[nz[0]] < 0 else v


def _canonical_basis(vectors: np.ndarray) -> np.ndarray:
    """Orthonormal basis of span(vectors), built from projected standard basis vectors.

    Depends only on the subspace, and keeps vectors localised when the subspace
    is spanned by vectors with disjoint supports.
    """
    if vectors.shape[1] == 0:
        return vectors
    q, _ = np.linalg.qr(vectors)
    m = vectors.shape[1]
    proj = q @ q.T
    out: list[np.ndarray] = []
    for k in range(proj.shape[0]):
        w = proj[:, k].copy()
        for _ in range(2):
            for u in out:
                w -= (u @ w) * u
        n = np.linalg.norm(w)
        if n > 1e-6:
            out.append(w / n)
            if len(out) == m:
                break
    return np.column_stack(out)


def _range_basis(p: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(p)
    return v[:, w > 0.5]


def _principal_pairs(up: np.ndarray, uq: np.ndarray):
    """Principal vector pairs of range(P) and range(Q) as ``(x, w, cos, sin)``.

    The partner in range(Q) is ``y = cos x + sin w`` with ``w`` a unit vector
    orthogonal to range(P). Cosines resolve large angles and sines small ones,
    so each regime comes from its own SVD.
    """
    m, n = up.shape[1], uq.shape[1]
    if m == 0 or n == 0:
        return []
    M = up.T @ uq
    wl, sig, zt = np.linalg.svd(M)
    k = min(m, n)
    out = []
    big = [j for j in range(k) if sig[j] > SQRT_HALF]
    if big:
        # small angles: principal directions from the SVD of the residual
        z_block = zt[big].T
        resid = uq @ z_block - up @ (M @ z_block)
        for _ in range(2):
            resid -= up @ (up.T @ resid)
        left, sines, vt = np.linalg.svd(resid, full_matrices=False)
        z_block = z_block @ vt.T
        for j in range(len(big)):
            px = up @ (M @ z_block[:, j])
            cos = float(np.linalg.norm(px))
            sin = float(sines[j])
            out.append((px / cos, left[:, j], cos, sin))
    for j in range(k):
        if sig[j] > SQRT_HALF:
            continue
        x = up @ wl[:, j]
        y = uq @ zt[j]
        cos = float(sig[j])
        r = y - cos * x
        sin = float(np.linalg.norm(r))
        out.append((x, r / sin, cos, sin))
    return out


def _leftover(basis: np.ndarray, used: list) -> list:
    """Orthonormal vectors of span(basis) orthogonal to ``used``."""
    if basis.shape[1] == len(used):
        return []
    coords = basis.T @ np.column_stack(used) if used else np.zeros((basis.shape[1], 0))
    w, v = np.linalg.eigh(np.eye(basis.shape[1]) - coords @ coords.T)
    return list((basis @ v[:, w > 0.5]).T)


def cs_decompose(p, q) -> BlockDecomposition:
    """CS decomposition of two projectors of equal dimension."""
    p = as_symmetric(p, name="P")
    q = as_symmetric(q, name="Q")
    if p.shape != q.shape:
        raise ValidationError(f"dimension mismatch: {p.shape} vs {q.shape}")
    for name, m in (("P", p), ("Q", q)):
        if not is_projector(m, 1e-8):
            raise ValidationError(f"{name}: not a projector")
    d = p.shape[0]
    up, uq = _range_basis(p), _range_basis(q)
    pairs = _principal_pairs(up, uq)
    coincide = [t for t in pairs if t[3] <= DEGENERATE_C]
    orthogonal = [t for t in pairs if t[2] <= DEGENERATE_C]
    generic = [t for t in pairs if t[2] > DEGENERATE_C and t[3] > DEGENERATE_C]
    generic.sort(key=lambda t: math.atan2(t[3], t[2]))
    both = [t[0] for t in coincide]
    only_p = [t[0] for t in orthogonal] + _leftover(up, [t[0] for t in pairs])
    only_q = [t[2] * t[0] + t[3] * t[1] for t in orthogonal]
    only_q += _leftover(uq, [t[2] * t[0] + t[3] * t[1] for t in pairs])

    # group equal principal angles; each group gets a canonical basis
    two_blocks: list[tuple[float, float, np.ndarray, np.ndarray]] = []
    i = 0
    while i < len(generic):
        th0 = math.atan2(generic[i][3], generic[i][2])
        j = i + 1
        while j < len(generic) and math.atan2(generic[j][3], generic[j][2]) - th0 <= TIE_TOL:
            j += 1
        group = generic[i:j]
        th = float(np.mean([math.atan2(t[3], t[2]) for t in group]))
        c, s = math.cos(th), math.sin(th)
        X = np.column_stack([t[0] for t in group])
        W = np.column_stack([t[1] for t in group])
        for x in _canonical_basis(X).T:
            # y = c x + s w; forming y - x directly loses accuracy for small angles
            w = W @ (X.T @ x)
            w /= np.linalg.norm(w)
            u = -(s * s / (1 + c)) * x + s * w
            v = (1 + c) * x + s * w
            u /= np.linalg.norm(u)
            v /= np.linalg.norm(v)
            if _first_positive(u) is not u:
                u, v = -u, -v
            two_blocks.append((c, s, u, v))
        i = j
    two_blocks.sort(key=lambda t: (-t[0], t[1]))

    def stack(vs):
        return np.column_stack(vs) if vs else np.zeros((d, 0))

    ones = []
    for vs in (both, only_p, only_q):
        ones.extend(_canonical_basis(stack(vs)).T)
    taken = stack([t[2] for t in two_blocks] + [t[3] for t in two_blocks] + ones)
    rest = np.eye(d) - taken @ taken.T
    ww, vv = np.linalg.eigh(0.5 * (rest + rest.T))
    ones.extend(_canonical_basis(vv[:, ww > 0.5]).T)

    labelled = []
    for v in ones:
        v = _first_positive(v)
        labelled.append((int(round(v @ p @ v)), int(round(v @ q @ v)), v))
    labelled.sort(key=lambda t: (-t[0], -t[1]))

    cols: list[np.ndarray] = []
    blocks: list[Block] = []
    for c, s, u, v in two_blocks:
        blocks.append(TwoBlock((len(cols), len(cols) + 1), c, s))
        cols.extend([u, v])
    for lp, lq, v in labelled:
        blocks.append(OneBlock(len(cols), lp, lq))
        cols.append(v)
    basis = np.column_stack(cols)
    # symmetric re-orthonormalisation: the smallest change that removes the
    # rounding left by nearly coincident principal vectors
    uu, _, vt = np.linalg.svd(basis)
    return BlockDecomposition(uu @ vt, blocks)


# -- basis alignment ---------------------------------------------------------

def align_bases(spec_a, spec_b, prefer=None) -> np.ndarray:
    """Permutation ``pi`` maximising ``sum_j a[pi[j]] * b[j]``.

    The optimum pairs both vectors in descending order. ``prefer`` is an
    optional (len(a), len(b)) affinity matrix used only to break ties between
    equally good pairings.
    """
    a = np.asarray(spec_a, dtype=float)
    b = np.asarray(spec_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValidationError("align_bases: vectors must have equal length")
    ia = sorted(range(a.size), key=lambda i: (-a[i], i))
    ib = sorted(range(b.size), key=lambda j: (-b[j], j))
    pi = np.empty(a.size, dtype=int)
    pi[ib] = ia
    if prefer is None or a.size < 2:
        return pi
    best = float(a[pi] @ b)
    scale = max(1.0, float(np.max(np.abs(a))) * float(np.max(np.abs(b))))
    eps = 1e-6 * scale / a.size
    cost = -np.outer(a, b) - eps * np.asarray(prefer, dtype=float)
    rows, cols = linear_sum_assignment(cost)
    alt = np.empty(a.size, dtype=int)
    alt[cols] = rows
    if float(a[alt] @ b) >= best - 1e-12 * scale * a.size:
        return alt
    return pi


# -- components --------------------------------------------------------------

@dataclass(frozen=True)
class Component:
    """A connected piece of the joint block graph, listed in traversal order.

    ``order`` walks the chain (or cycle) and ``sides[k]`` says which party's
    2-dim block joins ``order[k]`` and ``order[k+1]`` (for a cycle the final
    entry closes the loop). ``ends`` names the party whose 1-dim block sits at
    each end of a chain.
    """

    kind: str  # "chain" or "cycle"
    order: tuple[int, ...]
    sides: tuple[str, ...]
    ends: tuple[str, ...] = ()

    @property
    def dim(self) -> int:
        return len(self.order)


def _basis_map(dec_a: BlockDecomposition, dec_b: BlockDecomposition, tol: float = 1e-8) -> np.ndarray:
    if dec_a.basis.shape != dec_b.basis.shape:
        raise ValidationError("block_components: decompositions have different dimensions")
    overlap = np.abs(dec_a.basis.T @ dec_b.basis)
    target = np.argmax(overlap, axis=0)
    ok = np.all(np.abs(overlap[target, np.arange(overlap.shape[1])] - 1) <= tol)
    if not ok or len(set(target.tolist())) != target.size:
        raise ValidationError("block_components: the two decompositions do not share a basis")
    return target


def block_components(dec_a: BlockDecomposition, dec_b: BlockDecomposition) -> list[Component]:
    """Connected components of the graph whose edges are the 2-dim blocks of both sides.

    Vertices are positions in ``dec_a``'s basis; ``dec_b``'s basis must be a
    signed permutation of it.
    """
    to_a = _basis_map(dec_a, dec_b)
    d = dec_a.dim
    nbr = {"A": [None] * d, "B": [None] * d}
    for side, dec, m in (("A", dec_a, np.arange(d)), ("B", dec_b, to_a)):
        for blk in dec.blocks:
            if isinstance(blk, TwoBlock):
                i, j = (int(m[x]) for x in blk.positions)
                nbr[side][i] = j
                nbr[side][j] = i

    other = {"A": "B", "B": "A"}
    seen = [False] * d
    comps: list[Component] = []

    def walk(start, side):
        order, sides = [start], []
        seen[start] = True
        v = start
        while nbr[side][v] is not None:
            w = nbr[side][v]
            sides.append(side)
            if w == start:
                return order, sides, True
            order.append(w)
            seen[w] = True
            v = w
            side = other[side]
        return order, sides, False

    # chains first, started from an end
    for v in range(d):
        if seen[v] or (nbr["A"][v] is not None and nbr["B"][v] is not None):
            continue
        if nbr["A"][v] is None and nbr["B"][v] is None:
            seen[v] = True
            comps.append(Component("chain", (v,), (), ("A+B",)))
            continue
        side = "A" if nbr["A"][v] is not None else "B"
        order, sides, _ = walk(v, side)
        end_side = other[sides[-1]]
        comps.append(Component("chain", tuple(order), tuple(sides), (other[side], end_side)))
    for v in range(d):
        if not seen[v]:
            order, sides, closed = walk(v, "A")
            assert closed
            comps.append(Component("cycle", tuple(order), tuple(sides)))
    comps.sort(key=lambda c: min(c.order))
    return comps


# -- normal forms ------------------------------------------------------------

@dataclass(frozen=True)
class NormalFormSpec:
    branch: str
    dim: int
    coeffs: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if self.branch not in BRANCHES:
            raise ValidationError(f"unknown branch {self.branch!r}; expected one of {BRANCHES}")
        d, c = self.dim, self.coeffs
        if not isinstance(d, (int, np.integer)) or d < 1:
            raise ValidationError("dim must be a positive integer")
        if any(not (-1.0 <= x <= 1.0) for x in c):
            raise ValidationError(f"coefficients must lie in [-1, 1]: {c}")
        if self.branch == "cyclic":
            if d % 2:
                raise ValidationError("cyclic branch needs an even dimension")
            expect = d // 2
        elif self.branch.startswith("chain-even"):
            if d % 2:
                raise ValidationError(f"{self.branch} needs an even dimension")
            expect = d // 2 + 1
        else:
            if d % 2 == 0:
                raise ValidationError(f"{self.branch} needs an odd dimension")
            expect = (d + 3) // 2
        if len(c) != expect:
            raise ValidationError(f"{self.branch} with dim {d} takes {expect} coefficients, got {len(c)}")
        if self.branch != "cyclic":
            for name, x in (("first", c[0]), ("last", c[-1])):
                if x not in (-1.0, 1.0):
                    raise ValidationError(f"{name} boundary coefficient must be -1 or +1, got {x}")

    @property
    def exchanged(self) -> bool:
        return self.branch.endswith("exchanged")


def optimal_even_coefficient(x: float, y: float) -> float:
    """The c maximising ``c*tau + sqrt(1-c^2)/2`` for ``tau = (x+y)/2``."""
    tau = (x + y) / 2
    return 2 * tau / math.sqrt(4 * tau * tau + 1)


def _layout(spec: NormalFormSpec):
    """Blocks of the shifted party (``r``) and of the other party (``l``).

    Entries are ("one", pos, value) or ("two", (i, j), c).
    """
    d, c = spec.dim, spec.coeffs
    r: list = []
    l: list = []
    if spec.branch == "cyclic":
        o = c
        h = d // 2
        for k in range(1, h):
            r.append(("two", (2 * k - 1, 2 * k), o[k]))
        r.append(("two", (d - 1, 0), o[0]))
        for k in range(h):
            l.append(("two", (2 * k, 2 * k + 1), optimal_even_coefficient(o[k], o[(k + 1) % h])))
    elif spec.branch.startswith("chain-even"):
        o = c
        h = d // 2
        r.append(("one", 0, (1 - o[0]) / 2))
        for k in range(1, h):
            r.append(("two", (2 * k - 1, 2 * k), o[k]))
        r.append(("one", d - 1, (1 + o[h]) / 2))
        for k in range(h):
            l.append(("two", (2 * k, 2 * k + 1), optimal_even_coefficient(o[k], o[k + 1])))
    else:
        o, last = c[:-1], c[-1]
        h = (d - 1) // 2
        r.append(("one", 0, (1 - o[0]) / 2))
        for k in range(1, h + 1):
            r.append(("two", (2 * k - 1, 2 * k), o[k]))
        for k in range(h):
            l.append(("two", (2 * k, 2 * k + 1), optimal_even_coefficient(o[k], o[k + 1])))
        l.append(("one", d - 1, (1 - last) / 2))
    return r, l


def _place(d: int, blocks, shifted: bool) -> tuple[np.ndarray, np.ndarray]:
    m1 = np.zeros((d, d))
    m2 = np.zeros((d, d))
    for kind, pos, val in blocks:
        if kind == "one":
            m1[pos, pos] = m2[pos, pos] = val
            continue
        i, j = pos
        cc = -val if shifted else val  # shifted party uses P(-c) in (i, j) order
        s = math.sqrt(max(0.0, 1 - cc * cc))
        m1[i, i] = m2[i, i] = (1 - cc) / 2
        m1[j, j] = m2[j, j] = (1 + cc) / 2
        m1[i, j] = m1[j, i] = -s / 2
        m2[i, j] = m2[j, i] = s / 2
    return m1, m2


def build_normal_form(spec: NormalFormSpec) -> Strategy:
    """Strategy in joint normal form, with uniform Schmidt weights."""
    r, l = _layout(spec)
    r1, r2 = _place(spec.dim, r, shifted=True)
    l1, l2 = _place(spec.dim, l, shifted=False)
    if spec.exchanged:
        a1, a2, b1, b2 = r1, r2, l1, l2
    else:
        a1, a2, b1, b2 = l1, l2, r1, r2
    a3 = positive_eigenspace_projector(b2 - b1)
    b3 = positive_eigenspace_projector(a2 - a1)
    return Strategy((a1, a2, a3), (b1, b2, b3))


# -- normalisation -----------------------------------------------------------

@dataclass
class ComponentReport:
    component: Component
    spec: NormalFormSpec | None
    problem: str | None = None


@dataclass
class NormalizeReport:
    old_value: float
    aligned_value: float
    normal_form_value: float | None
    components: list[ComponentReport]
    aligned: Strategy

    @property
    def new_value(self) -> float:
        return self.normal_form_value if self.normal_form_value is not None else self.aligned_value

    @property
    def delta(self) -> float:
        return self.new_value - self.old_value

    @property
    def matched(self) -> bool:
        return all(c.spec is not None for c in self.components)


def _snap_boundary(x: float) -> float | None:
    for b in (-1.0, 1.0):
        if abs(x - b) <= 1e-8:
            return b
    return None


def _clip(x: float) -> float:
    return min(1.0, max(-1.0, float(x)))


def _extract(comp: Component, diag: dict[str, np.ndarray], one_ok: dict[str, np.ndarray]):
    """Read a NormalFormSpec off one component; returns (spec, problem)."""
    o, d = comp.order, comp.dim
    if comp.kind == "cycle":
        # walk starts along an A block, so B blocks sit at (order[2k-1], order[2k])
        coeffs = [_clip(diag["B"][o[(2 * k - 1) % d]] - 1) for k in range(d // 2)]
        return NormalFormSpec("cyclic", d, coeffs), None

    if comp.ends == ("A+B",):
        v = o[0]
        if not (one_ok["A"][v] and one_ok["B"][v]):
            return None, "1-dim block with unequal labels"
        c1 = _snap_boundary(1 - diag["B"][v])
        c2 = _snap_boundary(1 - diag["A"][v])
        if c1 is None or c2 is None:
            return None, "boundary coefficient is not +-1"
        return NormalFormSpec("chain-odd", 1, (c1, c2)), None

    start, end = comp.ends
    if start != end:
        branch = "chain-odd"
        if start == "A":  # walk from the end carrying Bob's 1-dim block
            o = o[::-1]
        shifted, other, last_side = "B", "A", "A"
    else:
        branch = "chain-even" if start == "B" else "chain-even-exchanged"
        shifted, other, last_side = start, ("A" if start == "B" else "B"), start
    for v, side in ((o[0], shifted), (o[-1], last_side)):
        if not one_ok[side][v]:
            return None, f"1-dim block of {side} at position {v} has unequal labels"
    first = _snap_boundary(1 - diag[shifted][o[0]])
    # shifted party's 2-dim blocks sit at (o[2k-1], o[2k]); c is read at the first slot
    interior = [_clip(diag[shifted][o[2 * k - 1]] - 1) for k in range(1, (d + 1) // 2)]
    if branch == "chain-odd":
        last = _snap_boundary(1 - diag[other][o[-1]])
    else:
        last = _snap_boundary(diag[shifted][o[-1]] - 1)
    if first is None or last is None:
        return None, "boundary coefficient is not +-1"
    return NormalFormSpec(branch, d, (first, *interior, last)), None


def normalize(s: Strategy) -> NormalizeReport:
    """Align Bob's CS basis with Alice's, re-optimise A3/B3, and read off normal forms."""
    if not s.is_uniform:
        raise ValidationError("normalize expects uniform Schmidt weights")
    old = i3322_value(s).value
    dec_a = cs_decompose(s.A[0], s.A[1])
    dec_b = cs_decompose(s.B[0], s.B[1])
    da, db = dec_a.diagonal_sum(), dec_b.diagonal_sum()
    pi = align_bases(da, db, prefer=np.abs(dec_a.basis.T @ dec_b.basis))

    ua, ub = dec_a.basis, dec_b.basis
    moved = ua[:, pi]  # Bob's j-th basis vector is placed on Alice's pi[j]-th

    def transport(m):
        t = moved @ (ub.T @ m @ ub) @ moved.T
        return 0.5 * (t + t.T)

    b1, b2 = transport(s.B[0]), transport(s.B[1])
    a1, a2 = s.A[0], s.A[1]
    aligned = Strategy(
        (a1, a2, positive_eigenspace_projector(b2 - b1)),
        (b1, b2, positive_eigenspace_projector(a2 - a1)),
    )
    aligned_value = i3322_value(aligned).value

    dec_b_moved = BlockDecomposition(moved, dec_b.blocks)
    comps = block_components(dec_a, dec_b_moved)

    d = s.dim
    diag = {"A": da, "B": np.zeros(d)}
    diag["B"][pi] = db
    one_ok = {"A": np.ones(d, bool), "B": np.ones(d, bool)}
    for side, dec, m in (("A", dec_a, np.arange(d)), ("B", dec_b, pi)):
        for blk in dec.blocks:
            if isinstance(blk, OneBlock):
                one_ok[side][m[blk.position]] = blk.label_p == blk.label_q

    reports = []
    for comp in comps:
        spec, problem = _extract(comp, diag, one_ok)
        reports.append(ComponentReport(comp, spec, problem))

    nf_value = None
    if all(r.spec is not None for r in reports):
        parts = [build_normal_form(r.spec) for r in reports]
        nf_value = i3322_value(direct_sum(*parts)).value
    return NormalizeReport(old, aligned_value, nf_value, reports, aligned)
