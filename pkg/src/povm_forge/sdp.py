"""Small dense semidefinite-program solver.

Standard form (maximization)::

    maximize    sum_b Re Tr(C_b X_b)
    subject to  sum_b Re Tr(A_kb X_b) = b_k,   k = 1..m
                X_b >= 0   (real symmetric or complex Hermitian blocks)

with dual ``minimize b.y  s.t.  sum_k y_k A_k - C = Z >= 0``.  The solver is
an infeasible primal-dual path-following method using the HKM search
direction and Mehrotra's predictor-corrector.  Complex blocks are handled
natively; ``Re Tr(A X)`` is the real inner product on Hermitian matrices.

Problems are assembled with :class:`SdpProblem`; its helpers expand
operator-valued constraints into scalar ones using the Hermitian basis

    diagonal   (r, r):          Re T[r, r]
    off-diagonal r < s:         Re T[r, s],  Im T[r, s]

(and all ``(r, s)`` for non-Hermitian targets), enumerated row-major.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .linalg import dagger

log = logging.getLogger(__name__)


def _herm(m: np.ndarray) -> np.ndarray:
    return (m + dagger(m)) / 2


@dataclass
class Block:
    dim: int
    complex: bool = True


@dataclass
class SdpProblem:
    """Builder for block-diagonal SDPs in the standard form above."""

    blocks: list[Block] = field(default_factory=list)
    objective: dict[int, np.ndarray] = field(default_factory=dict)
    constraints: list[tuple[dict[int, np.ndarray], float]] = field(default_factory=list)
    sense: str = "max"
    offset: float = 0.0

    def add_block(self, dim: int, complex: bool = True) -> int:
        self.blocks.append(Block(dim, complex))
        return len(self.blocks) - 1

    def _coerce(self, block: int, mat) -> np.ndarray:
        blk = self.blocks[block]
        mat = np.asarray(mat, dtype=complex)
        if mat.shape != (blk.dim, blk.dim):
            raise ValueError(f"coefficient shape {mat.shape} does not match block {block} "
                             f"of dim {blk.dim}")
        mat = _herm(mat)
        return mat if blk.complex else mat.real.copy()

    def set_objective(self, terms: dict[int, np.ndarray], sense: str = "max", offset: float = 0.0):
        if sense not in ("max", "min"):
            raise ValueError("sense must be 'max' or 'min'")
        self.sense = sense
        self.offset = offset
        self.objective = {b: self._coerce(b, c) for b, c in terms.items()}

    def add_eq(self, coeffs: dict[int, np.ndarray], rhs: float) -> int:
        merged = {}
        for b, c in coeffs.items():
            c = self._coerce(b, c)
            if np.any(c):
                merged[b] = c
        if not merged:
            raise ValueError("constraint has no nonzero coefficients")
        self.constraints.append((merged, float(rhs)))
        return len(self.constraints) - 1

    def _add_expanded(self, coeffs, rhs: float):
        # entries that vanish identically (e.g. imaginary parts on real blocks) carry no constraint
        live = {b: c for b, c in coeffs.items() if np.any(self._coerce(b, c))}
        if not live:
            if abs(rhs) > 1e-12:
                raise ValueError(f"constraint 0 = {rhs} cannot be satisfied")
            return None
        return self.add_eq(live, rhs)

    def add_ineq(self, coeffs: dict[int, np.ndarray], rhs: float, sense: str = ">=") -> int:
        """Scalar inequality, turned into an equality with a 1x1 slack block."""
        s = self.add_block(1, complex=False)
        sign = -1.0 if sense == ">=" else 1.0
        if sense not in (">=", "<="):
            raise ValueError("sense must be '>=' or '<='")
        coeffs = dict(coeffs)
        coeffs[s] = np.array([[sign]])
        return self.add_eq(coeffs, rhs)

    @staticmethod
    def _entry_functional(left: np.ndarray, right: np.ndarray, r: int, s: int) -> np.ndarray:
        # Tr(X M) == (L X R^dag)[r, s]
        return np.outer(right[s].conj(), left[r])

    def _terms_functional(self, terms, r, s, part):
        coeffs = {}
        for block, left, right in terms:
            m = self._entry_functional(left, right, r, s)
            m = m if part == "re" else -1j * m
            coeffs[block] = coeffs.get(block, 0) + m
        return coeffs

    @staticmethod
    def _normalize_terms(terms):
        out = []
        for t in terms:
            if len(t) == 2:
                block, left = t
                right = left
            else:
                block, left, right = t
            out.append((block, np.atleast_2d(np.asarray(left, dtype=complex)),
                        np.atleast_2d(np.asarray(right, dtype=complex))))
        return out

    def add_matrix_eq(self, terms, rhs, hermitian: bool = True) -> list[int]:
        """Operator equality ``sum_t L_t X_{b_t} R_t^dag = rhs``.

        ``terms`` holds ``(block, L)`` (meaning ``R = L``) or ``(block, L, R)``.
        Hermitian targets contribute ``d^2`` scalar constraints, general ones ``2 d^2``.
        """
        terms = self._normalize_terms(terms)
        rhs = np.asarray(rhs, dtype=complex)
        d = rhs.shape[0]
        idx = []
        for r in range(d):
            for s in range(d):
                if hermitian and s < r:
                    continue
                parts = ["re"] if (hermitian and r == s) else ["re", "im"]
                for part in parts:
                    val = rhs[r, s].real if part == "re" else rhs[r, s].imag
                    idx.append(self._add_expanded(self._terms_functional(terms, r, s, part), val))
        return [k for k in idx if k is not None]

    def add_identity_proportional(self, terms, dim: int, hermitian: bool = True) -> list[int]:
        """Constraint ``sum_t L_t X_{b_t} R_t^dag = (Tr(.)/dim) * identity``."""
        terms = self._normalize_terms(terms)
        idx = []
        for r in range(dim):
            for s in range(dim):
                if r == s:
                    if r == 0:
                        continue
                    for part in (["re"] if hermitian else ["re", "im"]):
                        a = self._terms_functional(terms, r, r, part)
                        b0 = self._terms_functional(terms, 0, 0, part)
                        idx.append(self._add_expanded({k: a[k] - b0[k] for k in a}, 0.0))
                elif not hermitian or r < s:
                    for part in ("re", "im"):
                        idx.append(self._add_expanded(self._terms_functional(terms, r, s, part), 0.0))
        return [k for k in idx if k is not None]

    @property
    def n_constraints(self) -> int:
        return len(self.constraints)


@dataclass
class SdpSolution:
    status: str
    primal: list[np.ndarray]
    dual_slack: list[np.ndarray]
    y: np.ndarray
    primal_value: float
    dual_value: float
    primal_residual: float
    dual_residual: float
    iterations: int
    history: list[dict] = field(default_factory=list)

    @property
    def gap(self) -> float:
        return abs(self.dual_value - self.primal_value)

    @property
    def value(self) -> float:
        return self.primal_value

    @property
    def ok(self) -> bool:
        """Optimal, or stalled within a relative accuracy of 1e-5 (e.g. no strict interior)."""
        return self.status in ("optimal", "near_optimal")


class _Group:
    """Blocks sharing (dim, complex) stored as stacked arrays."""

    def __init__(self, dim, is_complex, members):
        self.dim = dim
        self.dtype = complex if is_complex else float
        self.members = members  # global block indices
        self.k = len(members)
        self.c = np.zeros((self.k, dim, dim), dtype=self.dtype)
        self.pos = np.zeros(0, dtype=int)
        self.cidx = np.zeros(0, dtype=int)
        self.a = np.zeros((0, dim, dim), dtype=self.dtype)

    def finalize(self, pos, cidx, mats):
        order = np.lexsort((cidx, pos))
        self.pos = np.asarray(pos, dtype=int)[order]
        self.cidx = np.asarray(cidx, dtype=int)[order]
        self.a = np.asarray(mats, dtype=self.dtype).reshape(-1, self.dim, self.dim)[order]
        self.a_t = np.ascontiguousarray(np.swapaxes(self.a, 1, 2)).reshape(len(self.pos), -1)
        bounds = np.searchsorted(self.pos, np.arange(self.k + 1))
        self.slices = [(bounds[p], bounds[p + 1]) for p in range(self.k)]
        self.nonempty = np.array([s < e for s, e in self.slices], dtype=bool)
        self.starts = bounds[:-1][self.nonempty]


def _inner(x: np.ndarray, z: np.ndarray) -> float:
    return float(np.real(np.einsum("kij,kji->", x, z)))


class _Compiled:
    def __init__(self, p: SdpProblem):
        self.m = p.n_constraints
        self.b = np.array([rhs for _, rhs in p.constraints], dtype=float)
        keyed: dict[tuple[int, bool], list[int]] = {}
        for i, blk in enumerate(p.blocks):
            keyed.setdefault((blk.dim, blk.complex), []).append(i)
        self.groups = [_Group(d, c, mem) for (d, c), mem in keyed.items()]
        where = {}
        for g, grp in enumerate(self.groups):
            for pos, bi in enumerate(grp.members):
                where[bi] = (g, pos)
        self.where = where
        sign = 1.0 if p.sense == "max" else -1.0
        for bi, cmat in p.objective.items():
            g, pos = where[bi]
            self.groups[g].c[pos] = sign * cmat
        entries = [([], [], []) for _ in self.groups]
        for k, (coeffs, _) in enumerate(p.constraints):
            for bi, amat in coeffs.items():
                g, pos = where[bi]
                entries[g][0].append(pos)
                entries[g][1].append(k)
                entries[g][2].append(amat)
        for grp, (pos, cidx, mats) in zip(self.groups, entries):
            grp.finalize(pos, cidx, mats if mats else np.zeros((0, grp.dim, grp.dim)))
        self.n_total = sum(g.k * g.dim for g in self.groups)
        self.a_norm = np.zeros(self.m)
        for grp in self.groups:
            np.add.at(self.a_norm, grp.cidx, np.sum(np.abs(grp.a) ** 2, axis=(1, 2)))
        self.a_norm = np.sqrt(self.a_norm)

    def a_op(self, xs) -> np.ndarray:
        out = np.zeros(self.m)
        for grp, x in zip(self.groups, xs):
            if len(grp.pos):
                vals = np.real(np.einsum("eij,eji->e", grp.a, x[grp.pos]))
                out += np.bincount(grp.cidx, weights=vals, minlength=self.m)
        return out

    def at_op(self, y) -> list[np.ndarray]:
        out = []
        for grp in self.groups:
            res = np.zeros((grp.k, grp.dim, grp.dim), dtype=grp.dtype)
            if len(grp.pos):
                contrib = y[grp.cidx][:, None, None] * grp.a
                res[grp.nonempty] = np.add.reduceat(contrib, grp.starts, axis=0)
            out.append(res)
        return out

    def schur(self, xs, zinvs) -> np.ndarray:
        mat = np.zeros((self.m, self.m))
        for grp, x, zi in zip(self.groups, xs, zinvs):
            if not len(grp.pos):
                continue
            t = zi[grp.pos] @ grp.a @ x[grp.pos]
            t = t.reshape(len(grp.pos), -1)
            for p, (s, e) in enumerate(grp.slices):
                if s == e:
                    continue
                blk = np.real(grp.a_t[s:e] @ t[s:e].T)
                c = grp.cidx[s:e]
                mat[np.ix_(c, c)] += blk
        return mat


def _max_step(x: np.ndarray, dx: np.ndarray) -> float:
    """Largest alpha with x + alpha dx PSD (x positive definite), batched over blocks."""
    if x.shape[0] == 0:
        return math.inf
    chol = np.linalg.cholesky(x)
    inv = np.linalg.inv(chol)
    w = inv @ dx @ dagger(inv)
    lam = np.linalg.eigvalsh(_herm(w)).min()
    return math.inf if lam >= 0 else -1.0 / lam


def _schur_solver(schur: np.ndarray):
    """Cholesky solve of the diagonally equilibrated system, with an eigenvalue
    pseudo-inverse fallback near singularity.

    Equilibration matters late in a solve, when rows of the Schur matrix differ
    by many orders of magnitude; without it the step stops satisfying the
    linearized constraints and primal feasibility is lost.
    """
    d = np.sqrt(np.clip(np.diag(schur), 1e-300, None))
    m = schur / d[:, None] / d[None, :]
    m = (m + m.T) / 2
    try:
        factor = scipy.linalg.cho_factor(m)
        return lambda rhs: scipy.linalg.cho_solve(factor, rhs / d) / d
    except np.linalg.LinAlgError:
        pass
    w, v = np.linalg.eigh(m)
    keep = w > 1e-15 * max(float(w.max(initial=0.0)), 1e-300)
    inv = 1.0 / w[keep]
    vk = v[:, keep]
    return lambda rhs: (vk @ (inv * (vk.T @ (rhs / d)))) / d


def _unpack(cp, stacked, n_blocks) -> list[np.ndarray]:
    out = [None] * n_blocks
    for grp, arr in zip(cp.groups, stacked):
        for pos, bi in enumerate(grp.members):
            out[bi] = arr[pos].copy()
    return out


def _certificate(cp, xs, y, pobj, dobj, b_norm, blowup=1e8, tol=1e-6):
    """Farkas-type certificates read off a diverging iterate.

    ``b.y -> -inf`` with ``A^T y`` (normalized) PSD means no feasible X exists;
    ``Tr(C X) -> +inf`` with ``A(X)`` (normalized) near zero means the
    objective is unbounded.
    """
    if not (np.isfinite(pobj) and np.isfinite(dobj)):
        return "error"
    if dobj < -blowup:
        yh = y / abs(dobj)
        aty = cp.at_op(yh)
        lam = min(float(np.linalg.eigvalsh(a).min()) for a in aty) if aty else 0.0
        if lam >= -tol:
            return "infeasible"
    if pobj > blowup:
        xh = [x / pobj for x in xs]
        if float(np.linalg.norm(cp.a_op(xh))) <= tol * (1 + b_norm):
            return "unbounded"
    return None


def solve(p: SdpProblem, max_iter: int = 200, gap_tol: float = 1e-10, rel_gap_tol: float = 1e-10,
          feas_tol: float = 1e-9, verbose: bool = False, refine: int = 2,
          callback=None) -> SdpSolution:
    """Solve ``p`` and return an :class:`SdpSolution`.

    Stops when the primal and dual residuals are below ``feas_tol`` (relative
    to ``1 + |b|`` and ``1 + |C|``) and either the complementarity gap is below
    ``gap_tol`` or the relative gap below ``rel_gap_tol``.  ``history`` holds
    one record per iterate; ``callback(iteration, X, y, Z)``, if given, sees
    every iterate as per-block lists in the internal maximization form.
    """
    cp = _Compiled(p)
    sign = 1.0 if p.sense == "max" else -1.0
    m = cp.m
    b = cp.b
    c_norm = math.sqrt(sum(float(np.sum(np.abs(g.c) ** 2)) for g in cp.groups))
    b_norm = float(np.linalg.norm(b))

    scale_x, scale_z = 1.0, 1.0
    for grp in cp.groups:
        n = grp.dim
        scale_x = max(scale_x, math.sqrt(n))
        scale_z = max(scale_z, math.sqrt(n), float(np.sqrt(np.max(np.sum(np.abs(grp.c) ** 2, axis=(1, 2)),
                                                               initial=0.0))))
    for k in range(m):
        scale_x = max(scale_x, (1 + abs(b[k])) / (1 + cp.a_norm[k]))
        scale_z = max(scale_z, cp.a_norm[k])
    scale_x *= 10
    scale_z *= 10

    xs = [np.broadcast_to(np.eye(g.dim, dtype=g.dtype), (g.k, g.dim, g.dim)) * scale_x for g in cp.groups]
    zs = [np.broadcast_to(np.eye(g.dim, dtype=g.dtype), (g.k, g.dim, g.dim)) * scale_z for g in cp.groups]
    xs = [x.copy() for x in xs]
    zs = [z.copy() for z in zs]
    y = np.zeros(m)

    history = []
    status = "max_iter"
    it = 0
    best = None  # (merit, xs, y, zs, iteration)
    near_tol = 1e-5

    def stop_status(fallback):
        # converged to the requested accuracy, or close enough to be usable
        if best[0] <= max(feas_tol, rel_gap_tol):
            return "optimal"
        return "near_optimal" if best[0] <= near_tol else fallback

    def objectives(xs_, y_):
        pobj = sum(_inner(g.c, x) for g, x in zip(cp.groups, xs_))
        return pobj, float(b @ y_)

    for it in range(max_iter + 1):
        aty = cp.at_op(y)
        dres = [a - z - g.c for a, z, g in zip(aty, zs, cp.groups)]
        rp = b - cp.a_op(xs)
        pinf = float(np.linalg.norm(rp)) / (1 + b_norm)
        dinf = math.sqrt(sum(float(np.sum(np.abs(d) ** 2)) for d in dres)) / (1 + c_norm)
        xz = sum(_inner(x, z) for x, z in zip(xs, zs))
        pobj, dobj = objectives(xs, y)
        rel_gap = xz / (1 + abs(pobj) + abs(dobj))
        history.append(dict(iteration=it, primal=sign * pobj + p.offset, dual=sign * dobj + p.offset,
                            complementarity=xz, primal_residual=float(np.linalg.norm(rp)),
                            dual_residual=dinf * (1 + c_norm), merit=max(pinf, dinf, rel_gap)))
        if callback is not None:
            callback(it, _unpack(cp, xs, len(p.blocks)), y.copy(), _unpack(cp, zs, len(p.blocks)))
        if verbose:
            log.info("it %3d pobj %.10e dobj %.10e gap %.2e pinf %.2e dinf %.2e",
                     it, pobj, dobj, xz, pinf, dinf)
        merit = max(pinf, dinf, rel_gap)
        if best is None or merit < best[0]:
            best = (merit, xs, y, zs, it)
        if pinf <= feas_tol and dinf <= feas_tol and (xz <= gap_tol or rel_gap <= rel_gap_tol):
            status = "optimal"
            break
        if (merit > 100 * best[0] and best[0] < near_tol) or it - best[4] > 15:
            # lost accuracy or stagnated; fall back to the best iterate seen
            status = stop_status("max_iter")
            break
        if it == max_iter:
            status = stop_status("max_iter")
            break
        cert = _certificate(cp, xs, y, pobj, dobj, b_norm)
        if cert is not None:
            status = cert
            break

        mu = xz / cp.n_total
        try:
            zinvs = [np.linalg.inv(z) for z in zs]
            schur_solve = _schur_solver(cp.schur(xs, zinvs))
        except (np.linalg.LinAlgError, ValueError) as exc:
            log.debug("numerical breakdown at iteration %d: %s", it, exc)
            status = stop_status("error")
            break

        def direction(sigma, corr):
            # HKM: dX = sigma*mu*Z^-1 - X - Z^-1 dZ X (+ corr); dZ = A^T dy + dres
            base = [sigma * mu * zi - x + (cr if cr is not None else 0) - zi @ d @ x
                    for zi, x, d, cr in zip(zinvs, xs, dres, corr)]
            rhs = cp.a_op(base) - rp
            dy = schur_solve(rhs)
            for k in range(refine + 1):
                dz = [a + d for a, d in zip(cp.at_op(dy), dres)]
                dx = [_herm(bs - zi @ dzz @ x) for bs, zi, dzz, x in zip(base, zinvs, dz, xs)]
                err = rp - cp.a_op(dx)
                if k == refine or float(np.linalg.norm(err)) <= 1e-14 * (1 + b_norm):
                    break
                # refine dy so that A(dX) matches the primal residual
                dy = dy - schur_solve(err)
            return dx, dy, dz

        def step_lengths(dx, dz):
            ap = min((_max_step(x, d) for x, d in zip(xs, dx)), default=math.inf)
            ad = min((_max_step(z, d) for z, d in zip(zs, dz)), default=math.inf)
            return ap, ad

        none = [None] * len(xs)
        try:
            dx_a, dy_a, dz_a = direction(0.0, none)
            ap, ad = step_lengths(dx_a, dz_a)
            ap, ad = min(1.0, ap), min(1.0, ad)
            xz_aff = sum(_inner(x + ap * dxx, z + ad * dzz)
                         for x, dxx, z, dzz in zip(xs, dx_a, zs, dz_a))
            sigma = min(1.0, max(0.0, (xz_aff / xz) ** 3)) if xz > 0 else 0.0
            corr = [-(zi @ dzz @ dxx) for zi, dzz, dxx in zip(zinvs, dz_a, dx_a)]
            dx, dy, dz = direction(sigma, corr)
            ap, ad = step_lengths(dx, dz)
        except (np.linalg.LinAlgError, ValueError) as exc:
            log.debug("numerical breakdown at iteration %d: %s", it, exc)
            status = stop_status("error")
            break
        if math.isnan(ap) or math.isnan(ad):
            status = stop_status("error")
            break
        gamma = 0.9 + 0.09 * min(1.0, min(ap, ad))
        ap = min(1.0, gamma * ap)
        ad = min(1.0, gamma * ad)
        xs = [x + ap * d for x, d in zip(xs, dx)]
        y = y + ad * dy
        zs = [z + ad * d for z, d in zip(zs, dz)]

    if best[0] < history[-1]["merit"]:
        _, xs, y, zs, _ = best
    primal = _unpack(cp, xs, len(p.blocks))
    slack = _unpack(cp, zs, len(p.blocks))
    rp = b - cp.a_op(xs)
    aty = cp.at_op(y)
    dres = [a - z - g.c for a, z, g in zip(aty, zs, cp.groups)]
    pobj, dobj = objectives(xs, y)
    return SdpSolution(
        status=status, primal=primal, dual_slack=slack, y=y,
        primal_value=sign * pobj + p.offset, dual_value=sign * dobj + p.offset,
        primal_residual=float(np.max(np.abs(rp), initial=0.0)),
        dual_residual=math.sqrt(sum(float(np.sum(np.abs(d) ** 2)) for d in dres)),
        iterations=it, history=history)
