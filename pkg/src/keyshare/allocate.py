"""Fair rate allocations: Shapley value and nucleolus.

The Shapley value comes in two independent routes (marginal-contribution
weights over the value table, and the mutual-information closed form
straight from the source) that must agree; the nucleolus runs the
successive linear-program scheme, fixing at each stage the coalitions
whose excess is pinned at the stage optimum across the entire optimal
face.  A grid-sweep oracle validates small instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import CapacityError, SolverError, ValidationError
from .game import CoalitionGame, coalition_sums
from .source import EntropyQuery, JointSource, conditional_mi, mutual_information

LP_TOL = 1e-9
TIGHT_TOL = 1e-8
PIVOT_TOL = 1e-9


@dataclass
class LinearProgram:
    """Minimize objective . x subject to rows (coeffs, relation, rhs).

    relation is one of "<=", ">=", "=".  bounds lists one (low, high) pair
    per variable, None meaning unbounded on that side.
    """

    objective: np.ndarray
    constraints: list[tuple[np.ndarray, str, float]]
    bounds: Optional[list[tuple[Optional[float], Optional[float]]]] = None

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        if not np.all(np.isfinite(self.objective)):
            raise ValidationError("objective has non-finite coefficients")
        n = len(self.objective)
        cleaned = []
        for coeffs, rel, rhs in self.constraints:
            coeffs = np.asarray(coeffs, dtype=float)
            if coeffs.shape != (n,):
                raise ValidationError(f"constraint row has shape {coeffs.shape}, expected ({n},)")
            if rel not in ("<=", ">=", "="):
                raise ValidationError(f"unknown relation {rel!r}")
            if not (np.all(np.isfinite(coeffs)) and math.isfinite(rhs)):
                raise ValidationError("constraint has non-finite coefficients")
            cleaned.append((coeffs, rel, float(rhs)))
        self.constraints = cleaned


def lp_solve(lp: LinearProgram):
    """Solve an LP; returns (status, optimum, solution).

    status is "optimal", "infeasible" or "unbounded"; optimum and solution
    are None unless optimal.
    """
    n = len(lp.objective)
    a_ub, b_ub, a_eq, b_eq = [], [], [], []
    for coeffs, rel, rhs in lp.constraints:
        if rel == "<=":
            a_ub.append(coeffs)
            b_ub.append(rhs)
        elif rel == ">=":
            a_ub.append(-coeffs)
            b_ub.append(-rhs)
        else:
            a_eq.append(coeffs)
            b_eq.append(rhs)
    bounds = lp.bounds if lp.bounds is not None else [(None, None)] * n
    res = linprog(
        lp.objective,
        A_ub=np.array(a_ub) if a_ub else None,
        b_ub=np.array(b_ub) if b_ub else None,
        A_eq=np.array(a_eq) if a_eq else None,
        b_eq=np.array(b_eq) if b_eq else None,
        bounds=bounds,
        method="highs",
    )
    if res.status == 0:
        return "optimal", float(res.fun), np.asarray(res.x, dtype=float)
    if res.status == 2:
        return "infeasible", None, None
    if res.status == 3:
        return "unbounded", None, None
    raise SolverError(f"linear program solver failed: {res.message}")


def shapley_from_game(game: CoalitionGame) -> np.ndarray:
    """Shapley value from the value table via subset weights.

    R_l = sum over coalitions S not containing l of
    |S|! (L-|S|-1)! / L! * (v(S+l) - v(S)).
    """
    L = game.num_agents
    fact = [math.factorial(k) for k in range(L + 1)]
    weights = [fact[s] * fact[L - s - 1] / fact[L] for s in range(L)]
    v = game.values
    rates = np.zeros(L)
    for mask in range(1 << L):
        size = bin(mask).count("1")
        for l in range(L):
            bit = 1 << l
            if mask & bit:
                continue
            rates[l] += weights[size] * (v[mask | bit] - v[mask])
    return rates


def shapley_closed_form(src: JointSource) -> np.ndarray:
    """Shapley value straight from the source statistics.

    R_l = I(X_l ; X0) - (1/L) sum_{S not cont. l} C(L-1, |S|)^-1 I(X_l ; X_S).
    Works only for degraded sources (the derivation uses the Markov chain),
    and must agree with shapley_from_game(value_function(src)).
    """
    from .game import _require_markov

    _require_markov(src)
    L = src.num_agents
    rates = np.zeros(L)
    for l in range(L):
        bit = 1 << l
        base = conditional_mi(src, bit)
        penalty = 0.0
        for mask in range(1 << L):
            if mask & bit:
                continue
            if mask == 0:
                continue  # I(X_l ; nothing) = 0
            size = bin(mask).count("1")
            mi = mutual_information(src, EntropyQuery(subset_a=bit, subset_b=mask))
            penalty += mi / math.comb(L - 1, size)
        rates[l] = base - penalty / L
    return rates


@dataclass
class NucleolusStage:
    optimum: float
    fixed_coalitions: list[int]
    system_rank: int


@dataclass
class NucleolusTrace:
    stages: list[NucleolusStage] = field(default_factory=list)

    def to_json(self) -> list[dict]:
        return [
            {"z": s.optimum, "fixed": s.fixed_coalitions, "rank": s.system_rank}
            for s in self.stages
        ]


def _row_rank(rows: list[np.ndarray], pivot_tol: float = PIVOT_TOL) -> int:
    """Rank by Gaussian elimination with partial pivoting."""
    if not rows:
        return 0
    m = np.array(rows, dtype=float)
    nrows, ncols = m.shape
    rank = 0
    for col in range(ncols):
        if rank == nrows:
            break
        pivot = rank + int(np.argmax(np.abs(m[rank:, col])))
        if abs(m[pivot, col]) <= pivot_tol:
            continue
        m[[rank, pivot]] = m[[pivot, rank]]
        m[rank] /= m[rank, col]
        for r in range(nrows):
            if r != rank and abs(m[r, col]) > 0:
                m[r] -= m[r, col] * m[rank]
        rank += 1
    return rank


def _coalition_row(mask: int, L: int) -> np.ndarray:
    row = np.zeros(L)
    for l in range(L):
        if mask >> l & 1:
            row[l] = 1.0
    return row


def _stage_lp(game, free, fixed, minimize_z=True, z_value=None, maximize_mask=None):
    """Build one stage (or binding-test) LP of the successive scheme.

    Variables are the L payoffs plus, when minimize_z, a trailing excess
    level z.  fixed holds (mask, z_star) pairs turned into equalities.
    """
    L = game.num_agents
    n = L + (1 if minimize_z else 0)
    obj = np.zeros(n)
    if minimize_z:
        obj[L] = 1.0
    else:
        obj[: L] = -_coalition_row(maximize_mask, L)  # maximize coalition payoff
    cons = []
    for mask in free:
        row = np.zeros(n)
        row[:L] = _coalition_row(mask, L)
        if minimize_z:
            row[L] = 1.0
            cons.append((row, ">=", game.value(mask)))
        else:
            cons.append((row, ">=", game.value(mask) - z_value))
    eff = np.zeros(n)
    eff[:L] = 1.0
    cons.append((eff, "=", game.grand_value()))
    for mask, z_star in fixed:
        row = np.zeros(n)
        row[:L] = _coalition_row(mask, L)
        cons.append((row, "=", game.value(mask) - z_star))
    bounds = [(0.0, None)] * L + ([(None, None)] if minimize_z else [])
    return LinearProgram(objective=obj, constraints=cons, bounds=bounds)


def nucleolus(game: CoalitionGame):
    """Lexicographically optimal allocation plus the stage trace.

    Successive LPs over the nonempty proper coalitions: stage k minimizes
    the worst free excess; coalitions whose excess equals the optimum on
    the whole optimal face (checked by maximizing their payoff over that
    face) become equalities for later stages.  Stops once the fixed system
    pins all L payoffs.
    """
    L = game.num_agents
    free = [m for m in range(1, game.full_mask)]
    fixed: list[tuple[int, float]] = []
    trace = NucleolusTrace()

    def current_rank() -> int:
        rows = [np.ones(L)] + [_coalition_row(m, L) for m, _ in fixed]
        return _row_rank(rows)

    stage_count = 0
    while current_rank() < L:
        stage_count += 1
        if stage_count > (1 << L):
            raise SolverError("nucleolus stage count exceeded 2^L without full rank")
        status, z_star, sol = lp_solve(_stage_lp(game, free, fixed))
        if status != "optimal":
            raise ValidationError(
                f"nucleolus stage LP came back {status}; the game admits no "
                "feasible excess level (empty-core style degeneracy)"
            )
        x = sol[:L]
        sums = coalition_sums(x)
        tight = [m for m in free if abs(z_star + sums[m] - game.value(m)) <= TIGHT_TOL]
        binding = []
        for mask in tight:
            status2, best, _ = lp_solve(
                _stage_lp(game, free, fixed, minimize_z=False,
                          z_value=z_star, maximize_mask=mask)
            )
            if status2 != "optimal":
                raise SolverError(f"binding test LP came back {status2}")
            # -best = max payoff of the coalition over the optimal face;
            # if it can exceed v(S) - z*, the excess is not pinned yet
            if -best > game.value(mask) - z_star + TIGHT_TOL:
                continue
            binding.append(mask)
        if not binding:
            raise SolverError("nucleolus stage found no binding coalition; cannot progress")
        fixed.extend((m, z_star) for m in binding)
        free = [m for m in free if m not in set(binding)]
        trace.stages.append(
            NucleolusStage(optimum=z_star, fixed_coalitions=sorted(binding),
                           system_rank=current_rank())
        )

    rows = [np.ones(L)] + [_coalition_row(m, L) for m, _ in fixed]
    rhs = [game.grand_value()] + [game.value(m) - z for m, z in fixed]
    solution, _, rank, _ = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)
    if rank < L:
        raise SolverError("final nucleolus system is rank deficient")
    residual = np.array(rows) @ solution - np.array(rhs)
    if np.max(np.abs(residual)) > 1e-7:
        raise SolverError(f"final nucleolus system inconsistent, residual {residual}")
    return solution, trace


def lexicographic_less(theta1: Sequence[float], theta2: Sequence[float]) -> bool:
    """Strict lexicographic order on equal-length excess vectors."""
    a = np.asarray(theta1, dtype=float)
    b = np.asarray(theta2, dtype=float)
    if a.shape != b.shape:
        raise ValidationError(f"length mismatch: {a.shape} vs {b.shape}")
    for x, y in zip(a, b):
        if x < y:
            return True
        if x > y:
            return False
    return False


def brute_force_nucleolus(game: CoalitionGame, grid_step: float) -> np.ndarray:
    """Grid-sweep oracle: lexicographic minimum over the efficiency simplex.

    Enumerates nonnegative allocations summing to v(grand) on a grid of
    the given step and returns the one whose nonincreasing excess vector
    is lexicographically least (ties break to the first point visited).
    The empty and grand coalitions are omitted from the comparison: their
    excesses are the same constants for every efficient candidate, so they
    cannot affect the order, while their floating-point residue would.
    Excess levels are compared after rounding to 1e-9: candidates whose
    leading excesses are genuinely equal (same coalition sums up to the
    grid) must tie there, and the deeper levels decide, instead of letting
    last-ulp noise mask them.  Only for L <= 3; meant as a test oracle.
    """
    L = game.num_agents
    if L > 3:
        raise CapacityError("grid-sweep nucleolus oracle limited to L <= 3")
    if grid_step <= 0:
        raise ValidationError("grid_step must be positive")
    total = game.grand_value()
    axis = np.arange(0.0, total + grid_step / 2, grid_step)
    if L == 1:
        pts = np.array([[total]])
    elif L == 2:
        pts = np.stack([axis, total - axis], axis=1)
        pts = pts[pts[:, 1] >= -1e-12]
    else:
        g1, g2 = np.meshgrid(axis, axis, indexing="ij")
        y3 = total - g1 - g2
        keep = y3 >= -1e-12
        pts = np.stack([g1[keep], g2[keep], y3[keep]], axis=1)
    pts = np.clip(pts, 0.0, None)
    proper = [m for m in range(1, (1 << L) - 1)]
    if not proper:
        return pts[0]
    masks = np.stack([_coalition_row(m, L) for m in proper])
    exc = game.values[proper][None, :] - pts @ masks.T
    exc_sorted = np.round(-np.sort(-exc, axis=1), 9)
    keys = tuple(exc_sorted[:, k] for k in range(exc_sorted.shape[1] - 1, -1, -1))
    best = np.lexsort(keys)[0]
    return pts[best]


def core_polytope_vertices(game: CoalitionGame) -> np.ndarray:
    """Vertices of the core polytope for a 3-agent game.

    Inside the efficiency plane the core is cut out by the six proper
    coalition constraints; vertices arise where two of them intersect.
    Returned in counterclockwise order around the centroid (plot-ready).
    """
    if game.num_agents != 3:
        raise CapacityError("core polytope vertex enumeration implemented for L = 3")
    v = game.values
    total = game.grand_value()
    rows = []
    rhs = []
    for mask in range(1, 7):
        rows.append(_coalition_row(mask, 3))
        rhs.append(v[mask])
    rows = np.array(rows)
    rhs = np.array(rhs)
    cand = []
    for i in range(6):
        for j in range(i + 1, 6):
            a = np.vstack([rows[i], rows[j], np.ones(3)])
            b = np.array([rhs[i], rhs[j], total])
            if abs(np.linalg.det(a)) < 1e-12:
                continue
            pt = np.linalg.solve(a, b)
            if np.any(rows @ pt < rhs - 1e-9) or np.any(pt < -1e-9):
                continue
            cand.append(pt)
    if not cand:
        return np.zeros((0, 3))
    pts = np.unique(np.round(np.array(cand), 12), axis=0)
    centroid = pts.mean(axis=0)
    # order within the plane for polygon plotting
    e1 = np.array([1.0, -1.0, 0.0]) / np.sqrt(2)
    e2 = np.array([1.0, 1.0, -2.0]) / np.sqrt(6)
    ang = np.arctan2((pts - centroid) @ e2, (pts - centroid) @ e1)
    return pts[np.argsort(ang)]
