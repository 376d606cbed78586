"""Discrete memoryless sources for many-to-one key generation.

The workhorse model is the binary degraded family: a base-station bit X0
with P(X0=1) = q, and per-agent observations X_l = X0 xor B_l where the
B_l are independent Bernoulli(p_l).  General joint tables (optionally with
an extra eavesdropper component Z) are supported for validation and for
conditional games.

Conventions, fixed repo-wide:
  * agent l (1-based) corresponds to bit (l-1) of a coalition bitmask;
  * axis 0 of the probability table is X0, axis l is agent l, and the
    trailing axis (when present) is Z;
  * all entropies are base-2, 0*log(0) = 0.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import CapacityError, ConsistencyError, ValidationError

MAX_DENSE_AGENTS = 20
NEG_ENTROPY_FLOOR = -1e-12


def binary_entropy(p: float) -> float:
    """H_b(p) in bits; 0 at the endpoints."""
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return float(-p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p))


@dataclass(frozen=True)
class DegradedSourceSpec:
    """Parameters of the binary degraded family.

    q is P(X0 = 1); p holds one crossover probability per agent; z_levels,
    when given, partitions agents 1..L into clearance levels, highest
    clearance first.
    """

    q: float
    p: tuple[float, ...]
    z_levels: Optional[tuple[tuple[int, ...], ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "p", tuple(float(x) for x in self.p))
        if self.z_levels is not None:
            object.__setattr__(
                self, "z_levels", tuple(tuple(int(a) for a in lev) for lev in self.z_levels)
            )
        self.validate()

    @property
    def num_agents(self) -> int:
        return len(self.p)

    def validate(self) -> None:
        if not 0.0 < self.q < 1.0:
            raise ValidationError(f"q must lie in (0,1), got {self.q}")
        if not self.p:
            raise ValidationError("p must list at least one crossover probability")
        for i, pl in enumerate(self.p):
            if not 0.0 < pl < 1.0:
                raise ValidationError(f"p[{i}] must lie in (0,1), got {pl}")
        if self.z_levels is not None:
            flat = [a for lev in self.z_levels for a in lev]
            expected = set(range(1, self.num_agents + 1))
            if sorted(flat) != sorted(expected) or len(flat) != len(set(flat)):
                raise ValidationError(
                    f"levels must partition agents 1..{self.num_agents} exactly once, got {self.z_levels}"
                )
            if any(len(lev) == 0 for lev in self.z_levels):
                raise ValidationError("levels must not contain an empty group")

    @classmethod
    def from_json(cls, path: str) -> "DegradedSourceSpec":
        """Read a spec file: {"q": real, "p": [...], "levels": optional [[ids]...]}."""
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"spec file {path} is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ValidationError("spec file must hold a JSON object")
        if "q" not in raw:
            raise ValidationError("spec field 'q' is missing")
        if "p" not in raw:
            raise ValidationError("spec field 'p' is missing")
        q = raw["q"]
        p = raw["p"]
        if not isinstance(q, (int, float)):
            raise ValidationError("spec field 'q' must be a number")
        if not isinstance(p, list) or not all(isinstance(x, (int, float)) for x in p):
            raise ValidationError("spec field 'p' must be a list of numbers")
        levels = raw.get("levels")
        if levels is not None:
            if not isinstance(levels, list) or not all(isinstance(g, list) for g in levels):
                raise ValidationError("spec field 'levels' must be a list of agent-id lists")
            levels = tuple(tuple(g) for g in levels)
        return cls(q=float(q), p=tuple(p), z_levels=levels)

    def to_json(self) -> dict:
        out = {"q": self.q, "p": list(self.p)}
        if self.z_levels is not None:
            out["levels"] = [list(g) for g in self.z_levels]
        return out


@dataclass
class JointSource:
    """Dense joint distribution over (X0, X1..XL[, Z]).

    prob has one axis per component in that order; every component is
    binary except the optional trailing Z axis, which may have any finite
    cardinality.
    """

    num_agents: int
    prob: np.ndarray
    has_z: bool = False
    markov_degraded: bool = False

    def __post_init__(self):
        expected_dims = self.num_agents + 1 + (1 if self.has_z else 0)
        if self.prob.ndim != expected_dims:
            raise ValidationError(
                f"probability table has {self.prob.ndim} axes, expected {expected_dims}"
            )
        if np.any(self.prob < 0):
            raise ValidationError("probability table has negative entries")
        total = float(self.prob.sum())
        if abs(total - 1.0) > 1e-12:
            raise ValidationError(f"probability table sums to {total}, expected 1 within 1e-12")

    @property
    def z_axis(self) -> Optional[int]:
        return self.num_agents + 1 if self.has_z else None

    @property
    def full_mask(self) -> int:
        return (1 << self.num_agents) - 1

    def agent_axes(self, mask: int) -> tuple[int, ...]:
        if mask < 0 or mask > self.full_mask:
            raise ValidationError(f"coalition bitmask {mask} out of range for L={self.num_agents}")
        return tuple(l + 1 for l in range(self.num_agents) if mask >> l & 1)


@dataclass(frozen=True)
class EntropyQuery:
    """Index arithmetic for entropy / mutual-information lookups.

    Each of the three slots (a, b, conditioning) selects a coalition
    bitmask plus flags for including X0 and Z.  entropy() uses the a-slot
    and the conditioning; mutual_information() uses all three.
    """

    subset_a: int = 0
    a_x0: bool = False
    a_z: bool = False
    subset_b: int = 0
    b_x0: bool = False
    b_z: bool = False
    cond: int = 0
    cond_x0: bool = False
    cond_z: bool = False


def build_degraded_source(spec: DegradedSourceSpec) -> JointSource:
    """Materialize the dense joint table of the degraded family.

    p(x0, x1..xL) = P(X0=x0) * prod_l P(B_l = x_l xor x0).  Guarded at
    L <= 20 so the table stays dense and exact.
    """
    L = spec.num_agents
    if L > MAX_DENSE_AGENTS:
        raise CapacityError(f"dense joint table limited to L <= {MAX_DENSE_AGENTS}, got L={L}")
    prob = np.array([1.0 - spec.q, spec.q])
    table = prob.reshape((2,) + (1,) * L)
    x0 = np.arange(2).reshape((2,) + (1,) * L)
    for l, pl in enumerate(spec.p):
        xl = np.arange(2).reshape((1,) * (l + 1) + (2,) + (1,) * (L - l - 1))
        flip = xl ^ x0
        table = table * np.where(flip == 1, pl, 1.0 - pl)
    return JointSource(num_agents=L, prob=table, markov_degraded=True)


def _subset_entropy(src: JointSource, axes: tuple[int, ...]) -> float:
    """Shannon entropy (bits) of the marginal on the given axes."""
    drop = tuple(a for a in range(src.prob.ndim) if a not in axes)
    marg = src.prob.sum(axis=drop) if drop else src.prob
    flat = marg.reshape(-1)
    nz = flat[flat > 0]
    return float(-(nz * np.log2(nz)).sum())


def _clamp(value: float, what: str) -> float:
    if value < NEG_ENTROPY_FLOOR:
        raise ConsistencyError(f"{what} evaluated to {value}, below the -1e-12 floor")
    return max(value, 0.0)


def _slot_axes(src: JointSource, mask: int, with_x0: bool, with_z: bool) -> tuple[int, ...]:
    axes = src.agent_axes(mask)
    if with_x0:
        axes = (0,) + axes
    if with_z:
        if not src.has_z:
            raise ValidationError("query touches Z but the source has no Z component")
        axes = axes + (src.z_axis,)
    return axes


def entropy(src: JointSource, query: EntropyQuery) -> float:
    """H(A | C) in bits for the query's a-slot given its conditioning slot."""
    a = _slot_axes(src, query.subset_a, query.a_x0, query.a_z)
    c = _slot_axes(src, query.cond, query.cond_x0, query.cond_z)
    if not a:
        return 0.0
    ac = tuple(sorted(set(a) | set(c)))
    h = _subset_entropy(src, ac) - (_subset_entropy(src, c) if c else 0.0)
    return _clamp(h, "conditional entropy")


def mutual_information(src: JointSource, query: EntropyQuery) -> float:
    """I(A ; B | C) in bits, clamped to zero from tiny negative round-off."""
    a = set(_slot_axes(src, query.subset_a, query.a_x0, query.a_z))
    b = set(_slot_axes(src, query.subset_b, query.b_x0, query.b_z))
    c = set(_slot_axes(src, query.cond, query.cond_x0, query.cond_z))
    if not a:
        raise ValidationError("mutual-information query requires a nonempty a-slot")
    if not b:
        return 0.0
    if a & b:
        raise ValidationError("a and b slots overlap in a mutual-information query")
    h_ac = _subset_entropy(src, tuple(sorted(a | c)))
    h_bc = _subset_entropy(src, tuple(sorted(b | c)))
    h_abc = _subset_entropy(src, tuple(sorted(a | b | c)))
    h_c = _subset_entropy(src, tuple(sorted(c))) if c else 0.0
    return _clamp(h_ac + h_bc - h_abc - h_c, "mutual information")


def conditional_mi(src: JointSource, coalition: int, cond_mask: int = 0,
                   cond_z: bool = False) -> float:
    """I(X_S ; X0 | X_cond[, Z]) - the quantity the whole game is built from."""
    return mutual_information(
        src,
        EntropyQuery(subset_a=coalition, b_x0=True, cond=cond_mask, cond_z=cond_z),
    )


def verify_markov(src: JointSource, tol: float = 1e-10) -> bool:
    """Check conditional independence of disjoint agent groups given X0.

    True iff p(x_S, x_T | x0) = p(x_S | x0) p(x_T | x0) within tol for
    every pair of disjoint nonempty coalitions, everywhere p(x0) > 0.
    When Z is present the second group is augmented with Z, so the check
    covers X_S - X0 - (X_T, Z) including T empty.
    """
    L = src.num_agents
    if L > 12:
        raise CapacityError("verify_markov enumerates 3^L group pairs; L <= 12 supported")
    joint = src.prob
    p_x0 = joint.sum(axis=tuple(range(1, joint.ndim)))

    def cond_marginal(axes: tuple[int, ...], x0: int) -> np.ndarray:
        keep = (0,) + axes
        drop = tuple(a for a in range(joint.ndim) if a not in keep)
        m = joint.sum(axis=drop) if drop else joint
        return m[x0] / p_x0[x0]

    z_ax = src.z_axis
    for s_mask in range(1, 1 << L):
        for t_mask in range(1 << L):
            if s_mask & t_mask:
                continue
            if not src.has_z:
                # plain pairs are symmetric: visit each unordered pair once
                if t_mask == 0 or t_mask < s_mask:
                    continue
            s_axes = src.agent_axes(s_mask)
            t_axes = src.agent_axes(t_mask)
            if src.has_z:
                # with Z glued to the right-hand group the relation is
                # one-sided, so ordered pairs (T possibly empty) all matter
                t_axes = t_axes + (z_ax,)
            for x0 in range(2):
                if p_x0[x0] <= 0:
                    continue
                p_st = cond_marginal(tuple(sorted(s_axes + t_axes)), x0)
                p_s = cond_marginal(s_axes, x0)
                p_t = cond_marginal(t_axes, x0)
                combined = s_axes + t_axes
                order = list(np.argsort(combined))
                outer = np.transpose(np.multiply.outer(p_s, p_t), axes=order)
                if np.max(np.abs(p_st - outer)) > tol:
                    return False
    return True


def f_value(spec: DegradedSourceSpec, s_mask: int, t_mask: int) -> float:
    """Mixture weight f_S(T) of the degraded family, T a subset of S.

    f_S(T) = q prod_{i in T} p_i prod_{j in S\\T} (1-p_j)
           + (1-q) prod_{i in T} (1-p_i) prod_{j in S\\T} p_j.
    """
    if t_mask & ~s_mask:
        raise ValidationError(f"T={t_mask:b} is not a subset of S={s_mask:b}")
    a, b = spec.q, 1.0 - spec.q
    for l in range(spec.num_agents):
        bit = 1 << l
        if not s_mask & bit:
            continue
        pl = spec.p[l]
        if t_mask & bit:
            a *= pl
            b *= 1.0 - pl
        else:
            a *= 1.0 - pl
            b *= pl
    return a + b


def _submask_iter(mask: int):
    """All submasks of mask, including 0 and mask itself."""
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def coalition_value_closed_form(spec: DegradedSourceSpec, s_mask: int) -> float:
    """Coalition value of the degraded family via the product-form mixture.

    Avoids the dense joint table: sums -f_L(T) log f_L(T) over all T,
    adds back the same sum over the complement, and subtracts the agents'
    channel entropies.
    """
    L = spec.num_agents
    full = (1 << L) - 1
    if s_mask < 0 or s_mask > full:
        raise ValidationError(f"coalition bitmask {s_mask} out of range for L={L}")
    if s_mask == 0:
        return 0.0
    sc_mask = full & ~s_mask
    total = 0.0
    for t in _submask_iter(full):
        fv = f_value(spec, full, t)
        if fv > 0:
            total -= fv * math.log2(fv)
    for t in _submask_iter(sc_mask):
        fv = f_value(spec, sc_mask, t)
        if fv > 0:
            total += fv * math.log2(fv)
    for l in range(L):
        if s_mask >> l & 1:
            total -= binary_entropy(spec.p[l])
    return max(total, 0.0)


def attach_z(src: JointSource, z_given: np.ndarray) -> JointSource:
    """Extend a source with an eavesdropper component.

    z_given maps every (x0, x1..xL) cell to a distribution over Z values:
    shape = src.prob.shape + (nz,), rows summing to 1.
    """
    if src.has_z:
        raise ValidationError("source already has a Z component")
    if z_given.shape[:-1] != src.prob.shape:
        raise ValidationError("z_given shape does not match the source table")
    rows = z_given.sum(axis=-1)
    if np.max(np.abs(rows - 1.0)) > 1e-12:
        raise ValidationError("z_given rows must sum to 1")
    prob = src.prob[..., None] * z_given
    return JointSource(num_agents=src.num_agents, prob=prob, has_z=True,
                       markov_degraded=False)
