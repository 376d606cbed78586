"""Polar source-coding primitives.

The transform is the n-fold Kronecker power of [[1,0],[1,1]] applied as
u = x G over GF(2) (self-inverse).  Per-index conditional entropy profiles
come in two flavors: exact enumeration (test oracle, N <= 16) and a
genie-aided Monte Carlo estimate that runs the successive-cancellation
recursion on true prefixes (production route, any N).  Index sets
threshold the profile at delta_N = 2^(-N^beta).

For the degraded source family, conditioning an agent's block on the base
station's block reduces to a binary symmetric relation with a single
crossover parameter, so every profile here is the profile of an i.i.d.
Bernoulli(theta) block: theta is the crossover when side information is
present and the marginal bit bias when it is not.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import CapacityError, ValidationError

LN2 = float(np.log(2.0))
LLR_CLAMP = 40.0
MAX_EXACT_N = 16
MC_CHUNK = 512  # frozen: results must not depend on scheduling
CACHE_ENV = "KEYSHARE_PROFILE_CACHE"


def _check_block_length(n: int) -> None:
    if n < 1 or n & (n - 1):
        raise ValidationError(f"block length must be a power of two, got {n}")


def polar_transform(x: np.ndarray) -> np.ndarray:
    """u = x G_n over GF(2) on the last axis, in-place butterfly on a copy.

    Applying the transform twice returns the input (G_n is an involution).
    """
    u = np.ascontiguousarray(x, dtype=np.uint8).copy()
    n = u.shape[-1]
    _check_block_length(n)
    step = n
    while step > 1:
        view = u.reshape(u.shape[:-1] + (n // step, step))
        view[..., :, : step // 2] ^= view[..., :, step // 2:]
        step //= 2
    return u


def delta_threshold(n: int, beta: float) -> float:
    if not 0.0 < beta < 0.5:
        raise ValidationError(f"beta must lie in (0, 1/2), got {beta}")
    return float(2.0 ** (-(n ** beta)))


@dataclass
class EntropyProfile:
    """Per-index conditional entropies of a transformed Bernoulli block."""

    n: int
    h: np.ndarray
    method: str  # "exact" | "monte_carlo"
    theta: float
    side_info: bool
    samples: Optional[int] = None
    seed: Optional[int] = None
    genie_error: Optional[np.ndarray] = None  # per-index single-bit decision error

    def to_json(self) -> dict:
        out = {
            "N": self.n,
            "method": self.method,
            "p": self.theta,
            "side_info": self.side_info,
            "samples": self.samples,
            "seed": self.seed,
            "h": [float(x) for x in self.h],
        }
        if self.genie_error is not None:
            out["genie_error"] = [float(x) for x in self.genie_error]
        return out

    @classmethod
    def from_json(cls, raw: dict) -> "EntropyProfile":
        ge = raw.get("genie_error")
        return cls(
            n=int(raw["N"]),
            h=np.array(raw["h"], dtype=float),
            method=str(raw["method"]),
            theta=float(raw["p"]),
            side_info=bool(raw["side_info"]),
            samples=raw.get("samples"),
            seed=raw.get("seed"),
            genie_error=None if ge is None else np.array(ge, dtype=float),
        )


@dataclass
class PolarIndexSets:
    """High / very-high entropy index masks at threshold delta_N."""

    h_mask: np.ndarray
    v_mask: np.ndarray
    delta: float
    beta: float

    @property
    def h_indices(self) -> np.ndarray:
        return np.where(self.h_mask)[0]

    @property
    def v_indices(self) -> np.ndarray:
        return np.where(self.v_mask)[0]


def build_index_sets(profile: EntropyProfile, beta: float) -> PolarIndexSets:
    """Threshold the profile: H = {h_i >= delta}, V = {h_i >= 1 - delta}."""
    delta = delta_threshold(profile.n, beta)
    h_mask = profile.h >= delta
    v_mask = profile.h >= 1.0 - delta
    return PolarIndexSets(h_mask=h_mask, v_mask=v_mask, delta=delta, beta=beta)


def entropy_profile_exact(theta: float, n: int, side_info: bool = True) -> EntropyProfile:
    """Exact profile by enumerating all 2^N block realizations.

    Also records, per index, the exact probability that a maximum-posterior
    decision on that bit is wrong given a correct prefix.
    """
    _check_block_length(n)
    if n > MAX_EXACT_N:
        raise CapacityError(f"exact profile enumerates 2^N blocks; N <= {MAX_EXACT_N}")
    if not 0.0 <= theta <= 1.0:
        raise ValidationError(f"theta must lie in [0,1], got {theta}")
    idx = np.arange(1 << n, dtype=np.uint32)
    # row r encodes u with u_0 as most significant bit
    u_bits = ((idx[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1).astype(np.uint8)
    x_bits = polar_transform(u_bits)  # involution: x = u G
    weight = x_bits.sum(axis=1)
    prob = (theta ** weight) * ((1.0 - theta) ** (n - weight))
    h = np.zeros(n)
    err = np.zeros(n)
    for i in range(n):
        joint = prob.reshape(1 << i, 2, 1 << (n - 1 - i)).sum(axis=2)
        tot = joint.sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            plogp = np.where(joint > 0, joint * np.log2(np.where(joint > 0, joint, 1.0)), 0.0)
            tlogt = np.where(tot > 0, tot * np.log2(np.where(tot > 0, tot, 1.0)), 0.0)
        h[i] = float(tlogt.sum() - plogp.sum())
        err[i] = float(np.minimum(joint[:, 0], joint[:, 1]).sum())
    h = np.clip(h, 0.0, 1.0)
    return EntropyProfile(n=n, h=h, method="exact", theta=theta, side_info=side_info,
                          genie_error=err)


def _boxplus(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Exact LLR check-node combination, numerically stable."""
    return (
        np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))
        + np.log1p(np.exp(-np.abs(a + b)))
        - np.log1p(np.exp(-np.abs(a - b)))
    )


def _posterior_stats(llr_col: np.ndarray):
    """(entropy, error, p_one) of the bit posterior for a final-leaf LLR column."""
    a = np.abs(llr_col)
    ez = np.exp(-a)
    p_min = ez / (1.0 + ez)  # posterior of the less likely symbol
    ent = (np.log1p(ez) + a * p_min) / LN2
    return ent, p_min


def _llr_constant(theta: float) -> float:
    if theta <= 0.0:
        return LLR_CLAMP
    if theta >= 1.0:
        return -LLR_CLAMP
    return float(np.clip(np.log((1.0 - theta) / theta), -LLR_CLAMP, LLR_CLAMP))


def _sc_sweep(llr: np.ndarray, leaf: Callable[[int, np.ndarray], np.ndarray]) -> np.ndarray:
    """Generic successive-cancellation recursion over a batch.

    llr has shape (batch, N).  leaf(i, llr_column) must return the settled
    bits for transform-domain index i; the sweep returns the source-domain
    bits implied by those decisions.
    """
    counter = [0]

    def rec(cur: np.ndarray) -> np.ndarray:
        m = cur.shape[1]
        if m == 1:
            i = counter[0]
            counter[0] += 1
            bits = leaf(i, cur[:, 0])
            return bits[:, None]
        half = m // 2
        left = rec(_boxplus(cur[:, :half], cur[:, half:]))
        follow = cur[:, half:] + (1 - 2 * left.astype(np.int8)) * cur[:, :half]
        right = rec(follow)
        return np.concatenate([left ^ right, right], axis=1)

    return rec(llr)


def entropy_profile_mc(theta: float, n: int, num_samples: int, seed: int,
                       side_info: bool = True) -> EntropyProfile:
    """Genie-aided Monte Carlo profile.

    Each sample draws a Bernoulli(theta) block, runs the SC recursion with
    the true transform-domain prefix, and averages the per-bit posterior
    entropies.  Deterministic given (seed, num_samples): sampling uses
    counter-based streams keyed by (seed, chunk) at a frozen chunk size,
    so the result does not depend on how work is scheduled.
    """
    _check_block_length(n)
    if num_samples < 1000:
        raise ValidationError(f"num_samples must be at least 1000, got {num_samples}")
    c = _llr_constant(theta)
    h_sum = np.zeros(n)
    err_sum = np.zeros(n)
    done = 0
    chunk_index = 0
    while done < num_samples:
        size = min(MC_CHUNK, num_samples - done)
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, chunk_index))))
        x = (rng.random((size, n)) < theta).astype(np.uint8)
        u_true = polar_transform(x)
        row = {"h": np.zeros(n), "e": np.zeros(n)}

        def leaf(i: int, col: np.ndarray) -> np.ndarray:
            ent, p_min = _posterior_stats(col)
            truth = u_true[:, i]
            decision = (col < 0).astype(np.uint8)
            row["h"][i] = ent.sum()
            # probability mass the posterior puts on the non-chosen symbol
            row["e"][i] = np.where(decision == truth, p_min, 1.0 - p_min).sum()
            return truth.copy()

        _sc_sweep(np.full((size, n), c), leaf)
        h_sum += row["h"]
        err_sum += row["e"]
        done += size
        chunk_index += 1
    h = np.clip(h_sum / num_samples, 0.0, 1.0)
    return EntropyProfile(n=n, h=h, method="monte_carlo", theta=theta,
                          side_info=side_info, samples=num_samples, seed=seed,
                          genie_error=err_sum / num_samples)


def side_info_llrs(y: np.ndarray, crossover: float) -> np.ndarray:
    """Per-position LLRs for observing x through a BSC(crossover) as y."""
    c = _llr_constant(crossover)
    return (1 - 2 * np.asarray(y, dtype=np.int8)) * c


def sc_decode(known_mask: np.ndarray, known_values: np.ndarray,
              llr: np.ndarray) -> np.ndarray:
    """Successive-cancellation decode of source blocks from LLR evidence.

    known_mask marks transform-domain indices whose bits are given
    (known_values, same layout as the blocks); the rest are settled by the
    sign of the per-bit posterior, ties to 0.  Accepts a single block
    (1-D) or a batch (2-D, one row per block); returns the decoded source
    blocks in the same shape.
    """
    single = llr.ndim == 1
    llr2 = llr[None, :] if single else llr
    kv = np.asarray(known_values, dtype=np.uint8)
    kv2 = kv[None, :] if kv.ndim == 1 else kv
    mask = np.asarray(known_mask, dtype=bool)
    if mask.shape != (llr2.shape[1],):
        raise ValidationError("known_mask length must match the block length")
    if kv2.shape != llr2.shape:
        raise ValidationError("known_values must match the block batch shape")
    _check_block_length(llr2.shape[1])

    def leaf(i: int, col: np.ndarray) -> np.ndarray:
        if mask[i]:
            return kv2[:, i].copy()
        return (col < 0).astype(np.uint8)

    out = _sc_sweep(llr2, leaf)
    return out[0] if single else out


def decode_with_side_info(known_mask: np.ndarray, known_values: np.ndarray,
                          y: np.ndarray, crossover: float) -> np.ndarray:
    """sc_decode specialization for plain BSC side information."""
    return sc_decode(known_mask, known_values, side_info_llrs(y, crossover))


class ProfileCache:
    """Profile store: in-memory always, JSON files when a directory is set.

    Files are keyed by (method, theta, N, side_info, samples, seed); the
    directory comes from the constructor or the KEYSHARE_PROFILE_CACHE
    environment variable.
    """

    def __init__(self, directory: Optional[str] = None):
        self.directory = directory if directory is not None else os.environ.get(CACHE_ENV)
        self._mem: dict = {}
        self._lock = threading.Lock()

    def _key(self, theta, n, samples, seed, side_info):
        return ("mc", round(float(theta), 12), int(n), int(samples), int(seed), bool(side_info))

    def _path(self, key) -> Optional[str]:
        if not self.directory:
            return None
        _, theta, n, samples, seed, side = key
        name = f"profile_p{theta:.6g}_N{n}_s{samples}_seed{seed}_{'si' if side else 'marg'}.json"
        return os.path.join(self.directory, name)

    def monte_carlo(self, theta: float, n: int, num_samples: int, seed: int,
                    side_info: bool = True) -> EntropyProfile:
        key = self._key(theta, n, num_samples, seed, side_info)
        with self._lock:
            if key in self._mem:
                return self._mem[key]
        path = self._path(key)
        if path and os.path.exists(path):
            with open(path) as fh:
                prof = EntropyProfile.from_json(json.load(fh))
            with self._lock:
                self._mem[key] = prof
            return prof
        prof = entropy_profile_mc(theta, n, num_samples, seed, side_info=side_info)
        with self._lock:
            self._mem[key] = prof
        if path:
            os.makedirs(self.directory, exist_ok=True)
            tmp = path + ".tmp"
            with open(tmp, "w") as fh:
                json.dump(prof.to_json(), fh)
            os.replace(tmp, path)
        return prof


_default_cache = ProfileCache()


def default_cache() -> ProfileCache:
    return _default_cache
