"""On-shell root finding: damped Newton iteration on the logarithmic Bethe
system, best-effort state enumeration, and continuation in the twist."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (CollisionError, Gl3Error, JacobianSingular, NoConvergence,
                     PathCollision, PoleError, ZeroArgError)
from .kernel import f, pole_tol
from .model import (BetheState, ModelFunctions, RootConfig, Twist,
                    gaudin_matrix, phi_log)

TWO_PI = 2.0 * math.pi


@dataclass
class SolveRequest:
    model: ModelFunctions
    a: int
    b: int
    twist: Twist = Twist.identity()
    mode_numbers: Optional[Sequence[int]] = None
    seed_roots: Optional[RootConfig] = None
    max_iter: int = 60
    tol: float = 1e-12
    rng_seed: int = 0

    def __post_init__(self):
        if self.a + self.b < 1:
            raise ValueError("need at least one root to solve for")
        if self.tol <= 0:
            raise ValueError("tolerance must be positive")
        if self.mode_numbers is not None:
            self.mode_numbers = tuple(int(n) for n in self.mode_numbers)
            if len(self.mode_numbers) != self.a + self.b:
                raise ValueError("mode_numbers must have length a + b")


def _twist_offsets(a: int, b: int, twist: Twist) -> np.ndarray:
    off_u = cmath.log(twist.k2) - cmath.log(twist.k1)
    off_v = cmath.log(twist.k2) - cmath.log(twist.k3)
    return np.array([off_u] * a + [off_v] * b, dtype=complex)


def _check_collisions(x: np.ndarray, a: int, c: complex) -> None:
    """Reject coincidences that break the log system or its Jacobian."""
    tol = pole_tol(c)
    u, v = x[:a], x[a:]
    for s, name in ((u, "u"), (v, "v")):
        for j in range(len(s)):
            for k in range(j + 1, len(s)):
                d = s[j] - s[k]
                if abs(d) <= tol:
                    raise CollisionError(f"{name}_{j} = {name}_{k}")
                if min(abs(d - c), abs(d + c)) <= tol:
                    raise CollisionError(f"{name}_{j} = {name}_{k} +- c")
    for uj in u:
        for vk in v:
            d = vk - uj
            if abs(d) <= tol:
                raise CollisionError("u-root collides with v-root")
            if abs(d + c) <= tol:
                raise CollisionError("v-root collides with u-root - c")


def _residual(x: np.ndarray, a: int, b: int, model: ModelFunctions,
              offsets: np.ndarray, modes: Optional[np.ndarray]) -> tuple:
    """Residual of the log system; snaps to the nearest integer branch when
    modes are not pinned.  Returns (residual vector, mode numbers used)."""
    cfg = RootConfig(u=tuple(x[:a]), v=tuple(x[a:]))
    delta = phi_log(cfg, model) - offsets
    if modes is None:
        used = np.rint(delta.imag / TWO_PI).astype(int)
    else:
        used = modes
    return delta - 2j * math.pi * used, used


def _jacobian(x: np.ndarray, a: int, model: ModelFunctions) -> np.ndarray:
    cfg = RootConfig(u=tuple(x[:a]), v=tuple(x[a:]))
    m = gaudin_matrix(cfg, model)
    jac = np.empty_like(m)
    jac[:, :a] = m[:, :a] / (-model.c)
    jac[:, a:] = m[:, a:] / model.c
    return jac


def _newton(model: ModelFunctions, a: int, b: int, twist: Twist,
            x0: np.ndarray, tol: float, max_iter: int,
            modes: Optional[Sequence[int]] = None) -> tuple:
    """Damped Newton on the log system.  Returns (roots, modes, residual).

    Roots escaping far outside the seeding disk are rejected: the residual
    also vanishes as roots run off to infinity (descendant towers), which is
    not a finite-root solution.
    """
    offsets = _twist_offsets(a, b, twist)
    pinned = None if modes is None else np.asarray(modes, dtype=int)
    centroid = 0.0 + 0.0j
    if model.inhomogeneities:
        centroid = sum(model.inhomogeneities) / len(model.inhomogeneities)
    r_max = 3.0 * _seed_scale(model)
    x = np.asarray(x0, dtype=complex).copy()
    _check_collisions(x, a, model.c)
    res, used = _residual(x, a, b, model, offsets, pinned)
    err = float(np.max(np.abs(res)))
    for _ in range(max_iter):
        if err <= tol:
            if np.max(np.abs(x - centroid)) > r_max:
                raise NoConvergence("roots escaped towards infinity")
            return x, tuple(int(n) for n in used), err
        try:
            step = np.linalg.solve(_jacobian(x, a, model), res)
        except np.linalg.LinAlgError as exc:
            raise JacobianSingular(str(exc)) from exc
        improved = False
        for halving in range(31):
            x_try = x - step * (0.5 ** halving)
            if np.max(np.abs(x_try - centroid)) > 3.0 * r_max:
                continue
            try:
                _check_collisions(x_try, a, model.c)
                res_try, used_try = _residual(x_try, a, b, model, offsets, pinned)
            except (PoleError, ZeroArgError, CollisionError):
                continue
            err_try = float(np.max(np.abs(res_try)))
            if err_try < err:
                x, res, used, err = x_try, res_try, used_try, err_try
                improved = True
                break
        if not improved:
            raise NoConvergence(f"Newton stalled at residual {err:.3e}")
    if err <= tol and np.max(np.abs(x - centroid)) <= r_max:
        return x, tuple(int(n) for n in used), err
    raise NoConvergence(f"residual {err:.3e} after {max_iter} iterations")


def _seed_scale(model: ModelFunctions) -> float:
    xi_max = 0.0
    if model.inhomogeneities:
        xi_max = max(abs(x) for x in model.inhomogeneities)
    return 3.0 * max(1.0, abs(model.c)) * (1.0 + xi_max)


def _binding_seed(u1: complex, u2: complex, c: complex):
    """Companion v-root that balances the scattering of a u-pair when the
    third vacuum ratio is trivial: solves f(v, u1) = f(u2, u1) / f(u1, u2)."""
    try:
        k = f(u2, u1, c) / f(u1, u2, c)
    except PoleError:
        return None
    if abs(k - 1.0) < 1e-12:
        return None
    return u1 + c / (k - 1.0)


def _composite_seeds(model: ModelFunctions, a: int, b: int,
                     magnon_roots: Sequence[complex], cap: int = 120) -> list:
    """Seeds built on single-excitation roots: u-tuples drawn from the pool,
    v-roots at pair-binding positions.  Captures the composite states that
    chains with trivial third vacuum ratio carry in higher sectors."""
    from itertools import combinations, permutations
    c = model.c
    seeds: list = []
    pool = list(magnon_roots)
    if len(pool) < a or a < 2:
        return seeds
    for combo in combinations(range(len(pool)), a):
        u = [pool[i] for i in combo]
        if b == 0:
            seeds.append(np.array(u, dtype=complex))
            continue
        binds = [vb for (p, q) in permutations(range(a), 2)
                 if (vb := _binding_seed(u[p], u[q], c)) is not None]
        for lead in range(len(binds)):
            v = [binds[lead]]
            for cand in binds[lead + 1:] + binds[:lead]:
                if len(v) == b:
                    break
                if all(abs(cand - x) > 1e-8 for x in v):
                    v.append(cand)
            if len(v) == b:
                seeds.append(np.array(u + v, dtype=complex))
        if len(seeds) >= cap:
            break
    return seeds[:cap]


def _polynomial_magnon_seeds(model: ModelFunctions) -> list:
    """For chain models the single-excitation condition r1(u) = 1 is a
    polynomial equation; its full root set makes exact seeds."""
    xi = model.inhomogeneities
    if not xi:
        return []
    c = model.c
    shifted = np.poly([x - c for x in xi])
    plain = np.poly(np.array(xi, dtype=complex))
    diff = np.asarray(shifted - plain, dtype=complex)
    lead = np.nonzero(np.abs(diff) > 1e-13 * max(1.0, np.abs(diff).max()))[0]
    if lead.size == 0:
        return []
    roots = np.roots(diff[lead[0]:])
    return [np.array([r], dtype=complex) for r in roots]


def _seed_pool(model: ModelFunctions, a: int, b: int, n_random: int,
               rng: np.random.Generator,
               magnon_roots: Sequence[complex] = ()) -> list:
    """Random disk seeds, deterministic string-like patterns, polynomial
    single-excitation seeds for chains, and (when a pool of single-excitation
    roots is supplied) composite patterns."""
    c = model.c
    centroid = 0.0 + 0.0j
    if model.inhomogeneities:
        centroid = sum(model.inhomogeneities) / len(model.inhomogeneities)
    seeds = []
    if a == 1 and b == 0:
        seeds.extend(_polynomial_magnon_seeds(model))
    if magnon_roots:
        seeds.extend(_composite_seeds(model, a, b, magnon_roots))
    base = centroid - 0.5 * c
    for spread in (0.5, 1.0):
        for shift in (-0.5, 0.0, 0.5):
            u = [base + 1j * c * (spread * (j - 0.5 * (a - 1)) + shift)
                 + 0.07 * c * (j + 1) for j in range(a)]
            v = [base + 0.23 * c + 1j * c * (spread * (j - 0.5 * (b - 1)) - shift)
                 - 0.05 * c * (j + 1) for j in range(b)]
            seeds.append(np.array(u + v, dtype=complex))
    radius = _seed_scale(model)
    for _ in range(n_random):
        pts = centroid + radius * np.sqrt(rng.uniform(0, 1, a + b)) * np.exp(
            2j * math.pi * rng.uniform(0, 1, a + b))
        seeds.append(pts.astype(complex))
    return seeds


def solve_bethe(req: SolveRequest) -> BetheState:
    """Solve the (twisted) Bethe system for one state.

    Seeded either by explicit roots or by trying a deterministic seed pool;
    when mode numbers are given the Newton target is pinned to them,
    otherwise the branch is snapped to the nearest integers each step.
    """
    model, a, b = req.model, req.a, req.b
    if req.seed_roots is not None:
        x0 = req.seed_roots.as_array()
        if x0.size != a + b:
            raise ValueError("seed roots do not match the requested sector")
        x, modes, err = _newton(model, a, b, req.twist, x0, req.tol,
                                req.max_iter, req.mode_numbers)
        return BetheState(RootConfig(tuple(x[:a]), tuple(x[a:])), req.twist,
                          modes, err, model)
    rng = np.random.default_rng(req.rng_seed)
    last: Exception = NoConvergence("no seeds tried")
    for x0 in _seed_pool(model, a, b, 40, rng):
        try:
            x, modes, err = _newton(model, a, b, req.twist, x0, req.tol,
                                    req.max_iter, req.mode_numbers)
        except Gl3Error as exc:
            last = exc
            continue
        return BetheState(RootConfig(tuple(x[:a]), tuple(x[a:])), req.twist,
                          modes, err, model)
    raise NoConvergence(f"all seeds failed; last error: {last}")


def _sorted_roots(values: Sequence[complex]) -> np.ndarray:
    arr = np.asarray(values, dtype=complex)
    order = np.lexsort((arr.imag.round(9), arr.real.round(9)))
    return arr[order]


def _same_multiset(xs: Sequence[complex], ys: Sequence[complex],
                   tol: float) -> bool:
    if len(xs) != len(ys):
        return False
    if not xs:
        return True
    diff = _sorted_roots(xs) - _sorted_roots(ys)
    return float(np.max(np.abs(diff))) < tol


def states_equal(s1: RootConfig, s2: RootConfig, tol: float = 1e-6) -> bool:
    """Unordered-multiset comparison of two root configurations."""
    return (_same_multiset(s1.u, s2.u, tol)
            and _same_multiset(s1.v, s2.v, tol))


def distinct_states(model: ModelFunctions, a: int, b: int,
                    twist: Twist = Twist.identity(), n_seeds: int = 48,
                    tol: float = 1e-12, rng_seed: int = 0) -> list:
    """Best-effort enumeration of distinct on-shell states in sector (a, b).

    Converged states are deduplicated as unordered root multisets; no claim
    of completeness is made.  An empty list means no seed converged, which is
    the honest outcome for sectors without finite-root solutions.
    """
    if n_seeds < 1:
        raise ValueError("n_seeds must be >= 1")
    rng = np.random.default_rng(rng_seed)
    magnons: tuple = ()
    if a >= 2:
        # single-excitation roots feed the composite seed patterns that
        # higher sectors of trivial-r3 chains are built from
        pool = distinct_states(model, 1, 0, twist=twist,
                               n_seeds=max(24, n_seeds // 2), tol=tol,
                               rng_seed=rng_seed + 1)
        magnons = tuple(st.u[0] for st in pool)
    found: list = []
    for x0 in _seed_pool(model, a, b, n_seeds, rng, magnons):
        try:
            x, modes, err = _newton(model, a, b, twist, x0, tol, 60)
        except Gl3Error:
            continue
        cfg = RootConfig(tuple(x[:a]), tuple(x[a:]))
        if any(states_equal(cfg, st.roots) for st in found):
            continue
        found.append(BetheState(cfg, twist, modes, err, model))
    found.sort(key=lambda st: tuple(
        (round(z.real, 8), round(z.imag, 8)) for z in
        tuple(_sorted_roots(st.u)) + tuple(_sorted_roots(st.v))))
    return found


def continue_in_twist(state: BetheState, target: Twist, steps: int = 8,
                      tol: float = 1e-12) -> BetheState:
    """Follow a state along a straight twist segment with Newton polish.

    Mode numbers are preserved by continuity (small steps keep the branch);
    root coincidences at intermediate twists raise PathCollision.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    src = state.twist
    if max(abs(src.k1 - target.k1), abs(src.k2 - target.k2),
           abs(src.k3 - target.k3)) < 1e-15:
        return state
    model, a, b = state.model, state.a, state.b
    x = state.roots.as_array()
    modes, err = state.mode_numbers, state.residual
    for step in range(1, steps + 1):
        lam = step / steps
        tw = Twist(k1=src.k1 + lam * (target.k1 - src.k1),
                   k2=src.k2 + lam * (target.k2 - src.k2),
                   k3=src.k3 + lam * (target.k3 - src.k3))
        try:
            x, modes, err = _newton(model, a, b, tw, x, tol, 60)
        except CollisionError as exc:
            raise PathCollision(f"collision at twist step {step}/{steps}: {exc}")
    return BetheState(RootConfig(tuple(x[:a]), tuple(x[a:])), target, modes,
                      err, model)
