"""Bias recursion mu -> F(mu) of the triple-majority protocol and its fixed points.

With A = (eta00+eta01+eta10+eta11)^2 and B = 2 eta00^2 + 4 eta01 eta10 + 2 eta11^2,
one level of the protocol maps the bias mu to

    F(mu) = mu/16 * (A + B - mu^2 (A - B)).

When A + B > 16 the origin is repulsive and the iteration is pulled to
mu* = sqrt((A+B-16)/(A-B)) > 0, which is what makes the error bounded
independently of the function being computed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .boxes import ALL_RELABELINGS, BiasVector, NonlocalBox, Relabeling, bias_vector

COLLAPSE_THRESHOLD = 16.0
DEFAULT_MAX_STEPS = 10**6


@dataclass(frozen=True)
class RecursionParams:
    A: float
    B: float
    collapses: bool
    mu_star: float | None = None
    mu_max: float | None = None

    @classmethod
    def from_coefficients(cls, A: float, B: float) -> "RecursionParams":
        # Equality A + B == 16 counts as non-collapsing.
        collapses = A + B > COLLAPSE_THRESHOLD
        mu_star = mu_max = None
        if collapses:
            diff = A - B  # > 16 - 2B >= 0 whenever A + B > 16
            mu_star = math.sqrt((A + B - COLLAPSE_THRESHOLD) / diff)
            mu_max = math.sqrt((A + B) / (3.0 * diff))
        return cls(A, B, collapses, mu_star, mu_max)

    @property
    def A_plus_B(self) -> float:
        return self.A + self.B

    def fixed_points(self) -> tuple[float, ...]:
        if self.collapses:
            return (-self.mu_star, 0.0, self.mu_star)
        return (0.0,)

    def derivative(self, mu: float) -> float:
        return (self.A + self.B - 3.0 * mu * mu * (self.A - self.B)) / 16.0

    def to_json(self) -> dict:
        return {
            "A": self.A,
            "B": self.B,
            "A_plus_B": self.A_plus_B,
            "collapses": self.collapses,
            "mu_star": self.mu_star,
            "mu_max": self.mu_max,
        }


def coefficients(eta: BiasVector) -> tuple[float, float]:
    e00, e01, e10, e11 = eta
    A = (e00 + e01 + e10 + e11) ** 2
    B = 2.0 * e00 * e00 + 4.0 * e01 * e10 + 2.0 * e11 * e11
    return A, B


def recursion_params(eta: BiasVector) -> RecursionParams:
    return RecursionParams.from_coefficients(*coefficients(eta))


def map_F(mu: float, params: RecursionParams) -> float:
    return mu / 16.0 * (params.A + params.B - mu * mu * (params.A - params.B))


@dataclass(frozen=True)
class BoxClassification:
    """Collapse verdict for a concrete box.

    ``params`` belong to the local relabeling of the box with the largest
    A + B; ``direct`` are the coefficients of the box as given.
    """

    eta: BiasVector
    direct: RecursionParams
    params: RecursionParams
    relabeling: Relabeling
    oriented_eta: BiasVector

    @property
    def collapses(self) -> bool:
        return self.params.collapses

    def to_json(self) -> dict:
        out = {"eta": list(self.eta)}
        out.update(self.params.to_json())
        out["relabeling"] = self.relabeling.label()
        out["oriented_eta"] = list(self.oriented_eta)
        out["direct"] = self.direct.to_json()
        return out


_ACTIONS = None


def _relabel_actions():
    global _ACTIONS
    if _ACTIONS is None:
        src, sgn = zip(*(rl.bias_action() for rl in ALL_RELABELINGS))
        _ACTIONS = (np.array(src), np.array(sgn, dtype=float))
    return _ACTIONS


def best_relabeling(eta: BiasVector) -> tuple[Relabeling, BiasVector]:
    """Local relabeling whose bias vector has the largest A + B (identity on ties)."""
    src, sgn = _relabel_actions()
    etas = sgn * np.asarray(eta.as_tuple())[src]
    A = etas.sum(axis=1) ** 2
    B = 2.0 * etas[:, 0] ** 2 + 4.0 * etas[:, 1] * etas[:, 2] + 2.0 * etas[:, 3] ** 2
    i = int(np.argmax(A + B))
    if A[i] + B[i] <= A[0] + B[0] + 1e-12:
        i = 0  # ALL_RELABELINGS[0] is the identity
    return ALL_RELABELINGS[i], BiasVector(*(float(e) for e in etas[i]))


def classify_box(box: NonlocalBox) -> BoxClassification:
    eta = bias_vector(box)
    rl, oriented = best_relabeling(eta)
    return BoxClassification(eta, recursion_params(eta), recursion_params(oriented), rl, oriented)


# -- iteration -----------------------------------------------------------------

@dataclass(frozen=True)
class IterationTrace:
    mus: tuple[float, ...]
    converged: bool
    limit: float | None
    clamps: int = 0

    @property
    def steps(self) -> int:
        return len(self.mus) - 1

    @property
    def final(self) -> float:
        return self.mus[-1]

    def to_json(self) -> dict:
        return {
            "steps": self.steps,
            "final": self.final,
            "converged": self.converged,
            "limit": self.limit,
            "clamps": self.clamps,
        }


def _target(params: RecursionParams, mu0: float) -> float:
    if params.collapses and mu0 != 0.0:
        return math.copysign(params.mu_star, mu0)
    return 0.0


def iterate(
    mu0: float,
    params: RecursionParams,
    tol: float = 1e-12,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> IterationTrace:
    """Apply F from ``mu0`` until the iterate settles at its attracting fixed
    point (mu* in the collapsing case, 0 otherwise).

    Stops when the step is below ``tol * max(1, |mu|)`` and the iterate is
    within ``tol`` of the nearest fixed point. Exhausting ``max_steps`` is
    reported through ``converged=False``.
    """
    if not -1.0 <= mu0 <= 1.0:
        raise ValueError(f"mu0={mu0} outside [-1, 1]")
    if tol <= 0:
        raise ValueError("tol must be positive")

    target = _target(params, mu0)
    fixed = params.fixed_points()
    mus = [mu0]
    clamps = 0
    mu = mu0
    for _ in range(max_steps):
        nxt = map_F(mu, params)
        if nxt > 1.0 or nxt < -1.0:
            clamps += 1
            nxt = max(-1.0, min(1.0, nxt))
        mus.append(nxt)
        step = abs(nxt - mu)
        mu = nxt
        nearest = min(abs(mu - f) for f in fixed)
        if (step < tol * max(1.0, abs(mu)) and nearest < tol) or step == 0.0:
            break
    converged = abs(mu - target) < tol
    return IterationTrace(tuple(mus), converged, target if converged else None, clamps)


def steps_to_target(mu0: float, target: float, params: RecursionParams, max_steps: int = DEFAULT_MAX_STEPS) -> int:
    """Smallest k with F^k(mu0) >= target."""
    if not params.collapses:
        raise ValueError("steps_to_target needs a collapsing box (A + B > 16)")
    if not (0.0 < mu0 <= target < params.mu_star):
        raise ValueError(f"need 0 < mu0 <= target < mu*={params.mu_star}, got mu0={mu0}, target={target}")
    mu, k = mu0, 0
    while mu < target:
        mu = map_F(mu, params)
        k += 1
        if k > max_steps:
            raise RuntimeError(f"target not reached in {max_steps} steps")
    return k


def resource_count(k: int, m: int) -> tuple[int, int]:
    """(shared random bits, box copies) used by the level-k protocol on m-bit inputs."""
    if k < 0 or m < 1:
        raise ValueError("need k >= 0 and m >= 1")
    if k == 0:
        return m + 1, 0
    return 3**k * (m + 2) - 1, 3**k - 1
