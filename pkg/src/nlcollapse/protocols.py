"""Distributed computation of Boolean functions with shared randomness and boxes.

Level 0 guesses Bob's string; level k+1 runs level k three times, decodes by
majority and computes the majority's two cross products r_j*s_j with two
locally uniformized copies of the box. Everything here is computed two ways:
closed forms (``p0_exact``, ``p1_formula``) and enumerations/simulations of the
protocol itself (``p0_enumerate``, ``p1_enumerate``, ``enumerate_protocol``,
``run_protocol``).
"""
from __future__ import annotations

import itertools
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable

import numpy as np

from .boxes import BITS, BiasVector, NonlocalBox, bias_vector, locally_uniformize, require_valid

EXACT_MAX_LEVEL = 2
ENUMERATION_MAX_BITS = 20


def maj(a: int, b: int, c: int) -> int:
    return int(a + b + c >= 2)


# -- Boolean functions -------------------------------------------------------------

@dataclass(frozen=True)
class BooleanFunction:
    """f: {0,1}^n x {0,1}^m -> {0,1}; ``truth_table[X * 2**m + Y]``."""

    n: int
    m: int
    truth_table: str

    def __post_init__(self):
        if self.n < 0 or self.m < 1:
            raise ValueError("need n >= 0 and m >= 1")
        if len(self.truth_table) != 2 ** (self.n + self.m):
            raise ValueError(f"truth table must have length 2^(n+m) = {2 ** (self.n + self.m)}")
        if set(self.truth_table) - {"0", "1"}:
            raise ValueError("truth table must be a string of '0'/'1'")

    @classmethod
    def from_callable(cls, n: int, m: int, fn: Callable[[int, int], int]) -> "BooleanFunction":
        table = "".join(str(int(fn(X, Y)) & 1) for X in range(2**n) for Y in range(2**m))
        return cls(n, m, table)

    @classmethod
    def xor_all(cls, n: int, m: int) -> "BooleanFunction":
        return cls.from_callable(n, m, lambda X, Y: (bin(X).count("1") + bin(Y).count("1")) % 2)

    @classmethod
    def inner_product(cls, m: int) -> "BooleanFunction":
        return cls.from_callable(m, m, lambda X, Y: bin(X & Y).count("1") % 2)

    def __call__(self, X: int, Y: int) -> int:
        return 1 if self.truth_table[X * 2**self.m + Y] == "1" else 0

    def array(self) -> np.ndarray:
        return np.frombuffer(self.truth_table.encode(), dtype=np.uint8) - ord("0")

    def to_json(self) -> dict:
        return {"n": self.n, "m": self.m, "truth_table": self.truth_table}

    @classmethod
    def from_json(cls, data: dict) -> "BooleanFunction":
        try:
            return cls(int(data["n"]), int(data["m"]), str(data["truth_table"]))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"bad function JSON: {exc}") from None

    @classmethod
    def load(cls, path: str | Path) -> "BooleanFunction":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


# -- reports -------------------------------------------------------------------------

@dataclass(frozen=True)
class SuccessReport:
    probability: float
    mode: str = "exact"  # "exact" | "estimated"
    stderr: float | None = None
    seed: int | None = None
    samples: int | None = None
    shared_bits: int | None = None
    box_copies: int | None = None
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def bias(self) -> float:
        return 2.0 * self.probability - 1.0

    def to_json(self) -> dict:
        out = {
            "probability": self.probability,
            "bias": self.bias,
            "mode": self.mode,
            "stderr": self.stderr,
            "seed": self.seed,
            "samples": self.samples,
            "shared_bits": self.shared_bits,
            "box_copies": self.box_copies,
        }
        out.update(self.extra)
        return out


def _check_p0(p0: float) -> None:
    if not 0.0 <= p0 <= 1.0:
        raise ValueError(f"success probability {p0} outside [0, 1]")


# -- level 0 --------------------------------------------------------------------------

def p0_exact(m: int) -> SuccessReport:
    if m < 1:
        raise ValueError("m >= 1")
    return SuccessReport(0.5 + 2.0 ** -(m + 1))


def p0_enumerate(f: BooleanFunction, X: int) -> SuccessReport:
    """Run level 0 over every Z, r, r_B and every Y; return the worst Y.

    Exact rational arithmetic; also checks that Alice's bit is uniform.
    """
    n, m = f.n, f.m
    if n + m > ENUMERATION_MAX_BITS:
        raise ValueError(f"n+m={n + m} exceeds the enumeration bound {ENUMERATION_MAX_BITS}")
    if not 0 <= X < 2**n:
        raise ValueError(f"X={X} out of range for n={n}")

    weight = Fraction(1, 2 ** (m + 2))  # Z, r, r_B uniform
    worst = None
    for Y in range(2**m):
        target = f(X, Y)
        win = Fraction(0)
        alice_zero = Fraction(0)
        for Z, r, rB in itertools.product(range(2**m), BITS, BITS):
            a = f(X, Z) ^ r
            b = r if Y == Z else rB
            if a ^ b == target:
                win += weight
            if a == 0:
                alice_zero += weight
        if alice_zero != Fraction(1, 2):
            raise AssertionError(f"Alice's bit is not uniform: P(a=0|X={X}) = {alice_zero}")
        worst = win if worst is None else min(worst, win)
    return SuccessReport(float(worst), extra={"exact_fraction": str(worst)})


# -- level 1: closed form and oracle -------------------------------------------------

def p1_formula(p0: float, eta: BiasVector) -> SuccessReport:
    """One majority level applied to base success probability ``p0``."""
    _check_p0(p0)
    total = 0.0
    for al, be, ga, de, ep in itertools.product(BITS, repeat=5):
        k = al + be + ga
        sign = -1.0 if maj(al, be, ga) else 1.0
        boxes = eta.eta(de, be ^ ga ^ ep) * eta.eta(ep, al ^ be ^ de)
        total += p0 ** (3 - k) * (1.0 - p0) ** k * (1.0 + sign * boxes) / 8.0
    return SuccessReport(total)


def p1_enumerate(p0: float, box: NonlocalBox) -> SuccessReport:
    """Exact level-1 success probability by enumerating the protocol's events.

    Alice's three bits are uniform, each sub-run errs independently with
    probability 1-p0, and the two box copies are the locally uniformized box.
    Both values of f(X,Y) are enumerated and must agree.
    """
    _check_p0(p0)
    require_valid(box)
    tilde = locally_uniformize(box).table()
    err = (p0, 1.0 - p0)
    outcomes = [(a, b) for a in BITS for b in BITS]

    slices = []
    terms = 0
    for fval in BITS:
        total = 0.0
        for a_bits, e_bits in itertools.product(itertools.product(BITS, repeat=3), repeat=2):
            w = 0.125 * err[e_bits[0]] * err[e_bits[1]] * err[e_bits[2]]
            a1, a2, a3 = a_bits
            b1, b2, b3 = (ai ^ ei ^ fval for ai, ei in zip(a_bits, e_bits))
            r1, s1 = a1 ^ a2, b2 ^ b3
            r2, s2 = a2 ^ a3, b1 ^ b2
            ma, mb = maj(a1, a2, a3), maj(b1, b2, b3)
            for (x1, y1), (x2, y2) in itertools.product(outcomes, outcomes):
                terms += 1
                q = tilde[r1, s1, x1, y1] * tilde[r2, s2, x2, y2]
                if q == 0.0:
                    continue
                a_t = ma ^ x1 ^ x2
                b_t = mb ^ y1 ^ y2
                if a_t ^ b_t == fval:
                    total += w * q
        slices.append(total)

    if abs(slices[0] - slices[1]) > 1e-12:
        raise RuntimeError(f"success depends on f(X,Y): {slices[0]} vs {slices[1]}")
    return SuccessReport(float(slices[0]), extra={"terms": terms})


def maj_identity_check() -> bool:
    """Maj(a1^b1, a2^b2, a3^b3) = Maj(a) ^ Maj(b) ^ r1 s1 ^ r2 s2, over all 64 cases."""
    for a1, a2, a3, b1, b2, b3 in itertools.product(BITS, repeat=6):
        lhs = maj(a1 ^ b1, a2 ^ b2, a3 ^ b3)
        r1, s1, r2, s2 = a1 ^ a2, b2 ^ b3, a2 ^ a3, b1 ^ b2
        rhs = maj(a1, a2, a3) ^ maj(b1, b2, b3) ^ (r1 & s1) ^ (r2 & s2)
        if lhs != rhs:
            return False
    return True


def conditional_distribution(p0: float) -> dict[tuple[int, int, int], np.ndarray]:
    """P(r1=d, r2=e, s1=z, s2=t | e1, e2, e3) as arrays indexed [d, e, z, t]."""
    if not 0.5 < p0 < 1.0:
        raise ValueError("need 1/2 < p0 < 1")
    err = (p0, 1.0 - p0)
    out = {}
    for e_bits in itertools.product(BITS, repeat=3):
        joint = np.zeros((2, 2, 2, 2))
        pe = err[e_bits[0]] * err[e_bits[1]] * err[e_bits[2]]
        for a_bits in itertools.product(BITS, repeat=3):
            a1, a2, a3 = a_bits
            b1, b2, b3 = (ai ^ ei for ai, ei in zip(a_bits, e_bits))
            joint[a1 ^ a2, a2 ^ a3, b2 ^ b3, b1 ^ b2] += 0.125 * pe
        out[e_bits] = joint / pe
    return out


def conditional_distribution_check(p0: float, tol: float = 1e-12) -> bool:
    for (al, be, ga), cond in conditional_distribution(p0).items():
        for de, ep, ze, th in itertools.product(BITS, repeat=4):
            expected = 0.25 * (ze == be ^ ga ^ ep) * (th == al ^ be ^ de)
            if abs(cond[de, ep, ze, th] - expected) > tol:
                return False
    return True


# -- literal protocol, exhaustive tree enumeration -------------------------------------

@dataclass
class ResourceMeter:
    shared_bits: int = 0
    box_copies: int = 0
    local_bits: int = 0


class _TreeSource:
    """Replays a prefix of branch choices, then takes branch 0 at every new
    choice point. Records branch counts so the caller can visit siblings."""

    def __init__(self, box: NonlocalBox, prefix: list[int]):
        self.box = box
        self.prefix = prefix
        self.taken: list[int] = []
        self.widths: list[int] = []
        self.weight = 1.0
        self.meter = ResourceMeter()

    def _choose(self, options):
        d = len(self.taken)
        i = self.prefix[d] if d < len(self.prefix) else 0
        self.taken.append(i)
        self.widths.append(len(options))
        value, w = options[i]
        self.weight *= w
        return value

    def shared_bit(self) -> int:
        self.meter.shared_bits += 1
        return self._choose(((0, 0.5), (1, 0.5)))

    def local_bit(self) -> int:
        self.meter.local_bits += 1
        return self._choose(((0, 0.5), (1, 0.5)))

    def use_box(self, x: int, y: int) -> tuple[int, int]:
        self.meter.box_copies += 1
        opts = [((a, b), self.box.p(a, b, x, y)) for a in BITS for b in BITS]
        opts = [o for o in opts if o[1] > 0.0]
        return self._choose(opts)


def literal_protocol(level: int, f: BooleanFunction, X: int, Y: int, src) -> tuple[int, int]:
    """One execution of the level-``level`` protocol; returns (a, b).

    ``src`` supplies ``shared_bit()``, ``local_bit()`` and ``use_box(x, y)``.
    """
    if level == 0:
        Z = 0
        for _ in range(f.m):
            Z = 2 * Z + src.shared_bit()
        r = src.shared_bit()
        a = f(X, Z) ^ r
        b = r if Y == Z else src.local_bit()
        return a, b

    (a1, b1), (a2, b2), (a3, b3) = (literal_protocol(level - 1, f, X, Y, src) for _ in range(3))
    r1, s1 = a1 ^ a2, b2 ^ b3
    r2, s2 = a2 ^ a3, b1 ^ b2
    a_t, b_t = maj(a1, a2, a3), maj(b1, b2, b3)
    for r, s in ((r1, s1), (r2, s2)):
        mask = src.shared_bit()
        ap, bp = src.use_box(r, s)
        a_t ^= ap ^ mask
        b_t ^= bp ^ mask
    return a_t, b_t


def enumerate_protocol(level: int, f: BooleanFunction, X: int, Y: int, box: NonlocalBox,
                       max_leaves: int = 2_000_000) -> SuccessReport:
    """Exact success probability by walking every branch of the randomness
    tree (shared bits, Bob's private bit, box outcomes). Small cases only."""
    require_valid(box)
    target = f(X, Y)
    win = 0.0
    total = 0.0
    leaves = 0
    meter = None
    stack: list[list[int]] = [[]]
    while stack:
        prefix = stack.pop()
        src = _TreeSource(box, prefix)
        a, b = literal_protocol(level, f, X, Y, src)
        leaves += 1
        if leaves > max_leaves:
            raise ValueError(f"more than {max_leaves} leaves; use run_protocol instead")
        total += src.weight
        if a ^ b == target:
            win += src.weight
        if meter is None:
            meter = src.meter
        for depth in range(len(prefix), len(src.taken)):
            for alt in range(1, src.widths[depth]):
                stack.append(src.taken[:depth] + [alt])
    if abs(total - 1.0) > 1e-9:
        raise AssertionError(f"branch weights sum to {total}")
    return SuccessReport(win, shared_bits=meter.shared_bits, box_copies=meter.box_copies,
                         extra={"leaves": leaves})


# -- vectorized sampling ----------------------------------------------------------------

def _sample_box(cum: np.ndarray, x: np.ndarray, y: np.ndarray, rng: np.random.Generator):
    u = rng.random(x.shape[0])
    rows = cum[2 * x + y]
    out = (u[:, None] >= rows[:, :3]).sum(axis=1).astype(np.uint8)
    return out >> 1, out & 1


def _sample_protocol(level, f, table, X, Y, cum, rng, n, meter):
    if level == 0:
        m = f.m
        Z = rng.integers(0, 2**m, size=n)
        meter.shared_bits += m
        r = rng.integers(0, 2, size=n, dtype=np.uint8)
        meter.shared_bits += 1
        rB = rng.integers(0, 2, size=n, dtype=np.uint8)
        a = table[X * 2**m + Z] ^ r
        b = np.where(Z == Y, r, rB)
        return a, b

    (a1, b1), (a2, b2), (a3, b3) = (
        _sample_protocol(level - 1, f, table, X, Y, cum, rng, n, meter) for _ in range(3)
    )
    a_t = ((a1 + a2 + a3) >= 2).astype(np.uint8)
    b_t = ((b1 + b2 + b3) >= 2).astype(np.uint8)
    for r, s in ((a1 ^ a2, b2 ^ b3), (a2 ^ a3, b1 ^ b2)):
        mask = rng.integers(0, 2, size=n, dtype=np.uint8)
        meter.shared_bits += 1
        ap, bp = _sample_box(cum, r, s, rng)
        meter.box_copies += 1
        a_t ^= ap ^ mask
        b_t ^= bp ^ mask
    return a_t, b_t


def sample_protocol(level: int, f: BooleanFunction, X: int, Y: int, box: NonlocalBox,
                    samples: int, seed: int, chunk: int = 250_000) -> tuple[int, ResourceMeter]:
    """Number of successful runs out of ``samples`` and per-run resource usage."""
    rng = np.random.default_rng(seed)
    table = f.array()
    probs = np.asarray(box.probs).reshape(4, 4)
    cum = np.cumsum(probs / probs.sum(axis=1, keepdims=True), axis=1)
    target = f(X, Y)
    wins = 0
    meter = None
    done = 0
    while done < samples:
        n = min(chunk, samples - done)
        m = ResourceMeter()
        a, b = _sample_protocol(level, f, table, X, Y, cum, rng, n, m)
        wins += int(np.count_nonzero((a ^ b) == target))
        meter = meter or m
        done += n
    return wins, meter


# -- configured runs ---------------------------------------------------------------------

@dataclass(frozen=True)
class ProtocolConfig:
    level: int
    input_length: int
    box: NonlocalBox
    mode: str = "exact"  # "exact" | "monte_carlo"
    samples: int | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.level < 0 or self.input_length < 1:
            raise ValueError("need level >= 0 and input_length >= 1")
        if self.mode not in ("exact", "monte_carlo"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "exact" and self.level > EXACT_MAX_LEVEL:
            raise ValueError(f"exact mode supports levels up to {EXACT_MAX_LEVEL}")
        if self.mode == "monte_carlo":
            if not self.samples or self.samples < 1:
                raise ValueError("monte_carlo mode needs samples >= 1")
            if self.seed is None:
                raise ValueError("monte_carlo mode needs an explicit seed")
        require_valid(self.box)


def exact_success(level: int, m: int, box: NonlocalBox) -> float:
    """Compose the one-level oracle: p_{k+1} = p1_enumerate(p_k)."""
    p = p0_exact(m).probability
    for _ in range(level):
        p = p1_enumerate(p, box).probability
    return p


def run_protocol(config: ProtocolConfig, f: BooleanFunction, X: int = 0, Y: int = 0) -> SuccessReport:
    if f.m != config.input_length:
        raise ValueError(f"function has m={f.m}, config has input_length={config.input_length}")
    if not (0 <= X < 2**f.n and 0 <= Y < 2**f.m):
        raise ValueError("X or Y out of range")

    if config.mode == "exact":
        p = exact_success(config.level, config.input_length, config.box)
        # one instrumented execution for the resource tally
        _, meter = sample_protocol(config.level, f, X, Y, config.box, samples=1, seed=0)
        return SuccessReport(p, mode="exact", shared_bits=meter.shared_bits, box_copies=meter.box_copies)

    wins, meter = sample_protocol(config.level, f, X, Y, config.box, config.samples, config.seed)
    p = wins / config.samples
    stderr = math.sqrt(max(p * (1.0 - p), 0.0) / config.samples)
    return SuccessReport(p, mode="estimated", stderr=stderr, seed=config.seed, samples=config.samples,
                         shared_bits=meter.shared_bits, box_copies=meter.box_copies)
