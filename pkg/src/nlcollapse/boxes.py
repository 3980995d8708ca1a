"""Two-party binary nonlocal boxes.

A box is the conditional distribution P(a, b | x, y) with x, y, a, b in {0, 1}.
Entries are stored flat in the order ``8*x + 4*y + 2*a + b``; every file format
in the package uses the same order.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

DEFAULT_TOL = 1e-9

BITS = (0, 1)
IO = tuple(itertools.product(BITS, repeat=4))  # (x, y, a, b) in canonical order


class BoxFormatError(ValueError):
    """Raised for box data that cannot even be represented (length, NaN, inf)."""


class InvalidBoxError(ValueError):
    """Raised when a box fails validation where a valid box is required."""

    def __init__(self, report: "ValidationReport"):
        self.report = report
        super().__init__(f"invalid box: {report.summary()}")


def index(x: int, y: int, a: int, b: int) -> int:
    return 8 * x + 4 * y + 2 * a + b


def _check_probs(probs: Iterable[float]) -> tuple[float, ...]:
    values = tuple(float(p) for p in probs)
    if len(values) != 16:
        raise BoxFormatError(f"a box has 16 entries, got {len(values)}")
    for i, p in enumerate(values):
        if not math.isfinite(p):
            raise BoxFormatError(f"non-finite entry {p!r} at index {i}")
    return values


@dataclass(frozen=True)
class NonlocalBox:
    """Immutable P(a,b|x,y). Construction only checks shape and finiteness;
    use :func:`validate` for the probabilistic constraints."""

    probs: tuple[float, ...]
    name: str | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "probs", _check_probs(self.probs))

    @classmethod
    def from_function(cls, fn, name: str | None = None) -> "NonlocalBox":
        """Build from ``fn(x, y, a, b) -> probability``."""
        return cls(tuple(fn(x, y, a, b) for x, y, a, b in IO), name=name)

    @classmethod
    def from_array(cls, arr, name: str | None = None) -> "NonlocalBox":
        arr = np.asarray(arr, dtype=float)
        return cls(tuple(arr.reshape(16)), name=name)

    def p(self, a: int, b: int, x: int, y: int) -> float:
        """P(a, b | x, y)."""
        return self.probs[index(x, y, a, b)]

    def table(self) -> np.ndarray:
        """Read-only array indexed ``[x, y, a, b]``."""
        arr = np.array(self.probs, dtype=float).reshape(2, 2, 2, 2)
        arr.flags.writeable = False
        return arr

    def to_json(self) -> dict:
        out = {"probs": list(self.probs)}
        if self.name:
            out["name"] = self.name
        return out


@dataclass(frozen=True)
class BiasVector:
    eta00: float
    eta01: float
    eta10: float
    eta11: float

    def __post_init__(self):
        for v in self.as_tuple():
            if not -1.0 - 1e-12 <= v <= 1.0 + 1e-12:
                raise ValueError(f"bias {v} outside [-1, 1]")

    def eta(self, x: int, y: int) -> float:
        return self.as_tuple()[2 * x + y]

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.eta00, self.eta01, self.eta10, self.eta11)

    def __iter__(self):
        return iter(self.as_tuple())


# -- validation ---------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    kind: str  # "normalization" | "nonnegativity" | "nonsignalling"
    constraint: str
    residual: float


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def summary(self) -> str:
        if self.ok:
            return "valid"
        return "; ".join(f"{v.constraint} (residual {v.residual:.3g})" for v in self.violations)

    def to_json(self) -> dict:
        return {
            "valid": self.ok,
            "violations": [
                {"kind": v.kind, "constraint": v.constraint, "residual": v.residual}
                for v in self.violations
            ],
        }


def validate(box: NonlocalBox | Sequence[float], tol: float = DEFAULT_TOL) -> ValidationReport:
    """Check normalization, non-negativity and the non-signalling conditions.

    Residuals are signed differences; a violation is recorded when its
    magnitude exceeds ``tol``. Raises :class:`BoxFormatError` for non-finite
    input, naming the offending index.
    """
    if not isinstance(box, NonlocalBox):
        box = NonlocalBox(tuple(box))
    P = box.table()
    found: list[Violation] = []

    for i, p in enumerate(box.probs):
        if p < -tol:
            x, y, a, b = IO[i]
            found.append(Violation("nonnegativity", f"P({a},{b}|{x},{y}) >= 0", p))

    for x, y in itertools.product(BITS, BITS):
        r = float(P[x, y].sum()) - 1.0
        if abs(r) > tol:
            found.append(Violation("normalization", f"sum_ab P(a,b|{x},{y}) = 1", r))

    # Alice's marginal must not depend on y, Bob's must not depend on x.
    for x, a in itertools.product(BITS, BITS):
        r = float(P[x, 0, a, :].sum() - P[x, 1, a, :].sum())
        if abs(r) > tol:
            found.append(Violation("nonsignalling", f"P(a={a}|x={x}) same for y=0,1", r))
    for y, b in itertools.product(BITS, BITS):
        r = float(P[0, y, :, b].sum() - P[1, y, :, b].sum())
        if abs(r) > tol:
            found.append(Violation("nonsignalling", f"P(b={b}|y={y}) same for x=0,1", r))

    return ValidationReport(tuple(found))


def require_valid(box: NonlocalBox, tol: float = DEFAULT_TOL) -> NonlocalBox:
    report = validate(box, tol)
    if not report.ok:
        raise InvalidBoxError(report)
    return box


# -- named boxes ----------------------------------------------------------------

_NAMED = {
    "PR": lambda x, y, a, b: 0.5 * ((a ^ b) == x * y),
    "PRprime": lambda x, y, a, b: 0.5 * ((a ^ b) == (x ^ 1) * (y ^ 1)),
    "I": lambda x, y, a, b: 0.25,
    "SR": lambda x, y, a, b: 0.5 * (a == b),
    "P0": lambda x, y, a, b: float(a == 0 and b == 0),
    "P1": lambda x, y, a, b: float(a == 1 and b == 1),
}
_ALIASES = {"PR'": "PRprime", "PRP": "PRprime"}

NAMED_BOXES = tuple(_NAMED)


def named_box(name: str) -> NonlocalBox:
    key = _ALIASES.get(name, name)
    try:
        fn = _NAMED[key]
    except KeyError:
        raise KeyError(f"unknown box {name!r}; choose from {', '.join(NAMED_BOXES)}") from None
    return NonlocalBox.from_function(fn, name=key)


# -- transformations ------------------------------------------------------------

def mix(boxes: Sequence[NonlocalBox], weights: Sequence[float], tol: float = DEFAULT_TOL) -> NonlocalBox:
    """Convex combination of valid boxes."""
    if len(boxes) != len(weights) or not boxes:
        raise ValueError("need one weight per box")
    w = np.asarray(weights, dtype=float)
    if np.any(w < -tol):
        raise ValueError(f"negative weight in {list(weights)}")
    if abs(w.sum() - 1.0) > tol:
        raise ValueError(f"weights sum to {w.sum()}, not 1")
    for bx in boxes:
        require_valid(bx, tol)
    arr = sum(wi * np.asarray(bx.probs) for wi, bx in zip(w, boxes))
    return NonlocalBox(tuple(arr))


def bias_vector(box: NonlocalBox) -> BiasVector:
    """eta_xy = 2 P(a xor b = xy | x, y) - 1."""
    etas = []
    for x, y in itertools.product(BITS, BITS):
        win = sum(box.p(c, c ^ (x * y), x, y) for c in BITS)
        etas.append(2.0 * win - 1.0)
    return BiasVector(*etas)


def locally_uniformize(box: NonlocalBox) -> NonlocalBox:
    """Average the box with its both-outputs-flipped copy (a shared-bit mask)."""
    return NonlocalBox.from_function(
        lambda x, y, a, b: 0.5 * (box.p(a, b, x, y) + box.p(a ^ 1, b ^ 1, x, y))
    )


def marginals(box: NonlocalBox) -> dict[str, float]:
    """Alice's P(a|x,y) and Bob's P(b|x,y) for every context, keyed by label."""
    out = {}
    for x, y, c in itertools.product(BITS, BITS, BITS):
        out[f"A:a={c}|x={x},y={y}"] = sum(box.p(c, b, x, y) for b in BITS)
        out[f"B:b={c}|x={x},y={y}"] = sum(box.p(a, c, x, y) for a in BITS)
    return out


def is_locally_uniform(box: NonlocalBox, tol: float = DEFAULT_TOL) -> bool:
    return all(abs(m - 0.5) <= tol for m in marginals(box).values())


def flip_outputs(box: NonlocalBox) -> NonlocalBox:
    return NonlocalBox.from_function(lambda x, y, a, b: box.p(a ^ 1, b ^ 1, x, y))


@dataclass(frozen=True)
class Relabeling:
    """Local relabeling: inputs x -> x^flip_x, y -> y^flip_y; Alice's output
    a -> a ^ (alice_lin*x) ^ alice_const, likewise for Bob."""

    flip_x: int = 0
    flip_y: int = 0
    alice_lin: int = 0
    alice_const: int = 0
    bob_lin: int = 0
    bob_const: int = 0

    def apply(self, box: NonlocalBox) -> NonlocalBox:
        def fn(x, y, a, b):
            return box.p(
                a ^ (self.alice_lin * x) ^ self.alice_const,
                b ^ (self.bob_lin * y) ^ self.bob_const,
                x ^ self.flip_x,
                y ^ self.flip_y,
            )

        return NonlocalBox.from_function(fn)

    def bias_action(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        """(source index, sign) per output slot so that the relabeled box has
        eta'[i] = sign[i] * eta[source[i]], with i = 2x + y."""
        source, signs = [], []
        for x, y in itertools.product(BITS, BITS):
            xs, ys = x ^ self.flip_x, y ^ self.flip_y
            # a^b = xy on the new box is a^b = (xs^fx)(ys^fy) ^ lin/const terms on the old box
            rule = (x * y) ^ (self.alice_lin * x) ^ self.alice_const ^ (self.bob_lin * y) ^ self.bob_const
            source.append(2 * xs + ys)
            signs.append(1 if rule == xs * ys else -1)
        return tuple(source), tuple(signs)

    def apply_to_bias(self, eta: "BiasVector") -> "BiasVector":
        source, signs = self.bias_action()
        e = eta.as_tuple()
        return BiasVector(*(s * e[i] for i, s in zip(source, signs)))

    @property
    def is_identity(self) -> bool:
        return not any(vars(self).values())

    def label(self) -> str:
        return "identity" if self.is_identity else ",".join(f"{k}={v}" for k, v in vars(self).items() if v)


ALL_RELABELINGS = tuple(Relabeling(*bits) for bits in itertools.product(BITS, repeat=6))


def local_relabelings(box: NonlocalBox) -> Iterator[tuple[Relabeling, NonlocalBox]]:
    """All 64 boxes reachable by local input flips and output relabelings.

    Each is simulable from ``box`` without communication, so they share its
    collapse behaviour.
    """
    for rl in ALL_RELABELINGS:
        yield rl, (box if rl.is_identity else rl.apply(box))


# -- random boxes --------------------------------------------------------------

def extremal_boxes() -> list[NonlocalBox]:
    """The 16 local deterministic boxes and the 8 PR-type boxes."""
    out = []
    for a0, a1, b0, b1 in itertools.product(BITS, repeat=4):
        fa, fb = (a0, a1), (b0, b1)
        out.append(NonlocalBox.from_function(lambda x, y, a, b, fa=fa, fb=fb: float(a == fa[x] and b == fb[y])))
    for al, be, ga in itertools.product(BITS, repeat=3):
        out.append(NonlocalBox.from_function(
            lambda x, y, a, b, al=al, be=be, ga=ga: 0.5 * ((a ^ b) == (x * y) ^ (al * x) ^ (be * y) ^ ga)
        ))
    return out


_EXTREMAL = None


def random_box(rng: np.random.Generator, concentration: float = 0.3) -> NonlocalBox:
    """Dirichlet mixture of the extremal boxes; always non-signalling."""
    global _EXTREMAL
    if _EXTREMAL is None:
        _EXTREMAL = np.array([b.probs for b in extremal_boxes()])
    w = rng.dirichlet(np.full(len(_EXTREMAL), concentration))
    return NonlocalBox(tuple(w @ _EXTREMAL))


# -- I/O --------------------------------------------------------------------------

def box_from_json(data: dict) -> NonlocalBox:
    if not isinstance(data, dict) or "probs" not in data:
        raise BoxFormatError('box JSON needs a "probs" array')
    probs = data["probs"]
    if not isinstance(probs, list):
        raise BoxFormatError('"probs" must be an array')
    return NonlocalBox(tuple(probs), name=data.get("name"))


def load_box(path: str | Path) -> NonlocalBox:
    with open(path) as fh:
        return box_from_json(json.load(fh))


def save_box(box: NonlocalBox, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(box.to_json(), fh, indent=2)
