"""Two-dimensional slices through three boxes and grid scans of the collapse verdict.

Points are written in barycentric weights (w1, w2, 1-w1-w2) over the vertices
and in (sigma, sigma') coordinates. For the PR-PR'-I slice these are the CHSH
and CHSH' biases; for the PR-SR-I slice, the rotated pair in which the
collapsing region is the outside of a circle of radius sqrt(2/3).
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

from .boxes import BiasVector, BoxFormatError, NonlocalBox, box_from_json, mix, named_box, require_valid
from .collapse import COLLAPSE_THRESHOLD, classify_box

SLICE_TOL = 1e-9
BOUNDARY_BAND = 1e-9
COORDINATE_MAPS = ("case1", "case2", "barycentric")

CSV_HEADER = (
    "w1", "w2", "sigma", "sigma_prime",
    "eta00", "eta01", "eta10", "eta11",
    "A", "B", "collapses_general", "collapses_analytic",
)


@dataclass(frozen=True)
class SliceSpec:
    vertices: tuple[NonlocalBox, NonlocalBox, NonlocalBox]
    resolution: int
    coordinate_map: str = "barycentric"

    def __post_init__(self):
        if len(self.vertices) != 3:
            raise ValueError("a slice needs exactly three vertices")
        if self.resolution < 2:
            raise ValueError("resolution must be at least 2")
        if self.coordinate_map not in COORDINATE_MAPS:
            raise ValueError(f"coordinate_map must be one of {COORDINATE_MAPS}")
        for v in self.vertices:
            require_valid(v)


def case1_spec(resolution: int) -> SliceSpec:
    return SliceSpec((named_box("PR"), named_box("PRprime"), named_box("I")), resolution, "case1")


def case2_spec(resolution: int) -> SliceSpec:
    return SliceSpec((named_box("PR"), named_box("SR"), named_box("I")), resolution, "case2")


def load_slice_spec(path: str | Path, resolution: int | None = None) -> SliceSpec:
    """JSON: {"vertices": [<box JSON> | "<named box>", x3], "resolution": n,
    "coordinate_map": "barycentric"}."""
    with open(path) as fh:
        data = json.load(fh)
    try:
        raw = data["vertices"]
    except (KeyError, TypeError):
        raise BoxFormatError('slice JSON needs a "vertices" array') from None
    verts = tuple(named_box(v) if isinstance(v, str) else box_from_json(v) for v in raw)
    res = resolution if resolution is not None else int(data.get("resolution", 0))
    return SliceSpec(verts, res, data.get("coordinate_map", "barycentric"))


# -- coordinates -------------------------------------------------------------------

def chsh_biases(eta: BiasVector) -> tuple[float, float]:
    """Biases for the rules a^b = xy and a^b = (x^1)(y^1)."""
    e00, e01, e10, e11 = eta
    return (e00 + e01 + e10 + e11) / 4.0, (-e00 + e01 + e10 - e11) / 4.0


def case1_coordinates(eta: BiasVector) -> tuple[float, float]:
    return (eta.eta00 + eta.eta01) / 2.0, (-eta.eta00 + eta.eta01) / 2.0


def case2_coordinates(eta: BiasVector) -> tuple[float, float]:
    return (3.0 * eta.eta00 + eta.eta11) / 4.0, (eta.eta00 - eta.eta11) / 4.0


def _require_case1(eta: BiasVector, tol: float) -> None:
    if abs(eta.eta00 - eta.eta11) > tol or abs(eta.eta01 - eta.eta10) > tol:
        raise ValueError(f"not in the PR-PR'-I slice (need eta00=eta11, eta01=eta10): {tuple(eta)}")


def _require_case2(eta: BiasVector, tol: float) -> None:
    if abs(eta.eta00 - eta.eta01) > tol or abs(eta.eta00 - eta.eta10) > tol:
        raise ValueError(f"not in the PR-SR-I slice (need eta00=eta01=eta10): {tuple(eta)}")


def case1_condition(eta: BiasVector, tol: float = SLICE_TOL) -> bool:
    """Either ellipse: sigma^2 + sigma'^2/3 > 2/3 or sigma^2/3 + sigma'^2 > 2/3.

    The first is eta00^2 + eta00*eta01 + eta01^2 > 2; the second is the same
    condition after flipping both inputs, which swaps CHSH and CHSH'.
    """
    _require_case1(eta, tol)
    s, sp = case1_coordinates(eta)
    return 3.0 * s * s + sp * sp > 2.0 or s * s + 3.0 * sp * sp > 2.0


def case2_condition(eta: BiasVector, tol: float = SLICE_TOL) -> bool:
    """5 eta00^2 + 2 eta00 eta11 + eta11^2 > 16/3, i.e. sigma^2 + sigma'^2 > 2/3."""
    _require_case2(eta, tol)
    e0, e1 = eta.eta00, eta.eta11
    return 3.0 * (5.0 * e0 * e0 + 2.0 * e0 * e1 + e1 * e1) > 16.0


ANALYTIC = {"case1": case1_condition, "case2": case2_condition}


# -- points and scans ---------------------------------------------------------------

def box_at(spec: SliceSpec, w1: float, w2: float) -> NonlocalBox:
    if w1 < -SLICE_TOL or w2 < -SLICE_TOL or w1 + w2 > 1.0 + SLICE_TOL:
        raise ValueError(f"({w1}, {w2}) is outside the simplex")
    w1, w2 = max(w1, 0.0), max(w2, 0.0)
    w3 = max(1.0 - w1 - w2, 0.0)
    return mix(spec.vertices, (w1, w2, w3))


@dataclass(frozen=True)
class ScanPoint:
    w1: float
    w2: float
    sigma: float
    sigma_prime: float
    eta: BiasVector
    A: float
    B: float
    collapses_general: bool
    collapses_analytic: bool | None

    @property
    def A_plus_B(self) -> float:
        return self.A + self.B

    @property
    def near_boundary(self) -> bool:
        return abs(self.A_plus_B - COLLAPSE_THRESHOLD) <= BOUNDARY_BAND

    @property
    def agrees(self) -> bool:
        return self.collapses_analytic is None or self.collapses_analytic == self.collapses_general


def evaluate(spec: SliceSpec, w1: float, w2: float) -> ScanPoint:
    box = box_at(spec, w1, w2)
    cls = classify_box(box)
    eta = cls.eta
    if spec.coordinate_map == "case1":
        sigma, sigma_p = case1_coordinates(eta)
    elif spec.coordinate_map == "case2":
        sigma, sigma_p = case2_coordinates(eta)
    else:
        sigma, sigma_p = chsh_biases(eta)
    analytic = ANALYTIC.get(spec.coordinate_map)
    return ScanPoint(
        w1, w2, sigma, sigma_p, eta, cls.params.A, cls.params.B,
        cls.collapses, analytic(eta) if analytic else None,
    )


def grid(resolution: int) -> list[tuple[float, float]]:
    """Closed-simplex grid, row-major in (w1, w2)."""
    d = resolution - 1
    return [(i / d, j / d) for i in range(resolution) for j in range(resolution - i)]


def scan(spec: SliceSpec) -> list[ScanPoint]:
    return [evaluate(spec, w1, w2) for w1, w2 in grid(spec.resolution)]


def disagreements(points: Sequence[ScanPoint]) -> list[ScanPoint]:
    return [p for p in points if not p.near_boundary and not p.agrees]


def threshold_bisect(
    spec: SliceSpec,
    ray_from: tuple[float, float],
    ray_to: tuple[float, float],
    tol: float = 1e-9,
    verdict: Callable[[ScanPoint], bool] | None = None,
) -> float:
    """Parameter t in [0, 1] along ray_from -> ray_to where the verdict flips."""
    verdict = verdict or (lambda p: p.collapses_general)

    def at(t: float) -> bool:
        w1 = ray_from[0] + t * (ray_to[0] - ray_from[0])
        w2 = ray_from[1] + t * (ray_to[1] - ray_from[1])
        return verdict(evaluate(spec, w1, w2))

    lo, hi = 0.0, 1.0
    v_lo = at(lo)
    if v_lo == at(hi):
        raise ValueError("the verdict is the same at both ends of the ray")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if at(mid) == v_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# -- CSV -----------------------------------------------------------------------------

def _fmt(v: float) -> str:
    return f"{v:.12g}"


def csv_rows(points: Sequence[ScanPoint]) -> list[list[str]]:
    rows = []
    for p in points:
        analytic = "" if p.collapses_analytic is None else str(int(p.collapses_analytic))
        rows.append([
            _fmt(p.w1), _fmt(p.w2), _fmt(p.sigma), _fmt(p.sigma_prime),
            *(_fmt(e) for e in p.eta),
            _fmt(p.A), _fmt(p.B), str(int(p.collapses_general)), analytic,
        ])
    return rows


def write_csv(points: Sequence[ScanPoint], out) -> None:
    """Write to a path or an open text stream."""
    if isinstance(out, (str, Path)):
        with open(out, "w", newline="") as fh:
            write_csv(points, fh)
        return
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    writer.writerows(csv_rows(points))


def to_csv(points: Sequence[ScanPoint]) -> str:
    buf = io.StringIO()
    write_csv(points, buf)
    return buf.getvalue()
