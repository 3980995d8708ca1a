"""Built-in cross-checks between closed forms and brute-force oracles."""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import boxes, collapse, protocols, slices
from .boxes import BiasVector
from .collapse import RecursionParams

ParamsFn = Callable[[BiasVector], RecursionParams]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail} ({self.seconds:.2f}s)"


def _timed(name: str, fn) -> CheckResult:
    t0 = time.perf_counter()
    passed, detail = fn()
    return CheckResult(name, bool(passed), detail, time.perf_counter() - t0)


def check_majority_identity():
    ok = protocols.maj_identity_check()
    return ok, "64/64 assignments" if ok else "identity fails"


def check_conditional_distribution(p0s=(0.51, 0.6, 0.75, 0.9)):
    bad = [p for p in p0s if not protocols.conditional_distribution_check(p)]
    return not bad, f"8 error patterns x {len(p0s)} p0 values" + (f"; failing p0 {bad}" if bad else "")


def check_p1_oracle(n_boxes: int = 25, seed: int = 2024, p0s=(0.51, 0.6, 0.75, 0.9), tol: float = 1e-12):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_boxes):
        box = boxes.random_box(rng)
        eta = boxes.bias_vector(box)
        for p0 in p0s:
            diff = abs(protocols.p1_enumerate(p0, box).probability - protocols.p1_formula(p0, eta).probability)
            worst = max(worst, diff)
    return worst <= tol, f"max |enumerate - formula| = {worst:.2e} over {n_boxes * len(p0s)} cases"


def check_bias_map(params_fn: ParamsFn = collapse.recursion_params, n_boxes: int = 25, seed: int = 7,
                   p0s=(0.51, 0.6, 0.75, 0.9), tol: float = 1e-12):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_boxes):
        box = boxes.random_box(rng)
        eta = boxes.bias_vector(box)
        params = params_fn(eta)
        for p0 in p0s:
            enumerated = protocols.p1_enumerate(p0, box).bias
            worst = max(worst, abs(enumerated - collapse.map_F(2.0 * p0 - 1.0, params)))
    return worst <= tol, f"max |bias(p1) - F(2p0-1)| = {worst:.2e}"


def check_slice_consistency(resolution: int = 41):
    counts = []
    for spec in (slices.case1_spec(resolution), slices.case2_spec(resolution)):
        pts = slices.scan(spec)
        counts.append(len(slices.disagreements(pts)))
    return sum(counts) == 0, f"disagreements case1={counts[0]} case2={counts[1]} at resolution {resolution}"


def check_resource_accounting(levels=(0, 1, 2), lengths=(1, 2, 3)):
    box = boxes.named_box("PR")
    bad = []
    for k, m in itertools.product(levels, lengths):
        f = protocols.BooleanFunction.inner_product(m)
        report = protocols.run_protocol(protocols.ProtocolConfig(k, m, box), f)
        if (report.shared_bits, report.box_copies) != collapse.resource_count(k, m):
            bad.append((k, m))
    return not bad, f"{len(levels) * len(lengths)} (k, m) pairs" + (f"; mismatches {bad}" if bad else "")


def check_level_zero(max_m: int = 3):
    bad = []
    for m in range(1, max_m + 1):
        f = protocols.BooleanFunction.xor_all(2, m)
        for X in range(4):
            if protocols.p0_enumerate(f, X).probability != protocols.p0_exact(m).probability:
                bad.append((m, X))
    return not bad, f"m=1..{max_m}, all X" + (f"; mismatches {bad}" if bad else "")


def check_literal_protocol(tol: float = 1e-12):
    box = boxes.mix([boxes.named_box("PR"), boxes.named_box("P0")], [0.5, 0.5])
    f = protocols.BooleanFunction.xor_all(1, 1)
    composed = protocols.exact_success(1, 1, box)
    worst = 0.0
    for X, Y in itertools.product(range(2), range(2)):
        lit = protocols.enumerate_protocol(1, f, X, Y, box).probability
        worst = max(worst, abs(lit - composed))
    return worst <= tol, f"full tree enumeration at k=1, m=1 vs composed oracle, max diff {worst:.2e}"


def run_all(params_fn: ParamsFn = collapse.recursion_params) -> list[CheckResult]:
    return [
        _timed("majority identity", check_majority_identity),
        _timed("conditional distribution of (r1, r2, s1, s2)", check_conditional_distribution),
        _timed("level-1 oracle equivalence", check_p1_oracle),
        _timed("bias map equivalence", lambda: check_bias_map(params_fn)),
        _timed("slice consistency", check_slice_consistency),
        _timed("resource accounting", check_resource_accounting),
        _timed("level-0 reproduction", check_level_zero),
        _timed("literal protocol enumeration", check_literal_protocol),
    ]
