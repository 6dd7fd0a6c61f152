"""Reference probability formulas for W-state fusion protocols.

Each protocol records its tabulated success/recycle/fail formulas, whether
it consumes an ancillary H photon, and its cost in two-qubit gates
(a Fredkin or Toffoli counts as five, a CNOT or partial swap as one).
Formulas are evaluated literally; :func:`consistency_issues` reports rows
whose numbers leave [0, 1] or fail to add up instead of correcting them.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, NamedTuple, Sequence

F = Fraction

# per-gate linear-optics success probabilities quoted for comparison
GATE_SUCCESS = {
    "cnot": F(1, 4),  # with an entangled photon pair
    "cnot-postselected": F(1, 9),
    "toffoli": F(1, 9),
    "fredkin": F(1, 64),
    "pswap": F(1, 4),
}

# minimal CNOT counts when only CNOTs may be used
CNOT_ONLY_COST = {"toffoli": 6, "fredkin": 8, "cnot": 1}


class ReferenceProbs(NamedTuple):
    success: Fraction
    recycle: Fraction | None
    fail: Fraction
    partial: Fraction | None = None


@dataclass(frozen=True)
class ProtocolSpec:
    id: str
    label: str
    arity: int | None  # None: any arity >= 2
    ancilla: bool
    gates: tuple[str, ...]
    success: Callable[[Sequence[int]], Fraction]
    fail: Callable[[Sequence[int]], Fraction]
    recycle: Callable[[Sequence[int]], Fraction] | None = None
    partial: Callable[[Sequence[int]], Fraction] | None = None
    result_offset: int = 0  # fused size = sum(sizes) - result_offset

    def gate_list(self, k: int) -> tuple[str, ...]:
        return ("pswap",) * (k - 1) if self.id == "pswap-chain" else self.gates

    def two_qubit_cost(self, k: int) -> int:
        return sum(5 if g in ("fredkin", "toffoli") else 1 for g in self.gate_list(k))

    def cnot_only_cost(self, k: int) -> int | None:
        gates = self.gate_list(k)
        if any(g == "pswap" for g in gates):
            return None
        return sum(CNOT_ONLY_COST[g] for g in gates)

    def gate_success(self, k: int) -> Fraction:
        return math.prod((GATE_SUCCESS[g] for g in self.gate_list(k)), start=F(1))

    def fused_size(self, sizes: Sequence[int]) -> int:
        offset = len(sizes) - 1 if self.id == "pswap-chain" else self.result_offset
        return sum(sizes) - offset


def _prod(sizes):
    return math.prod(sizes)


def _prod_minus_one(sizes):
    return math.prod(s - 1 for s in sizes)


def _toffoli_3cnot_fail(s):
    # literal caption formula, with (m, n, t, z) = s
    m, n, t, z = s
    return F((5 - m - n - z - t) - (n - 1) * (m - 1) * (t - 1) * (z - 1), m * n * t * z)


def _pswap3_partial(s):
    n, m, t = s
    return F((n - 1) * (m - 1) + (t - 1) * (n + m - 2), n * m * t)


PROTOCOLS: dict[str, ProtocolSpec] = {}


def _register(spec: ProtocolSpec) -> None:
    PROTOCOLS[spec.id] = spec


_register(ProtocolSpec(
    "ozdemir-I", "with I", 2, False, (),
    success=lambda s: F(s[0] + s[1] - 2, _prod(s)),
    recycle=lambda s: F(_prod_minus_one(s), _prod(s)),
    fail=lambda s: F(1, _prod(s)),
    result_offset=2,
))
_register(ProtocolSpec(
    "fredkin", "with 1 Fredkin", 2, True, ("fredkin",),
    success=lambda s: F(s[0] + s[1] - 1, _prod(s)),
    recycle=lambda s: F(_prod_minus_one(s), _prod(s)),
    fail=lambda s: F(0),
    result_offset=1,
))
_register(ProtocolSpec(
    "toffoli-cnot", "with 1 Toffoli, 1 CNOT", 2, True, ("toffoli", "cnot"),
    success=lambda s: F(s[0] + s[1] - 1, _prod(s)),
    recycle=lambda s: F(_prod_minus_one(s), _prod(s)),
    fail=lambda s: F(0),
    result_offset=1,
))
_register(ProtocolSpec(
    "pswap-2", "ours with 1 partial-swap", 2, False, ("pswap",),
    success=lambda s: F(s[0] + s[1] - 1, _prod(s)),
    recycle=lambda s: F(_prod_minus_one(s), _prod(s)),
    fail=lambda s: F(0),
    result_offset=1,
))
_register(ProtocolSpec(
    "fredkin-3", "with 1 Fredkin (three registers)", 3, True, ("fredkin",),
    success=lambda s: F(sum(s) - 3, _prod(s)),
    fail=lambda s: F((s[2] - 1) * (s[0] + s[1] - 2) + 1, _prod(s)),
    result_offset=3,
))
_register(ProtocolSpec(
    "pswap-3", "ours with 2 partial-swaps", 3, False, ("pswap", "pswap"),
    success=lambda s: F(sum(s) - 2, _prod(s)),
    recycle=lambda s: F(_prod_minus_one(s), _prod(s)),
    fail=lambda s: F(0),
    partial=_pswap3_partial,
    result_offset=2,
))
_register(ProtocolSpec(
    "toffoli-3cnot", "with 1 Toffoli, 3 CNOTs", 4, False, ("toffoli", "cnot", "cnot", "cnot"),
    success=lambda s: F(sum(s) - 4, _prod(s)),
    fail=_toffoli_3cnot_fail,
    result_offset=4,
))
_register(ProtocolSpec(
    "pswap-chain", "ours with k-1 partial-swaps", None, False, (),
    success=lambda s: F(sum(s) - (len(s) - 1), _prod(s)),
    recycle=lambda s: F(_prod_minus_one(s), _prod(s)),
    fail=lambda s: F(0),
    partial=lambda s: 1 - F(sum(s) - (len(s) - 1), _prod(s)) - F(_prod_minus_one(s), _prod(s)),
))


def get_protocol(protocol: str | ProtocolSpec) -> ProtocolSpec:
    if isinstance(protocol, ProtocolSpec):
        return protocol
    try:
        return PROTOCOLS[protocol]
    except KeyError:
        raise ValueError(f"unknown protocol {protocol!r}; known: {', '.join(PROTOCOLS)}") from None


def _validate(spec: ProtocolSpec, sizes: Sequence[int]) -> tuple[int, ...]:
    sizes = tuple(int(s) for s in sizes)
    if spec.arity is not None and len(sizes) != spec.arity:
        raise ValueError(f"{spec.id} takes {spec.arity} register sizes, got {len(sizes)}")
    if len(sizes) < 2:
        raise ValueError("fusion needs at least two registers")
    if any(s < 1 for s in sizes):
        raise ValueError("register sizes must be >= 1")
    return sizes


def reference_probs(protocol: str | ProtocolSpec, sizes: Sequence[int]) -> ReferenceProbs:
    """Literal evaluation of a protocol's tabulated formulas."""
    spec = get_protocol(protocol)
    sizes = _validate(spec, sizes)
    return ReferenceProbs(
        spec.success(sizes),
        spec.recycle(sizes) if spec.recycle else None,
        spec.fail(sizes),
        spec.partial(sizes) if spec.partial else None,
    )


def corrected_fail(protocol: str | ProtocolSpec, sizes: Sequence[int]) -> Fraction:
    """Complement ``1 - success - prod(n_i - 1)/prod(n_i)``.

    Offered next to the literal fail formula for the four-register
    Toffoli/CNOT row, whose printed expression can go negative.
    """
    spec = get_protocol(protocol)
    sizes = _validate(spec, sizes)
    return 1 - spec.success(sizes) - F(_prod_minus_one(sizes), _prod(sizes))


def consistency_issues(probs: ReferenceProbs) -> list[str]:
    """Human-readable problems with a row of reference probabilities."""
    issues = []
    for name in ("success", "recycle", "fail", "partial"):
        v = getattr(probs, name)
        if v is not None and not (0 <= v <= 1):
            issues.append(f"{name} = {v} lies outside [0, 1]")
    known = probs.success + probs.fail + (probs.partial or 0)
    if probs.recycle is None:
        rest = 1 - known
        if rest != 0:
            issues.append(f"recycle not tabulated; success + fail leave {rest} unaccounted")
    elif known + probs.recycle != 1:
        issues.append(f"probabilities sum to {known + probs.recycle}, not 1")
    return issues


@dataclass(frozen=True)
class ComparisonRow:
    protocol: str
    label: str
    sizes: tuple[int, ...]
    result_size: int
    probs: ReferenceProbs
    ancilla: bool
    two_qubit_gates: int
    cnot_only_gates: int | None
    gate_success: Fraction
    issues: tuple[str, ...]
    corrected_fail: Fraction | None = None

    @property
    def success_with_gates(self) -> Fraction:
        return self.probs.success * self.gate_success

    def to_dict(self) -> dict:
        def frac(x):
            return None if x is None else {"num": x.numerator, "den": x.denominator}
        return {
            "protocol": self.protocol,
            "sizes": list(self.sizes),
            "result_size": self.result_size,
            "probs": {k: frac(v) for k, v in self.probs._asdict().items()},
            "ancilla": self.ancilla,
            "two_qubit_gates": self.two_qubit_gates,
            "cnot_only_gates": self.cnot_only_gates,
            "gate_success": frac(self.gate_success),
            "success_with_gates": frac(self.success_with_gates),
            "corrected_fail": frac(self.corrected_fail),
            "issues": list(self.issues),
        }


def applicable_protocols(k: int) -> list[ProtocolSpec]:
    """Fixed-arity protocols for ``k`` registers, plus the generic chain if no fixed partial-swap row exists."""
    rows = [p for p in PROTOCOLS.values() if p.arity == k]
    if not any(p.id.startswith("pswap") for p in rows):
        rows.append(PROTOCOLS["pswap-chain"])
    return rows


def compare_protocols(sizes: Sequence[int]) -> list[ComparisonRow]:
    """One row per protocol that accepts ``len(sizes)`` registers."""
    sizes = tuple(int(s) for s in sizes)
    rows = []
    for spec in applicable_protocols(len(sizes)):
        probs = reference_probs(spec, sizes)
        rows.append(ComparisonRow(
            spec.id, spec.label, sizes, spec.fused_size(sizes), probs, spec.ancilla,
            spec.two_qubit_cost(len(sizes)), spec.cnot_only_cost(len(sizes)),
            spec.gate_success(len(sizes)), tuple(consistency_issues(probs)),
            corrected_fail(spec, sizes) if spec.id == "toffoli-3cnot" else None,
        ))
    return rows


def _initial_state(spec: ProtocolSpec, sizes) -> str:
    names = ", ".join(f"W{s}" for s in sizes)
    return names + (", H" if spec.ancilla else "")


def comparison_csv(rows: list[ComparisonRow]) -> str:
    """CSV laid out like the comparison tables (recycle column only for two registers)."""
    two = bool(rows) and len(rows[0].sizes) == 2
    header = ["protocol", "initial_state", "result", "success_probability"]
    header += ["recycle_probability", "fail_probability"] if two else ["fail_probability"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        spec = PROTOCOLS[r.protocol]
        line = [r.label, _initial_state(spec, r.sizes), f"W{r.result_size}", str(r.probs.success)]
        if two:
            line.append("" if r.probs.recycle is None else str(r.probs.recycle))
        line.append(str(r.probs.fail))
        w.writerow(line)
    return buf.getvalue()
