"""W-state construction and partial-swap fusion protocols.

Party ``i`` of a fusion holds a W register whose non-extraction photons sit
in modes ``"<ns>:1" ... "<ns>:<n-1>"`` and whose extraction photon sits in
mode ``i + 1`` (the integers 1, 2, 3, ...).  A chain of ``k`` registers is
fused by partial-swap gates on extraction modes (1, 2), (2, 3), ...,
(k-1, k); modes 1 .. k-1 are then measured in the H/V basis.

Outcome patterns are strings over {H, V}, one letter per measured mode.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .amplitude import Amplitude, as_fraction, is_zero
from .fock import (
    H,
    ModeLabel,
    PhotonicState,
    Pol,
    V,
    all_of,
    inner,
    polarization_is,
    project,
    strip,
    tensor_all,
)
from .pswap import apply_pswap

DEFAULT_MAX_PHOTONS = 14


class ResourceBoundError(RuntimeError):
    """Dense simulation requested beyond the configured photon bound."""


class Outcome(str, enum.Enum):
    SUCCESS = "Success"
    RECYCLE = "Recycle"
    PARTIAL_RECYCLE = "PartialRecycle"
    PARTIAL_SUCCESS = "PartialSuccess"


# -- W states -----------------------------------------------------------------

def build_w(n: int, modes: Sequence | None = None, max_photons: int = DEFAULT_MAX_PHOTONS) -> PhotonicState:
    """Normalized ``|W_n>`` with one photon per spatial mode.

    ``modes`` defaults to ``1 .. n``.  ``build_w(1)`` is the single ket ``|V>``.
    """
    if n < 1:
        raise ValueError(f"W state needs at least one photon, got n={n}")
    if n > max_photons:
        raise ResourceBoundError(f"W_{n} exceeds the dense bound of {max_photons} photons")
    modes = list(range(1, n + 1)) if modes is None else list(modes)
    if len(modes) != n or len(set(modes)) != n:
        raise ValueError(f"need {n} distinct modes, got {modes}")
    amp = Amplitude.sqrt_of(Fraction(1, n))
    terms = {}
    for k in range(n):
        labels = [V(m) if i == k else H(m) for i, m in enumerate(modes)]
        terms[tuple((l, 1) for l in labels)] = amp
    return PhotonicState(terms)


def all_h(modes: Sequence) -> PhotonicState:
    return PhotonicState.basis(*[H(m) for m in modes])


def w_branch(n: int) -> tuple[Amplitude, Amplitude]:
    """Coefficients of the V-branch and H-branch when one photon is singled out."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return Amplitude.sqrt_of(Fraction(1, n)), Amplitude.sqrt_of(Fraction(n - 1, n))


def fidelity(state: PhotonicState, reference: PhotonicState):
    """``|<state|ref>|^2 / (|state|^2 |ref|^2)``; exact for exact inputs."""
    ns, nr = state.norm_sq(), reference.norm_sq()
    if is_zero(ns) or is_zero(nr):
        raise ValueError("fidelity is undefined for a zero-norm state")
    ov = inner(state, reference)
    if isinstance(ov, complex):
        return abs(ov) ** 2 / (float(ns) * float(nr))
    return ov * ov / (ns * nr)


@dataclass(frozen=True)
class WRegister:
    size: int
    owner: str
    namespace: str
    extraction: int

    def __post_init__(self) -> None:
        if self.size < 1:
            raise ValueError("register size must be >= 1")

    @property
    def local_modes(self) -> list[str]:
        return [f"{self.namespace}:{i}" for i in range(1, self.size)]

    @property
    def modes(self) -> list:
        return self.local_modes + [self.extraction]

    def state(self, max_photons: int = DEFAULT_MAX_PHOTONS) -> PhotonicState:
        return build_w(self.size, self.modes, max_photons)


def registers(sizes: Sequence[int]) -> list[WRegister]:
    if len(sizes) > 26:
        raise ValueError("at most 26 registers are supported")
    return [
        WRegister(n, chr(ord("A") + i), chr(ord("a") + i), i + 1)
        for i, n in enumerate(sizes)
    ]


# -- outcome distributions ----------------------------------------------------

@dataclass(frozen=True)
class Residual:
    """What the parties hold after one fusion round.

    ``fused`` is the size of the W state shared by ``fused_parties`` (0 if no
    multi-party W was formed); ``retained[i]`` is the size of the W state
    party ``i`` still holds on its own (0 when consumed or fused).
    """

    fused: int
    fused_parties: tuple[int, ...]
    retained: tuple[int, ...]

    def to_dict(self) -> dict:
        return {"fused": self.fused, "fused_parties": list(self.fused_parties), "retained": list(self.retained)}

    def sizes(self) -> list[int]:
        """Every usable W size left over (fused block first)."""
        out = [self.fused] if self.fused else []
        return out + [r for r in self.retained if r]


@dataclass(frozen=True)
class OutcomeEntry:
    pattern: str
    outcome: Outcome
    probability: Fraction
    residual: Residual
    fidelity: Fraction | None = None
    state: PhotonicState | None = field(default=None, compare=False, repr=False)

    def to_dict(self) -> dict:
        d = {
            "pattern": self.pattern,
            "class": self.outcome.value,
            "prob": {"num": self.probability.numerator, "den": self.probability.denominator},
            "residual": self.residual.to_dict(),
        }
        if self.fidelity is not None:
            d["fidelity"] = {"num": self.fidelity.numerator, "den": self.fidelity.denominator}
        return d


@dataclass(frozen=True)
class OutcomeDistribution:
    sizes: tuple[int, ...]
    entries: tuple[OutcomeEntry, ...]
    method: str = "analytic"

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(sorted(self.entries, key=lambda e: e.pattern)))

    def total(self) -> Fraction:
        return sum((e.probability for e in self.entries), Fraction(0))

    def by_class(self) -> dict[Outcome, Fraction]:
        out = {c: Fraction(0) for c in Outcome}
        for e in self.entries:
            out[e.outcome] += e.probability
        return {c: p for c, p in out.items() if c in {e.outcome for e in self.entries}}

    def entry(self, pattern: str) -> OutcomeEntry:
        for e in self.entries:
            if e.pattern == pattern:
                return e
        raise KeyError(pattern)

    @property
    def success(self) -> Fraction:
        return self.by_class().get(Outcome.SUCCESS, Fraction(0))

    @property
    def fused_size(self) -> int:
        """Size of the W state produced on success."""
        return sum(self.sizes) - (len(self.sizes) - 1)

    def marginals(self) -> dict[str, Fraction]:
        return {e.pattern: e.probability for e in self.entries}

    def to_dict(self) -> dict:
        return {
            "sizes": list(self.sizes),
            "method": self.method,
            "entries": [e.to_dict() for e in self.entries],
        }


def _check_sizes(sizes: Sequence[int], arity: int | None = None) -> tuple[int, ...]:
    sizes = tuple(int(s) for s in sizes)
    if arity is not None and len(sizes) != arity:
        raise ValueError(f"expected {arity} register sizes, got {len(sizes)}")
    if len(sizes) < 2:
        raise ValueError("fusion needs at least two registers")
    if any(s < 1 for s in sizes):
        raise ValueError(f"register sizes must be >= 1, got {sizes}")
    return sizes


def fuse2_analytic(n: int, m: int) -> OutcomeDistribution:
    """Two-register fusion: V on mode 1 fuses, H leaves ``W_{n-1}``, ``W_{m-1}``."""
    n, m = _check_sizes((n, m))
    nm = n * m
    return OutcomeDistribution((n, m), (
        OutcomeEntry("V", Outcome.SUCCESS, Fraction(n + m - 1, nm), Residual(n + m - 1, (0, 1), (0, 0))),
        OutcomeEntry("H", Outcome.RECYCLE, Fraction((n - 1) * (m - 1), nm), Residual(0, (), (n - 1, m - 1))),
    ))


def fuse3_analytic(n: int, m: int, t: int) -> OutcomeDistribution:
    """Three-register fusion with the two-gate cascade; four outcome classes."""
    n, m, t = _check_sizes((n, m, t))
    d = n * m * t
    return OutcomeDistribution((n, m, t), (
        OutcomeEntry("VV", Outcome.SUCCESS, Fraction(n + m + t - 2, d),
                     Residual(n + m + t - 2, (0, 1, 2), (0, 0, 0))),
        OutcomeEntry("HH", Outcome.RECYCLE, Fraction((n - 1) * (m - 1) * (t - 1), d),
                     Residual(0, (), (n - 1, m - 1, t - 1))),
        OutcomeEntry("HV", Outcome.PARTIAL_RECYCLE, Fraction((n - 1) * (m - 1), d),
                     Residual(0, (), (n - 1, m - 1, 0))),
        OutcomeEntry("VH", Outcome.PARTIAL_SUCCESS, Fraction((t - 1) * (n + m - 2), d),
                     Residual(n + m - 2, (0, 1), (0, 0, t - 1))),
    ))


def chain_outcome(sizes: Sequence[int], pattern: str) -> tuple[Outcome, Fraction, Residual]:
    """Class, probability and residual of one measurement pattern of a chain.

    With ``g`` the first measured mode reading H, registers ``1 .. g`` end up
    sharing one W state of size ``sum(n_i - 1)``, register ``g + 1`` keeps
    ``W_{n-1}``, and every later register ``i`` keeps ``W_{n_i - 1}`` if
    mode ``i - 1`` read H and is consumed otherwise.  All-V is success.
    """
    k = len(sizes)
    if len(pattern) != k - 1 or set(pattern) - {"H", "V"}:
        raise ValueError(f"pattern must be {k - 1} letters over H/V, got {pattern!r}")
    denom = math.prod(sizes)
    if "H" not in pattern:
        total = sum(sizes) - (k - 1)
        return Outcome.SUCCESS, Fraction(total, denom), Residual(total, tuple(range(k)), (0,) * k)
    g = pattern.index("H") + 1
    head = sum(n - 1 for n in sizes[:g])
    retained = [0] * k
    weight = head
    for i in range(g, k):  # 0-based register index i is fed by measured mode i
        if pattern[i - 1] == "H":
            retained[i] = sizes[i] - 1
            weight *= sizes[i] - 1
    if g == 1:
        retained[0] = sizes[0] - 1
        residual = Residual(0, (), tuple(retained))
        consumed = any(pattern[i - 1] == "V" for i in range(1, k))
        outcome = Outcome.PARTIAL_RECYCLE if consumed else Outcome.RECYCLE
    else:
        residual = Residual(head, tuple(range(g)), tuple(retained))
        outcome = Outcome.PARTIAL_SUCCESS
    return outcome, Fraction(weight, denom), residual


def _patterns(k: int) -> list[str]:
    return ["".join(p) for p in itertools.product("HV", repeat=k - 1)]


def chain_analytic(sizes: Sequence[int]) -> OutcomeDistribution:
    sizes = _check_sizes(sizes)
    entries = []
    for pat in _patterns(len(sizes)):
        outcome, prob, residual = chain_outcome(sizes, pat)
        entries.append(OutcomeEntry(pat, outcome, prob, residual))
    return OutcomeDistribution(sizes, tuple(entries))


def expected_residual_state(regs: list[WRegister], pattern: str, residual: Residual) -> PhotonicState:
    """Ideal post-measurement state (measured modes removed) for one pattern."""
    k = len(regs)
    last = regs[-1].extraction
    parts = []
    success = "H" not in pattern
    if residual.fused_parties:
        modes = [m for i in residual.fused_parties for m in regs[i].local_modes]
        if success:
            modes.append(last)
        parts.append(build_w(len(modes), modes, max_photons=10**6))
    for i, reg in enumerate(regs):
        if i in residual.fused_parties:
            continue
        if residual.retained[i]:
            parts.append(build_w(residual.retained[i], reg.local_modes, max_photons=10**6))
        elif reg.local_modes:
            parts.append(all_h(reg.local_modes))
    if not success:
        parts.append(PhotonicState.basis(H(last)))
    return tensor_all(parts)


def fuse_dense(sizes: Sequence[int], max_photons: int = DEFAULT_MAX_PHOTONS, factor=None) -> OutcomeDistribution:
    """Full state-vector simulation of a fusion chain.

    Every pattern's probability is measured on the simulated state and its
    post-measurement state is compared (exact fidelity) with the ideal
    residual predicted by :func:`chain_outcome`.
    """
    sizes = _check_sizes(sizes)
    if sum(sizes) > max_photons:
        raise ResourceBoundError(
            f"{sum(sizes)} photons exceed the dense bound of {max_photons}; use the analytic mode"
        )
    regs = registers(sizes)
    state = tensor_all(r.state(max_photons) for r in regs)
    k = len(sizes)
    for j in range(1, k):
        state = apply_pswap(state, j, j + 1, factor)
    measured = list(range(1, k))
    total = state.norm_sq()
    entries = []
    for pat in _patterns(k):
        pred = all_of(*(polarization_is(mode, Pol(p)) for mode, p in zip(measured, pat)))
        sub, prob = project(state, pred, total)
        outcome, _, residual = chain_outcome(sizes, pat)
        fid = None
        kept = None
        if not sub.is_zero():
            kept = strip(sub, measured)
            fid = as_fraction(fidelity(kept, expected_residual_state(regs, pat, residual)))
        entries.append(OutcomeEntry(pat, outcome, as_fraction(prob), residual, fid, kept))
    return OutcomeDistribution(sizes, tuple(entries), method="dense")


def fuse2_dense(n: int, m: int, max_photons: int = DEFAULT_MAX_PHOTONS) -> OutcomeDistribution:
    return fuse_dense((n, m), max_photons)


def fuse3_dense(n: int, m: int, t: int, max_photons: int = DEFAULT_MAX_PHOTONS) -> OutcomeDistribution:
    return fuse_dense((n, m, t), max_photons)


def fuse_chain(sizes: Sequence[int], method: str = "auto", max_photons: int = DEFAULT_MAX_PHOTONS) -> OutcomeDistribution:
    """Outcome distribution of ``len(sizes) - 1`` cascaded partial-swap gates.

    ``method="auto"`` simulates densely when the total photon count is within
    ``max_photons`` and falls back to the closed form otherwise.
    """
    sizes = _check_sizes(sizes)
    if method == "analytic" or (method == "auto" and sum(sizes) > max_photons):
        return chain_analytic(sizes)
    if method not in ("auto", "dense"):
        raise ValueError(f"unknown method {method!r}")
    return fuse_dense(sizes, max_photons)


def chain_success_probability(sizes: Sequence[int]) -> Fraction:
    sizes = _check_sizes(sizes)
    return Fraction(sum(sizes) - (len(sizes) - 1), math.prod(sizes))


def fused_size(sizes: Sequence[int]) -> int:
    return sum(sizes) - (len(sizes) - 1)
