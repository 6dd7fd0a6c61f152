"""Passive linear-optical elements and circuit execution.

Elements act on named spatial modes.  A polarizing beam splitter transmits
H light straight through and reflects V light into the other arm, with no
reflection phase; a half-wave plate at angle ``theta`` applies the Jones
matrix ``[[cos 2t, sin 2t], [sin 2t, -cos 2t]]`` on ``(H, V)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Union

from .amplitude import SQRT2, Amplitude, abs2, is_zero
from .fock import (
    H,
    ModeLabel,
    ModeMap,
    PhotonicState,
    Pol,
    Spatial,
    V,
    apply_mode_map,
    coincidence,
    project,
)

Angle = Union[int, Fraction, float]


class WiringError(ValueError):
    """A circuit refers to a mode that is not live at that point."""


class BackendError(ValueError):
    pass


# cos and sin of multiples of 45 degrees, exactly
_HALF_SQRT2 = SQRT2 / 2
_EXACT_TRIG = {
    0: (Amplitude(1), Amplitude(0)),
    45: (_HALF_SQRT2, _HALF_SQRT2),
    90: (Amplitude(0), Amplitude(1)),
    135: (-_HALF_SQRT2, _HALF_SQRT2),
    180: (Amplitude(-1), Amplitude(0)),
    225: (-_HALF_SQRT2, -_HALF_SQRT2),
    270: (Amplitude(0), Amplitude(-1)),
    315: (_HALF_SQRT2, -_HALF_SQRT2),
}


def hwp_matrix(angle: Angle, exact: bool = True):
    """Jones matrix of a half-wave plate with fast axis at ``angle`` degrees.

    The exact backend supports angles that are multiples of 22.5 degrees
    (their entries lie in Q(sqrt 2)); use ``exact=False`` for anything else.
    """
    if exact:
        if isinstance(angle, float):
            angle = Fraction(angle)
        twice = Fraction(angle) * 2
        if twice.denominator != 1 or twice.numerator % 45:
            raise BackendError(
                f"HWP angle {angle} deg has no exact Jones matrix; use the float backend"
            )
        c, s = _EXACT_TRIG[twice.numerator % 360]
    else:
        rad = math.radians(2 * float(angle))
        c, s = math.cos(rad), math.sin(rad)
    return ((c, s), (s, -c))


@dataclass(frozen=True)
class PBS:
    """Polarizing beam splitter.

    H: ``in_a -> out_a`` and ``in_b -> out_b``; V: ``in_a -> out_b`` and
    ``in_b -> out_a``.  ``in_b`` may be ``None`` for a vacuum port.
    """

    in_a: Spatial
    in_b: Spatial | None
    out_a: Spatial
    out_b: Spatial
    id: str = ""

    kind = "PBS"

    def consumes(self) -> tuple:
        return (self.in_a,) if self.in_b is None else (self.in_a, self.in_b)

    def produces(self) -> tuple:
        return (self.out_a, self.out_b)


@dataclass(frozen=True)
class HWP:
    mode: Spatial
    angle: Angle
    id: str = ""

    kind = "HWP"

    def consumes(self) -> tuple:
        return (self.mode,)

    def produces(self) -> tuple:
        return (self.mode,)


@dataclass(frozen=True)
class DetectorGroup:
    """Marks output modes that are read out; no effect on the state."""

    modes: tuple
    id: str = ""

    kind = "DetectorGroup"

    def consumes(self) -> tuple:
        return tuple(self.modes)

    def produces(self) -> tuple:
        return tuple(self.modes)


Element = Union[PBS, HWP, DetectorGroup]


def pbs_map(element: PBS) -> ModeMap:
    ports = [p for p in (element.in_a, element.in_b) if p is not None]
    if len(set(ports)) != len(ports) or element.out_a == element.out_b:
        raise WiringError(f"PBS {element.id or ''} has colliding ports")
    one = Amplitude(1)
    cols = {
        H(element.in_a): {H(element.out_a): one},
        V(element.in_a): {V(element.out_b): one},
    }
    if element.in_b is not None:
        cols[H(element.in_b)] = {H(element.out_b): one}
        cols[V(element.in_b)] = {V(element.out_a): one}
    return ModeMap(cols)


def hwp_map(element: HWP, exact: bool = True) -> ModeMap:
    (hh, hv), (vh, vv) = hwp_matrix(element.angle, exact)
    m = element.mode
    # column j of the Jones matrix is the image of input polarization j
    return ModeMap({H(m): {H(m): hh, V(m): vh}, V(m): {H(m): hv, V(m): vv}})


def element_map(element: Element, exact: bool = True) -> ModeMap:
    if isinstance(element, PBS):
        return pbs_map(element)
    if isinstance(element, HWP):
        return hwp_map(element, exact)
    return ModeMap({})


@dataclass(frozen=True)
class Circuit:
    elements: tuple = ()
    inputs: tuple = ()
    outputs: tuple = ()
    heralding: tuple = ()
    name: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "elements", tuple(self.elements))
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        object.__setattr__(self, "heralding", tuple(tuple(p) for p in self.heralding))

    def validate(self) -> None:
        """Static wiring pass; raises :class:`WiringError` on the first problem."""
        live = set(self.inputs)
        if len(live) != len(self.inputs):
            raise WiringError("duplicate input modes")
        for i, el in enumerate(self.elements):
            tag = el.id or f"#{i} {el.kind}"
            used = el.consumes()
            if len(set(used)) != len(used):
                raise WiringError(f"{tag}: repeated port")
            for m in used:
                if m not in live:
                    raise WiringError(f"{tag}: mode {m!r} is not live")
            if isinstance(el, PBS):
                if el.out_a == el.out_b:
                    raise WiringError(f"{tag}: output ports collide")
                live -= set(used)
                for m in el.produces():
                    if m in live:
                        raise WiringError(f"{tag}: output mode {m!r} already live")
                live |= set(el.produces())
        if set(self.outputs) != live:
            raise WiringError(
                f"declared outputs {sorted(map(str, self.outputs))} differ from live modes "
                f"{sorted(map(str, live))}"
            )
        for pattern in self.heralding:
            for m in pattern:
                if m not in live:
                    raise WiringError(f"heralding pattern {pattern} references non-output mode {m!r}")

    def single_photon_matrix(self, exact: bool = True) -> dict[ModeLabel, dict[ModeLabel, object]]:
        """Composite creation-operator map from input labels to output labels."""
        total = ModeMap({H(m): {H(m): Amplitude(1)} for m in self.inputs}
                        | {V(m): {V(m): Amplitude(1)} for m in self.inputs})
        for el in self.elements:
            total = total.then(element_map(el, exact))
        inputs = set(self.inputs)
        return {k: v for k, v in total.columns.items() if k.spatial in inputs}

    def to_dict(self) -> dict:
        els = []
        for el in self.elements:
            if isinstance(el, PBS):
                els.append({"kind": "PBS", "id": el.id, "in_a": el.in_a, "in_b": el.in_b,
                            "out_a": el.out_a, "out_b": el.out_b})
            elif isinstance(el, HWP):
                els.append({"kind": "HWP", "id": el.id, "mode": el.mode, "angle": _angle_to_json(el.angle)})
            else:
                els.append({"kind": "DetectorGroup", "id": el.id, "modes": list(el.modes)})
        return {
            "name": self.name,
            "inputs": list(self.inputs),
            "outputs": list(self.outputs),
            "elements": els,
            "heralding": [list(p) for p in self.heralding],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> Circuit:
        els: list[Element] = []
        for e in data["elements"]:
            kind = e["kind"]
            if kind == "PBS":
                els.append(PBS(e["in_a"], e.get("in_b"), e["out_a"], e["out_b"], e.get("id", "")))
            elif kind == "HWP":
                els.append(HWP(e["mode"], _angle_from_json(e["angle"]), e.get("id", "")))
            elif kind == "DetectorGroup":
                els.append(DetectorGroup(tuple(e["modes"]), e.get("id", "")))
            else:
                raise ValueError(f"unknown element kind {kind!r}")
        return cls(els, data["inputs"], data["outputs"], data.get("heralding", ()), data.get("name", ""))

    @classmethod
    def from_json(cls, text: str) -> Circuit:
        return cls.from_dict(json.loads(text))


def _angle_to_json(angle: Angle) -> str | float:
    if isinstance(angle, float):
        return angle
    return str(Fraction(angle))


def _angle_from_json(value) -> Angle:
    if isinstance(value, float):
        return value
    return Fraction(value)


def run(circuit: Circuit, state: PhotonicState, exact: bool | None = None) -> PhotonicState:
    """Propagate ``state`` through every element in order."""
    circuit.validate()
    stray = state.spatial_modes() - set(circuit.inputs)
    if stray:
        raise WiringError(f"input state occupies non-input modes {sorted(map(str, stray))}")
    if exact is None:
        exact = state.is_exact()
    for el in circuit.elements:
        if isinstance(el, DetectorGroup):
            continue
        state = apply_mode_map(state, element_map(el, exact))
    return state


@dataclass(frozen=True)
class HeraldOutcome:
    """One coincidence pattern's share of a circuit output.

    ``amplitudes`` are the projected, unrenormalized coefficients indexed by
    polarization string over the pattern's modes in order ("HH", "HV", ...);
    ``logical`` is the same vector renormalized (zero when the pattern never
    fires).
    """

    pattern: tuple
    probability: object
    amplitudes: dict = field(default_factory=dict)
    logical: dict = field(default_factory=dict)


def _pol_strings(k: int) -> list[str]:
    out = [""]
    for _ in range(k):
        out = [s + p for s in out for p in "HV"]
    return out


def herald(circuit: Circuit, output: PhotonicState, patterns: Iterable | None = None) -> list[HeraldOutcome]:
    """Project ``output`` onto each coincidence pattern of ``circuit``."""
    patterns = circuit.heralding if patterns is None else tuple(tuple(p) for p in patterns)
    if not patterns:
        raise ValueError("circuit declares no coincidence pattern")
    outs = set(circuit.outputs)
    total = output.norm_sq()
    results = []
    for pattern in patterns:
        bad = [m for m in pattern if m not in outs]
        if bad:
            raise WiringError(f"pattern {pattern} references non-output modes {bad}")
        sub, prob = project(output, coincidence(*pattern), total)
        amps = {}
        for pols in _pol_strings(len(pattern)):
            labels = [ModeLabel(m, Pol(p)) for m, p in zip(pattern, pols)]
            amp = 0
            for occ, a in sub:
                d = dict(occ)
                if all(d.get(l, 0) == 1 for l in labels):
                    amp = a
                    break
            amps[pols] = amp if not isinstance(amp, int) else Amplitude(amp)
        results.append(HeraldOutcome(pattern, prob, amps, _renormalize(amps, prob, total)))
    return results


def _renormalize(amps: dict, prob, total) -> dict:
    if is_zero(prob):
        return {k: Amplitude(0) if not isinstance(v, complex) else 0j for k, v in amps.items()}
    norm_sq = prob * total
    if isinstance(norm_sq, Amplitude) and norm_sq.is_rational():
        scale = norm_sq.sqrt().inverse()
    else:
        scale = 1 / math.sqrt(float(abs(complex(norm_sq))))
    return {k: v * scale for k, v in amps.items()}


def output_distribution(output: PhotonicState) -> dict:
    """Probability of every spatial photon-count pattern (both polarizations summed)."""
    total = output.norm_sq()
    dist: dict = {}
    for occ, amp in output:
        counts: dict = {}
        for lab, c in occ:
            counts[lab.spatial] = counts.get(lab.spatial, 0) + c
        key = tuple(sorted(counts.items(), key=lambda kv: str(kv[0])))
        dist[key] = dist.get(key, 0) + abs2(amp)
    return {k: v / total for k, v in dist.items()}
