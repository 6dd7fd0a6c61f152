"""Few-photon multimode bosonic states.

A state is a sparse map from occupation patterns to amplitudes.  Each
pattern is the canonically ordered tuple of ``(ModeLabel, count)`` pairs and
the amplitude multiplies the *normalized* occupation ket ``|n1, n2, ...>``.
The bunching factors ``sqrt(n!)`` therefore appear whenever a mode map
sends several photons into one mode, and nowhere else.

Amplitudes are either exact (:class:`~wfusion.amplitude.Amplitude`, ``int``,
``Fraction``) or ``complex``; every operation is written against the
arithmetic protocol both satisfy.
"""

from __future__ import annotations

import enum
import itertools
import math
from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Union

from .amplitude import Amplitude, abs2, conj, is_exact, is_zero

Spatial = Union[int, str]


class Pol(str, enum.Enum):
    H = "H"
    V = "V"

    def __str__(self) -> str:
        return self.value


def _spatial_key(s: Spatial) -> tuple:
    if isinstance(s, int):
        return (0, s, "")
    return (1, 0, str(s))


@dataclass(frozen=True)
class ModeLabel:
    """A (spatial mode, polarization) slot."""

    spatial: Spatial
    pol: Pol

    def __post_init__(self) -> None:
        object.__setattr__(self, "pol", Pol(self.pol))

    def sort_key(self) -> tuple:
        return _spatial_key(self.spatial) + (self.pol.value,)

    def __lt__(self, other: ModeLabel) -> bool:
        return self.sort_key() < other.sort_key()

    def __str__(self) -> str:
        return f"{self.spatial}{self.pol.value}"


def H(spatial: Spatial) -> ModeLabel:
    return ModeLabel(spatial, Pol.H)


def V(spatial: Spatial) -> ModeLabel:
    return ModeLabel(spatial, Pol.V)


def _label(x) -> ModeLabel:
    if isinstance(x, ModeLabel):
        return x
    spatial, pol = x
    return ModeLabel(spatial, Pol(pol))


Occupation = tuple[tuple[ModeLabel, int], ...]


def occupation(counts: Mapping[ModeLabel, int] | Iterable[ModeLabel]) -> Occupation:
    """Canonical occupation pattern from a count map or a list of labels."""
    if isinstance(counts, Mapping):
        items = {_label(k): int(v) for k, v in counts.items()}
    else:
        items = {}
        for lab in counts:
            lab = _label(lab)
            items[lab] = items.get(lab, 0) + 1
    if any(v < 0 for v in items.values()):
        raise ValueError("negative photon count")
    return tuple(sorted(((k, v) for k, v in items.items() if v), key=lambda kv: kv[0].sort_key()))


class FockTerm(NamedTuple):
    occupations: Occupation
    amplitude: object


class ModeCollisionError(ValueError):
    """Two states that were expected to be disjoint share a spatial mode."""


class PhotonNumberMismatch(ValueError):
    pass


class PhotonicState:
    """Immutable superposition of occupation kets with a fixed photon number."""

    __slots__ = ("_terms", "_n")

    def __init__(self, terms: Mapping[Occupation, object] | Iterable[tuple[Occupation, object]] = ()):
        raw = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[Occupation, object] = {}
        for occ, amp in raw:
            occ = occupation(dict(occ))
            acc[occ] = acc[occ] + amp if occ in acc else amp
        kept = {occ: amp for occ, amp in acc.items() if not is_zero(amp)}
        numbers = {sum(c for _, c in occ) for occ in kept}
        if len(numbers) > 1:
            raise PhotonNumberMismatch(f"terms carry different photon numbers {sorted(numbers)}")
        self._terms = dict(sorted(kept.items(), key=lambda kv: [(l.sort_key(), c) for l, c in kv[0]]))
        self._n = numbers.pop() if numbers else 0

    # -- constructors ---------------------------------------------------------

    @classmethod
    def basis(cls, *labels, amplitude=1) -> PhotonicState:
        """Single occupation ket; repeated labels put several photons in one slot."""
        if isinstance(amplitude, (int, Fraction)):
            amplitude = Amplitude(amplitude)
        return cls({occupation([_label(x) for x in labels]): amplitude})

    @classmethod
    def vacuum(cls) -> PhotonicState:
        return cls({(): Amplitude(1)})

    @classmethod
    def zero(cls) -> PhotonicState:
        return cls()

    # -- views ------------------------------------------------------------------

    @property
    def photon_number(self) -> int:
        return self._n

    @property
    def amplitudes(self) -> dict[Occupation, object]:
        return dict(self._terms)

    def terms(self) -> list[FockTerm]:
        return [FockTerm(o, a) for o, a in self._terms.items()]

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms.items())

    def amplitude(self, occ) -> object:
        """Coefficient of an occupation (canonical tuple, count map or label list)."""
        if isinstance(occ, tuple) and all(isinstance(x, tuple) and len(x) == 2 and isinstance(x[1], int)
                                          and isinstance(x[0], ModeLabel) for x in occ):
            occ = dict(occ)
        return self._terms.get(occupation(occ), Amplitude(0))

    def spatial_modes(self) -> frozenset:
        return frozenset(l.spatial for occ in self._terms for l, _ in occ)

    def labels(self) -> frozenset[ModeLabel]:
        return frozenset(l for occ in self._terms for l, _ in occ)

    def is_exact(self) -> bool:
        return all(is_exact(a) for a in self._terms.values())

    def is_zero(self) -> bool:
        return not self._terms

    def norm_sq(self):
        total = Amplitude(0) if self.is_exact() else 0.0
        for amp in self._terms.values():
            total = total + abs2(amp)
        return total

    def to_complex(self) -> PhotonicState:
        return PhotonicState({o: complex(a) for o, a in self._terms.items()})

    # -- linear structure -----------------------------------------------------

    def __add__(self, other: PhotonicState) -> PhotonicState:
        if not isinstance(other, PhotonicState):
            return NotImplemented
        return PhotonicState(itertools.chain(self._terms.items(), other._terms.items()))

    def __sub__(self, other: PhotonicState) -> PhotonicState:
        return self + (-1) * other

    def __neg__(self) -> PhotonicState:
        return (-1) * self

    def __mul__(self, scalar) -> PhotonicState:
        if isinstance(scalar, PhotonicState):
            return NotImplemented
        if isinstance(scalar, (int, Fraction)):
            scalar = Amplitude(scalar)
        return PhotonicState({o: a * scalar for o, a in self._terms.items()})

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, PhotonicState):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        return hash(tuple(self._terms.items()))

    def allclose(self, other: PhotonicState, tol: float = 1e-10) -> bool:
        keys = set(self._terms) | set(other._terms)
        return all(abs(complex(self._terms.get(k, 0)) - complex(other._terms.get(k, 0))) < tol for k in keys)

    # -- rendering ------------------------------------------------------------

    def render(self) -> str:
        """Debug rendering: one ``amplitude |slots>`` line per term, canonical order."""
        if not self._terms:
            return "0"
        lines = []
        for occ, amp in self._terms.items():
            slots = ", ".join(f"{l}" if c == 1 else f"{l}^{c}" for l, c in occ)
            lines.append(f"({amp}) |{slots}>")
        return "\n".join(lines)

    def __repr__(self) -> str:
        return f"PhotonicState(<{len(self._terms)} terms, {self._n} photons>)"


def tensor(s1: PhotonicState, s2: PhotonicState) -> PhotonicState:
    """Product state of two states on disjoint spatial modes."""
    shared = s1.spatial_modes() & s2.spatial_modes()
    if shared:
        raise ModeCollisionError(f"states share spatial modes {sorted(map(str, shared))}")
    out = {}
    for o1, a1 in s1:
        for o2, a2 in s2:
            out[o1 + o2] = a1 * a2
    return PhotonicState(out)


def tensor_all(states: Iterable[PhotonicState]) -> PhotonicState:
    result = PhotonicState.vacuum()
    for s in states:
        result = tensor(result, s)
    return result


def inner(s1: PhotonicState, s2: PhotonicState):
    """``<s1|s2>`` in the normalized occupation basis."""
    if s1.photon_number != s2.photon_number and not (s1.is_zero() or s2.is_zero()):
        raise PhotonNumberMismatch(f"{s1.photon_number} vs {s2.photon_number} photons")
    exact = s1.is_exact() and s2.is_exact()
    total = Amplitude(0) if exact else 0j
    t2 = s2.amplitudes
    for occ, a1 in s1:
        if occ in t2:
            total = total + conj(a1) * t2[occ]
    return total


# -- mode maps ------------------------------------------------------------------

class ModeMap:
    """Linear substitution of creation operators.

    ``columns[label]`` lists the output creation operators (with coefficients)
    that replace the input creation operator ``label``.  Labels absent from
    the map are left alone.
    """

    def __init__(self, columns: Mapping[ModeLabel, Mapping[ModeLabel, object]]):
        self.columns = {
            _label(k): {_label(o): c for o, c in v.items() if not is_zero(c)} for k, v in columns.items()
        }

    @classmethod
    def from_matrix(cls, inputs, outputs, matrix) -> ModeMap:
        """``matrix[i][j]`` is the coefficient of output ``i`` for input ``j``."""
        inputs = [_label(x) for x in inputs]
        outputs = [_label(x) for x in outputs]
        if len(matrix) != len(outputs) or any(len(row) != len(inputs) for row in matrix):
            raise ValueError(
                f"matrix shape does not match {len(outputs)} outputs x {len(inputs)} inputs"
            )
        return cls({inp: {out: matrix[i][j] for i, out in enumerate(outputs)} for j, inp in enumerate(inputs)})

    def image(self, label: ModeLabel) -> dict[ModeLabel, object]:
        return self.columns.get(label, {label: Amplitude(1)})

    def then(self, other: ModeMap) -> ModeMap:
        """Composite map: apply ``self`` first, then ``other``."""
        keys = set(self.columns) | set(other.columns)
        out: dict[ModeLabel, dict[ModeLabel, object]] = {}
        for k in keys:
            acc: dict[ModeLabel, object] = {}
            for mid, c1 in self.image(k).items():
                for o, c2 in other.image(mid).items():
                    acc[o] = acc[o] + c1 * c2 if o in acc else c1 * c2
            out[k] = acc
        return ModeMap(out)


def _sqrt_factorial(n: int) -> Amplitude:
    return Amplitude.sqrt_of(math.factorial(n))


def apply_mode_map(state: PhotonicState, mode_map: ModeMap | Mapping) -> PhotonicState:
    """Substitute every creation operator by its image and re-collect.

    A term ``c * prod_i (a_i^dag)^{n_i} / sqrt(n_i!) |0>`` is expanded photon
    by photon; each resulting monomial ``prod_j (b_j^dag)^{k_j} |0>`` equals
    ``prod_j sqrt(k_j!)`` times the normalized ket.
    """
    if not isinstance(mode_map, ModeMap):
        mode_map = ModeMap(mode_map)
    out: dict[Occupation, object] = {}
    for occ, amp in state:
        photons: list[ModeLabel] = []
        norm = Amplitude(1)
        for lab, count in occ:
            photons.extend([lab] * count)
            if count > 1:
                norm = norm * _sqrt_factorial(count)
        base = amp * norm.inverse() if count_bunched(occ) else amp
        images = [list(mode_map.image(p).items()) for p in photons]
        for choice in itertools.product(*images):
            coeff = base
            counts: dict[ModeLabel, int] = {}
            for lab, c in choice:
                coeff = coeff * c
                counts[lab] = counts.get(lab, 0) + 1
            for k in counts.values():
                if k > 1:
                    coeff = coeff * _sqrt_factorial(k)
            key = occupation(counts)
            out[key] = out[key] + coeff if key in out else coeff
    return PhotonicState(out)


def count_bunched(occ: Occupation) -> bool:
    return any(c > 1 for _, c in occ)


# -- measurement ----------------------------------------------------------------

Predicate = Callable[[dict], bool]


def project(state: PhotonicState, predicate: Predicate, norm_sq=None):
    """Keep the terms whose occupation satisfies ``predicate``.

    Returns the unrenormalized sub-state and its probability relative to
    ``norm_sq`` (default: the norm of ``state``).
    """
    kept = {occ: amp for occ, amp in state if predicate(dict(occ))}
    sub = PhotonicState(kept)
    total = state.norm_sq() if norm_sq is None else norm_sq
    if is_zero(total):
        raise ZeroDivisionError("cannot project a zero-norm state")
    if sub.is_zero():
        return sub, (Amplitude(0) if sub.is_exact() and state.is_exact() else 0.0)
    return sub, sub.norm_sq() / total


def spatial_count(occ: dict, spatial: Spatial) -> int:
    return sum(c for l, c in occ.items() if l.spatial == spatial)


def coincidence(*spatial: Spatial) -> Predicate:
    """Exactly one photon in each listed spatial mode (either polarization)."""
    def pred(occ: dict) -> bool:
        return all(spatial_count(occ, s) == 1 for s in spatial)
    return pred


def polarization_is(spatial: Spatial, pol: Pol | str) -> Predicate:
    """Exactly one photon in ``spatial`` and it has polarization ``pol``."""
    lab = ModeLabel(spatial, Pol(pol))

    def pred(occ: dict) -> bool:
        return spatial_count(occ, spatial) == 1 and occ.get(lab, 0) == 1
    return pred


def all_of(*preds: Predicate) -> Predicate:
    return lambda occ: all(p(occ) for p in preds)


def always(_occ: dict) -> bool:
    return True


def strip(state: PhotonicState, spatial: Iterable[Spatial]) -> PhotonicState:
    """Remove spatial modes whose occupation is identical in every term.

    Used after a projective measurement has fixed those modes; raises if the
    removed modes are still entangled with the rest.
    """
    spatial = set(spatial)
    parts = set()
    out = {}
    for occ, amp in state:
        removed = tuple(x for x in occ if x[0].spatial in spatial)
        parts.add(removed)
        out[tuple(x for x in occ if x[0].spatial not in spatial)] = amp
    if len(parts) > 1:
        raise ValueError(f"modes {sorted(map(str, spatial))} are not in a definite state")
    return PhotonicState(out)


def relabel(state: PhotonicState, mapping: Mapping[Spatial, Spatial]) -> PhotonicState:
    """Rename spatial modes (polarization untouched)."""
    out = {}
    for occ, amp in state:
        counts = {}
        for l, c in occ:
            new = ModeLabel(mapping.get(l.spatial, l.spatial), l.pol)
            counts[new] = counts.get(new, 0) + c
        out[occupation(counts)] = amp
    return PhotonicState(out)
