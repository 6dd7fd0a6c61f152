"""The nonunitary partial-swap gate.

Abstractly the gate is the 4x4 map ``N`` on (HH, HV, VH, VV) that swaps the
two polarization qubits when the first is H and does nothing otherwise, so
HV and VH both land on VH.  Optically it is a six-PBS network whose
coincidence patterns (9, 11) and (10, 12) each herald ``N / (2 sqrt 2)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .amplitude import SQRT2, Amplitude, abs2, is_zero
from .fock import ModeLabel, PhotonicState, Pol, Spatial
from .optics import HWP, PBS, Circuit, herald, run

BASIS = ("HH", "HV", "VH", "VV")
PATTERNS = ((9, 11), (10, 12))
INPUT_MODES = ("in", "in'")


@dataclass(frozen=True)
class TwoQubitMap:
    """4x4 matrix over exact amplitudes, basis order HH, HV, VH, VV."""

    rows: tuple

    def __post_init__(self) -> None:
        rows = tuple(tuple(Amplitude.coerce(x) if isinstance(x, (int, Fraction)) else x for x in r)
                     for r in self.rows)
        if len(rows) != 4 or any(len(r) != 4 for r in rows):
            raise ValueError("TwoQubitMap needs a 4x4 matrix")
        object.__setattr__(self, "rows", rows)

    @classmethod
    def identity(cls) -> TwoQubitMap:
        return cls(tuple(tuple(int(i == j) for j in range(4)) for i in range(4)))

    @classmethod
    def from_columns(cls, cols: Sequence[Sequence]) -> TwoQubitMap:
        return cls(tuple(tuple(cols[j][i] for j in range(4)) for i in range(4)))

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def __matmul__(self, other: TwoQubitMap) -> TwoQubitMap:
        return TwoQubitMap(tuple(
            tuple(sum((self.rows[i][k] * other.rows[k][j] for k in range(4)), Amplitude(0)) for j in range(4))
            for i in range(4)
        ))

    def dagger(self) -> TwoQubitMap:
        return TwoQubitMap(tuple(tuple(self.rows[j][i].conjugate() for j in range(4)) for i in range(4)))

    def scale(self, c) -> TwoQubitMap:
        return TwoQubitMap(tuple(tuple(x * c for x in r) for r in self.rows))

    def apply(self, vec: Sequence) -> tuple:
        return tuple(sum((self.rows[i][j] * vec[j] for j in range(4)), Amplitude(0)) for i in range(4))

    def is_identity(self) -> bool:
        return self == TwoQubitMap.identity()

    def proportionality(self, other: TwoQubitMap):
        """Scalar ``c`` with ``self == c * other`` exactly, or ``None``."""
        c = None
        for i in range(4):
            for j in range(4):
                a, b = self.rows[i][j], other.rows[i][j]
                if is_zero(b):
                    if not is_zero(a):
                        return None
                    continue
                if c is None:
                    c = a / b
        if c is None:
            return None
        return c if self == other.scale(c) else None

    def __str__(self) -> str:
        width = max(len(str(x)) for r in self.rows for x in r)
        return "\n".join("  ".join(str(x).rjust(width) for x in r) for r in self.rows)


def n_pswap() -> TwoQubitMap:
    """The ideal partial-swap map."""
    return TwoQubitMap((
        (1, 0, 0, 0),
        (0, 0, 0, 0),
        (0, 1, 1, 0),
        (0, 0, 0, 1),
    ))


def is_unitary(m: TwoQubitMap) -> bool:
    return (m @ m.dagger()).is_identity() and (m.dagger() @ m).is_identity()


_N_TABLE = {
    (Pol.H, Pol.H): (Pol.H, Pol.H),
    (Pol.H, Pol.V): (Pol.V, Pol.H),
    (Pol.V, Pol.H): (Pol.V, Pol.H),
    (Pol.V, Pol.V): (Pol.V, Pol.V),
}


def _single_photon(occ, spatial: Spatial) -> Pol:
    found = [(lab, c) for lab, c in occ if lab.spatial == spatial]
    if len(found) != 1 or found[0][1] != 1:
        raise ValueError(f"mode {spatial!r} is not singly occupied in every term")
    return found[0][0].pol


def apply_pswap(state: PhotonicState, mode1: Spatial, mode2: Spatial, factor=None) -> PhotonicState:
    """Apply ``N`` to the polarization qubits carried by ``mode1`` and ``mode2``.

    ``factor`` multiplies every amplitude (``1/(2 sqrt 2)`` models the
    heralded optical gate); the output is left unnormalized.
    """
    out = {}
    for occ, amp in state:
        p1, p2 = _single_photon(occ, mode1), _single_photon(occ, mode2)
        q1, q2 = _N_TABLE[(p1, p2)]
        rest = [(lab, c) for lab, c in occ if lab.spatial not in (mode1, mode2)]
        new = tuple(rest) + ((ModeLabel(mode1, q1), 1), (ModeLabel(mode2, q2), 1))
        out[new] = out[new] + amp if new in out else amp
    result = PhotonicState(out)
    return result if factor is None else result * factor


def build_pswap_circuit() -> Circuit:
    """Post-selected linear-optical partial-swap gate on inputs ``in``, ``in'``.

    Photon 1 is split by PBS1 (H -> 1, V -> 2) and photon 2 by PBS2
    (V -> 3, H -> 4).  Both arms leaving PBS3 and both arms leaving PBS4 carry
    a wave plate; this placement is what the stepwise joint states require.
    """
    elements = [
        PBS("in", None, 1, 2, id="PBS1"),
        PBS("in'", None, 4, 3, id="PBS2"),
        HWP(1, 45, id="HWP1"),
        HWP(3, Fraction(135, 2), id="HWP2"),
        HWP(4, Fraction(45, 2), id="HWP3"),
        PBS(3, 2, 5, 6, id="PBS3"),
        PBS(4, 1, 7, 8, id="PBS4"),
        HWP(5, Fraction(135, 2), id="HWP4a"),
        HWP(6, Fraction(135, 2), id="HWP4b"),
        HWP(7, Fraction(45, 2), id="HWP5a"),
        HWP(8, Fraction(45, 2), id="HWP5b"),
        PBS(8, 5, 9, 10, id="PBS5"),
        PBS(7, 6, 11, 12, id="PBS6"),
        HWP(10, 45, id="HWP6a"),
        HWP(12, 45, id="HWP6b"),
    ]
    return Circuit(elements, INPUT_MODES, (9, 10, 11, 12), PATTERNS, name="partial-swap")


_STAGES = {1: (5, (1, 2, 3, 4)), 2: (11, (5, 6, 7, 8)), 3: (15, (9, 10, 11, 12))}


def pswap_stage(step: int) -> Circuit:
    """The partial-swap network truncated after stage ``step`` (1, 2 or 3)."""
    n, outputs = _STAGES[step]
    full = build_pswap_circuit()
    heralding = full.heralding if step == 3 else ()
    return Circuit(full.elements[:n], full.inputs, outputs, heralding, name=f"partial-swap stage {step}")


def basis_input(label: str) -> PhotonicState:
    p1, p2 = label
    return PhotonicState.basis(ModeLabel("in", Pol(p1)), ModeLabel("in'", Pol(p2)))


def two_qubit_input(vec: Sequence) -> PhotonicState:
    """Arbitrary two-qubit input ``sum_k alpha_k |basis_k>`` on modes ``in``, ``in'``."""
    if len(vec) != 4:
        raise ValueError("expected four amplitudes")
    state = PhotonicState()
    for amp, label in zip(vec, BASIS):
        if not is_zero(amp):
            state = state + basis_input(label) * amp
    return state


def postselected_map(pattern: Iterable[int], circuit: Circuit | None = None) -> TwoQubitMap:
    """Heralded logical map for one coincidence pattern.

    Column ``j`` is the projected logical amplitude vector produced by basis
    input ``j``; the first pattern mode carries qubit 1.
    """
    pattern = tuple(pattern)
    circuit = circuit or build_pswap_circuit()
    if pattern not in circuit.heralding:
        raise ValueError(f"unknown coincidence pattern {pattern}; expected one of {circuit.heralding}")
    cols = []
    for label in BASIS:
        out = run(circuit, basis_input(label))
        (h,) = herald(circuit, out, [pattern])
        cols.append([h.amplitudes[b] for b in BASIS])
    return TwoQubitMap.from_columns(cols)


HERALD_SCALE = (SQRT2 / 4)  # 1/(2 sqrt 2)


def coincidence_table(circuit: Circuit | None = None) -> list[dict]:
    """Coincidence probabilities for every basis input and pattern.

    Each row holds ``<n_{H x} n_{H y}>, <n_{H x} n_{V y}>, <n_{V x} n_{H y}>,
    <n_{V x} n_{V y}>`` for pattern ``(x, y)``.
    """
    circuit = circuit or build_pswap_circuit()
    rows = []
    for label in BASIS:
        out = run(circuit, basis_input(label))
        for h in herald(circuit, out):
            probs = [abs2(h.amplitudes[b]) / out.norm_sq() for b in BASIS]
            rows.append({
                "pattern": list(h.pattern),
                "basis_input": label,
                "coincidence_probs": probs,
            })
    return rows


COINCIDENCE_EXPECTED = {
    "HH": (Fraction(1, 8), 0, 0, 0),
    "HV": (0, 0, Fraction(1, 8), 0),
    "VH": (0, 0, Fraction(1, 8), 0),
    "VV": (0, 0, 0, Fraction(1, 8)),
}


def gate_success_probability(vec: Sequence, circuit: Circuit | None = None):
    """Total heralding probability over both coincidence patterns (optical run)."""
    circuit = circuit or build_pswap_circuit()
    state = two_qubit_input(vec)
    if state.is_zero():
        raise ValueError("input state is zero")
    out = run(circuit, state)
    total = None
    for h in herald(circuit, out):
        total = h.probability if total is None else total + h.probability
    return total


def matrix_success_probability(vec: Sequence):
    """``|N psi|^2 / (4 |psi|^2)``: the same quantity from the abstract map."""
    out = n_pswap().apply(vec)
    num = sum((abs2(x) for x in out), Amplitude(0))
    den = sum((abs2(x) for x in vec), Amplitude(0))
    return num / (den * 4)


CELL_NAMES = ("<nH nH>", "<nH nV>", "<nV nH>", "<nV nV>")


@dataclass
class GateCheck:
    """Outcome of checking a partial-swap network against the ideal gate."""

    passed: bool
    scalars: dict  # pattern -> proportionality scalar (None when not proportional)
    table: list  # coincidence_table-style rows
    failures: list  # human-readable diffs, first failure first


def _close(a, b, exact: bool, tol: float = 1e-12) -> bool:
    if exact:
        return a == b
    return abs(complex(a) - complex(b)) < tol


def _float_scalar(m: TwoQubitMap, ref: TwoQubitMap, tol: float = 1e-12):
    import numpy as np

    a = np.array([[complex(x) for x in r] for r in m.rows])
    b = np.array([[complex(x) for x in r] for r in ref.rows])
    i, j = np.unravel_index(np.argmax(abs(b)), b.shape)
    c = a[i, j] / b[i, j]
    return c if np.allclose(a, c * b, atol=tol) else None


def verify_gate(circuit: Circuit | None = None, exact: bool = True) -> GateCheck:
    """Reproduce the coincidence table and heralded maps, comparing to the ideal gate."""
    circuit = circuit or build_pswap_circuit()
    failures = []
    table = []
    cols: dict = {p: [] for p in circuit.heralding}
    for label in BASIS:
        out = run(circuit, basis_input(label), exact=exact)
        total = out.norm_sq()
        for h in herald(circuit, out):
            probs = [abs2(h.amplitudes[b]) / total for b in BASIS]
            if not exact:
                probs = [float(abs(complex(p))) for p in probs]
            table.append({"pattern": list(h.pattern), "basis_input": label, "coincidence_probs": probs})
            cols[h.pattern].append([h.amplitudes[b] for b in BASIS])
            for cell, got, want in zip(CELL_NAMES, probs, COINCIDENCE_EXPECTED[label]):
                if not _close(got, want, exact):
                    failures.append(
                        f"input {label}, pattern {tuple(h.pattern)}, cell {cell}: expected {want}, got {got}"
                    )
    scalars = {}
    for pattern, c in cols.items():
        m = TwoQubitMap.from_columns(c)
        scalar = m.proportionality(n_pswap()) if exact else _float_scalar(m, n_pswap())
        scalars[pattern] = scalar
        if scalar is None:
            failures.append(f"pattern {pattern}: heralded map is not proportional to N")
        elif not _close(scalar, HERALD_SCALE, exact):
            failures.append(f"pattern {pattern}: scalar {scalar} differs from 1/(2 sqrt 2)")
    return GateCheck(not failures, scalars, table, failures)
