from __future__ import annotations

import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wfusion.amplitude import SQRT2, Amplitude
from wfusion.fock import (
    H,
    V,
    ModeCollisionError,
    ModeMap,
    PhotonicState,
    PhotonNumberMismatch,
    apply_mode_map,
    coincidence,
    inner,
    occupation,
    polarization_is,
    project,
    strip,
    tensor,
)
from wfusion.optics import HWP, PBS, element_map

HALF = SQRT2 / 2
SPATIAL = (1, 2, 3)
LABELS = [lab for m in SPATIAL for lab in (H(m), V(m))]


def beam_splitter(a, b) -> ModeMap:
    """Symmetric 50:50 splitter on the H components of modes a, b."""
    return ModeMap({H(a): {H(a): HALF, H(b): HALF}, H(b): {H(a): HALF, H(b): -HALF}})


def test_hong_ou_mandel_dip():
    out = apply_mode_map(PhotonicState.basis(H(1), H(2)), beam_splitter(1, 2))
    assert out.amplitude(occupation([H(1), H(2)])) == 0
    assert out.amplitude(occupation({H(1): 2})) == HALF
    assert out.amplitude(occupation({H(2): 2})) == -HALF
    assert out.norm_sq() == 1


def test_bunched_input_is_normalised():
    two = PhotonicState.basis(H(1), H(1))
    out = apply_mode_map(two, beam_splitter(1, 2))
    probs = {occ: out.amplitude(occ) ** 2 for occ in out.amplitudes}
    assert probs[occupation({H(1): 2})] == Fraction(1, 4)
    assert probs[occupation([H(1), H(2)])] == Fraction(1, 2)
    assert out.norm_sq() == 1


def test_canonical_form_ignores_label_order():
    a = PhotonicState.basis(V(2), H(1), H("in"))
    b = PhotonicState.basis(H("in"), H(1), V(2))
    assert a == b
    assert list(a.amplitudes) == list(b.amplitudes)


def test_zero_terms_are_pruned():
    s = PhotonicState.basis(H(1)) - PhotonicState.basis(H(1))
    assert s.is_zero()
    assert len(s) == 0


def test_mixed_photon_numbers_rejected():
    with pytest.raises(PhotonNumberMismatch):
        PhotonicState.basis(H(1)) + PhotonicState.basis(H(1), H(2))


def test_tensor_rejects_shared_modes():
    with pytest.raises(ModeCollisionError):
        tensor(PhotonicState.basis(H(1)), PhotonicState.basis(V(1)))


def test_project_probability_and_substate():
    s = (PhotonicState.basis(H(1), H(2)) + PhotonicState.basis(V(1), H(3))) * HALF
    sub, p = project(s, coincidence(1, 2))
    assert p == Fraction(1, 2)
    assert sub == PhotonicState.basis(H(1), H(2)) * HALF
    sub, p = project(s, polarization_is(1, "V"))
    assert p == Fraction(1, 2)


def test_project_commutes_with_tensor():
    a = (PhotonicState.basis(H(1)) + PhotonicState.basis(V(1))) * HALF
    b = (PhotonicState.basis(H(2)) + PhotonicState.basis(V(2))) * HALF
    sub_ab, p_ab = project(tensor(a, b), polarization_is(1, "H"))
    sub_a, p_a = project(a, polarization_is(1, "H"))
    assert p_ab == p_a
    assert sub_ab == tensor(sub_a, b)


def test_strip_refuses_entangled_modes():
    bell = (PhotonicState.basis(H(1), H(2)) + PhotonicState.basis(V(1), V(2))) * HALF
    with pytest.raises(ValueError):
        strip(bell, [1])
    product = PhotonicState.basis(H(1), V(2))
    assert strip(product, [1]) == PhotonicState.basis(V(2))


# -- independent oracle: permanents of the single-photon transfer matrix ---------------

def permanent(rows):
    n = len(rows)
    if n == 0:
        return Amplitude(1)
    total = Amplitude(0)
    for perm in itertools.permutations(range(n)):
        term = Amplitude(1)
        for i, j in enumerate(perm):
            term = term * rows[i][j]
        total = total + term
    return total


def permanent_amplitude(mode_map, inp, out):
    """<out| U |inp> = Perm(U[out, inp]) / sqrt(prod s! prod t!)."""
    ins = [lab for lab, c in inp for _ in range(c)]
    outs = [lab for lab, c in out for _ in range(c)]
    rows = [[mode_map.image(i).get(o, Amplitude(0)) for i in ins] for o in outs]
    norm = math.prod(math.factorial(c) for _, c in inp) * math.prod(math.factorial(c) for _, c in out)
    return permanent(rows) * Amplitude.sqrt_of(norm).inverse()


elements = st.one_of(
    st.builds(lambda m, k: HWP(m, Fraction(45, 2) * k), st.sampled_from(SPATIAL), st.integers(0, 7)),
    st.builds(lambda ab: PBS(ab[0], ab[1], ab[0], ab[1]), st.permutations(SPATIAL).map(lambda p: p[:2])),
)


def compose(els) -> ModeMap:
    total = ModeMap({})
    for el in els:
        total = total.then(element_map(el))
    return total


@given(st.lists(elements, min_size=1, max_size=4), st.lists(st.sampled_from(LABELS), min_size=1, max_size=3))
@settings(max_examples=40, deadline=None)
def test_mode_map_matches_permanent_oracle(els, photons):
    network = compose(els)
    inp = PhotonicState.basis(*photons)
    out = apply_mode_map(inp, network)
    (in_occ,) = inp.amplitudes
    for n_out in itertools.combinations_with_replacement(LABELS, len(photons)):
        occ = occupation(list(n_out))
        assert out.amplitude(occ) == permanent_amplitude(network, in_occ, occ)


@given(st.lists(elements, min_size=1, max_size=5), st.lists(st.sampled_from(LABELS), min_size=1, max_size=3))
@settings(max_examples=40, deadline=None)
def test_passive_networks_conserve_norm_and_photons(els, photons):
    inp = PhotonicState.basis(*photons)
    out = inp
    for el in els:
        out = apply_mode_map(out, element_map(el))
    assert out.photon_number == len(photons)
    assert out.norm_sq() == 1


def test_inner_product_is_preserved():
    a = PhotonicState.basis(H(1), V(2))
    b = (PhotonicState.basis(H(1), V(2)) + PhotonicState.basis(V(1), H(2))) * HALF
    net = compose([HWP(1, Fraction(45, 2)), PBS(1, 2, 1, 2), HWP(2, Fraction(135, 2))])
    assert inner(apply_mode_map(a, net), apply_mode_map(b, net)) == inner(a, b)


def test_float_backend_agrees_with_exact():
    inp = PhotonicState.basis(H(1), V(2))
    net_exact = compose([HWP(1, Fraction(45, 2)), PBS(1, 2, 1, 2)])
    exact = apply_mode_map(inp, net_exact)
    approx = apply_mode_map(inp.to_complex(), net_exact)
    assert approx.allclose(exact.to_complex())
