import pytest
from hypothesis import given, strategies as st

from xyzsim.errors import GeometryError, SizeLimitError
from xyzsim.lattice import build_chain, build_rect


def test_periodic_chain_bonds():
    geom = build_chain(4, True)
    assert set(geom.bonds) == {(0, 1), (1, 2), (2, 3), (0, 3)}
    assert geom.n_sites == 4


def test_two_site_chain_deduplicates_wrap_bond():
    geom = build_chain(2, True)
    assert geom.bonds == ((0, 1),)


def test_open_chain():
    geom = build_chain(3, False)
    assert set(geom.bonds) == {(0, 1), (1, 2)}


def test_chain_too_short():
    with pytest.raises(GeometryError):
        build_chain(1, True)


def test_rect_3x3_periodic():
    geom = build_rect(3, 3, True)
    assert len(geom.bonds) == 18
    assert set(geom.degrees()) == {4}


def test_rect_2x2_dedup():
    geom = build_rect(2, 2, True)
    assert set(geom.bonds) == {(0, 1), (0, 2), (1, 3), (2, 3)}


def test_rect_2x2_doubled_bonds():
    geom = build_rect(2, 2, True, dedupe=False)
    assert len(geom.bonds) == 8
    assert set(geom.bonds) == {(0, 1), (0, 2), (1, 3), (2, 3)}


def test_rect_degenerate_row_is_chain():
    assert build_rect(4, 1, True).bonds == build_chain(4, True).bonds


def test_size_limit():
    with pytest.raises(SizeLimitError):
        build_rect(5, 4, True)
    with pytest.raises(SizeLimitError):
        build_chain(17, True)


@given(st.integers(2, 12), st.booleans())
def test_chain_degree_sum(length, periodic):
    geom = build_chain(length, periodic)
    assert sum(geom.degrees()) == 2 * len(geom.bonds)
    assert all(0 <= i < length and 0 <= j < length for i, j in geom.bonds)
    assert len(set(geom.bonds)) == len(geom.bonds)


@given(st.integers(2, 4), st.integers(1, 4))
def test_rect_degree_sum_and_ranges(lx, ly):
    geom = build_rect(lx, ly, True)
    n = lx * ly
    assert geom.n_sites == n
    assert sum(geom.degrees()) == 2 * len(geom.bonds)
    assert all(0 <= i < n and 0 <= j < n for i, j in geom.bonds)


def test_rect_bond_count_above_extent_two():
    geom = build_rect(3, 4, True)
    assert len(geom.bonds) == 2 * 12


@given(st.integers(3, 10), st.integers(1, 9))
def test_chain_translation_invariance(length, shift):
    geom = build_chain(length, True)
    translated = {tuple(sorted(((i + shift) % length, (j + shift) % length)))
                  for i, j in geom.bonds}
    assert translated == set(geom.bonds)


@given(st.integers(3, 4), st.integers(3, 4), st.integers(0, 3), st.integers(0, 3))
def test_rect_translation_invariance(lx, ly, dx, dy):
    geom = build_rect(lx, ly, True)

    def shift(site):
        x, y = site % lx, site // lx
        return (x + dx) % lx + lx * ((y + dy) % ly)

    translated = {tuple(sorted((shift(i), shift(j)))) for i, j in geom.bonds}
    assert translated == set(geom.bonds)
