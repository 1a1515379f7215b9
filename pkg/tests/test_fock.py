import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from localborn.errors import DegenerateDominant, ZeroOperator
from localborn.fock import (
    AccessibilityPartition,
    FockSpace,
    FockStateVector,
    accessible_unitary_action,
    horizon_radius,
    occupations,
    partition_from_radius,
    strip,
    strip_normalized,
)
from localborn.io import load_fock_fixture
from localborn.statespace import StateVector, embed_pure, random_unitary
from oracles import dense_partial_trace


def random_state(space, rng, n_terms=None):
    basis = space.basis()
    n_terms = len(basis) if n_terms is None else min(n_terms, len(basis))
    picks = rng.choice(len(basis), size=n_terms, replace=False)
    terms = {basis[i]: complex(rng.normal(), rng.normal()) for i in picks}
    return FockStateVector(space, terms)


def number_block_unitary(space, rng):
    """Random unitary on accessible occupations preserving accessible particle number."""
    basis = space.accessible_basis()
    u = np.zeros((len(basis), len(basis)), dtype=complex)
    for total in {sum(b) for b in basis}:
        idx = [i for i, b in enumerate(basis) if sum(b) == total]
        u[np.ix_(idx, idx)] = random_unitary(len(idx), rng)
    return u


spaces = st.tuples(st.integers(1, 4), st.integers(1, 3), st.data())


def draw_space(data, dim, max_total):
    accessible = data.draw(st.sets(st.integers(0, dim - 1)))
    return FockSpace.build(dim, sorted(accessible), max_total)


class TestPartition:
    def test_threshold(self):
        p = partition_from_radius((0, 1, 2, 3), r_l=1, c=1, T=1)
        assert p.accessible_modes == (0, 1, 2)
        assert p.inaccessible_modes == (3,)

    def test_degenerate_horizon(self):
        p = partition_from_radius((0.5, 1), r_l=0, c=1, T=0)
        assert p.accessible_modes == ()
        assert p.inaccessible_modes == (0, 1)

    def test_arithmetic(self):
        assert horizon_radius(1, 2, 1) == 3
        assert partition_from_radius((0, 2, 4), r_l=1, c=2, T=1).accessible_modes == (0, 1)

    def test_boundary_is_accessible(self):
        assert partition_from_radius((3.0,), r_l=1, c=2, T=1).accessible_modes == (0,)

    def test_must_cover_basis(self):
        with pytest.raises(ValueError):
            AccessibilityPartition(3, frozenset({0}), frozenset({1}))

    def test_must_be_disjoint(self):
        with pytest.raises(ValueError):
            AccessibilityPartition(2, frozenset({0, 1}), frozenset({1}))

    def test_negative_inputs(self):
        with pytest.raises(ValueError):
            partition_from_radius((0, 1), r_l=-1, c=1, T=1)


class TestFockSpace:
    def test_occupation_count(self):
        # C(n_modes + N, N) lists with total <= N
        assert len(list(occupations(3, 2))) == math.comb(5, 2)
        assert next(iter(occupations(3, 2))) == (0, 0, 0)

    def test_split_join(self):
        space = FockSpace.build(4, [1, 3], max_total=3)
        occ = (1, 0, 0, 2)
        n_a, n_i = space.split(occ)
        assert n_a == (0, 2) and n_i == (1, 0)
        assert space.join(n_a, n_i) == occ

    def test_truncation_enforced(self):
        space = FockSpace.build(2, [0], max_total=2)
        with pytest.raises(ValueError):
            FockStateVector(space, {(2, 1): 1.0})

    def test_pruning(self):
        space = FockSpace.build(2, [0], max_total=1)
        psi = FockStateVector(space, {(0, 0): 1e-16, (1, 0): 1.0})
        assert list(psi.terms) == [(1, 0)]


class TestStrip:
    def test_fully_accessible(self, rng):
        space = FockSpace.build(3, [0, 1, 2], max_total=2)
        psi = random_state(space, rng)
        out = strip(psi)
        expected = embed_pure(StateVector(psi.to_dense(out.basis)))
        assert out.operator.allclose(expected, atol=1e-12)

    def test_fully_inaccessible_maps_to_vacuum(self, fixtures_dir):
        psi = load_fock_fixture(fixtures_dir / "fock_inaccessible.json")
        out = strip(psi)
        assert out.basis[0] == (0,)
        expected = np.zeros((len(out.basis),) * 2)
        expected[0, 0] = 1.0
        assert out.operator.allclose(expected, atol=1e-12)

    def test_mixed_example(self, fixtures_dir):
        psi = load_fock_fixture(fixtures_dir / "fock_mixed.json")
        c0, c1, c1p = 0.5, 0.5 + 0.5j, 0.5
        out = strip(psi)
        assert out.basis == ((0,), (1,))
        expected = embed_pure(StateVector.of(c0, c1)).entries + abs(c1p) ** 2 * np.diag([1, 0])
        assert out.operator.allclose(expected, atol=1e-12)
        rho, acc = dense_partial_trace(psi.space, psi.terms)
        assert acc == list(out.basis)
        assert np.allclose(out.operator.entries, rho, atol=1e-12)

    @pytest.mark.parametrize("name", ["fock_inaccessible.json", "fock_mixed.json"])
    def test_fixtures_match_dense_partial_trace(self, fixtures_dir, name):
        psi = load_fock_fixture(fixtures_dir / name)
        rho, _ = dense_partial_trace(psi.space, psi.terms)
        assert np.allclose(strip(psi).operator.entries, rho, atol=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(spaces, st.integers(0, 2**32 - 1))
    def test_random_states_match_dense_partial_trace(self, space_args, seed):
        dim, max_total, data = space_args
        space = draw_space(data, dim, max_total)
        psi = random_state(space, np.random.default_rng(seed))
        rho, _ = dense_partial_trace(space, psi.terms)
        assert np.allclose(strip(psi).operator.entries, rho, atol=1e-10)

    @settings(max_examples=60, deadline=None)
    @given(spaces, st.integers(0, 2**32 - 1))
    def test_trace_bookkeeping(self, space_args, seed):
        dim, max_total, data = space_args
        space = draw_space(data, dim, max_total)
        psi = random_state(space, np.random.default_rng(seed))
        assert strip(psi).trace == pytest.approx(psi.norm_sq, abs=1e-10)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 4), st.integers(1, 3), st.integers(0, 2**32 - 1))
    def test_accessible_unitary_equivariance(self, dim, max_total, seed):
        rng = np.random.default_rng(seed)
        n_acc = int(rng.integers(1, dim + 1))
        space = FockSpace.build(dim, sorted(rng.choice(dim, n_acc, replace=False)), max_total)
        psi = random_state(space, rng)
        u = number_block_unitary(space, rng)
        lhs = strip(accessible_unitary_action(psi, u)).operator.entries
        rhs = u @ strip(psi).operator.entries @ u.conj().T
        assert np.max(np.abs(lhs - rhs)) <= 1e-9

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_additive_across_inaccessible_lists(self, seed):
        rng = np.random.default_rng(seed)
        space = FockSpace.build(3, [0], max_total=3)
        groups = {}
        for occ in space.basis():
            groups.setdefault(space.split(occ)[1], []).append(occ)
        keys = list(groups)
        rng.shuffle(keys)
        cut = int(rng.integers(1, len(keys)))
        first = {o: complex(rng.normal(), rng.normal()) for k in keys[:cut] for o in groups[k]}
        second = {o: complex(rng.normal(), rng.normal()) for k in keys[cut:] for o in groups[k]}
        psi1, psi2 = FockStateVector(space, first), FockStateVector(space, second)
        total = strip(psi1 + psi2).operator.entries
        parts = strip(psi1).operator.entries + strip(psi2).operator.entries
        # equal up to float summation order
        assert np.max(np.abs(total - parts)) <= 1e-13 * max(1.0, np.abs(parts).max())


def _photon_out_state(alpha, beta):
    # accessible mode 0 (the memory), inaccessible modes 1, 2 (outgoing photons e1, e2)
    space = FockSpace.build(3, [0], max_total=2)
    return FockStateVector(space, {(1, 1, 0): alpha, (0, 0, 1): beta})


class TestStripNormalized:
    def test_fully_accessible_fixed_point(self, rng):
        space = FockSpace.build(2, [0, 1], max_total=2)
        psi = random_state(space, rng)
        psi = psi.scaled(1 / math.sqrt(psi.norm_sq))
        basis = space.accessible_basis()
        v = strip_normalized(psi)
        dense = psi.to_dense(basis)
        overlap = abs(np.vdot(v.amplitudes, dense))
        assert overlap == pytest.approx(1.0, abs=1e-12)

    def test_dominant_memory_state(self):
        v = strip_normalized(_photon_out_state(0.8, 0.6))
        assert v.allclose(StateVector.of(0, 1, 0), atol=1e-12)  # basis (0,), (1,), (2,)

    def test_small_dominant_branch_reversed(self):
        v = strip_normalized(_photon_out_state(0.6, 0.8j))
        assert v.allclose(StateVector.of(1, 0, 0), atol=1e-12)

    def test_equal_weights_tie(self):
        s = 1 / math.sqrt(2)
        with pytest.raises(DegenerateDominant):
            strip_normalized(_photon_out_state(s, s))

    def test_zero_state(self):
        space = FockSpace.build(2, [0], max_total=1)
        with pytest.raises(ZeroOperator):
            strip_normalized(FockStateVector(space, {}))

    def test_phase_convention(self):
        space = FockSpace.build(1, [0], max_total=1)
        v = strip_normalized(FockStateVector(space, {(0,): -0.6j, (1,): 0.8}))
        assert v[0].real > 0 and v[0].imag == 0
