"""
Test script for core.dependence.

Run from project root:
    python test_dependence.py
"""

import time
from fractions import Fraction
from itertools import product

import numpy as np

from core.dependence import (
    bernoulli_ratio, dependence_rank, dk_report, dk_set, dk_set_naive, ip_witness, vc_dimension,
)
from core.logic import FiniteStructure, Signature, empty_graph, linear_order
from core.measure import dirac, uniform
from core.parser import parse_formula
from core.theories import RandomGraphAtom, RealizedAtom
from core.typespace import TypeSpace, realized_type_space


def l4_uniform():
    L4 = linear_order(4)
    phi = parse_formula("x < y", (("x",), ("y",)), L4.signature)
    return uniform(realized_type_space(L4, phi))


def cube(m):
    """Uniform measure on all 2^m adjacency patterns over m isolated vertices."""
    G = empty_graph(m)
    phi = parse_formula("E(x,y)", (("x",), ("y",)), G.signature)
    atoms = [RandomGraphAtom("".join(bits)) for bits in product("01", repeat=m)]
    return uniform(TypeSpace(G, phi, list(G.tuples(1)), atoms))


def family_space(bits):
    """Type space whose trace matrix is the given set family."""
    n_atoms, n_cols = bits.shape
    U = linear_order(max(n_atoms, n_cols, 2))
    phi = parse_formula("x < y", (("x",), ("y",)), U.signature)
    atoms = [RealizedAtom((i,)) for i in range(n_atoms)]
    return TypeSpace(U, phi, [(j,) for j in range(n_cols)], atoms, bits=bits)


class TestDependence:
    """D_k masses, ratios and ranks."""

    def test_l4_rank(self):
        print("\n[TEST] Testing rho_1 on the uniform L4 measure...")
        mu = l4_uniform()
        report = dk_report(mu, None, None, 1)
        assert report.ratio == Fraction(3, 4), f"rho_1 = {report.ratio}"
        assert report.witness_count == 3
        assert report.to_row() == {"k": 1, "dk_mass_num": 3, "dk_mass_den": 4, "ratio_num": 3, "ratio_den": 4, "witness_count": 3}
        assert report.to_dict()["ratio"] == "3/4"
        assert dependence_rank(mu, None, None, 3).rank == 1
        print("✓ L4 rank test passed")

    def test_dirac_ratios_vanish(self):
        print("\n[TEST] Testing Dirac measures...")
        space = l4_uniform().space
        for atom in space.atoms:
            delta = dirac(space, atom)
            for k in (2, 3):
                assert dk_report(delta, None, None, k).ratio == 0, f"rho_{k} of {atom.label}"
        print("✓ Dirac ratios test passed")

    def test_pattern_overflow_flag(self):
        print("\n[TEST] Testing k beyond the parameter count...")
        report = dk_report(l4_uniform(), None, None, 3)
        assert report.flagged and report.ratio == 0
        print("✓ Overflow flag test passed")

    def test_event_restriction(self):
        print("\n[TEST] Testing ratios relative to an event...")
        mu = l4_uniform()
        E = mu.space.atoms[:3]
        report = dk_report(mu, None, E, 1)
        assert report.event_mass == Fraction(3, 4)
        assert report.ratio == 1, "every atom of E splits the parameters"
        print("✓ Event restriction test passed")

    def test_bernoulli_closed_form(self):
        print("\n[TEST] Testing rho_2 of the Bernoulli cube...")
        assert bernoulli_ratio(8) == Fraction(5103, 8192)
        previous = Fraction(0)
        start = time.perf_counter()
        for m in range(4, 13):
            ratio = dk_report(cube(m), None, None, 2).ratio
            assert ratio == bernoulli_ratio(m), f"m = {m}: {ratio} != {bernoulli_ratio(m)}"
            assert ratio > previous, "rho_2 grows with m"
            previous = ratio
        elapsed = time.perf_counter() - start
        assert elapsed < 30, f"m = 4..12 took {elapsed:.1f} s"
        print(f"  m = 4..12 in {elapsed:.2f} s")
        print("✓ Bernoulli closed form test passed")

    def test_random_families(self):
        print("\n[TEST] Testing D_k against the naive oracle on random families...")
        rng = np.random.default_rng(11)
        for _ in range(100):
            n_atoms = int(rng.integers(1, 7))
            n_cols = int(rng.integers(1, 9))
            bits = np.unique(rng.integers(0, 2, size=(n_atoms, n_cols)).astype(bool), axis=0)
            space = family_space(bits)
            vc = vc_dimension(space.trace, over="rows").vc_dim
            for k in range(1, 4):
                fast = dk_set(space, None, None, k)
                assert fast == dk_set_naive(space, None, None, k), f"k = {k} on\n{bits.astype(int)}"
                if k > vc:
                    assert not fast, f"D_{k} should be empty above vc = {vc}"
            rank = dependence_rank(uniform(space), None, None, vc + 1).rank
            assert rank is not None and rank <= vc + 1
        print("✓ Random families test passed")


class TestVC:
    """VC dimension and IP witnesses."""

    def test_l4_vc(self):
        print("\n[TEST] Testing VC dimension of x < y on L4...")
        report = vc_dimension(l4_uniform().space.trace, over="rows")
        assert report.vc_dim == 1 and report.exact
        assert report.shatter_function == [2, 3], report.shatter_function
        assert report.uniform_nip_bound == 2
        print("✓ L4 VC test passed")

    def test_cube_vc(self):
        print("\n[TEST] Testing VC dimension of the cube...")
        assert vc_dimension(cube(4).space.trace, over="rows").vc_dim == 2
        assert vc_dimension(cube(4).space.trace, over="columns").vc_dim == 4
        print("✓ Cube VC test passed")

    def test_ip_witness(self):
        print("\n[TEST] Testing IP witnesses...")
        sig = Signature(relations=(("R", 2),))
        M = FiniteStructure(sig, 8, {"R": [(i, y) for i in range(3) for y in range(8) if y >> i & 1]})
        phi = parse_formula("R(x,y)", (("x",), ("y",)), sig)
        assert ip_witness(M, phi, 3) == ((0,), (1,), (2,))
        assert ip_witness(M, phi, 4) is None
        print("✓ IP witness test passed")


def run_all_tests():
    """Run all test cases."""
    print("\n" + "="*60)
    print("TEST SUITE FOR core.dependence")
    print("="*60)

    dependence = TestDependence()
    dependence.test_l4_rank()
    dependence.test_dirac_ratios_vanish()
    dependence.test_pattern_overflow_flag()
    dependence.test_event_restriction()
    dependence.test_bernoulli_closed_form()
    dependence.test_random_families()

    vc = TestVC()
    vc.test_l4_vc()
    vc.test_cube_vc()
    vc.test_ip_witness()

    print("\n" + "="*60)
    print("✓ ALL TESTS PASSED!")
    print("="*60 + "\n")


if __name__ == "__main__":
    run_all_tests()
