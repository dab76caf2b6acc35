"""
Test script for core.morley.

Run from project root:
    python test_morley.py
"""

from fractions import Fraction

import numpy as np
import pytest

from core.errors import FiberError
from core.logic import linear_order
from core.measure import KeislerMeasure, dirac, uniform
from core.morley import (
    average_convergence_check, commutes, epsilon_chain_verify, fiber_function, iterated_product, morley_product,
    reverse_product, rounded_average, symmetry_profile,
)
from core.parser import parse_formula
from core.theories import DLOCutAtom, LimitAtom, RealizedAtom
from core.typespace import TypeSpace, realized_type_space


class Flicker(LimitAtom):
    """Sits above everything when realized first, below everything afterwards."""
    plugin = "flicker"

    @property
    def label(self):
        return "flicker"

    def extend(self, ctx):
        element = ctx.size
        above = not ctx.fresh
        return {"lt": {(e, element) if above else (element, e) for e in range(ctx.size)}}, {}


class TestProducts:
    """Two-factor products and commutation."""

    @staticmethod
    def order(n):
        U = linear_order(n)
        return U, parse_formula("x < y", (("x",), ("y",)), U.signature)

    @staticmethod
    def single(U, phi, atom):
        return dirac(TypeSpace(U, phi, list(U.tuples(1)), [atom]), atom)

    def test_coheirs_do_not_commute(self):
        print("\n[TEST] Testing the product of two cut types...")
        U, phi = self.order(10)
        p, q = DLOCutAtom(5, "+"), DLOCutAtom(5, "+")
        delta_p, delta_q = self.single(U, phi, p), self.single(U, phi, q)
        assert morley_product(delta_p, delta_q, phi).value == 1
        assert reverse_product(delta_p, delta_q, phi).value == 0
        report = commutes(delta_p, delta_q, [phi])
        assert not report.verdict and report.max_difference == 1
        print("✓ Coheir product test passed")

    def test_uniform_against_coheir(self):
        print("\n[TEST] Testing uniform realized against half a cut...")
        U, phi = self.order(4)
        mu = uniform(realized_type_space(U, phi))
        lam = KeislerMeasure(TypeSpace(U, phi, list(U.tuples(1)), [RealizedAtom((0,)), DLOCutAtom(3, "+")]),
                             ["1/2", "1/2"])
        assert morley_product(mu, lam, phi).value == Fraction(1, 2)
        assert reverse_product(mu, lam, phi).value == Fraction(1, 2)
        fiber = fiber_function(mu, lam.space, phi)
        assert fiber.values == (0, 1)
        print("✓ Uniform against coheir test passed")

    def test_realized_pairs_commute(self):
        print("\n[TEST] Testing random realized measures commute...")
        U, phi = self.order(5)
        space = realized_type_space(U, phi)
        rng = np.random.default_rng(5)

        def random_measure():
            raw = [int(v) for v in rng.integers(0, 5, size=len(space))]
            raw[0] += 1
            return KeislerMeasure(space, [Fraction(v, sum(raw)) for v in raw])

        for _ in range(50):
            assert commutes(random_measure(), random_measure(), [phi]).verdict
        print("✓ Realized commutation test passed")

    def test_ill_defined_fiber(self):
        print("\n[TEST] Testing fiber well-definedness...")
        U, phi = self.order(4)
        mu = uniform(realized_type_space(U, phi))
        flicker = Flicker()
        with pytest.raises(FiberError):
            fiber_function(mu, TypeSpace(U, phi, list(U.tuples(1)), [flicker]), phi)
        print("✓ Fiber well-definedness test passed")


class TestIterated:
    """Products of several factors."""

    def test_three_uniform_factors(self):
        print("\n[TEST] Testing three uniform factors on a chain...")
        U = linear_order(4)
        phi = parse_formula("x < y", (("x",), ("y",)), U.signature)
        mu = uniform(realized_type_space(U, phi))
        chain = parse_formula("x1 < x2 & x2 < x3", (("x1", "x2", "x3"), ()), U.signature)
        factors = [(mu, "x1"), (mu, "x2"), (mu, "x3")]
        report = iterated_product(factors, chain)
        assert report.given.value == Fraction(1, 16)
        assert report.symmetric and report.associative
        assert set(symmetry_profile(factors, chain).values()) == {Fraction(1, 16)}
        print("✓ Three factor test passed")

    def test_too_many_factors(self):
        print("\n[TEST] Testing the factor limit...")
        U = linear_order(2)
        phi = parse_formula("x < y", (("x",), ("y",)), U.signature)
        mu = uniform(realized_type_space(U, phi))
        with pytest.raises(ValueError):
            iterated_product([(mu, f"x{i}") for i in range(7)], parse_formula("x0 = x0", (("x0",), ())))
        print("✓ Factor limit test passed")


class TestApproximation:
    """Averages, rounding and the epsilon chain."""

    @staticmethod
    def l4():
        U = linear_order(4)
        phi = parse_formula("x < y", (("x",), ("y",)), U.signature)
        return phi, uniform(realized_type_space(U, phi))

    def test_rounded_average(self):
        print("\n[TEST] Testing rounded averages...")
        phi, mu = self.l4()
        lam = KeislerMeasure(mu.space, ["1/3", "2/3", "0", "0"])
        assert rounded_average(lam, 3) == lam
        assert rounded_average(mu, 4) == mu
        print("✓ Rounded average test passed")

    def test_average_convergence(self):
        print("\n[TEST] Testing convergence along averages...")
        phi, mu = self.l4()
        atoms = mu.space.atoms
        result = average_convergence_check(mu, mu, phi, [[atoms[0]], list(atoms)])
        assert result["target"] == Fraction(3, 8)
        assert result["rows"][0]["proof_gap"] == Fraction(3, 8)
        assert result["limit_gap"] == 0
        print("✓ Average convergence test passed")

    def test_epsilon_chain(self):
        print("\n[TEST] Testing the epsilon chain on uniform measures...")
        phi, mu = self.l4()
        ledger = epsilon_chain_verify(mu, mu, phi, Fraction(1, 8))
        assert ledger.found and ledger.m == 4
        assert all(link["error"] == 0 for link in ledger.links)
        assert ledger.total <= 4 * ledger.epsilon and ledger.holds
        assert ledger.commutation["support_types_commute"]
        print("✓ Epsilon chain test passed")


def run_all_tests():
    """Run all test cases."""
    print("\n" + "="*60)
    print("TEST SUITE FOR core.morley")
    print("="*60)

    products = TestProducts()
    products.test_coheirs_do_not_commute()
    products.test_uniform_against_coheir()
    products.test_realized_pairs_commute()
    products.test_ill_defined_fiber()

    iterated = TestIterated()
    iterated.test_three_uniform_factors()
    iterated.test_too_many_factors()

    approximation = TestApproximation()
    approximation.test_rounded_average()
    approximation.test_average_convergence()
    approximation.test_epsilon_chain()

    print("\n" + "="*60)
    print("✓ ALL TESTS PASSED!")
    print("="*60 + "\n")


if __name__ == "__main__":
    run_all_tests()
