"""
Test script for core.typespace and core.theories.

Run from project root:
    python test_typespace.py
"""

import numpy as np
import pytest

from core.errors import TypeSpaceError, UndecidableInstance
from core.logic import empty_graph, instance, linear_order, random_graph
from core.measure import dirac, pushforward, uniform
from core.parser import parse_formula
from core.theories import (
    DLOCutAtom, ExtensionContext, RandomGraphAtom, RealizedAtom, is_simple_graph, is_strict_linear_order, parse_atom,
    realize,
)
from core.typespace import (
    TypeSpace, default_battery, definable_over_fragment, finitely_satisfiable_in, realized_type_space,
    restriction_map, saturation_level, trace_matrix,
)


def less(U):
    return parse_formula("x < y", (("x",), ("y",)), U.signature)


class TestTraces:
    """Trace matrices and realized type spaces."""

    @staticmethod
    def l4_space():
        L4 = linear_order(4)
        return realized_type_space(L4, less(L4))

    def test_l4_rows(self):
        print("\n[TEST] Testing L4 trace rows...")
        space = self.l4_space()
        assert len(space) == 4
        assert space.trace.row_strings() == ["0111", "0011", "0001", "0000"], space.trace.row_strings()
        assert space.quotient[(2,)] == 2
        print("✓ L4 trace rows test passed")

    def test_quotient_merges_equal_rows(self):
        print("\n[TEST] Testing quotient of equal traces...")
        G = empty_graph(3)
        phi = parse_formula("E(x,y)", (("x",), ("y",)), G.signature)
        space = realized_type_space(G, phi)
        assert len(space) == 1, "every vertex of the empty graph has the zero trace"
        assert set(space.quotient.values()) == {0}
        print("✓ Quotient test passed")

    def test_trace_matrix_shape(self):
        print("\n[TEST] Testing trace matrix shape...")
        L4 = linear_order(4)
        trace = trace_matrix(L4, less(L4), [(0,), (3,)], [(1,), (2,), (3,)])
        assert trace.shape == (2, 3)
        assert np.array_equal(trace.bits, np.array([[1, 1, 1], [0, 0, 0]], dtype=bool))
        assert trace.transpose().shape == (3, 2)
        print("✓ Trace matrix test passed")

    def test_restriction(self):
        print("\n[TEST] Testing restriction to a sub-base...")
        space = self.l4_space()
        small, mapping = restriction_map(space, [(1,), (2,)])
        assert len(small) == 3
        assert mapping == (0, 1, 2, 2)
        image = pushforward(uniform(space), mapping, small)
        assert [str(w) for w in image.weights] == ["1/4", "1/4", "1/2"]
        with pytest.raises(TypeSpaceError):
            restriction_map(space, [(7,)])
        print("✓ Restriction test passed")

    def test_restriction_composes(self):
        print("\n[TEST] Testing restriction along B -> A1 -> A2...")
        rng = np.random.default_rng(7)
        for seed in range(5):
            G = random_graph(9, 0.5, seed=seed)
            space = realized_type_space(G, parse_formula("E(x,y)", (("x",), ("y",)), G.signature))
            base = list(space.params)
            A1 = [base[j] for j in sorted(rng.choice(len(base), size=6, replace=False))]
            A2 = [A1[j] for j in sorted(rng.choice(len(A1), size=3, replace=False))]
            mid, first = restriction_map(space, A1)
            end, second = restriction_map(mid, A2)
            direct, mapping = restriction_map(space, A2)
            assert end.atoms == direct.atoms
            assert tuple(second[i] for i in first) == mapping
            mu = uniform(space)
            assert pushforward(pushforward(mu, first, mid), second, end).weights == \
                pushforward(mu, mapping, direct).weights
        print("✓ Restriction composition test passed")


class TestAtoms:
    """Limit atoms over the finite orders and graphs."""

    def test_dlo_cut_traces(self):
        print("\n[TEST] Testing DLO cut traces...")
        L4 = linear_order(4)
        phi = less(L4)
        ctx = ExtensionContext(L4)
        params = [(b,) for b in range(4)]
        assert DLOCutAtom(1, "+").trace(ctx, phi, params) == [False, False, True, True]
        assert DLOCutAtom(1, "-").trace(ctx, phi, params) == [False, True, True, True]
        assert ctx.size == 4, "tracing works on a scratch clone"
        print("✓ DLO cut traces test passed")

    def test_later_realizations_sit_closer(self):
        print("\n[TEST] Testing repeated realizations of one cut...")
        L4 = linear_order(4)
        ctx = ExtensionContext(L4)
        q = DLOCutAtom(3, "+")
        (first,) = realize(ctx, q)
        (second,) = realize(ctx, q)
        M = ctx.structure()
        assert M.holds("lt", (3, second)) and M.holds("lt", (second, first))
        assert ctx.realization_order() == [(first, q.label), (second, q.label)]
        print("✓ Repeated realization test passed")

    def test_random_graph_atom(self):
        print("\n[TEST] Testing generic random-graph atoms...")
        G = empty_graph(4)
        phi = parse_formula("E(x,y)", (("x",), ("y",)), G.signature)
        ctx = ExtensionContext(G)
        params = [(b,) for b in range(4)]
        assert RandomGraphAtom("0101").trace(ctx, phi, params) == [False, True, False, True]
        with pytest.raises(UndecidableInstance):
            RandomGraphAtom("01").trace(ctx, phi, params)
        print("✓ Random graph atom test passed")

    def test_parse_atom(self):
        print("\n[TEST] Testing atom declarations...")
        assert parse_atom(["realized", "0", "1"]) == RealizedAtom((0, 1))
        assert parse_atom(["dlo-cut", "3", "+"]) == DLOCutAtom(3, "+")
        assert parse_atom(["rg-generic", "011", "fresh=1"]).fresh_adjacency == 1
        for bad in (["dlo-cut", "3", "*"], ["rg-generic", "012"], ["unknown"], ["realized"]):
            with pytest.raises(ValueError):
                parse_atom(bad)
        print("✓ Atom declaration test passed")

    def test_colliding_atoms_rejected(self):
        print("\n[TEST] Testing atoms that share a trace...")
        L4 = linear_order(4)
        phi = less(L4)
        with pytest.raises(TypeSpaceError):
            TypeSpace(L4, phi, list(L4.tuples(1)), [RealizedAtom((3,)), DLOCutAtom(3, "+")])
        print("✓ Collision test passed")

    def test_orders_and_graphs_survive_realization(self):
        print("\n[TEST] Testing the context stays an order or a simple graph...")
        rng = np.random.default_rng(3)
        for _ in range(10):
            ctx = ExtensionContext(linear_order(5))
            for _ in range(6):
                if rng.random() < 0.5:
                    atom = DLOCutAtom(int(rng.integers(5)), "+-"[int(rng.integers(2))])
                else:
                    atom = RealizedAtom((int(rng.integers(5)),))
                realize(ctx, atom)
                assert is_strict_linear_order(ctx.structure()), ctx.realization_order()

            G = random_graph(6, 0.5, seed=int(rng.integers(100)))
            ctx = ExtensionContext(G)
            for _ in range(6):
                if rng.random() < 0.5:
                    atom = RandomGraphAtom("".join(rng.choice(["0", "1"], size=6)))
                else:
                    atom = RealizedAtom((int(rng.integers(6)),))
                realize(ctx, atom)
                assert is_simple_graph(ctx.structure()), ctx.realization_order()
        print("✓ Realization invariants test passed")

    def test_cut_placed_against_realized_copy(self):
        print("\n[TEST] Testing a cut realized after a copy of a base element...")
        ctx = ExtensionContext(linear_order(5))
        (copy,) = realize(ctx, RealizedAtom((2,)))
        (cut,) = realize(ctx, DLOCutAtom(2, "+"))
        M = ctx.structure()
        assert is_strict_linear_order(M)
        assert M.holds("lt", (2, copy)) and M.holds("lt", (copy, cut)) and M.holds("lt", (cut, 3))
        (below,) = realize(ctx, DLOCutAtom(2, "-"))
        assert ctx.structure().holds("lt", (below, 2))
        print("✓ Copy placement test passed")


class TestFragmentChecks:
    """Finite satisfiability, definability and the saturation level."""

    def test_coheir_is_finitely_satisfiable(self):
        print("\n[TEST] Testing finite satisfiability of a coheir...")
        U = linear_order(10)
        phi = less(U)
        M_sub = (0, 1, 2, 3)
        report = finitely_satisfiable_in(DLOCutAtom(5, "+"), M_sub, default_battery(phi, M_sub), structure=U)
        assert report.holds
        assert report.checked == 8
        assert report.to_dict()["method"] == "fragment-check"
        print("✓ Coheir finite satisfiability test passed")

    def test_failure_witness(self):
        print("\n[TEST] Testing the witness of a failed check...")
        U = linear_order(10)
        phi = less(U)
        M_sub = (6, 7, 8, 9)
        report = finitely_satisfiable_in(DLOCutAtom(5, "-"), M_sub, default_battery(phi, M_sub), structure=U)
        assert not report.holds
        assert report.witness == instance(phi, (6,))
        print("✓ Failure witness test passed")

    def test_definability(self):
        print("\n[TEST] Testing definability over a fragment...")
        U = linear_order(10)
        phi = less(U)
        p = DLOCutAtom(5, "+")
        delta = dirac(TypeSpace(U, phi, list(U.tuples(1)), [p]), p)
        report = definable_over_fragment(delta, phi, range(4), U)
        assert not report.holds
        assert report.witness == ((4,), (6,)), report.witness
        assert definable_over_fragment(uniform(realized_type_space(U, phi)), phi, range(10), U).holds
        print("✓ Definability test passed")

    def test_saturation_level(self):
        print("\n[TEST] Testing the saturation level of an extension...")
        L4 = linear_order(4)
        phi = less(L4)
        ctx = ExtensionContext(L4)
        assert saturation_level(ctx, range(4), phi, 2).level == 2
        realize(ctx, DLOCutAtom(3, "+"))
        report = saturation_level(ctx, range(4), phi, 2)
        assert report.level == 1
        assert report.missing is not None
        print("✓ Saturation level test passed")


def run_all_tests():
    """Run all test cases."""
    print("\n" + "="*60)
    print("TEST SUITE FOR core.typespace")
    print("="*60)

    traces = TestTraces()
    traces.test_l4_rows()
    traces.test_quotient_merges_equal_rows()
    traces.test_trace_matrix_shape()
    traces.test_restriction()
    traces.test_restriction_composes()

    atoms = TestAtoms()
    atoms.test_dlo_cut_traces()
    atoms.test_later_realizations_sit_closer()
    atoms.test_random_graph_atom()
    atoms.test_parse_atom()
    atoms.test_colliding_atoms_rejected()
    atoms.test_orders_and_graphs_survive_realization()
    atoms.test_cut_placed_against_realized_copy()

    checks = TestFragmentChecks()
    checks.test_coheir_is_finitely_satisfiable()
    checks.test_failure_witness()
    checks.test_definability()
    checks.test_saturation_level()

    print("\n" + "="*60)
    print("✓ ALL TESTS PASSED!")
    print("="*60 + "\n")


if __name__ == "__main__":
    run_all_tests()
