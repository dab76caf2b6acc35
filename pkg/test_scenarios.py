"""
Test script for the built-in scenario suite.

Run from project root:
    python test_scenarios.py
"""

from fractions import Fraction

from cli.scenarios import SCENARIOS, bernoulli_cube, dlo_coheirs, l4_uniform
from config import SCENARIO_PRESETS
from core.io import parse_structure
from core.theories import is_simple_graph


class TestScenarioSuite:
    """Checks that run over every shipped scenario."""

    _built = {}

    @classmethod
    def build_suite(cls):
        if not cls._built:
            cls._built.update({name: build() for name, build in SCENARIOS.items()})
        return cls._built

    def test_epsilon_chain_on_every_scenario(self):
        print("\n[TEST] Testing the epsilon chain on every scenario...")
        suite = self.build_suite()
        for name, result in suite.items():
            chain = result["epsilon_chain"]
            assert chain["holds"], f"{name}: chain does not hold ({chain['total']} vs {chain['bound']})"
            assert Fraction(chain["total"]) <= Fraction(chain["bound"]) == 4 * Fraction(chain["epsilon"])
            assert len(chain["links"]) == 4
        print("✓ epsilon chain suite test passed")

    def test_commutation_criterion_on_every_scenario(self):
        print("\n[TEST] Testing the commutation criterion on every scenario...")
        suite = self.build_suite()
        for name, result in suite.items():
            criterion = result["criterion"]
            assert criterion["consistent"], f"{name}: hypotheses hold but {criterion['verdict']}"
            if criterion["hypotheses_hold"]:
                assert criterion["verdict"] == "commute"
        # the two scenarios where the criterion is not vacuous
        for name in ("l4-uniform", "bernoulli-cube"):
            assert suite[name]["criterion"]["hypotheses_hold"], name
        print("✓ commutation criterion suite test passed")


class TestScenarioPanels:
    """Single-scenario panels."""

    def test_dlo_coheir_panel(self):
        print("\n[TEST] Testing the dlo-coheirs panel...")
        result = dlo_coheirs()
        assert (result["p_q"], result["q_p"]) == ("1/1", "0/1")
        assert result["verdict"] == "non-commuting"
        assert not result["definable_over_fragment"]["holds"]
        assert result["definable_over_fragment"]["witness"] is not None
        assert result["finitely_satisfiable"]["holds"]
        assert not result["criterion"]["definable"]
        assert not result["criterion"]["hypotheses_hold"]
        print("✓ dlo-coheirs panel test passed")

    def test_l4_criterion_values(self):
        print("\n[TEST] Testing the criterion report on L4...")
        criterion = l4_uniform()["criterion"]
        assert criterion["rho_1"] == "3/4"
        assert criterion["definable"] and criterion["finitely_satisfiable"]
        print("✓ L4 criterion test passed")

    def test_bernoulli_isolated_vertex(self):
        print("\n[TEST] Testing the small cube against an isolated generic vertex...")
        result = bernoulli_cube({"m": 4}, k_max=2)
        assert result["rho_2_matches"]
        criterion = result["criterion"]
        assert criterion["rho_1"] == "7/8"
        assert criterion["hypotheses_hold"] and criterion["verdict"] == "commute"
        assert result["epsilon_chain"]["total"] == "0/1"
        print("✓ isolated vertex test passed")

    def test_random_graph_structure_file(self):
        print("\n[TEST] Testing the generated graph written as a structure file...")
        result = TestScenarioSuite.build_suite()["random-graph-trivial"]
        G = parse_structure(result["structure_file"])
        assert is_simple_graph(G)
        assert G.size == SCENARIO_PRESETS["random-graph-trivial"]["vertices"]
        print("✓ Structure file test passed")


def run_all_tests():
    """Run all test cases."""
    print("\n" + "="*60)
    print("TEST SUITE FOR cli.scenarios")
    print("="*60)

    suite_tests = TestScenarioSuite()
    suite_tests.test_epsilon_chain_on_every_scenario()
    suite_tests.test_commutation_criterion_on_every_scenario()

    panels = TestScenarioPanels()
    panels.test_dlo_coheir_panel()
    panels.test_l4_criterion_values()
    panels.test_bernoulli_isolated_vertex()
    panels.test_random_graph_structure_file()

    print("\n" + "="*60)
    print("✓ ALL TESTS PASSED!")
    print("="*60 + "\n")


if __name__ == "__main__":
    run_all_tests()
