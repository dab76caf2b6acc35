THEORY_DEFAULTS = {
    "dlo": {
        "relation": "lt",
    },
    "random_graph": {
        "relation": "E",
        "fresh_adjacency": 0,
    }
}

DEPENDENCE_DEFAULTS = {
    "k_max": 8,
    "witness_samples": 3,
    "vc_exhaustive_limit": 20,
    "shatter_budget": 200000,
}

MORLEY_DEFAULTS = {
    "max_factors": 6,
    "trace_limit": 16,
    "chain_max_m": 256,
}

EMPIRICS_DEFAULTS = {
    "n_ladder": [4, 16, 64, 256],
    "trials": 200,
    "seed": 0,
    "budget_tuples": 10**6,  # count vectors (multisets of support atoms) per n, see core.fim.exact_cost
    "n_max": 64,
    "mc_samples": 20000,
    "confidence": 0.95,
    "hull_size": 3,
}

CLI_DEFAULTS = {
    "threads_env": "KEISLER_LAB_THREADS",
    "out": "results",
    "exit_ok": 0,
    "exit_invalid": 2,
    "exit_budget": 3,
}

SCENARIO_PRESETS = {
    "dlo-coheirs": {
        "order_size": 10,
        "fragment_size": 4,
        "cut": 5,
        "side": "+",
        "epsilon": "1/4",
    },
    "l4-uniform": {
        "order_size": 4,
        "cut": 3,
        "side": "+",
        "epsilon": "1/4",
    },
    "bernoulli-cube": {
        "m": 8,
        "k_max": 4,
        "epsilon": "1/4",
    },
    "random-graph-trivial": {
        "vertices": 6,
        "edge_prob": 0.5,
        "seed": 3,
        "epsilon": "1/4",
    }
}
