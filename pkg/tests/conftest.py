import pytest

from ecm_invade.runio import build_run_config, default_config


def tiny_tree(**updates):
    """Small fast configuration for io/cli mechanics tests."""
    tree = default_config()
    tree["grid"].update(max=10.0)
    tree["t_end"] = 2.0
    tree["snapshot_interval"] = 1.0
    node = tree
    for key, value in updates.items():
        node[key] = value
    return tree


@pytest.fixture(scope="session")
def tiny_run(tmp_path_factory):
    """One completed explicit run shared by cli/plots/driver tests."""
    from ecm_invade.driver import run_simulation

    out = tmp_path_factory.mktemp("tiny_run")
    cfg = build_run_config(tiny_tree())
    result = run_simulation(cfg, out_root=out)
    return result
