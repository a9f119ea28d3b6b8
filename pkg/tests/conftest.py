import pytest

from droplet_channel import default_scenario, run_simulation


@pytest.fixture(scope="session")
def cfg():
    return default_scenario("average")


@pytest.fixture(scope="session")
def mean_cfg(cfg):
    return cfg.with_controls(stochastic=False)


@pytest.fixture(scope="session")
def mean_run(mean_cfg):
    """Averaged face at x_R = 1.5 m, horizontal cough, mean propagation."""
    return run_simulation(mean_cfg)
