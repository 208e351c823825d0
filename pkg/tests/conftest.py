import pytest

from matrixgen.config import Config
from matrixgen.model import prepare_windows
from matrixgen.trajdata import SynthSpec, build_windows, preset, synth_scene


def small_config(**changes) -> Config:
    base = Config(
        encoder_node_hidden=8, encoder_edge_hidden=8, decoder_hidden=8, gmm_k=2,
        train_epochs=2, train_batch_size=4, gen_samples=3, gen_max_attempts=30,
    )
    return base.replace(**changes)


def two_agent_windows(n_windows=6, seed=0):
    spec = SynthSpec(
        n_agents=2 * n_windows, goals=[(2.0, 1.5), (2.0, -1.5)], speed=0.8, noise=0.01, seed=seed,
        frames=n_windows * 20, approach_steps=7, lifetime=20, group_size=2, spawn_gap=20, lane_spacing=1.5,
    )
    return build_windows(synth_scene(spec))


@pytest.fixture
def cfg():
    return small_config()


@pytest.fixture
def windows(cfg):
    return prepare_windows(two_agent_windows(), cfg)


@pytest.fixture(scope="session")
def two_goal_dir(tmp_path_factory):
    from matrixgen.trajdata import write_scene

    root = tmp_path_factory.mktemp("two_goal")
    spec = preset("two-goal", seed=1)
    spec.n_agents = 20
    spec.frames = 10 * 20
    write_scene(synth_scene(spec), root / "two-goal.txt")
    return root



# acceptance criteria register their verdicts here; printed once at the end of the run
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
