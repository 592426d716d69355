import pytest

from kgsemcom.config import ExperimentConfig, config_from_dict
from kgsemcom.experiments import Workspace
from kgsemcom.synthetic import generate_split


def tiny_config(**sections) -> ExperimentConfig:
    raw = {"data": {"synthetic_graphs": 100}, "encoder": {"d_z": 16}, "train": {"epochs": 3}}
    for sec, vals in sections.items():
        raw.setdefault(sec, {}).update(vals)
    return config_from_dict(raw)


@pytest.fixture(scope="session")
def tiny_dataset():
    return generate_split(100, seed=3)


@pytest.fixture(scope="session")
def tiny_workspace(tiny_dataset):
    return Workspace.build(tiny_config(), tiny_dataset)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
