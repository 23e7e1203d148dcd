import pathlib

import pytest

from proxytypes import load_path, parse_stimuli

FIXTURES = pathlib.Path(__file__).parent / "fixtures"
SCENARIOS = ("dog", "penguin", "golden_zebra")


def scenario(name):
    kb = load_path(FIXTURES / f"{name}.kb.json")
    stimuli = parse_stimuli((FIXTURES / f"{name}.stimuli.json").read_bytes(), kb)
    return kb, {s.id: s for s in stimuli}


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def zebra():
    return scenario("golden_zebra")


@pytest.fixture(scope="session")
def dog():
    return scenario("dog")


@pytest.fixture(scope="session")
def penguin():
    return scenario("penguin")
