from pathlib import Path

import pytest

from hswlm.estimation import EstimationConfig, estimate_hswlm, initialize
from hswlm.evalkit.synth import SynthSpec, synth_corpus
from hswlm.parsimony import ParsimonyConfig

FIXTURES = Path(__file__).parent / "fixtures"

# Planted corpus used throughout: 2 statuses x 3 parties x 5 members,
# 20 docs of 50 tokens per member, 20 planted terms per entity, 100 general.
PLANTED_SPEC = SynthSpec(fanouts=(2, 3, 5), planted_terms=20, general_terms=100,
                         docs_per_leaf=20, doc_length=50,
                         proportions=(0.2, 0.6, 0.15, 0.05), periods=2, seed=42)
# entity-specific weight at or below the smallest planted share (members: 0.05)
PLANTED_CONFIG = EstimationConfig(parsimony=ParsimonyConfig(lam=0.05))


@pytest.fixture(scope="session")
def planted():
    return synth_corpus(PLANTED_SPEC)


@pytest.fixture(scope="session")
def planted_corpus(planted):
    return planted.periods["period0"]


@pytest.fixture(scope="session")
def planted_models(planted_corpus):
    models, trace = estimate_hswlm(planted_corpus, PLANTED_CONFIG)
    return models, trace


@pytest.fixture(scope="session")
def planted_mle(planted_corpus):
    return initialize(planted_corpus)


@pytest.fixture(scope="session")
def tiny_paths():
    return FIXTURES / "tiny_hierarchy.json", FIXTURES / "tiny_docs.jsonl"


# one PASS/FAIL line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
