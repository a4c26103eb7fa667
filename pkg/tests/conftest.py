import random

import pytest

from ontoenrich.ontology import OntologyGraph


@pytest.fixture(scope="session")
def pipeline_artifacts(tmp_path_factory):
    """One full fixture-pipeline run shared by the slower integration tests."""
    from e2efix import run_pipeline

    base = tmp_path_factory.mktemp("pipeline")
    return run_pipeline(str(base))


def make_random_graph(rng: random.Random, n_concepts: int = 20, n_relations: int = 30) -> OntologyGraph:
    """Random ontology with unique relations over a small concept pool."""
    concepts = [f"concept {i}" for i in range(n_concepts)]
    predicates = ["hypernym", "hyponym", "instanceOf", "conceptOf", "protects"]
    graph = OntologyGraph()
    triples = set()
    attempts = 0
    while len(triples) < n_relations and attempts < n_relations * 20:
        attempts += 1
        s, o = rng.sample(concepts, 2)
        p = rng.choice(predicates)
        triples.add((s, p, o))
    graph.add_triples(sorted(triples))
    return graph


@pytest.fixture
def seeded_rng():
    return random.Random(0)
