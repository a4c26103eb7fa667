"""Ontology enrichment toolkit.

Builds labeled term-pair datasets from a knowledge-graph endpoint, trains a
bidirectional recurrent dependency-path classifier over a similarity-filtered
domain corpus, and enriches a seed ontology with concepts, relations and
instances extracted from web text, with a human review loop for candidate
triples.
"""

__version__ = "0.1.0"
