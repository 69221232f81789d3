import numpy as np

from gaussblab import gauss
from gaussblab.corpus import (closed_form_bodies, corpus_id, random_symmetric_bodies,
                              standard_corpus)


def test_corpora_are_deterministic():
    a = [(l, b.to_dict()) for l, b in standard_corpus(0)]
    b = [(l, b.to_dict()) for l, b in standard_corpus(0)]
    assert a == b
    assert [l for l, _ in random_symmetric_bodies(5, 1)] == [l for l, _ in random_symmetric_bodies(5, 1)]


def test_closed_form_bodies_have_closed_forms():
    bodies = closed_form_bodies(50, 0)
    assert len(bodies) == 50
    dims = {b.dim for _, b in bodies}
    assert min(dims) >= 1 and max(dims) <= 8
    assert all(gauss.closed_form_measure(b) is not None for _, b in bodies)


def test_random_bodies_dimensions():
    bodies = random_symmetric_bodies(100, 0)
    assert {b.dim for _, b in bodies} <= set(range(2, 7))
    kinds = {l.split("-")[0] for l, _ in bodies}
    assert kinds == {"polytope", "ellipsoid"}


def test_corpus_id():
    assert corpus_id(0) == "standard-v1:seed=0:facets=auto"
    assert corpus_id(3, 12) == "standard-v1:seed=3:facets=12"
