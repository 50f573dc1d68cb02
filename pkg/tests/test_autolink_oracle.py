"""Linker vs the brute-force oracle on randomized corpora (smoke-scale here;
the acceptance suite runs the full 200-corpus battery)."""

import random

import pytest

from noosphere.autolink import build_index, link

from .oracle import char_to_byte_spans, oracle_link_spans, random_corpus
from .test_autolink import FakeEntry


def assert_corpus_matches_oracle(entries):
    index = build_index(entries)
    for entry in entries:
        got = [(s.start, s.end, s.target) for s in link(entry, index).links]
        want = char_to_byte_spans(entry.content, oracle_link_spans(entry, index))
        assert got == want, (entry.title, entry.content)


@pytest.mark.parametrize("seed", range(30))
def test_linker_matches_oracle_random_corpora(seed):
    rng = random.Random(seed)
    assert_corpus_matches_oracle(random_corpus(rng, max_entries=40))


def test_oracle_agrees_on_longest_wins():
    entries = [
        FakeEntry("e1", "metric space", created_seq=1),
        FakeEntry("e2", "metric", created_seq=2),
        FakeEntry("e3", "host", content="a complete metric space here", created_seq=3),
    ]
    index = build_index(entries)
    spans = oracle_link_spans(entries[2], index)
    assert [t for _, _, t in spans] == ["e1"]
    got = [(s.start, s.end, s.target) for s in link(entries[2], index).links]
    assert got == char_to_byte_spans(entries[2].content, spans)


def test_oracle_respects_prior_longest_consuming_shorter():
    # "metric space" is consumed as one occurrence even when its target was
    # already linked, so the inner "metric" must not be linked out of it
    entries = [
        FakeEntry("e1", "metric space", created_seq=1),
        FakeEntry("e2", "metric", created_seq=2),
        FakeEntry("e3", "host", content="metric space twice: metric space", created_seq=3),
    ]
    index = build_index(entries)
    spans = oracle_link_spans(entries[2], index)
    assert [t for _, _, t in spans] == ["e1"]
    assert [(s.target) for s in link(entries[2], index).links] == ["e1"]


def test_oracle_multibyte_spans():
    entries = [
        FakeEntry("e1", "Straße", created_seq=1),
        FakeEntry("e2", "host", content="die STRASSE läuft", created_seq=2),
    ]
    index = build_index(entries)
    spans = char_to_byte_spans(entries[1].content, oracle_link_spans(entries[1], index))
    got = [(s.start, s.end, s.target) for s in link(entries[1], index).links]
    assert got == spans
    assert [t for _, _, t in spans] == ["e1"]
