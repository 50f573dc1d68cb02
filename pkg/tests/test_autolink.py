"""Tokenizer and linker behavior on concrete inputs, plus hypothesis properties."""

from dataclasses import dataclass, field

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noosphere.autolink import (
    TermIndex,
    build_index,
    link,
    normalize_term,
    strip_links,
    tokenize,
)


@dataclass
class FakeEntry:
    id: str
    title: str
    content: str = ""
    synonyms: list = field(default_factory=list)
    created_seq: int = 0


def kinds(source):
    return [s.kind for s in tokenize(source).segments]


def test_plain_text_single_segment():
    tk = tokenize("a complete metric space")
    assert [s.kind for s in tk.segments] == ["text"]
    assert tk.diagnostics == []


def test_inline_math_split():
    source = "Let $T\\colon X \\to X$ be a contraction transformation of a complete metric space"
    tk = tokenize(source)
    assert [s.kind for s in tk.segments] == ["text", "inline-math", "text"]
    assert "".join(s.content for s in tk.segments) == source


def test_comment_to_eol():
    tk = tokenize("% metric space\n")
    assert [(s.kind, s.content) for s in tk.segments] == [("comment", "% metric space\n")]


def test_comment_at_eof_without_newline():
    tk = tokenize("text % trailing")
    assert [s.kind for s in tk.segments] == ["text", "comment"]


def test_display_math_dollars_and_brackets():
    assert kinds("a $$x$$ b") == ["text", "display-math", "text"]
    assert kinds("a \\[x\\] b") == ["text", "display-math", "text"]
    assert kinds("a \\(x\\) b") == ["text", "inline-math", "text"]


@pytest.mark.parametrize("env", ["equation", "equation*", "align", "align*", "eqnarray", "eqnarray*"])
def test_math_environments(env):
    source = f"before \\begin{{{env}}} x=y \\end{{{env}}} after"
    tk = tokenize(source)
    assert [s.kind for s in tk.segments] == ["text", "display-math", "text"]


def test_non_math_environment_is_command():
    tk = tokenize("\\begin{itemize} item \\end{itemize}")
    assert [s.kind for s in tk.segments] == ["command", "text", "command"]


def test_nested_same_environment():
    source = "\\begin{align} a \\begin{align} b \\end{align} c \\end{align} tail"
    tk = tokenize(source)
    assert [s.kind for s in tk.segments] == ["display-math", "text"]
    assert tk.segments[1].content == " tail"


def test_verb_segments():
    tk = tokenize("use \\verb|$x$| here")
    assert [s.kind for s in tk.segments] == ["text", "verbatim", "text"]
    assert tk.segments[1].content == "\\verb|$x$|"


def test_escaped_dollar_is_not_math():
    tk = tokenize("costs \\$5 total")
    assert [s.kind for s in tk.segments] == ["text", "command", "text"]
    assert tk.diagnostics == []


def test_unbalanced_math_degrades_to_text_with_diagnostic():
    tk = tokenize("fine $x never closes")
    assert [s.kind for s in tk.segments] == ["text", "text"]
    assert tk.segments[1].content == "$x never closes"
    assert len(tk.diagnostics) == 1
    assert "unterminated" in tk.diagnostics[0]


def test_unbalanced_environment_degrades():
    tk = tokenize("ok \\begin{align} x = y")
    assert tk.segments[-1].kind == "text"
    assert tk.diagnostics


def test_byte_spans_with_multibyte_chars():
    source = "naïve $α$ tail"
    tk = tokenize(source)
    blob = source.encode()
    for segment in tk.segments:
        assert blob[segment.start : segment.end] == segment.content.encode()
    assert tk.segments[-1].end == len(blob)


TEXTISH = st.text(
    alphabet=st.sampled_from(list("ab yz$\\%{}()[]*|\nüß% vé")),
    max_size=80,
)


@settings(max_examples=300, deadline=None)
@given(TEXTISH)
def test_partition_property(source):
    tk = tokenize(source)
    assert "".join(s.content for s in tk.segments) == source
    # spans tile the byte range exactly
    pos = 0
    for segment in tk.segments:
        assert segment.start == pos
        assert segment.end > segment.start
        pos = segment.end
    assert pos == len(source.encode())


def test_normalize_term():
    assert normalize_term("  Banach   Fixed\tPoint ") == "banach fixed point"
    assert normalize_term("ODE") == "ode"
    assert normalize_term("Straße") == "strasse"


def test_build_index_titles_synonyms_and_duplicate_tiebreak():
    entries = [
        FakeEntry("e2", "Limit point", created_seq=5),
        FakeEntry("e1", "Limit point", created_seq=3),
        FakeEntry("e3", "Ordinary differential equation", synonyms=["ODE"], created_seq=7),
    ]
    index = build_index(entries)
    assert index.terms["limit point"] == "e1"  # oldest creation seq wins
    assert index.terms["ode"] == "e3"
    assert index.terms["ordinary differential equation"] == "e3"
    assert len(index) == 3


@pytest.fixture
def index():
    idx = TermIndex()
    idx.add("metric space", "e1")
    idx.add("metric", "e2")
    idx.add("compact", "e3")
    return idx


def test_longest_match_wins(index):
    entry = FakeEntry("e9", "Completeness", content="a complete metric space")
    result = link(entry, index)
    assert [(s.target,) for s in result.links] == [("e1",)]
    assert "\\nooslink{e1}{metric space}" in result.content


def test_first_occurrence_only_per_concept(index):
    entry = FakeEntry("e9", "X", content="metric, then metric again, then compact")
    result = link(entry, index)
    assert [s.target for s in result.links] == ["e2", "e3"]
    assert result.content.count("\\nooslink") == 2


def test_math_is_not_linked(index):
    entry = FakeEntry("e9", "X", content="$metric space$ only in math")
    result = link(entry, index)
    assert result.links == []


def test_comment_and_verbatim_not_linked(index):
    entry = FakeEntry("e9", "X", content="% metric space\n\\verb|compact| nothing else")
    assert link(entry, index).links == []


def test_no_self_link(index):
    entry = FakeEntry("e1", "Metric space", content="the metric space of metrics")
    result = link(entry, index)
    # own title excluded; "metric" maps to a different entry and may link
    assert all(s.target != "e1" for s in result.links)


def test_own_synonym_not_linked():
    idx = TermIndex()
    idx.add("ODE", "e1")
    entry = FakeEntry("e2", "Linear equation", synonyms=["ODE"], content="an ODE appears")
    assert link(entry, idx).links == []


def test_word_boundaries(index):
    entry = FakeEntry("e9", "X", content="pseudometric spaces are not metricspace")
    assert link(entry, index).links == []


def test_boundary_allows_punctuation(index):
    entry = FakeEntry("e9", "X", content="(metric space), yes")
    result = link(entry, index)
    assert [s.target for s in result.links] == ["e1"]


def test_match_across_whitespace_run(index):
    entry = FakeEntry("e9", "X", content="a metric\n  space indeed")
    result = link(entry, index)
    assert [s.target for s in result.links] == ["e1"]
    start, end = result.links[0].start, result.links[0].end
    assert entry.content.encode()[start:end] == b"metric\n  space"


def test_case_insensitive_match(index):
    entry = FakeEntry("e9", "X", content="Metric Space at sentence start")
    assert [s.target for s in link(entry, index).links] == ["e1"]


def test_link_table_byte_spans(index):
    entry = FakeEntry("e9", "X", content="naïve metric space")
    result = link(entry, index)
    start, end = result.links[0].start, result.links[0].end
    assert entry.content.encode()[start:end] == b"metric space"


def test_strip_links_round_trip_examples(index):
    for content in [
        "a complete metric space",
        "metric space $x$ compact % c\n tail",
        "{braces} and \\commands stay",
        "",
    ]:
        entry = FakeEntry("e9", "X", content=content)
        result = link(entry, index)
        assert strip_links(result.content) == content


def test_strip_links_ignores_malformed_wrappers():
    assert strip_links("\\nooslink{eX") == "\\nooslink{eX"
    assert strip_links("\\nooslink{a}{b") == "\\nooslink{a}{b"
    assert strip_links("plain") == "plain"


def test_diagnostics_carried_through_link(index):
    entry = FakeEntry("e9", "X", content="good compact then $broken")
    result = link(entry, index)
    assert result.diagnostics
    assert [s.target for s in result.links] == ["e3"]


@settings(max_examples=200, deadline=None)
@given(TEXTISH)
def test_round_trip_property(content):
    idx = TermIndex()
    idx.add("ab", "e1")
    idx.add("yz ab", "e2")
    entry = FakeEntry("e9", "Other", content=content)
    result = link(entry, idx)
    assert strip_links(result.content) == content
