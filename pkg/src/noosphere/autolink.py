"""LaTeX-aware concept autolinking.

tokenize() partitions entry source into text / math / command / verbatim /
comment segments (concatenating segment contents reproduces the input
byte-for-byte). link() then finds occurrences of other entries' titles and
synonyms inside text segments only, by a leftmost-longest scan on word
boundaries, and wraps the first occurrence of each distinct target concept
in ``\\nooslink{target-id}{matched text}``.

Linking is computed from the current index at read/export time; nothing is
ever stored back into entry content. ``\\nooslink`` is reserved markup:
strip_links() undoes exactly what link() inserted, so the round trip is
byte-exact for any content that does not itself use the reserved command.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

LINK_COMMAND = "\\nooslink"

# Environments whose body is display mathematics.
MATH_ENVIRONMENTS = frozenset(
    {"equation", "equation*", "align", "align*", "eqnarray", "eqnarray*"}
)

TEXT = "text"
INLINE_MATH = "inline-math"
DISPLAY_MATH = "display-math"
COMMAND = "command"
VERBATIM = "verbatim"
COMMENT = "comment"


@dataclass
class Segment:
    kind: str
    start: int  # byte offset into the UTF-8 source
    end: int
    content: str


@dataclass
class TokenizedSource:
    segments: list[Segment]
    diagnostics: list[str] = field(default_factory=list)

    def text_segments(self) -> list[Segment]:
        return [s for s in self.segments if s.kind == TEXT]


def _byte_offsets(source: str) -> list[int]:
    offsets = [0] * (len(source) + 1)
    total = 0
    for i, ch in enumerate(source):
        total += len(ch.encode("utf-8"))
        offsets[i + 1] = total
    return offsets


def _backslash_run_is_escape(source: str, pos: int) -> bool:
    """True when the char at pos sits behind an odd run of backslashes."""
    count = 0
    j = pos - 1
    while j >= 0 and source[j] == "\\":
        count += 1
        j -= 1
    return count % 2 == 1


def _find_unescaped(source: str, needle: str, start: int) -> int:
    pos = start
    while True:
        pos = source.find(needle, pos)
        if pos == -1:
            return -1
        if not _backslash_run_is_escape(source, pos):
            return pos
        pos += 1


def tokenize(source: str) -> TokenizedSource:
    """Total: never raises. Unbalanced delimiters turn the remainder into one
    text segment and leave a diagnostic."""
    n = len(source)
    offsets = _byte_offsets(source)
    segments: list[Segment] = []
    diagnostics: list[str] = []

    def emit(kind: str, start: int, end: int) -> None:
        if end > start:
            segments.append(Segment(kind, offsets[start], offsets[end], source[start:end]))

    i = 0
    text_start = 0

    def flush_text(upto: int) -> None:
        emit(TEXT, text_start, upto)

    def bail(start: int, what: str) -> None:
        diagnostics.append(f"unterminated {what} starting at byte {offsets[start]}")

    while i < n:
        ch = source[i]
        if ch == "%":
            flush_text(i)
            nl = source.find("\n", i)
            end = n if nl == -1 else nl + 1
            emit(COMMENT, i, end)
            i = end
            text_start = i
        elif ch == "$":
            flush_text(i)
            if i + 1 < n and source[i + 1] == "$":
                close = _find_unescaped(source, "$$", i + 2)
                if close == -1:
                    bail(i, "display math ($$)")
                    emit(TEXT, i, n)
                    return TokenizedSource(segments, diagnostics)
                emit(DISPLAY_MATH, i, close + 2)
                i = close + 2
            else:
                close = _find_unescaped(source, "$", i + 1)
                if close == -1:
                    bail(i, "inline math ($)")
                    emit(TEXT, i, n)
                    return TokenizedSource(segments, diagnostics)
                emit(INLINE_MATH, i, close + 1)
                i = close + 1
            text_start = i
        elif ch == "\\":
            nxt = source[i + 1] if i + 1 < n else ""
            if nxt == "(" or nxt == "[":
                flush_text(i)
                closer = "\\)" if nxt == "(" else "\\]"
                close = _find_unescaped(source, closer, i + 2)
                if close == -1:
                    bail(i, f"math ({source[i:i+2]})")
                    emit(TEXT, i, n)
                    return TokenizedSource(segments, diagnostics)
                kind = INLINE_MATH if nxt == "(" else DISPLAY_MATH
                emit(kind, i, close + 2)
                i = close + 2
                text_start = i
            elif nxt.isalpha():
                j = i + 1
                while j < n and source[j].isalpha():
                    j += 1
                name = source[i + 1 : j]
                if j < n and source[j] == "*":
                    name += "*"
                    j += 1
                if name == "verb" or name == "verb*":
                    flush_text(i)
                    if j >= n:
                        bail(i, "\\verb")
                        emit(TEXT, i, n)
                        return TokenizedSource(segments, diagnostics)
                    delim = source[j]
                    close = source.find(delim, j + 1)
                    if close == -1:
                        bail(i, "\\verb")
                        emit(TEXT, i, n)
                        return TokenizedSource(segments, diagnostics)
                    emit(VERBATIM, i, close + 1)
                    i = close + 1
                    text_start = i
                elif name in ("begin", "end") and j < n and source[j] == "{":
                    brace_end = source.find("}", j + 1)
                    if brace_end == -1:
                        # malformed \begin{ without closing brace: plain command
                        flush_text(i)
                        emit(COMMAND, i, j)
                        i = j
                        text_start = i
                        continue
                    env = source[j + 1 : brace_end]
                    if name == "begin" and env in MATH_ENVIRONMENTS:
                        flush_text(i)
                        close = _find_env_close(source, env, brace_end + 1)
                        if close == -1:
                            bail(i, f"environment {env}")
                            emit(TEXT, i, n)
                            return TokenizedSource(segments, diagnostics)
                        emit(DISPLAY_MATH, i, close)
                        i = close
                        text_start = i
                    else:
                        flush_text(i)
                        emit(COMMAND, i, brace_end + 1)
                        i = brace_end + 1
                        text_start = i
                else:
                    flush_text(i)
                    emit(COMMAND, i, j)
                    i = j
                    text_start = i
            else:
                # control symbol: backslash plus one char (or a bare trailing backslash)
                flush_text(i)
                end = min(i + 2, n)
                emit(COMMAND, i, end)
                i = end
                text_start = i
        else:
            i += 1
    flush_text(n)
    return TokenizedSource(segments, diagnostics)


def _find_env_close(source: str, env: str, start: int) -> int:
    """End offset just past the matching \\end{env}, honoring same-name nesting."""
    open_tag = "\\begin{" + env + "}"
    close_tag = "\\end{" + env + "}"
    depth = 1
    pos = start
    while depth:
        next_open = source.find(open_tag, pos)
        next_close = source.find(close_tag, pos)
        if next_close == -1:
            return -1
        if next_open != -1 and next_open < next_close:
            depth += 1
            pos = next_open + len(open_tag)
        else:
            depth -= 1
            pos = next_close + len(close_tag)
    return pos


# -- term index ----------------------------------------------------------------


def normalize_term(raw: str) -> str:
    """Case-fold and collapse internal whitespace; no article stripping."""
    return " ".join(raw.casefold().split())


class TermIndex:
    """normalized term -> target entry id; oldest entry wins a duplicate term."""

    def __init__(self):
        self.terms: dict[str, str] = {}

    def add(self, raw_term: str, target: str) -> None:
        term = normalize_term(raw_term)
        if term and term not in self.terms:
            self.terms[term] = target

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, raw_term: str) -> bool:
        return normalize_term(raw_term) in self.terms


def build_index(entries: Iterable) -> TermIndex:
    """Index every title and synonym. Entries are fed oldest-first so the
    duplicate-term tie always goes to the smallest creation seq."""
    index = TermIndex()
    for entry in sorted(entries, key=lambda e: e.created_seq):
        index.add(entry.title, entry.id)
        for synonym in entry.synonyms:
            index.add(synonym, entry.id)
    return index


# -- matching ----------------------------------------------------------------


def _match_term_at(source: str, pos: int, limit: int, term: str) -> int | None:
    """Match one normalized term at a char position; returns the end char index.

    Term spaces match any whitespace run; other chars compare casefolded,
    which may consume several term chars per source char.
    """
    ti = 0
    j = pos
    tlen = len(term)
    while ti < tlen:
        if j >= limit:
            return None
        c = source[j]
        if term[ti] == " ":
            if not c.isspace():
                return None
            while j < limit and source[j].isspace():
                j += 1
            ti += 1
        else:
            if c.isspace():
                return None
            folded = c.casefold()
            if term[ti : ti + len(folded)] != folded:
                return None
            ti += len(folded)
            j += 1
    return j


def _is_letter(source: str, idx: int) -> bool:
    return 0 <= idx < len(source) and source[idx].isalpha()


@dataclass
class Occurrence:
    start: int  # char index
    end: int
    term: str
    target: str


def scan_occurrences(source: str, segments: Sequence[Segment], terms: dict[str, str]) -> list[Occurrence]:
    """Leftmost-longest scan of the text segments, lexer style: at each
    boundary-valid position take the longest match, resume after it.

    Word boundary: the characters flanking a match (in the whole source, so
    segment edges count) must be non-letters or string edges.
    """
    by_first: dict[str, list[str]] = {}
    for term in terms:
        by_first.setdefault(term[0], []).append(term)

    occurrences: list[Occurrence] = []
    char_pos = 0
    for segment in segments:
        seg_start = char_pos
        char_pos += len(segment.content)
        if segment.kind != TEXT:
            continue
        limit = char_pos
        pos = seg_start
        while pos < limit:
            ch = source[pos]
            if ch.isspace() or _is_letter(source, pos - 1):
                pos += 1
                continue
            bucket = by_first.get(ch.casefold()[:1], ())
            best_end = -1
            best_term = None
            for term in bucket:
                end = _match_term_at(source, pos, limit, term)
                if end is None or _is_letter(source, end):
                    continue
                if end > best_end:
                    best_end = end
                    best_term = term
            if best_term is not None:
                occurrences.append(Occurrence(pos, best_end, best_term, terms[best_term]))
                pos = best_end
            else:
                pos += 1
    return occurrences


@dataclass
class LinkSpan:
    start: int  # byte offset into the raw content
    end: int
    target: str


@dataclass
class LinkResult:
    content: str  # content with \nooslink wrappers inserted
    links: list[LinkSpan]
    diagnostics: list[str]


def link(entry, index: TermIndex, tokenized: TokenizedSource | None = None) -> LinkResult:
    """Link the first occurrence of each distinct foreign concept in an entry.

    Never links the entry to itself, nor through any term equal to its own
    title or synonyms.
    """
    source = entry.content
    tk = tokenized or tokenize(source)
    own = {normalize_term(entry.title)} | {normalize_term(s) for s in entry.synonyms}
    eligible = {
        term: target
        for term, target in index.terms.items()
        if term not in own and target != entry.id
    }
    occurrences = scan_occurrences(source, tk.segments, eligible)

    linked_targets: set[str] = set()
    chosen: list[Occurrence] = []
    for occ in occurrences:
        if occ.target not in linked_targets:
            linked_targets.add(occ.target)
            chosen.append(occ)

    offsets = _byte_offsets(source)
    pieces: list[str] = []
    cursor = 0
    links: list[LinkSpan] = []
    for occ in chosen:
        pieces.append(source[cursor : occ.start])
        matched = source[occ.start : occ.end]
        pieces.append(LINK_COMMAND + "{" + occ.target + "}{" + matched + "}")
        links.append(LinkSpan(offsets[occ.start], offsets[occ.end], occ.target))
        cursor = occ.end
    pieces.append(source[cursor:])
    return LinkResult("".join(pieces), links, list(tk.diagnostics))


def strip_links(text: str) -> str:
    """Remove \\nooslink{target}{body} wrappers, leaving the body."""
    out: list[str] = []
    i = 0
    n = len(text)
    while True:
        start = text.find(LINK_COMMAND + "{", i)
        if start == -1:
            out.append(text[i:])
            return "".join(out)
        target_end = _matching_brace(text, start + len(LINK_COMMAND))
        if target_end == -1 or target_end >= n or text[target_end] != "{":
            out.append(text[i : start + len(LINK_COMMAND)])
            i = start + len(LINK_COMMAND)
            continue
        body_end = _matching_brace(text, target_end)
        if body_end == -1:
            out.append(text[i : start + len(LINK_COMMAND)])
            i = start + len(LINK_COMMAND)
            continue
        out.append(text[i:start])
        out.append(text[target_end + 1 : body_end - 1])
        i = body_end
    # unreachable


def _matching_brace(text: str, open_pos: int) -> int:
    """open_pos must point at '{'; returns index just past the matching '}'."""
    if open_pos >= len(text) or text[open_pos] != "{":
        return -1
    depth = 0
    for j in range(open_pos, len(text)):
        if text[j] == "{":
            depth += 1
        elif text[j] == "}":
            depth -= 1
            if depth == 0:
                return j + 1
    return -1
