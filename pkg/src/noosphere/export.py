"""Compile the corpus into a single course-notes document.

Layout: front matter, table of contents, then one numbered section per
ungrouped entry in case-insensitive title order (creation order breaks ties,
duplicate titles are kept verbatim), followed by the named collections in
their given order, each a section whose members are subsections.

Entries scoring 0 (negligible content) are excluded everywhere. Concept
links are computed at compile time against the included entries and rendered
in LaTeX output as emphasized text with an inline section cross-reference.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .assess import RubricConfig, open_correction_counts, score_entry
from .autolink import LINK_COMMAND, _matching_brace, build_index, link
from .errors import DomainError
from .state import MaterializedState


@dataclass
class Collection:
    name: str
    members: list[str]  # entry ids, in the order they should appear


def load_collections(path: str | Path) -> list[Collection]:
    """Collections file: JSON list of {"name": ..., "members": [entry ids]}."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DomainError("invalid-collections", f"{path}: {exc}")
    if not isinstance(raw, list):
        raise DomainError("invalid-collections", f"{path}: top level must be a list")
    collections = []
    for item in raw:
        if not isinstance(item, dict) or "name" not in item or "members" not in item:
            raise DomainError("invalid-collections", f"{path}: need name and members")
        collections.append(Collection(name=item["name"], members=list(item["members"])))
    return collections


@dataclass
class FrontMatter:
    title: str = "Collaborative notes"
    subtitle: str = ""
    institution: str = ""
    date: str = ""


@dataclass
class DocSection:
    number: str  # "12" or "80.3"
    title: str
    entry_id: str | None  # None for a collection heading
    content: str = ""
    subsections: list["DocSection"] = field(default_factory=list)


@dataclass
class DocumentModel:
    front_matter: FrontMatter
    sections: list[DocSection]

    def toc_lines(self) -> list[str]:
        lines = []
        for section in self.sections:
            lines.append(f"{section.number}\t{section.title}")
            for sub in section.subsections:
                lines.append(f"{sub.number}\t{sub.title}")
        return lines

    def section_numbers(self) -> dict[str, str]:
        numbers: dict[str, str] = {}
        for section in self.sections:
            if section.entry_id:
                numbers[section.entry_id] = section.number
            for sub in section.subsections:
                if sub.entry_id:
                    numbers[sub.entry_id] = sub.number
        return numbers


def compile_document(
    state: MaterializedState,
    collections: list[Collection] | None = None,
    front_matter: FrontMatter | None = None,
    rubric: RubricConfig | None = None,
) -> DocumentModel:
    collections = collections or []
    front_matter = front_matter or FrontMatter()
    rubric = rubric or RubricConfig()

    open_counts = open_correction_counts(state)
    included = [
        entry
        for entry in state.entries.values()
        if score_entry(entry, open_counts.get(entry.id, 0), rubric) >= 1
    ]
    included_ids = {entry.id for entry in included}
    index = build_index(included)

    # an entry belongs to at most one collection; first mention wins
    claimed: set[str] = set()
    grouped: list[tuple[Collection, list[str]]] = []
    for collection in collections:
        members = [
            m for m in collection.members if m in included_ids and m not in claimed
        ]
        claimed.update(members)
        if members:
            grouped.append((collection, members))

    ungrouped = [entry for entry in included if entry.id not in claimed]
    ungrouped.sort(key=lambda e: (e.title.casefold(), e.created_seq))

    def linked_content(entry) -> str:
        return link(entry, index).content

    sections: list[DocSection] = []
    number = 0
    for entry in ungrouped:
        number += 1
        sections.append(
            DocSection(str(number), entry.title, entry.id, linked_content(entry))
        )
    for collection, members in grouped:
        number += 1
        head = DocSection(str(number), collection.name, None)
        for i, member_id in enumerate(members, start=1):
            entry = state.entries[member_id]
            head.subsections.append(
                DocSection(f"{number}.{i}", entry.title, entry.id, linked_content(entry))
            )
        sections.append(head)
    return DocumentModel(front_matter=front_matter, sections=sections)


def serialize(doc: DocumentModel, fmt: str) -> bytes:
    if fmt == "toc-text":
        return ("\n".join(doc.toc_lines()) + "\n").encode("utf-8")
    if fmt == "latex":
        return _to_latex(doc).encode("utf-8")
    raise DomainError("unsupported-format", f"no such output format: {fmt}")


_TITLE_ESCAPES = {"&": r"\&", "%": r"\%", "#": r"\#", "_": r"\_"}


def _escape_title(title: str) -> str:
    return "".join(_TITLE_ESCAPES.get(ch, ch) for ch in title)


def _render_links(content: str, numbers: dict[str, str]) -> str:
    """\\nooslink{id}{text} -> emphasized text with an inline cross-reference."""
    out: list[str] = []
    i = 0
    while True:
        start = content.find(LINK_COMMAND + "{", i)
        if start == -1:
            out.append(content[i:])
            return "".join(out)
        target_end = _matching_brace(content, start + len(LINK_COMMAND))
        if target_end == -1 or target_end >= len(content) or content[target_end] != "{":
            out.append(content[i : start + len(LINK_COMMAND)])
            i = start + len(LINK_COMMAND)
            continue
        body_end = _matching_brace(content, target_end)
        if body_end == -1:
            out.append(content[i : start + len(LINK_COMMAND)])
            i = start + len(LINK_COMMAND)
            continue
        target = content[start + len(LINK_COMMAND) + 1 : target_end - 1]
        body = content[target_end + 1 : body_end - 1]
        out.append(content[i:start])
        number = numbers.get(target)
        if number:
            out.append(f"\\emph{{{body}}}~(\\S{number})")
        else:
            out.append(f"\\emph{{{body}}}")
        i = body_end


def _to_latex(doc: DocumentModel) -> str:
    numbers = doc.section_numbers()
    fm = doc.front_matter
    lines: list[str] = [
        "\\documentclass[11pt]{article}",
        "\\usepackage{amsmath,amssymb}",
        "\\usepackage[margin=1in]{geometry}",
        "\\setcounter{tocdepth}{2}",
        "\\begin{document}",
        "",
        "\\begin{center}",
        f"{{\\bf {_escape_title(fm.title)}}}\\\\",
    ]
    for line in (fm.subtitle, fm.institution, fm.date):
        if line:
            lines.append(f"{_escape_title(line)}\\\\")
    lines.extend(["\\end{center}", "", "\\tableofcontents", "\\newpage", ""])
    for section in doc.sections:
        lines.append(f"\\section{{{_escape_title(section.title)}}}")
        if section.content:
            lines.append(_render_links(section.content, numbers))
        lines.append("")
        for sub in section.subsections:
            lines.append(f"\\subsection{{{_escape_title(sub.title)}}}")
            if sub.content:
                lines.append(_render_links(sub.content, numbers))
            lines.append("")
    lines.append("\\end{document}")
    return "\n".join(lines) + "\n"
