"""Deterministic demo corpora.

Two builders live here:

- build_math5190(): replays a full one-semester course run (Winter 2003
  flavor) through the engine and returns it. The same call always produces a
  byte-identical event log, so the bundled fixture file can be regenerated
  and diffed. End-state bookkeeping: 122 entries total; student score rows
  (0,1,10,26), (1,2,10,27), (3,6,10,16); 78 corrections filed (77 by the
  instructor, 1 by a student) of which 48 are resolved; 8 requests and 4
  orphaned exercises left open.

- build_course_notes_state(): the compiled-notes corpus (79 alphabetical
  entries plus 4 assignment collections) used by the document export tests.

All clock movement is explicit; verifier salts are pinned.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from datetime import date, datetime, timedelta, timezone
from pathlib import Path
from zlib import crc32

from .assess import content_size
from .engine import Engine
from .eventlog import ManualClock
from .export import Collection, FrontMatter
from .notify import MailSink
from .state import MaterializedState

COURSE_TITLE = "Topics in Ordinary Differential Equations"
COURSE_SUBTITLE = "Collaborative course notes compiled by the students of Math 5190"
COURSE_INSTITUTION = "Dalhousie University"
COURSE_DATE = "April 18, 2003"

ALPHABETICAL_TITLES = [
    "Autonomization",
    "Banach fixed point theorem",
    "Bernoulli equation",
    "Cauchy sequence",
    "Cayley-Hamilton theorem",
    "Characterization of homogeneous equations",
    "Characterization of linear ODEs",
    "Characterization of separable equations",
    "Characterization of the Bernoulli equation",
    "Characterization of trivial symmetries",
    "Compact",
    "Completeness of a compact subspace",
    "Constant coefficient symmetries",
    "Constant of integration",
    "Continuously differentiable",
    "Contraction mapping",
    "Curve",
    "Derivation of the determining equation",
    "Determining equation",
    "Diagonalization",
    "Differential form of an ODE",
    "Differential properties of flows",
    "Directional derivative",
    "Distance between functions",
    "Existence of flows",
    "Existence of integrating factor",
    "Existence theorem for IVP",
    "Exponential of a matrix",
    "Exponential of an irreducible block",
    "Extended eigenspace",
    "Flow of a linear system",
    "Homogeneous equation",
    "Homogeneous form of the determining equation",
    "Implicit function theorem",
    "Implicit solution",
    "Infinitesimal symmetry",
    "Integral curve",
    "Integrating factor",
    "Invariant subspace",
    "Inverse function theorem",
    "Irreducible nilpotent transformation",
    "Iterative definition of sine and cosine",
    "Jacobian",
    "Jordan canonical form",
    "Limit point",
    "Limit point",
    "Linear ODE",
    "Linear system",
    "Lipschitz",
    "Method of integrating factors",
    "Method of standard coordinates",
    "Metric space",
    "Nilpotent transformation",
    "Picard iteration",
    "Proof completeness wrt uniform convergence",
    "Proof of existence of flows",
    "Proof of rectification theorem",
    "Proof of the Banach fixed point theorem",
    "Proof of the existence theorem for IVPs",
    "Push forward",
    "Rectification theorem",
    "Reducible transformation",
    "Relation between symmetries and integrating factors",
    "Relation between symmetries and solution curves",
    "Separation of variables",
    "Slope evolution formula",
    "Slope transformation formula",
    "Solution curve",
    "Solution of the Bernoulli equation using the method of integrating factors",
    "Supremum",
    "Symmetries of homogeneous equations",
    "Symmetries of linear equations",
    "Symmetries of separable equations",
    "Symmetry",
    "The relation between limits and limit points",
    "Transformation",
    "Trivial symmetry",
    "Uniform convergence",
    "Vector field",
]

COLLECTIONS = [
    (
        "Foundations assignment",
        [
            "Foundations problem 2a",
            "Foundations problem 2b",
            "Foundations problem 3a",
            "Foundations problem 3b",
            "Foundations problem 3c",
            "Foundations problem 4a",
            "Foundations problem 4b",
            "Foundations problem 4c",
            "Foundations problems 5a 5b",
            "Foundations problem 5c",
            "Foundations problem 5d",
            "Foundations problem 5e",
            "Foundations problem 5f",
            "Foundations problem 5g",
            "Foundations problem 5h",
            "Foundations problem 5i",
            "Foundations problems 5j",
            "Foundations problem 6a",
            "Foundations problem 6d",
            "Foundations problems 6b 6c",
            "Foundations problems 6e",
        ],
    ),
    (
        "Flows assignment",
        [
            "Flows problem 2a",
            "Flows problem 2b",
            "Flows problem 3",
            "Flows problem 4",
            "Flows problem 5",
            "Flows problem 6a",
            "Flows problem 6b",
            "Flows problem 7",
            "Flows problem 8",
            "Flows problem 9a",
            "Flows problem 9b",
        ],
    ),
    (
        "Scalar equation problems.",
        [
            "Scalar equations problem 1",
            "Scalar equations problem 2",
            "Scalar equations problem 3",
            "Scalar equations problem 4",
            "Scalar equations problem 5",
        ],
    ),
    (
        "Linear algebra problems.",
        [
            "linear algebra problem 1",
            "linear algebra problem 2",
            "linear algebra problem 3",
            "linear algebra problem 4",
            "linear algebra problem 5",
            "linear algebra problem 6",
        ],
    ),
]

EXERCISE_TITLES = [title for _, members in COLLECTIONS for title in members]

INSTRUCTOR_TITLES = [
    "Existence theorem for IVP",
    "Picard iteration",
    "Implicit function theorem",
    "Jordan canonical form",
]
AUDITOR_TITLES = ["Supremum", "Uniform convergence"]

# Lecture topics that never got written up (these stay active requests).
UNFILLED_REQUEST_TOPICS = [
    "Gronwall inequality",
    "Wronskian determinant",
    "Phase plane analysis",
    "Lyapunov stability",
    "Sturm-Liouville problems",
    "Laplace transform methods",
    "Power series solutions",
    "Boundary value problems",
]

FIXTURE_SECRETS = {
    "admin": "admin-password",
    "instructor": "beta-attractor",
    "auditor": "gamma-listener",
    "student1": "delta-one",
    "student2": "delta-two",
    "student3": "delta-three",
}

_FILLER = [
    "The proof proceeds by estimating successive differences and summing the resulting geometric series.",
    "We verify the hypotheses of the existence theorem before applying it to the initial value problem at hand.",
    "Separating variables and integrating both sides yields an implicit solution up to a constant of integration.",
    "The estimate $d(x_n, x_{n+1}) \\le k q^{n-1}$ follows by induction on $n$ and the contraction hypothesis.",
    "A direct computation shows that the group law $\\Phi_\\tau \\circ \\Phi_t = \\Phi_{\\tau+t}$ holds wherever the flow is defined.",
    "Writing the equation in differential form and testing for exactness exhibits the required integrating factor.",
    "Compactness supplies a convergent subsequence, and completeness of the ambient space identifies its limit.",
    "Substituting the ansatz into the determining equation reduces the problem to a linear system for the coefficients.",
    "The Jacobian of the transformation is nonsingular near the origin, so the inverse function theorem applies.",
    "Uniform convergence of the iterates lets us exchange the limit with the integral in the fixed point equation.",
]

_MATH_SNIPPETS = [
    "$\\frac{dy}{dx} = \\omega(x, y)$",
    "$T \\colon X \\to X$",
    "$x_{n+1} = T x_n$",
    "$\\dot{x} = A x$",
    "$e^{tA} = \\sum_{k \\ge 0} \\frac{t^k A^k}{k!}$",
]


def _fixture_salt(user_id: str) -> str:
    return hashlib.sha256(f"math5190:{user_id}".encode()).hexdigest()[:32]


def entry_body(title: str, size_class: str) -> str:
    """Deterministic LaTeX-ish body landing in the requested rubric class.

    Classes by non-whitespace byte count outside comments: stub <= 200,
    minimal in (200, 800), developed >= 800.
    """
    seed = crc32(title.encode())
    target = {"stub": 140, "minimal": 430, "developed": 980}[size_class]
    opener = (
        f"\\emph{{{title}}}. Consider the scalar equation "
        f"{_MATH_SNIPPETS[seed % len(_MATH_SNIPPETS)]} in the setting developed in lecture."
    )
    if size_class == "stub":
        text = f"{title}: statement to be supplied. See {_MATH_SNIPPETS[seed % len(_MATH_SNIPPETS)]}."
        while content_size(text) <= 110:
            text += " Details pending."
        assert content_size(text) <= 200
        return text
    parts = [opener]
    i = seed
    while content_size("\n\n".join(parts)) < target:
        parts.append(_FILLER[i % len(_FILLER)])
        i += 1
    body = "\n\n".join(parts)
    size = content_size(body)
    if size_class == "minimal":
        assert 200 < size < 800, (title, size)
    else:
        assert size >= 800, (title, size)
    return body


def _exercise_statement(title: str) -> str:
    seed = crc32(title.encode())
    text = (
        f"{title}. Solve {_MATH_SNIPPETS[seed % len(_MATH_SNIPPETS)]} and verify "
        "the defining conditions directly. % assigned in lecture"
    )
    assert content_size(text) <= 200, title
    return text


@dataclass
class Math5190:
    engine: Engine
    student_entries: dict[str, list[str]]  # user id -> entry ids, acquisition order


def build_math5190(log_path: str | Path | None = None, sink: MailSink | None = None) -> Math5190:
    clock = ManualClock(datetime(2003, 1, 6, 9, 0, 0, tzinfo=timezone.utc))
    eng = Engine(clock=clock, log_path=log_path, sink=sink)

    def at(day: date, hour: int, minute: int = 0) -> None:
        clock.set(datetime(day.year, day.month, day.day, hour, minute, tzinfo=timezone.utc))

    def monday(week: int) -> date:
        return date(2003, 1, 6) + timedelta(weeks=week - 1)

    # -- registration day ----------------------------------------------------
    for i, (user_id, role, name) in enumerate(
        [
            ("admin", "admin", "Site Admin"),
            ("instructor", "instructor", "Course Instructor"),
            ("auditor", "auditor", "Course Auditor"),
            ("student1", "student", "Student One"),
            ("student2", "student", "Student Two"),
            ("student3", "student", "Student Three"),
        ]
    ):
        at(monday(1), 9, 5 * i)
        eng.register_user(
            "admin",
            user_id,
            name,
            role,
            f"{user_id}@math5190.example.edu",
            secret=FIXTURE_SECRETS[user_id],
            salt=_fixture_salt(user_id),
        )

    students = ["student1", "student2", "student3"]

    # -- allocations -----------------------------------------------------------
    concept_titles = [
        t for t in ALPHABETICAL_TITLES if t not in INSTRUCTOR_TITLES + AUDITOR_TITLES
    ]
    assert len(concept_titles) == 73
    concept_owner = (students * 22) + ["student1", "student1"] + ["student2"] * 5
    assert len(concept_owner) == 73
    concepts_per_week = [6] * 11 + [7]

    exercises_per_week = [4] * 9 + [3] + [2, 2]  # weeks 11-12 go unadopted
    adopter = students * 13

    # score classes, per student, over (exercises in adoption order, then
    # concepts in creation order)
    exercise_classes = {
        "student1": ["minimal"] + ["open2"] * 10 + ["approved3"] * 2,
        "student2": ["stub"] + ["minimal"] * 2 + ["open2"] * 10,
        "student3": ["stub"] * 3 + ["minimal"] * 6 + ["open2"] * 4,
    }
    concept_classes = {
        "student1": ["approved3"] * 24,
        "student2": ["approved3"] * 27,
        "student3": ["open2"] * 6 + ["approved3"] * 16,
    }

    entry_class: dict[str, str] = {}
    student_entries: dict[str, list[str]] = {s: [] for s in students}
    exercise_cursor: dict[str, int] = {s: 0 for s in students}
    concept_cursor: dict[str, int] = {s: 0 for s in students}
    develop_queue: list[tuple[int, str]] = []  # (week developed, entry id)
    request_ids: dict[int, str] = {}  # concept index -> request id
    instructor_entry_ids: list[str] = []
    filing = {"n": 0, "quota": dict(_RESOLVABLE_QUOTA), "pending": []}

    concept_i = 0
    exercise_i = 0
    unfilled_weeks = {2, 3, 4, 5, 6, 8, 10, 12}
    unfilled_iter = iter(UNFILLED_REQUEST_TOPICS)

    def classify(owner: str, is_exercise: bool) -> str:
        table = exercise_classes if is_exercise else concept_classes
        cursor = exercise_cursor if is_exercise else concept_cursor
        cls = table[owner][cursor[owner]]
        cursor[owner] += 1
        return cls

    for week in range(1, 13):
        # Monday morning: the instructor mirrors the week's lecture topics
        # as requests
        week_concepts = list(
            range(concept_i, min(concept_i + concepts_per_week[week - 1], 73))
        )
        at(monday(week), 10, 0)
        for idx in week_concepts:
            if idx < 52:
                title = concept_titles[idx]
                clock.advance(120)
                req = eng.create_request(
                    "instructor", title, f"Cover {title} as presented in lecture."
                )
                request_ids[idx] = req.id
        if week in unfilled_weeks:
            clock.advance(120)
            eng.create_request(
                "instructor", next(unfilled_iter), "Optional further topic from lecture."
            )

        # Monday early afternoon: reference entries by non-students
        if week == 1:
            at(monday(1), 13, 0)
            for title in INSTRUCTOR_TITLES:
                clock.advance(300)
                e = eng.create_entry(
                    "instructor", title, [], "theorem", entry_body(title, "developed")
                )
                instructor_entry_ids.append(e.id)
        if week == 3:
            at(monday(3), 13, 0)
            for title in AUDITOR_TITLES:
                clock.advance(300)
                eng.create_entry("auditor", title, [], "concept", entry_body(title, "developed"))

        # Monday late afternoon: exercise entries are created and orphaned
        at(monday(week), 15, 0)
        week_exercises = EXERCISE_TITLES[
            exercise_i : exercise_i + exercises_per_week[week - 1]
        ]
        week_exercise_ids: list[str] = []
        for title in week_exercises:
            clock.advance(180)
            e = eng.create_entry("instructor", title, [], "exercise", _exercise_statement(title))
            eng.orphan_entry("instructor", e.id)
            week_exercise_ids.append(e.id)
        exercise_i += len(week_exercises)

        # Tuesday: students adopt this week's exercises (weeks 11-12 stay orphaned)
        if week <= 10:
            at(monday(week) + timedelta(days=1), 11, 0)
            for eid in week_exercise_ids:
                owner = adopter.pop(0)
                clock.advance(240)
                eng.adopt_entry(owner, eid)
                entry_class[eid] = classify(owner, is_exercise=True)
                student_entries[owner].append(eid)
                if entry_class[eid] != "stub":
                    develop_queue.append((week, eid))

        # Wednesday/Thursday: students write up the week's concepts and
        # fulfill the matching requests
        for j, idx in enumerate(week_concepts):
            if j == 0:
                at(monday(week) + timedelta(days=2), 10, 0)
            if j == 3:
                at(monday(week) + timedelta(days=3), 10, 0)
            title = concept_titles[idx]
            owner = concept_owner[idx]
            clock.advance(1500)
            e = eng.create_entry(owner, title, [], "concept", entry_body(title, "minimal"))
            entry_class[e.id] = classify(owner, is_exercise=False)
            student_entries[owner].append(e.id)
            develop_queue.append((week, e.id))
            if idx < 52:
                clock.advance(90)
                eng.fulfill_request(owner, request_ids[idx], e.id)
        concept_i += len(week_concepts)

        # Thursday evening: owners flesh entries out to their target class
        at(monday(week) + timedelta(days=3), 19, 0)
        for dev_week, eid in develop_queue:
            if dev_week != week:
                continue
            entry = eng.get_entry(eid)
            cls = entry_class[eid]
            body = entry_body(entry.title, "minimal" if cls == "minimal" else "developed")
            clock.advance(240)
            eng.revise_entry(entry.owner, eid, body)

        # Friday morning, before the instructor's review pass: community
        # flavor (threads stay student<->instructor; the students organized
        # face to face)
        if week == 5:
            at(monday(5) + timedelta(days=4), 8, 0)
            root = eng.post_message(
                "student2",
                "entry",
                instructor_entry_ids[0],
                "Hypotheses of the theorem",
                "Does the region need to be convex, or is an open rectangle enough?",
            )
            clock.advance(600)
            eng.post_message(
                "instructor",
                "message",
                root.id,
                "",
                "An open rectangle suffices; convexity is not needed for the estimate.",
            )
            clock.advance(600)
            own = student_entries["student3"][0]
            root2 = eng.post_message(
                "student3", "entry", own, "Scope question", "Should this cover the vector case too?"
            )
            clock.advance(600)
            eng.post_message(
                "instructor", "message", root2.id, "", "Scalar case is enough for these notes."
            )
        if week == 6:
            at(monday(6) + timedelta(days=4), 8, 0)
            eng.add_watch("auditor", "entry", instructor_entry_ids[1], ["inbox", "email"])
            clock.advance(300)
            some_request = eng.list_requests("active")[0]
            eng.add_watch("auditor", "request", some_request.id, ["inbox"])
        if week == 7:
            # the one student-filed correction of the course
            at(monday(7) + timedelta(days=4), 8, 0)
            eng.file_correction(
                "student1",
                instructor_entry_ids[1],
                "The iteration index in the displayed formula is off by one.",
                "error",
            )
            clock.advance(1800)
            cid = eng.open_corrections(instructor_entry_ids[1])[0].id
            eng.resolve_correction(
                "instructor", cid, "reindexed the iteration", "Good catch; display corrected."
            )
        if week == 8:
            at(monday(8) + timedelta(days=4), 8, 0)
            latest = eng.inbox("student1")[0]
            eng.mark_read("student1", latest.id)

        _file_weekly_corrections(eng, clock, monday(week), week, develop_queue, entry_class, filing)
        _burst_resolutions(eng, clock, monday(week) + timedelta(days=4), filing)

    # week 13: last Friday of filings, for entries developed in week 12
    _file_weekly_corrections(eng, clock, monday(13), 13, develop_queue, entry_class, filing)
    _burst_resolutions(eng, clock, date(2003, 4, 7), filing)
    _burst_resolutions(eng, clock, date(2003, 4, 14), filing)
    assert not filing["pending"]

    # mid-April: the instructor signs off the surviving entries
    at(date(2003, 4, 15), 9, 0)
    for eid, cls in sorted(entry_class.items()):
        if cls == "approved3":
            clock.advance(60)
            eng.review_entry("instructor", eid, "approved")

    _audit(eng, student_entries)
    return Math5190(engine=eng, student_entries=student_entries)


# corrections to resolve, in filing order: (correction id, entry id) queues
_SEVERITY_CYCLE = ["error", "improvement", "error", "style"]
_CORRECTION_TEXTS = [
    "The constant in the key estimate is not justified; please derive it.",
    "The argument assumes continuity that has not been established yet.",
    "Notation drifts between the statement and the proof; unify it.",
    "The final step needs the convergence to be uniform, not pointwise.",
    "A sign error in the substitution propagates to the conclusion.",
]
_ACTIONS = [
    "revised the proof",
    "clarified the statement",
    "fixed the computation",
    "reworked the example",
]
_NOTES = [
    "Tightened the estimate and cited the lemma explicitly.",
    "Added the missing continuity hypothesis to the statement.",
    "Recomputed the substitution; the sign now comes out right.",
    "Expanded the worked example to cover the degenerate case.",
]

# per-student cap on corrections filed against entries headed for score 3
_RESOLVABLE_QUOTA = {"student1": 16, "student2": 16, "student3": 15}

_BURST_DAYS = {
    date(2003, 2, 14): 6,
    date(2003, 2, 28): 7,
    date(2003, 3, 14): 8,
    date(2003, 3, 28): 8,
    date(2003, 4, 7): 9,
    date(2003, 4, 14): 10_000,
}


def _file_weekly_corrections(eng, clock, week_monday, week, develop_queue, entry_class, filing):
    """Friday: the instructor reviews everything developed the prior week.

    Entries headed for score 2 get a correction that stays open; entries
    headed for score 3 get one only while the per-student quota lasts, and
    those go on the resolution queue.
    """
    friday = week_monday + timedelta(days=4)
    clock.set(datetime(friday.year, friday.month, friday.day, 9, 0, tzinfo=timezone.utc))
    for dev_week, eid in develop_queue:
        if dev_week != week - 1:
            continue
        cls = entry_class[eid]
        entry = eng.get_entry(eid)
        if cls == "approved3":
            if filing["quota"][entry.owner] <= 0:
                continue
            filing["quota"][entry.owner] -= 1
        elif cls != "open2":
            continue
        n = filing["n"]
        clock.advance(300)
        correction = eng.file_correction(
            "instructor",
            eid,
            _CORRECTION_TEXTS[n % len(_CORRECTION_TEXTS)],
            _SEVERITY_CYCLE[n % len(_SEVERITY_CYCLE)],
        )
        filing["n"] += 1
        if cls == "approved3":
            filing["pending"].append((correction.id, eid))


def _burst_resolutions(eng, clock, day, filing):
    """On the course's burst days, students clear queued corrections:
    revise the entry, then resolve with an action and rationale."""
    cap = _BURST_DAYS.get(day)
    if cap is None:
        return
    clock.set(datetime(day.year, day.month, day.day, 14, 0, tzinfo=timezone.utc))
    taken = filing["pending"][:cap]
    filing["pending"] = filing["pending"][cap:]
    for i, (cid, eid) in enumerate(taken):
        entry = eng.get_entry(eid)
        clock.advance(420)
        eng.revise_entry(
            entry.owner,
            eid,
            entry.content + "\n\nAddendum: " + _NOTES[i % len(_NOTES)],
        )
        clock.advance(180)
        eng.resolve_correction(
            entry.owner, cid, _ACTIONS[i % len(_ACTIONS)], _NOTES[(i + 1) % len(_NOTES)]
        )


def _audit(eng: Engine, student_entries: dict[str, list[str]]) -> None:
    state = eng.state
    assert len(state.entries) == 122, len(state.entries)
    filings = [r for r in eng.records if r.kind == "correction_filed"]
    assert len(filings) == 78, len(filings)
    by_filer = {}
    for r in filings:
        by_filer[r.actor] = by_filer.get(r.actor, 0) + 1
    assert by_filer == {"instructor": 77, "student1": 1}, by_filer
    resolved = [c for c in state.corrections.values() if c.state == "resolved"]
    assert len(resolved) == 48, len(resolved)
    active = [r for r in state.requests.values() if r.state == "active"]
    orphans = [e for e in state.entries.values() if e.owner is None]
    assert len(active) == 8 and len(orphans) == 4, (len(active), len(orphans))
    assert sum(len(v) for v in student_entries.values()) == 112


def build_course_notes_state() -> tuple[MaterializedState, list[Collection], FrontMatter]:
    """The corpus whose compiled TOC is the course-notes golden file."""
    clock = ManualClock(datetime(2003, 4, 18, 8, 0, 0, tzinfo=timezone.utc))
    eng = Engine(clock=clock)
    eng.register_user("admin", "admin", "Notes Editor", "admin", "editor@math5190.example.edu")
    for title in ALPHABETICAL_TITLES:
        clock.advance(30)
        eng.create_entry("admin", title, [], "concept", entry_body(title, "minimal"))
    collections: list[Collection] = []
    for name, members in COLLECTIONS:
        ids = []
        for title in members:
            clock.advance(30)
            e = eng.create_entry("admin", title, [], "exercise", entry_body(title, "minimal"))
            ids.append(e.id)
        collections.append(Collection(name=name, members=ids))
    front = FrontMatter(
        title=COURSE_TITLE,
        subtitle=COURSE_SUBTITLE,
        institution=COURSE_INSTITUTION,
        date=COURSE_DATE,
    )
    return eng.state, collections, front


def golden_toc_lines() -> list[str]:
    """The expected toc-text, enumerated directly from the title data."""
    lines = [f"{i}\t{title}" for i, title in enumerate(ALPHABETICAL_TITLES, start=1)]
    number = len(ALPHABETICAL_TITLES)
    for name, members in COLLECTIONS:
        number += 1
        lines.append(f"{number}\t{name}")
        for j, title in enumerate(members, start=1):
            lines.append(f"{number}.{j}\t{title}")
    return lines
