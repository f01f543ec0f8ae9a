"""Ingestion of coded transcripts, final reports, and grader scores.

A corpus is per-participant: a sequence of coded utterances reconstructed
into dyadic turns, one report document, and grader rows. Loaders take file
contents or streams, never paths, so they work the same on fixtures and on
pipeline inputs.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from typing import IO, Iterable, Sequence

from .decomposition import Decomposition
from .errors import ParseError, StructuralError, UnknownCodeError, ValueRangeError
from .tableio import as_text, format_cell, parse_table
from .textnorm import tokenize

TRANSCRIPT_COLUMNS = [
    "participant_id",
    "turn_index",
    "speaker",
    "text",
    "subtask_codes",
    "specialty_codes",
]
GRADES_COLUMNS = [
    "participant_id",
    "subtask_id",
    "grader_id",
    "completeness",
    "output_quality",
    "room_for_improvement",
    "satisfactory",
]

PROMPT = "prompt"
RESPONSE = "response"


@dataclass(frozen=True)
class Utterance:
    participant_id: str
    turn_index: int
    speaker: str  # prompt | response
    words: tuple[str, ...]
    subtask_codes: frozenset[str]
    specialty_codes: frozenset[str]

    @property
    def text(self) -> str:
        return " ".join(self.words)


@dataclass(frozen=True)
class TurnRecord:
    participant_id: str
    turn_index: int
    prompt: Utterance
    response: Utterance
    response_missing: bool = False


@dataclass(frozen=True)
class Report:
    participant_id: str
    words: tuple[str, ...]

    @property
    def text(self) -> str:
        return " ".join(self.words)


@dataclass(frozen=True)
class GraderScore:
    participant_id: str
    subtask_id: str
    grader_id: str
    completeness: int
    output_quality: int
    room_for_improvement: int
    satisfactory: bool


def _codes(cell: str) -> frozenset[str]:
    return frozenset(c.strip() for c in cell.split(";") if c.strip())


def load_transcript(
    source: IO[bytes] | str | bytes, decomposition: Decomposition
) -> list[Utterance]:
    """Parse a transcript table into utterances ordered by turn, prompt first.

    Codes are validated against the decomposition; one error lists every
    offending code in the file rather than failing row by row.
    """
    _, header, rows = parse_table(as_text(source, "transcript"), origin="transcript")
    if header != TRANSCRIPT_COLUMNS:
        raise ParseError(f"transcript header {header} != {TRANSCRIPT_COLUMNS}")
    utterances = []
    unknown: set[str] = set()
    for i, row in enumerate(rows, start=1):
        try:
            turn_index = int(row["turn_index"])
        except ValueError:
            raise ParseError(f"row {i}: turn_index {row['turn_index']!r} is not an integer") from None
        if turn_index < 1:
            raise ParseError(f"row {i}: turn_index must be positive, got {turn_index}")
        speaker = row["speaker"]
        if speaker not in (PROMPT, RESPONSE):
            raise ParseError(f"row {i}: speaker must be prompt or response, got {speaker!r}")
        words = tokenize(row["text"])
        if not words:
            raise ParseError(f"row {i}: empty utterance text")
        codes = _codes(row["subtask_codes"])
        unknown.update(c for c in codes if c not in decomposition.by_id)
        utterances.append(
            Utterance(
                participant_id=row["participant_id"],
                turn_index=turn_index,
                speaker=speaker,
                words=words,
                subtask_codes=codes,
                specialty_codes=_codes(row["specialty_codes"]),
            )
        )
    if unknown:
        raise UnknownCodeError(sorted(unknown), entity="transcript")
    utterances.sort(key=lambda u: (u.participant_id, u.turn_index, u.speaker == RESPONSE))
    return utterances


def serialize_transcript(utterances: Iterable[Utterance]) -> str:
    buf = io.StringIO()
    buf.write("# format_version=1\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRANSCRIPT_COLUMNS)
    for u in utterances:
        writer.writerow(
            [
                u.participant_id,
                u.turn_index,
                u.speaker,
                u.text,
                ";".join(sorted(u.subtask_codes)),
                ";".join(sorted(u.specialty_codes)),
            ]
        )
    return buf.getvalue()


def pair_turns(utterances: Sequence[Utterance]) -> list[TurnRecord]:
    """Group one participant's utterances into dyadic turns.

    A prompt with no response (the participant stopped, or the session was
    cut) gets a synthetic empty-coded response flagged response_missing; a
    response with no prompt has no dyadic reading and is an error.
    """
    participants = {u.participant_id for u in utterances}
    if len(participants) > 1:
        raise StructuralError(f"utterances span participants {sorted(participants)}")
    by_turn: dict[int, dict[str, Utterance]] = {}
    for u in utterances:
        slot = by_turn.setdefault(u.turn_index, {})
        if u.speaker in slot:
            raise StructuralError(
                f"duplicate {u.speaker} at turn {u.turn_index}",
                entity=f"{u.participant_id}:t{u.turn_index}",
            )
        slot[u.speaker] = u
    records = []
    for turn_index in sorted(by_turn):
        slot = by_turn[turn_index]
        if PROMPT not in slot:
            raise StructuralError(
                f"turn {turn_index} has a response but no prompt",
                entity=f"{slot[RESPONSE].participant_id}:t{turn_index}",
            )
        prompt = slot[PROMPT]
        response = slot.get(RESPONSE)
        missing = response is None
        if response is None:
            response = replace(
                prompt,
                speaker=RESPONSE,
                words=(),
                subtask_codes=frozenset(),
                specialty_codes=frozenset(),
            )
        records.append(
            TurnRecord(prompt.participant_id, turn_index, prompt, response, missing)
        )
    return records


def load_report(source: IO[bytes] | str | bytes, participant_id: str) -> Report:
    words = tokenize(as_text(source, f"report {participant_id}"))
    if not words:
        raise ParseError(f"report for {participant_id} is empty", entity=participant_id)
    return Report(participant_id, words)


def load_grades(
    source: IO[bytes] | str | bytes,
    decomposition: Decomposition,
    *,
    ordinal_range: tuple[int, int] = (0, 5),
) -> list[GraderScore]:
    _, header, rows = parse_table(as_text(source, "grades"), origin="grades")
    if header != GRADES_COLUMNS:
        raise ParseError(f"grades header {header} != {GRADES_COLUMNS}")
    lo, hi = ordinal_range
    unknown: set[str] = set()
    grades = []
    for i, row in enumerate(rows, start=1):
        ordinals = {}
        for field in ("completeness", "output_quality", "room_for_improvement"):
            try:
                value = int(row[field])
            except ValueError:
                raise ParseError(f"row {i}: {field} {row[field]!r} is not an integer") from None
            if not lo <= value <= hi:
                raise ValueRangeError(
                    f"row {i}: {field}={value} outside {lo}..{hi}",
                    entity=f"{row['participant_id']}:{row['subtask_id']}",
                )
            ordinals[field] = value
        flag = row["satisfactory"].strip().lower()
        if flag not in ("true", "false"):
            raise ParseError(f"row {i}: satisfactory must be true or false, got {flag!r}")
        if row["subtask_id"] not in decomposition.by_id:
            unknown.add(row["subtask_id"])
        grades.append(
            GraderScore(
                participant_id=row["participant_id"],
                subtask_id=row["subtask_id"],
                grader_id=row["grader_id"],
                satisfactory=flag == "true",
                **ordinals,
            )
        )
    if unknown:
        raise UnknownCodeError(sorted(unknown), entity="grades")
    return grades


def serialize_grades(grades: Iterable[GraderScore]) -> str:
    buf = io.StringIO()
    buf.write("# format_version=1\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(GRADES_COLUMNS)
    for g in grades:
        writer.writerow(
            [
                g.participant_id,
                g.subtask_id,
                g.grader_id,
                g.completeness,
                g.output_quality,
                g.room_for_improvement,
                format_cell(g.satisfactory),
            ]
        )
    return buf.getvalue()
