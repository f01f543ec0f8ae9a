from __future__ import annotations

import random

import pytest

import synth
from worktrace.corpus import (
    GraderScore,
    load_grades,
    load_report,
    load_transcript,
    pair_turns,
    serialize_grades,
    serialize_transcript,
)
from worktrace.decomposition import build
from worktrace.errors import (
    ParseError,
    StructuralError,
    UnknownCodeError,
    ValueRangeError,
)


@pytest.fixture()
def tiny_decomposition():
    return build(
        [
            ("root", "task", None),
            ("a", "first", "root"),
            ("b", "second", "root"),
        ]
    )


def rows_to_csv(rows):
    return synth.transcript_csv(rows)


def test_two_turn_file_orders_prompt_before_response(tiny_decomposition):
    csv_text = rows_to_csv(
        [
            ["P1", 2, "response", "later answer", "b", ""],
            ["P1", 1, "prompt", "first question", "a", "finance"],
            ["P1", 2, "prompt", "later question", "a;b", ""],
            ["P1", 1, "response", "first answer", "a", ""],
        ]
    )
    utterances = load_transcript(csv_text, tiny_decomposition)
    assert [(u.turn_index, u.speaker) for u in utterances] == [
        (1, "prompt"),
        (1, "response"),
        (2, "prompt"),
        (2, "response"),
    ]
    assert utterances[0].subtask_codes == {"a"}
    assert utterances[0].specialty_codes == {"finance"}
    assert utterances[2].subtask_codes == {"a", "b"}
    assert utterances[0].words == ("first", "question")


def test_unknown_codes_collected_into_one_error(tiny_decomposition):
    csv_text = rows_to_csv(
        [
            ["P1", 1, "prompt", "question", "ghost;a", ""],
            ["P1", 1, "response", "answer", "phantom", ""],
        ]
    )
    with pytest.raises(UnknownCodeError) as err:
        load_transcript(csv_text, tiny_decomposition)
    assert err.value.codes == ["ghost", "phantom"]


def test_transcript_parse_errors(tiny_decomposition):
    bad_speaker = rows_to_csv([["P1", 1, "narrator", "text", "", ""]])
    with pytest.raises(ParseError, match="speaker"):
        load_transcript(bad_speaker, tiny_decomposition)
    bad_turn = rows_to_csv([["P1", 0, "prompt", "text", "", ""]])
    with pytest.raises(ParseError, match="positive"):
        load_transcript(bad_turn, tiny_decomposition)
    empty_text = rows_to_csv([["P1", 1, "prompt", "   ", "", ""]])
    with pytest.raises(ParseError, match="empty"):
        load_transcript(empty_text, tiny_decomposition)
    with pytest.raises(ParseError, match="header"):
        load_transcript("# format_version=1\nwrong,header\n", tiny_decomposition)


def test_pair_turns_basic(tiny_decomposition):
    utterances = load_transcript(
        rows_to_csv(
            [
                ["P1", 1, "prompt", "q one", "a", ""],
                ["P1", 1, "response", "a one", "a", ""],
                ["P1", 2, "prompt", "q two", "b", ""],
                ["P1", 2, "response", "a two", "b", ""],
            ]
        ),
        tiny_decomposition,
    )
    records = pair_turns(utterances)
    assert len(records) == 2
    assert all(not r.response_missing for r in records)
    assert records[0].prompt.text == "q one"
    assert records[1].response.text == "a two"


def test_trailing_unanswered_prompt_gets_synthetic_response(tiny_decomposition):
    utterances = load_transcript(
        rows_to_csv(
            [
                ["P1", 1, "prompt", "q one", "a", ""],
                ["P1", 1, "response", "a one", "a", ""],
                ["P1", 2, "prompt", "q two", "b", ""],
            ]
        ),
        tiny_decomposition,
    )
    records = pair_turns(utterances)
    assert len(records) == 2
    assert records[1].response_missing
    assert records[1].response.subtask_codes == frozenset()
    assert records[1].response.words == ()


def test_duplicate_turn_speaker_is_structural_error(tiny_decomposition):
    utterances = load_transcript(
        rows_to_csv(
            [
                ["P1", 1, "prompt", "q", "a", ""],
                ["P1", 1, "prompt", "q again", "a", ""],
            ]
        ),
        tiny_decomposition,
    )
    with pytest.raises(StructuralError, match="duplicate"):
        pair_turns(utterances)


def test_response_without_prompt_is_structural_error(tiny_decomposition):
    utterances = load_transcript(
        rows_to_csv([["P1", 3, "response", "orphan answer", "", ""]]),
        tiny_decomposition,
    )
    with pytest.raises(StructuralError, match="no prompt"):
        pair_turns(utterances)


def test_shuffled_rows_load_identically(tiny_decomposition):
    rng = random.Random(5)
    rows = []
    for t in range(1, 9):
        rows.append(["P1", t, "prompt", synth.random_text(rng, 3, 8), "a", ""])
        rows.append(["P1", t, "response", synth.random_text(rng, 3, 8), "b", ""])
    shuffled = rows[:]
    rng.shuffle(shuffled)
    sorted_load = load_transcript(rows_to_csv(rows), tiny_decomposition)
    shuffled_load = load_transcript(rows_to_csv(shuffled), tiny_decomposition)
    assert shuffled_load == sorted_load
    assert pair_turns(shuffled_load) == pair_turns(sorted_load)


def test_pair_count_equals_distinct_turn_indices(tiny_decomposition):
    for seed in range(20):
        rng = random.Random(seed)
        rows = synth.dialogue_rows(rng, tiny_decomposition, "P1", rng.randint(1, 12))
        if rng.random() < 0.5:
            rows = rows[:-1]  # drop the final response
        utterances = load_transcript(rows_to_csv(rows), tiny_decomposition)
        records = pair_turns(utterances)
        assert len(records) == len({u.turn_index for u in utterances})


def test_roundtrip_preserves_codes_and_words(tiny_decomposition):
    original = rows_to_csv(
        [
            ["P1", 1, "prompt", "Spaced   out  Text, with 2,022 figures!", "a;b", "x;y"],
            ["P1", 1, "response", "An answer.", "", ""],
        ]
    )
    loaded = load_transcript(original, tiny_decomposition)
    again = load_transcript(serialize_transcript(loaded), tiny_decomposition)
    assert again == loaded
    assert loaded[0].words == ("Spaced", "out", "Text,", "with", "2,022", "figures!")


def test_study_scale_corpus_counts(study_decomposition):
    text = synth.study_scale_corpus(study_decomposition)
    utterances = load_transcript(text, study_decomposition)
    assert len(utterances) == 2336
    assert len({u.participant_id for u in utterances}) == 34
    total_turns = 0
    for pid in sorted({u.participant_id for u in utterances}):
        mine = [u for u in utterances if u.participant_id == pid]
        total_turns += len(pair_turns(mine))
    assert total_turns == 1168


def test_report_loading():
    report = load_report(b"The launch plan.\nRevenue grows.", "P1")
    assert report.participant_id == "P1"
    assert report.words[0] == "The"
    with pytest.raises(ParseError, match="empty"):
        load_report(b"  \n ", "P2")


def grades_csv(rows):
    header = (
        "participant_id,subtask_id,grader_id,completeness,"
        "output_quality,room_for_improvement,satisfactory"
    )
    return "# format_version=1\n" + header + "\n" + "\n".join(rows) + "\n"


def test_grade_range_enforced(tiny_decomposition):
    with pytest.raises(ValueRangeError, match="output_quality=7"):
        load_grades(grades_csv(["P1,a,g1,3,7,2,true"]), tiny_decomposition)
    wide = load_grades(
        grades_csv(["P1,a,g1,3,7,2,true"]), tiny_decomposition, ordinal_range=(0, 9)
    )
    assert wide[0].output_quality == 7


def test_grade_unknown_subtask(tiny_decomposition):
    with pytest.raises(UnknownCodeError):
        load_grades(grades_csv(["P1,ghost,g1,3,3,2,false"]), tiny_decomposition)


def test_seven_graders_roundtrip(tiny_decomposition):
    rows = [f"P1,{s},g{g},{g % 6},{(g + 1) % 6},{(g + 2) % 6},{'true' if g % 2 else 'false'}"
            for g in range(1, 8) for s in ("a", "b")]
    grades = load_grades(grades_csv(rows), tiny_decomposition)
    assert len(grades) == 14
    assert len({g.grader_id for g in grades}) == 7
    again = load_grades(serialize_grades(grades), tiny_decomposition)
    assert again == grades
    assert isinstance(grades[0], GraderScore)
