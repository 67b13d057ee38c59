import random
from collections import Counter

from hypothesis import given, settings
from hypothesis import strategies as st

from graphaudit import citation_distribution, parse_report, render_markdown, section_presence

SPEC_DOC = "## A\nClaim one [1]. Claim two [1][2].\n## References\n[1] http://x\n[2] http://y"


def test_basic_document_marks_and_references():
    report = parse_report(SPEC_DOC)
    assert len(report.sections) == 1
    assert report.sections[0].heading == "A"
    assert report.sections[0].citation_marks == Counter({1: 2, 2: 1})
    assert [ref.index for ref in report.references] == [1, 2]
    assert [ref.url for ref in report.references] == ["http://x", "http://y"]


def test_plain_text_degenerate_document():
    report = parse_report("Just a plain paragraph without structure or sources.")
    assert len(report.sections) == 1
    assert report.sections[0].heading == ""
    assert report.sections[0].citation_marks == Counter()
    assert report.references == []


def test_unresolved_mark_becomes_diagnostic():
    report = parse_report("## A\nA claim [7].\n## References\n[1] http://x")
    assert report.unresolved_marks == Counter({7: 1})
    assert any("[7]" in note for note in report.diagnostics)
    assert report.sections[0].citation_marks == Counter()


def test_preamble_becomes_first_section():
    report = parse_report("Intro sentence before headings.\n## Body\nMore text.")
    assert len(report.sections) == 2
    assert report.sections[0].heading == ""
    assert report.sections[0].sentences == ["Intro sentence before headings."]
    assert [section.ordinal for section in report.sections] == [1, 2]


def test_title_from_leading_h1():
    report = parse_report("# The Grand Study\n## Part\nText.")
    assert report.title == "The Grand Study"
    assert parse_report("## Only h2\nText.").title is None


def test_section_depth_flag_limits_sections():
    text = "# Top\nIntro.\n## Mid\nMiddle.\n### Deep\nDeep text."
    assert len(parse_report(text).sections) == 3
    limited = parse_report(text, section_depth=2)
    assert len(limited.sections) == 2
    assert "### Deep Deep text." in " ".join(limited.sections[1].sentences)


def test_reference_dotted_form_and_title():
    report = parse_report(
        "## A\nClaim [1]. Claim [2].\n## References\n1. http://x Primary source\n2) http://y"
    )
    assert report.references[0].url == "http://x"
    assert report.references[0].title == "Primary source"
    assert report.references[1].url == "http://y"
    assert report.references[1].title is None


def test_unparseable_reference_line_diagnostic():
    report = parse_report("## References\nnot a reference line at all")
    assert any("unparseable reference line" in note for note in report.diagnostics)
    assert report.references == []


def test_reference_without_url_diagnostic():
    report = parse_report("## References\n[1] Smith, Annual Review 2020")
    assert any("no recognizable URL" in note for note in report.diagnostics)
    assert report.references[0].url == ""
    assert report.references[0].title == "Smith, Annual Review 2020"


def test_duplicate_reference_index_keeps_first():
    report = parse_report("## References\n[1] http://x\n[1] http://y")
    assert len(report.references) == 1
    assert report.references[0].url == "http://x"
    assert any("duplicate reference index" in note for note in report.diagnostics)


def test_citation_style_mismatch_diagnostic():
    report = parse_report("## A\nNo bracket marks here.\n## References\n[1] http://x")
    assert any("no bracketed citation marks" in note for note in report.diagnostics)


def test_sentence_split_protects_decimals_and_brackets():
    report = parse_report("Version 3.5 arrived. It costs 4.2 million (see fig. 3) today.")
    assert report.sections[0].sentences == [
        "Version 3.5 arrived.",
        "It costs 4.2 million (see fig. 3) today.",
    ]


def test_sentence_split_handles_exclamations_and_questions():
    report = parse_report("Is it true? It is! Final word.")
    assert len(report.sections[0].sentences) == 3


def test_code_fences_excluded_from_sentences_and_marks():
    text = (
        "## A\nReal claim [1].\n```\nfake code mark [2]. not a sentence\n```\nTail claim.\n"
        "## References\n[1] http://x\n[2] http://y"
    )
    report = parse_report(text)
    assert report.sections[0].sentences == ["Real claim [1].", "Tail claim."]
    assert report.sections[0].citation_marks == Counter({1: 1})


def test_distribution_hand_counts():
    report = parse_report(SPEC_DOC)
    dist = citation_distribution(report)
    assert dist.counts == {1: 2, 2: 1}
    assert abs(dist.proportions[1] - 2 / 3) < 1e-12
    assert abs(dist.proportions[2] - 1 / 3) < 1e-12
    assert dist.unique_sources == 2
    assert dist.total == 3


def test_distribution_single_source():
    report = parse_report("## A\nX [1]. Y [1]. Z [1] and [1] plus [1].\n## References\n[1] http://x")
    dist = citation_distribution(report)
    assert dist.counts == {1: 5}
    assert dist.proportions == {1: 1.0}
    assert dist.unique_sources == 1


def test_distribution_empty():
    dist = citation_distribution(parse_report("no marks here"))
    assert dist.total == 0 and dist.unique_sources == 0 and dist.proportions == {}


def _four_section_doc():
    return (
        "## One\nA [1].\n## Two\nB [1] and [2].\n## Three\nC [1].\n## Four\nD [2].\n"
        "## References\n[1] http://x\n[2] http://y"
    )


def test_section_presence_hand_counts():
    presence = section_presence(parse_report(_four_section_doc()))
    assert presence.section_total == 4
    assert presence.section_counts == {1: 3, 2: 2}


def test_section_presence_saturation_and_absent():
    report = parse_report("## A\nX [1].\n## B\nY [1].\n## References\n[1] http://x")
    presence = section_presence(report)
    assert presence.section_counts[1] == presence.section_total == 2
    assert 9 not in presence.section_counts


def test_repeated_marks_in_one_section_count_once_for_presence():
    report = parse_report("## A\nX [1]. Y [1]. Z [1].\n## References\n[1] http://x")
    assert citation_distribution(report).counts == {1: 3}
    assert section_presence(report).section_counts == {1: 1}


def test_round_trip_parse_render_parse():
    for text in (SPEC_DOC, _four_section_doc(), "Preamble claim [1]. More.\n## S\nX [1].\n## References\n[1] http://x"):
        first = parse_report(text)
        second = parse_report(render_markdown(first))
        assert [s.citation_marks for s in second.sections] == [s.citation_marks for s in first.sections]
        assert len(second.sections) == len(first.sections)
        assert second.references == first.references
        assert [s.sentences for s in second.sections] == [s.sentences for s in first.sections]


@settings(max_examples=50, deadline=None)
@given(st.data())
def test_counting_invariants_on_random_documents(data):
    rng = random.Random(data.draw(st.integers(0, 10_000)))
    n_sources = rng.randint(1, 5)
    n_sections = rng.randint(1, 6)
    lines = []
    expected_total = 0
    for section_index in range(n_sections):
        lines.append(f"## Section {section_index}")
        for sentence_index in range(rng.randint(1, 4)):
            marks = "".join(f"[{rng.randint(1, n_sources)}]" for _ in range(rng.randint(0, 3)))
            expected_total += len(marks) // 3 if marks else 0
            lines.append(f"Claim {section_index} {sentence_index} {marks}.")
    lines.append("## References")
    for source in range(1, n_sources + 1):
        lines.append(f"[{source}] http://src/{source}")
    report = parse_report("\n".join(lines))

    dist = citation_distribution(report)
    presence = section_presence(report)
    # Sum of per-section multiplicities equals the distribution total.
    assert sum(sum(s.citation_marks.values()) for s in report.sections) == dist.total
    assert presence.section_total == len(report.sections) >= 1
    for source, section_count in presence.section_counts.items():
        assert 0 <= section_count <= presence.section_total
        assert source in dist.counts
    if dist.total:
        assert abs(sum(dist.proportions.values()) - 1.0) < 1e-9
