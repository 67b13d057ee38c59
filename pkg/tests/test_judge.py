import json

import httpx
import pytest

from graphaudit import (
    DeterministicJudge,
    ExamQuestion,
    GraphNode,
    JudgeTransportError,
    NodeLevel,
    QuestionKind,
    RemoteJudge,
    parse_report,
)
from graphaudit.judge import (
    build_exam_messages,
    build_presence_messages,
    build_stance_messages,
)


def node(content, node_id="n1", level=NodeLevel.ATOMIC_FACT):
    return GraphNode(node_id, level, content)


def test_presence_verbatim_containment_hits():
    report = parse_report("## A\nThe reactor output tripled last year.")
    verdict = DeterministicJudge(tau=0.8).assess_presence(
        node("The reactor output tripled last year"), report
    )
    assert verdict.hit and verdict.confidence == 1.0


def test_presence_disjoint_vocabulary_misses():
    report = parse_report("## A\nBallet choreography flourished in spring festivals.")
    verdict = DeterministicJudge(tau=0.8).assess_presence(
        node("Solar tariffs reshaped import economics"), report
    )
    assert not verdict.hit


def test_presence_four_of_five_tokens_straddles_thresholds():
    report = parse_report("## A\nalpha beta gamma delta.")
    claim = node("alpha beta gamma delta epsilon")
    assert DeterministicJudge(tau=0.8).assess_presence(claim, report).hit
    assert not DeterministicJudge(tau=0.9).assess_presence(claim, report).hit


def test_presence_tau_zero_hits_everything_on_nonempty_report():
    report = parse_report("## A\nSomething entirely unrelated.")
    judge = DeterministicJudge(tau=0.0)
    assert judge.assess_presence(node("totally different topic"), report).hit


def test_presence_empty_report_never_hits():
    report = parse_report("")
    assert not DeterministicJudge(tau=0.0).assess_presence(node("anything"), report).hit


def test_presence_tau_one_requires_sentence_containment():
    judge = DeterministicJudge(tau=1.0)
    inside = parse_report("## A\nalpha beta gamma delta epsilon zeta.")
    split = parse_report("## A\nalpha beta gamma. delta epsilon.")
    claim = node("alpha beta gamma delta epsilon")
    assert judge.assess_presence(claim, inside).hit
    assert not judge.assess_presence(claim, split).hit


def test_presence_is_pure():
    report = parse_report("## A\nalpha beta gamma.")
    judge = DeterministicJudge(tau=0.5)
    claim = node("alpha beta gamma epsilon")
    assert judge.assess_presence(claim, report) == judge.assess_presence(claim, report)


def mcq(question, options, answer="ignored"):
    answer = options[0] if answer == "ignored" else answer
    return ExamQuestion(QuestionKind.MULTIPLE_CHOICE, question, tuple(options), answer)


def test_exam_verbatim_option_selected():
    report = parse_report("## A\nThe treaty was signed in 1987 after long talks.")
    question = mcq("When was the treaty signed?",
                   ["The treaty was signed in 1987", "The treaty was never signed at all"])
    assert DeterministicJudge().answer_exam(question, report) == "The treaty was signed in 1987"


def test_exam_no_overlap_falls_back_to_first_option_with_diagnostic():
    report = parse_report("## A\nCompletely unrelated gardening notes.")
    judge = DeterministicJudge()
    question = mcq("Pick one", ["quantum flux capacitor", "neutrino baryon storm"])
    assert judge.answer_exam(question, report) == "quantum flux capacitor"
    assert any("no option overlaps" in note for note in judge.drain_diagnostics())


def test_exam_higher_token_overlap_wins():
    report = parse_report("## A\none two three four five.")
    question = mcq("Which?", ["one two three nope nah", "one two three four five"])
    assert DeterministicJudge().answer_exam(question, report) == "one two three four five"


def test_exam_tie_prefers_first_listed_option():
    report = parse_report("## A\nshared words everywhere.")
    question = mcq("Which?", ["shared words apple", "shared words banana"])
    assert DeterministicJudge().answer_exam(question, report) == "shared words apple"


def test_exam_true_false_defaults_options():
    report = parse_report("## A\nThat statement is true indeed.")
    question = ExamQuestion(QuestionKind.TRUE_FALSE, "Is it so?", (), "True")
    assert DeterministicJudge().answer_exam(question, report) == "True"


def test_exam_fill_in_blank_extracts_best_sentence():
    report = parse_report(
        "## A\nThe summit opened in Geneva. Carbon pricing was the core dispute at the summit."
    )
    question = ExamQuestion(
        QuestionKind.FILL_IN_BLANK,
        "What was the core dispute at the summit?",
        (),
        "carbon pricing",
    )
    produced = DeterministicJudge().answer_exam(question, report)
    assert produced == "Carbon pricing was the core dispute at the summit."


def test_stance_containment_extremes():
    report = parse_report("## A\nRenewables lower long run system costs decisively.")
    judge = DeterministicJudge()
    scores = judge.audit_stance(
        "Renewables lower long run system costs decisively",
        "Quantum cryptography drives measurable wheat yields",
        report,
    )
    assert scores.thesis == 10.0
    assert scores.antithesis == 0.0


def test_stance_empty_report_scores_zero():
    scores = DeterministicJudge().audit_stance("alpha beta", "gamma delta", parse_report(""))
    assert scores.thesis == 0.0 and scores.antithesis == 0.0


def test_stance_sixty_percent_coverage_scores_six():
    report = parse_report("## A\nalpha beta gamma appear here.")
    scores = DeterministicJudge().audit_stance(
        "alpha beta gamma delta epsilon", "unrelated claim entirely", report
    )
    assert scores.thesis == 6.0


# --- Remote backend ---------------------------------------------------------------


def reply(text):
    return {"choices": [{"message": {"content": text}}]}


def make_remote(responses, log_dir=None, capture=None):
    state = {"calls": 0}

    def handler(request: httpx.Request) -> httpx.Response:
        if capture is not None:
            capture.append(json.loads(request.read().decode("utf-8")))
        index = min(state["calls"], len(responses) - 1)
        state["calls"] += 1
        item = responses[index]
        if isinstance(item, Exception):
            raise item
        return httpx.Response(200, json=reply(item))

    return RemoteJudge(
        "http://judge.test/v1/chat/completions",
        "judge-model",
        transport=httpx.MockTransport(handler),
        log_dir=log_dir,
    ), state


def test_remote_presence_yes_parses_to_hit():
    judge, _ = make_remote(["Yes\nThe claim appears in section two."])
    verdict = judge.assess_presence(node("some claim"), parse_report("## A\nsome claim here."))
    assert verdict.hit and "section two" in verdict.rationale


def test_remote_presence_malformed_retries_then_miss():
    judge, state = make_remote(["maybe?", "perhaps!"])
    verdict = judge.assess_presence(node("c"), parse_report("## A\ntext."))
    assert not verdict.hit and verdict.confidence == 0.0
    assert state["calls"] == 2
    assert any("not yes/no" in note for note in judge.drain_diagnostics())


def test_remote_transport_failure_raises_after_retry():
    judge, state = make_remote([httpx.ConnectError("down"), httpx.ConnectError("down")])
    with pytest.raises(JudgeTransportError):
        judge.assess_presence(node("c"), parse_report("## A\ntext."))
    assert state["calls"] == 2


def test_remote_stance_parsing_and_clamping():
    judge, _ = make_remote(["thesis: 12\nantithesis: -3"])
    scores = judge.audit_stance("t", "a", parse_report("## A\ntext."))
    assert scores.thesis == 10.0 and scores.antithesis == 0.0
    assert sum("clamped" in note for note in judge.drain_diagnostics()) == 2


def test_remote_stance_order_independent_parsing():
    judge, _ = make_remote(["antithesis: 4\nthesis: 7"])
    scores = judge.audit_stance("t", "a", parse_report("## A\ntext."))
    assert scores.thesis == 7.0 and scores.antithesis == 4.0


def test_remote_exam_returns_reply_text():
    judge, _ = make_remote(["  Paris  "])
    question = mcq("Capital?", ["Paris", "Rome"])
    assert judge.answer_exam(question, parse_report("## A\ntext.")) == "Paris"


def test_remote_logs_requests(tmp_path):
    judge, _ = make_remote(["yes\nok"], log_dir=tmp_path)
    judge.assess_presence(node("c"), parse_report("## A\ntext."))
    lines = (tmp_path / "judge_requests.jsonl").read_text().splitlines()
    assert len(lines) == 1
    record = json.loads(lines[0])
    assert record["kind"] == "presence" and record["response"] == "yes\nok"


def test_remote_credential_header_from_env(monkeypatch):
    captured = []

    def handler(request):
        captured.append(request.headers.get("authorization"))
        return httpx.Response(200, json=reply("yes\nok"))

    judge = RemoteJudge(
        "http://judge.test/chat", "m",
        transport=httpx.MockTransport(handler), api_key_env="TEST_JUDGE_KEY",
    )
    monkeypatch.setenv("TEST_JUDGE_KEY", "sekrit")
    judge.assess_presence(node("c"), parse_report("## A\ntext."))
    assert captured == ["Bearer sekrit"]


def test_remote_requires_positive_parallelism():
    with pytest.raises(ValueError):
        RemoteJudge("http://x", "m", max_parallel=0)


def test_remote_request_payload_shape():
    captured = []
    judge, _ = make_remote(["yes\nok"], capture=captured)
    judge.assess_presence(node("c"), parse_report("## A\ntext."))
    payload = captured[0]
    assert payload["model"] == "judge-model"
    assert payload["temperature"] == 0.0
    assert [m["role"] for m in payload["messages"]] == ["system", "user"]


# --- Closed-context request construction ------------------------------------------


def test_exam_messages_never_contain_answer_or_graph():
    question = ExamQuestion(
        QuestionKind.MULTIPLE_CHOICE,
        "Which year did output triple?",
        ("2019", "2021"),
        "2021",
        depth_metric=3,
    )
    text = json.dumps(build_exam_messages(question, "## R\nreport body."))
    assert "report body" in text and "Which year" in text
    # Options are context the examinee legitimately sees; the marked answer is not flagged.
    assert "ground truth" not in text.lower()
    messages = build_exam_messages(question, "## R\nreport body.")
    assert all("secret-graph-content" not in m["content"] for m in messages)


def test_stance_messages_never_contain_ground_truth_scores():
    messages = build_stance_messages("thesis text", "antithesis text", "## R\nbody.")
    joined = " ".join(m["content"] for m in messages)
    assert "thesis text" in joined and "antithesis text" in joined and "body." in joined
    assert "gt" not in joined.lower().split()
    assert not any(ch.isdigit() and False for ch in joined)


def test_presence_messages_contain_claim_and_report_only():
    messages = build_presence_messages("the claim", "## R\nbody.")
    joined = " ".join(m["content"] for m in messages)
    assert "the claim" in joined and "body." in joined
