from __future__ import annotations

import random
import time

import pytest

from tracelens.errors import EmptyRubrics, ScoreOutOfRange, UnparseableVerdict
from tracelens.judging import (
    JudgeConfig,
    ModeFlags,
    context_digest,
    evaluate_corpus,
    evaluate_step,
    evaluate_trace,
    evaluate_trace_record,
    generate_rubrics,
    normalize_score,
    parse_dimension_scores,
    parse_judge_response,
    render_trace,
    verify_rubrics,
)
from tracelens.mockjudge import CLEAN_STEP_TEXT, MockJudge
from tracelens.model import Trace, TraceStep

from .fixture_corpus import EXPECTED_RUBRIC_FRACTIONS, EXPECTED_TRACE_SCORES


@pytest.fixture()
def config():
    return JudgeConfig(model_name="mock-judge", backend="mock")


def _trace(outputs, trace_id="j-1", task="do it"):
    steps = tuple(
        TraceStep(k, f"n{k}", f"in {k}", out) for k, out in enumerate(outputs)
    )
    return Trace(trace_id=trace_id, task_text=task, steps=steps)


class TestParseJudgeResponse:
    def test_justification_then_score(self):
        justification, score = parse_judge_response(
            "Justification: output ignores the constraint.\nScore: 3"
        )
        assert justification == "output ignores the constraint."
        assert score == 3

    def test_last_score_wins(self):
        _, score = parse_judge_response("…reasoning…\nScore: 4\n…more…\nScore: 7")
        assert score == 7

    def test_score_out_of_range(self):
        with pytest.raises(ScoreOutOfRange):
            parse_judge_response("Score: 15")

    def test_no_labeled_line(self):
        with pytest.raises(UnparseableVerdict):
            parse_judge_response("the answer is probably 7 out of 10")

    def test_verdict_form(self):
        justification, verdict = parse_judge_response("Looks met.\nVerdict: FULFILLED")
        assert verdict is True
        _, verdict = parse_judge_response("Nope.\nVerdict: NOT FULFILLED")
        assert verdict is False

    def test_intermediate_numbers_in_cot_ignored(self):
        raw = "I count 3 retries and score each 2.\nclarity: 9\nScore: 6"
        justification, score = parse_judge_response(raw)
        assert score == 6
        assert "retries" in justification

    def test_dimension_parsing(self):
        raw = "Justification: fine\ncorrectness: 7\nexecution quality: 9\nScore: 8"
        assert parse_dimension_scores(raw, ["correctness", "execution quality", "missing"]) == {
            "correctness": 7,
            "execution quality": 9,
        }


class TestJudgeConfigInvariants:
    def test_all_four_templates_required(self):
        with pytest.raises(ValueError, match="rubric_verify"):
            JudgeConfig(
                model_name="m",
                backend="mock",
                mode_prompts={"step": "x", "trace": "y", "rubric_gen": "z"},
            )

    def test_max_parallel_floor(self):
        with pytest.raises(ValueError, match="max_parallel"):
            JudgeConfig(model_name="m", backend="mock", max_parallel=0)

    def test_dimensions_must_be_non_empty(self):
        with pytest.raises(ValueError, match="dimension"):
            JudgeConfig(model_name="m", backend="mock", step_dimensions=())

    def test_mode_flags_need_at_least_one(self):
        with pytest.raises(ValueError):
            ModeFlags(step=False, trace=False, rubric=False)


class TestNormalization:
    @pytest.mark.parametrize("raw,expected", [(1, 0.0), (10, 1.0), (4, 1 / 3), (7, 2 / 3)])
    def test_exact_mapping(self, raw, expected):
        assert normalize_score(raw) == pytest.approx(expected, abs=0)


class TestEvaluateStep:
    def test_normalization_endpoints(self, config):
        class TenJudge:
            def step_call(self, **kwargs):
                return "Justification: great\nScore: 10"

        class OneJudge:
            def step_call(self, **kwargs):
                return "Justification: bad\nScore: 1"

        step = TraceStep(0, "n", "i", "o")
        assert evaluate_step(config, TenJudge(), "t", step, "", trace_id="x").score == 1.0
        assert evaluate_step(config, OneJudge(), "t", step, "", trace_id="x").score == 0.0

    def test_mock_rulebook_error_marker(self, config):
        step = TraceStep(0, "n", "i", "tool said ERROR midway")
        critique = evaluate_step(config, MockJudge(), "t", step, "", trace_id="x")
        assert critique.score == 0.0
        assert "error" in critique.justification.lower()

    def test_dimension_scores_cover_all_configured_dimensions(self, config):
        step = TraceStep(0, "n", "i", "all good")
        critique = evaluate_step(config, MockJudge(), "t", step, "", trace_id="x")
        assert set(critique.dimension_scores) == set(config.step_dimensions)
        assert all(v == critique.score for v in critique.dimension_scores.values())

    def test_same_input_twice_is_byte_identical(self, config):
        step = TraceStep(0, "n", "i", "fine output")
        one = evaluate_step(config, MockJudge(), "t", step, "", trace_id="x")
        two = evaluate_step(config, MockJudge(), "t", step, "", trace_id="x")
        assert one == two

    def test_context_digest_content(self):
        steps = (
            TraceStep(0, "planner", "i", "the plan"),
            TraceStep(1, "executor", "i", "x" * 900),
            TraceStep(2, "verifier", "i", "done"),
        )
        assert context_digest(steps, 0) == "(this is the first step)"
        digest = context_digest(steps, 2)
        assert "planner -> executor" in digest
        assert len(digest) < 600  # bounded

    def test_marker_in_previous_step_does_not_leak(self, config):
        # context carries the prior output; only this step's output is judged
        trace = _trace(["hit ERROR here", "clean output"])
        context = context_digest(trace.steps, 1)
        critique = evaluate_step(config, MockJudge(), "t", trace.steps[1], context, trace_id="j-1")
        assert critique.justification == CLEAN_STEP_TEXT


class TestEvaluateTrace:
    def test_single_step_trace_prompt_contains_step(self, config):
        captured = {}

        class Spy:
            def trace_call(self, *, task, rendered_trace, dimensions):
                captured["trace"] = rendered_trace
                return "Justification: ok\nScore: 5"

        trace = _trace(["only output"])
        evaluate_trace(config, Spy(), trace)
        assert "in 0" in captured["trace"]
        assert "only output" in captured["trace"]

    def test_over_budget_keeps_first_and_last_verbatim(self):
        trace = _trace([f"block {k} " + "y" * 300 for k in range(10)])
        rendered = render_trace(trace, max_chars=1200)
        assert "block 0" in rendered
        assert "block 9" in rendered
        assert "steps elided" in rendered
        assert "block 5" not in rendered
        assert len(rendered) <= 1200

    def test_context_overflow_triggers_tighter_rendering_not_failure(self):
        from tracelens.errors import ContextOverflow

        config = JudgeConfig(model_name="m", backend="mock", max_prompt_chars=8000)
        seen_lengths = []

        class PickyJudge:
            def trace_call(self, *, task, rendered_trace, dimensions):
                seen_lengths.append(len(rendered_trace))
                if len(rendered_trace) > 3000:
                    raise ContextOverflow("too long")
                return "Justification: ok\nScore: 5"

        trace = _trace(["x" * 2500 for _ in range(4)])
        critique = evaluate_trace(config, PickyJudge(), trace)
        assert critique.score == normalize_score(5)
        assert len(seen_lengths) > 1  # at least one re-render happened
        assert seen_lengths[-1] <= 3000

    def test_persistent_context_overflow_eventually_raises(self):
        from tracelens.errors import ContextOverflow

        config = JudgeConfig(model_name="m", backend="mock", max_prompt_chars=8000)

        class HopelessJudge:
            def trace_call(self, **kwargs):
                raise ContextOverflow("never fits")

        with pytest.raises(ContextOverflow):
            evaluate_trace(config, HopelessJudge(), _trace(["y" * 5000]))

    def test_mock_trace_completion_marker(self, config):
        trace = _trace(["work", "TASK COMPLETE and done"])
        critique = evaluate_trace(config, MockJudge(), trace)
        assert critique.score == 1.0

    @pytest.mark.parametrize("trace_id", sorted(EXPECTED_TRACE_SCORES))
    def test_fixture_trace_scores(self, config, fixture_corpus, trace_id):
        trace = fixture_corpus.get_trace(trace_id)
        critique = evaluate_trace(config, MockJudge(), trace)
        assert critique.score == pytest.approx(EXPECTED_TRACE_SCORES[trace_id], abs=1e-12)


class TestRubrics:
    def test_mock_rulebook_canned_rubrics_for_t1(self, config):
        rubric_set = generate_rubrics(config, MockJudge(), "T1", trace_id="x")
        assert len(rubric_set.rubrics) == 3
        assert rubric_set.rubrics[0].criterion_text == "the email from alice is located"
        assert [r.rubric_id for r in rubric_set.rubrics] == ["r1", "r2", "r3"]

    def test_empty_task_is_a_precondition_violation(self, config):
        with pytest.raises(ValueError):
            generate_rubrics(config, MockJudge(), "   ", trace_id="x")

    def test_zero_parseable_criteria_raises_after_retry(self, config):
        calls = {"n": 0}

        class Garbage:
            def rubric_gen_call(self, **kwargs):
                calls["n"] += 1
                return "no list here"

        with pytest.raises(EmptyRubrics):
            generate_rubrics(config, Garbage(), "task", trace_id="x")
        assert calls["n"] == 2

    def test_rubric_count_capped(self, config):
        class Verbose:
            def rubric_gen_call(self, **kwargs):
                return "\n".join(f"{i}. criterion {i}" for i in range(1, 30))

        rubric_set = generate_rubrics(config, Verbose(), "task", trace_id="x")
        assert len(rubric_set.rubrics) == 12

    def test_verify_fraction(self, config):
        trace = _trace(["contains alpha and beta", "contains gamma"])
        rubric_set = generate_rubrics(config, MockJudge(), "T1", trace_id="j-1")

        class ThreeOfFour:
            def rubric_verify_call(self, *, task, rendered_trace, rubrics):
                lines = []
                for i, (rid, _) in enumerate(rubrics):
                    state = "FULFILLED" if i != 1 else "NOT FULFILLED"
                    lines.append(f"Rubric {rid}: {state}\nReasoning: because.")
                return "\n".join(lines)

        verdicts = verify_rubrics(config, ThreeOfFour(), trace, rubric_set)
        assert verdicts.fraction_fulfilled == pytest.approx(2 / 3)

    def test_single_fulfilled_rubric(self, config):
        trace = _trace(["the only criterion text appears here"])
        from tracelens.judging import Rubric, RubricSet

        rubric_set = RubricSet(trace_id="j-1", rubrics=(Rubric("r1", "criterion text appears"),))
        verdicts = verify_rubrics(config, MockJudge(), trace, rubric_set)
        assert verdicts.fraction_fulfilled == 1.0

    def test_unparseable_verdict_defaults_to_not_fulfilled(self, config):
        trace = _trace(["whatever"])
        from tracelens.judging import Rubric, RubricSet

        rubric_set = RubricSet(
            trace_id="j-1", rubrics=(Rubric("r1", "present criterion"), Rubric("r2", "mystery"))
        )

        class PartialJudge:
            def rubric_verify_call(self, *, task, rendered_trace, rubrics):
                # answers only r1, in batch and in fallback calls alike
                return "Rubric r1: NOT FULFILLED\nReasoning: absent."

        verdicts = verify_rubrics(config, PartialJudge(), trace, rubric_set)
        by_id = {v.rubric_id: v for v in verdicts.verdicts}
        assert by_id["r2"].fulfilled is False
        assert by_id["r2"].reasoning == "verdict unparseable"

    def test_verdicts_pair_exactly_with_rubric_set(self, config, fixture_corpus):
        trace = fixture_corpus.get_trace("t03")
        rubric_set = generate_rubrics(config, MockJudge(), trace.task_text, trace_id=trace.trace_id)
        verdicts = verify_rubrics(config, MockJudge(), trace, rubric_set)
        assert {v.rubric_id for v in verdicts.verdicts} == {r.rubric_id for r in rubric_set.rubrics}

    @pytest.mark.parametrize("trace_id", sorted(EXPECTED_RUBRIC_FRACTIONS))
    def test_fixture_rubric_fractions(self, config, fixture_corpus, trace_id):
        trace = fixture_corpus.get_trace(trace_id)
        rubric_set = generate_rubrics(config, MockJudge(), trace.task_text, trace_id=trace_id)
        verdicts = verify_rubrics(config, MockJudge(), trace, rubric_set)
        assert verdicts.fraction_fulfilled == pytest.approx(EXPECTED_RUBRIC_FRACTIONS[trace_id], abs=0)


class _JitterJudge:
    """Wraps the mock judge with random per-call latency."""

    def __init__(self, seed: int) -> None:
        self.inner = MockJudge()
        self.rng = random.Random(seed)

    def _nap(self):
        time.sleep(self.rng.uniform(0.0, 0.01))

    def step_call(self, **kwargs):
        self._nap()
        return self.inner.step_call(**kwargs)

    def trace_call(self, **kwargs):
        self._nap()
        return self.inner.trace_call(**kwargs)

    def rubric_gen_call(self, **kwargs):
        self._nap()
        return self.inner.rubric_gen_call(**kwargs)

    def rubric_verify_call(self, **kwargs):
        self._nap()
        return self.inner.rubric_verify_call(**kwargs)


class TestEvaluateCorpus:
    def test_all_modes_give_complete_records(self, fixture_corpus, mock_judge_config):
        result = evaluate_corpus(fixture_corpus, mock_judge_config, MockJudge())
        assert len(result.records) == fixture_corpus.n_traces
        for record, trace in zip(result.records, fixture_corpus.traces):
            assert record.trace_id == trace.trace_id
            assert len(record.step_critiques) == trace.n_steps
            assert record.trace_critique is not None
            assert record.rubric_set is not None and record.rubric_verdicts is not None

    def test_step_mode_off_leaves_other_modes_untouched(self, fixture_corpus, mock_judge_config):
        full = evaluate_corpus(fixture_corpus, mock_judge_config, MockJudge())
        partial = evaluate_corpus(
            fixture_corpus, mock_judge_config, MockJudge(), ModeFlags(step=False)
        )
        for with_steps, without in zip(full.records, partial.records):
            assert without.step_critiques == ()
            assert without.trace_critique == with_steps.trace_critique
            assert without.rubric_set == with_steps.rubric_set
            assert without.rubric_verdicts == with_steps.rubric_verdicts

    def test_output_order_is_input_order_under_parallel_jitter(self, fixture_corpus):
        config = JudgeConfig(model_name="mock-judge", backend="mock", max_parallel=4)
        expected = [t.trace_id for t in fixture_corpus.traces]
        for round_number in range(20):
            result = evaluate_corpus(fixture_corpus, config, _JitterJudge(seed=round_number))
            assert [r.trace_id for r in result.records] == expected

    def test_per_trace_failure_recorded_and_skipped(self, fixture_corpus, mock_judge_config):
        class FlakyJudge(MockJudge):
            def trace_call(self, *, task, rendered_trace, dimensions):
                if "t03" in rendered_trace or "task t03" in task:
                    raise UnparseableVerdict("boom")
                return super().trace_call(task=task, rendered_trace=rendered_trace, dimensions=dimensions)

        result = evaluate_corpus(fixture_corpus, mock_judge_config, FlakyJudge())
        # the failing judge call becomes a gap, not a dropped trace
        assert len(result.records) == fixture_corpus.n_traces
        gap_record = next(r for r in result.records if r.trace_id == "t03")
        assert gap_record.trace_critique is None
        assert any(g.stage == "trace" for g in gap_record.gaps)

    def test_every_trace_failing_raises(self, fixture_corpus, mock_judge_config):
        from tracelens.errors import PipelineError

        class BrokenJudge:
            # non-judge errors are bugs, not gaps: they fail the whole trace
            def step_call(self, **kwargs):
                raise RuntimeError("judge is down")

            trace_call = rubric_gen_call = rubric_verify_call = step_call

        with pytest.raises(PipelineError):
            evaluate_corpus(fixture_corpus, mock_judge_config, BrokenJudge())

    def test_mock_determinism_across_runs(self, fixture_corpus, mock_judge_config):
        one = evaluate_corpus(fixture_corpus, mock_judge_config, MockJudge())
        two = evaluate_corpus(fixture_corpus, mock_judge_config, MockJudge())
        for a, b in zip(one.records, two.records):
            assert a.step_critiques == b.step_critiques
            assert a.trace_critique == b.trace_critique
            assert a.rubric_set == b.rubric_set
            assert a.rubric_verdicts == b.rubric_verdicts

    def test_record_invariants(self, fixture_records, fixture_corpus):
        for record, trace in zip(fixture_records, fixture_corpus.traces):
            for critique in record.step_critiques:
                assert 0.0 <= critique.score <= 1.0
                assert critique.trace_id == trace.trace_id
                assert all(0.0 <= v <= 1.0 for v in critique.dimension_scores.values())
            assert 0.0 <= record.trace_critique.score <= 1.0


def test_evaluate_trace_record_isolated_step_failure(mock_judge_config):
    class BadStepJudge(MockJudge):
        def step_call(self, *, task, input_text, output_text, context, dimensions):
            if "in 1" == input_text:
                raise UnparseableVerdict("garbled")
            return super().step_call(
                task=task, input_text=input_text, output_text=output_text,
                context=context, dimensions=dimensions,
            )

    trace = _trace(["a", "b", "c"])
    record = evaluate_trace_record(mock_judge_config, BadStepJudge(), trace)
    assert [c.step_index for c in record.step_critiques] == [0, 2]
    assert [g.step_index for g in record.gaps if g.stage == "step"] == [1]
