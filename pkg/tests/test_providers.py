import json
from decimal import Decimal

import httpx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ippg.packager import BoxBackend, EmptyPromptError, RenderConfig
from ippg.providers import (
    BUILTIN_PROFILES,
    AnthropicClient,
    MockClient,
    Mode,
    OpenAIChatClient,
    ProfileError,
    ProviderError,
    ProviderProfile,
    RetryBudget,
    RetryPolicy,
    TranscriptWriter,
    TransportError,
    UnknownCounterError,
    build_request,
    chars_div4,
    compare,
    dumps_profile,
    estimate_cost,
    execute,
    load_profile,
    loads_profile,
    register_text_counter,
    request_counts,
)
from ippg.tokenomics import TokenCounts, cost_baseline, cost_ippg, ippg_strictly_cheaper

GPT41 = BUILTIN_PROFILES["gpt-4.1"]
CLAUDE = BUILTIN_PROFILES["claude-3.5-sonnet"]
BOX = BoxBackend()


def img(w, h, value=90):
    return np.full((h, w, 3), value, dtype=np.uint8)


# -- profiles ---------------------------------------------------------------


def test_builtin_schemes():
    assert type(BUILTIN_PROFILES["gpt-4o"].scheme).__name__ == "TileBased"
    assert type(GPT41.scheme).__name__ == "TileBased"
    assert type(CLAUDE.scheme).__name__ == "PixelLinear"


@pytest.mark.parametrize("name", sorted(BUILTIN_PROFILES))
def test_profile_round_trip(name, tmp_path):
    p = BUILTIN_PROFILES[name]
    text = dumps_profile(p)
    assert loads_profile(text) == p
    assert dumps_profile(loads_profile(text)) == text
    path = tmp_path / "p.ini"
    path.write_text(text)
    assert load_profile(path) == p


def test_load_profile_errors(tmp_path):
    with pytest.raises(ProfileError):
        load_profile("no-such-model")
    bad = tmp_path / "bad.ini"
    bad.write_text("[profile]\ninput_price = cheap\noutput_price = 1\n")
    with pytest.raises(ProfileError):
        load_profile(bad)
    bad.write_text("[profile]\ninput_price = 1\noutput_price = 1\nscheme = hex\n")
    with pytest.raises(ProfileError):
        load_profile(bad)


def test_text_counter_default_and_registry():
    assert chars_div4("abcd") == 1 and chars_div4("abcde") == 2 and chars_div4("") == 0
    assert GPT41.count_text(None) == 0
    register_text_counter("words", lambda s: len(s.split()))
    assert ProviderProfile("x", GPT41.pricing, GPT41.scheme, "words").count_text("a b c") == 3
    with pytest.raises(UnknownCounterError):
        ProviderProfile("x", GPT41.pricing, GPT41.scheme, "nope").count_text("abc")


# -- requests ---------------------------------------------------------------


def test_baseline_request_is_passthrough():
    r = build_request(GPT41, "sys", "Q?", [img(100, 50)], Mode.BASELINE, backend=BOX)
    assert r.user_text == "Q?" and len(r.images) == 1 and r.image_sizes == [(100, 50)]


def test_ippg_request_banners_first_image_only():
    r = build_request(GPT41, "sys", "Q?", [img(100, 50), img(30, 30, 5)], Mode.IPPG, RenderConfig(), backend=BOX)
    assert r.user_text is None and r.system_text == "sys"
    assert r.image_sizes[0] == (100, 50 + r.packaged.banner_height_px)
    assert r.image_sizes[1] == (30, 30)
    assert np.array_equal(np.asarray(r.images[1]), img(30, 30, 5))


def test_ippg_without_images_renders_text_only():
    r = build_request(GPT41, "sys", "Write a function that adds two numbers.", [], "ippg", backend=BOX)
    assert len(r.images) == 1 and r.packaged.base_height_px == 0


def test_ippg_empty_prompt_rejected():
    with pytest.raises(EmptyPromptError):
        build_request(GPT41, "sys", "  ", [img(10, 10)], Mode.IPPG, backend=BOX)


def test_mode_isolation_same_system_and_base_pixels():
    base = np.random.default_rng(1).integers(0, 256, (80, 120, 3), dtype=np.uint8)
    b = build_request(GPT41, "sys", "What is it?", [base], Mode.BASELINE, backend=BOX)
    p = build_request(GPT41, "sys", "What is it?", [base], Mode.IPPG, backend=BOX)
    assert b.system_text == p.system_text
    assert np.array_equal(np.asarray(p.images[0])[p.packaged.banner_height_px:], np.asarray(b.images[0]))


def test_digest_depends_on_content_and_mode():
    a = build_request(GPT41, "s", "q", [img(10, 10)], backend=BOX)
    assert a.digest == build_request(GPT41, "s", "q", [img(10, 10)], backend=BOX).digest
    assert a.digest != build_request(GPT41, "s", "q", [img(10, 10, 91)], backend=BOX).digest
    assert a.digest != build_request(GPT41, "s", "q2", [img(10, 10)], backend=BOX).digest


# -- estimates --------------------------------------------------------------


def test_estimate_examples():
    r = build_request(GPT41, "", None, [img(512, 512)], backend=BOX)
    assert estimate_cost(GPT41, r).total == Decimal("0.00051")
    r = build_request(CLAUDE, "", None, [img(1500, 750)], backend=BOX)
    assert estimate_cost(CLAUDE, r).total == Decimal("0.0045")
    r = build_request(CLAUDE, "", None, [img(1500, 1000)], backend=BOX)
    assert estimate_cost(CLAUDE, r).total == Decimal("0.006")


def test_estimates_differ_by_savings_identity():
    base = img(400, 300)
    question = "Summarize the figure and list every number it contains in ascending order. " * 6
    b = build_request(GPT41, "sys", question, [base], Mode.BASELINE, backend=BOX)
    p = build_request(GPT41, "sys", question, [base], Mode.IPPG, backend=BOX)
    cmp = compare(GPT41, b, p, expected_output_tokens=7)
    n_i, d = cmp.counts.input_text, cmp.counts.image_ippg - cmp.counts.image_baseline
    diff = estimate_cost(GPT41, b, 7).total - estimate_cost(GPT41, p, 7).total
    assert diff == GPT41.pricing.input_price * (n_i - d) == cmp.savings
    assert cmp.verdict.cheaper == (d < n_i)


def test_request_counts_slots():
    r = build_request(GPT41, "abcdefgh", "abcd", [img(10, 10)], backend=BOX)
    assert request_counts(GPT41, r, 3) == TokenCounts(input_text=1, output_text=3, image_baseline=255, shared_text=2)


@settings(max_examples=200)
@given(
    st.sampled_from(sorted(BUILTIN_PROFILES)),
    st.integers(0, 10**5), st.integers(0, 10**4), st.integers(0, 10**5), st.integers(0, 10**5),
)
def test_estimate_consistency(name, n_i, n_o, b_img, p_img):
    prof = BUILTIN_PROFILES[name]
    counts = TokenCounts(n_i, n_o, b_img, p_img)
    cheaper = cost_ippg(prof.pricing, counts).total < cost_baseline(prof.pricing, counts).total
    assert cheaper == ippg_strictly_cheaper(prof.pricing, counts)


# -- mock client and retries ------------------------------------------------


def sample_request(sample_id="s1", text="Q?"):
    return build_request(GPT41, "sys", text, [img(64, 64)], backend=BOX, metadata={"sample_id": sample_id})


def test_mock_is_deterministic():
    a = MockClient(GPT41, seed=7).complete(sample_request())
    b = MockClient(GPT41, seed=7).complete(sample_request())
    assert a == b
    assert a.reported_usage.image == 255
    assert a.reported_usage.input_text == GPT41.count_text("sys") + GPT41.count_text("Q?")


def test_mock_accuracy_extremes():
    reqs = [sample_request(f"s{i}", f"question {i}") for i in range(30)]
    answers = {f"s{i}": str(i) for i in range(30)}
    always = MockClient(GPT41, seed=1, answers=answers, accuracy=1.0)
    never = MockClient(GPT41, seed=1, answers=answers, accuracy=0.0)
    assert [always.complete(r).text for r in reqs] == [str(i) for i in range(30)]
    assert all(never.complete(r).text.startswith("mock-") for r in reqs)


def test_mock_transient_failure_then_success():
    client = MockClient(GPT41, transient_failure_rate=1.0)
    req = sample_request()
    with pytest.raises(TransportError):
        client.complete(req)
    assert client.complete(req).text
    sleeps = []
    fresh = MockClient(GPT41, transient_failure_rate=1.0)
    assert execute(fresh, req, RetryPolicy(), sleep=sleeps.append).text
    assert sleeps == [0.5]


def test_execute_gives_up_on_rejection_and_budget():
    rejecting = MockClient(GPT41, rejection_rate=1.0)
    with pytest.raises(ProviderError):
        execute(rejecting, sample_request(), sleep=lambda s: None)
    flaky = MockClient(GPT41, transient_failure_rate=1.0)
    with pytest.raises(TransportError):
        execute(flaky, sample_request(), budget=RetryBudget(0), sleep=lambda s: None)


def test_retry_delays_capped():
    p = RetryPolicy(max_attempts=10, base_delay_s=0.5, max_delay_s=8)
    assert [p.delay(i) for i in range(7)] == [0.5, 1, 2, 4, 8, 8, 8]


def test_transcript_records_requests(tmp_path):
    t = TranscriptWriter(tmp_path / "t.jsonl")
    req = sample_request()
    t.record(req, MockClient(GPT41).complete(req))
    t.record(req, error=TransportError("boom"))
    lines = [json.loads(x) for x in (tmp_path / "t.jsonl").read_text().splitlines()]
    assert lines[0]["digest"] == req.digest and "response" in lines[0]
    assert lines[1]["error"] == {"type": "TransportError", "message": "boom"}


# -- live clients against a stub transport -----------------------------------


def stub(status, body, seen):
    def handler(request: httpx.Request) -> httpx.Response:
        seen.append(request)
        return httpx.Response(status, json=body)

    return httpx.Client(transport=httpx.MockTransport(handler))


def test_openai_client_parses_reply():
    seen = []
    body = {"choices": [{"message": {"content": "42"}}], "usage": {"prompt_tokens": 300, "completion_tokens": 1}}
    client = OpenAIChatClient("gpt-4.1", api_key="sk-test", http=stub(200, body, seen))
    result = client.complete(sample_request())
    assert result.text == "42" and result.reported_usage.input_text == 300
    sent = json.loads(seen[0].content)
    assert sent["messages"][0] == {"role": "system", "content": "sys"}
    assert seen[0].headers["authorization"] == "Bearer sk-test"
    assert "sk-test" not in repr(client)


def test_anthropic_client_parses_reply():
    seen = []
    body = {"content": [{"type": "text", "text": "7"}], "usage": {"input_tokens": 12, "output_tokens": 1}}
    client = AnthropicClient("claude-3-5-sonnet", api_key="k", http=stub(200, body, seen))
    req = build_request(CLAUDE, "sys", "Q?", [img(64, 64)], Mode.IPPG, backend=BOX)
    result = client.complete(req)
    assert result.text == "7"
    sent = json.loads(seen[0].content)
    assert sent["system"] == "sys"
    assert [b["type"] for b in sent["messages"][0]["content"]] == ["image"]


@pytest.mark.parametrize(("status", "error"), [(429, TransportError), (503, TransportError), (400, ProviderError)])
def test_http_errors_classified(status, error):
    client = OpenAIChatClient("m", api_key="k", http=stub(status, {}, []))
    with pytest.raises(error):
        client.complete(sample_request())


def test_missing_api_key(monkeypatch):
    monkeypatch.delenv("OPENAI_API_KEY", raising=False)
    with pytest.raises(ProviderError):
        OpenAIChatClient("m")
