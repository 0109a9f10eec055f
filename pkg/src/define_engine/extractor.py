"""Prompt construction, chat-completion clients, and structured-response parsing.

Four prompt builders cover the pipeline: grading a transcript into a factor
profile, grading a historical data table (EPS / revenue / stock price),
chain-of-thought decisions over a transcript / summary / profile payload,
and analogical decisions over retrieved example profiles. Builders are pure
functions of their inputs, so rendered prompts can be pinned by golden-file
tests and completions can be replayed from recorded fixtures keyed by a
content hash of the exchange - the whole test suite runs without a model.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Callable, Mapping, Protocol, Sequence

import httpx

from .errors import (
    EmptySeries,
    IdxOutOfRange,
    MalformedJSON,
    MalformedResponse,
    MissingApiKey,
    MissingFactor,
    MissingFixture,
    MissingOutcome,
    TemplateError,
    TransportError,
    UnknownAction,
    ValidationError,
)
from .ingest import FinancialHistory, PriceSeries, ProfileRecord, TranscriptRecord
from .labeler import DecisionLabel, parse_label
from .schema import (
    Category,
    FactorProfile,
    FactorSchema,
    FactorSpec,
    _normalize_token,
    default_schema,
    grade_vocabulary,
    parse_grade,
)

API_KEY_ENV = "DEFINE_API_KEY"

ACTION_LINES = (
    "- Action 1: strong buy: The stock price will increase by more than 5%",
    "- Action 2: buy: The stock price will increase by 2% to 5%",
    "- Action 3: hold: The stock price is expected to remain stable, "
    "fluctuating between -2% to 2%",
    "- Action 4: sell: The stock price will decrease by 2% to 5%",
    "- Action 5: strong sell: The stock price will decrease by more than 5%",
)

_ACTION_BY_INDEX = {
    1: DecisionLabel.STRONG_BUY,
    2: DecisionLabel.BUY,
    3: DecisionLabel.HOLD,
    4: DecisionLabel.SELL,
    5: DecisionLabel.STRONG_SELL,
}


@dataclass(frozen=True)
class ChatExchange:
    system_message: str
    user_message: str
    response_format: str = "json"  # "json" | "free-text"

    def __post_init__(self):
        if not self.system_message.strip() or not self.user_message.strip():
            raise TemplateError("exchange messages must be non-empty")
        if self.response_format not in ("json", "free-text"):
            raise TemplateError(f"bad response_format {self.response_format!r}")

    def content_hash(self) -> str:
        canonical = json.dumps(
            {
                "system_message": self.system_message,
                "user_message": self.user_message,
                "response_format": self.response_format,
            },
            sort_keys=True,
            ensure_ascii=False,
            separators=(",", ":"),
        )
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# --- rendering helpers ---------------------------------------------------------


def render_transcript(transcript: TranscriptRecord) -> str:
    lines = [f"Earnings Call Transcript for Company {transcript.ticker}", ""]
    lines.append("# Prepared Remarks")
    lines.append("")
    for utterance in transcript.prepared_remarks:
        lines.append(f"{utterance.speaker}: {utterance.text}")
        lines.append("")
    lines.append("# Questions and Answers")
    lines.append("")
    for pair in transcript.qa_pairs:
        lines.append(f"{pair.question.speaker}: {pair.question.text}")
        lines.append(f"{pair.answer.speaker}: {pair.answer.text}")
        lines.append("")
    return "\n".join(lines).rstrip("\n")


def _outcome_names(factor: FactorSpec) -> str:
    return "{" + ", ".join(o.name for o in factor.outcomes) + "}"


def render_factor_menu(schema: FactorSchema) -> str:
    blocks = []
    for factor in schema.factors:
        blocks.append(
            f"{factor.id + 1}. {factor.name}: {factor.description} "
            f"Outcomes: {_outcome_names(factor)}"
        )
    return "\n\n".join(blocks)


def render_profile(profile: FactorProfile) -> str:
    """Canonical text form of a profile for decision prompts."""
    blocks = []
    for factor, summary, probs in zip(
        profile.schema.factors, profile.summaries, profile.probabilities
    ):
        outcome_bits = ", ".join(
            f"{outcome.name}: {prob:.3f}" for outcome, prob in zip(factor.outcomes, probs)
        )
        blocks.append(
            f"{factor.id + 1}. {factor.name}\n"
            f"Summary: {summary if summary.strip() else '(none)'}\n"
            f"Outcome probabilities: {outcome_bits}"
        )
    return "\n\n".join(blocks)


def _grade_options() -> str:
    return "{" + ", ".join(grade_vocabulary()) + "}"


# --- prompt builders -----------------------------------------------------------


def build_profile_prompt(
    transcript: TranscriptRecord, schema: FactorSchema | None = None
) -> ChatExchange:
    """The transcript-to-factor-profile grading prompt."""
    schema = schema or default_schema()
    system = (
        "You are a financial analyst specializing in earnings call transcripts. "
        "You will receive the complete transcript of an earnings call, including "
        "both the prepared remarks and the Q&A session. Your job is to identify "
        "the key factors in the transcript and assign likelihoods to the "
        "potential outcomes of those factors."
    )
    example = {
        "economic health": {
            "summary": "...",
            "likelihoods": {"positive-outlook": "likely", "unknown-or-uncertain": "unlikely"},
        }
    }
    user = (
        "Conduct a comprehensive analysis of the earnings call transcript below. "
        "Capture the important factors and estimate the likelihood of each factor "
        "resulting in each of its potential outcomes.\n\n"
        f"{render_transcript(transcript)}\n\n"
        "Analyze the transcript with respect to the following key factors:\n\n"
        f"{render_factor_menu(schema)}\n\n"
        "For each key factor, first provide a concise summary of what the "
        "transcript says about it, then review its listed outcomes and assess "
        "the likelihood of each one. Likelihoods must be selected from the "
        f"following options: {_grade_options()}. Format your response in JSON: "
        "one key per factor (use the factor name), each holding an object with "
        'keys "summary" and "likelihoods", where "likelihoods" maps every '
        "outcome name to one likelihood option.\n\n"
        "# Example Output:\n"
        f"{json.dumps(example, ensure_ascii=False)}\n\n"
        "# Your Output:\n"
    )
    return ChatExchange(system_message=system, user_message=user)


def build_history_prompt(
    rows: Sequence[tuple[date, float]],
    data_name: str,
    description: str,
    announce_date: date,
    value_label: str = "Value",
    outcomes: Sequence[str] = ("bullish", "stable", "bearish"),
) -> ChatExchange:
    """The historical-data trend-grading prompt.

    Rows after the announcement date are excluded; an empty table (before or
    after truncation) raises EmptySeries.
    """
    kept = [(d, v) for d, v in rows if d <= announce_date]
    if not kept:
        raise EmptySeries(
            f"no {data_name} rows on or before {announce_date.isoformat()}"
        )
    system = (
        "You are a financial analyst specializing in historical data analysis, "
        "including stock prices, earnings per share (EPS), and revenue. Your "
        "goal is to assess the likelihood of different market trends based on "
        "past data."
    )
    outcome_list = "{" + ", ".join(outcomes) + "}"
    table = "\n".join(f"    {d.isoformat()}    {v}" for d, v in kept)
    example = {"historical EPS": {"bullish": "very likely", "stable": "somewhat likely", "bearish": "unlikely"}}
    user = (
        f"The potential outcomes to consider are: {outcome_list}. For each "
        "outcome, please assign a likelihood level from the following options: "
        f"{_grade_options()}.\n\n"
        "Below, you will be provided with a historical data table:\n"
        f"{data_name}: {description}\n\n"
        f"    Date          {value_label}\n"
        f"{table}\n\n"
        "Please analyze this historical data and provide the likelihood of "
        "each outcome in JSON format.\n\n"
        "# Example Output:\n"
        f"{json.dumps(example, ensure_ascii=False)}\n\n"
        "# Your Output:\n"
    )
    return ChatExchange(system_message=system, user_message=user)


_DECIDER_SYSTEM = (
    "You are a financial analyst who specializes in giving investors buy or "
    "sell recommendations by thoroughly analyzing earnings call transcripts."
)


def _decision_header(company: str, announce_date: date) -> str:
    if not str(company).strip():
        raise TemplateError("company name is required for decision prompts")
    return (
        f"Based on your analysis of the earnings call for {company} held on "
        f"{announce_date.isoformat()}, decide on the most likely analyst "
        "recommendation for the next 30 days from these options:\n\n"
        + "\n".join(ACTION_LINES)
    )


def build_cot_prompt(
    payload: str, payload_kind: str, company: str, announce_date: date
) -> ChatExchange:
    """The step-by-step decision prompt over a transcript, summary, or profile."""
    kinds = {"transcript": "transcript", "summary": "summary", "profile": "factor profile"}
    if payload_kind not in kinds:
        raise TemplateError(
            f"payload_kind must be one of {sorted(kinds)}, got {payload_kind!r}"
        )
    if not str(payload).strip():
        raise TemplateError("decision payload must be non-empty")
    user = (
        f"{_decision_header(company, announce_date)}\n\n"
        f"Below is the {kinds[payload_kind]} from {company}'s earnings call on "
        f"{announce_date.isoformat()}:\n\n"
        f"{payload}\n\n"
        "Please think step by step and respond with the analyst recommendation "
        "for this stock in JSON format, including these keys: ('thoughts', "
        "'recommendation', 'justification'). 'thoughts' should be your detailed "
        "reasoning steps, 'recommendation' should be one of the actions "
        "mentioned above for 30 days of trading, and 'justification' should "
        "clearly explain your recommendation.\n"
    )
    return ChatExchange(system_message=_DECIDER_SYSTEM, user_message=user)


def build_analogy_prompt(
    examples: Sequence[tuple[FactorProfile, DecisionLabel]],
    target: FactorProfile,
    company: str,
    announce_date: date,
) -> ChatExchange:
    """The analogical decision prompt over retrieved example profiles."""
    if not examples:
        raise TemplateError("analogical prompts need at least one example profile")
    blocks = []
    for i, (profile, label) in enumerate(examples, start=1):
        blocks.append(
            f"Example Company Profile {i}:\n"
            f"{render_profile(profile)}\n"
            f"Analyst recommendation: {label.value.replace('-', ' ')}"
        )
    user = (
        "Here are several example company profiles. Each profile highlights key "
        "factors from an earnings call transcript and probabilities for "
        "potential outcomes based on those factors. Each profile represents a "
        "specific company and is based on its historical earnings call data. "
        "Your job is to pick the most analogous example and use its strategy to "
        "solve the initial problem.\n\n"
        + "\n\n".join(blocks)
        + "\n\n** Initial Problem **\n\n"
        f"{_decision_header(company, announce_date)}\n\n"
        f"Below is the company profile summarized from {company}'s earnings "
        f"call on {announce_date.isoformat()} and the historical price trend "
        "probabilities judged by an analyst:\n\n"
        f"{render_profile(target)}\n\n"
        "** Solve the Initial Problem **\n\n"
        "Please respond with the analyst recommendation for this stock in JSON "
        "format, including these keys: ('idx', 'recommendation', "
        "'justification'). 'idx' is the index of the most analogous example "
        "profile, 'recommendation' should be one of the actions mentioned above "
        "for 30 days of trading, and 'justification' should clearly explain "
        "your recommendation using the strategy you learned from the selected "
        "example company profile.\n"
    )
    return ChatExchange(system_message=_DECIDER_SYSTEM, user_message=user)


# --- completion clients ---------------------------------------------------------


class CompletionClient(Protocol):
    def complete(self, exchange: ChatExchange) -> str: ...


@dataclass(frozen=True)
class ClientConfig:
    endpoint: str = "https://api.openai.com/v1/chat/completions"
    model: str = "gpt-4o-2024-08-06"
    timeout: float = 60.0
    max_retries: int = 3
    concurrency: int = 4
    temperature: float = 0.0
    mode: str = "fixture"  # "fixture" | "live" | "record"
    fixtures_dir: str | None = None

    def __post_init__(self):
        if self.mode not in ("fixture", "live", "record"):
            raise ValidationError(f"bad client mode {self.mode!r}")
        if self.max_retries < 0 or self.concurrency < 1:
            raise ValidationError("max_retries must be >= 0 and concurrency >= 1")


class CannedClient:
    """Deterministic in-memory client for tests: dict by hash, else callable."""

    def __init__(self, responses: Mapping[str, str] | Callable[[ChatExchange], str]):
        self._responses = responses
        self.calls = 0
        self._lock = threading.Lock()

    def complete(self, exchange: ChatExchange) -> str:
        with self._lock:
            self.calls += 1
        if callable(self._responses):
            return self._responses(exchange)
        key = exchange.content_hash()
        if key not in self._responses:
            raise MissingFixture(f"no canned response for exchange {key}")
        return self._responses[key]


class FixtureClient:
    """Replays recorded responses from ``{hash}.json`` files in a directory.

    With `record_from` set, unanswered exchanges are forwarded to that client
    and the response is saved for future replays.
    """

    def __init__(self, directory: str | Path, record_from: CompletionClient | None = None):
        self._dir = Path(directory)
        self._record_from = record_from
        self._lock = threading.Lock()

    def complete(self, exchange: ChatExchange) -> str:
        path = self._dir / f"{exchange.content_hash()}.json"
        if path.exists():
            data = json.loads(path.read_text(encoding="utf-8"))
            return data["response"]
        if self._record_from is None:
            raise MissingFixture(
                f"no fixture {path.name} in {self._dir} "
                "(record one first or switch to live mode)"
            )
        response = self._record_from.complete(exchange)
        record = {
            "system_message": exchange.system_message,
            "user_message": exchange.user_message,
            "response_format": exchange.response_format,
            "response": response,
        }
        with self._lock:
            self._dir.mkdir(parents=True, exist_ok=True)
            path.write_text(
                json.dumps(record, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
            )
        return response


class HttpClient:
    """Live client for an OpenAI-style chat-completions endpoint.

    Retries transport failures and 5xx responses with exponential backoff;
    4xx responses fail immediately (they will not get better). At most
    `concurrency` requests are in flight at once.
    """

    def __init__(
        self,
        config: ClientConfig,
        api_key: str | None = None,
        transport: httpx.BaseTransport | None = None,
        sleeper: Callable[[float], None] = time.sleep,
        backoff_base: float = 0.5,
    ):
        key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        if not key:
            raise MissingApiKey(
                f"live mode needs an API key: set {API_KEY_ENV} or pass api_key"
            )
        self._config = config
        self._key = key
        self._sleep = sleeper
        self._backoff_base = backoff_base
        self._semaphore = threading.Semaphore(config.concurrency)
        self._client = httpx.Client(timeout=config.timeout, transport=transport)

    def close(self) -> None:
        self._client.close()

    def complete(self, exchange: ChatExchange) -> str:
        payload = {
            "model": self._config.model,
            "temperature": self._config.temperature,
            "messages": [
                {"role": "system", "content": exchange.system_message},
                {"role": "user", "content": exchange.user_message},
            ],
        }
        if exchange.response_format == "json":
            payload["response_format"] = {"type": "json_object"}
        headers = {"Authorization": f"Bearer {self._key}"}
        attempts = self._config.max_retries + 1
        last_error = "no attempt made"
        for attempt in range(1, attempts + 1):
            try:
                with self._semaphore:
                    response = self._client.post(
                        self._config.endpoint, json=payload, headers=headers
                    )
            except httpx.HTTPError as exc:
                last_error = f"transport failure: {exc}"
            else:
                if response.status_code == 200:
                    try:
                        body = response.json()
                        return body["choices"][0]["message"]["content"]
                    except (KeyError, IndexError, TypeError, ValueError) as exc:
                        raise TransportError(
                            f"unexpected completion payload: {exc}",
                            attempts=attempt,
                            status=200,
                        ) from exc
                if response.status_code < 500:
                    raise TransportError(
                        f"completion request rejected ({response.status_code}): "
                        f"{response.text[:500]}",
                        attempts=attempt,
                        status=response.status_code,
                    )
                last_error = f"server error {response.status_code}"
            if attempt < attempts:
                self._sleep(self._backoff_base * (2 ** (attempt - 1)))
        raise TransportError(
            f"completion failed after {attempts} attempts: {last_error}",
            attempts=attempts,
        )


def make_client(config: ClientConfig, api_key: str | None = None) -> CompletionClient:
    """Build the client the config's mode calls for."""
    if config.mode == "live":
        return HttpClient(config, api_key=api_key)
    if config.fixtures_dir is None:
        raise ValidationError(f"{config.mode} mode needs fixtures_dir")
    if config.mode == "fixture":
        return FixtureClient(config.fixtures_dir)
    return FixtureClient(config.fixtures_dir, record_from=HttpClient(config, api_key=api_key))


# --- response parsing -------------------------------------------------------------


def _load_json(text: str) -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedJSON(f"model response is not JSON: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise MalformedJSON("model response must be a JSON object")
    return data


def _normalized_keys(data: Mapping[str, object]) -> dict[str, object]:
    return {_normalize_token(str(key)): value for key, value in data.items()}


def parse_profile_response(text: str, schema: FactorSchema | None = None) -> FactorProfile:
    """Parse a profile-grading reply into a validated FactorProfile.

    The reply must cover every schema factor and grade every outcome; factor
    and outcome names match case- and separator-insensitively. Unknown extra
    keys (model chatter) are ignored.
    """
    schema = schema or default_schema()
    data = _normalized_keys(_load_json(text))
    grades, summaries = [], []
    for factor in schema.factors:
        entry = data.get(_normalize_token(factor.name))
        if entry is None:
            raise MissingFactor(f"response does not cover factor {factor.name!r}")
        if not isinstance(entry, dict):
            raise MalformedResponse(f"factor {factor.name!r} entry must be an object")
        likelihoods = entry.get("likelihoods")
        if not isinstance(likelihoods, dict):
            raise MalformedResponse(f"factor {factor.name!r} needs a likelihoods object")
        likelihoods = _normalized_keys(likelihoods)
        row = []
        for outcome in factor.outcomes:
            token = likelihoods.get(_normalize_token(outcome.name))
            if token is None:
                raise MissingOutcome(
                    f"factor {factor.name!r} is missing outcome {outcome.name!r}"
                )
            row.append(int(parse_grade(str(token))))
        grades.append(tuple(row))
        summaries.append(str(entry.get("summary", "")))
    return FactorProfile.from_grades(schema, grades, summaries)


def parse_history_response(text: str, factor: FactorSpec) -> tuple[int, ...]:
    """Parse a history-grading reply into grades in the factor's outcome order.

    Accepts both the flat form ``{"bullish": ...}`` and the nested form
    ``{"historical EPS": {"bullish": ...}}``.
    """
    data = _normalized_keys(_load_json(text))
    outcome_keys = {_normalize_token(o.name) for o in factor.outcomes}
    if not (outcome_keys & set(data)) and len(data) == 1:
        inner = next(iter(data.values()))
        if isinstance(inner, dict):
            data = _normalized_keys(inner)
    row = []
    for outcome in factor.outcomes:
        token = data.get(_normalize_token(outcome.name))
        if token is None:
            raise MissingOutcome(
                f"factor {factor.name!r} is missing outcome {outcome.name!r}"
            )
        row.append(int(parse_grade(str(token))))
    return tuple(row)


def parse_action(value: object) -> DecisionLabel:
    """Parse a recommendation field: a label token, "Action 3", or an index."""
    if isinstance(value, int):
        label = _ACTION_BY_INDEX.get(value)
        if label is None:
            raise UnknownAction(f"action index {value} out of range 1..5")
        return label
    text = str(value).strip()
    try:
        return parse_label(text)
    except UnknownAction:
        pass
    normalized = _normalize_token(text)
    match = re.match(r"action\s*(\d+)\b", normalized)
    if match:
        index = int(match.group(1))
        if index in _ACTION_BY_INDEX:
            return _ACTION_BY_INDEX[index]
        raise UnknownAction(f"action index {index} out of range 1..5")
    # longest label first, so "strong sell" is never read as "sell"
    for label in sorted(DecisionLabel, key=lambda l: -len(l.value)):
        if label.value.replace("-", " ") in normalized:
            return label
    raise UnknownAction(f"cannot interpret recommendation {value!r}")


@dataclass(frozen=True)
class CotDecision:
    label: DecisionLabel
    thoughts: str
    justification: str


def parse_cot_response(text: str) -> CotDecision:
    data = _normalized_keys(_load_json(text))
    if "recommendation" not in data:
        raise MalformedResponse("decision response is missing 'recommendation'")
    return CotDecision(
        label=parse_action(data["recommendation"]),
        thoughts=str(data.get("thoughts", "")),
        justification=str(data.get("justification", "")),
    )


def parse_analogy_response(text: str, k: int) -> tuple[int, DecisionLabel, str]:
    data = _normalized_keys(_load_json(text))
    for key in ("idx", "recommendation"):
        if key not in data:
            raise MalformedResponse(f"analogical response is missing {key!r}")
    try:
        idx = int(data["idx"])
    except (TypeError, ValueError) as exc:
        raise MalformedResponse(f"analogical idx {data['idx']!r} is not an integer") from exc
    if not 1 <= idx <= k:
        raise IdxOutOfRange(f"idx {idx} outside [1, {k}]")
    return idx, parse_action(data["recommendation"]), str(data.get("justification", ""))


def cot_decision(
    client: CompletionClient,
    payload: str,
    payload_kind: str,
    company: str,
    announce_date: date,
) -> CotDecision:
    """One chain-of-thought decision round trip."""
    exchange = build_cot_prompt(payload, payload_kind, company, announce_date)
    return parse_cot_response(client.complete(exchange))


# --- profile extraction ---------------------------------------------------------


def _history_rows(
    factor: FactorSpec,
    prices: PriceSeries | None,
    financials: FinancialHistory | None,
) -> tuple[list[tuple[date, float]], str]:
    """Pick the data series backing a historical factor by its name."""
    name = _normalize_token(factor.name)
    if "eps" in name.split() or "earnings" in name:
        if financials is None:
            raise EmptySeries(f"factor {factor.name!r} needs an EPS history")
        return list(financials.eps), "EPS"
    if "revenue" in name:
        if financials is None:
            raise EmptySeries(f"factor {factor.name!r} needs a revenue history")
        return list(financials.revenue), "Revenue"
    if "stock" in name or "price" in name:
        if prices is None:
            raise EmptySeries(f"factor {factor.name!r} needs a price history")
        return list(zip(prices.dates, prices.closes)), "Close Price"
    raise ValidationError(f"no historical data source for factor {factor.name!r}")


def extract_profile(
    client: CompletionClient,
    transcript: TranscriptRecord,
    prices: PriceSeries | None = None,
    financials: FinancialHistory | None = None,
    schema: FactorSchema | None = None,
) -> FactorProfile:
    """Build one validated profile: transcript grading plus history grading.

    Non-historical factors take their grades from the transcript reply.
    Historical-metric factors are re-graded from their own data prompts (one
    per metric, truncated at the announcement date); their summaries stay
    with what the transcript reply said about them.
    """
    schema = schema or default_schema()
    base = parse_profile_response(
        client.complete(build_profile_prompt(transcript, schema)), schema
    )
    grades = [list(row) for row in base.grades]
    for factor in schema.factors:
        if factor.category is not Category.HISTORICAL_METRIC:
            continue
        rows, value_label = _history_rows(factor, prices, financials)
        exchange = build_history_prompt(
            rows=rows,
            data_name=factor.name,
            description=factor.description,
            announce_date=transcript.announcement_date,
            value_label=value_label,
            outcomes=tuple(o.name for o in factor.outcomes),
        )
        grades[factor.id] = list(parse_history_response(client.complete(exchange), factor))
    return FactorProfile.from_grades(schema, grades, base.summaries)


@dataclass(frozen=True)
class ExtractJob:
    profile_id: str
    transcript: TranscriptRecord
    prices: PriceSeries | None = None
    financials: FinancialHistory | None = None
    label: DecisionLabel | None = None


def extract_many(
    client: CompletionClient,
    jobs: Sequence[ExtractJob],
    schema: FactorSchema | None = None,
    max_workers: int = 1,
) -> list[ProfileRecord]:
    """Extract a batch of profiles, optionally across worker threads.

    Output order follows input order regardless of worker scheduling.
    """
    schema = schema or default_schema()

    def run(job: ExtractJob) -> ProfileRecord:
        profile = extract_profile(client, job.transcript, job.prices, job.financials, schema)
        return ProfileRecord(
            profile_id=job.profile_id,
            ticker=job.transcript.ticker,
            date=job.transcript.announcement_date,
            profile=profile,
            label=job.label,
            sector=job.transcript.sector,
        )

    if max_workers <= 1:
        return [run(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(run, jobs))
