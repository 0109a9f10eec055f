"""Local-file ingestion: transcripts, prices, financial histories, profile store.

All formats are UTF-8 with ISO-8601 dates (trading dates, no timezone):

* transcript JSON - ticker, announcement_date, optional sector, participants,
  prepared_remarks, qa_pairs (see `load_transcript`)
* price CSV - header ``date,close``
* financials CSV - header ``date,eps,revenue``
* profile store JSONL - one profile per line with raw grades and normalized
  probabilities; probabilities are recomputed from the grades on load and
  must match the stored values, which catches hand-edited or drifted files
* manifest JSON - ``{"entries": [{"transcript_path": ..., ...}]}``

Loads are pure. The profile store follows a single-writer contract:
concurrent reads are safe, appends must be serialized by the caller.
"""

from __future__ import annotations

import csv
import io
import json
from bisect import bisect_left
from dataclasses import dataclass
from datetime import date, timedelta
from pathlib import Path
from typing import Iterable, Sequence

from .errors import (
    DuplicateDate,
    NonPositivePrice,
    ParseError,
    SchemaViolation,
    ValidationError,
)
from .labeler import DecisionLabel, parse_label
from .schema import PROB_ATOL, FactorProfile, FactorSchema, default_schema, normalize_factor


def _parse_date(value, context: str) -> date:
    try:
        return date.fromisoformat(str(value))
    except ValueError as exc:
        raise SchemaViolation(f"{context}: bad ISO date {value!r}") from exc


# --- transcripts -----------------------------------------------------------


@dataclass(frozen=True)
class Participant:
    name: str
    affiliation: str = ""
    role: str = ""


@dataclass(frozen=True)
class Utterance:
    speaker: str
    text: str


@dataclass(frozen=True)
class QAPair:
    question: Utterance
    answer: Utterance


@dataclass(frozen=True)
class TranscriptRecord:
    ticker: str
    announcement_date: date
    sector: str | None
    participants: tuple[Participant, ...]
    prepared_remarks: tuple[Utterance, ...]
    qa_pairs: tuple[QAPair, ...]

    def __post_init__(self):
        if not self.ticker.strip():
            raise SchemaViolation("transcript ticker must be non-empty")
        if not self.prepared_remarks:
            raise SchemaViolation("transcript prepared_remarks must be non-empty")


def _utterance(data, context: str) -> Utterance:
    if not isinstance(data, dict) or "speaker" not in data or "text" not in data:
        raise SchemaViolation(f"{context}: expected an object with speaker and text")
    return Utterance(speaker=str(data["speaker"]), text=str(data["text"]))


def load_transcript(path: str | Path) -> TranscriptRecord:
    """Load one earnings-call transcript JSON document."""
    raw = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise SchemaViolation(f"{path}: transcript document must be a JSON object")
    for fieldname in ("ticker", "announcement_date", "prepared_remarks"):
        if fieldname not in data:
            raise SchemaViolation(f"{path}: missing required field {fieldname!r}")
    sector = data.get("sector")
    participants = tuple(
        Participant(
            name=str(p.get("name", "")),
            affiliation=str(p.get("affiliation", "")),
            role=str(p.get("role", "")),
        )
        for p in data.get("participants", [])
    )
    remarks = tuple(
        _utterance(u, f"{path}: prepared_remarks[{i}]")
        for i, u in enumerate(data["prepared_remarks"])
    )
    qa_pairs = []
    for i, pair in enumerate(data.get("qa_pairs", [])):
        if not isinstance(pair, dict) or "question" not in pair or "answer" not in pair:
            raise SchemaViolation(f"{path}: qa_pairs[{i}] needs question and answer")
        qa_pairs.append(
            QAPair(
                question=_utterance(pair["question"], f"{path}: qa_pairs[{i}].question"),
                answer=_utterance(pair["answer"], f"{path}: qa_pairs[{i}].answer"),
            )
        )
    return TranscriptRecord(
        ticker=str(data["ticker"]).strip().upper(),
        announcement_date=_parse_date(data["announcement_date"], str(path)),
        sector=str(sector) if sector is not None else None,
        participants=participants,
        prepared_remarks=remarks,
        qa_pairs=tuple(qa_pairs),
    )


def save_transcript(record: TranscriptRecord, path: str | Path) -> None:
    doc = {
        "ticker": record.ticker,
        "announcement_date": record.announcement_date.isoformat(),
        "participants": [
            {"name": p.name, "affiliation": p.affiliation, "role": p.role}
            for p in record.participants
        ],
        "prepared_remarks": [
            {"speaker": u.speaker, "text": u.text} for u in record.prepared_remarks
        ],
        "qa_pairs": [
            {
                "question": {"speaker": q.question.speaker, "text": q.question.text},
                "answer": {"speaker": q.answer.speaker, "text": q.answer.text},
            }
            for q in record.qa_pairs
        ],
    }
    if record.sector is not None:
        doc["sector"] = record.sector
    Path(path).write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n", "utf-8")


# --- price and financial series ---------------------------------------------


@dataclass(frozen=True)
class PriceSeries:
    ticker: str
    dates: tuple[date, ...]
    closes: tuple[float, ...]

    def __post_init__(self):
        if len(self.dates) != len(self.closes):
            raise ValidationError("dates and closes must have equal length")
        for i in range(1, len(self.dates)):
            if self.dates[i] <= self.dates[i - 1]:
                raise DuplicateDate(
                    f"price dates must be strictly increasing at {self.dates[i]}"
                )
        for d, c in zip(self.dates, self.closes):
            if not c > 0:
                raise NonPositivePrice(f"close on {d} is {c!r}")

    def first_on_or_after(self, day: date) -> int | None:
        """Index of the first trading date >= day, or None."""
        idx = bisect_left(self.dates, day)
        return idx if idx < len(self.dates) else None

    def truncated(self, last_day: date) -> "PriceSeries":
        """Series restricted to dates <= last_day."""
        keep = bisect_left(self.dates, last_day + timedelta(days=1))
        return PriceSeries(self.ticker, self.dates[:keep], self.closes[:keep])


def _read_csv_rows(path: str | Path, expected_header: Sequence[str]) -> list[list[str]]:
    text = Path(path).read_text(encoding="utf-8")
    reader = csv.reader(io.StringIO(text))
    rows = [row for row in reader if row and any(cell.strip() for cell in row)]
    if not rows:
        raise ParseError(f"{path}: empty CSV")
    header = [cell.strip().lower() for cell in rows[0]]
    if header != list(expected_header):
        raise ParseError(
            f"{path}: expected header {','.join(expected_header)!r}, got {rows[0]!r}"
        )
    return rows[1:]


def _parse_float(value: str, context: str) -> float:
    try:
        return float(value)
    except ValueError as exc:
        raise ParseError(f"{context}: bad number {value!r}") from exc


def _sorted_dated(
    rows: Iterable[tuple[date, tuple[float, ...]]], context: str
) -> list[tuple[date, tuple[float, ...]]]:
    out = sorted(rows, key=lambda r: r[0])
    for i in range(1, len(out)):
        if out[i][0] == out[i - 1][0]:
            raise DuplicateDate(f"{context}: date {out[i][0]} appears twice")
    return out


def load_prices(path: str | Path, ticker: str = "") -> PriceSeries:
    """Load a ``date,close`` CSV into a sorted, validated price series."""
    rows = []
    for i, row in enumerate(_read_csv_rows(path, ("date", "close")), start=2):
        if len(row) < 2:
            raise ParseError(f"{path}: line {i}: expected 2 columns")
        try:
            day = date.fromisoformat(row[0].strip())
        except ValueError as exc:
            raise ParseError(f"{path}: line {i}: bad date {row[0]!r}") from exc
        close = _parse_float(row[1].strip(), f"{path}: line {i}")
        if not close > 0:
            raise NonPositivePrice(f"{path}: line {i}: close {close!r} must be > 0")
        rows.append((day, (close,)))
    ordered = _sorted_dated(rows, str(path))
    return PriceSeries(
        ticker=ticker,
        dates=tuple(d for d, _ in ordered),
        closes=tuple(v[0] for _, v in ordered),
    )


def save_prices(series: PriceSeries, path: str | Path) -> None:
    lines = ["date,close"]
    lines += [f"{d.isoformat()},{c!r}" for d, c in zip(series.dates, series.closes)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class FinancialHistory:
    ticker: str
    eps: tuple[tuple[date, float], ...]
    revenue: tuple[tuple[date, float], ...]

    def __post_init__(self):
        for name, series in (("eps", self.eps), ("revenue", self.revenue)):
            for i in range(1, len(series)):
                if series[i][0] <= series[i - 1][0]:
                    raise DuplicateDate(
                        f"{name} dates must be strictly increasing at {series[i][0]}"
                    )


def load_financials(path: str | Path, ticker: str = "") -> FinancialHistory:
    """Load a ``date,eps,revenue`` CSV into per-metric series."""
    rows = []
    for i, row in enumerate(_read_csv_rows(path, ("date", "eps", "revenue")), start=2):
        if len(row) < 3:
            raise ParseError(f"{path}: line {i}: expected 3 columns")
        try:
            day = date.fromisoformat(row[0].strip())
        except ValueError as exc:
            raise ParseError(f"{path}: line {i}: bad date {row[0]!r}") from exc
        eps = _parse_float(row[1].strip(), f"{path}: line {i}")
        revenue = _parse_float(row[2].strip(), f"{path}: line {i}")
        rows.append((day, (eps, revenue)))
    ordered = _sorted_dated(rows, str(path))
    return FinancialHistory(
        ticker=ticker,
        eps=tuple((d, v[0]) for d, v in ordered),
        revenue=tuple((d, v[1]) for d, v in ordered),
    )


def save_financials(history: FinancialHistory, path: str | Path) -> None:
    by_date: dict[date, list[float | None]] = {}
    for d, v in history.eps:
        by_date.setdefault(d, [None, None])[0] = v
    for d, v in history.revenue:
        by_date.setdefault(d, [None, None])[1] = v
    lines = ["date,eps,revenue"]
    for d in sorted(by_date):
        eps, revenue = by_date[d]
        lines.append(f"{d.isoformat()},{eps!r},{revenue!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# --- profile store -----------------------------------------------------------


@dataclass(frozen=True)
class ProfileRecord:
    """One stored profile plus the corpus metadata the pipeline needs."""

    profile_id: str
    ticker: str
    date: date
    profile: FactorProfile
    label: DecisionLabel | None = None
    sector: str | None = None

    def __post_init__(self):
        if not self.profile_id.strip():
            raise ValidationError("profile_id must be non-empty")


def _record_to_dict(record: ProfileRecord) -> dict:
    if record.profile.grades is None:
        raise ValidationError(
            f"profile {record.profile_id!r} has no raw grades; the store requires them"
        )
    doc = {
        "profile_id": record.profile_id,
        "ticker": record.ticker,
        "date": record.date.isoformat(),
        "summaries": list(record.profile.summaries),
        "grades": [list(row) for row in record.profile.grades],
        "probabilities": [list(row) for row in record.profile.probabilities],
    }
    if record.sector is not None:
        doc["sector"] = record.sector
    if record.label is not None:
        doc["label"] = record.label.value
    return doc


def profile_record_line(record: ProfileRecord) -> str:
    return json.dumps(_record_to_dict(record), ensure_ascii=False)


def save_profiles(records: Iterable[ProfileRecord], path: str | Path) -> None:
    lines = [profile_record_line(r) for r in records]
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def append_profiles(records: Iterable[ProfileRecord], path: str | Path) -> None:
    """Append to an existing store (single writer at a time)."""
    with open(path, "a", encoding="utf-8") as handle:
        for record in records:
            handle.write(profile_record_line(record) + "\n")


def _record_from_dict(data: dict, schema: FactorSchema, context: str) -> ProfileRecord:
    try:
        grades = [[int(v) for v in row] for row in data["grades"]]
        probabilities = [[float(v) for v in row] for row in data["probabilities"]]
        summaries = [str(s) for s in data.get("summaries", [])]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"{context}: malformed profile line ({exc})") from exc
    if len(grades) != schema.n or len(probabilities) != schema.n:
        raise ValidationError(f"{context}: profile does not match the schema arity")
    for factor, grade_row, prob_row in zip(schema.factors, grades, probabilities):
        if len(grade_row) != factor.arity or len(prob_row) != factor.arity:
            raise ValidationError(f"{context}: factor {factor.name!r} arity mismatch")
        recomputed = normalize_factor(grade_row, arity=factor.arity)
        drift = max(abs(a - b) for a, b in zip(recomputed, prob_row))
        if drift > PROB_ATOL:
            raise ValidationError(
                f"{context}: stored probabilities drift {drift:.3e} from the grades "
                f"for factor {factor.name!r}"
            )
    profile = FactorProfile(
        schema=schema,
        probabilities=tuple(tuple(row) for row in probabilities),
        summaries=tuple(summaries) if summaries else (),
        grades=tuple(tuple(row) for row in grades),
    )
    label = data.get("label")
    return ProfileRecord(
        profile_id=str(data["profile_id"]),
        ticker=str(data.get("ticker", "")),
        date=_parse_date(data["date"], context),
        profile=profile,
        label=parse_label(label) if label is not None else None,
        sector=str(data["sector"]) if data.get("sector") is not None else None,
    )


def load_profiles(
    path: str | Path, schema: FactorSchema | None = None
) -> list[ProfileRecord]:
    """Load a JSONL profile store, re-validating every line against the schema."""
    schema = schema or default_schema()
    records = []
    seen_ids = set()
    text = Path(path).read_text(encoding="utf-8")
    for i, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: line {i}: not JSON ({exc.msg})") from exc
        if not isinstance(data, dict) or "profile_id" not in data:
            raise ValidationError(f"{path}: line {i}: missing profile_id")
        record = _record_from_dict(data, schema, f"{path}: line {i}")
        if record.profile_id in seen_ids:
            raise ValidationError(
                f"{path}: line {i}: duplicate profile_id {record.profile_id!r}"
            )
        seen_ids.add(record.profile_id)
        records.append(record)
    return records


# --- dataset manifest -------------------------------------------------------


@dataclass(frozen=True)
class ManifestEntry:
    transcript_path: Path
    prices_path: Path
    financials_path: Path | None = None
    profile_id: str | None = None
    label: DecisionLabel | None = None


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple[ManifestEntry, ...]


def load_manifest(path: str | Path) -> DatasetManifest:
    """Load a manifest JSON; relative paths resolve against the manifest's directory."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict) or not isinstance(data.get("entries"), list):
        raise SchemaViolation(f"{path}: manifest must be an object with an entries list")
    base = path.parent
    entries = []
    seen_ids = set()
    for i, raw in enumerate(data["entries"]):
        context = f"{path}: entries[{i}]"
        if not isinstance(raw, dict):
            raise SchemaViolation(f"{context}: must be an object")
        for required in ("transcript_path", "prices_path"):
            if required not in raw:
                raise SchemaViolation(f"{context}: missing {required!r}")

        def resolve(key: str) -> Path | None:
            value = raw.get(key)
            if value is None:
                return None
            resolved = (base / str(value)).resolve()
            if not resolved.exists():
                raise SchemaViolation(f"{context}: {key} {value!r} does not exist")
            return resolved

        profile_id = raw.get("profile_id")
        if profile_id is not None:
            if profile_id in seen_ids:
                raise ValidationError(f"{context}: duplicate profile_id {profile_id!r}")
            seen_ids.add(profile_id)
        label = raw.get("label")
        entries.append(
            ManifestEntry(
                transcript_path=resolve("transcript_path"),
                prices_path=resolve("prices_path"),
                financials_path=resolve("financials_path"),
                profile_id=str(profile_id) if profile_id is not None else None,
                label=parse_label(label) if label is not None else None,
            )
        )
    return DatasetManifest(entries=tuple(entries))
