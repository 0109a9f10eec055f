"""Command-line entry point: the pipeline as composable subcommands.

Every subcommand reads and writes the formats declared by the library
modules (transcript JSON, price/financials CSV, profile JSONL, model JSON,
prediction JSONL) and is deterministic given its inputs and seeds. Outputs
go to --out or stdout; diagnostics go to stderr. Exit codes: 0 success,
1 user error (bad flags, bad files, failed validation), 2 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from pathlib import Path

from . import analogy, btmodel, decide, evalx, extractor, ingest, labeler, schema as schema_mod
from .errors import DefineError, ValidationError
from .labeler import class_distribution, parse_label

PROG = "define"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 instead of argparse's 2
        raise _UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


# --- config -----------------------------------------------------------------


_CONFIG_DEFAULTS = {
    "schema": None,  # path to a schema JSON; default taxonomy otherwise
    "fixtures": None,
    "mode": "fixture",
    "endpoint": "https://api.openai.com/v1/chat/completions",
    "model_name": "gpt-4o-2024-08-06",
    "timeout": 60.0,
    "max_retries": 3,
    "concurrency": 4,
    "temperature": 0.0,
    "seed": 0,
    "regime": "cross-sector",
    "cap": None,
    "k": 5,
    "horizon_days": 30,
}


def _load_config(path: str | None) -> dict:
    config = dict(_CONFIG_DEFAULTS)
    if path:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: config is not JSON ({exc.msg})")
        unknown = set(data) - set(config)
        if unknown:
            raise ValidationError(f"{path}: unknown config keys {sorted(unknown)}")
        config.update(data)
    return config


def _setting(args, config: dict, key: str, attr: str | None = None):
    """Flag value if given, else config file value, else default."""
    value = getattr(args, attr or key, None)
    return value if value is not None else config[key]


def _schema_from(args, config) -> schema_mod.FactorSchema:
    path = _setting(args, config, "schema", attr="schema_path")
    return schema_mod.load_schema(path) if path else schema_mod.default_schema()


def _client_config(args, config) -> extractor.ClientConfig:
    return extractor.ClientConfig(
        endpoint=_setting(args, config, "endpoint"),
        model=_setting(args, config, "model_name"),
        timeout=float(_setting(args, config, "timeout")),
        max_retries=int(_setting(args, config, "max_retries")),
        concurrency=int(_setting(args, config, "concurrency")),
        temperature=float(_setting(args, config, "temperature")),
        mode=_setting(args, config, "mode"),
        fixtures_dir=_setting(args, config, "fixtures"),
    )


# --- small I/O helpers ---------------------------------------------------------


def _write_text(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        Path(out).write_text(text, encoding="utf-8")


def _emit_json(obj, out: str | None) -> None:
    _write_text(json.dumps(obj, indent=2) + "\n", out)


def _emit_jsonl(rows, out: str | None) -> None:
    _write_text("".join(json.dumps(row, ensure_ascii=False) + "\n" for row in rows), out)


def _read_jsonl(path: str) -> list[dict]:
    text = sys.stdin.read() if path == "-" else Path(path).read_text(encoding="utf-8")
    rows = []
    for i, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rows.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: line {i}: not JSON ({exc.msg})")
    return rows


def _load_profile_records(path: str, schema) -> list[ingest.ProfileRecord]:
    if path == "-":
        import tempfile

        with tempfile.NamedTemporaryFile("w", suffix=".jsonl", delete=False) as tmp:
            tmp.write(sys.stdin.read())
            tmp_path = tmp.name
        try:
            return ingest.load_profiles(tmp_path, schema)
        finally:
            Path(tmp_path).unlink(missing_ok=True)
    return ingest.load_profiles(path, schema)


def _labels_by_id(path: str) -> dict[str, labeler.DecisionLabel]:
    out = {}
    for row in _read_jsonl(path):
        if "profile_id" not in row or "label" not in row:
            raise ValidationError(f"{path}: every line needs profile_id and label")
        out[str(row["profile_id"])] = parse_label(row["label"])
    return out


def _attach_labels(records, labels_path: str | None):
    if labels_path is None:
        return records
    by_id = _labels_by_id(labels_path)
    out = []
    for r in records:
        label = by_id.get(r.profile_id, r.label)
        out.append(
            ingest.ProfileRecord(
                profile_id=r.profile_id,
                ticker=r.ticker,
                date=r.date,
                profile=r.profile,
                label=label,
                sector=r.sector,
            )
        )
    return out


def _require_labeled(records, context: str):
    unlabeled = [r.profile_id for r in records if r.label is None]
    if unlabeled:
        raise ValidationError(
            f"{context}: profiles missing labels (e.g. {unlabeled[:3]}); "
            "pass --labels or embed labels in the profile store"
        )
    return records


# --- subcommand implementations ---------------------------------------------------


def _cmd_schema(args, config) -> int:
    sch = _schema_from(args, config)
    _emit_json(sch.to_json_dict(), args.out)
    return 0


def _cmd_ingest(args, config) -> int:
    manifest = ingest.load_manifest(args.manifest)
    transcripts, qa_counts, sectors, dates = [], [], set(), []
    for entry in manifest.entries:
        record = ingest.load_transcript(entry.transcript_path)
        ingest.load_prices(entry.prices_path, ticker=record.ticker)
        if entry.financials_path is not None:
            ingest.load_financials(entry.financials_path, ticker=record.ticker)
        transcripts.append(record)
        qa_counts.append(len(record.qa_pairs))
        if record.sector:
            sectors.add(record.sector)
        dates.append(record.announcement_date)
    stats = {
        "transcripts": len(transcripts),
        "tickers": len({t.ticker for t in transcripts}),
        "sectors": sorted(sectors),
        "avg_qa_pairs": (sum(qa_counts) / len(qa_counts)) if qa_counts else 0.0,
        "date_min": min(dates).isoformat() if dates else None,
        "date_max": max(dates).isoformat() if dates else None,
    }
    _emit_json(stats, args.out)
    return 0


def _entry_identity(entry: ingest.ManifestEntry) -> tuple[ingest.TranscriptRecord, str]:
    record = ingest.load_transcript(entry.transcript_path)
    profile_id = entry.profile_id or (
        f"{record.ticker}-{record.announcement_date.isoformat()}"
    )
    return record, profile_id


def _cmd_label(args, config) -> int:
    manifest = ingest.load_manifest(args.manifest)
    horizon = int(_setting(args, config, "horizon_days", attr="horizon"))
    rows = []
    for entry in manifest.entries:
        record, profile_id = _entry_identity(entry)
        series = ingest.load_prices(entry.prices_path, ticker=record.ticker)
        labeled = labeler.label_from_prices(series, record.announcement_date, horizon)
        rows.append(
            {
                "profile_id": profile_id,
                "ticker": record.ticker,
                "label": labeled.label.value,
                "return_pct": labeled.return_pct,
                "base_date": labeled.base_date.isoformat(),
                "horizon_date": labeled.horizon_date.isoformat(),
            }
        )
    _emit_jsonl(rows, args.out)
    return 0


def _cmd_extract(args, config) -> int:
    sch = _schema_from(args, config)
    manifest = ingest.load_manifest(args.manifest)
    client_config = _client_config(args, config)
    client = extractor.make_client(client_config)
    jobs = []
    for entry in manifest.entries:
        record, profile_id = _entry_identity(entry)
        prices = ingest.load_prices(entry.prices_path, ticker=record.ticker)
        financials = (
            ingest.load_financials(entry.financials_path, ticker=record.ticker)
            if entry.financials_path is not None
            else None
        )
        jobs.append(
            extractor.ExtractJob(
                profile_id=profile_id,
                transcript=record,
                prices=prices,
                financials=financials,
                label=entry.label,
            )
        )
    records = extractor.extract_many(client, jobs, schema=sch, max_workers=args.workers)
    lines = [ingest.profile_record_line(r) for r in records]
    _write_text("".join(line + "\n" for line in lines), args.out)
    print(f"extracted {len(records)} profiles ({client_config.mode} mode)", file=sys.stderr)
    return 0


def _cmd_pairs(args, config) -> int:
    sch = _schema_from(args, config)
    records = _attach_labels(_load_profile_records(args.profiles, sch), args.labels)
    records = [r for r in records if r.label is not None]
    pairs = btmodel.preference_pairs(
        records,
        regime=_setting(args, config, "regime"),
        seed=int(_setting(args, config, "seed")),
        cap=_setting(args, config, "cap"),
    )
    _emit_jsonl(
        [
            {"winner": p.winner_profile_id, "loser": p.loser_profile_id, "regime": p.regime}
            for p in pairs
        ],
        args.out,
    )
    print(f"emitted {len(pairs)} pairs", file=sys.stderr)
    return 0


def _cmd_fit(args, config) -> int:
    sch = _schema_from(args, config)
    records = _attach_labels(_load_profile_records(args.profiles, sch), args.labels)
    labeled = [r for r in records if r.label is not None]
    if not labeled:
        raise ValidationError("fit needs labeled profiles")
    regime = _setting(args, config, "regime")
    seed = int(_setting(args, config, "seed"))
    cap = _setting(args, config, "cap")
    if args.pairs:
        pair_rows = _read_jsonl(args.pairs)
        pairs = [
            btmodel.PreferencePair(str(r["winner"]), str(r["loser"]), r.get("regime", regime))
            for r in pair_rows
        ]
    else:
        pairs = btmodel.preference_pairs(labeled, regime=regime, seed=seed, cap=cap)
    if not pairs:
        raise ValidationError(f"no preference pairs under regime {regime!r}")
    profiles = {r.profile_id: r.profile for r in records}
    matrix = btmodel.accumulate(
        pairs, profiles, schema=sch, literal_diagonal=args.literal_diagonal
    )
    model = btmodel.fit(matrix, tol=args.tol, max_iter=args.max_iter, schema=sch)
    btmodel.save_model(model, args.out, regime=regime, seed=seed)
    print(
        f"fitted {sch.size} item strengths from {len(pairs)} pairs "
        f"in {model.iterations} sweeps",
        file=sys.stderr,
    )
    return 0


def _cmd_predict(args, config) -> int:
    sch = _schema_from(args, config)
    model = btmodel.load_model(args.model, sch)
    records = _load_profile_records(args.profiles, sch)
    scores = decide.score_records(records, model)
    if args.cutpoints:
        cuts = [float(v) for v in args.cutpoints.split(",")]
        assignment = {
            s.profile_id: decide.assign_by_threshold(s.score, cuts) for s in scores
        }
    elif args.counts_from:
        counts = class_distribution(_labels_by_id(args.counts_from).values())
        assignment = decide.assign_by_quantile(scores, counts)
    else:
        raise ValidationError("predict needs --counts-from or --cutpoints")
    _emit_jsonl(
        [
            {"profile_id": s.profile_id, "score": s.score,
             "label": assignment[s.profile_id].value}
            for s in scores
        ],
        args.out,
    )
    return 0


def _find_target(records, target_id: str):
    for record in records:
        if record.profile_id == target_id:
            return record
    raise ValidationError(f"target profile {target_id!r} not found in the corpus")


def _cmd_retrieve(args, config) -> int:
    sch = _schema_from(args, config)
    records = _attach_labels(_load_profile_records(args.corpus, sch), args.labels)
    target = _find_target(records, args.target)
    k = int(_setting(args, config, "k"))
    neighbors = analogy.retrieve(
        target.profile,
        records,
        k=k,
        target_id=target.profile_id,
        exclude_ticker=target.ticker if args.exclude_ticker else None,
    )
    _emit_json(
        {
            "target": target.profile_id,
            "k": k,
            "neighbors": [
                {
                    "profile_id": n.profile_id,
                    "divergence": n.divergence,
                    "label": n.label.value if n.label else None,
                }
                for n in neighbors
            ],
        },
        args.out,
    )
    return 0


def _cmd_decide_analogical(args, config) -> int:
    sch = _schema_from(args, config)
    records = _attach_labels(_load_profile_records(args.corpus, sch), args.labels)
    target = _find_target(records, args.target)
    k = int(_setting(args, config, "k"))
    neighbors = analogy.retrieve(
        target.profile,
        records,
        k=k,
        target_id=target.profile_id,
        exclude_ticker=target.ticker if args.exclude_ticker else None,
    )
    by_id = {r.profile_id: r for r in records}
    examples = []
    for neighbor in neighbors:
        record = by_id[neighbor.profile_id]
        if record.label is None:
            raise ValidationError(f"neighbor {record.profile_id!r} has no label")
        examples.append((record.profile, record.label))
    client = extractor.make_client(_client_config(args, config))
    decision = analogy.analogical_decision(
        client, target.profile, examples, target.ticker, target.date
    )
    _emit_json(
        {
            "profile_id": target.profile_id,
            "neighbor_ids": [n.profile_id for n in neighbors],
            "chosen_idx": decision.chosen_idx,
            "recommendation": decision.label.value,
            "justification": decision.justification,
        },
        args.out,
    )
    return 0


def _cmd_eval(args, config) -> int:
    preds = _labels_by_id(args.preds)
    golds = _labels_by_id(args.golds)
    report = evalx.evaluate(preds, golds)
    _emit_json(report.to_dict(), args.out)
    if args.confusion_csv:
        Path(args.confusion_csv).write_text(
            evalx.confusion_csv(report.confusion), encoding="utf-8"
        )
    return 0


def _parse_planted(value: str, sch) -> schema_mod.OutcomeId:
    if ":" not in value:
        raise ValidationError("--planted must be FACTOR:OUTCOME (names or indices)")
    factor_part, outcome_part = (part.strip() for part in value.split(":", 1))
    if factor_part.isdigit():
        index = int(factor_part)
        if not 0 <= index < sch.n:
            raise ValidationError(f"factor index {index} out of range [0, {sch.n})")
        factor = sch.factors[index]
    else:
        factor = sch.factor_by_name(factor_part)
    if outcome_part.isdigit():
        item = schema_mod.OutcomeId(factor.id, int(outcome_part))
        sch.flat_index(item)  # bounds check
        return item
    for j, outcome in enumerate(factor.outcomes):
        if schema_mod._normalize_token(outcome.name) == schema_mod._normalize_token(outcome_part):
            return schema_mod.OutcomeId(factor.id, j)
    raise ValidationError(f"factor {factor.name!r} has no outcome {outcome_part!r}")


def _cmd_synth(args, config) -> int:
    sch = _schema_from(args, config)
    spec = evalx.SynthSpec(
        seed=int(_setting(args, config, "seed")),
        size=args.n,
        planted=_parse_planted(args.planted, sch),
        noise=args.noise,
        grade_dist=args.grade_dist,
    )
    records = evalx.synth_corpus(spec, sch)
    lines = [ingest.profile_record_line(r) for r in records]
    _write_text("".join(line + "\n" for line in lines), args.out)
    print(
        f"generated {len(records)} profiles (seed {spec.seed}, noise {spec.noise})",
        file=sys.stderr,
    )
    return 0


def _cmd_report(args, config) -> int:
    produced = False
    if args.density_csv:
        sch = _schema_from(args, config)
        records = _attach_labels(_load_profile_records(args.profiles, sch), args.labels)
        _require_labeled(records, "density report")
        report = evalx.density_report(records)
        Path(args.density_csv).write_text(evalx.density_csv(report), encoding="utf-8")
        produced = True
    if args.agreement_out:
        if not (args.preds and args.nearest):
            raise ValidationError("agreement analysis needs --preds and --nearest")
        report = evalx.agreement_analysis(
            _labels_by_id(args.preds), _labels_by_id(args.nearest)
        )
        _emit_json(report.to_dict(), args.agreement_out)
        produced = True
    if args.top_factors:
        if not args.model:
            raise ValidationError("--top-factors needs --model")
        sch = _schema_from(args, config)
        model = btmodel.load_model(args.model, sch)
        ranked = btmodel.top_factors(model, min(args.top_factors, sch.size))
        _emit_json(
            [
                {"item": sch.item_label(item), "salience": salience}
                for item, salience in ranked
            ],
            args.out,
        )
        produced = True
    if not produced:
        raise ValidationError(
            "report: nothing to do (pass --density-csv, --agreement-out, or --top-factors)"
        )
    return 0


# --- parser wiring ------------------------------------------------------------


def _build_parser() -> _Parser:
    parser = _Parser(prog=PROG, description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND")

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text, parents=[], conflict_handler="resolve")
        p.set_defaults(func=func)
        p.add_argument("--config", default=None, help="JSON config file; flags override it")
        p.add_argument("--schema", dest="schema_path", default=None,
                       help="schema JSON path (default: built-in 15-factor taxonomy)")
        return p

    p = add("schema", _cmd_schema, "emit the factor schema as JSON")
    p.add_argument("--out", default=None)

    p = add("ingest", _cmd_ingest, "validate a dataset manifest and report stats")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", default=None)

    p = add("label", _cmd_label, "derive five-way labels from post-announcement prices")
    p.add_argument("--manifest", required=True)
    p.add_argument("--horizon", type=int, default=None, help="horizon in calendar days")
    p.add_argument("--out", default=None)

    p = add("extract", _cmd_extract, "extract factor profiles via the completion client")
    p.add_argument("--manifest", required=True)
    p.add_argument("--fixtures", dest="fixtures", default=None)
    p.add_argument("--mode", choices=("fixture", "live", "record"), default=None)
    p.add_argument("--endpoint", default=None)
    p.add_argument("--model-name", dest="model_name", default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None)

    p = add("pairs", _cmd_pairs, "emit label-ordered preference pairs")
    p.add_argument("--profiles", required=True)
    p.add_argument("--labels", default=None)
    p.add_argument("--regime", choices=btmodel.REGIMES, default=None)
    p.add_argument("--cap", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)

    p = add("fit", _cmd_fit, "fit item strengths from labeled profiles")
    p.add_argument("--profiles", required=True)
    p.add_argument("--labels", default=None)
    p.add_argument("--pairs", default=None, help="reuse pairs from a previous run")
    p.add_argument("--regime", choices=btmodel.REGIMES, default=None)
    p.add_argument("--cap", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", dest="max_iter", type=int, default=10000)
    p.add_argument("--literal-diagonal", action="store_true",
                   help="accumulate same-item products only (diagnostic; no ranking signal)")
    p.add_argument("--out", required=True)

    p = add("predict", _cmd_predict, "score profiles and assign labels")
    p.add_argument("--model", required=True)
    p.add_argument("--profiles", required=True)
    p.add_argument("--counts-from", dest="counts_from", default=None,
                   help="labels JSONL supplying the target class counts")
    p.add_argument("--cutpoints", default=None, help="four ascending comma-separated reals")
    p.add_argument("--out", default=None)

    p = add("retrieve", _cmd_retrieve, "retrieve the most analogous profiles")
    p.add_argument("--target", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--labels", default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--exclude-ticker", dest="exclude_ticker", action="store_true",
                   help="drop candidates that share the target's ticker")
    p.add_argument("--out", default=None)

    p = add("decide-analogical", _cmd_decide_analogical,
            "retrieve neighbors and ask the client for an analogical decision")
    p.add_argument("--target", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--labels", default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--exclude-ticker", dest="exclude_ticker", action="store_true")
    p.add_argument("--fixtures", dest="fixtures", default=None)
    p.add_argument("--mode", choices=("fixture", "live", "record"), default=None)
    p.add_argument("--endpoint", default=None)
    p.add_argument("--model-name", dest="model_name", default=None)
    p.add_argument("--out", default=None)

    p = add("eval", _cmd_eval, "score predictions against gold labels")
    p.add_argument("--preds", required=True)
    p.add_argument("--golds", required=True)
    p.add_argument("--confusion-csv", dest="confusion_csv", default=None)
    p.add_argument("--out", default=None)

    p = add("synth", _cmd_synth, "generate a planted-signal synthetic corpus")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--planted", required=True, help="FACTOR:OUTCOME (names or indices)")
    p.add_argument("--grade-dist", dest="grade_dist",
                   choices=("uniform", "extreme"), default="uniform")
    p.add_argument("--out", default=None)

    p = add("report", _cmd_report, "emit density CSV, agreement analysis, or top factors")
    p.add_argument("--profiles", default=None)
    p.add_argument("--labels", default=None)
    p.add_argument("--density-csv", dest="density_csv", default=None)
    p.add_argument("--preds", default=None)
    p.add_argument("--nearest", default=None)
    p.add_argument("--agreement-out", dest="agreement_out", default=None)
    p.add_argument("--model", default=None)
    p.add_argument("--top-factors", dest="top_factors", type=int, default=None,
                   help="rank the N most salient outcome items from --model")
    p.add_argument("--out", default=None)

    return parser


def run(argv=None) -> int:
    """Parse argv and run one subcommand; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    if getattr(args, "func", None) is None:
        parser.print_help(sys.stderr)
        return 1
    try:
        config = _load_config(args.config)
        return args.func(args, config)
    except (DefineError, OSError) as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 2


def main(argv=None) -> None:
    raise SystemExit(run(argv))


if __name__ == "__main__":
    main()
