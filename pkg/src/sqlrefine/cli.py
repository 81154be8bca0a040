"""Command line entry point: ``sqlrefine {serialize,evaluate,compare}``.

Exit codes: 0 success, 1 configuration error, 2 data or environment error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from .analysis import ValueMode, component_diff, exact_set_match, parse_sql
from .backends import (
    DEFAULT_MAX_TOKENS,
    DEFAULT_STOP,
    DEFAULT_TEMPERATURE,
    Backend,
    EchoGoldBackend,
    HttpBackend,
    PerItemScriptBackend,
    RecordingBackend,
    ReplayBackend,
    ScriptedBackend,
)
from .dataset import TaskItem, database_path, load_dataset
from .errors import ConfigError, DataError, GenerationError, MissingDatabase, ParseFailure
from .evaluation import BACKEND_ERROR, ReportFormat, aggregate, render_report, score_item
from .executor import DEFAULT_TIMEOUT_MS, compare_results, execute_readonly
from .prompts import SchemaStyle, serialize_schema
from .refinement import (
    Decoding,
    FinalStatus,
    RefinementConfig,
    RefinementTrace,
    RefineOn,
    gold_has_order_by,
    run_pipeline,
    write_traces,
)
from .schema import DatabaseSchema, introspect_schema

logger = logging.getLogger("sqlrefine")

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 1, 2
BACKENDS = ("http", "replay", "echo-gold", "script")


@dataclass
class RunConfig:
    dataset: str
    db_root: str
    backend: str = "echo-gold"
    fixtures: Optional[str] = None
    script: Optional[str] = None
    record: Optional[str] = None
    endpoint: Optional[str] = None
    model: str = "llama-2-70b"
    field_path: str = "choices[0].text"
    temperature: float = DEFAULT_TEMPERATURE
    max_tokens: int = DEFAULT_MAX_TOKENS
    max_rounds: int = 3
    refine_on: str = "error"
    em_values: str = "ignore"
    style: str = "ddl"
    workers: int = 1
    timeout_ms: float = DEFAULT_TIMEOUT_MS
    out: str = "out"
    label: str = "run"

    def validate(self) -> None:
        if self.backend not in BACKENDS:
            raise ConfigError(f"unknown backend {self.backend!r}")
        if self.workers < 1:
            raise ConfigError("--workers must be >= 1")
        if self.max_rounds < 1:
            raise ConfigError("--max-rounds must be >= 1")
        if self.max_tokens < 1:
            raise ConfigError("--max-tokens must be >= 1")
        if self.temperature < 0:
            raise ConfigError("--temperature must be non-negative")
        if self.timeout_ms <= 0:
            raise ConfigError("--timeout-ms must be positive")
        for name, choices in (
            ("refine_on", ("error", "oracle")),
            ("em_values", ("exact", "ignore")),
            ("style", ("ddl", "compact")),
        ):
            if getattr(self, name) not in choices:
                raise ConfigError(f"--{name.replace('_', '-')} must be one of {choices}")
        if not Path(self.dataset).is_file():
            raise ConfigError(f"dataset file not found: {self.dataset}")
        if not Path(self.db_root).is_dir():
            raise ConfigError(f"database root not found: {self.db_root}")
        if self.backend == "replay" and not (self.fixtures and Path(self.fixtures).is_file()):
            raise ConfigError("--backend replay needs an existing --fixtures file")
        if self.backend == "script" and not (self.script and Path(self.script).is_file()):
            raise ConfigError("--backend script needs an existing --script file")
        if self.backend == "http" and not self.endpoint:
            raise ConfigError("--backend http needs --endpoint")

    def echo(self) -> dict:
        """Settings that affect results; worker count and output paths are omitted."""
        d = asdict(self)
        for key in ("workers", "out", "record", "db_root"):
            d.pop(key)
        # File names and a content digest keep reports portable across checkouts.
        d["dataset_sha256"] = hashlib.sha256(Path(self.dataset).read_bytes()).hexdigest()
        for key in ("dataset", "fixtures", "script"):
            if d[key] is not None:
                d[key] = Path(d[key]).name
        d["stop"] = list(DEFAULT_STOP)
        d["decoding_defaults"] = "harness defaults, chosen by this package"
        if self.refine_on == "oracle":
            d["diagnostic_only"] = True
        return d


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="sqlrefine", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    p = sub.add_parser("serialize", help="print a database schema as prompt text")
    p.add_argument("--db-root", required=True)
    p.add_argument("--db-id", required=True)
    p.add_argument("--style", choices=("ddl", "compact"), default="ddl")

    p = sub.add_parser("evaluate", help="run the pipeline over a dataset and score it")
    # Defaults are None so a --config file can fill gaps; RunConfig holds real defaults.
    p.add_argument("--config")
    p.add_argument("--dataset")
    p.add_argument("--db-root")
    p.add_argument("--backend", choices=BACKENDS)
    p.add_argument("--fixtures", help="replay fixture file (JSON Lines)")
    p.add_argument("--script", help="JSON file: list of completions, or {item_id: [...]}")
    p.add_argument("--record", help="append live completions to this fixture file")
    p.add_argument("--endpoint")
    p.add_argument("--model")
    p.add_argument("--field-path")
    p.add_argument("--temperature", type=float)
    p.add_argument("--max-tokens", type=int)
    p.add_argument("--max-rounds", type=int)
    p.add_argument("--refine-on", choices=("error", "oracle"))
    p.add_argument("--em-values", choices=("exact", "ignore"))
    p.add_argument("--style", choices=("ddl", "compact"))
    p.add_argument("--workers", type=int)
    p.add_argument("--timeout-ms", type=float)
    p.add_argument("--out", help="output directory")
    p.add_argument("--label", help="row label used in the markdown tables")

    p = sub.add_parser("compare", help="EM and EX verdicts for a pair of queries")
    p.add_argument("sql_a")
    p.add_argument("sql_b")
    p.add_argument("--db-root", required=True)
    p.add_argument("--db-id", required=True)
    p.add_argument("--em-values", choices=("exact", "ignore"), default="ignore")
    p.add_argument("--timeout-ms", type=float, default=DEFAULT_TIMEOUT_MS)
    return parser


_RUN_FIELDS = {f for f in RunConfig.__dataclass_fields__}


def resolve_run_config(args: argparse.Namespace) -> RunConfig:
    values: Dict[str, object] = {}
    if args.config:
        try:
            file_values = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(file_values, dict):
            raise ConfigError("config file must hold a JSON object")
        for key, value in file_values.items():
            name = key.lstrip("-").replace("-", "_")
            if name not in _RUN_FIELDS:
                raise ConfigError(f"unknown config key {key!r}")
            values[name] = value
    for name in _RUN_FIELDS:
        value = getattr(args, name, None)
        if value is not None:
            values[name] = value
    for required in ("dataset", "db_root"):
        if required not in values:
            raise ConfigError(f"--{required.replace('_', '-')} is required")
    try:
        config = RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    config.validate()
    return config


def make_backend(config: RunConfig) -> Backend:
    if config.backend == "echo-gold":
        backend: Backend = EchoGoldBackend()
    elif config.backend == "replay":
        backend = ReplayBackend(config.fixtures)
    elif config.backend == "script":
        script = json.loads(Path(config.script).read_text(encoding="utf-8"))
        if isinstance(script, dict):
            backend = PerItemScriptBackend(script)
        elif isinstance(script, list):
            backend = ScriptedBackend(script)
        else:
            raise ConfigError("script file must hold a list or an object")
    else:
        backend = HttpBackend(config.endpoint, model=config.model, field_path=config.field_path)
    if config.record:
        backend = RecordingBackend(backend, config.record)
    return backend


def evaluate(config: RunConfig) -> int:
    items = load_dataset(config.dataset, config.db_root)
    schemas: Dict[str, DatabaseSchema] = {}
    for db_id in sorted({it.db_id for it in items}):
        schemas[db_id] = introspect_schema(database_path(config.db_root, db_id), db_id)

    refinement = RefinementConfig(
        max_rounds=config.max_rounds,
        style=SchemaStyle(config.style),
        decoding=Decoding(config.temperature, config.max_tokens, DEFAULT_STOP),
        refine_on=RefineOn(config.refine_on),
        timeout_ms=config.timeout_ms,
    )
    backend = make_backend(config)
    value_mode = ValueMode(config.em_values)

    def work(item: TaskItem):
        db_path = database_path(config.db_root, item.db_id)
        schema = schemas[item.db_id]
        notes: List[str] = []
        try:
            trace = run_pipeline(item, schema, backend, refinement, db_path=db_path)
        except (GenerationError, ValueError) as exc:
            logger.warning("item %s: generation failed: %s", item.item_id, exc)
            trace = RefinementTrace(item.item_id, (), FinalStatus.EXHAUSTED, None)
            notes.append(BACKEND_ERROR)
        evaluation = score_item(
            trace, item, db_path, value_mode, schema, config.timeout_ms, extra_notes=notes
        )
        return trace, evaluation

    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        results = list(pool.map(work, items))

    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    write_traces([t for t, _ in results], out / "traces.jsonl")
    report = aggregate([e for _, e in results], config.echo())
    (out / "report.json").write_text(render_report(report, ReportFormat.JSON), encoding="utf-8")
    markdown = render_report(report, ReportFormat.MARKDOWN)
    (out / "report.md").write_text(markdown, encoding="utf-8")
    sys.stdout.write(markdown)
    return EXIT_OK


def _db_for(db_root: str, db_id: str) -> Path:
    path = database_path(db_root, db_id)
    if not path.is_file():
        raise MissingDatabase(db_id, path)
    return path


def serialize(args) -> int:
    path = _db_for(args.db_root, args.db_id)
    print(serialize_schema(introspect_schema(path, args.db_id), SchemaStyle(args.style)))
    return EXIT_OK


def compare(args) -> int:
    path = _db_for(args.db_root, args.db_id)
    schema = introspect_schema(path, args.db_id)
    mode = ValueMode(args.em_values)
    parsed = {}
    for side, sql in (("A", args.sql_a), ("B", args.sql_b)):
        try:
            parsed[side] = parse_sql(sql, schema, mode)
            print(f"{side}: parsed")
        except ParseFailure as exc:
            parsed[side] = None
            print(f"{side}: ParseFailure: {exc}")

    if parsed["A"] is not None and parsed["B"] is not None:
        diff = component_diff(parsed["A"], parsed["B"])
        if diff:
            print("component differences:")
            for name, (a, b) in diff.items():
                print(f"  {name}: A={a} B={b}")
        else:
            print("component differences: none")
        print(f"EM: {str(exact_set_match(parsed['A'], parsed['B'])).lower()}")
    else:
        print("EM: n/a")

    out_a = execute_readonly(path, args.sql_a, args.timeout_ms)
    out_b = execute_readonly(path, args.sql_b, args.timeout_ms)
    for side, o in (("A", out_a), ("B", out_b)):
        if o.ok:
            print(f"{side} execution: RESULT ({len(o.rows)} rows)")
        else:
            kind = o.error_kind.value if o.error_kind else o.kind.value
            print(f"{side} execution: {o.kind.value} {kind}: {o.message}")
    if out_a.ok and out_b.ok:
        ordered = gold_has_order_by(args.sql_b)
        print(f"EX: {str(compare_results(out_a, out_b, ordered)).lower()}")
    else:
        print("EX: n/a")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "serialize":
            return serialize(args)
        if args.command == "compare":
            return compare(args)
        return evaluate(resolve_run_config(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
