"""
Command-Line Sub-Commands

normalize, generate, execute, evaluate, select, report and pipeline.
Every command returns an exit code: 0 on success, 2 when the inputs or the
configuration are unusable. Per-example failures are written as data and
never change the exit code.
"""

import argparse
from pathlib import Path
from typing import Callable, Dict, List, Optional

from loguru import logger
from pydantic import ValidationError

from .config import ConfigError, RunConfig
from .evaluation import (
    AnswerValue,
    IdMismatchError,
    MissingGoldError,
    breakdown,
    check_same_ids,
    evaluate_run,
    evaluate_with_corrections,
    evaluation_report,
    render_evaluation_markdown,
)
from .generation import TrainingSetBuilder, audit_training_records, create_client
from .pipeline import TableQAPipeline
from .schemas import AnswerRecord, PredictionRecord, ProgramRecord, SchemaError
from .selector import (
    CandidatePair,
    build_selector_dataset,
    create_scorer,
    render_selection_markdown,
    select_batch,
    selection_error_report,
)
from .step_program import ExecutionError, ProgramParseError, execute, parse_program
from .storage import (
    TABLE_SUFFIXES,
    TableStore,
    atomic_write_text,
    load_answers,
    load_dataset,
    load_golds,
    load_predictions,
    read_json,
    read_jsonl,
    write_json,
    write_jsonl,
)
from .table_core import TableError, load_table, normalize_table, serialize_for_prompt

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

USAGE_ERRORS = (
    ConfigError,
    OSError,
    SchemaError,
    MissingGoldError,
    IdMismatchError,
    TableError,
    ValidationError,
)


def _nonnegative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser with one sub-parser per command."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, help="Path to configuration YAML file")
    common.add_argument("-v", "--verbose", action="store_true", help="Enable verbose logging")

    endpoint = argparse.ArgumentParser(add_help=False)
    endpoint.add_argument("--model", type=str, help="Model name (overrides TQA_LLM_MODEL)")
    endpoint.add_argument("--endpoint", type=str, help="Base URL (overrides TQA_LLM_BASE_URL)")
    endpoint.add_argument("--scripted-client", type=str, help="Replay replies from a JSONL script")

    parser = argparse.ArgumentParser(
        description="Step-program table question answering toolkit",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Run the whole flow from a config file
  python main.py pipeline --config config/default_config.yaml

  # Execute step programs
  python main.py execute --programs programs.jsonl --tables tables/ --out predictions.jsonl

  # Compare two runs with a corrections overlay
  python main.py evaluate --pred a.jsonl --pred b.jsonl --gold data.tsv --corrections fix.jsonl
        """,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("normalize", parents=[common], help="Normalize table files")
    p.add_argument("--tables", required=True, help="Directory of raw tables")
    p.add_argument("--out", required=True, help="Directory for normalized tables")

    p = sub.add_parser("generate", parents=[common, endpoint], help="Build a training set")
    p.add_argument("--dataset", help="Dataset TSV or JSONL")
    p.add_argument("--tables", help="Tables directory")
    p.add_argument("--out", help="Output directory")
    p.add_argument("--max-refine-rounds", type=_nonnegative_int)
    p.add_argument("--max-table-rows", type=_positive_int)
    p.add_argument("--workers", type=_positive_int)

    p = sub.add_parser("execute", parents=[common], help="Execute step programs")
    p.add_argument("--programs", required=True, help="JSONL of {id, program_text, table?}")
    p.add_argument("--tables", required=True, help="Tables directory")
    p.add_argument("--dataset", help="Dataset used to resolve table references by id")
    p.add_argument("--out", required=True, help="Output JSONL of {id, values | error}")

    p = sub.add_parser("evaluate", parents=[common], help="Score predictions")
    p.add_argument("--pred", action="append", required=True, help="Predictions (give twice to compare)")
    p.add_argument("--gold", required=True, help="Gold answers (dataset TSV/JSONL or {id, values})")
    p.add_argument("--corrections", help="Corrections overlay {id, values}")
    p.add_argument("--metric", choices=["em", "fm"], help="Primary metric (default fm)")
    p.add_argument("--out", default="evaluation.json", help="JSON report path (markdown beside it)")

    p = sub.add_parser("select", parents=[common, endpoint], help="Select between code and e2e answers")
    p.add_argument("--code", required=True, help="Executed predictions {id, values | error}")
    p.add_argument("--e2e", required=True, help="End-to-end answers {id, values, trace?}")
    p.add_argument("--dataset", required=True, help="Dataset with questions, tables and golds")
    p.add_argument("--tables", help="Tables directory (table context for the scorer)")
    p.add_argument("--gold", help="Gold answers, when not taken from the dataset")
    p.add_argument("--backend", choices=["heuristic", "prompted", "code", "e2e"])
    p.add_argument("--max-table-rows", type=_positive_int)
    p.add_argument("--workers", type=_positive_int)
    p.add_argument("--out", required=True, help="Output directory")

    p = sub.add_parser("report", parents=[common], help="Render a JSON report as markdown")
    p.add_argument("--input", required=True, help="evaluation.json or selection.json")
    p.add_argument("--out", help="Markdown path (default: beside the input)")

    p = sub.add_parser("pipeline", parents=[common, endpoint], help="Run the end-to-end pipeline")
    p.add_argument("--dataset", help="Dataset TSV or JSONL")
    p.add_argument("--tables", help="Tables directory")
    p.add_argument("--out", help="Output directory")
    p.add_argument("--max-refine-rounds", type=_nonnegative_int)
    p.add_argument("--metric", choices=["em", "fm"])
    p.add_argument("--corrections", help="Corrections overlay {id, values}")
    p.add_argument("--max-table-rows", type=_positive_int)
    p.add_argument("--workers", type=_positive_int)
    p.add_argument("--resume", action="store_true", help="Reuse finished outcomes")

    return parser


def load_run_config(args: argparse.Namespace) -> RunConfig:
    """Load the YAML config (if any), then apply command-line overrides."""
    config_path = getattr(args, "config", None)
    if config_path:
        logger.info(f"Loading configuration from {config_path}")
        config = RunConfig.from_yaml(config_path)
    else:
        config = RunConfig()

    def flag(name: str):
        return getattr(args, name, None)

    if flag("dataset"):
        config.dataset_path = Path(args.dataset)
    if flag("tables"):
        config.tables_dir = Path(args.tables)
    if flag("out") and args.command in ("generate", "pipeline"):
        config.output_dir = Path(args.out)
    if flag("corrections"):
        config.corrections_path = Path(args.corrections)
    if flag("scripted_client"):
        config.scripted_client = Path(args.scripted_client)
    if flag("max_refine_rounds") is not None:
        config.max_refine_rounds = args.max_refine_rounds
    if flag("metric"):
        config.metric = args.metric
    if flag("max_table_rows") is not None:
        config.instruction.max_table_rows = args.max_table_rows
        config.selector.max_table_rows = args.max_table_rows
    if flag("workers") is not None:
        config.max_workers = args.workers
    if flag("model"):
        config.llm.model = args.model
    if flag("endpoint"):
        config.llm.base_url = args.endpoint
    if flag("backend"):
        config.selector.backend = args.backend
    if flag("resume"):
        config.resume = True
    return config


# ============================================================================
# Commands
# ============================================================================

def cmd_normalize(args: argparse.Namespace) -> int:
    config = load_run_config(args)
    tables_dir, out_dir = Path(args.tables), Path(args.out)
    if not tables_dir.is_dir():
        raise ConfigError(f"Tables directory not found: {tables_dir}")

    paths = sorted(
        p for p in tables_dir.rglob("*")
        if p.is_file() and p.suffix.lower() in TABLE_SUFFIXES
    )
    written = 0
    for path in paths:
        try:
            table = normalize_table(load_table(path), config.normalization)
        except TableError as e:
            logger.warning(f"Skipping {path}: {e}")
            continue
        target = (out_dir / path.relative_to(tables_dir)).with_suffix(".table")
        atomic_write_text(target, serialize_for_prompt(table) + "\n")
        written += 1

    logger.info(f"✓ Normalized {written} of {len(paths)} tables into {out_dir}")
    return EXIT_OK


def cmd_generate(args: argparse.Namespace) -> int:
    config = load_run_config(args)
    config.validate_paths(require_client=True)
    config.setup_directories()

    examples = load_dataset(config.dataset_path)
    store = TableStore(config.tables_dir, config.normalization)
    builder = TrainingSetBuilder(
        client=create_client(config),
        table_store=store,
        instruction=config.instruction,
        max_refine_rounds=config.max_refine_rounds,
        max_workers=config.max_workers,
    )
    result = builder.build(examples)

    write_jsonl(config.output_dir / "training_set.jsonl", result.records)
    write_jsonl(config.output_dir / "outcomes.jsonl", result.outcomes)
    write_json(config.output_dir / "run_log.json", result.run_log.to_record().model_dump())

    golds = {e.id: AnswerValue.from_texts(e.gold) for e in examples}
    for violation in audit_training_records(result.records, store, golds):
        logger.warning(violation)

    logger.info(f"✓ Training set written to {config.output_dir}")
    return EXIT_OK


def cmd_execute(args: argparse.Namespace) -> int:
    config = load_run_config(args)
    tables_dir = Path(args.tables)
    if not tables_dir.is_dir():
        raise ConfigError(f"Tables directory not found: {tables_dir}")

    programs = read_jsonl(Path(args.programs), ProgramRecord)
    table_refs: Dict[str, str] = {}
    if args.dataset:
        table_refs = {e.id: e.table for e in load_dataset(Path(args.dataset))}
    store = TableStore(tables_dir, config.normalization)

    outputs: List[PredictionRecord] = []
    for record in programs:
        try:
            program = parse_program(record.program_text)
            table = store.get(record.table or table_refs.get(record.id), record.id)
            result = execute(program, table)
            outputs.append(PredictionRecord(id=record.id, values=result.answer.texts))
        except (ProgramParseError, ExecutionError, TableError, FileNotFoundError) as e:
            logger.warning(f"[{record.id}] {e}")
            outputs.append(PredictionRecord(id=record.id, error=str(e)))

    write_jsonl(Path(args.out), outputs)
    errors = sum(1 for o in outputs if o.error is not None)
    logger.info(f"✓ Executed {len(outputs)} programs ({errors} errors) -> {args.out}")
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = load_run_config(args)
    if len(args.pred) > 2:
        raise ConfigError("evaluate compares at most two prediction files")

    golds = load_golds(Path(args.gold))
    overlay = load_answers(config.corrections_path) if config.corrections_path else None

    def score(path: str):
        preds = load_predictions(Path(path))
        if overlay is None:
            return evaluate_run(preds, golds), None
        return evaluate_with_corrections(preds, golds, overlay, config.metric)

    summary, corrections = score(args.pred[0])
    second, cells = None, None
    if len(args.pred) == 2:
        second, _ = score(args.pred[1])
        cells = breakdown(summary.records, second.records, config.metric)

    report = evaluation_report(summary, config.metric, cells, corrections, second)
    out = Path(args.out)
    write_json(out, report)
    atomic_write_text(out.with_suffix(".md"), render_evaluation_markdown(report))
    logger.info(f"✓ EM {summary.em_rate:.4f}, FM {summary.fm_rate:.4f}; report at {out}")
    return EXIT_OK


def cmd_select(args: argparse.Namespace) -> int:
    config = load_run_config(args)
    examples = {e.id: e for e in load_dataset(Path(args.dataset))}
    golds = (
        load_golds(Path(args.gold)) if args.gold
        else {i: AnswerValue.from_texts(e.gold) for i, e in examples.items()}
    )
    code = load_predictions(Path(args.code))
    e2e_records = {r.id: r for r in read_jsonl(Path(args.e2e), AnswerRecord)}
    check_same_ids(list(code), list(e2e_records))

    pairs = []
    for example_id, code_answer in code.items():
        example = examples.get(example_id)
        if example is None:
            raise MissingGoldError(example_id)
        e2e = e2e_records[example_id]
        pairs.append(
            CandidatePair(
                id=example_id,
                question=example.question,
                table=example.table,
                code_answer=code_answer if code_answer is not None else AnswerValue(),
                e2e_answer=AnswerValue.from_texts(e2e.values),
                e2e_trace=e2e.trace,
            )
        )

    client = create_client(config) if config.selector.backend == "prompted" else None
    scorer = create_scorer(config.selector, client)
    store = None
    if args.tables:
        if not Path(args.tables).is_dir():
            raise ConfigError(f"Tables directory not found: {args.tables}")
        store = TableStore(Path(args.tables), config.normalization)

    selections = select_batch(scorer, pairs, store, config.max_workers)
    dataset = build_selector_dataset(pairs, golds)
    stats = selection_error_report(selections, pairs, golds)

    out = Path(args.out)
    write_jsonl(out / "selections.jsonl", [s.to_record() for s in selections])
    write_jsonl(out / "selector_dataset.jsonl", dataset.examples)
    report = stats.to_dict()
    report["selector_dataset"] = {"kept": len(dataset.examples), "dropped": dataset.dropped}
    write_json(out / "selection.json", report)
    atomic_write_text(out / "selection.md", render_selection_markdown(report))
    logger.info(f"✓ Final FM {stats.final_fm:.4f}; outputs in {out}")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    source = Path(args.input)
    report = read_json(source)
    renderers: Dict[str, Callable[[dict], str]] = {
        "evaluation": render_evaluation_markdown,
        "selection": render_selection_markdown,
    }
    kind = report.get("kind") if isinstance(report, dict) else None
    if kind not in renderers:
        raise SchemaError(f"{source}: unknown report kind {kind!r}")
    try:
        markdown = renderers[kind](report)
    except (KeyError, TypeError) as e:
        raise SchemaError(f"{source}: malformed {kind} report: {e}") from e
    out = Path(args.out) if args.out else source.with_suffix(".md")
    atomic_write_text(out, markdown)
    logger.info(f"✓ Report written to {out}")
    return EXIT_OK


def cmd_pipeline(args: argparse.Namespace) -> int:
    config = load_run_config(args)
    TableQAPipeline(config).run()
    return EXIT_OK


COMMANDS: Dict[str, Callable[[argparse.Namespace], int]] = {
    "normalize": cmd_normalize,
    "generate": cmd_generate,
    "execute": cmd_execute,
    "evaluate": cmd_evaluate,
    "select": cmd_select,
    "report": cmd_report,
    "pipeline": cmd_pipeline,
}


def dispatch(args: argparse.Namespace) -> int:
    """Run the selected command and map failures to exit codes."""
    try:
        return COMMANDS[args.command](args)
    except USAGE_ERRORS as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_USAGE
    except KeyboardInterrupt:
        logger.warning("Interrupted by user")
        return EXIT_FAILURE
    except Exception as e:
        logger.error(f"{args.command} failed: {e}")
        if getattr(args, "verbose", False):
            logger.exception("Full traceback:")
        return EXIT_FAILURE


def run(argv: Optional[List[str]] = None) -> int:
    """Parse ``argv`` and run the command (no logging setup)."""
    return dispatch(build_parser().parse_args(argv))
