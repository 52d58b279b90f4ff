"""
Main Pipeline Orchestrator

Runs the end-to-end flow: normalize tables, generate and refine step
programs, execute them, and evaluate the final answers.
"""

from pathlib import Path
from typing import Any, Dict, List, Optional

from loguru import logger

from .config import RunConfig
from .evaluation import (
    AnswerValue,
    evaluate_run,
    evaluate_with_corrections,
    evaluation_report,
    render_evaluation_markdown,
)
from .generation import LlmClient, RunLog, TrainingSetBuilder, create_client
from .schemas import ExampleOutcome, ExampleRecord, PredictionRecord, TrainingRecord
from .storage import (
    TableStore,
    atomic_write_text,
    load_answers,
    load_dataset,
    read_jsonl,
    write_json,
    write_jsonl,
)
from .table_core import TableError, serialize_for_prompt

CORRECT_STATUSES = ("first_pass_correct", "refined_correct")


class TableQAPipeline:
    """
    End-to-end step-program pipeline.

    Workflow:
    1. Load the dataset and normalize its tables
    2. Generate step programs (with error-guided refinement)
    3. Write the training set and run log
    4. Write predictions (last executed answer per example)
    5. Evaluate against the golds (and corrections, if any)
    """

    def __init__(self, config: RunConfig, client: Optional[LlmClient] = None):
        """
        Initialize the pipeline.

        Args:
            config: Run configuration
            client: Completion client; built from the config when omitted

        Raises:
            ConfigError: Inputs are missing or no client can be built
        """
        self.config = config
        self.config.validate_paths(require_client=client is None)
        self.config.setup_directories()

        self.client = client
        self._initialize_modules()

    def _initialize_modules(self) -> None:
        """Initialize all pipeline modules."""
        logger.info("Initializing pipeline modules")

        self.table_store = TableStore(self.config.tables_dir, self.config.normalization)
        if self.client is None:
            self.client = create_client(self.config)
        self.builder = TrainingSetBuilder(
            client=self.client,
            table_store=self.table_store,
            instruction=self.config.instruction,
            max_refine_rounds=self.config.max_refine_rounds,
            max_workers=self.config.max_workers,
        )

        logger.info("All modules initialized")

    @property
    def output_dir(self) -> Path:
        return self.config.output_dir

    def normalize_tables(self, examples: List[ExampleRecord]) -> int:
        """Write every normalized table in pipe format under ``tables/``."""
        written = 0
        for example in examples:
            try:
                table = self.table_store.get(example.table, example.id)
            except (OSError, TableError) as e:
                logger.warning(f"[{example.id}] table unavailable: {e}")
                continue
            atomic_write_text(
                self.output_dir / "tables" / f"{example.id}.table",
                serialize_for_prompt(table) + "\n",
            )
            written += 1
        return written

    def _previous_outcomes(self) -> Dict[str, ExampleOutcome]:
        path = self.output_dir / "outcomes.jsonl"
        if not self.config.resume or not path.is_file():
            return {}
        outcomes = {o.id: o for o in read_jsonl(path, ExampleOutcome)}
        logger.info(f"Resuming: {len(outcomes)} outcomes reused from {path}")
        return outcomes

    def generate(self, examples: List[ExampleRecord]) -> List[ExampleOutcome]:
        """Produce one outcome per example, reusing finished ones on resume."""
        previous = self._previous_outcomes()
        pending = [e for e in examples if e.id not in previous]
        fresh = {o.id: o for o in self.builder.build(pending).outcomes} if pending else {}
        return [previous.get(e.id) or fresh[e.id] for e in examples]

    @staticmethod
    def training_records(
        examples: List[ExampleRecord], outcomes: List[ExampleOutcome]
    ) -> List[TrainingRecord]:
        by_id = {e.id: e for e in examples}
        records = []
        for outcome in outcomes:
            if outcome.status not in CORRECT_STATUSES:
                continue
            example = by_id[outcome.id]
            records.append(
                TrainingRecord(
                    id=outcome.id,
                    question=example.question,
                    table=example.table,
                    program_text=outcome.program_text,
                    produced_by="first-pass" if outcome.status == "first_pass_correct" else "refined",
                    answer=outcome.final_values,
                )
            )
        return records

    @staticmethod
    def predictions(outcomes: List[ExampleOutcome]) -> List[PredictionRecord]:
        return [
            PredictionRecord(id=o.id, values=o.final_values)
            if o.final_values is not None
            else PredictionRecord(id=o.id, error=o.error or "no executed answer")
            for o in outcomes
        ]

    def evaluate(
        self, predictions: List[PredictionRecord], golds: Dict[str, AnswerValue]
    ) -> Dict[str, Any]:
        """Score predictions, applying the corrections overlay when configured."""
        preds = {
            p.id: None if p.values is None else AnswerValue.from_texts(p.values)
            for p in predictions
        }
        corrections = None
        if self.config.corrections_path is not None:
            overlay = load_answers(self.config.corrections_path)
            summary, corrections = evaluate_with_corrections(
                preds, golds, overlay, self.config.metric
            )
        else:
            summary = evaluate_run(preds, golds)
        return evaluation_report(summary, self.config.metric, corrections=corrections)

    def run(self) -> Dict[str, Any]:
        """
        Run the complete pipeline.

        Returns:
            Pipeline execution summary
        """
        logger.info("=" * 60)
        logger.info("Starting Step-Program TableQA Pipeline")
        logger.info("=" * 60)

        try:
            # Step 1: Load dataset and normalize tables
            logger.info("\n[Step 1/5] Loading dataset and normalizing tables...")
            examples = load_dataset(self.config.dataset_path)
            golds = {e.id: AnswerValue.from_texts(e.gold) for e in examples}
            tables = self.normalize_tables(examples)
            logger.info(f"✓ Normalized {tables} tables")

            # Step 2: Generate, execute and refine
            logger.info("\n[Step 2/5] Generating step programs...")
            outcomes = self.generate(examples)
            run_log = RunLog()
            for outcome in outcomes:
                run_log = run_log + RunLog.of_outcome(outcome)
            logger.info(f"✓ Processed {len(outcomes)} examples")

            # Step 3: Training set and run log
            logger.info("\n[Step 3/5] Writing training set...")
            records = self.training_records(examples, outcomes)
            write_jsonl(self.output_dir / "outcomes.jsonl", outcomes)
            write_jsonl(self.output_dir / "training_set.jsonl", records)
            write_json(self.output_dir / "run_log.json", run_log.to_record().model_dump())
            logger.info(f"✓ Wrote {len(records)} training records")

            # Step 4: Predictions
            logger.info("\n[Step 4/5] Writing predictions...")
            predictions = self.predictions(outcomes)
            write_jsonl(self.output_dir / "predictions.jsonl", predictions)
            logger.info(f"✓ Wrote {len(predictions)} predictions")

            # Step 5: Evaluate
            logger.info("\n[Step 5/5] Evaluating...")
            report = self.evaluate(predictions, golds)
            write_json(self.output_dir / "evaluation.json", report)
            atomic_write_text(self.output_dir / "evaluation.md", render_evaluation_markdown(report))
            run = report["run"]
            logger.info(f"✓ EM {run['em_rate']:.4f}, FM {run['fm_rate']:.4f}")

            summary = {
                "examples": len(examples),
                "tables_normalized": tables,
                "training_records": len(records),
                "run_log": run_log.to_record().model_dump(),
                "em_rate": run["em_rate"],
                "fm_rate": run["fm_rate"],
            }

            logger.info("\n" + "=" * 60)
            logger.info("Pipeline Execution Complete!")
            logger.info("=" * 60)
            logger.info(
                f"First-pass correct: {run_log.first_pass_correct}, "
                f"refined correct: {run_log.refined_correct}, "
                f"discarded trivial: {run_log.discarded_trivial}, failed: {run_log.failed}"
            )
            logger.info(f"\nOutput directory: {self.output_dir}")
            logger.info("=" * 60)

            return summary

        except Exception as e:
            logger.error(f"Pipeline failed: {e}")
            raise
