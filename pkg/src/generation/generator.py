"""
Program Generation and Training-Set Construction

Workflow per example:
1. Generate a step program from the instruction
2. Execute it on the normalized table
3. If the answer misses the gold, refine with the failure evidence
4. Keep verified programs; discard programs that only copy the gold
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple, Union
import re

from loguru import logger
from tqdm import tqdm

from ..config import InstructionConfig
from ..evaluation import AnswerValue, fuzzy_match
from ..schemas import AttemptRecord, ExampleOutcome, ExampleRecord, RunLogRecord, TrainingRecord
from ..step_program import (
    DERIVING_OPERATIONS,
    AnswerColumn,
    AnswerScalar,
    ExecutionError,
    MissingPlanError,
    ProgramParseError,
    StepProgram,
    execute,
    parse_program,
    render_program,
)
from ..storage import TableStore
from ..table_core import Table, TableError
from .llm_client import LlmClient, TransportError
from .prompts import RefinementContext, build_instruction, build_refinement_prompt

_FENCE_RE = re.compile(r"```[A-Za-z0-9_+-]*[ \t]*\n(.*?)```", re.DOTALL)


class GenerationErrorKind(str, Enum):
    TRANSPORT = "Transport"
    UNPARSEABLE = "Unparseable"
    MISSING_PLAN = "MissingPlan"


class GenerationError(RuntimeError):
    """A completion could not be turned into a step program."""

    def __init__(self, kind: GenerationErrorKind, message: str, raw_text: Optional[str] = None):
        self.kind = kind
        self.raw_text = raw_text
        super().__init__(f"{kind.value}: {message}")


@dataclass(frozen=True)
class GeneratedProgram:
    program: StepProgram
    raw_text: str


def extract_program_text(raw: str) -> str:
    """Unwrap the first markdown code fence, if the completion has one."""
    match = _FENCE_RE.search(raw)
    return match.group(1) if match else raw


def parse_completion(raw: str) -> GeneratedProgram:
    try:
        return GeneratedProgram(parse_program(extract_program_text(raw)), raw)
    except MissingPlanError as e:
        raise GenerationError(GenerationErrorKind.MISSING_PLAN, str(e), raw) from e
    except ProgramParseError as e:
        raise GenerationError(GenerationErrorKind.UNPARSEABLE, str(e), raw) from e


def _complete(client: LlmClient, prompt: str) -> str:
    try:
        return client.complete(prompt)
    except TransportError as e:
        raise GenerationError(GenerationErrorKind.TRANSPORT, str(e)) from e


def generate_program(
    client: LlmClient, t: Table, q: str, cfg: Optional[InstructionConfig] = None
) -> GeneratedProgram:
    """
    Ask the client for a step program answering ``q`` over ``t``.

    Returns:
        The parsed program together with the raw completion

    Raises:
        GenerationError: Transport failure, or a completion that does not parse
    """
    raw = _complete(client, build_instruction(t, q, cfg))
    return parse_completion(raw)


def refine_program(
    client: LlmClient, ctx: RefinementContext, cfg: Optional[InstructionConfig] = None
) -> GeneratedProgram:
    """Ask for a corrected program given the failure evidence in ``ctx``."""
    raw = _complete(client, build_refinement_prompt(ctx, cfg))
    return parse_completion(raw)


def is_trivial_copy(p: StepProgram, gold: AnswerValue) -> bool:
    """
    True when the program writes the gold answer as a literal.

    A program whose answer is a literal matching the gold, with no filter,
    aggregate, compute or group step before it, derives nothing from the
    table.
    """
    source = p.answer.source
    if isinstance(source, (AnswerColumn, AnswerScalar)):
        return False
    if any(isinstance(op, DERIVING_OPERATIONS) for op in p.operations):
        return False
    return bool(fuzzy_match(AnswerValue.of(source.value), gold))


# ============================================================================
# Run log
# ============================================================================

FIRST_PASS_CORRECT = "first_pass_correct"
REFINED_CORRECT = "refined_correct"
DISCARDED_TRIVIAL = "discarded_trivial"
FAILED = "failed"


@dataclass(frozen=True)
class RunLog:
    first_pass_correct: int = 0
    refined_correct: int = 0
    discarded_trivial: int = 0
    failed: int = 0
    completions: int = 0

    def __add__(self, other: "RunLog") -> "RunLog":
        return RunLog(
            self.first_pass_correct + other.first_pass_correct,
            self.refined_correct + other.refined_correct,
            self.discarded_trivial + other.discarded_trivial,
            self.failed + other.failed,
            self.completions + other.completions,
        )

    @classmethod
    def of_outcome(cls, outcome: ExampleOutcome) -> "RunLog":
        counts = {outcome.status: 1}
        return cls(completions=len(outcome.attempts), **counts)

    def to_record(self) -> RunLogRecord:
        return RunLogRecord(
            first_pass_correct=self.first_pass_correct,
            refined_correct=self.refined_correct,
            discarded_trivial=self.discarded_trivial,
            failed=self.failed,
            completions=self.completions,
        )


@dataclass
class BuildResult:
    records: List[TrainingRecord] = field(default_factory=list)
    run_log: RunLog = field(default_factory=RunLog)
    outcomes: List[ExampleOutcome] = field(default_factory=list)


# ============================================================================
# Training-set builder
# ============================================================================

class TrainingSetBuilder:
    """
    Builds verified training records with error-guided refinement.

    Each example costs at most ``1 + max_refine_rounds`` completions. Errors
    never abort the batch; they end up in the example's outcome.
    """

    def __init__(
        self,
        client: LlmClient,
        table_store: TableStore,
        instruction: Optional[InstructionConfig] = None,
        max_refine_rounds: int = 1,
        max_workers: int = 1,
    ):
        """
        Initialize the builder.

        Args:
            client: Completion source
            table_store: Resolves and normalizes example tables
            instruction: Prompt settings
            max_refine_rounds: Refinement requests after a wrong first pass
            max_workers: Examples processed concurrently
        """
        if max_refine_rounds < 0:
            raise ValueError("max_refine_rounds must be nonnegative")
        self.client = client
        self.table_store = table_store
        self.instruction = instruction or InstructionConfig()
        self.max_refine_rounds = max_refine_rounds
        self.max_workers = max(1, max_workers)

    def _request(
        self,
        round_index: int,
        table: Table,
        example: ExampleRecord,
        gold: AnswerValue,
        failed_program: Optional[str],
        evidence: Union[AnswerValue, str, None],
    ) -> GeneratedProgram:
        if round_index == 0:
            return generate_program(self.client, table, example.question, self.instruction)
        ctx = RefinementContext(table, example.question, failed_program or "", evidence, gold)
        return refine_program(self.client, ctx, self.instruction)

    def process_example(self, example: ExampleRecord) -> Tuple[ExampleOutcome, Optional[TrainingRecord]]:
        """
        Run generation and refinement for one example.

        Returns:
            (outcome, training record or None)
        """
        gold = AnswerValue.from_texts(example.gold)
        try:
            table = self.table_store.get(example.table, example.id)
        except (OSError, TableError) as e:
            logger.warning(f"[{example.id}] table unavailable: {e}")
            return ExampleOutcome(id=example.id, status=FAILED, error=str(e)), None

        attempts: List[AttemptRecord] = []
        failed_program: Optional[str] = None
        evidence: Union[AnswerValue, str, None] = None
        last_values: Optional[List[str]] = None
        last_error: Optional[str] = None
        rounds = 1 + (self.max_refine_rounds if len(gold) else 0)

        for round_index in range(rounds):
            stage = "generate" if round_index == 0 else f"refine-{round_index}"
            try:
                generated = self._request(round_index, table, example, gold, failed_program, evidence)
            except GenerationError as e:
                attempts.append(AttemptRecord(stage=stage, raw_text=e.raw_text, error=str(e)))
                last_error = str(e)
                if e.kind == GenerationErrorKind.TRANSPORT:
                    logger.warning(f"[{example.id}] {stage}: {e}")
                    break
                logger.debug(f"[{example.id}] {stage}: {e}")
                failed_program, evidence = e.raw_text or "", str(e)
                continue

            program_text = render_program(generated.program)
            try:
                result = execute(generated.program, table)
            except ExecutionError as e:
                logger.debug(f"[{example.id}] {stage}: {e.to_text()}")
                attempts.append(
                    AttemptRecord(
                        stage=stage, raw_text=generated.raw_text,
                        program_text=program_text, error=e.to_text(),
                    )
                )
                last_error = e.to_text()
                failed_program, evidence = program_text, e.to_text()
                continue

            fm = fuzzy_match(result.answer, gold)
            attempts.append(
                AttemptRecord(
                    stage=stage, raw_text=generated.raw_text, program_text=program_text,
                    values=result.answer.texts, fm=fm,
                )
            )
            last_values, last_error = result.answer.texts, None

            if not fm:
                failed_program, evidence = program_text, result.answer
                continue

            if is_trivial_copy(generated.program, gold):
                logger.debug(f"[{example.id}] {stage}: trivial copy of the gold answer discarded")
                return (
                    ExampleOutcome(
                        id=example.id, status=DISCARDED_TRIVIAL, attempts=attempts,
                        program_text=program_text, final_values=last_values,
                    ),
                    None,
                )

            status = FIRST_PASS_CORRECT if round_index == 0 else REFINED_CORRECT
            record = TrainingRecord(
                id=example.id,
                question=example.question,
                table=example.table,
                program_text=program_text,
                produced_by="first-pass" if round_index == 0 else "refined",
                answer=result.answer.texts,
            )
            outcome = ExampleOutcome(
                id=example.id, status=status, attempts=attempts,
                program_text=program_text, final_values=last_values,
            )
            return outcome, record

        return (
            ExampleOutcome(
                id=example.id, status=FAILED, attempts=attempts,
                final_values=last_values, error=last_error or "no program matched the gold answer",
            ),
            None,
        )

    def build(self, examples: Sequence[ExampleRecord]) -> BuildResult:
        """
        Process a batch of examples.

        Returns:
            BuildResult with records and outcomes in input order
        """
        logger.info(
            f"Building training set from {len(examples)} examples "
            f"(refine rounds: {self.max_refine_rounds}, workers: {self.max_workers})"
        )
        with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
            results = list(
                tqdm(
                    pool.map(self.process_example, examples),
                    total=len(examples),
                    desc="Generating programs",
                    disable=len(examples) < 2,
                )
            )

        result = BuildResult()
        for outcome, record in results:
            result.outcomes.append(outcome)
            result.run_log = result.run_log + RunLog.of_outcome(outcome)
            if record is not None:
                result.records.append(record)

        log = result.run_log
        logger.info(
            f"✓ {len(result.records)} training records "
            f"(first-pass {log.first_pass_correct}, refined {log.refined_correct}, "
            f"trivial {log.discarded_trivial}, failed {log.failed})"
        )
        return result


def build_training_set(
    dataset: Sequence[ExampleRecord],
    client: LlmClient,
    cfg: Optional[InstructionConfig],
    max_refine_rounds: int,
    table_store: TableStore,
    max_workers: int = 1,
) -> BuildResult:
    """Build verified training records for ``dataset``; see TrainingSetBuilder."""
    builder = TrainingSetBuilder(client, table_store, cfg, max_refine_rounds, max_workers)
    return builder.build(dataset)


def audit_training_records(
    records: Sequence[TrainingRecord],
    table_store: TableStore,
    golds: Dict[str, AnswerValue],
) -> List[str]:
    """
    Re-execute emitted training records.

    Returns:
        One message per violated record: unparseable, failing, answer drift,
        answer not matching the gold, or a trivial copy (empty when clean)
    """
    violations = []
    for record in records:
        prefix = f"[{record.id}]"
        try:
            program = parse_program(record.program_text)
            result = execute(program, table_store.get(record.table, record.id))
        except (ProgramParseError, ExecutionError, OSError, TableError) as e:
            violations.append(f"{prefix} does not re-execute: {e}")
            continue
        if result.answer.texts != record.answer:
            violations.append(f"{prefix} answer drift: {result.answer.texts} != {record.answer}")
        gold = golds.get(record.id)
        if gold is None or not fuzzy_match(result.answer, gold):
            violations.append(f"{prefix} answer does not match the gold")
        if gold is not None and is_trivial_copy(program, gold):
            violations.append(f"{prefix} is a trivial copy of the gold")
    logger.info(f"✓ Audited {len(records)} training records, {len(violations)} violations")
    return violations
