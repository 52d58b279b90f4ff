"""
Prompt construction for program generation and refinement.
"""

from dataclasses import dataclass
from typing import List, Optional, Union

from ..config import InstructionConfig
from ..evaluation import AnswerValue
from ..table_core import Table, serialize_for_prompt

TASK_STATEMENT = """You answer questions about a table by writing a step program.
A step program is a sequence of commented steps that is executed on the table
exactly as written. Reply with the program only."""

GRAMMAR_REFERENCE = """Step-program language:
Every step is a tag line `# TAG: comment` followed by one operation line.
Tags: PLAN, FILTER, PARSING, AGGREGATE, SELECT, SORT, LIMIT, COMPUTE, GROUP, ANSWER.
Operations (quote column names and text with double quotes when they contain spaces):
  filter <column> <eq|ne|lt|le|gt|ge|contains> <literal>
  filter <column> <is-missing|not-missing>
  parse_numeric <column>          convert a column to numbers (unparseable -> missing)
  parse_date <column>             convert a column to dates (unparseable -> missing)
  aggregate <sum|mean|min|max|count|count-distinct> <column>
  select <column> [<column> ...]
  sort <column> <asc|desc>
  limit <n> <from_start|from_end>
  compute <new_column> <column> <+|-|*|/> <column or number>
  group <key_column> <sum|mean|min|max|count|count-distinct> <value_column>
  answer scalar                   the result of the last aggregate
  answer <column>                 the column's values, top to bottom
Text comparisons are case-sensitive and ordered by characters; compare
numbers only after parse_numeric and use unquoted number literals."""

PLAN_REQUIREMENT = """The first line must be `# PLAN:` followed by a one-line plan for the whole
solution. The last step must be `# ANSWER:` with an answer operation."""

ROBUSTNESS_RULES = """Robustness rules:
- Parse numbers and dates with parse_numeric / parse_date before comparing or
  aggregating them; values that cannot be parsed become missing.
- Handle missing values explicitly (is-missing / not-missing) and never
  compare them against empty text.
- Exclude summary rows such as "Total" or "Average" before aggregating."""

CONSTRAINT_RULES = """Answer constraints:
- Return exactly as many values as the question asks for; use sort and limit
  for superlatives and rankings.
- Keep the order the question implies.
- The answer is always a list; a single value is a list of one.
- Derive the answer from the table; do not write the answer as a literal."""

EXAMPLE_PROGRAM = """# PLAN: total gold medals of the nation asked about
# FILTER: keep that nation's row
filter Nation eq "Norway"
# PARSING: medal counts as numbers
parse_numeric Gold
# AGGREGATE: sum the gold medals
aggregate sum Gold
# ANSWER:
answer scalar"""


@dataclass(frozen=True)
class RefinementContext:
    """Failure evidence for one refinement request."""
    table: Table
    question: str
    failed_program: str
    execution_output: Union[AnswerValue, str]
    gold: AnswerValue

    def __post_init__(self) -> None:
        if len(self.gold) == 0:
            raise ValueError("Refinement needs a non-empty gold answer")


def _format_answer(value: AnswerValue) -> str:
    return "[" + ", ".join(f'"{text}"' for text in value.texts) + "]"


def _few_shot_section(cfg: InstructionConfig) -> Optional[str]:
    if not cfg.few_shot_examples:
        return None
    blocks = ["Examples:"]
    for i, example in enumerate(cfg.few_shot_examples, start=1):
        blocks.append(
            f"Example {i}\nTable:\n{example.table_text}\n"
            f"Question: {example.question}\nProgram:\n{example.program_text.strip()}"
        )
    return "\n\n".join(blocks)


def build_instruction(t: Table, q: str, cfg: Optional[InstructionConfig] = None) -> str:
    """
    Build the generation prompt.

    Sections, in order: task, grammar, PLAN requirement, robustness rules,
    answer constraints, few-shot examples, table, question. Pure: equal
    inputs give byte-identical prompts.
    """
    cfg = cfg or InstructionConfig()
    sections: List[str] = [TASK_STATEMENT, GRAMMAR_REFERENCE, PLAN_REQUIREMENT]
    if cfg.include_robustness_rules:
        sections.append(ROBUSTNESS_RULES)
    if cfg.include_constraint_rules:
        sections.append(CONSTRAINT_RULES)
    few_shot = _few_shot_section(cfg)
    if few_shot:
        sections.append(few_shot)
    else:
        sections.append(f"Program format example:\n{EXAMPLE_PROGRAM}")
    sections.append("Table:\n" + serialize_for_prompt(t, cfg.max_table_rows))
    sections.append(f"Question: {q}")
    return "\n\n".join(sections) + "\n"


def build_refinement_prompt(ctx: RefinementContext, cfg: Optional[InstructionConfig] = None) -> str:
    """
    Build the error-guided refinement prompt.

    Embeds the table, the question, the failed program, what executing it
    produced and the gold answer, and asks for a corrected program in the
    same commented format.
    """
    cfg = cfg or InstructionConfig()
    if isinstance(ctx.execution_output, AnswerValue):
        output = f"The program returned {_format_answer(ctx.execution_output)}."
    else:
        output = f"The program failed:\n{ctx.execution_output}"

    sections = [
        "The step program below does not answer the question correctly. "
        "Write a corrected program in the same commented step format.",
        GRAMMAR_REFERENCE,
        PLAN_REQUIREMENT,
        "Table:\n" + serialize_for_prompt(ctx.table, cfg.max_table_rows),
        f"Question: {ctx.question}",
        f"Program:\n{ctx.failed_program.strip()}",
        output,
        f"The correct answer is {_format_answer(ctx.gold)}. Derive it from the "
        "table; a program that only writes the answer as a literal is rejected.",
    ]
    return "\n\n".join(sections) + "\n"
