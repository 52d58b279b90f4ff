"""Step-program generation, error-guided refinement and training-set construction."""

from .llm_client import (
    LlmClient,
    OpenAIChatClient,
    ScriptedClient,
    TransportError,
    create_client,
)
from .prompts import RefinementContext, build_instruction, build_refinement_prompt
from .generator import (
    BuildResult,
    GeneratedProgram,
    GenerationError,
    GenerationErrorKind,
    RunLog,
    TrainingSetBuilder,
    audit_training_records,
    build_training_set,
    extract_program_text,
    generate_program,
    is_trivial_copy,
    parse_completion,
    refine_program,
)

__all__ = [
    "LlmClient",
    "OpenAIChatClient",
    "ScriptedClient",
    "TransportError",
    "create_client",
    "RefinementContext",
    "build_instruction",
    "build_refinement_prompt",
    "BuildResult",
    "GeneratedProgram",
    "GenerationError",
    "GenerationErrorKind",
    "RunLog",
    "TrainingSetBuilder",
    "audit_training_records",
    "build_training_set",
    "extract_program_text",
    "generate_program",
    "is_trivial_copy",
    "parse_completion",
    "refine_program",
]
