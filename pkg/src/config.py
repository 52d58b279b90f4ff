"""
Configuration management for the step-program TableQA toolkit.
"""

from typing import Optional, List, Literal
from pathlib import Path
from pydantic import BaseModel, ConfigDict, Field, field_validator
import yaml
import os
from dotenv import load_dotenv

load_dotenv()


class ConfigError(ValueError):
    """Raised when a run configuration is unusable."""


class NormalizationConfig(BaseModel):
    """Rule-based table normalization switches."""
    strip_thousands: bool = True
    normalize_unicode: bool = True
    standardize_column_names: bool = True
    extract_leading_number: bool = True


class FewShotExample(BaseModel):
    """One worked example shown in the generation instruction."""
    table_text: str
    question: str
    program_text: str


class InstructionConfig(BaseModel):
    """Configuration for the program-generation instruction."""
    max_table_rows: int = Field(default=30, ge=1)
    include_robustness_rules: bool = True
    include_constraint_rules: bool = True
    few_shot_examples: List[FewShotExample] = Field(default_factory=list)


class LlmConfig(BaseModel):
    """Chat-completion endpoint settings."""
    base_url: Optional[str] = Field(default_factory=lambda: os.getenv("TQA_LLM_BASE_URL"))
    model: Optional[str] = Field(default_factory=lambda: os.getenv("TQA_LLM_MODEL"))
    api_key: Optional[str] = Field(default_factory=lambda: os.getenv("TQA_LLM_API_KEY"))
    temperature: float = 0.0
    max_tokens: int = 1024
    max_retries: int = 3
    timeout: float = 60.0  # seconds


class SelectorConfig(BaseModel):
    """Configuration for the answer selector."""
    backend: Literal["heuristic", "prompted", "code", "e2e"] = "heuristic"
    max_table_rows: int = Field(default=30, ge=1)
    include_traces: bool = False


class RunConfig(BaseModel):
    """Main run configuration shared by the CLI and the pipeline."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    dataset_path: Optional[Path] = None
    tables_dir: Optional[Path] = None
    output_dir: Path = Field(default_factory=lambda: Path("output"))
    corrections_path: Optional[Path] = None
    scripted_client: Optional[Path] = None

    max_refine_rounds: int = Field(default=1, ge=0)
    metric: Literal["em", "fm"] = "fm"
    max_workers: int = Field(default=4, ge=1)
    resume: bool = False

    # Module configurations
    normalization: NormalizationConfig = Field(default_factory=NormalizationConfig)
    instruction: InstructionConfig = Field(default_factory=InstructionConfig)
    llm: LlmConfig = Field(default_factory=LlmConfig)
    selector: SelectorConfig = Field(default_factory=SelectorConfig)

    @field_validator("metric", mode="before")
    @classmethod
    def _lower_metric(cls, value):
        return value.lower() if isinstance(value, str) else value

    @classmethod
    def from_yaml(cls, yaml_path: str) -> "RunConfig":
        """Load configuration from YAML file."""
        try:
            with open(yaml_path, "r", encoding="utf-8") as f:
                data = yaml.safe_load(f) or {}
        except OSError as e:
            raise ConfigError(f"Cannot read config {yaml_path}: {e}") from e
        except yaml.YAMLError as e:
            raise ConfigError(f"Invalid YAML in {yaml_path}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"Config {yaml_path} must contain a mapping")

        config = cls(**data)
        # Relative paths in a config file are relative to the file itself
        base = Path(yaml_path).resolve().parent
        for name in ("dataset_path", "tables_dir", "output_dir", "corrections_path", "scripted_client"):
            value = getattr(config, name)
            if value is not None and not value.is_absolute():
                setattr(config, name, base / value)
        return config

    def has_endpoint(self) -> bool:
        return bool(self.llm.base_url and self.llm.model)

    def validate_paths(self, require_client: bool = False) -> None:
        """
        Check that every referenced input exists before a command starts.

        Args:
            require_client: Also require an endpoint or a scripted client

        Raises:
            ConfigError: On the first problem found
        """
        if self.dataset_path is None or not self.dataset_path.is_file():
            raise ConfigError(f"Dataset file not found: {self.dataset_path}")
        if self.tables_dir is None or not self.tables_dir.is_dir():
            raise ConfigError(f"Tables directory not found: {self.tables_dir}")
        if self.corrections_path is not None and not self.corrections_path.is_file():
            raise ConfigError(f"Corrections file not found: {self.corrections_path}")
        if self.scripted_client is not None and not self.scripted_client.is_file():
            raise ConfigError(f"Scripted client file not found: {self.scripted_client}")
        if require_client and self.scripted_client is None and not self.has_endpoint():
            raise ConfigError(
                "No LLM endpoint configured: set TQA_LLM_BASE_URL and TQA_LLM_MODEL "
                "(or --endpoint/--model), or pass --scripted-client FILE"
            )

    def setup_directories(self) -> None:
        """Create all necessary output directories."""
        directories = [
            self.output_dir,
            self.output_dir / "tables",
        ]
        for directory in directories:
            directory.mkdir(parents=True, exist_ok=True)
