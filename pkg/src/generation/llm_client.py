"""
LLM Clients

Text-in, text-out completion clients:
- OpenAIChatClient for any chat-completion endpoint (retries with backoff)
- ScriptedClient replaying canned replies from a JSONL file, for offline runs
"""

from abc import ABC, abstractmethod
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from threading import Lock
from typing import Deque, List, Optional
import json

from loguru import logger
from tenacity import (
    RetryError,
    Retrying,
    retry_if_exception_type,
    stop_after_attempt,
    wait_exponential,
)

try:
    import openai
    OPENAI_AVAILABLE = True
except ImportError:
    OPENAI_AVAILABLE = False
    logger.warning("OpenAI not available. Install with: pip install openai")

from ..config import ConfigError, LlmConfig, RunConfig


class TransportError(RuntimeError):
    """The completion endpoint could not be reached or gave up."""


class LlmClient(ABC):
    """A completion source: one prompt in, one text reply out."""

    @abstractmethod
    def complete(self, prompt: str) -> str:
        """
        Request one completion.

        Raises:
            TransportError: The request failed after retries
        """


class OpenAIChatClient(LlmClient):
    """
    Chat-completion client for OpenAI-compatible endpoints.

    Transient failures (connection errors, timeouts, rate limits and server
    errors) are retried with exponential backoff.
    """

    def __init__(
        self,
        base_url: Optional[str],
        model: str,
        api_key: Optional[str] = None,
        temperature: float = 0.0,
        max_tokens: int = 1024,
        max_retries: int = 3,
        timeout: float = 60.0,
    ):
        """
        Initialize the client.

        Args:
            base_url: Endpoint base URL (None for the provider default)
            model: Model name
            api_key: API key; local endpoints often accept any value
            temperature: Sampling temperature
            max_tokens: Maximum tokens for generation
            max_retries: Attempts per request before giving up
            timeout: Per-request timeout in seconds
        """
        if not OPENAI_AVAILABLE:
            raise RuntimeError("OpenAI is not available.")
        self.model = model
        self.temperature = temperature
        self.max_tokens = max_tokens
        self.max_retries = max(1, max_retries)
        self.client = openai.OpenAI(
            base_url=base_url,
            api_key=api_key or "EMPTY",
            timeout=timeout,
            max_retries=0,
        )
        logger.info(f"Using chat-completion endpoint {base_url or 'default'} ({model})")

    @classmethod
    def from_config(cls, cfg: LlmConfig) -> "OpenAIChatClient":
        return cls(
            base_url=cfg.base_url,
            model=cfg.model,
            api_key=cfg.api_key,
            temperature=cfg.temperature,
            max_tokens=cfg.max_tokens,
            max_retries=cfg.max_retries,
            timeout=cfg.timeout,
        )

    def _request(self, prompt: str) -> str:
        response = self.client.chat.completions.create(
            model=self.model,
            messages=[{"role": "user", "content": prompt}],
            max_tokens=self.max_tokens,
            temperature=self.temperature,
        )
        return response.choices[0].message.content or ""

    def complete(self, prompt: str) -> str:
        retrying = Retrying(
            stop=stop_after_attempt(self.max_retries),
            wait=wait_exponential(multiplier=1, min=1, max=10),
            retry=retry_if_exception_type(
                (
                    openai.APIConnectionError,
                    openai.APITimeoutError,
                    openai.RateLimitError,
                    openai.InternalServerError,
                )
            ),
            reraise=True,
        )
        try:
            return retrying(self._request, prompt)
        except (openai.APIError, RetryError) as e:
            logger.error(f"Completion failed after {self.max_retries} attempts: {e}")
            raise TransportError(str(e)) from e


@dataclass
class _ScriptEntry:
    match: Optional[str]
    replies: Deque[str] = field(default_factory=deque)


class ScriptedClient(LlmClient):
    """
    Replays replies from a script.

    Script file: one JSON object per line, ``{"match": "...", "replies": [...]}``.
    A prompt gets the next reply of the first entry whose ``match`` occurs in
    it; prompts matching no entry take the next reply from the entries without
    ``match``, in file order. An exhausted script raises TransportError.
    """

    def __init__(self, entries: List[_ScriptEntry]):
        self._matched = [e for e in entries if e.match is not None]
        self._unmatched: Deque[str] = deque(
            reply for e in entries if e.match is None for reply in e.replies
        )
        self._lock = Lock()
        self.prompts: List[str] = []

    @classmethod
    def from_replies(cls, replies: List[str], match: Optional[str] = None) -> "ScriptedClient":
        return cls([_ScriptEntry(match, deque(replies))])

    @classmethod
    def from_file(cls, path: Path) -> "ScriptedClient":
        entries = []
        with open(path, "r", encoding="utf-8") as f:
            for line_number, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    data = json.loads(line)
                    replies = data["replies"]
                except (json.JSONDecodeError, KeyError, TypeError) as e:
                    raise ConfigError(f"{path}:{line_number}: bad script entry: {e}") from e
                if not isinstance(replies, list) or not all(isinstance(r, str) for r in replies):
                    raise ConfigError(f"{path}:{line_number}: replies must be a list of strings")
                entries.append(_ScriptEntry(data.get("match"), deque(replies)))
        logger.info(f"Using scripted client with {len(entries)} entries from {path}")
        return cls(entries)

    @property
    def calls(self) -> int:
        return len(self.prompts)

    def complete(self, prompt: str) -> str:
        with self._lock:
            self.prompts.append(prompt)
            for entry in self._matched:
                if entry.match in prompt:
                    if not entry.replies:
                        raise TransportError(f"Script exhausted for {entry.match!r}")
                    return entry.replies.popleft()
            if not self._unmatched:
                raise TransportError("Script exhausted")
            return self._unmatched.popleft()


def create_client(config: RunConfig) -> LlmClient:
    """
    Build the completion client a run asks for.

    Raises:
        ConfigError: Neither a scripted client nor an endpoint is configured
    """
    if config.scripted_client is not None:
        return ScriptedClient.from_file(config.scripted_client)
    if not config.has_endpoint():
        raise ConfigError(
            "No LLM endpoint configured: set TQA_LLM_BASE_URL and TQA_LLM_MODEL "
            "(or --endpoint/--model), or pass --scripted-client FILE"
        )
    return OpenAIChatClient.from_config(config.llm)
