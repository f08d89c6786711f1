"""Pluggable text-completion backends for the dialogue agents.

ScriptedClient replays canned responses keyed by (agent, per-agent turn
index), which makes whole pipeline runs bit-for-bit reproducible.
RemoteClient speaks a generic chat-completion wire shape; the model name,
endpoint, and key are configuration.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

from .errors import ModelUnavailableError


class ModelClient(Protocol):
    def complete(self, agent: str, prompt_text: str) -> str: ...


@dataclass
class ScriptedClient:
    """Deterministic replay: Nth call for an agent gets that agent's Nth record."""

    responses: dict[tuple[str, int], str]
    turns: dict[str, int] = field(default_factory=dict)
    calls: list[tuple[str, int, str]] = field(default_factory=list)

    @classmethod
    def from_jsonl(cls, path: str | Path) -> "ScriptedClient":
        responses: dict[tuple[str, int], str] = {}
        for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not raw.strip():
                continue
            record = json.loads(raw)
            key = (record["agent"], int(record["turn"]))
            if key in responses:
                raise ValueError(f"{path}:{lineno}: duplicate record for {key}")
            responses[key] = record["response"]
        return cls(responses=responses)

    def complete(self, agent: str, prompt_text: str) -> str:
        turn = self.turns.get(agent, 0)
        self.turns[agent] = turn + 1
        self.calls.append((agent, turn, prompt_text))
        try:
            return self.responses[(agent, turn)]
        except KeyError:
            raise ModelUnavailableError(
                f"no scripted response for agent {agent!r} turn {turn}"
            ) from None

    def rewind(self) -> None:
        self.turns.clear()
        self.calls.clear()


@dataclass
class RemoteClient:
    endpoint: str
    key: str = ""
    model: str = ""
    timeout: float = 60.0
    retries: int = 2

    def complete(self, agent: str, prompt_text: str) -> str:
        import httpx

        payload = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": f"agent: {agent}"},
                {"role": "user", "content": prompt_text},
            ],
        }
        headers = {"Content-Type": "application/json"}
        if self.key:
            headers["Authorization"] = f"Bearer {self.key}"
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                response = httpx.post(
                    self.endpoint, json=payload, headers=headers, timeout=self.timeout
                )
                response.raise_for_status()
                doc = response.json()
                return doc["choices"][0]["message"]["content"]
            except Exception as exc:
                last_error = exc
                if attempt < self.retries:
                    time.sleep(0.2 * (attempt + 1))
        raise ModelUnavailableError(f"remote backend failed: {last_error}")


def client_from_env(env: dict[str, str] | None = None) -> ModelClient | None:
    """FIXTURE_PATH wins over MODEL_ENDPOINT; neither means no backend."""
    env = os.environ if env is None else env
    fixture = env.get("FIXTURE_PATH")
    if fixture:
        return ScriptedClient.from_jsonl(fixture)
    endpoint = env.get("MODEL_ENDPOINT")
    if endpoint:
        return RemoteClient(
            endpoint=endpoint,
            key=env.get("MODEL_KEY", ""),
            model=env.get("MODEL_NAME", ""),
        )
    return None
