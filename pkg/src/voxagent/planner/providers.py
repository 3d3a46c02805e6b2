"""Plan providers: scripted replies and a remote chat-completion endpoint."""

from __future__ import annotations

import os
import time
from typing import Protocol

import httpx

ROLES = ("system", "user", "assistant")


class ProviderError(RuntimeError):
    """The provider could not produce a reply (transport or protocol failure)."""


class PlanProvider(Protocol):
    def complete(self, messages: list[dict], context=None) -> str: ...


class ScriptedProvider:
    """Replays a fixed list of replies; the last one repeats once exhausted."""

    def __init__(self, replies):
        self.replies = list(replies)
        self.calls: list[list[dict]] = []

    def complete(self, messages, context=None) -> str:
        self.calls.append([dict(m) for m in messages])
        i = min(len(self.calls) - 1, len(self.replies) - 1)
        return self.replies[i]


class RemoteProvider:
    """POSTs ``{model, messages}`` and reads ``{content}`` back.

    A chat-completions style ``choices[0].message.content`` body is also
    accepted.  Transport errors and 5xx/429 responses are retried with
    exponential backoff.
    """

    def __init__(self, url: str, model: str, key: str | None = None, *, retries: int = 3,
                 timeout: float = 60.0, backoff: float = 1.0, client: httpx.Client | None = None):
        self.url = url
        self.model = model
        self.key = key
        self.retries = retries
        self.backoff = backoff
        self.client = client or httpx.Client(timeout=timeout)

    @classmethod
    def from_env(cls, **kwargs) -> "RemoteProvider":
        url = os.environ.get("PROVIDER_URL")
        model = os.environ.get("PROVIDER_MODEL")
        if not url or not model:
            raise ProviderError("PROVIDER_URL and PROVIDER_MODEL must be set")
        return cls(url, model, os.environ.get("PROVIDER_KEY"), **kwargs)

    def complete(self, messages, context=None) -> str:
        for m in messages:
            if m.get("role") not in ROLES:
                raise ProviderError(f"unsupported role {m.get('role')!r}")
        payload = {"model": self.model, "messages": [{"role": m["role"], "content": m["content"]} for m in messages]}
        headers = {"Authorization": f"Bearer {self.key}"} if self.key else {}
        last: Exception | None = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(self.backoff * 2 ** (attempt - 1))
            try:
                resp = self.client.post(self.url, json=payload, headers=headers)
            except httpx.HTTPError as exc:
                last = exc
                continue
            if resp.status_code == 429 or resp.status_code >= 500:
                last = ProviderError(f"HTTP {resp.status_code}")
                continue
            if resp.status_code >= 400:
                raise ProviderError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            return _content(resp)
        raise ProviderError(f"provider unreachable after {self.retries + 1} attempts: {last}")


def _content(resp: httpx.Response) -> str:
    try:
        body = resp.json()
    except ValueError as exc:
        raise ProviderError("response body is not JSON") from exc
    if isinstance(body, dict):
        if isinstance(body.get("content"), str):
            return body["content"]
        try:
            text = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            text = None
        if isinstance(text, str):
            return text
    raise ProviderError("response has no text content")
