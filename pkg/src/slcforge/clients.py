"""HTTP clients for externally served models.

Both clients speak plain JSON over HTTP with one configured timeout and a
single retry; anything still failing after that surfaces as
RemoteUnavailable, and a well-formed HTTP reply with the wrong shape is a
ProtocolViolation. The service layer maps both onto 502 responses.

Wire protocol:
  POST {base}/tag     {text, tokens: [[start, end], ...], labels, versions}
                      -> {matrix: [{label: {b, i}, ...}, ...]}  (one row per token)
  POST {base}/answer  {question, context}
                      -> {start, end, start_confidence, end_confidence}
                         or {abstain: true}
"""

from __future__ import annotations

from typing import Mapping, Sequence

import httpx

from .core import SlcError, SourceDocument
from .extraction import ExtractorSpan
from .tagging import TokenLabelMatrix


class RemoteUnavailable(SlcError):
    code = "REMOTE_UNAVAILABLE"


class ProtocolViolation(SlcError):
    code = "PROTOCOL_VIOLATION"


class _RemoteClient:
    def __init__(
        self,
        base_url: str,
        timeout: float = 10.0,
        client: httpx.Client | None = None,
    ) -> None:
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self._client = client or httpx.Client(timeout=timeout)

    def close(self) -> None:
        self._client.close()

    def _post(self, path: str, payload: dict) -> dict:
        url = self.base_url + path
        last_error: Exception | None = None
        for _ in range(2):  # one initial attempt plus one retry
            try:
                response = self._client.post(url, json=payload, timeout=self.timeout)
            except httpx.HTTPError as exc:
                last_error = exc
                continue
            if response.status_code != 200:
                raise RemoteUnavailable(
                    f"model server returned HTTP {response.status_code}",
                    url=url,
                    status=response.status_code,
                )
            try:
                data = response.json()
            except ValueError as exc:
                raise ProtocolViolation(
                    f"model server response is not JSON: {exc}", url=url
                ) from exc
            if not isinstance(data, dict):
                raise ProtocolViolation("model server response is not an object", url=url)
            return data
        raise RemoteUnavailable(
            f"model server unreachable after retry: {last_error}", url=url
        )


class RemoteTagger(_RemoteClient):
    """Entity tagger served over HTTP; versions are pinned at construction."""

    def __init__(
        self,
        base_url: str,
        labels: Sequence[str],
        versions: Mapping[str, str],
        timeout: float = 10.0,
        client: httpx.Client | None = None,
    ) -> None:
        super().__init__(base_url, timeout, client)
        self._labels = list(labels)
        self._versions = {label: versions[label] for label in self._labels}

    def versions(self) -> dict[str, str]:
        return dict(self._versions)

    def tag(self, document: SourceDocument) -> TokenLabelMatrix:
        data = self._post(
            "/tag",
            {
                "text": document.text,
                "tokens": [[t.start, t.end] for t in document.tokens],
                "labels": self._labels,
                "versions": self._versions,
            },
        )
        rows = data.get("matrix")
        if not isinstance(rows, list) or len(rows) != len(document.tokens):
            raise ProtocolViolation(
                "matrix must have one row per token",
                expected=len(document.tokens),
                got=len(rows) if isinstance(rows, list) else None,
            )
        try:
            return TokenLabelMatrix.from_wire(rows, self._labels)
        except (ValueError, TypeError, AttributeError) as exc:
            raise ProtocolViolation(f"malformed tag matrix: {exc}") from exc


class RemoteSpanExtractor(_RemoteClient):
    """Extractive QA model served over HTTP."""

    def __init__(
        self,
        base_url: str,
        timeout: float = 10.0,
        client: httpx.Client | None = None,
        extractor_id: str | None = None,
    ) -> None:
        super().__init__(base_url, timeout, client)
        self.extractor_id = extractor_id or f"remote:{self.base_url}"

    def answer(self, question: str, context: str) -> ExtractorSpan | None:
        data = self._post("/answer", {"question": question, "context": context})
        if data.get("abstain") is True:
            return None
        for key in ("start", "end", "start_confidence", "end_confidence"):
            if not isinstance(data.get(key), (int, float)) or isinstance(data.get(key), bool):
                raise ProtocolViolation(f"answer is missing numeric {key!r}", key=key)
        return ExtractorSpan(
            start=int(data["start"]),
            end=int(data["end"]),
            start_confidence=float(data["start_confidence"]),
            end_confidence=float(data["end_confidence"]),
        )
