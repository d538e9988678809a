"""A loopback model server standing in for the tagger/QA backends.

Serves the same wire protocol the remote clients speak, backed by the
baseline models, so remote-path runs are comparable with direct calls.
"""

from __future__ import annotations

import threading
import time

import uvicorn
from fastapi import FastAPI
from pydantic import BaseModel

from slcforge import BaselineExtractor, BaselineTagger, SourceDocument


class TagBody(BaseModel):
    text: str
    tokens: list[list[int]]
    labels: list[str]
    versions: dict[str, str]


class AnswerBody(BaseModel):
    question: str
    context: str


def stub_model_app(
    gazetteers: dict[str, list[str]], answers: dict[str, str]
) -> FastAPI:
    tagger = BaselineTagger(gazetteers=gazetteers)
    extractor = BaselineExtractor(answers)
    app = FastAPI()

    @app.post("/tag")
    def tag(body: TagBody) -> dict:
        doc = SourceDocument.from_text(body.text)
        return {"matrix": tagger.tag(doc).to_wire()}

    @app.post("/answer")
    def answer(body: AnswerBody) -> dict:
        span = extractor.answer(body.question, body.context)
        if span is None:
            return {"abstain": True}
        return {
            "start": span.start,
            "end": span.end,
            "start_confidence": span.start_confidence,
            "end_confidence": span.end_confidence,
        }

    return app


class StubServer:
    """Run a FastAPI app on an ephemeral loopback port in a daemon thread."""

    def __init__(self, app: FastAPI):
        config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="warning")
        self.server = uvicorn.Server(config)
        self.thread = threading.Thread(target=self.server.run, daemon=True)

    def __enter__(self) -> str:
        self.thread.start()
        deadline = time.monotonic() + 10.0
        while not self.server.started:
            if time.monotonic() > deadline:
                raise RuntimeError("stub model server did not start")
            time.sleep(0.01)
        port = self.server.servers[0].sockets[0].getsockname()[1]
        return f"http://127.0.0.1:{port}"

    def __exit__(self, *exc) -> None:
        self.server.should_exit = True
        self.thread.join(timeout=10)
