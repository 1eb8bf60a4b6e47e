"""HTTP server speaking the parsing pipeline's backend protocol.

Endpoints:

* ``POST /generate``: ``{"inputs": [...], "beam": int, "max_length": int}``
  -> ``{"outputs": [...]}``, outputs parallel to inputs.
* ``POST /classify``: ``{"inputs": [...]}`` -> ``{"scores": [...]}``,
  each score in [0, 1].
* ``GET /health``: 200 ``{"status": "ok"}`` once ready, 503 while the
  model loads or after a load failure (with the reason).

Malformed request bodies get a 400, as do batches larger than the
advertised limit (the ``X-Max-Batch`` response header on every
endpoint). Echo mode answers generate requests with the inputs verbatim
and scores everything 1.0; it needs no model and exists for protocol
and integration tests. Request handling against the model is serialized
per instance; run several instances for parallelism.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel


@dataclass
class ServerSettings:
    echo: bool = False
    model: str = ""
    defer_load: bool = False
    max_batch: int = 64

    def __post_init__(self):
        if not self.echo and not self.model:
            raise ValueError("either echo mode or a model path is required")
        if self.max_batch < 1:
            raise ValueError("max batch size must be positive")


class GenerateRequest(BaseModel):
    inputs: list[str]
    beam: int = 5
    max_length: int = 512


class ClassifyRequest(BaseModel):
    inputs: list[str]


class EchoEngine:
    def generate(self, inputs: list[str], beam: int, max_length: int) -> list[str]:
        return list(inputs)

    def classify(self, inputs: list[str]) -> list[float]:
        return [1.0] * len(inputs)


class ModelEngine:
    """Beam-search generation plus yes/no likelihood classification."""

    def __init__(self, model_name: str):
        import torch
        from transformers import AutoModelForSeq2SeqLM, AutoTokenizer

        self._torch = torch
        self.tokenizer = AutoTokenizer.from_pretrained(model_name)
        self.model = AutoModelForSeq2SeqLM.from_pretrained(model_name)
        self.model.eval()
        self.device = "cuda" if torch.cuda.is_available() else "cpu"
        self.model.to(self.device)
        # Tokens to drop from decoded text. Markup tokens the model was
        # trained with ([PREDICATE], </qa>, ...) are special tokens too
        # and must survive decoding, so only padding/eos/bos go.
        self._strip = [
            t
            for t in (
                self.tokenizer.pad_token,
                self.tokenizer.eos_token,
                getattr(self.tokenizer, "bos_token", None),
            )
            if t
        ]

    def _decode(self, ids) -> str:
        text = self.tokenizer.decode(ids, skip_special_tokens=False)
        for token in self._strip:
            text = text.replace(token, " ")
        return " ".join(text.split())

    def generate(self, inputs: list[str], beam: int, max_length: int) -> list[str]:
        if not inputs:
            return []
        torch = self._torch
        enc = self.tokenizer(
            inputs, return_tensors="pt", padding=True,
            truncation=True, max_length=max_length,
        ).to(self.device)
        with torch.no_grad():
            out = self.model.generate(
                **enc, num_beams=beam, max_length=max_length
            )
        return [self._decode(row) for row in out]

    def _label_nll(self, enc, label: str) -> float:
        torch = self._torch
        ids = self.tokenizer(label, return_tensors="pt").input_ids.to(self.device)
        with torch.no_grad():
            loss = self.model(input_ids=enc.input_ids, labels=ids).loss
        return float(loss)

    def classify(self, inputs: list[str]) -> list[float]:
        scores = []
        for text in inputs:
            enc = self.tokenizer(
                [text], return_tensors="pt", truncation=True, max_length=512
            ).to(self.device)
            yes = math.exp(-self._label_nll(enc, "yes"))
            no = math.exp(-self._label_nll(enc, "no"))
            scores.append(yes / (yes + no) if yes + no else 0.0)
        return scores


class EngineState:
    """Tracks loading -> ok / error and owns the serialization lock."""

    def __init__(self, settings: ServerSettings):
        self.settings = settings
        self.status = "loading"
        self.reason = ""
        self.engine: Optional[object] = None
        self.lock = threading.Lock()

    def load(self):
        if self.status != "loading":
            return
        try:
            if self.settings.echo:
                self.engine = EchoEngine()
            else:
                self.engine = ModelEngine(self.settings.model)
            self.status = "ok"
        except Exception as exc:
            self.status = "error"
            self.reason = str(exc)

    def ensure_ready(self) -> Optional[JSONResponse]:
        """Lazy-load if deferred; a JSONResponse means not servable."""
        if self.status == "loading":
            with self.lock:
                self.load()
        if self.status != "ok":
            detail = self.reason or "model is loading"
            return JSONResponse(status_code=503, content={"detail": detail})
        return None


def create_app(settings: ServerSettings) -> FastAPI:
    app = FastAPI(title="t2t-sidecar")
    state = EngineState(settings)
    app.state.engine_state = state
    if not settings.defer_load:
        state.load()

    @app.exception_handler(RequestValidationError)
    async def bad_request(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.middleware("http")
    async def advertise_max_batch(request: Request, call_next):
        response = await call_next(request)
        response.headers["X-Max-Batch"] = str(settings.max_batch)
        return response

    def batch_too_large(inputs) -> Optional[JSONResponse]:
        if len(inputs) > settings.max_batch:
            return JSONResponse(
                status_code=400,
                content={
                    "detail": f"batch of {len(inputs)} exceeds the advertised "
                    f"maximum of {settings.max_batch}"
                },
            )
        return None

    @app.get("/health")
    def health():
        if state.status == "ok":
            return {"status": "ok"}
        content = {"status": state.status}
        if state.reason:
            content["reason"] = state.reason
        return JSONResponse(status_code=503, content=content)

    @app.post("/generate")
    def generate(request: GenerateRequest):
        rejected = batch_too_large(request.inputs)
        if rejected is not None:
            return rejected
        not_ready = state.ensure_ready()
        if not_ready is not None:
            return not_ready
        with state.lock:
            outputs = state.engine.generate(
                request.inputs, request.beam, request.max_length
            )
        return {"outputs": outputs}

    @app.post("/classify")
    def classify(request: ClassifyRequest):
        rejected = batch_too_large(request.inputs)
        if rejected is not None:
            return rejected
        not_ready = state.ensure_ready()
        if not_ready is not None:
            return not_ready
        with state.lock:
            scores = state.engine.classify(request.inputs)
        return {"scores": scores}

    return app
