"""Text-to-text backends the parsing pipeline can generate through.

The wire protocol an HTTP backend must speak:

* ``POST /generate`` with ``{"inputs": [...], "beam": int, "max_length": int}``
  returns ``{"outputs": [...]}``, outputs parallel to inputs;
* ``POST /classify`` with ``{"inputs": [...]}`` returns ``{"scores": [...]}``;
* ``GET /health`` returns 200 ``{"status": "ok"}`` when ready.

EchoBackend answers every generate request with its inputs (protocol
smoke tests); GoldReplayBackend replays gold annotations keyed by the
exact encoded source string (deterministic end-to-end tests).
"""

from __future__ import annotations

from typing import Iterable, Optional, Protocol, Sequence

import requests

from . import codec, datasets


class BackendProtocolError(RuntimeError):
    """The backend answered outside the wire protocol."""


class Backend(Protocol):
    def generate(self, inputs: Sequence[str], beam: int, max_length: int) -> list[str]:
        ...

    def classify(self, inputs: Sequence[str]) -> list[float]:
        ...

    def health(self) -> bool:
        ...


class EchoBackend:
    """Returns inputs as outputs; classification scores are all 1.0."""

    def generate(self, inputs: Sequence[str], beam: int, max_length: int) -> list[str]:
        return list(inputs)

    def classify(self, inputs: Sequence[str]) -> list[float]:
        return [1.0] * len(inputs)

    def health(self) -> bool:
        return True


class HttpBackend:
    def __init__(self, base_url: str, timeout: float = 60.0, session=None):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self._session = session or requests.Session()

    def _post(self, endpoint: str, payload: dict) -> dict:
        response = self._session.post(
            f"{self.base_url}{endpoint}", json=payload, timeout=self.timeout
        )
        response.raise_for_status()
        return response.json()

    def generate(self, inputs: Sequence[str], beam: int, max_length: int) -> list[str]:
        payload = {"inputs": list(inputs), "beam": beam, "max_length": max_length}
        data = self._post("/generate", payload)
        outputs = data.get("outputs")
        if not isinstance(outputs, list) or len(outputs) != len(inputs):
            raise BackendProtocolError(f"bad /generate response: {data!r}")
        return [str(o) for o in outputs]

    def classify(self, inputs: Sequence[str]) -> list[float]:
        data = self._post("/classify", {"inputs": list(inputs)})
        scores = data.get("scores")
        if not isinstance(scores, list) or len(scores) != len(inputs):
            raise BackendProtocolError(f"bad /classify response: {data!r}")
        return [float(s) for s in scores]

    def health(self) -> bool:
        try:
            response = self._session.get(
                f"{self.base_url}/health", timeout=self.timeout
            )
        except requests.RequestException:
            return False
        return response.status_code == 200 and response.json().get("status") == "ok"


class GoldReplayBackend:
    """Replays gold targets for known source strings, "" for unknown ones.

    Classification scores come from the gold predicate flags, so negative
    nominal candidates score 0.0.
    """

    def __init__(self, generate_map: dict[str, str], classify_map: Optional[dict[str, float]] = None):
        self.generate_map = dict(generate_map)
        self.classify_map = dict(classify_map or {})

    @classmethod
    def from_records(
        cls,
        records: Iterable[datasets.DatasetRecord],
        encoding: Optional[codec.InputEncodingConfig] = None,
        discourse_prefix: str = codec.DISCOURSE_TASK_PREFIX,
    ) -> "GoldReplayBackend":
        cfg = encoding or codec.InputEncodingConfig()
        generate_map: dict[str, str] = {}
        classify_map: dict[str, float] = {}
        discourse: dict[str, list[datasets.DatasetRecord]] = {}
        for record in records:
            if record.task == "discourse":
                discourse.setdefault(record.sentence_id, []).append(record)
                continue
            source = codec.encode_input(
                record.tokens, record.predicate_index, record.verb_form or "", cfg
            )
            classify_map[source] = 1.0 if record.is_predicate is not False else 0.0
            if record.is_predicate is not False:
                generate_map[source] = codec.linearize_output(
                    list(record.qas), record.task
                )
        for sentence_id, group in discourse.items():
            source = codec.encode_sentence_input(group[0].tokens, discourse_prefix)
            qas = [qa for record in group for qa in record.qas]
            generate_map[source] = codec.linearize_output(qas, "discourse")
        return cls(generate_map, classify_map)

    def generate(self, inputs: Sequence[str], beam: int, max_length: int) -> list[str]:
        return [self.generate_map.get(source, "") for source in inputs]

    def classify(self, inputs: Sequence[str]) -> list[float]:
        return [self.classify_map.get(source, 0.0) for source in inputs]

    def health(self) -> bool:
        return True


def backend_from_spec(spec: str) -> Backend:
    """Build a backend from a CLI string.

    "echo" gives the echo backend, "replay:PATH" replays a canonical
    gold JSONL file, anything else is treated as an HTTP base URL.
    """
    if spec == "echo":
        return EchoBackend()
    if spec.startswith("replay:"):
        path = spec.split(":", 1)[1]
        records = list(datasets.load_dataset(path))
        return GoldReplayBackend.from_records(records)
    return HttpBackend(spec)
