"""HTTP surface: configuration discovery, linking, health, and static
serving of the web console.

Responses are deterministic for identical requests against identical
resources (hermetic backends assumed): no timestamps or timings appear
in bodies, and ranked distances use fixed 6-decimal formatting. Every
error body carries a stable machine ``code`` plus a human ``message``.
"""
from __future__ import annotations

import json
import os
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .errors import (
    ConfigError,
    EmptyQueryError,
    InvalidKError,
    LinkerError,
    RemoteUnavailableError,
    ResourceMissingError,
    SpanParseError,
)
from .kgembed import EmbeddingKind
from .pipeline import (
    LinkMode,
    LinkRequest,
    LinkResult,
    Resources,
    link,
    load_resources,
)

HOST_ENV = "SCHOLARLINK_HOST"
PORT_ENV = "SCHOLARLINK_PORT"

DEFAULT_SAMPLE_QUESTIONS = [
    "Who were the co-authors of Ashish Vaswani in the paper 'Attention is all you need'?",
    "Who wrote the paper 'Efficient Parsing for Dependency Graphs'?",
]


@dataclass
class ServiceConfig:
    """Validated service settings, usually loaded from a JSON file."""

    resource_dir: Path
    host: str = "127.0.0.1"
    port: int = 8080
    sample_questions: list[str] = field(default_factory=lambda: list(DEFAULT_SAMPLE_QUESTIONS))
    span_remotes: dict[str, str] = field(default_factory=dict)
    timeout: float = 10.0
    default_k: int = 10
    duplicate_rule: str = "top"
    similarity_scope: str = "question"
    console_dir: Path | None = None

    def __post_init__(self) -> None:
        if not 1 <= self.port <= 65535:
            raise ConfigError(f"port {self.port} outside [1, 65535]")
        if self.duplicate_rule not in ("top", "any"):
            raise ConfigError(f"duplicate_rule must be 'top' or 'any', got {self.duplicate_rule!r}")
        if self.similarity_scope not in ("question", "span"):
            raise ConfigError(
                f"similarity_scope must be 'question' or 'span', got {self.similarity_scope!r}"
            )


_CONFIG_KEYS = {
    "resources",
    "host",
    "port",
    "sample_questions",
    "span_remotes",
    "timeout",
    "default_k",
    "duplicate_rule",
    "similarity_scope",
    "console_dir",
}


def load_service_config(path: str | Path) -> ServiceConfig:
    """Parse a JSON config file; relative paths resolve against the
    file's directory."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"config root in {path} must be an object")
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    if "resources" not in raw or not isinstance(raw["resources"], str):
        raise ConfigError("config needs a 'resources' directory path")
    base = path.parent

    def _path(value: str) -> Path:
        p = Path(value)
        return p if p.is_absolute() else base / p

    kwargs: dict = {"resource_dir": _path(raw["resources"])}
    if "host" in raw:
        kwargs["host"] = str(raw["host"])
    if "port" in raw:
        if not isinstance(raw["port"], int) or isinstance(raw["port"], bool):
            raise ConfigError("port must be an integer")
        kwargs["port"] = raw["port"]
    if "sample_questions" in raw:
        qs = raw["sample_questions"]
        if not isinstance(qs, list) or not all(isinstance(q, str) for q in qs):
            raise ConfigError("sample_questions must be a list of strings")
        kwargs["sample_questions"] = qs
    if "span_remotes" in raw:
        sr = raw["span_remotes"]
        if not isinstance(sr, dict) or not all(
            isinstance(k, str) and isinstance(v, str) for k, v in sr.items()
        ):
            raise ConfigError("span_remotes must map model names to endpoint URLs")
        kwargs["span_remotes"] = sr
    if "timeout" in raw:
        kwargs["timeout"] = float(raw["timeout"])
    if "default_k" in raw:
        if not isinstance(raw["default_k"], int) or isinstance(raw["default_k"], bool):
            raise ConfigError("default_k must be an integer")
        kwargs["default_k"] = raw["default_k"]
    if "duplicate_rule" in raw:
        kwargs["duplicate_rule"] = str(raw["duplicate_rule"])
    if "similarity_scope" in raw:
        kwargs["similarity_scope"] = str(raw["similarity_scope"])
    if "console_dir" in raw and raw["console_dir"] is not None:
        kwargs["console_dir"] = _path(str(raw["console_dir"]))
    return ServiceConfig(**kwargs)


def resources_from_config(config: ServiceConfig) -> Resources:
    return load_resources(
        config.resource_dir,
        remotes=config.span_remotes,
        timeout=config.timeout,
        default_k=config.default_k,
        duplicate_rule=config.duplicate_rule,
        similarity_scope=config.similarity_scope,
    )


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


def link_result_json(result: LinkResult) -> dict:
    """Canonical wire form shared by the API and the CLI. Timing is
    deliberately left out so identical requests serialize identically."""
    spans = []
    for s in result.spans:
        spans.append(
            {
                "text": s.span.label_text,
                "type": str(s.span.etype),
                "disambiguation_ran": s.disambiguation_ran,
                "distance_kind": s.distance_kind,
                "error": s.error,
                "entities": [
                    {
                        "uri": e.uri,
                        "label": e.matched_label,
                        "type": str(e.etype),
                        "distance": f"{e.distance:.6f}",
                        "url": e.uri,
                    }
                    for e in s.ranked
                ],
            }
        )
    req = result.request
    return {
        "question": req.question,
        "span_model": req.span_model,
        "mode": req.mode.value,
        "embedding": req.embedding.value if req.embedding else None,
        "spans": spans,
    }


def create_app(
    resources: Resources | None = None,
    sample_questions: list[str] | None = None,
    console_dir: Path | None = None,
    lifespan=None,
) -> FastAPI:
    """Build the app. ``resources=None`` starts in the 'loading' health
    state; assign ``app.state.resources`` once they are ready."""
    app = FastAPI(title="scholarlink", docs_url=None, redoc_url=None, lifespan=lifespan)
    app.state.resources = resources
    app.state.sample_questions = list(
        sample_questions if sample_questions is not None else DEFAULT_SAMPLE_QUESTIONS
    )

    @app.get("/api/health")
    def health() -> dict:
        status = "ok" if app.state.resources is not None else "loading"
        return {"status": status}

    @app.get("/api/config")
    def config():
        res: Resources | None = app.state.resources
        if res is None:
            return _error(500, "not_loaded", "resources are not loaded yet")
        return {
            "span_models": list(res.detectors),
            "embeddings": [kind.value for kind in EmbeddingKind if kind in res.embeddings],
            "modes": [mode.value for mode in LinkMode],
            "sample_questions": app.state.sample_questions,
        }

    @app.post("/api/link")
    async def link_endpoint(request: Request):
        res: Resources | None = app.state.resources
        if res is None:
            return _error(500, "not_loaded", "resources are not loaded yet")
        try:
            body = await request.json()
        except Exception:
            return _error(400, "bad_body", "request body is not valid JSON")
        if not isinstance(body, dict):
            return _error(400, "bad_body", "request body must be a JSON object")
        question = body.get("question")
        if not isinstance(question, str) or not question.strip():
            return _error(400, "bad_body", "'question' must be a non-empty string")
        span_model = body.get("span_model")
        if not isinstance(span_model, str):
            return _error(400, "bad_body", "'span_model' must be a string")
        if span_model not in res.detectors:
            return _error(422, "unknown_span_model", f"unknown span model {span_model!r}")
        mode_name = body.get("mode", LinkMode.CONDITIONAL.value)
        try:
            mode = LinkMode(mode_name)
        except ValueError:
            return _error(422, "unknown_mode", f"unknown mode {mode_name!r}")
        embedding = None
        if body.get("embedding") is not None:
            try:
                embedding = EmbeddingKind(body["embedding"])
            except ValueError:
                return _error(422, "unknown_embedding", f"unknown embedding {body['embedding']!r}")
        k = body.get("k")
        if k is not None and (not isinstance(k, int) or isinstance(k, bool)):
            return _error(400, "bad_body", "'k' must be an integer")
        req = LinkRequest(
            question=question, span_model=span_model, mode=mode, embedding=embedding, k=k
        )
        try:
            result = link(res, req)
        except (InvalidKError, EmptyQueryError) as exc:
            return _error(400, exc.code, str(exc))
        except ResourceMissingError as exc:
            return _error(422, exc.code, str(exc))
        except RemoteUnavailableError as exc:
            return _error(502, exc.code, str(exc))
        except SpanParseError as exc:
            return _error(502, exc.code, str(exc))
        except LinkerError as exc:
            return _error(500, "internal", str(exc))
        return link_result_json(result)

    if console_dir is not None and Path(console_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(console_dir), html=True), name="console")

    return app


def app_from_config(config: ServiceConfig, defer_load: bool = False) -> FastAPI:
    """App wired to a config file. With ``defer_load`` the resources load
    on startup (health reports 'loading' until then); otherwise loading
    happens here and failures raise immediately."""
    if defer_load:

        @asynccontextmanager
        async def _lifespan(app: FastAPI):
            app.state.resources = resources_from_config(config)
            yield

        return create_app(None, config.sample_questions, config.console_dir, lifespan=_lifespan)
    return create_app(resources_from_config(config), config.sample_questions, config.console_dir)


def serve(config: ServiceConfig) -> None:
    """Run uvicorn; host/port may be overridden by environment."""
    import uvicorn

    host = os.environ.get(HOST_ENV, config.host)
    port = int(os.environ.get(PORT_ENV, config.port))
    app = app_from_config(config)
    uvicorn.run(app, host=host, port=port, log_level="info")
