"""HTTP gateway: scan endpoint plus a fail-closed filtering proxy.

The service loads every artifact before it starts accepting connections and
keeps them immutable, so request handling never performs I/O beyond the
judge/upstream calls. In PROXY mode the scanned text is the concatenation of
user-role message contents; a prompt whose combined verdict is INJECTED is
answered 403 and never forwarded upstream - including when the pipeline
itself fails mid-request.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import logging
import time
from dataclasses import dataclass

import httpx
from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .pipeline import ConfigurationError, Pipeline, PipelineConfig
from .verdicts import CombinedVerdict, Decision

access_log = logging.getLogger("palisade.gateway.access")

DEFAULT_LISTEN = "127.0.0.1:8600"
DEFAULT_TIME_BUDGET_S = 30.0

# Hop-by-hop headers never relayed in either direction.
_HOP_HEADERS = {
    "connection", "keep-alive", "proxy-authenticate", "proxy-authorization",
    "te", "trailers", "transfer-encoding", "upgrade", "host", "content-length",
}


@dataclass
class GatewayConfig:
    listen: str = DEFAULT_LISTEN
    mode: str = "SCAN_ONLY"  # SCAN_ONLY | PROXY
    upstream_url: str | None = None
    time_budget_s: float = DEFAULT_TIME_BUDGET_S
    log_path: str | None = None

    def __post_init__(self):
        if self.mode not in ("SCAN_ONLY", "PROXY"):
            raise ConfigurationError(f"unknown gateway mode {self.mode!r}")
        if self.mode == "PROXY" and not self.upstream_url:
            raise ConfigurationError("PROXY mode requires an upstream URL")
        if self.time_budget_s <= 0:
            raise ConfigurationError("time budget must be positive")

    @classmethod
    def from_dict(cls, doc: dict) -> "GatewayConfig":
        return cls(
            listen=doc.get("listen", DEFAULT_LISTEN),
            mode=doc.get("mode", "SCAN_ONLY"),
            upstream_url=doc.get("upstream_url"),
            time_budget_s=doc.get("time_budget_s", DEFAULT_TIME_BUDGET_S),
            log_path=doc.get("log_path"),
        )


def load_config(path) -> tuple[PipelineConfig, GatewayConfig]:
    """Read the shared JSON config file ({"pipeline": ..., "gateway": ...})."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    pipeline_doc = doc.get("pipeline", doc)
    pipeline_config = PipelineConfig.from_dict(pipeline_doc)
    gateway_config = GatewayConfig.from_dict(doc.get("gateway", {}))
    if gateway_config.mode == "PROXY" and "fast_block" not in pipeline_doc:
        pipeline_config.fast_block = True  # latency beats per-layer reporting in PROXY
    if (
        pipeline_config.judge_enabled
        and gateway_config.time_budget_s < pipeline_config.judge.timeout_s
    ):
        raise ConfigurationError(
            "per-request time budget must be >= the judge timeout when the judge is enabled"
        )
    return pipeline_config, gateway_config


class ScanRequest(BaseModel):
    prompt: str = Field(min_length=1)


class LayerEntry(BaseModel):
    layer: str
    decision: str
    score: float | None
    latency_ms: float


class ScanResponse(BaseModel):
    injected: bool
    layers: list[LayerEntry]
    latency_ms: float


class BlockResponse(BaseModel):
    blocked: bool = True
    layers: list[LayerEntry]


class HealthResponse(BaseModel):
    status: str
    artifacts_loaded: bool
    judge_reachable: bool | None


def _layer_entries(verdict: CombinedVerdict) -> list[LayerEntry]:
    return [
        LayerEntry(
            layer=v.layer.value,
            decision=v.decision.value,
            score=v.score,
            latency_ms=round(v.latency_s * 1000.0, 3),
        )
        for v in verdict.verdicts
    ]


def _log_request(event: str, verdict: CombinedVerdict | None, text: str, status: int) -> None:
    # One structured line per request; prompt text stays out, its hash goes in.
    entry = {
        "event": event,
        "status": status,
        "prompt_sha256": hashlib.sha256(text.encode("utf-8")).hexdigest()[:16],
        "injected": verdict.injected if verdict else None,
        "layers": {v.layer.value: v.decision.value for v in verdict.verdicts} if verdict else {},
        "latency_ms": round(verdict.total_latency_s * 1000.0, 3) if verdict else None,
    }
    access_log.info("%s", json.dumps(entry, sort_keys=True))


def create_app(
    pipeline_config: PipelineConfig, gateway_config: GatewayConfig | None = None
) -> FastAPI:
    """Build the service; artifact loading happens here, not per-request."""
    gateway_config = gateway_config or GatewayConfig()
    pipeline = Pipeline(pipeline_config)  # ConfigurationError -> no app, no server
    app = FastAPI(title="palisade gateway", version="0.1.0")
    # Worker pool for enforcing the per-request detection budget.
    executor = concurrent.futures.ThreadPoolExecutor(max_workers=32)

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": "malformed request body"})

    def _scan(text: str) -> CombinedVerdict:
        future = executor.submit(pipeline.evaluate_prompt, text)
        return future.result(timeout=gateway_config.time_budget_s)

    @app.post("/v1/scan", response_model=ScanResponse)
    def scan_endpoint(body: ScanRequest) -> ScanResponse:
        try:
            verdict = _scan(body.prompt)
        except Exception:  # fail closed, never report clean on an engine error
            _log_request("scan_failsafe", None, body.prompt, 200)
            return ScanResponse(injected=True, layers=[], latency_ms=0.0)
        response = ScanResponse(
            injected=verdict.injected,
            layers=_layer_entries(verdict),
            latency_ms=round(verdict.total_latency_s * 1000.0, 3),
        )
        _log_request("scan", verdict, body.prompt, 200)
        return response

    @app.post("/v1/chat")
    async def proxy_endpoint(request: Request) -> Response:
        if gateway_config.mode != "PROXY":
            return JSONResponse(status_code=404, content={"error": "proxy mode disabled"})
        raw = await request.body()
        try:
            body = json.loads(raw)
            messages = body["messages"]
            if not isinstance(messages, list):
                raise TypeError
        except (json.JSONDecodeError, KeyError, TypeError, UnicodeDecodeError):
            return JSONResponse(status_code=400, content={"error": "malformed chat body"})
        scanned_text = "\n".join(
            m.get("content", "")
            for m in messages
            if isinstance(m, dict) and m.get("role") == "user" and isinstance(m.get("content"), str)
        )

        try:
            verdict = _scan(scanned_text)
            blocked = verdict.injected
        except Exception:
            verdict, blocked = None, True  # pipeline failure blocks, never forwards

        if blocked:
            layers = _layer_entries(verdict) if verdict else []
            _log_request("chat_blocked", verdict, scanned_text, 403)
            return JSONResponse(
                status_code=403,
                content={"blocked": True, "layers": [e.model_dump() for e in layers]},
            )

        headers = {
            k: v for k, v in request.headers.items() if k.lower() not in _HOP_HEADERS
        }
        try:
            async with httpx.AsyncClient() as client:
                upstream = await client.post(
                    gateway_config.upstream_url,
                    content=raw,
                    headers=headers,
                    timeout=gateway_config.time_budget_s,
                )
        except httpx.HTTPError as exc:
            _log_request("chat_upstream_error", verdict, scanned_text, 502)
            return JSONResponse(status_code=502, content={"error": f"upstream unreachable: {exc}"})

        relay_headers = {
            k: v for k, v in upstream.headers.items() if k.lower() not in _HOP_HEADERS
        }
        _log_request("chat_forwarded", verdict, scanned_text, upstream.status_code)
        return Response(
            content=upstream.content,
            status_code=upstream.status_code,
            headers=relay_headers,
        )

    @app.get("/healthz", response_model=HealthResponse)
    def health_endpoint() -> HealthResponse:
        judge_reachable: bool | None = None
        if pipeline_config.judge_enabled and pipeline.judge_config is not None:
            if pipeline_config.judge.mode == "stub":
                judge_reachable = True
            else:
                try:
                    httpx.get(
                        pipeline.judge_config.endpoint,
                        timeout=min(2.0, pipeline.judge_config.timeout_s),
                    )
                    judge_reachable = True
                except httpx.HTTPError:
                    judge_reachable = False
        return HealthResponse(status="ok", artifacts_loaded=True, judge_reachable=judge_reachable)

    return app


def parse_listen(listen: str) -> tuple[str, int]:
    host, _, port = listen.rpartition(":")
    if not host or not port.isdigit():
        raise ConfigurationError(f"listen address must be host:port, got {listen!r}")
    return host, int(port)


def serve(config_path: str, listen_override: str | None = None) -> None:
    """Load config, build the app, run uvicorn (blocking)."""
    import uvicorn

    pipeline_config, gateway_config = load_config(config_path)
    if listen_override:
        gateway_config.listen = listen_override
    if gateway_config.log_path:
        handler = logging.FileHandler(gateway_config.log_path)
        handler.setFormatter(logging.Formatter("%(message)s"))
        access_log.addHandler(handler)
        access_log.setLevel(logging.INFO)
    app = create_app(pipeline_config, gateway_config)
    host, port = parse_listen(gateway_config.listen)
    uvicorn.run(app, host=host, port=port, log_level="warning")
