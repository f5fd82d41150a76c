"""Execution mechanism and the self-back-end service.

The self-back-end exposes the same ``POST /cluster`` API as the back-end
instances. Each request is planned locally (no network I/O) and then forwarded,
body untouched, to the chosen instance; the instance's response is relayed
verbatim with two extra headers naming the decision.
"""
from __future__ import annotations

import json
import logging
import socket
import threading
import urllib.error
import urllib.request
from collections import deque
from typing import Mapping

from .domain import ClusterRequest, ServiceInstance, extract_features
from .errors import BadRequest, ConnectionRefused, ModelLoadFailure, RequestError, Timeout, UpstreamError
from .kmeans import check_request
from .planner import SwitchingDecision, by_id, plan
from .predictors import TrainedModel
from .web import JsonHandler, Service, dumps

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT_MS = 30_000
DECISION_LOG_SIZE = 1024
INSTANCE_HEADER = "X-Fogswitch-Instance"
PREDICTED_HEADER = "X-Fogswitch-Predicted-Ms"


def forward(body: bytes, instance: ServiceInstance, timeout_ms: float = DEFAULT_TIMEOUT_MS) -> bytes:
    """POST ``body`` to the instance and return its response body unchanged."""
    if isinstance(body, ClusterRequest):
        body = dumps(body.to_json())
    req = urllib.request.Request(instance.uri, data=body, method="POST",
                                 headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req, timeout=timeout_ms / 1000.0) as resp:
            return resp.read()
    except urllib.error.HTTPError as e:
        raise UpstreamError(instance.id, e.code, e.read()) from None
    except (socket.timeout, TimeoutError) as e:
        raise Timeout(instance.id, f"no response within {timeout_ms} ms") from e
    except urllib.error.URLError as e:
        if isinstance(e.reason, (socket.timeout, TimeoutError)):
            raise Timeout(instance.id, f"no response within {timeout_ms} ms") from e
        raise ConnectionRefused(instance.id, f"cannot reach {instance.uri}: {e.reason}") from e
    except OSError as e:
        raise ConnectionRefused(instance.id, f"connection to {instance.uri} failed: {e}") from e


class DecisionLog:
    """Ring buffer of the most recent switching decisions."""

    def __init__(self, size: int = DECISION_LOG_SIZE):
        self._items = deque(maxlen=size)
        self._lock = threading.Lock()

    def append(self, decision: SwitchingDecision):
        with self._lock:
            self._items.append(decision)

    def snapshot(self) -> list[SwitchingDecision]:
        with self._lock:
            return list(self._items)


def predicted_header(decision: SwitchingDecision) -> str:
    rts = decision.predicted_rts
    return json.dumps({k: rts[k] for k in sorted(rts)}, separators=(",", ":"))


class ProxyHandler(JsonHandler):
    def do_GET(self):
        srv = self.server
        path = self.path.rstrip("/")
        if path == "/health":
            return self.send_json(200, {"instances": len(srv.instances), "kind": srv.kind})
        if path == "/decisions":
            return self.send_json(200, [d.to_json() for d in srv.decisions.snapshot()])
        self.send_error_code(404, "NotFound")

    def do_POST(self):
        if self.path.rstrip("/") != "/cluster":
            return self.send_error_code(404, "NotFound")
        srv = self.server
        try:
            body = self.read_body()
        except ValueError:
            return self.send_error_code(413, "PayloadTooLarge")
        try:
            try:
                obj = json.loads(body)
            except ValueError:
                raise BadRequest("body is not valid JSON") from None
            req = ClusterRequest.from_json(obj)
            check_request(req)
            features = extract_features(req)
        except RequestError as e:
            return self.send_error_code(400, e.code)

        try:
            decision = plan(features, srv.models, srv.instances)
        except Exception as e:  # a broken model must not take the service down
            log.exception("planning failed")
            return self.send_error_code(500, type(e).__name__)
        srv.decisions.append(decision)
        chosen = srv.instances[decision.chosen_instance_id]
        headers = {INSTANCE_HEADER: chosen.id, PREDICTED_HEADER: predicted_header(decision)}
        try:
            payload = forward(body, chosen, srv.timeout_ms)
        except UpstreamError as e:
            return self.send_body(e.status, e.body, headers)
        except Timeout as e:
            return self.send_json(504, {"error": e.code, "instance": e.instance_id}, headers)
        except ConnectionRefused as e:
            return self.send_json(502, {"error": e.code, "instance": e.instance_id}, headers)
        self.send_body(200, payload, headers)


def self_backend_serve(host: str, port: int, models: Mapping[str, TrainedModel], instances,
                       timeout_ms: float = DEFAULT_TIMEOUT_MS) -> Service:
    """Bind (but do not start) the self-back-end over a frozen model map."""
    table = by_id(instances)
    if not table:
        raise ModelLoadFailure("no instances configured")
    missing = sorted(set(table) - set(models))
    if missing:
        raise ModelLoadFailure(f"no trained model for instances {missing}")
    models = {iid: models[iid] for iid in sorted(table)}
    kinds = {m.kind.value for m in models.values()}
    return Service.bind(
        ProxyHandler, host, port,
        models=models,
        instances=table,
        kind=",".join(sorted(kinds)),
        timeout_ms=timeout_ms,
        decisions=DecisionLog(),
    )
