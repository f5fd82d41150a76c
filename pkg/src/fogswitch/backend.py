"""HTTP service exposing ``POST /cluster`` on one (possibly impersonated) machine."""
from __future__ import annotations

import json
import time

from .domain import ClusterRequest, MachineProfile, extract_features
from .errors import BadRequest, RequestError
from .fogsim import RtModelParams, analytic_rt
from .kmeans import check_request, kmeans_cluster
from .web import JsonHandler, Service, dumps

REAL = "real"
SIMULATED_DELAY = "simulated-delay"
MODES = (REAL, SIMULATED_DELAY)


def handle_cluster(body: bytes):
    """Run one clustering request; returns (status, response body, request)."""
    try:
        try:
            obj = json.loads(body)
        except ValueError:
            raise BadRequest("body is not valid JSON") from None
        req = ClusterRequest.from_json(obj)
        check_request(req)
        extract_features(req)
        result = kmeans_cluster(req)
    except RequestError as e:
        return 400, dumps({"error": e.code}), None
    return 200, dumps(result.to_json()), req


class BackendHandler(JsonHandler):
    def do_POST(self):
        if self.path.rstrip("/") != "/cluster":
            return self.send_error_code(404, "NotFound")
        start = time.perf_counter()
        try:
            body = self.read_body()
        except ValueError:
            return self.send_error_code(413, "PayloadTooLarge")
        status, payload, req = handle_cluster(body)
        srv = self.server
        if status == 200 and srv.mode == SIMULATED_DELAY:
            target_ms = analytic_rt(extract_features(req), srv.machine, srv.rt_params)
            remaining = target_ms / 1000.0 - (time.perf_counter() - start)
            if remaining > 0:
                time.sleep(remaining)
        self.send_body(status, payload)

    def do_GET(self):
        if self.path.rstrip("/") == "/health":
            srv = self.server
            return self.send_json(200, {"machine": srv.machine.id, "tier": srv.machine.tier.value, "mode": srv.mode})
        self.send_error_code(404, "NotFound")


def serve_backend(host: str, port: int, machine: MachineProfile, mode: str = REAL,
                  rt_params: RtModelParams = RtModelParams()) -> Service:
    """Bind (but do not start) a k-means back-end; call ``.start()`` or ``.serve_forever()``.

    In ``simulated-delay`` mode every successful response is held back until
    ``analytic_rt`` for the request on ``machine`` has elapsed.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    return Service.bind(BackendHandler, host, port, machine=machine, mode=mode, rt_params=rt_params)
