import json
import urllib.error
import urllib.request

import pytest

from fogswitch.backend import REAL, handle_cluster, serve_backend
from fogswitch.domain import ClusterRequest, ServiceInstance
from fogswitch.errors import BindFailure, ConnectionRefused, ModelLoadFailure, Timeout, UpstreamError
from fogswitch.fogsim import default_machines
from fogswitch.proxy import (
    INSTANCE_HEADER,
    PREDICTED_HEADER,
    DecisionLog,
    forward,
    self_backend_serve,
)
from fogswitch.web import dumps

from conftest import FAST, constant_model

BODY = dumps(ClusterRequest(2, 20, [[0, 0], [0, 1], [10, 10], [10, 11], [5, 5]], seed=3).to_json())


def post(url, body):
    req = urllib.request.Request(url, data=body, method="POST", headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req, timeout=10) as r:
            return r.status, dict(r.headers), r.read()
    except urllib.error.HTTPError as e:
        return e.code, dict(e.headers), e.read()


def get(url):
    with urllib.request.urlopen(url, timeout=10) as r:
        return json.loads(r.read())


def test_handle_cluster_codes():
    assert handle_cluster(BODY)[0] == 200
    status, body, _ = handle_cluster(b'{"k":3,"it":1,"points":[[1],[2]]}')
    assert (status, json.loads(body)) == (400, {"error": "KTooLarge"})
    assert json.loads(handle_cluster(b"{nope")[1]) == {"error": "BadRequest"}
    assert json.loads(handle_cluster(b'{"k":1,"it":1,"points":[[1],[1,2]]}')[1]) == {"error": "RaggedDataset"}
    assert json.loads(handle_cluster(b'{"k":1,"it":1,"points":[]}')[1]) == {"error": "EmptyDataset"}


def test_backend_serves_and_is_deterministic(live_pair):
    edge, remote = live_pair
    s1, _, b1 = post(edge.uri, BODY)
    s2, _, b2 = post(remote.uri, BODY)
    assert s1 == s2 == 200
    assert b1 == b2
    res = json.loads(b1)
    assert set(res) == {"centroids", "assignments", "iterations_run", "inertia"}
    assert len(res["centroids"]) == 2 and len(res["assignments"]) == 5


def test_backend_rejects_k_too_large(live_pair):
    status, _, body = post(live_pair[0].uri, b'{"k":9,"it":1,"points":[[1,2]]}')
    assert status == 400
    assert json.loads(body) == {"error": "KTooLarge"}


def test_backend_health(live_pair):
    base = live_pair[1].uri.rsplit("/", 1)[0]
    assert get(base + "/health") == {"machine": "remote0", "tier": "remote", "mode": "simulated-delay"}


def test_bind_conflict():
    with serve_backend("127.0.0.1", 0, default_machines()[0], REAL) as s:
        with pytest.raises(BindFailure):
            serve_backend("127.0.0.1", s.port, default_machines()[0], REAL)


def test_forward_is_transparent(live_pair):
    for inst in live_pair:
        assert forward(BODY, inst) == post(inst.uri, BODY)[2]


def test_forward_dead_endpoint():
    dead = ServiceInstance("edge0", "http://127.0.0.1:9/cluster", default_machines()[0])
    with pytest.raises(ConnectionRefused) as exc:
        forward(BODY, dead, timeout_ms=2000)
    assert exc.value.instance_id == "edge0"


def test_forward_upstream_error(live_pair):
    with pytest.raises(UpstreamError) as exc:
        forward(b'{"k":9,"it":1,"points":[[1,2]]}', live_pair[0])
    assert exc.value.status == 400
    assert json.loads(exc.value.body) == {"error": "KTooLarge"}
    assert exc.value.instance_id == "edge0"


def test_forward_timeout():
    slow_machine = default_machines()[1]
    with serve_backend("127.0.0.1", 0, slow_machine, "simulated-delay") as s:
        inst = ServiceInstance("remote0", f"{s.url}/cluster", slow_machine)
        # default rt params put ~55 ms on this tiny request
        with pytest.raises(Timeout):
            forward(BODY, inst, timeout_ms=5)


@pytest.fixture
def proxy(live_pair):
    models = {"edge0": constant_model(30.0), "remote0": constant_model(20.0)}
    svc = self_backend_serve("127.0.0.1", 0, models, live_pair).start()
    yield svc, live_pair
    svc.stop()


def test_proxy_routes_to_minimum(proxy):
    svc, (edge, remote) = proxy
    status, headers, body = post(svc.url + "/cluster", BODY)
    assert status == 200
    assert headers[INSTANCE_HEADER] == "remote0"
    assert json.loads(headers[PREDICTED_HEADER]) == {"edge0": 30.0, "remote0": 20.0}
    assert headers[PREDICTED_HEADER] == '{"edge0":30.0,"remote0":20.0}'
    assert body == post(remote.uri, BODY)[2]


def test_proxy_rejects_before_planning(proxy):
    svc, _ = proxy
    status, headers, body = post(svc.url + "/cluster", b'{"k":9,"it":1,"points":[[1,2]]}')
    assert status == 400
    assert INSTANCE_HEADER not in headers
    assert json.loads(body) == {"error": "KTooLarge"}
    assert get(svc.url + "/decisions") == []


def test_proxy_health_and_decisions(proxy):
    svc, _ = proxy
    assert get(svc.url + "/health") == {"instances": 2, "kind": "knn"}
    post(svc.url + "/cluster", BODY)
    log = get(svc.url + "/decisions")
    assert len(log) == 1
    assert log[0]["chosen_instance_id"] == "remote0"
    assert log[0]["features"] == {"k": 2, "it": 20, "n": 5, "d": 2}
    assert log[0]["kind"] == "knn"


def test_proxy_dead_instance_gives_502():
    edge, remote = default_machines()
    insts = [ServiceInstance("edge0", "http://127.0.0.1:9/cluster", edge)]
    with self_backend_serve("127.0.0.1", 0, {"edge0": constant_model(1.0)}, insts) as svc:
        status, headers, body = post(svc.url + "/cluster", BODY)
    assert status == 502
    assert headers[INSTANCE_HEADER] == "edge0"
    assert json.loads(body) == {"error": "ConnectionRefused", "instance": "edge0"}


def test_proxy_needs_every_model(live_pair):
    with pytest.raises(ModelLoadFailure):
        self_backend_serve("127.0.0.1", 0, {"edge0": constant_model(1.0)}, live_pair)
    with pytest.raises(ModelLoadFailure):
        self_backend_serve("127.0.0.1", 0, {}, [])


def test_decision_log_ring_buffer():
    log = DecisionLog(size=3)
    for i in range(5):
        log.append(i)
    assert log.snapshot() == [2, 3, 4]


def test_simulated_delay_floor(live_pair):
    import time
    from fogswitch.fogsim import analytic_rt
    from fogswitch.domain import extract_features
    big = dumps(ClusterRequest(5, 50, [[float(i), float(i % 7)] for i in range(3000)], seed=1).to_json())
    target = analytic_rt(extract_features(ClusterRequest.from_json(json.loads(big))), live_pair[0].machine, FAST)
    start = time.perf_counter()
    assert post(live_pair[0].uri, big)[0] == 200
    assert (time.perf_counter() - start) * 1000 >= target


def test_broken_model_gives_500_and_service_survives(live_pair):
    models = {"edge0": constant_model(float("nan")), "remote0": constant_model(5.0)}
    with self_backend_serve("127.0.0.1", 0, models, live_pair) as svc:
        status, _, body = post(svc.url + "/cluster", BODY)
        assert (status, json.loads(body)) == (500, {"error": "MalformedModel"})
        assert get(svc.url + "/health")["instances"] == 2
