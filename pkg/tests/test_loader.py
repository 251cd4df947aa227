import random
import socket
import threading
import time
from collections import OrderedDict

import pytest

from tool_attention.attention import build_attention
from tool_attention.catalog.registry import dumps_stable
from tool_attention.errors import FetchError, MissingSchemaError
from tool_attention.gateway import Gateway, TcpGatewayServer
from tool_attention.loader import SchemaCache, disk_fetcher, remote_fetcher


class Recorder:
    def __init__(self, docs=None):
        self.calls = []
        self.docs = docs

    def __call__(self, tool_id):
        self.calls.append(tool_id)
        if self.docs is not None and tool_id not in self.docs:
            raise MissingSchemaError(tool_id)
        return {"id": tool_id}


def test_lru_eviction_order():
    cache = SchemaCache(Recorder(), capacity=2)
    for key in "ABAC":
        cache.get(key)
    assert cache.keys() == ["A", "C"]


def test_second_get_is_a_hit():
    fetch = Recorder()
    cache = SchemaCache(fetch, capacity=4)
    assert cache.get("A") is cache.get("A")
    assert fetch.calls == ["A"]
    assert (cache.hit_count, cache.miss_count) == (1, 1)
    assert cache.hit_rate == 0.5


def test_missing_id():
    cache = SchemaCache(Recorder(docs={}), capacity=4)
    with pytest.raises(MissingSchemaError):
        cache.get("nope")
    assert "nope" not in cache


def test_failures_not_cached():
    attempts = []

    def flaky(tool_id):
        attempts.append(tool_id)
        if len(attempts) == 1:
            raise FetchError("transient")
        return {"id": tool_id}

    cache = SchemaCache(flaky, capacity=4)
    with pytest.raises(FetchError):
        cache.get("A")
    assert cache.get("A") == {"id": "A"}
    assert len(attempts) == 2


def test_invalidate():
    fetch = Recorder()
    cache = SchemaCache(fetch, capacity=4)
    cache.get("A")
    cache.get("B")
    cache.invalidate("A")
    assert cache.keys() == ["B"]
    cache.get("A")
    cache.invalidate()
    assert len(cache) == 0
    assert fetch.calls == ["A", "B", "A"]


def test_bad_capacity():
    with pytest.raises(ValueError):
        SchemaCache(Recorder(), capacity=0)


def test_matches_reference_lru():
    rng = random.Random(1)
    cache = SchemaCache(Recorder(), capacity=16)
    ref = OrderedDict()
    gets = 0
    for _ in range(10_000):
        key = str(rng.randint(0, 40))
        cache.get(key)
        gets += 1
        ref[key] = True
        ref.move_to_end(key)
        if len(ref) > 16:
            ref.popitem(last=False)
        assert len(cache) <= 16
    assert cache.keys() == list(ref)
    assert cache.hit_count + cache.miss_count == gets


def test_concurrent_misses_share_one_fetch():
    started = threading.Event()
    calls = []

    def slow(tool_id):
        calls.append(tool_id)
        started.set()
        time.sleep(0.05)
        return {"id": tool_id}

    cache = SchemaCache(slow, capacity=4)
    results = []
    threads = [threading.Thread(target=lambda: results.append(cache.get("A"))) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert calls == ["A"]
    assert len(results) == 8 and all(r is results[0] for r in results)


def test_disk_round_trip(testbed, registry_dir):
    fetch = disk_fetcher(registry_dir)
    tool = testbed.tools[0]
    assert fetch(tool.id) == tool.to_dict()
    assert dumps_stable(fetch(tool.id)) == (registry_dir / f"{tool.id}.json").read_text(encoding="utf-8")
    with pytest.raises(MissingSchemaError):
        fetch("not_a_tool")


def test_disk_corrupt_file(tmp_path):
    (tmp_path / "bad.json").write_text("{not json", encoding="utf-8")
    with pytest.raises(FetchError):
        disk_fetcher(tmp_path)("bad")


def test_remote_loopback(testbed, encoder, counter):
    gateway = Gateway(build_attention(testbed, encoder, counter), gated=False)
    server = TcpGatewayServer(gateway)
    server.start()
    try:
        fetch = remote_fetcher("%s:%d" % server.address)
        for tool in testbed.tools[:5]:
            assert fetch(tool.id) == tool.to_dict()
        with pytest.raises(MissingSchemaError):
            fetch("not_a_tool")
    finally:
        server.shutdown()
        server.server_close()


def test_remote_unreachable():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        port = s.getsockname()[1]
    with pytest.raises(FetchError):
        remote_fetcher(("127.0.0.1", port), timeout=1.0)("anything")
