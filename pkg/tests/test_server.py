import json
import shutil
import threading
import urllib.error
import urllib.request

import pytest

from wavectf.baselines import write_submission
from wavectf.referee import leaderboard, leaderboard_json, read_ledger
from wavectf.server import RefereeService, make_server


@pytest.fixture
def served(bundle_root, truth_predictions, tmp_path):
    inbox = tmp_path / "inbox"
    write_submission(truth_predictions, inbox / "truth", "swell-small", "truth")
    service = RefereeService(tmp_path / "ledger.jsonl", bundle_root.parent, inbox)
    server = make_server(service, "127.0.0.1", 0)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}", service, inbox
    server.shutdown()
    server.server_close()


def _request(url, body=None):
    data = None if body is None else json.dumps(body).encode()
    req = urllib.request.Request(url, data=data, method="GET" if data is None else "POST",
                                 headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req, timeout=30) as resp:
            return resp.status, resp.read().decode()
    except urllib.error.HTTPError as exc:
        return exc.code, exc.read().decode()


def _manifest(inbox, sub="truth", method="truth"):
    doc = json.loads((inbox / sub / "manifest.json").read_text())
    doc["method"] = method
    doc["predictions"] = {k: f"{sub}/{v}" for k, v in doc["predictions"].items()}
    return doc


def test_submit_then_read_back(served):
    base, service, inbox = served
    status, body = _request(base + "/v1/submissions", _manifest(inbox))
    assert status == 200
    result = json.loads(body)
    assert result["composite"] == pytest.approx(100.0, abs=1e-9)
    status, body = _request(f"{base}/v1/scores/{result['id']}")
    assert status == 200 and json.loads(body)["id"] == result["id"]
    status, board = _request(base + "/v1/leaderboard?dataset=swell-small")
    assert status == 200
    expected = leaderboard_json(leaderboard(read_ledger(service.ledger), "swell-small"), "swell-small")
    assert board == expected


def test_latest_view_query(served):
    base, service, inbox = served
    _request(base + "/v1/submissions", _manifest(inbox))
    status, body = _request(base + "/v1/leaderboard?dataset=swell-small&view=latest")
    assert status == 200 and json.loads(body)["view"] == "latest"
    status, _ = _request(base + "/v1/leaderboard?dataset=swell-small&view=bogus")
    assert status == 400


@pytest.mark.parametrize("path,code", [("/v1/leaderboard", 400), ("/v1/scores/deadbeef", 404), ("/nope", 404)])
def test_get_errors(served, path, code):
    status, body = _request(served[0] + path)
    assert status == code and "error" in json.loads(body)


def test_path_escape_is_rejected(served, tmp_path):
    base, _, inbox = served
    doc = _manifest(inbox)
    doc["predictions"]["X1pred"] = "../../etc/passwd"
    status, body = _request(base + "/v1/submissions", doc)
    assert status == 400 and "escapes" in json.loads(body)["error"]


def test_unknown_dataset_and_bad_bodies(served):
    base, _, inbox = served
    doc = _manifest(inbox)
    doc["dataset"] = "nowhere"
    assert _request(base + "/v1/submissions", doc)[0] == 404
    assert _request(base + "/v1/submissions", [1, 2])[0] == 400
    req = urllib.request.Request(base + "/v1/submissions", data=b"{oops", method="POST")
    with pytest.raises(urllib.error.HTTPError) as info:
        urllib.request.urlopen(req, timeout=30)
    assert info.value.code == 400


def test_public_bundle_is_not_scorable(served, bundle_root, tmp_path):
    base, service, inbox = served
    public_root = tmp_path / "public"
    from wavectf.splits import publish

    publish(bundle_root, public_root / "swell-small")
    service.bundles_root = public_root
    status, body = _request(base + "/v1/submissions", _manifest(inbox))
    assert status == 404 and "test matrices" in json.loads(body)["error"]
    shutil.rmtree(public_root)


def test_unwritable_ledger_is_503(served, tmp_path):
    base, service, inbox = served
    service.ledger = tmp_path / "missing-dir" / "ledger.jsonl"
    status, _ = _request(base + "/v1/submissions", _manifest(inbox))
    assert status == 503
