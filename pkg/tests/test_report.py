import json

import numpy as np

from locahal.report import VerificationReport, digest, exact, measured, spread, within_factor


def test_fail_records_carry_a_witness():
    c = exact("x", "anchor", False)
    assert c.status == "fail" and c.witness is not None
    assert exact("y", "anchor", True, {"unused": 1}).witness is None


def test_report_json_is_sorted_and_plain():
    rep = VerificationReport("t")
    rep.add(exact("a", "A", True, None, value=np.float64(1.5), arr=np.arange(3)))
    rep.add(measured("m", "M", wall_time=0.25, c=np.inf))
    doc = json.loads(rep.to_json())
    assert doc["ok"] is True
    assert doc["checks"][0]["measured"]["arr"] == [0, 1, 2]
    assert doc["checks"][1]["measured"]["c"] == "inf"
    assert "wall_time" not in json.loads(rep.to_json(timestamps=False))["checks"][1]["measured"]
    assert "wall_time" not in json.loads(rep.to_json(timestamps=False))


def test_merge_prefixes_names():
    a, b = VerificationReport("a"), VerificationReport("b")
    b.add(exact("c", "C", False, {"x": 1}))
    a.merge(b, prefix="p: ")
    assert a.get("p: c").status == "fail" and not a.ok
    assert len(a.failures()) == 1


def test_within_factor_and_spread():
    assert within_factor([1, 2, 4], 4)
    assert not within_factor([1, 5], 4)
    assert within_factor([0, 0], 4)
    assert not within_factor([0, 1], 4)
    assert not within_factor([1, float("nan")], 4)
    assert spread([2, 8]) == 4.0 and spread([0, 0]) == 1.0 and spread([0, 1]) == float("inf")


def test_digest_is_stable():
    assert digest({"b": 1, "a": [1, 2]}) == digest({"a": [1, 2], "b": 1})
    assert digest(b"abc") == digest(bytearray(b"abc"))
