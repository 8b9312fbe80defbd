import pytest

from deixis import io as dio
from deixis.errors import IoFailure, ParseError


def test_jsonl_round_trip(tmp_path):
    recs = [{"b": 1, "a": [1, 2]}, {"x": "ü"}]
    p = tmp_path / "r.jsonl"
    assert dio.write_jsonl(p, recs) == 2
    assert dio.read_jsonl(p) == recs
    assert p.read_text(encoding="utf-8").splitlines()[0] == '{"a":[1,2],"b":1}'


def test_bad_line_reports_line_number(tmp_path):
    p = tmp_path / "r.jsonl"
    lines = ['{"i": %d}' % i for i in range(16)] + ["{broken"] + ['{"i": 99}']
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(ParseError) as err:
        dio.read_jsonl(p)
    assert err.value.line == 17
    assert "17" in str(err.value)


def test_non_object_line(tmp_path):
    p = tmp_path / "r.jsonl"
    p.write_text('{"a": 1}\n[1, 2]\n')
    with pytest.raises(ParseError) as err:
        dio.read_jsonl(p)
    assert err.value.line == 2


def test_blank_lines_skipped(tmp_path):
    p = tmp_path / "r.jsonl"
    p.write_text('{"a": 1}\n\n{"a": 2}\n')
    assert [r["a"] for r in dio.read_jsonl(p)] == [1, 2]


def test_missing_and_unwritable(tmp_path):
    with pytest.raises(IoFailure):
        dio.read_jsonl(tmp_path / "missing.jsonl")
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(IoFailure) as err:
        dio.write_jsonl(blocker / "sub" / "r.jsonl", [{}])
    assert str(blocker) in str(err.value)


def test_manifest_keeps_time_in_sidecar(tmp_path):
    p = tmp_path / "d.jsonl"
    dio.write_jsonl(p, [{}])
    m = dio.write_manifest(p, "qa", "abc", {"n": 1})
    assert dio.read_manifest(p) == m and "written_at" not in m
    assert (tmp_path / "d.jsonl.times.json").exists()
    assert dio.read_manifest(tmp_path / "other.jsonl") is None
