import hashlib
import json

import numpy as np
import pytest

from labelcheck import (
    AudioFormat,
    AudioRecord,
    CandidateTuple,
    FileMissing,
    MetadataDocument,
    OverlappingCandidates,
    SchemaViolation,
    SegmentRecord,
    UnsortedInput,
    load_metadata,
    merge_candidates,
    partition_report,
    save_metadata,
    verify_md5,
)

MINIMAL = {
    "audios": [
        {
            "aid": "a1",
            "path": "audio/a1.opus",
            "url": "https://example.com/v1",
            "md5": "0" * 32,
            "duration": 100.0,
            "tags": ["drama"],
            "segments": [
                {
                    "sid": "a1_s0",
                    "begin_time": 0.5,
                    "end_time": 8.25,
                    "text": "不忘初心",
                    "confidence": 1.0,
                }
            ],
        }
    ]
}


def doc_bytes(obj=None):
    return json.dumps(obj if obj is not None else MINIMAL).encode("utf-8")


def test_minimal_round_trip():
    doc = load_metadata(doc_bytes())
    assert len(doc) == 1
    audio = doc[0]
    assert audio.aid == "a1"
    assert audio.format == AudioFormat()
    seg = audio.segments[0]
    assert (seg.begin_time, seg.end_time) == (0.5, 8.25)
    again = load_metadata(save_metadata(doc))
    assert again == doc


def test_round_trip_from_records():
    audio = AudioRecord(
        aid="x", path="p", url="u", md5="a" * 32, duration=10.0,
        tags=["news"], segments=[
            SegmentRecord("x_s0", 0.0, 2.0, "ok了", 0.8, subset="weak_label"),
        ],
    )
    data = save_metadata([audio])
    doc = load_metadata(data)
    assert doc.audios == [audio]
    assert save_metadata(doc) == data


def test_begin_after_end_rejected_with_pointer():
    obj = json.loads(doc_bytes())
    obj["audios"][0]["segments"][0]["begin_time"] = 9.0
    obj["audios"][0]["segments"][0]["end_time"] = 3.0
    with pytest.raises(SchemaViolation) as exc:
        load_metadata(doc_bytes(obj))
    assert exc.value.pointer == "/audios/0/segments/0"


def test_unknown_top_level_field_preserved():
    obj = json.loads(doc_bytes())
    obj["license"] = "CC-BY-4.0"
    doc = load_metadata(doc_bytes(obj))
    assert doc.extra == {"license": "CC-BY-4.0"}
    round_tripped = json.loads(save_metadata(doc))
    assert round_tripped["license"] == "CC-BY-4.0"


def test_unknown_nested_fields_preserved():
    obj = json.loads(doc_bytes())
    obj["audios"][0]["speaker"] = "s123"
    obj["audios"][0]["segments"][0]["snr_db"] = 17.5
    obj["audios"][0]["format"] = {"sample_rate_hz": 16000, "container": "ogg"}
    doc = load_metadata(doc_bytes(obj))
    assert doc[0].extra == {"speaker": "s123"}
    assert doc[0].segments[0].extra == {"snr_db": 17.5}
    assert doc[0].format.extra == {"container": "ogg"}
    again = json.loads(save_metadata(doc))
    assert again["audios"][0]["speaker"] == "s123"
    assert again["audios"][0]["segments"][0]["snr_db"] == 17.5
    assert again["audios"][0]["format"]["container"] == "ogg"


@pytest.mark.parametrize(
    "mutate, pointer",
    [
        (lambda o: o.pop("audios"), "/audios"),
        (lambda o: o["audios"][0].pop("md5"), "/audios/0/md5"),
        (lambda o: o["audios"][0].__setitem__("md5", "xyz"), "/audios/0/md5"),
        (lambda o: o["audios"][0].__setitem__("duration", -1), "/audios/0/duration"),
        (lambda o: o["audios"][0]["tags"].append("sports"), "/audios/0/tags/1"),
        (
            lambda o: o["audios"][0]["segments"][0].__setitem__("confidence", 1.5),
            "/audios/0/segments/0/confidence",
        ),
        (
            lambda o: o["audios"][0]["segments"][0].__setitem__("begin_time", -0.5),
            "/audios/0/segments/0/begin_time",
        ),
        (
            lambda o: o["audios"][0]["segments"][0].pop("text"),
            "/audios/0/segments/0/text",
        ),
        (
            lambda o: o["audios"][0]["segments"][0].__setitem__("end_time", 500.0),
            "/audios/0/segments/0",
        ),
        (
            lambda o: o["audios"][0]["segments"][0].__setitem__("subset", "others"),
            "/audios/0/segments/0",
        ),
        (
            lambda o: o["audios"][0]["segments"][0].__setitem__("subset", "gold"),
            "/audios/0/segments/0/subset",
        ),
        (
            lambda o: o["audios"][0]["format"].__setitem__("channels", 0),
            "/audios/0/format/channels",
        ),
    ],
)
def test_schema_violation_pointers(mutate, pointer):
    obj = json.loads(doc_bytes())
    obj["audios"][0]["format"] = {"channels": 1}
    mutate(obj)
    with pytest.raises(SchemaViolation) as exc:
        load_metadata(doc_bytes(obj))
    assert exc.value.pointer == pointer


def test_subset_consistency_accepts_training_tags():
    obj = json.loads(doc_bytes())
    obj["audios"][0]["segments"][0]["subset"] = "S"
    doc = load_metadata(doc_bytes(obj))
    assert doc[0].segments[0].subset == "S"
    obj["audios"][0]["segments"][0]["subset"] = "L"
    obj["audios"][0]["segments"][0]["confidence"] = 0.96
    assert load_metadata(doc_bytes(obj))[0].segments[0].subset == "L"
    obj["audios"][0]["segments"][0]["subset"] = "M"
    with pytest.raises(SchemaViolation):
        load_metadata(doc_bytes(obj))


def test_invalid_json_is_schema_violation():
    with pytest.raises(SchemaViolation):
        load_metadata(b"{not json")


def test_times_serialized_with_two_decimals():
    audio = AudioRecord(
        aid="x", path="p", url="u", md5="a" * 32, duration=10.129,
        tags=[], segments=[SegmentRecord("s", 0.333, 2.0011, "t", 1.0)],
    )
    obj = json.loads(save_metadata([audio]))
    assert obj["audios"][0]["duration"] == 10.13
    assert obj["audios"][0]["segments"][0]["begin_time"] == 0.33
    assert obj["audios"][0]["segments"][0]["end_time"] == 2.0


def test_save_is_deterministic():
    doc = load_metadata(doc_bytes())
    assert save_metadata(doc) == save_metadata(doc)


def test_merge_three_contiguous():
    cands = [
        CandidateTuple(0.0, 3.0, "第一"),
        CandidateTuple(3.0, 6.0, "第二"),
        CandidateTuple(6.0, 9.0, "第三"),
    ]
    merged = merge_candidates(cands, 8.0)
    assert merged == [CandidateTuple(0.0, 9.0, "第一第二第三")]


def test_merge_single_long_tuple_unchanged():
    cands = [CandidateTuple(0.0, 10.0, "长句")]
    assert merge_candidates(cands, 8.0) == cands


def test_merge_empty():
    assert merge_candidates([], 8.0) == []


def test_merge_stops_after_exceeding():
    cands = [
        CandidateTuple(0.0, 5.0, "a"),
        CandidateTuple(5.0, 8.0, "b"),   # span hits exactly 8: keep absorbing
        CandidateTuple(8.0, 9.0, "c"),   # absorbed, span 9 > 8, emit
        CandidateTuple(9.0, 10.0, "d"),
    ]
    assert merge_candidates(cands, 8.0) == [
        CandidateTuple(0.0, 9.0, "abc"),
        CandidateTuple(9.0, 10.0, "d"),
    ]


def test_merge_spans_gaps():
    cands = [CandidateTuple(0.0, 2.0, "a"), CandidateTuple(5.0, 7.0, "b")]
    assert merge_candidates(cands, 8.0) == [CandidateTuple(0.0, 7.0, "ab")]


def test_merge_unsorted_rejected():
    cands = [CandidateTuple(5.0, 6.0, "b"), CandidateTuple(0.0, 1.0, "a")]
    with pytest.raises(UnsortedInput):
        merge_candidates(cands)


def test_merge_overlap_rejected():
    cands = [CandidateTuple(0.0, 3.0, "a"), CandidateTuple(2.0, 5.0, "b")]
    with pytest.raises(OverlappingCandidates):
        merge_candidates(cands)


def test_merge_conserves_phrases_and_order():
    rng = np.random.default_rng(29)
    for _ in range(50):
        cands = []
        clock = 0.0
        for i in range(int(rng.integers(0, 12))):
            clock += float(rng.uniform(0.0, 2.0))
            end = clock + float(rng.uniform(0.5, 6.0))
            cands.append(CandidateTuple(clock, end, f"p{i}·"))
            clock = end
        merged = merge_candidates(cands, float(rng.uniform(2.0, 12.0)))
        assert "".join(c.phrase for c in merged) == "".join(c.phrase for c in cands)


def test_verify_md5(tmp_path):
    payload = b"opus-bytes"
    path = tmp_path / "a1.opus"
    path.write_bytes(payload)
    record = AudioRecord(
        aid="a1", path=str(path), url="u", md5=hashlib.md5(payload).hexdigest(),
        duration=1.0,
    )
    assert verify_md5(record) is True
    path.write_bytes(b"opus-bytez")
    assert verify_md5(record) is False
    record.path = str(tmp_path / "gone.opus")
    with pytest.raises(FileMissing):
        verify_md5(record)


def _hour_segment(sid, conf):
    return SegmentRecord(sid, 0.0, 3600.0, "t", conf)


def _hour_audio(aid, conf):
    return AudioRecord(
        aid=aid, path="p", url="u", md5="0" * 32, duration=3600.0,
        segments=[_hour_segment(aid + "_s", conf)],
    )


def test_partition_report_fixture():
    records = [
        _hour_audio("a", 1.0),
        _hour_audio("b", 1.0),
        _hour_audio("c", 0.7),
        _hour_audio("d", 0.1),
    ]
    report = partition_report(records)
    assert report.strong_hours == pytest.approx(2.0)
    assert report.weak_hours == pytest.approx(1.0)
    assert report.others_hours == pytest.approx(1.0)
    assert report.total_hours == pytest.approx(4.0)


def test_partition_report_empty():
    report = partition_report(MetadataDocument())
    assert (report.strong_hours, report.weak_hours, report.others_hours,
            report.total_hours) == (0.0, 0.0, 0.0, 0.0)


def test_partition_report_boundary_confidence():
    report = partition_report([_hour_audio("a", 0.95)])
    assert report.strong_hours == pytest.approx(1.0)
    assert report.weak_hours == report.others_hours == 0.0


def test_partition_report_invariants_random():
    rng = np.random.default_rng(31)
    for _ in range(30):
        audios = []
        for i in range(int(rng.integers(0, 5))):
            duration = float(rng.uniform(60.0, 7200.0))
            segments = []
            clock = 0.0
            while clock < duration - 10.0 and rng.uniform() < 0.7:
                end = min(duration, clock + float(rng.uniform(1.0, duration / 2)))
                segments.append(
                    SegmentRecord(f"a{i}_s{len(segments)}", clock, end, "t",
                                  float(rng.uniform(0.0, 1.0)))
                )
                clock = end
            audios.append(
                AudioRecord(aid=f"a{i}", path="p", url="u", md5="0" * 32,
                            duration=duration, segments=segments)
            )
        report = partition_report(audios)
        assert min(report.strong_hours, report.weak_hours, report.others_hours,
                   report.total_hours) >= 0.0
        assert (report.strong_hours + report.weak_hours + report.others_hours
                <= report.total_hours + 1e-9)
