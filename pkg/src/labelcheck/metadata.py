"""Corpus metadata: the single-JSON store and candidate merging.

Document layout (unknown fields at any level survive a round trip):

    {
      "audios": [
        {
          "aid": "...", "path": "...", "url": "...", "md5": "<32 hex>",
          "duration": 123.45, "tags": ["drama", ...],
          "format": {"sample_rate_hz": 16000, "channels": 1,
                     "bit_depth": 16, "codec": "opus", "bitrate_kbps": 32},
          "segments": [
            {"sid": "...", "begin_time": 0.00, "end_time": 8.12,
             "text": "...", "confidence": 1.0, "subset": "strong_label"}
          ]
        }
      ]
    }

Times are serialized in seconds with two decimals. Schema violations are
reported with a JSON pointer; cross-field violations (e.g. begin >= end)
point at the enclosing object.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import re
from dataclasses import dataclass, field
from typing import Iterable, Union

from .errors import (
    FileMissing,
    OverlappingCandidates,
    SchemaViolation,
    UnsortedInput,
)
from .validation import PartitionLabel, classify

DOMAIN_TAGS = frozenset(
    {
        "audiobook",
        "commentary",
        "documentary",
        "drama",
        "interview",
        "news",
        "reading",
        "talk",
        "variety",
        "others",
    }
)

SUBSET_VALUES = frozenset(lab.value for lab in PartitionLabel) | {"S", "M", "L"}

DEFAULT_MERGE_SECONDS = 8.0

_MD5_RE = re.compile(r"^[0-9a-fA-F]{32}$")


@dataclass
class AudioFormat:
    """Descriptive audio coding parameters (no transcoding happens here)."""

    sample_rate_hz: int = 16000
    channels: int = 1
    bit_depth: int = 16
    codec: str = "opus"
    bitrate_kbps: int = 32
    extra: dict = field(default_factory=dict)


@dataclass
class SegmentRecord:
    sid: str
    begin_time: float
    end_time: float
    text: str
    confidence: float
    subset: Union[str, None] = None
    extra: dict = field(default_factory=dict)

    @property
    def duration(self) -> float:
        return self.end_time - self.begin_time


@dataclass
class AudioRecord:
    aid: str
    path: str
    url: str
    md5: str
    duration: float
    tags: list = field(default_factory=list)
    format: AudioFormat = field(default_factory=AudioFormat)
    segments: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)


@dataclass
class MetadataDocument:
    """All corpus metadata; behaves as a sequence of :class:`AudioRecord`."""

    audios: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def __iter__(self):
        return iter(self.audios)

    def __len__(self):
        return len(self.audios)

    def __getitem__(self, i):
        return self.audios[i]


@dataclass(frozen=True)
class CandidateTuple:
    """An audio/text segmentation candidate: (start, end, phrase)."""

    start: float
    end: float
    phrase: str

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError(f"candidate start must precede end: {self}")


def merge_candidates(
    cands: Iterable[CandidateTuple], max_s: float = DEFAULT_MERGE_SECONDS
) -> list[CandidateTuple]:
    """Greedily merge consecutive candidates until a span exceeds ``max_s``.

    While the current merged span is at most ``max_s`` seconds long the next
    candidate is absorbed, so emitted spans stop right after first exceeding
    the limit. Phrases concatenate in order; spans run from the first start
    to the last end. Input must be sorted by start and non-overlapping.
    """
    cands = list(cands)
    for prev, cur in zip(cands, cands[1:]):
        if cur.start < prev.start:
            raise UnsortedInput(f"candidate {cur} starts before {prev}")
        if cur.start < prev.end:
            raise OverlappingCandidates(f"candidate {cur} overlaps {prev}")

    merged = []
    i = 0
    while i < len(cands):
        start = cands[i].start
        end = cands[i].end
        phrases = [cands[i].phrase]
        i += 1
        while i < len(cands) and end - start <= max_s:
            end = cands[i].end
            phrases.append(cands[i].phrase)
            i += 1
        merged.append(CandidateTuple(start, end, "".join(phrases)))
    return merged


# --- JSON (de)serialization -------------------------------------------------

_AUDIO_FIELDS = ("aid", "path", "url", "md5", "duration", "tags", "format", "segments")
_SEGMENT_FIELDS = ("sid", "begin_time", "end_time", "text", "confidence", "subset")
_FORMAT_FIELDS = ("sample_rate_hz", "channels", "bit_depth", "codec", "bitrate_kbps")


def _pointer(*parts) -> str:
    out = []
    for p in parts:
        p = str(p).replace("~", "~0").replace("/", "~1")
        out.append(p)
    return "/" + "/".join(out) if out else ""


def _want(obj, key, kinds, ptr, required=True, default=None):
    if key not in obj:
        if required:
            raise SchemaViolation(f"missing required field {key!r}", _pointer(*ptr, key))
        return default
    value = obj[key]
    if kinds is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SchemaViolation("expected a number", _pointer(*ptr, key))
        if math.isnan(value) or math.isinf(value):
            raise SchemaViolation("number must be finite", _pointer(*ptr, key))
        return float(value)
    if not isinstance(value, kinds) or (kinds is int and isinstance(value, bool)):
        raise SchemaViolation(f"expected {kinds.__name__}", _pointer(*ptr, key))
    return value


def _parse_segment(obj, ptr, audio_duration):
    if not isinstance(obj, dict):
        raise SchemaViolation("segment must be an object", _pointer(*ptr))
    sid = _want(obj, "sid", str, ptr)
    begin = _want(obj, "begin_time", float, ptr)
    end = _want(obj, "end_time", float, ptr)
    text = _want(obj, "text", str, ptr)
    conf = _want(obj, "confidence", float, ptr)
    subset = obj.get("subset")
    if subset is not None and not isinstance(subset, str):
        raise SchemaViolation("subset must be a string or null", _pointer(*ptr, "subset"))

    if begin < 0:
        raise SchemaViolation("begin_time must be >= 0", _pointer(*ptr, "begin_time"))
    if not 0.0 <= conf <= 1.0:
        raise SchemaViolation("confidence must be in [0, 1]", _pointer(*ptr, "confidence"))
    if subset is not None and subset not in SUBSET_VALUES:
        raise SchemaViolation(f"unknown subset {subset!r}", _pointer(*ptr, "subset"))
    if not begin < end:
        raise SchemaViolation("begin_time must precede end_time", _pointer(*ptr))
    if end > audio_duration:
        raise SchemaViolation("segment extends past audio duration", _pointer(*ptr))
    if subset is not None and not _subset_consistent(subset, conf):
        raise SchemaViolation(
            f"subset {subset!r} inconsistent with confidence {conf}", _pointer(*ptr)
        )
    extra = {k: v for k, v in obj.items() if k not in _SEGMENT_FIELDS}
    return SegmentRecord(
        sid=sid, begin_time=begin, end_time=end, text=text,
        confidence=conf, subset=subset, extra=extra,
    )


def _subset_consistent(subset: str, conf: float) -> bool:
    if subset in ("S", "M"):
        return conf == 1.0
    if subset == "L":
        return conf >= 0.95
    return classify(conf).value == subset


def _parse_format(obj, ptr):
    if not isinstance(obj, dict):
        raise SchemaViolation("format must be an object", _pointer(*ptr))
    fmt = AudioFormat(
        sample_rate_hz=_want(obj, "sample_rate_hz", int, ptr, required=False, default=16000),
        channels=_want(obj, "channels", int, ptr, required=False, default=1),
        bit_depth=_want(obj, "bit_depth", int, ptr, required=False, default=16),
        codec=_want(obj, "codec", str, ptr, required=False, default="opus"),
        bitrate_kbps=_want(obj, "bitrate_kbps", int, ptr, required=False, default=32),
        extra={k: v for k, v in obj.items() if k not in _FORMAT_FIELDS},
    )
    for key in ("sample_rate_hz", "channels", "bit_depth", "bitrate_kbps"):
        if getattr(fmt, key) <= 0:
            raise SchemaViolation("must be a positive integer", _pointer(*ptr, key))
    return fmt


def _parse_audio(obj, ptr):
    if not isinstance(obj, dict):
        raise SchemaViolation("audio entry must be an object", _pointer(*ptr))
    aid = _want(obj, "aid", str, ptr)
    path = _want(obj, "path", str, ptr)
    url = _want(obj, "url", str, ptr)
    md5 = _want(obj, "md5", str, ptr)
    if not _MD5_RE.match(md5):
        raise SchemaViolation("md5 must be 32 hex characters", _pointer(*ptr, "md5"))
    duration = _want(obj, "duration", float, ptr)
    if duration < 0:
        raise SchemaViolation("duration must be >= 0", _pointer(*ptr, "duration"))
    tags = _want(obj, "tags", list, ptr)
    for j, tag in enumerate(tags):
        if not isinstance(tag, str) or tag not in DOMAIN_TAGS:
            raise SchemaViolation(
                f"unknown domain tag {tag!r}", _pointer(*ptr, "tags", j)
            )
    fmt = _parse_format(obj["format"], ptr + ("format",)) if "format" in obj else AudioFormat()
    segs_obj = _want(obj, "segments", list, ptr)
    segments = [
        _parse_segment(seg, ptr + ("segments", j), duration)
        for j, seg in enumerate(segs_obj)
    ]
    extra = {k: v for k, v in obj.items() if k not in _AUDIO_FIELDS}
    return AudioRecord(
        aid=aid, path=path, url=url, md5=md5, duration=duration,
        tags=list(tags), format=fmt, segments=segments, extra=extra,
    )


def load_metadata(data: Union[bytes, str]) -> MetadataDocument:
    """Parse and validate a metadata JSON document."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"invalid JSON: {exc}", "") from None
    if not isinstance(obj, dict):
        raise SchemaViolation("document root must be an object", "")
    audios_obj = _want(obj, "audios", list, ())
    audios = [_parse_audio(a, ("audios", i)) for i, a in enumerate(audios_obj)]
    extra = {k: v for k, v in obj.items() if k != "audios"}
    return MetadataDocument(audios=audios, extra=extra)


def _round_time(value: float) -> float:
    return round(float(value), 2)


def _segment_to_obj(seg: SegmentRecord) -> dict:
    obj = {
        "sid": seg.sid,
        "begin_time": _round_time(seg.begin_time),
        "end_time": _round_time(seg.end_time),
        "text": seg.text,
        "confidence": float(seg.confidence),
    }
    if seg.subset is not None:
        obj["subset"] = seg.subset
    obj.update(seg.extra)
    return obj


def _audio_to_obj(audio: AudioRecord) -> dict:
    fmt = audio.format
    obj = {
        "aid": audio.aid,
        "path": audio.path,
        "url": audio.url,
        "md5": audio.md5,
        "duration": _round_time(audio.duration),
        "tags": list(audio.tags),
        "format": {
            "sample_rate_hz": fmt.sample_rate_hz,
            "channels": fmt.channels,
            "bit_depth": fmt.bit_depth,
            "codec": fmt.codec,
            "bitrate_kbps": fmt.bitrate_kbps,
            **fmt.extra,
        },
        "segments": [_segment_to_obj(s) for s in audio.segments],
    }
    obj.update(audio.extra)
    return obj


def save_metadata(records: Union[MetadataDocument, Iterable[AudioRecord]]) -> bytes:
    """Serialize records to canonical UTF-8 JSON bytes.

    Validates by round-tripping through the parser first, so hand-built
    records breaching an invariant fail with the same pointer a bad file
    would produce.
    """
    if isinstance(records, MetadataDocument):
        doc = records
    else:
        doc = MetadataDocument(audios=list(records))
    obj = {"audios": [_audio_to_obj(a) for a in doc.audios]}
    obj.update(doc.extra)
    encoded = (json.dumps(obj, ensure_ascii=False, indent=2) + "\n").encode("utf-8")
    load_metadata(encoded)
    return encoded


def verify_md5(record: AudioRecord) -> bool:
    """True iff the md5 of the file at ``record.path`` matches the record."""
    if not os.path.isfile(record.path):
        raise FileMissing(f"audio file not found: {record.path}")
    with open(record.path, "rb") as fh:
        digest = hashlib.md5(fh.read()).hexdigest()
    return digest == record.md5.lower()


@dataclass(frozen=True)
class PartitionReport:
    strong_hours: float
    weak_hours: float
    others_hours: float
    total_hours: float


def partition_report(records: Union[MetadataDocument, Iterable[AudioRecord]]) -> PartitionReport:
    """Hours of segments per partition label plus total raw audio hours."""
    buckets = {
        PartitionLabel.STRONG_LABEL: 0.0,
        PartitionLabel.WEAK_LABEL: 0.0,
        PartitionLabel.OTHERS: 0.0,
    }
    total = 0.0
    for audio in records:
        total += audio.duration
        for seg in audio.segments:
            buckets[classify(seg.confidence)] += seg.duration
    return PartitionReport(
        strong_hours=buckets[PartitionLabel.STRONG_LABEL] / 3600.0,
        weak_hours=buckets[PartitionLabel.WEAK_LABEL] / 3600.0,
        others_hours=buckets[PartitionLabel.OTHERS] / 3600.0,
        total_hours=total / 3600.0,
    )
