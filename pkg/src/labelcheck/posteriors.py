"""Per-frame log-posterior matrices and their binary exchange format.

File layout (little-endian, 16-byte header):

    magic      4 bytes  b"CPST"
    version    u16      1
    flags      u16      bit 0 = rows are normalized log-probabilities
    num_frames u32
    num_units  u32
    payload    num_frames * num_units f32 values, frame-major

The round trip ``read_posteriors(write_posteriors(m)) == m`` is bit-exact.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import BadMagic, DimensionOverflow, PosteriorFormatError, TruncatedPayload

MAGIC = b"CPST"
VERSION = 1
FLAG_NORMALIZED = 0x0001

_HEADER = struct.Struct("<4sHHII")
HEADER_SIZE = _HEADER.size

# Values at or below these slacks still count as normalized (float32 noise).
_MAX_LOGPROB_TOL = 1e-4
_ROW_LSE_TOL = 1e-3

# Largest payload we are willing to describe; beyond this the declared
# dimensions cannot correspond to a real file.
_MAX_PAYLOAD_BYTES = 2**63 - 1


class PosteriorMatrix:
    """Immutable frames x units matrix of natural-log scores.

    When ``normalized`` is true every row must be a log-probability
    distribution (values <= 0, log-sum-exp ~ 0). Unnormalized matrices space
    for raw acoustic scores are accepted with ``normalized=False``.
    """

    __slots__ = ("values", "normalized")

    def __init__(self, values, normalized: bool = True):
        arr = np.asarray(values, dtype=np.float32)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-D matrix, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("posterior values must be finite")
        arr = np.ascontiguousarray(arr)
        if normalized and arr.shape[0] > 0 and arr.shape[1] > 0:
            if float(arr.max()) > _MAX_LOGPROB_TOL:
                raise ValueError("normalized log-probabilities must be <= 0")
            vals = arr.astype(np.float64)
            m = vals.max(axis=1, keepdims=True)
            lse = m[:, 0] + np.log(np.exp(vals - m).sum(axis=1))
            worst = float(np.abs(lse).max())
            if worst > _ROW_LSE_TOL:
                raise ValueError(
                    f"rows of a normalized matrix must log-sum-exp to 0 (off by {worst:g})"
                )
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "normalized", bool(normalized))

    def __setattr__(self, name, value):
        raise AttributeError("PosteriorMatrix is immutable")

    @property
    def num_frames(self) -> int:
        return self.values.shape[0]

    @property
    def num_units(self) -> int:
        return self.values.shape[1]

    def __eq__(self, other):
        if not isinstance(other, PosteriorMatrix):
            return NotImplemented
        return (
            self.normalized == other.normalized
            and self.values.shape == other.values.shape
            and self.values.tobytes() == other.values.tobytes()
        )

    def __repr__(self):
        return (
            f"PosteriorMatrix(num_frames={self.num_frames}, "
            f"num_units={self.num_units}, normalized={self.normalized})"
        )


def write_posteriors(matrix: PosteriorMatrix) -> bytes:
    """Serialize a matrix to the CPST byte format."""
    flags = FLAG_NORMALIZED if matrix.normalized else 0
    header = _HEADER.pack(MAGIC, VERSION, flags, matrix.num_frames, matrix.num_units)
    payload = matrix.values.astype("<f4", copy=False).tobytes(order="C")
    return header + payload


def read_posteriors(data: bytes) -> PosteriorMatrix:
    """Parse CPST bytes back into a :class:`PosteriorMatrix`."""
    if len(data) < HEADER_SIZE:
        raise TruncatedPayload(f"header needs {HEADER_SIZE} bytes, got {len(data)}")
    magic, version, flags, num_frames, num_units = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise BadMagic(f"bad magic {magic!r}")
    if version != VERSION:
        raise BadMagic(f"unsupported version {version}")
    count = num_frames * num_units
    if count * 4 > _MAX_PAYLOAD_BYTES:
        raise DimensionOverflow(f"{num_frames} x {num_units} values cannot fit any payload")
    expected = count * 4
    payload = data[HEADER_SIZE:]
    if len(payload) < expected:
        raise TruncatedPayload(
            f"payload holds {len(payload)} bytes, header declares {expected}"
        )
    if len(payload) > expected:
        raise PosteriorFormatError(
            f"{len(payload) - expected} trailing bytes after declared payload"
        )
    values = np.frombuffer(payload, dtype="<f4").reshape(num_frames, num_units)
    return PosteriorMatrix(values.copy(), normalized=bool(flags & FLAG_NORMALIZED))
