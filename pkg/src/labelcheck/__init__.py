"""Transcript label-error detection and corpus validation toolkit.

Force-decodes CTC posteriors against an error-tolerant alignment graph to
find label errors, scores segment confidence, partitions corpora, manages
the metadata JSON store, and evaluates with mixture error rate. Everything
is pure and immutable after construction, so decodes over a shared graph
and inventory may run concurrently.
"""

__version__ = "0.1.0"

from .decoder import (
    DecodeResult,
    Edit,
    brute_force_decode,
    collapse_frame_labels,
    dump_composition,
    extract_timestamps,
    force_decode,
)
from .errors import (
    BadMagic,
    BeamCollapse,
    BlankInReference,
    DimensionMismatch,
    DimensionOverflow,
    EmptyReference,
    ExplosionGuard,
    FileMissing,
    InsufficientPool,
    LabelCheckError,
    NoPath,
    OverlappingCandidates,
    PosteriorFormatError,
    RegionTooSmall,
    SchemaViolation,
    TruncatedPayload,
    UnknownUnit,
    UnsortedInput,
)
from .graph import (
    AlignConfig,
    AlignmentGraph,
    Arc,
    Tag,
    build_alignment_graph,
    enumerate_label_paths,
)
from .mer import MerToken, mer_score, mer_tokenize
from .metadata import (
    AudioFormat,
    AudioRecord,
    CandidateTuple,
    MetadataDocument,
    PartitionReport,
    SegmentRecord,
    load_metadata,
    merge_candidates,
    partition_report,
    save_metadata,
    verify_md5,
)
from .posteriors import PosteriorMatrix, read_posteriors, write_posteriors
from .subtitle import FrameRegion, SubtitleSpan, detect_spans, load_frames, ssim
from .units import UnitInventory, tokenize_reference
from .validation import (
    PartitionLabel,
    classify,
    confidence,
    edit_distance,
    select_training_subset,
)

__all__ = [name for name in dir() if not name.startswith("_")]
