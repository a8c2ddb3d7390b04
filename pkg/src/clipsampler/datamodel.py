"""Domain types, dataset manifests, and feature-file ingestion.

A dataset is a manifest file plus one binary feature file per (video,
modality) and an optional score file per video. The manifest is
line-delimited JSON: the first line is a header record carrying the label
space, the modality descriptors, the split name, and free-form metadata;
every following line describes one video (id, label, clip count, and the
relative path of each referenced file). All paths inside a manifest are
relative to the manifest's directory.

Videos are loaded lazily: :func:`load_manifest` eagerly validates every
referenced file header (magic, version, row/column counts) but reads the
float payloads only when a :class:`VideoRecord` is first requested.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Mapping

import numpy as np

from . import container
from .errors import ManifestError, MissingModalityError

CANONICAL_MODALITY_TAGS = ("visual-md", "visual-rgbr", "visual-if", "audio-mel")

# Tolerance on the sum of a probability row.
PROB_TOL = 1e-5


def normalized_location(i: int, num_clips: int) -> float:
    """Map clip index ``i`` of a video with ``num_clips`` clips into (0, 1).

    Uses the clip-center convention (i + 0.5) / L, so the first clip of a
    single-clip video lands on 0.5 rather than an edge.
    """
    if num_clips < 1:
        raise ValueError(f"num_clips must be >= 1, got {num_clips}")
    if not 0 <= i < num_clips:
        raise ValueError(f"clip index {i} out of range for {num_clips} clips")
    return (i + 0.5) / num_clips


@dataclass(frozen=True)
class LabelSpace:
    """The set of action classes: a class count and one name per class."""

    num_classes: int
    names: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.num_classes < 2:
            raise ValueError(f"num_classes must be >= 2, got {self.num_classes}")
        if len(self.names) != self.num_classes:
            raise ValueError(
                f"expected {self.num_classes} class names, got {len(self.names)}"
            )
        if len(set(self.names)) != len(self.names):
            raise ValueError("class names must be unique")

    @classmethod
    def with_default_names(cls, num_classes: int) -> "LabelSpace":
        return cls(num_classes, tuple(f"class-{c:03d}" for c in range(num_classes)))


@dataclass(frozen=True)
class ModalityDescriptor:
    """One per-clip feature channel.

    ``window_clips`` records how many consecutive clips one feature vector
    summarizes (1 for visual channels; 2 for audio, whose observation
    window is twice as long as a clip while keeping one feature per clip).
    """

    name: str
    dim: int
    window_clips: int = 1

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("modality name must be non-empty")
        if self.dim < 1:
            raise ValueError(f"modality {self.name}: dim must be >= 1, got {self.dim}")
        if self.window_clips < 1:
            raise ValueError(
                f"modality {self.name}: window_clips must be >= 1, got {self.window_clips}"
            )


@dataclass
class VideoRecord:
    """One labeled video, fully materialized in memory.

    ``features`` maps modality name to an (L, d) float array.
    ``scripted_scores`` optionally holds an (L, C) matrix of precomputed
    clip-classifier probabilities.
    """

    id: str
    label: int
    num_clips: int
    features: Mapping[str, np.ndarray]
    scripted_scores: np.ndarray | None = None

    def feature(self, modality: str) -> np.ndarray:
        try:
            return self.features[modality]
        except KeyError:
            raise MissingModalityError(
                f"video {self.id!r} has no features for modality {modality!r}"
            ) from None


@dataclass
class ManifestEntry:
    """One manifest line: where a video's files live, before loading."""

    id: str
    label: int
    num_clips: int
    feature_paths: dict[str, str]
    score_path: str | None = None


class DatasetManifest:
    """A validated dataset: label space, modalities, and video entries."""

    def __init__(
        self,
        label_space: LabelSpace,
        modalities: tuple[ModalityDescriptor, ...],
        videos: list[ManifestEntry],
        split: str,
        root: Path,
        dataset_id: str,
        metadata: dict | None = None,
    ) -> None:
        if split not in ("train", "test"):
            raise ManifestError(f"split must be 'train' or 'test', got {split!r}")
        names = [m.name for m in modalities]
        if len(set(names)) != len(names):
            raise ManifestError("modality names must be unique within a dataset")
        self.label_space = label_space
        self.modalities = modalities
        self.videos = videos
        self.split = split
        self.root = Path(root)
        self.dataset_id = dataset_id
        self.metadata = dict(metadata or {})
        self._by_id = {v.id: v for v in videos}
        if len(self._by_id) != len(videos):
            raise ManifestError("duplicate video ids in manifest")
        self._cache: dict[str, VideoRecord] = {}

    def __len__(self) -> int:
        return len(self.videos)

    def modality(self, name: str) -> ModalityDescriptor:
        for m in self.modalities:
            if m.name == name:
                return m
        raise MissingModalityError(f"dataset {self.dataset_id!r} has no modality {name!r}")

    def entry(self, video_id: str) -> ManifestEntry:
        try:
            return self._by_id[video_id]
        except KeyError:
            raise ManifestError(f"unknown video id {video_id!r}") from None

    def video(self, video_id: str) -> VideoRecord:
        """Load (and memoize) the full record for one video."""
        rec = self._cache.get(video_id)
        if rec is None:
            rec = self._load(self.entry(video_id))
            self._cache[video_id] = rec
        return rec

    def iter_videos(self) -> Iterator[VideoRecord]:
        for entry in self.videos:
            yield self.video(entry.id)

    def _load(self, entry: ManifestEntry) -> VideoRecord:
        feats: dict[str, np.ndarray] = {}
        for name, rel in entry.feature_paths.items():
            arr = container.read_matrix(self.root / rel, container.MAGIC_FEATURES)
            arr.flags.writeable = False
            feats[name] = arr
        scores = None
        if entry.score_path is not None:
            scores = container.read_matrix(
                self.root / entry.score_path, container.MAGIC_SCORES
            )
            scores.flags.writeable = False
        return VideoRecord(
            id=entry.id,
            label=entry.label,
            num_clips=entry.num_clips,
            features=feats,
            scripted_scores=scores,
        )


def _parse_json_line(path: Path, lineno: int, line: str) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}:{lineno}: invalid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise ManifestError(f"{path}:{lineno}: expected a JSON object")
    return obj


def _require(obj: dict, key: str, path: Path, lineno: int):
    if key not in obj:
        raise ManifestError(f"{path}:{lineno}: missing required field {key!r}")
    return obj[key]


def load_manifest(path: str | Path) -> DatasetManifest:
    """Parse and validate a manifest file.

    Header checks are eager: every referenced feature/score file must exist
    and its header must agree with the manifest's clip count and modality
    dimension. Payload floats are not read here.
    """
    path = Path(path)
    root = path.parent
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ManifestError(f"{path}: empty manifest")

    header = _parse_json_line(path, 1, lines[0])
    ls_obj = _require(header, "label_space", path, 1)
    label_space = LabelSpace(
        num_classes=int(ls_obj["num_classes"]), names=tuple(ls_obj["names"])
    )
    modalities = tuple(
        ModalityDescriptor(
            name=m["name"], dim=int(m["dim"]), window_clips=int(m.get("window_clips", 1))
        )
        for m in _require(header, "modalities", path, 1)
    )
    split = _require(header, "split", path, 1)
    dataset_id = header.get("dataset_id", path.stem)
    metadata = header.get("metadata", {})
    mod_by_name = {m.name: m for m in modalities}

    videos: list[ManifestEntry] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        obj = _parse_json_line(path, lineno, line)
        vid = str(_require(obj, "id", path, lineno))
        label = int(_require(obj, "label", path, lineno))
        num_clips = int(_require(obj, "num_clips", path, lineno))
        feature_paths = dict(_require(obj, "features", path, lineno))
        score_path = obj.get("scores")
        if num_clips < 1:
            raise ManifestError(f"{path}:{lineno}: video {vid!r}: num_clips must be >= 1")
        if not 0 <= label < label_space.num_classes:
            raise ManifestError(
                f"{path}:{lineno}: video {vid!r}: label {label} out of range "
                f"[0, {label_space.num_classes})"
            )
        if set(feature_paths) != set(mod_by_name):
            raise ManifestError(
                f"{path}:{lineno}: video {vid!r}: feature map must cover exactly the "
                f"declared modalities {sorted(mod_by_name)}, got {sorted(feature_paths)}"
            )
        for name, rel in feature_paths.items():
            desc = mod_by_name[name]
            fpath = root / rel
            if not fpath.exists():
                raise ManifestError(
                    f"{path}:{lineno}: video {vid!r}: feature file {rel!r} not found"
                )
            rows, cols = container.read_matrix_header(fpath, container.MAGIC_FEATURES)
            if rows != num_clips or cols != desc.dim:
                raise ManifestError(
                    f"{path}:{lineno}: video {vid!r}, modality {name!r}: feature file "
                    f"header says {rows}x{cols}, manifest expects {num_clips}x{desc.dim}"
                )
        if score_path is not None:
            spath = root / score_path
            if not spath.exists():
                raise ManifestError(
                    f"{path}:{lineno}: video {vid!r}: score file {score_path!r} not found"
                )
            rows, cols = container.read_matrix_header(spath, container.MAGIC_SCORES)
            if rows != num_clips or cols != label_space.num_classes:
                raise ManifestError(
                    f"{path}:{lineno}: video {vid!r}: score file header says "
                    f"{rows}x{cols}, expected {num_clips}x{label_space.num_classes}"
                )
        videos.append(ManifestEntry(vid, label, num_clips, feature_paths, score_path))

    return DatasetManifest(
        label_space=label_space,
        modalities=modalities,
        videos=videos,
        split=split,
        root=root,
        dataset_id=dataset_id,
        metadata=metadata,
    )


def write_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    """Write a manifest in canonical form (sorted keys, one record per line).

    Loading a canonical manifest and writing it again is byte-identical.
    """
    path = Path(path)
    header = {
        "dataset_id": manifest.dataset_id,
        "label_space": {
            "num_classes": manifest.label_space.num_classes,
            "names": list(manifest.label_space.names),
        },
        "metadata": manifest.metadata,
        "modalities": [
            {"name": m.name, "dim": m.dim, "window_clips": m.window_clips}
            for m in manifest.modalities
        ],
        "split": manifest.split,
    }
    lines = [json.dumps(header, sort_keys=True)]
    for entry in manifest.videos:
        lines.append(
            json.dumps(
                {
                    "id": entry.id,
                    "label": entry.label,
                    "num_clips": entry.num_clips,
                    "features": entry.feature_paths,
                    "scores": entry.score_path,
                },
                sort_keys=True,
            )
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def validate_dataset(manifest: DatasetManifest) -> list[str]:
    """Check every video record against the type invariants.

    Returns a list of human-readable violations, each naming the video,
    the modality where applicable, and the broken rule. An empty list
    means the dataset is fully consistent. I/O problems raise instead.
    """
    violations: list[str] = []
    C = manifest.label_space.num_classes
    for entry in manifest.videos:
        rec = manifest.video(entry.id)
        if rec.num_clips < 1:
            violations.append(f"video {rec.id}: num_clips must be >= 1")
        if not 0 <= rec.label < C:
            violations.append(f"video {rec.id}: label {rec.label} out of range [0, {C})")
        for desc in manifest.modalities:
            if desc.name not in rec.features:
                violations.append(f"video {rec.id}: modality {desc.name}: missing features")
                continue
            arr = rec.features[desc.name]
            if arr.shape != (rec.num_clips, desc.dim):
                violations.append(
                    f"video {rec.id}: modality {desc.name}: shape {arr.shape} != "
                    f"({rec.num_clips}, {desc.dim})"
                )
            elif not np.all(np.isfinite(arr)):
                violations.append(
                    f"video {rec.id}: modality {desc.name}: non-finite feature values"
                )
        if rec.scripted_scores is not None:
            scores = np.asarray(rec.scripted_scores, dtype=np.float64)
            if scores.shape != (rec.num_clips, C):
                violations.append(
                    f"video {rec.id}: scripted scores shape {scores.shape} != "
                    f"({rec.num_clips}, {C})"
                )
                continue
            if np.any(scores < -PROB_TOL) or np.any(scores > 1 + PROB_TOL):
                violations.append(f"video {rec.id}: scripted score entries outside [0, 1]")
            row_sums = scores.sum(axis=1)
            bad = np.flatnonzero(np.abs(row_sums - 1.0) > PROB_TOL)
            for i in bad:
                violations.append(
                    f"video {rec.id}: scripted score row {int(i)} sums to "
                    f"{row_sums[i]:.6f}, expected 1 within {PROB_TOL}"
                )
    return violations


def load_saliency_masks(path: str | Path) -> dict[str, np.ndarray]:
    """Read a ground-truth mask file (one `video_id bits` line per video)."""
    masks: dict[str, np.ndarray] = {}
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2 or set(parts[1]) - {"0", "1"}:
                raise ManifestError(f"{path}:{lineno}: malformed mask line")
            masks[parts[0]] = np.array([ch == "1" for ch in parts[1]], dtype=bool)
    return masks


def write_saliency_masks(masks: Mapping[str, np.ndarray], path: str | Path) -> None:
    """Write ground-truth masks as line-delimited `video_id bits` records."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for vid, mask in masks.items():
            bits = "".join("1" if b else "0" for b in np.asarray(mask, dtype=bool))
            fh.write(f"{vid} {bits}\n")
