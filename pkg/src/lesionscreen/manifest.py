"""Dataset manifest: loading, validation, and binary relabeling.

A manifest is a UTF-8 CSV with header ``id,path,label,source,sha256``. It is
the source of truth for the image corpus: image files are referenced by path
(relative paths resolve against the manifest's directory) and carry a sha256
digest so the corpus can be re-verified after download.
"""

from __future__ import annotations

import csv
import hashlib
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping

from PIL import Image, UnidentifiedImageError

from .labels import MULTICLASS_CLASSES, Task, LabelError, parse_label, to_binary

MANIFEST_COLUMNS = ("id", "path", "label", "source", "sha256")


class ManifestError(ValueError):
    """Malformed manifest file or rows."""


@dataclass(frozen=True)
class ImageRecord:
    """One labeled image. ``source_label`` keeps the original 4-class label
    after binary relabeling so folds stay stratified over all four classes."""

    id: str
    path: Path
    label: str
    source: str
    sha256: str
    source_label: str = ""

    def __post_init__(self):
        if not self.source_label:
            object.__setattr__(self, "source_label", self.label)


@dataclass(frozen=True)
class DatasetManifest:
    records: tuple[ImageRecord, ...]
    task: Task = Task.MULTICLASS
    version: str = "1"

    @property
    def class_counts(self) -> dict[str, int]:
        counts = Counter(r.label for r in self.records)
        return {name: counts.get(name, 0) for name in self.task.class_names}

    def __len__(self) -> int:
        return len(self.records)

    def by_id(self) -> dict[str, ImageRecord]:
        return {r.id: r for r in self.records}


def load_manifest(path: str | Path, version: str = "1") -> DatasetManifest:
    """Load a manifest CSV. Does not touch the image files themselves.

    Raises ManifestError on a missing file, a malformed header or row
    (reported with its 1-based line number), or a duplicate record id.
    """
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"manifest file not found: {path}")
    base = path.parent

    records: list[ImageRecord] = []
    seen: set[str] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        if header is None or tuple(h.strip() for h in header) != MANIFEST_COLUMNS:
            raise ManifestError(
                f"{path}: expected header {','.join(MANIFEST_COLUMNS)}, got {header}"
            )
        for row in reader:
            line = reader.line_num
            if any(row.get(col) in (None, "") for col in ("id", "path", "label")):
                raise ManifestError(f"{path}:{line}: missing id/path/label field")
            rid = row["id"].strip()
            if rid in seen:
                raise ManifestError(f"{path}:{line}: duplicate record id {rid!r}")
            seen.add(rid)
            try:
                label = parse_label(row["label"])
            except LabelError as exc:
                raise ManifestError(f"{path}:{line}: {exc}") from exc
            rel = Path(row["path"].strip())
            records.append(
                ImageRecord(
                    id=rid,
                    path=rel if rel.is_absolute() else base / rel,
                    label=label,
                    source=(row.get("source") or "").strip(),
                    sha256=(row.get("sha256") or "").strip().lower(),
                )
            )
    return DatasetManifest(records=tuple(records), task=Task.MULTICLASS, version=version)


def write_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    """Write the manifest CSV (paths relative to the output directory when possible)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_COLUMNS)
        for r in manifest.records:
            try:
                rel = r.path.relative_to(path.parent)
            except ValueError:
                rel = r.path
            writer.writerow([r.id, rel.as_posix(), r.source_label, r.source, r.sha256])


def file_sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    details: tuple[str, ...] = ()


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[CheckResult, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [
                {"name": c.name, "passed": c.passed, "details": list(c.details)}
                for c in self.checks
            ],
        }


def validate_manifest(manifest: DatasetManifest) -> ValidationReport:
    """Run the four integrity checks: file existence, decodability, hash
    uniqueness, and class balance. Failures are report entries, not exceptions.
    """
    missing: list[str] = []
    undecodable: list[str] = []
    digests: dict[str, list[str]] = {}
    mismatched: list[str] = []

    for r in manifest.records:
        if not r.path.is_file():
            missing.append(f"{r.id}: {r.path} does not exist")
            continue
        try:
            with Image.open(r.path) as img:
                img.convert("RGB").load()
        except (UnidentifiedImageError, OSError, ValueError):
            undecodable.append(f"{r.id}: {r.path} does not decode as an image")
        digest = file_sha256(r.path)
        digests.setdefault(digest, []).append(r.id)
        if r.sha256 and digest != r.sha256:
            mismatched.append(f"{r.id}: recorded digest does not match file contents")

    duplicate_groups = [ids for ids in digests.values() if len(ids) > 1]
    hash_details = [
        "duplicate image contents: " + ", ".join(sorted(ids)) for ids in duplicate_groups
    ] + mismatched

    counts = manifest.class_counts
    balance_details: list[str] = []
    if manifest.records:
        modal = Counter(counts.values()).most_common(1)[0][0]
        balance_details = [
            f"{name}: {count} records (expected {modal})"
            for name, count in counts.items()
            if count != modal
        ]

    return ValidationReport(
        checks=(
            CheckResult("files_exist", not missing, tuple(missing)),
            CheckResult("images_decode", not undecodable, tuple(undecodable)),
            CheckResult("hashes_unique", not hash_details, tuple(hash_details)),
            CheckResult("classes_balanced", not balance_details, tuple(balance_details)),
        )
    )


def relabel_binary(manifest: DatasetManifest) -> DatasetManifest:
    """Collapse the 4-class manifest to Mpox-vs-Others.

    The original label is retained on each record (``source_label``) so fold
    stratification still sees all four classes.
    """
    if manifest.task is Task.BINARY:
        return manifest
    records = tuple(
        replace(r, label=to_binary(r.label), source_label=r.label)
        for r in manifest.records
    )
    return DatasetManifest(records=records, task=Task.BINARY, version=manifest.version)


def build_manifest(
    root: str | Path,
    sources: Mapping[str, str] | None = None,
    version: str = "1",
    extensions: Iterable[str] = (".jpg", ".jpeg", ".png"),
) -> DatasetManifest:
    """Scan ``root``'s per-class subdirectories and build a manifest with
    computed digests. This is the "assemble and verify" step for a freshly
    downloaded corpus; it never copies or mutates the images.
    """
    root = Path(root)
    exts = {e.lower() for e in extensions}
    dirs = {d.name.lower(): d for d in root.iterdir() if d.is_dir()}
    records = []
    for class_name in MULTICLASS_CLASSES:
        class_dir = dirs.get(class_name.lower())
        if class_dir is None:
            continue
        for i, img_path in enumerate(sorted(class_dir.iterdir())):
            if img_path.suffix.lower() not in exts:
                continue
            rid = f"{class_name.lower()}{i:03d}"
            records.append(
                ImageRecord(
                    id=rid,
                    path=img_path,
                    label=class_name,
                    source=(sources or {}).get(class_name, ""),
                    sha256=file_sha256(img_path),
                )
            )
    return DatasetManifest(records=tuple(records), version=version)
