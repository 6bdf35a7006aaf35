"""Dataset records: one JSON object per line.

Each record has ``id``, optional ``system_text`` and ``user_text``, an ``images``
list of paths (relative paths resolve against the dataset file's directory),
``ground_truth`` and a flat ``metadata`` object used for slicing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from PIL import Image


class DataError(ValueError):
    def __init__(self, message: str, line: int | None = None, path: str | Path | None = None) -> None:
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)
        self.line = line


@dataclass(frozen=True, eq=False)
class Sample:
    id: str
    system_text: str = ""
    user_text: str = ""
    image_paths: tuple[Path, ...] = ()
    ground_truth: str | None = None
    metadata: Mapping[str, str] = field(default_factory=dict)

    def load_images(self) -> list[Image.Image]:
        images = []
        for path in self.image_paths:
            with Image.open(path) as img:
                images.append(img.convert("RGB"))
        return images

    def to_record(self, relative_to: Path | None = None) -> dict:
        paths = []
        for p in self.image_paths:
            if relative_to is not None:
                try:
                    p = p.resolve().relative_to(relative_to)
                except ValueError:
                    pass
            paths.append(p.as_posix())
        return {
            "id": self.id,
            "system_text": self.system_text,
            "user_text": self.user_text,
            "images": paths,
            "ground_truth": self.ground_truth,
            "metadata": dict(self.metadata),
        }


def load_samples(path: str | Path, judged: bool = True) -> list[Sample]:
    """Read a JSON-lines dataset, validating ids, images and ground truth."""
    path = Path(path)
    root = path.parent
    samples: list[Sample] = []
    seen: dict[str, int] = {}
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read dataset: {exc}", path=path) from exc

    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            rec = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise DataError(f"invalid JSON ({exc.msg})", lineno, path) from exc
        if not isinstance(rec, dict) or "id" not in rec:
            raise DataError("record must be an object with an 'id'", lineno, path)
        sid = str(rec["id"])
        if sid in seen:
            raise DataError(f"duplicate id {sid!r} (first on line {seen[sid]})", lineno, path)
        seen[sid] = lineno

        truth = rec.get("ground_truth")
        if judged and (truth is None or not str(truth).strip()):
            raise DataError(f"record {sid!r} has no ground_truth", lineno, path)

        images = rec.get("images", [])
        if isinstance(images, str):
            images = [images]
        resolved = []
        for item in images:
            p = Path(item)
            p = p if p.is_absolute() else root / p
            if not p.is_file():
                raise DataError(f"image not found: {item}", lineno, path)
            resolved.append(p)

        meta = rec.get("metadata") or {}
        if not isinstance(meta, dict):
            raise DataError("metadata must be an object", lineno, path)
        samples.append(
            Sample(
                id=sid,
                system_text=rec.get("system_text") or "",
                user_text=rec.get("user_text") or "",
                image_paths=tuple(resolved),
                ground_truth=None if truth is None else str(truth),
                metadata={str(k): str(v) for k, v in meta.items()},
            )
        )
    return samples


def dump_samples(samples: Iterable[Sample], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    root = path.parent.resolve()
    lines = [json.dumps(s.to_record(root), ensure_ascii=False, sort_keys=True) for s in samples]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
