from __future__ import annotations

import hashlib
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np
from PIL import Image

from .backends import RenderBackend, default_backend
from .config import RenderConfig
from .layout import TextLayout, WidthTooSmallError, layout_text, min_wrappable_width, split_paragraphs

DEFAULT_WIDTH_LADDER = (512, 768, 1024, 1536, 2048)
DEFAULT_MAX_LINES = 40

Raster = Union[Image.Image, np.ndarray]


def as_rgb(image: Raster) -> Image.Image:
    if isinstance(image, np.ndarray):
        if image.ndim != 3 or image.shape[2] != 3 or image.dtype != np.uint8:
            raise ValueError(f"expected an HxWx3 uint8 array, got {image.shape} {image.dtype}")
        return Image.fromarray(image, "RGB")
    return image if image.mode == "RGB" else image.convert("RGB")


def text_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class PackagedImage:
    """A rendered prompt banner, optionally stacked on top of a base image."""

    image: Image.Image
    layout: TextLayout
    banner_height_px: int
    base_height_px: int
    config: RenderConfig
    text_digest: str
    face: str
    backend_version: str

    @property
    def width(self) -> int:
        return self.image.width

    @property
    def height(self) -> int:
        return self.image.height

    @property
    def pixels(self) -> np.ndarray:
        return np.asarray(self.image)

    def to_png(self) -> bytes:
        buf = io.BytesIO()
        self.image.save(buf, format="PNG")
        return buf.getvalue()

    def sidecar(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "banner_height_px": self.banner_height_px,
            "base_height_px": self.base_height_px,
            "line_height_px": self.layout.line_height_px,
            "lines": list(self.layout.lines),
            "config": self.config.to_dict(),
            "face": self.face,
            "backend": self.backend_version,
            "text_sha256": self.text_digest,
        }

    def save(self, png_path: str | Path) -> tuple[Path, Path]:
        """Write the PNG and a ``.json`` layout sidecar next to it."""
        png_path = Path(png_path)
        png_path.parent.mkdir(parents=True, exist_ok=True)
        png_path.write_bytes(self.to_png())
        meta_path = png_path.with_suffix(".json")
        meta_path.write_text(json.dumps(self.sidecar(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return png_path, meta_path


def _compose(
    text: str,
    config: RenderConfig,
    width: int,
    base: Image.Image | None,
    backend: RenderBackend,
) -> PackagedImage:
    metrics = backend.metrics(config)
    layout = layout_text(text, config, width, metrics)
    banner = Image.new("RGB", (width, layout.banner_height_px), config.background)
    backend.draw(banner, layout, config)
    base_h = 0 if base is None else base.height
    canvas = Image.new("RGB", (width, layout.banner_height_px + base_h), config.background)
    canvas.paste(banner, (0, 0))
    if base is not None:
        canvas.paste(base, (0, layout.banner_height_px))
    return PackagedImage(
        image=canvas,
        layout=layout,
        banner_height_px=layout.banner_height_px,
        base_height_px=base_h,
        config=config,
        text_digest=text_digest(text),
        face=getattr(backend, "face", lambda c: backend.name)(config),
        backend_version=backend.version(config),
    )


def package(
    text: str,
    config: RenderConfig | None = None,
    base_image: Raster | None = None,
    backend: RenderBackend | None = None,
) -> PackagedImage:
    """Put ``text`` in a minimal banner above ``base_image``, matching its width.

    The base pixels are copied unchanged below the banner. Without a base image
    this is :func:`render_text_only` at the default fixed width.
    """
    config = config or RenderConfig()
    backend = backend or default_backend()
    if base_image is None:
        return render_text_only(text, config, backend=backend)
    base = as_rgb(base_image)
    split_paragraphs(text)
    need = min_wrappable_width(text, config, backend.metrics(config))
    if base.width < need:
        raise WidthTooSmallError(f"base image is {base.width}px wide; this text needs at least {need}px")
    return _compose(text, config, base.width, base, backend)


def render_text_only(
    text: str,
    config: RenderConfig | None = None,
    width: int | str = 800,
    *,
    ladder: Sequence[int] = DEFAULT_WIDTH_LADDER,
    max_lines: int = DEFAULT_MAX_LINES,
    backend: RenderBackend | None = None,
) -> PackagedImage:
    """Render ``text`` alone, at a fixed pixel width or ``width="auto"``.

    The auto policy takes the narrowest ``ladder`` width whose layout has at
    most ``max_lines`` lines, falling back to the widest rung.
    """
    config = config or RenderConfig()
    backend = backend or default_backend()
    if width == "auto":
        metrics = backend.metrics(config)
        need = min_wrappable_width(text, config, metrics)
        rungs = sorted(w for w in ladder if w >= need)
        if not rungs:
            raise WidthTooSmallError(f"no ladder width reaches the minimum {need}px")
        chosen = rungs[-1]
        for rung in rungs:
            if len(layout_text(text, config, rung, metrics).lines) <= max_lines:
                chosen = rung
                break
        width = chosen
    if not isinstance(width, int) or isinstance(width, bool):
        raise ValueError(f"width must be an int or 'auto', got {width!r}")
    return _compose(text, config, width, None, backend)
