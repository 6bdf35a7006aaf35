"""Rasterization backends.

A backend supplies glyph metrics for layout and draws laid-out lines. Glyphs are
placed one by one at the advances reported by :meth:`metrics`, so the drawn
line width equals the measured width (no kerning drift between layout and pixels).

Instances cache fonts and glyph masks and are not reentrant; use one per worker.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import PIL
from PIL import Image, ImageDraw, ImageFont

from .config import Font, RenderConfig
from .layout import GlyphMetrics, TextLayout

FONT_DIRS = [
    Path(p)
    for p in os.environ.get("IPPG_FONT_PATH", "").split(os.pathsep)
    if p
] + [
    Path("/usr/share/fonts"),
    Path("/usr/local/share/fonts"),
    Path("/Library/Fonts"),
    Path("/System/Library/Fonts"),
    Path("C:/Windows/Fonts"),
]

# Preferred face files per family, closest metric match first.
FONT_CANDIDATES: dict[Font, tuple[str, ...]] = {
    Font.ARIAL: ("Arial.ttf", "arial.ttf", "LiberationSans-Regular.ttf", "DejaVuSans.ttf"),
    Font.HELVETICA: ("Helvetica.ttf", "Helvetica.ttc", "LiberationSans-Regular.ttf", "DejaVuSans.ttf"),
    Font.COURIER: ("Courier New.ttf", "cour.ttf", "LiberationMono-Regular.ttf", "DejaVuSansMono.ttf"),
    Font.TIMES: ("Times New Roman.ttf", "times.ttf", "LiberationSerif-Regular.ttf", "DejaVuSerif.ttf"),
}


class RenderBackend(Protocol):
    name: str

    def version(self, config: RenderConfig) -> str: ...

    def metrics(self, config: RenderConfig) -> GlyphMetrics: ...

    def draw(self, canvas: Image.Image, layout: TextLayout, config: RenderConfig, top: int = 0) -> None: ...


def find_font_file(font: Font) -> Path | None:
    """First installed file for ``font``, or None (``Font.DEFAULT`` always returns None)."""
    for filename in FONT_CANDIDATES.get(font, ()):
        for root in FONT_DIRS:
            if not root.is_dir():
                continue
            direct = root / filename
            if direct.is_file():
                return direct
            hits = sorted(root.rglob(filename))
            if hits:
                return hits[0]
    return None


@dataclass
class _PillowMetrics:
    font: ImageFont.FreeTypeFont
    cache: dict[str, int]

    def advance(self, glyph: str) -> int:
        width = self.cache.get(glyph)
        if width is None:
            width = math.ceil(self.font.getlength(glyph))
            self.cache[glyph] = width
        return width


class PillowBackend:
    """FreeType rendering through Pillow.

    Font families resolve to installed files via :data:`FONT_CANDIDATES`; the
    ``Default`` family and any family with no installed file use Pillow's
    bundled scalable face. The face actually used is reported by :meth:`face`.
    """

    name = "pillow"

    def __init__(self) -> None:
        self._fonts: dict[tuple[Font, float], tuple[ImageFont.FreeTypeFont, str]] = {}
        self._metrics: dict[tuple[Font, float], _PillowMetrics] = {}
        self._masks: dict[tuple[Font, float, str], tuple[Image.Image | None, tuple[int, int]]] = {}
        self._files: dict[Font, Path | None] = {}

    def _font(self, config: RenderConfig) -> tuple[ImageFont.FreeTypeFont, str]:
        px = float(config.font_px)
        key = (config.font, px)
        if key not in self._fonts:
            if config.font not in self._files:
                self._files[config.font] = find_font_file(config.font)
            path = self._files[config.font]
            if path is None:
                font = ImageFont.load_default(size=px)
                face = "builtin:" + " ".join(font.getname())
            else:
                font = ImageFont.truetype(str(path), size=px, layout_engine=ImageFont.Layout.BASIC)
                face = path.name
            self._fonts[key] = (font, face)
        return self._fonts[key]

    def face(self, config: RenderConfig) -> str:
        return self._font(config)[1]

    def version(self, config: RenderConfig) -> str:
        return f"pillow-{PIL.__version__}/{self.face(config)}"

    def metrics(self, config: RenderConfig) -> GlyphMetrics:
        key = (config.font, float(config.font_px))
        if key not in self._metrics:
            self._metrics[key] = _PillowMetrics(self._font(config)[0], {})
        return self._metrics[key]

    def _mask(self, config: RenderConfig, glyph: str) -> tuple[Image.Image | None, tuple[int, int]]:
        key = (config.font, float(config.font_px), glyph)
        if key not in self._masks:
            font = self._font(config)[0]
            bbox = font.getbbox(glyph, anchor="la")
            if bbox[2] <= bbox[0] or bbox[3] <= bbox[1]:
                self._masks[key] = (None, (0, 0))
            else:
                mask = Image.new("L", (bbox[2] - bbox[0], bbox[3] - bbox[1]), 0)
                ImageDraw.Draw(mask).text((-bbox[0], -bbox[1]), glyph, font=font, fill=255, anchor="la")
                self._masks[key] = (mask, (bbox[0], bbox[1]))
        return self._masks[key]

    def draw(self, canvas: Image.Image, layout: TextLayout, config: RenderConfig, top: int = 0) -> None:
        metrics = self.metrics(config)
        ink = config.color.rgb
        y = top + layout.margin_px
        for line in layout.lines:
            x = layout.margin_px
            for ch in line:
                mask, (dx, dy) = self._mask(config, ch)
                if mask is not None:
                    canvas.paste(ink, (x + dx, y + dy, x + dx + mask.width, y + dy + mask.height), mask)
                x += metrics.advance(ch)
            y += layout.line_height_px


class BoxBackend:
    """Font-free backend: every glyph is a filled box of fixed advance.

    Useful where no fonts are installed and in tests that only inspect layout.
    """

    name = "box"

    def __init__(self, advance_em: float = 0.6) -> None:
        self.advance_em = advance_em

    def version(self, config: RenderConfig) -> str:
        return f"box-{self.advance_em}"

    def face(self, config: RenderConfig) -> str:
        return "box"

    def metrics(self, config: RenderConfig) -> GlyphMetrics:
        return _BoxMetrics(max(1, math.ceil(self.advance_em * config.font_px)))

    def draw(self, canvas: Image.Image, layout: TextLayout, config: RenderConfig, top: int = 0) -> None:
        advance = self.metrics(config).advance("x")
        glyph_h = max(1, math.floor(config.font_px * 0.7))
        y = top + layout.margin_px
        for line in layout.lines:
            x = layout.margin_px
            for ch in line:
                if not ch.isspace():
                    canvas.paste(config.color.rgb, (x, y, x + max(1, advance - 1), y + glyph_h))
                x += advance
            y += layout.line_height_px


@dataclass(frozen=True)
class _BoxMetrics:
    width: int

    def advance(self, glyph: str) -> int:
        return self.width


_default_backend: PillowBackend | None = None


def default_backend() -> PillowBackend:
    """Process-wide Pillow backend for single-threaded callers."""
    global _default_backend
    if _default_backend is None:
        _default_backend = PillowBackend()
    return _default_backend
