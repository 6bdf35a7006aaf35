"""Text layout and rasterization of prompts into images."""

from .backends import BoxBackend, PillowBackend, RenderBackend, default_backend, find_font_file
from .config import Color, Font, RenderConfig
from .layout import (
    EmptyPromptError,
    FixedMetrics,
    GlyphMetrics,
    TextLayout,
    WidthTooSmallError,
    join_lines,
    layout_text,
    measure,
    min_wrappable_width,
    normalize_whitespace,
    wrap_lines,
    wrap_text,
)
from .render import PackagedImage, as_rgb, package, render_text_only, text_digest

__all__ = [
    "BoxBackend",
    "Color",
    "EmptyPromptError",
    "FixedMetrics",
    "Font",
    "GlyphMetrics",
    "PackagedImage",
    "PillowBackend",
    "RenderBackend",
    "RenderConfig",
    "TextLayout",
    "WidthTooSmallError",
    "as_rgb",
    "default_backend",
    "find_font_file",
    "join_lines",
    "layout_text",
    "measure",
    "min_wrappable_width",
    "normalize_whitespace",
    "package",
    "render_text_only",
    "text_digest",
    "wrap_lines",
    "wrap_text",
]
