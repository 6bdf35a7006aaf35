"""Greedy word wrapping against per-glyph advance widths.

Layout is pure: it needs only a :class:`GlyphMetrics` and never touches pixels,
so it can be checked against hand-stated metrics independently of any font.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Protocol

from .config import RenderConfig


class EmptyPromptError(ValueError):
    """Prompt text is empty after whitespace normalization."""


class WidthTooSmallError(ValueError):
    """Available line width cannot hold a single glyph."""


class GlyphMetrics(Protocol):
    def advance(self, glyph: str) -> int: ...


@dataclass(frozen=True)
class FixedMetrics:
    """Table-driven metrics: explicit widths per glyph, ``default`` for the rest."""

    widths: Mapping[str, int]
    default: int = 10

    def advance(self, glyph: str) -> int:
        return self.widths.get(glyph, self.default)


def measure(text: str, metrics: GlyphMetrics) -> int:
    return sum(metrics.advance(ch) for ch in text)


_INLINE_WS = re.compile(r"[^\S\n]+")


def split_paragraphs(text: str) -> list[str]:
    """Collapse spaces/tabs, keep explicit newlines as paragraph breaks.

    Leading and trailing blank paragraphs are dropped; interior blank lines stay.
    """
    text = text.replace("\r\n", "\n").replace("\r", "\n")
    paragraphs = [_INLINE_WS.sub(" ", p).strip() for p in text.split("\n")]
    while paragraphs and not paragraphs[0]:
        paragraphs.pop(0)
    while paragraphs and not paragraphs[-1]:
        paragraphs.pop()
    if not paragraphs:
        raise EmptyPromptError("prompt text is empty")
    return paragraphs


def normalize_whitespace(text: str) -> str:
    return " ".join(text.split())


def _hard_break(word: str, width: int, metrics: GlyphMetrics) -> list[str]:
    pieces: list[str] = []
    current, used = "", 0
    for ch in word:
        w = metrics.advance(ch)
        if current and used + w > width:
            pieces.append(current)
            current, used = "", 0
        current += ch
        used += w
    pieces.append(current)
    return pieces


def wrap_lines(text: str, max_line_width: int, metrics: GlyphMetrics) -> tuple[list[str], list[bool]]:
    """Wrap ``text`` and report, per line, whether it continues a hard-broken word.

    Returns ``(lines, joined)`` where ``joined[i]`` is True when line ``i`` and
    line ``i + 1`` are fragments of one word (no space between them).
    """
    paragraphs = split_paragraphs(text)
    widest = max((metrics.advance(ch) for p in paragraphs for ch in p if ch != " "), default=0)
    if max_line_width < widest or max_line_width <= 0:
        raise WidthTooSmallError(
            f"line width {max_line_width}px is narrower than the widest glyph ({widest}px)"
        )
    space = metrics.advance(" ")
    lines: list[str] = []
    joined: list[bool] = []

    for paragraph in paragraphs:
        if not paragraph:
            lines.append("")
            joined.append(False)
            continue
        current, used = "", 0
        for word in paragraph.split(" "):
            w = measure(word, metrics)
            if current and used + space + w <= max_line_width:
                current += " " + word
                used += space + w
                continue
            if current:
                lines.append(current)
                joined.append(False)
            if w <= max_line_width:
                current, used = word, w
                continue
            pieces = _hard_break(word, max_line_width, metrics)
            for piece in pieces[:-1]:
                lines.append(piece)
                joined.append(True)
            current, used = pieces[-1], measure(pieces[-1], metrics)
        lines.append(current)
        joined.append(False)
    return lines, joined


def wrap_text(text: str, max_line_width: int, metrics: GlyphMetrics) -> list[str]:
    """Greedy word wrap; words wider than the line are split at glyph boundaries."""
    return wrap_lines(text, max_line_width, metrics)[0]


def join_lines(lines: list[str], joined: list[bool]) -> str:
    """Inverse of :func:`wrap_lines` up to whitespace normalization."""
    out: list[str] = []
    for line, glue in zip(lines, joined):
        out.append(line)
        out.append("" if glue else " ")
    return normalize_whitespace("".join(out))


@dataclass(frozen=True)
class TextLayout:
    lines: tuple[str, ...]
    joined: tuple[bool, ...]
    line_height_px: int
    margin_px: int
    banner_width_px: int
    banner_height_px: int

    @property
    def text(self) -> str:
        return join_lines(list(self.lines), list(self.joined))


def min_wrappable_width(text: str, config: RenderConfig, metrics: GlyphMetrics) -> int:
    glyphs = {ch for p in split_paragraphs(text) for ch in p if ch != " "}
    return 2 * config.margin_px + max((metrics.advance(ch) for ch in glyphs), default=1)


def layout_text(text: str, config: RenderConfig, width: int, metrics: GlyphMetrics) -> TextLayout:
    """Lay out ``text`` in a banner ``width`` pixels wide with minimal height."""
    inner = width - 2 * config.margin_px
    if inner <= 0:
        raise WidthTooSmallError(f"width {width}px leaves no room inside {config.margin_px}px margins")
    lines, joined = wrap_lines(text, inner, metrics)
    return TextLayout(
        lines=tuple(lines),
        joined=tuple(joined),
        line_height_px=config.line_height_px,
        margin_px=config.margin_px,
        banner_width_px=width,
        banner_height_px=len(lines) * config.line_height_px + 2 * config.margin_px,
    )
