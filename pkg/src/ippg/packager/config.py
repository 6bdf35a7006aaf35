from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction


class Font(str, Enum):
    ARIAL = "Arial"
    COURIER = "Courier"
    HELVETICA = "Helvetica"
    TIMES = "Times"
    DEFAULT = "Default"


class Color(str, Enum):
    BLACK = "Black"
    DARK_BLUE = "DarkBlue"
    DARK_GREEN = "DarkGreen"
    DARK_RED = "DarkRed"
    GRAY = "Gray"

    @property
    def rgb(self) -> tuple[int, int, int]:
        return _COLOR_RGB[self]


_COLOR_RGB = {
    Color.BLACK: (0, 0, 0),
    Color.DARK_BLUE: (0, 0, 139),
    Color.DARK_GREEN: (0, 100, 0),
    Color.DARK_RED: (139, 0, 0),
    Color.GRAY: (128, 128, 128),
}

WHITE = (255, 255, 255)


@dataclass(frozen=True, order=True)
class RenderConfig:
    """How prompt text is rasterized.

    Point sizes convert to pixels at ``dpi`` (72 dpi makes 1 pt == 1 px).
    Line height is 1.2x the pixel size, rounded up.
    """

    font: Font = Font.ARIAL
    color: Color = Color.BLACK
    size_pt: float = 20
    dpi: int = 72
    margin_px: int = 10
    background: tuple[int, int, int] = WHITE

    def __post_init__(self) -> None:
        object.__setattr__(self, "font", Font(self.font))
        object.__setattr__(self, "color", Color(self.color))
        object.__setattr__(self, "background", tuple(int(c) for c in self.background))
        if not self.size_pt > 0:
            raise ValueError(f"size_pt must be positive, got {self.size_pt}")
        if isinstance(self.dpi, bool) or not isinstance(self.dpi, int) or self.dpi <= 0:
            raise ValueError(f"dpi must be a positive integer, got {self.dpi!r}")
        if isinstance(self.margin_px, bool) or not isinstance(self.margin_px, int) or self.margin_px < 0:
            raise ValueError(f"margin_px must be a non-negative integer, got {self.margin_px!r}")
        if len(self.background) != 3 or not all(0 <= c <= 255 for c in self.background):
            raise ValueError(f"background must be an RGB triple, got {self.background!r}")

    @property
    def font_px(self) -> Fraction:
        return Fraction(str(self.size_pt)) * self.dpi / 72

    @property
    def line_height_px(self) -> int:
        return math.ceil(Fraction(6, 5) * self.font_px)

    @property
    def key(self) -> str:
        """Stable label, e.g. ``DarkBlue/20/Courier``; unique within an ablation grid."""
        size = f"{self.size_pt:g}"
        label = f"{self.color.value}/{size}/{self.font.value}"
        if (self.dpi, self.margin_px, self.background) != (72, 10, WHITE):
            label += f"@{self.dpi}dpi/m{self.margin_px}/bg{','.join(map(str, self.background))}"
        return label

    def to_dict(self) -> dict:
        return {
            "font": self.font.value,
            "color": self.color.value,
            "size_pt": self.size_pt,
            "dpi": self.dpi,
            "margin_px": self.margin_px,
            "background": list(self.background),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RenderConfig":
        data = dict(data)
        if "background" in data:
            data["background"] = tuple(data["background"])
        return cls(**data)
