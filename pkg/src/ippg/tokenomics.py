"""Cost algebra for baseline (text + image) versus packaged (text-in-image) requests.

Money is carried as :class:`decimal.Decimal` USD so that per-token prices such as
``2.5e-6`` multiply and sum without float drift. Formatting to fixed decimal
places happens only at the reporting edge (:func:`format_usd`, :func:`savings_pct`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Callable, Union

__all__ = [
    "BUILTIN_PRICING",
    "BreakEven",
    "CostBreakdown",
    "InvalidDimensionError",
    "PixelLinear",
    "PricingModel",
    "TileBased",
    "TokenCounts",
    "TokenScheme",
    "UndefinedPercentageError",
    "break_even",
    "cost_baseline",
    "cost_ippg",
    "delta_image_tokens",
    "format_usd",
    "identity_resize",
    "image_tokens",
    "ippg_strictly_cheaper",
    "savings",
    "savings_pct",
    "to_decimal",
]


class InvalidDimensionError(ValueError):
    """Image width or height is not a positive integer."""


class UndefinedPercentageError(ValueError):
    """A percentage was requested relative to a non-positive baseline."""


def to_decimal(value: Decimal | int | float | str) -> Decimal:
    """Coerce a number to Decimal; floats go through ``repr`` so 2.5e-06 stays 2.5e-06."""
    if isinstance(value, Decimal):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not a price")
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite amount: {value!r}")
        return Decimal(repr(value))
    return Decimal(value)


@dataclass(frozen=True)
class PricingModel:
    """Per-token USD prices for one provider."""

    input_price: Decimal
    output_price: Decimal
    image_price: Decimal

    def __post_init__(self) -> None:
        for name in ("input_price", "output_price", "image_price"):
            value = to_decimal(getattr(self, name))
            if not value.is_finite() or value < 0:
                raise ValueError(f"{name} must be a finite non-negative price, got {value}")
            object.__setattr__(self, name, value)

    @property
    def image_priced_as_input(self) -> bool:
        return self.image_price == self.input_price

    @property
    def output_ratio(self) -> Decimal:
        return self.output_price / self.input_price


BUILTIN_PRICING: dict[str, PricingModel] = {
    "gpt-4o": PricingModel(Decimal("2.50E-6"), Decimal("1.00E-5"), Decimal("2.50E-6")),
    "gpt-4.1": PricingModel(Decimal("2.00E-6"), Decimal("8.00E-6"), Decimal("2.00E-6")),
    "claude-3.5-sonnet": PricingModel(Decimal("3.00E-6"), Decimal("1.50E-5"), Decimal("3.00E-6")),
}


def _positive_int(name: str, value: int) -> None:
    if isinstance(value, bool) or not isinstance(value, int) or value <= 0:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")


@dataclass(frozen=True)
class TileBased:
    """OpenAI-style tokens: a fixed base plus a per-tile charge over a square tile grid."""

    base_tokens: int = 85
    tile_tokens: int = 170
    tile_side_px: int = 512

    def __post_init__(self) -> None:
        _positive_int("base_tokens", self.base_tokens)
        _positive_int("tile_tokens", self.tile_tokens)
        _positive_int("tile_side_px", self.tile_side_px)


@dataclass(frozen=True)
class PixelLinear:
    """Claude-style tokens: proportional to pixel area."""

    pixels_per_token: int = 750

    def __post_init__(self) -> None:
        _positive_int("pixels_per_token", self.pixels_per_token)


TokenScheme = Union[TileBased, PixelLinear]
ResizePolicy = Callable[[int, int], "tuple[int, int]"]


def identity_resize(width: int, height: int) -> tuple[int, int]:
    return width, height


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def image_tokens(
    scheme: TokenScheme,
    width: int,
    height: int,
    resize: ResizePolicy | None = None,
) -> int:
    """Image tokens billed for a ``width`` x ``height`` image.

    ``resize`` maps the submitted dimensions to the dimensions the provider
    bills on. It defaults to identity; no provider-side downscaling is assumed.
    Pixel-linear counts are rounded up so estimates never under-bill.
    """
    for name, value in (("width", width), ("height", height)):
        if isinstance(value, bool) or not isinstance(value, int) or value < 1:
            raise InvalidDimensionError(f"{name} must be a positive integer, got {value!r}")
    if resize is not None:
        width, height = resize(width, height)
        if width < 1 or height < 1:
            raise InvalidDimensionError(f"resize policy produced {width}x{height}")

    if isinstance(scheme, TileBased):
        tiles = _ceil_div(width, scheme.tile_side_px) * _ceil_div(height, scheme.tile_side_px)
        return scheme.base_tokens + scheme.tile_tokens * tiles
    if isinstance(scheme, PixelLinear):
        return _ceil_div(width * height, scheme.pixels_per_token)
    raise TypeError(f"unknown token scheme: {scheme!r}")


@dataclass(frozen=True)
class TokenCounts:
    """Token counts for one query.

    ``input_text`` is the prompt text that packaging moves into the image.
    ``shared_text`` is text sent as text in both modes (the system prompt);
    it defaults to zero and cancels out of every comparison.
    """

    input_text: int = 0
    output_text: int = 0
    image_baseline: int = 0
    image_ippg: int = 0
    shared_text: int = 0

    def __post_init__(self) -> None:
        for name in ("input_text", "output_text", "image_baseline", "image_ippg", "shared_text"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {value!r}")


@dataclass(frozen=True)
class CostBreakdown:
    input_text_cost: Decimal
    image_cost: Decimal
    output_cost: Decimal
    total: Decimal = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "total", self.input_text_cost + self.image_cost + self.output_cost)


def cost_baseline(pricing: PricingModel, counts: TokenCounts) -> CostBreakdown:
    return CostBreakdown(
        input_text_cost=pricing.input_price * (counts.input_text + counts.shared_text),
        image_cost=pricing.image_price * counts.image_baseline,
        output_cost=pricing.output_price * counts.output_text,
    )


def cost_ippg(pricing: PricingModel, counts: TokenCounts) -> CostBreakdown:
    return CostBreakdown(
        input_text_cost=pricing.input_price * counts.shared_text,
        image_cost=pricing.image_price * counts.image_ippg,
        output_cost=pricing.output_price * counts.output_text,
    )


def delta_image_tokens(counts: TokenCounts) -> int:
    """Extra image tokens caused by embedding the prompt (negative if the packaged image is smaller)."""
    return counts.image_ippg - counts.image_baseline


@dataclass(frozen=True)
class BreakEven:
    """Outcome of the strict-cheapness test.

    ``general_form`` is set when image and input prices differ, in which case
    the token-count shortcut does not apply and the verdict comes from a
    direct comparison of the two totals.
    """

    cheaper: bool
    general_form: bool
    delta_image_tokens: int

    def __bool__(self) -> bool:
        return self.cheaper


def break_even(pricing: PricingModel, counts: TokenCounts) -> BreakEven:
    delta = delta_image_tokens(counts)
    if pricing.image_priced_as_input:
        return BreakEven(delta < counts.input_text, False, delta)
    direct = cost_ippg(pricing, counts).total < cost_baseline(pricing, counts).total
    return BreakEven(direct, True, delta)


def ippg_strictly_cheaper(pricing: PricingModel, counts: TokenCounts) -> bool:
    return break_even(pricing, counts).cheaper


def savings(pricing: PricingModel, counts: TokenCounts) -> Decimal:
    """USD saved per query by packaging; negative when packaging costs more."""
    if pricing.image_priced_as_input:
        return pricing.input_price * (counts.input_text - delta_image_tokens(counts))
    return cost_baseline(pricing, counts).total - cost_ippg(pricing, counts).total


_TENTH = Decimal("0.1")


def savings_pct(
    baseline_cost: Decimal | float | str,
    ippg_cost: Decimal | float | str,
    places: int | None = 1,
) -> Decimal:
    """Percent saved relative to ``baseline_cost``, rounded half-up to ``places``.

    Pass ``places=None`` for the unrounded value.
    """
    base = to_decimal(baseline_cost)
    packed = to_decimal(ippg_cost)
    if not base > 0:
        raise UndefinedPercentageError(f"baseline cost must be positive, got {base}")
    pct = 100 * (base - packed) / base
    if places is None:
        return pct
    return pct.quantize(_TENTH**places, rounding=ROUND_HALF_UP)


def format_usd(amount: Decimal | float, places: int = 6) -> str:
    value = to_decimal(amount)
    if value.is_infinite():
        return "inf"
    return f"{value.quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_UP):f}"
