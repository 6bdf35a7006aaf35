"""Provider profiles: pricing, image-token scheme and text-token counter bound together.

Profile files are INI-style key/value text with a single ``[profile]`` section::

    [profile]
    name = gpt-4.1
    input_price = 2.00E-6
    output_price = 8.00E-6
    image_price = 2.00E-6
    scheme = tile
    base_tokens = 85
    tile_tokens = 170
    tile_side_px = 512
    text_counter = chars4
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Callable

from ..tokenomics import BUILTIN_PRICING, PixelLinear, PricingModel, TileBased, TokenScheme


class UnknownCounterError(LookupError):
    """No text-token counter is registered under the requested name."""


class ProfileError(ValueError):
    """A profile name or file could not be resolved or parsed."""


def chars_div4(text: str) -> int:
    """Offline heuristic: one token per four characters, rounded up."""
    return math.ceil(len(text) / 4)


TEXT_COUNTERS: dict[str, Callable[[str], int]] = {"chars4": chars_div4}


def register_text_counter(name: str, counter: Callable[[str], int]) -> None:
    """Make an exact tokenizer available to profiles under ``name``."""
    TEXT_COUNTERS[name] = counter


def get_text_counter(name: str) -> Callable[[str], int]:
    try:
        return TEXT_COUNTERS[name]
    except KeyError:
        raise UnknownCounterError(
            f"text counter {name!r} is not registered (available: {', '.join(sorted(TEXT_COUNTERS))})"
        ) from None


@dataclass(frozen=True)
class ProviderProfile:
    name: str
    pricing: PricingModel
    scheme: TokenScheme
    text_counter: str = "chars4"

    def count_text(self, text: str | None) -> int:
        if not text:
            return 0
        return get_text_counter(self.text_counter)(text)


BUILTIN_PROFILES: dict[str, ProviderProfile] = {
    "gpt-4o": ProviderProfile("gpt-4o", BUILTIN_PRICING["gpt-4o"], TileBased()),
    "gpt-4.1": ProviderProfile("gpt-4.1", BUILTIN_PRICING["gpt-4.1"], TileBased()),
    "claude-3.5-sonnet": ProviderProfile("claude-3.5-sonnet", BUILTIN_PRICING["claude-3.5-sonnet"], PixelLinear()),
}


def dumps_profile(profile: ProviderProfile) -> str:
    cp = configparser.ConfigParser(interpolation=None)
    section = {
        "name": profile.name,
        "input_price": f"{profile.pricing.input_price:E}",
        "output_price": f"{profile.pricing.output_price:E}",
        "image_price": f"{profile.pricing.image_price:E}",
    }
    if isinstance(profile.scheme, TileBased):
        section.update(
            scheme="tile",
            base_tokens=str(profile.scheme.base_tokens),
            tile_tokens=str(profile.scheme.tile_tokens),
            tile_side_px=str(profile.scheme.tile_side_px),
        )
    else:
        section.update(scheme="pixel", pixels_per_token=str(profile.scheme.pixels_per_token))
    section["text_counter"] = profile.text_counter
    cp["profile"] = section
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def loads_profile(text: str, source: str = "<string>") -> ProviderProfile:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text, source=source)
        sec = cp["profile"]
    except (configparser.Error, KeyError) as exc:
        raise ProfileError(f"{source}: not a profile file ({exc})") from exc
    try:
        pricing = PricingModel(
            Decimal(sec["input_price"]),
            Decimal(sec["output_price"]),
            Decimal(sec.get("image_price", sec["input_price"])),
        )
        kind = sec.get("scheme", "tile")
        if kind == "tile":
            scheme: TokenScheme = TileBased(
                sec.getint("base_tokens", 85), sec.getint("tile_tokens", 170), sec.getint("tile_side_px", 512)
            )
        elif kind == "pixel":
            scheme = PixelLinear(sec.getint("pixels_per_token", 750))
        else:
            raise ProfileError(f"{source}: unknown scheme {kind!r} (expected tile or pixel)")
        return ProviderProfile(sec.get("name", Path(source).stem), pricing, scheme, sec.get("text_counter", "chars4"))
    except (KeyError, InvalidOperation, ValueError) as exc:
        if isinstance(exc, ProfileError):
            raise
        raise ProfileError(f"{source}: {exc}") from exc


def load_profile(name_or_path: str | Path) -> ProviderProfile:
    """Resolve a built-in profile name or read a profile file."""
    if str(name_or_path) in BUILTIN_PROFILES:
        return BUILTIN_PROFILES[str(name_or_path)]
    path = Path(name_or_path)
    if not path.is_file():
        raise ProfileError(
            f"{name_or_path!s} is neither a built-in profile ({', '.join(BUILTIN_PROFILES)}) nor a file"
        )
    return loads_profile(path.read_text(encoding="utf-8"), source=str(path))
