from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from decimal import Decimal
from enum import Enum
from functools import cached_property
from typing import Any, Mapping, Sequence

from PIL import Image

from ..packager import EmptyPromptError, PackagedImage, RenderBackend, RenderConfig, as_rgb, package, render_text_only
from ..packager.render import Raster
from ..tokenomics import (
    BreakEven,
    CostBreakdown,
    TokenCounts,
    break_even,
    cost_baseline,
    cost_ippg,
    image_tokens,
    savings,
)
from .profiles import ProviderProfile


class Mode(str, Enum):
    BASELINE = "baseline"
    IPPG = "ippg"


@dataclass(frozen=True, eq=False)
class PromptRequest:
    """One model call.

    Baseline requests carry the prompt as ``user_text`` next to the original
    images. Packaged requests carry no user text; the prompt lives in
    ``images[0]`` (described by ``packaged``).
    """

    system_text: str
    user_text: str | None
    images: tuple[Image.Image, ...]
    mode: Mode
    packaged: PackagedImage | None = None
    metadata: Mapping[str, Any] = field(default_factory=dict)

    @cached_property
    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(self.mode.value.encode())
        for part in (self.system_text, self.user_text or ""):
            data = part.encode("utf-8")
            h.update(len(data).to_bytes(8, "big"))
            h.update(data)
        for img in self.images:
            h.update(f"{img.width}x{img.height}".encode())
            h.update(img.tobytes())
        return h.hexdigest()

    @property
    def image_sizes(self) -> list[tuple[int, int]]:
        return [(img.width, img.height) for img in self.images]


def build_request(
    profile: ProviderProfile | None,
    system_text: str,
    user_text: str | None,
    base_images: Sequence[Raster] = (),
    mode: Mode | str = Mode.BASELINE,
    config: RenderConfig | None = None,
    *,
    text_width: int | str = "auto",
    backend: RenderBackend | None = None,
    metadata: Mapping[str, Any] | None = None,
) -> PromptRequest:
    """Assemble a request in either mode.

    In packaged mode the prompt becomes a banner over the first base image, or
    a text-only render when there are no images; further images pass through.
    ``profile`` is accepted for symmetry with provider-specific assembly and is
    not needed by the built-in providers.
    """
    mode = Mode(mode)
    images = tuple(as_rgb(img) for img in base_images)
    if not (user_text and user_text.strip()) and not images:
        raise EmptyPromptError("request needs a prompt or at least one image")
    meta = dict(metadata or {})
    if mode is Mode.BASELINE:
        return PromptRequest(system_text, user_text, images, mode, None, meta)

    if not (user_text and user_text.strip()):
        raise EmptyPromptError("packaged mode needs a non-empty prompt to render")
    if images:
        packed = package(user_text, config, images[0], backend=backend)
        out = (packed.image,) + images[1:]
    else:
        packed = render_text_only(user_text, config, text_width, backend=backend)
        out = (packed.image,)
    return PromptRequest(system_text, None, out, mode, packed, meta)


def request_image_tokens(profile: ProviderProfile, request: PromptRequest) -> int:
    return sum(image_tokens(profile.scheme, w, h) for w, h in request.image_sizes)


def request_counts(profile: ProviderProfile, request: PromptRequest, expected_output_tokens: int = 0) -> TokenCounts:
    """Token counts for a single request, filled into the slots its mode bills."""
    n_img = request_image_tokens(profile, request)
    shared = profile.count_text(request.system_text)
    if request.mode is Mode.BASELINE:
        return TokenCounts(
            input_text=profile.count_text(request.user_text),
            output_text=expected_output_tokens,
            image_baseline=n_img,
            shared_text=shared,
        )
    return TokenCounts(output_text=expected_output_tokens, image_ippg=n_img, shared_text=shared)


def estimate_cost(profile: ProviderProfile, request: PromptRequest, expected_output_tokens: int = 0) -> CostBreakdown:
    """Expected USD cost of ``request``.

    The system prompt is billed as text in both modes; the user prompt only in
    baseline mode.
    """
    counts = request_counts(profile, request, expected_output_tokens)
    if request.mode is Mode.BASELINE:
        return cost_baseline(profile.pricing, counts)
    return cost_ippg(profile.pricing, counts)


@dataclass(frozen=True)
class Comparison:
    counts: TokenCounts
    baseline: CostBreakdown
    ippg: CostBreakdown
    verdict: BreakEven
    savings: Decimal


def paired_counts(
    profile: ProviderProfile,
    baseline: PromptRequest,
    packaged: PromptRequest,
    expected_output_tokens: int = 0,
) -> TokenCounts:
    """Combined counts for a baseline/packaged pair of the same sample."""
    if baseline.mode is not Mode.BASELINE or packaged.mode is not Mode.IPPG:
        raise ValueError("expected a (baseline, packaged) request pair")
    base = request_counts(profile, baseline, expected_output_tokens)
    return TokenCounts(
        input_text=base.input_text,
        output_text=expected_output_tokens,
        image_baseline=base.image_baseline,
        image_ippg=request_image_tokens(profile, packaged),
        shared_text=base.shared_text,
    )


def compare(
    profile: ProviderProfile,
    baseline: PromptRequest,
    packaged: PromptRequest,
    expected_output_tokens: int = 0,
) -> Comparison:
    counts = paired_counts(profile, baseline, packaged, expected_output_tokens)
    return Comparison(
        counts=counts,
        baseline=cost_baseline(profile.pricing, counts),
        ippg=cost_ippg(profile.pricing, counts),
        verdict=break_even(profile.pricing, counts),
        savings=savings(profile.pricing, counts),
    )
