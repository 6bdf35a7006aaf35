"""Provider profiles, request assembly, cost estimation and model clients."""

from .clients import (
    AnthropicClient,
    Client,
    ClientError,
    CompletionResult,
    MockClient,
    OpenAIChatClient,
    ProviderError,
    RetryBudget,
    RetryPolicy,
    TranscriptWriter,
    TransportError,
    Usage,
    execute,
)
from .profiles import (
    BUILTIN_PROFILES,
    TEXT_COUNTERS,
    ProfileError,
    ProviderProfile,
    UnknownCounterError,
    chars_div4,
    dumps_profile,
    get_text_counter,
    load_profile,
    loads_profile,
    register_text_counter,
)
from .requests import (
    Comparison,
    Mode,
    PromptRequest,
    build_request,
    compare,
    estimate_cost,
    paired_counts,
    request_counts,
    request_image_tokens,
)

__all__ = [
    "AnthropicClient",
    "BUILTIN_PROFILES",
    "Client",
    "ClientError",
    "Comparison",
    "CompletionResult",
    "MockClient",
    "Mode",
    "OpenAIChatClient",
    "ProfileError",
    "PromptRequest",
    "ProviderError",
    "ProviderProfile",
    "RetryBudget",
    "RetryPolicy",
    "TEXT_COUNTERS",
    "TranscriptWriter",
    "TransportError",
    "UnknownCounterError",
    "Usage",
    "build_request",
    "chars_div4",
    "compare",
    "dumps_profile",
    "estimate_cost",
    "execute",
    "get_text_counter",
    "load_profile",
    "loads_profile",
    "paired_counts",
    "register_text_counter",
    "request_counts",
    "request_image_tokens",
]
