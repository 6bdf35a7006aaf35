"""Image prompt packaging: render prompts into images and account for their token cost."""

__version__ = "0.1.0"
