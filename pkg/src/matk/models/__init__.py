"""Model adapters over injectable backbones."""

from .archetypes import (
    ARCHETYPES,
    PROMPT_TEMPLATE,
    PromptAdapter,
    SingleStreamAdapter,
    TextGenerativeAdapter,
    TwoStreamAdapter,
    build_adapter,
    build_prompt_adapter,
    build_single_stream_adapter,
    build_text_generative_adapter,
    build_two_stream_adapter,
)
from .backbones import register_backbone, registered_backbones, resolve_backbone
from .base import Embedding, ModelAdapter, init_parameters, target_weights

__all__ = [
    "ARCHETYPES",
    "Embedding",
    "ModelAdapter",
    "PROMPT_TEMPLATE",
    "PromptAdapter",
    "SingleStreamAdapter",
    "TextGenerativeAdapter",
    "TwoStreamAdapter",
    "build_adapter",
    "build_prompt_adapter",
    "build_single_stream_adapter",
    "build_text_generative_adapter",
    "build_two_stream_adapter",
    "init_parameters",
    "register_backbone",
    "registered_backbones",
    "resolve_backbone",
    "target_weights",
]
