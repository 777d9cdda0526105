from .templates import (
    DescriptionTemplate,
    TEMPLATES,
    render_description,
    static_text,
)
from .records import EmbeddingRecord, load_embeddings, write_embeddings, write_embeddings_csv
from .stub import stub_embeddings, stub_vector
from .client import EndpointConfig, fetch_embeddings

__all__ = [
    "DescriptionTemplate",
    "TEMPLATES",
    "render_description",
    "static_text",
    "EmbeddingRecord",
    "load_embeddings",
    "write_embeddings",
    "write_embeddings_csv",
    "stub_embeddings",
    "stub_vector",
    "EndpointConfig",
    "fetch_embeddings",
]
