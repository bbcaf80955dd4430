"""Video emotion recognition, zero-shot transfer, attribution and summarization."""

from ._emokit import (
    Dictionary,
    EmokitError,
    NumericalError,
    Pipeline,
    SupervisedModel,
    ValidationError,
    ZeroShotRegressor,
    attribute,
    dap_predict,
    default_neighbors,
    encode_avgp,
    encode_video,
    load_embeddings,
    metrics,
    read_vef,
    summarize,
    t1s_predict,
    write_vef,
)

__all__ = [
    "Dictionary",
    "EmokitError",
    "NumericalError",
    "Pipeline",
    "SupervisedModel",
    "ValidationError",
    "ZeroShotRegressor",
    "attribute",
    "dap_predict",
    "default_neighbors",
    "encode_avgp",
    "encode_video",
    "load_embeddings",
    "metrics",
    "read_vef",
    "summarize",
    "t1s_predict",
    "write_vef",
]
