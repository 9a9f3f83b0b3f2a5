"""Deterministic video token compression via entropic optimal transport.

Tokens are compressed in two stages: per-frame selection down to K
representatives with an importance-derived mass vector, then cross-frame
merge/prune decisions driven by per-pair transport plans and a globally
conserved compression budget.
"""

from .container import TokenVideo, load_container, save_container, synthesize_video
from .compressor import PipelineConfig, RunReport, VideoTokenCompressor, run

__version__ = "0.1.0"

__all__ = [
    "TokenVideo",
    "load_container",
    "save_container",
    "synthesize_video",
    "PipelineConfig",
    "RunReport",
    "VideoTokenCompressor",
    "run",
    "__version__",
]
