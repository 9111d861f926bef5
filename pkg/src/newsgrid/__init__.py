"""newsgrid: newspaper page layout parsing.

Converts pixel-level logical label maps of digitized newspaper pages into a
reading-ordered list of articles serialized as METS/ALTO, with a synthetic
page generator and an evaluation harness for verification.
"""

__version__ = "0.1.0"

from .labels import InformativeLabel, LabelImage, RawLabel, to_informative
from .smoothing import EntityImage, majority_vote_smooth
from .synth import Degradations, GroundTruth, PageRecipe, SectionSpec, generate_issue, generate_page
from .config import PipelineConfig
from .pipeline import IssueResult, PageResult, segment_issue, segment_page

__all__ = [
    "InformativeLabel",
    "LabelImage",
    "RawLabel",
    "to_informative",
    "EntityImage",
    "majority_vote_smooth",
    "Degradations",
    "GroundTruth",
    "PageRecipe",
    "SectionSpec",
    "generate_issue",
    "generate_page",
    "PipelineConfig",
    "IssueResult",
    "PageResult",
    "segment_issue",
    "segment_page",
    "__version__",
]
