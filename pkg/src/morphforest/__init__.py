"""Unsupervised morphological forests: contrastive estimation plus an affix-sparsity ILP."""
__version__ = "0.1.0"

from .config import RunConfig
from .corpus import Vocabulary, WordVectors, load_vectors, load_wordlist
from .pipeline import Forest, ForestModel, families, root_of, score_forest, segment, train

__all__ = ["RunConfig", "Vocabulary", "WordVectors", "load_vectors", "load_wordlist", "Forest",
           "ForestModel", "families", "root_of", "score_forest", "segment", "train",
           "__version__"]
