"""taghash: weakly-supervised learning-to-hash for tagged image collections.

Learns compact binary codes by regressing them onto denoised social tags
(column-wise l2,1 shrinkage), preserving anchor-graph visual similarity and
image-concept hypergraph correlations, all solved by an augmented-Lagrangian
cycle with a closed-form sign step.  Retrieval runs over bit-packed codes
with word-wise popcounts.
"""

__version__ = "0.1.0"
