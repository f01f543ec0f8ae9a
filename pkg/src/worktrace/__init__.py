"""Pipeline for measuring how AI-generated dialogue content flows into a final report.

The package ingests coded human/assistant transcripts, final reports, and
grader scores; chunks the text into overlapping context windows; builds a
multipartite semantic graph per participant; propagates pairwise similarity
scores up the chunk hierarchy with Sinkhorn-Knopp-balanced weights; and
computes usage and dialogue-traversal metrics keyed to a validated task
decomposition.
"""

__version__ = "0.1.0"
