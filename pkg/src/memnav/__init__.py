"""memnav: spatial-memory exploration and grounding on synthetic scenes.

Pipeline: procedural scenes -> simulated episodes -> online object-memory
fusion and occupancy mapping -> expert trajectory collection -> a trained
ground-vs-explore scorer -> SR/SPL benchmarking with report figures.
"""

__version__ = "0.1.0"
