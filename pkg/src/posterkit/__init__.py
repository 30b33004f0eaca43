"""posterkit: deterministic poster-content selection, rendering, and
layout verification for parsed papers.

Submodules map to the pipeline stages:

* :mod:`posterkit.document`     parsed-paper model and JSON ingestion
* :mod:`posterkit.scoring`      scorer interface plus the n-gram reference
* :mod:`posterkit.plugin`       stdio scorer plug-in (attach a real LM)
* :mod:`posterkit.segmentation` perplexity-jump segmentation
* :mod:`posterkit.graph`        contribution matrix, graph, PageRank
* :mod:`posterkit.selection`    diversity-aware greedy selection
* :mod:`posterkit.render`       point-space typesetting to PNG pages
* :mod:`posterkit.layout`       strip-gradient layout verdicts
* :mod:`posterkit.metrics`      entropy, edit distance, classification
* :mod:`posterkit.benchgen`     synthetic ternary layout benchmark
* :mod:`posterkit.cli`          the ``posterkit`` command
"""

__version__ = "0.1.0"
