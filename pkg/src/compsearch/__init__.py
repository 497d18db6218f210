"""Search for neural-network components written in a small expression language.

Candidates are generated, validated, trained inside a fixed MLP on tabular
tasks, scored by pairwise win rates against baselines, and pruned with a
learned ranker.
"""

__version__ = "0.1.0"
