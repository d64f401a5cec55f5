"""Random-matrix spectral laboratory.

Subpackages cover atom distributions and matrix sampling (ensembles),
dense complex linear algebra (linalg), empirical spectral statistics
(spectral), small-ball / concentration probabilities (smallball),
generalized arithmetic progressions (gaps), the inverse Littlewood-Offord
structure search (inverse_lo), least-singular-value experiments (lsv),
and the experiment pipeline plus CLI (pipeline, cli).
"""

__version__ = "0.1.0"
