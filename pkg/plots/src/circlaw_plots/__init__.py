"""Publication-style figures from circular-law pipeline CSVs.

Couples only to the documented CSV schema (header
experiment,n,trial,seed,statistic,value,stderr,runtime_ms); the simulation
package is never imported.
"""

__version__ = "0.1.0"
