"""MEV detection and FCFS-ordering analysis toolkit for Algorand-style chains.

Subpackages cover the normalized chain data model, block ingestion, cyclic
arbitrage detection, batch transaction issuance (BTI) detection, searcher
analytics, and a deterministic mempool/relay simulator with congestion-
triggered fee ordering.
"""

__version__ = "0.1.0"
