"""archon-worker: GNN training backend for the archon evaluation protocol."""

__version__ = "0.1.0"
