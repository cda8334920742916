"""archon: knowledge-guided evolutionary architecture search for GNNs."""

__version__ = "0.1.0"
