"""Derive abstract machines and control-flow-graph generators from
small-step operational semantics."""
__version__ = "0.1.0"
