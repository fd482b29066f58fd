"""Confusable-keyword-aware contrastive training and DET-based evaluation
for custom keyword spotting."""

__version__ = "0.1.0"
