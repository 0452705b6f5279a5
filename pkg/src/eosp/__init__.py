"""Fairness-regularized semi-supervised node classification."""
