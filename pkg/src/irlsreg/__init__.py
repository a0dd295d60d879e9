"""Sparse regularization by iteratively reweighted least squares."""
