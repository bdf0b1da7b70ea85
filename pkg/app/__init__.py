"""Weighted p-Laplacian evolution solver and long-time diagnostics."""
