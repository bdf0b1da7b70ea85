"""Ensemble orchestration and the long-time diagnostics built on it."""
