"""Continuous problem data: coefficient profiles, source terms and structural checks."""
