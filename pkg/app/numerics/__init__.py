"""Discretization, operators and time stepping on a uniform Cartesian grid."""
