"""Background workers."""

