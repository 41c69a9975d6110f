"""Benchmark environments: exploration/cleanup, cooperative search, social navigation."""
