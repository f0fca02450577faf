"""HTTP service wrapping the harness."""
