"""Input Compression Bound for infinite ensembles of infinite-width networks."""
