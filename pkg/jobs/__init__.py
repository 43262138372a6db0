"""Command-line jobs: simulation, file I/O, evaluation and plotting for dyntomo."""
