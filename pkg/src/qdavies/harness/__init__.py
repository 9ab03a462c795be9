"""Config-driven disorder ensembles and their reports."""
