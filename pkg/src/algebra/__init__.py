"""Exact algebra: Laurent scalars, symmetric functions, the loop algebra and its canonical basis."""
