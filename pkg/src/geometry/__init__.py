"""Combinatorics of star-shaped diagrams and weighted projective lines."""
