"""Finite-field Hall algebras of cyclic quivers and of the projective line."""
