"""Rank invariants of multilinear forms and polynomials over finite fields."""
