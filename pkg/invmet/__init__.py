"""Invariant metric estimates on G_psi = {z in D^2 : Re z1 < psi(|z2|)} at p_delta = (-delta, 0)."""
