"""Bistable reaction-diffusion with a hostile strip: stationary profiles, PDE solver and threshold dynamics."""
