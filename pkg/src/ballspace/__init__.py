"""Numerical toolkit for ball Banach function spaces, extrapolation and wavelet square functions."""
