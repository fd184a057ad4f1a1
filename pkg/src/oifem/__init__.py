"""Nonlinear elliptic interface problems with Orlicz-growth laws."""
