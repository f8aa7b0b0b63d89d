"""Positive-definite Hessian regions, critical sets and convex level curves of plane fields."""

__version__ = "0.1.0"
