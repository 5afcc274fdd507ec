"""Recursive-greedy engines."""
