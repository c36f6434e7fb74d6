"""Exact verification engine for elliptic braid Lie algebras and KZB flatness."""

__version__ = "0.1.0"
