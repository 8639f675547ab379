"""Multi-agent refactoring pipeline for Haskell codebases."""

__version__ = "0.1.0"
