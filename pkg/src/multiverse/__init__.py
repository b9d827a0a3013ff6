"""Multiverse: cross-lingual evidence retrieval and scoring for fake news
verification, with classifiers, an annotation-study backend, and
explanation reports."""

__version__ = "0.1.0"
