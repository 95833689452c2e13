"""Corpus import and synthetic corpus generation."""
