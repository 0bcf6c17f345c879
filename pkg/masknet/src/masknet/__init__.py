"""CRNN mask estimators for the wasnlab enhancement pipeline.

This package is deliberately coupled to wasnlab only through its documented
on-disk formats: it reads corpus WAVs, oracle MSK1 masks and compressed-signal
WAVs from runs, and it emits MSK1 files the pipeline's ``dir:`` mask provider
can consume. No wasnlab code is imported.
"""

__version__ = "0.1.0"
