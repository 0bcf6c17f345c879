"""Distributed mask-driven speech enhancement testbed for simulated mic networks.

Modules
-------
signal_io   WAV and MSK1 mask file handling, TimeSignal container
stft        fixed 512/256 Hann analysis/synthesis
scenes      scene descriptors, placement validators, JSON round-trip
rooms       Sabine absorption, image-source RIRs, scene sampling/rendering
fixtures    deterministic synthetic speech-like and speech-shaped-noise sources
masks       IRM computation and mask providers (oracle / MSK1 files)
spatial     masked covariance estimation with local/distant mask policies
gevd        generalized eigendecomposition and SDW-MWF weights
pipeline    two-step compress/exchange/filter orchestration
evaluation  projection-based SIR/SAR metrics, selectors, CSV/JSON reports
layout      on-disk corpus conventions
cli         generate / enhance / evaluate entry points
"""

__version__ = "0.1.0"
