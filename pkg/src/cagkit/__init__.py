"""cagkit: coronary-angiography cine pipeline toolkit.

Extrema-based key-frame sampling, six-class laterality/key-frame gating
through pluggable predictors, leakage-safe bilingual corpus construction,
VLScore evaluation, and a physician review service.
"""

__version__ = "0.1.0"
