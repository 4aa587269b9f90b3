"""Numerical laboratory for Haar-measure encryption and its telegraphing attacks."""

from .attacks import AttackSpec, DecodingSets
from .estimator import ValueEstimate, confidence_interval, estimate
from .qecm import HaarScheme, decrypt_distribution, encrypt

__all__ = [
    "AttackSpec",
    "DecodingSets",
    "HaarScheme",
    "ValueEstimate",
    "confidence_interval",
    "decrypt_distribution",
    "encrypt",
    "estimate",
]
