"""
Cox Stop-Loss
=============

Stop-loss reinsurance pricing and expected shortfall on Cox-process
loss models, with independent simulation oracles.
"""

__version__ = "1.0.0"
__author__ = "Ali Bedirhan"
