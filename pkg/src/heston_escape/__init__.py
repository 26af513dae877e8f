"""
Heston Escape Package

Exact survival probabilities and mean escape times of the Heston
stochastic-volatility model out of a symmetric return interval, with a
Monte-Carlo oracle to check them.
"""

__version__ = '0.1.0'
