"""GLS Toolkit computes Grand Lebesgue Space norms, Young-Fenchel tail bounds and maximal-operator constants."""

__version__ = '0.1.0'
