"""
Bayes Attrib Package
Exact Shapley and Weight-of-Evidence attributions for weighted naive Bayes classifiers
"""

__version__ = "1.0.0"
__author__ = "Bayes Attrib Team"
__description__ = "Closed-form Shapley explanations, WoE, oracles and agreement statistics for naive Bayes"
