"""Differentiable logic gate networks.

Train softmax-relaxed mixtures over the sixteen two-input Boolean gates with
gradient descent, discretize the trained network to a pure logic circuit, and
execute or compile that circuit with word-parallel bitwise inference.
"""

__version__ = "0.1.0"
