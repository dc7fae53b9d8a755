"""flowlab: exact min-cost-flow experiments on exponential gadget networks."""

__version__ = "0.1.0"
