"""Two-sided characteristic Cauchy problems on a 1+1 Minkowski slab."""
__version__ = "0.1.0"
