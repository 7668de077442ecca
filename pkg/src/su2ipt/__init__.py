"""SU(2) invariant perfect tensors: exact bridge-state algebra, master
equations, repartition transformations, and numerical certification."""

__version__ = "0.1.0"
