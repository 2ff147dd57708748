"""Complete Lyapunov functions for semiflows, computed on a box grid.

The pipeline: parse a system, subdivide its domain into boxes, build the
sampled transition graph of the time-one map, find its strongly connected
components, assign Cantor-valued levels to the recurrent ones and lift the
resulting map function to the semiflow by averaging along orbits.
"""

__version__ = "0.1.0"
