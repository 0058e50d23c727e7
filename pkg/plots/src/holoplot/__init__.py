"""Figures from holodrive experiment CSVs.

Four figure kinds, one per harness CSV schema:

- ``sphere-path``    (theta, phi) trajectory on the control sphere (path-trace)
- ``spectrum``       low-lying levels along a device sweep (tct-spectrum)
- ``transitions``    drive matrix elements along a sweep (tct-transitions)
- ``fidelity-vs-T``  gate infidelity against total loop time (gate runs)

Rendering never mutates its inputs and overwrites outputs atomically.
"""

__version__ = "0.1.0"

from .render import FIGURE_KINDS, PlotSpec, SchemaError, load_spec, render

__all__ = ["FIGURE_KINDS", "PlotSpec", "SchemaError", "load_spec", "render", "__version__"]
